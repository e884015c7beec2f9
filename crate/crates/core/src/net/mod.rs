//! Coordinate MLP (`4 → 64 → 64 → 64 → 64 → c`, ReLU hidden layers, linear
//! output), its exact reverse-mode gradients, the optional Fourier-feature
//! encoder, and Adam.

mod adam;
mod checkpoint;
mod encoder;
mod mlp;
mod params;

pub use adam::{adam_step, OptState, DEFAULT_BETA1, DEFAULT_BETA2};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use encoder::{Encoder, COORD_DIM};
pub use mlp::{backward, backward_tape, check_coords, forward, forward_train, Tape, CHUNK_ROWS};
pub use params::{MlpParams, HIDDEN_WIDTHS};

use crate::error::{bail, Result};

/// Standard network for `channels` outputs behind `encoder`.
pub fn init_params(seed: u64, channels: usize, encoder: &Encoder) -> Result<MlpParams> {
    if !(channels == 1 || channels == 2) {
        bail!(Config, "output channels must be 1 or 2, got {channels}");
    }
    MlpParams::init(&MlpParams::standard_dims(encoder.output_width(), channels), seed)
}
