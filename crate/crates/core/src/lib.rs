//! Reconstruction of dense 4D two-dimensional infrared hypercubes from sparse,
//! noisy acquisitions.
//!
//! A coordinate MLP is fitted to the sampled part of a `(t2, x, ω1, ω3)` cube.
//! Slowly varying data is fitted directly in the frequency domain; rapidly
//! oscillating coherence-time data is fitted through an inverse real Fourier
//! transform so the loss is evaluated only at measured `t1` samples. On top of
//! the fit sits a loss-driven adaptive sampler along `t2`.

pub mod adaptive;
pub mod dft;
pub mod error;
pub mod evalmetrics;
pub mod hypercube;
pub mod loss;
pub mod net;
pub mod sampling;
pub mod synth;
pub mod train;
pub mod trend;

pub use error::{Error, Result};
pub use hypercube::{AxisGrid, Domain, HyperCube};
