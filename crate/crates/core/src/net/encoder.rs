use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{bail, Result};

/// Coordinate dimensionality of every network query: `(x, t2, ω1, ω3)`.
pub const COORD_DIM: usize = 4;

/// Input mapping applied to normalized coordinates before the MLP.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Identity,
    /// Random Fourier features `[cos(2πBv); sin(2πBv)]` with `B` of shape `(m, 4)`.
    FourierFeatures { b: Vec<f64>, m: usize },
}

impl Encoder {
    pub fn fourier(m: usize, sigma: f64, seed: u64) -> Result<Self> {
        if m == 0 || !(sigma > 0.0 && sigma.is_finite()) {
            bail!(Config, "fourier features need m > 0 and sigma > 0");
        }
        let normal = Normal::new(0.0, sigma).expect("valid sigma");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = (0..m * COORD_DIM).map(|_| normal.sample(&mut rng)).collect();
        Ok(Encoder::FourierFeatures { b, m })
    }

    pub fn output_width(&self) -> usize {
        match self {
            Encoder::Identity => COORD_DIM,
            Encoder::FourierFeatures { m, .. } => 2 * m,
        }
    }

    /// Encodes `n × 4` coordinates into `n × output_width` features.
    pub fn encode(&self, coords: &[f64]) -> Vec<f64> {
        match self {
            Encoder::Identity => coords.to_vec(),
            Encoder::FourierFeatures { b, m } => {
                let n = coords.len() / COORD_DIM;
                let mut out = vec![0.0; n * 2 * m];
                for (v, row) in coords.chunks_exact(COORD_DIM).zip(out.chunks_exact_mut(2 * m)) {
                    let (cos_part, sin_part) = row.split_at_mut(*m);
                    for (j, bj) in b.chunks_exact(COORD_DIM).enumerate() {
                        let proj: f64 = bj.iter().zip(v).map(|(p, q)| p * q).sum();
                        let phase = 2.0 * PI * proj;
                        cos_part[j] = phase.cos();
                        sin_part[j] = phase.sin();
                    }
                }
                out
            }
        }
    }
}
