use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};

/// Hidden-layer widths of the reconstruction network.
pub const HIDDEN_WIDTHS: [usize; 4] = [64; 4];

/// Weights and biases of a fully connected ReLU network, stored flat.
///
/// Layer `l` maps `dims[l]` inputs to `dims[l + 1]` outputs; its row-major
/// weight matrix (`dims[l + 1] × dims[l]`) is followed by its bias vector.
/// The same type doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            bail!(Shape, "network needs at least an input and an output width, got {dims:?}");
        }
        let len = dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// `input → 64 → 64 → 64 → 64 → output` layer widths.
    pub fn standard_dims(input: usize, output: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend_from_slice(&HIDDEN_WIDTHS);
        dims.push(output);
        dims
    }

    /// Fan-in scaled uniform weights in `±√(6 / fan_in)`, zero biases.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        let mut params = Self::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 0..params.layers() {
            let bound = (6.0 / params.dims[l] as f64).sqrt();
            for w in params.weight_mut(l) {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(params)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.dims[0]
    }

    pub fn output_width(&self) -> usize {
        *self.dims.last().expect("non-empty dims")
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn layer_offset(&self, l: usize) -> usize {
        self.dims[..=l].windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// `(rows, cols)` of layer `l`'s weight matrix.
    pub fn layer_shape(&self, l: usize) -> (usize, usize) {
        (self.dims[l + 1], self.dims[l])
    }

    pub fn weight(&self, l: usize) -> &[f64] {
        let off = self.layer_offset(l);
        let (rows, cols) = self.layer_shape(l);
        &self.data[off..off + rows * cols]
    }

    pub fn weight_mut(&mut self, l: usize) -> &mut [f64] {
        let off = self.layer_offset(l);
        let (rows, cols) = self.layer_shape(l);
        &mut self.data[off..off + rows * cols]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let (rows, cols) = self.layer_shape(l);
        let off = self.layer_offset(l) + rows * cols;
        &self.data[off..off + rows]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let (rows, cols) = self.layer_shape(l);
        let off = self.layer_offset(l) + rows * cols;
        &mut self.data[off..off + rows]
    }

    /// Mutable weight and bias slices of layer `l`.
    pub(crate) fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let off = self.layer_offset(l);
        let (rows, cols) = self.layer_shape(l);
        let (w, rest) = self.data[off..].split_at_mut(rows * cols);
        (w, &mut rest[..rows])
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dims == other.dims
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
