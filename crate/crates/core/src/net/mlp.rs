//! Batched forward and reverse-mode passes of the ReLU MLP.
//!
//! Batches are split into fixed-size row chunks. Chunks may run on different
//! threads, but chunk boundaries never depend on the thread count and chunk
//! gradients are summed in chunk order, so results are bit-identical for any
//! pool size.

use matrixmultiply::dgemm;
use rayon::prelude::*;

use super::encoder::{Encoder, COORD_DIM};
use super::params::MlpParams;
use crate::error::{bail, Result};

/// Rows per independently processed chunk.
pub const CHUNK_ROWS: usize = 256;

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    chunks: Vec<ChunkTape>,
    rows: usize,
}

#[derive(Debug, Clone)]
struct ChunkTape {
    rows: usize,
    /// `acts[0]` is the encoded input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn rows(&self) -> usize {
        self.rows
    }
}

pub fn check_coords(coords: &[f64]) -> Result<usize> {
    if !coords.len().is_multiple_of(COORD_DIM) {
        bail!(Shape, "coordinate buffer length {} is not a multiple of {COORD_DIM}", coords.len());
    }
    if let Some(pos) = coords.iter().position(|v| !(0.0..=1.0).contains(v)) {
        bail!(
            Argument,
            "coordinate {} of row {} is {}, outside [0, 1]",
            pos % COORD_DIM,
            pos / COORD_DIM,
            coords[pos]
        );
    }
    Ok(coords.len() / COORD_DIM)
}

/// `out[n × rows] = input[n × cols] · Wᵀ + b`, followed by ReLU if `relu`.
fn dense_forward(w: &[f64], b: &[f64], rows: usize, cols: usize, input: &[f64], n: usize, relu: bool) -> Vec<f64> {
    let mut out = vec![0.0; n * rows];
    for row in out.chunks_exact_mut(rows) {
        row.copy_from_slice(b);
    }
    // SAFETY: all buffers are sized for the stated dimensions and strides.
    unsafe {
        dgemm(
            n,
            cols,
            rows,
            1.0,
            input.as_ptr(),
            cols as isize,
            1,
            w.as_ptr(),
            1,
            cols as isize,
            1.0,
            out.as_mut_ptr(),
            rows as isize,
            1,
        );
    }
    if relu {
        out.iter_mut().for_each(|v| {
            if *v < 0.0 {
                *v = 0.0
            }
        });
    }
    out
}

fn forward_chunk(params: &MlpParams, encoded: Vec<f64>, rows: usize) -> ChunkTape {
    let layers = params.layers();
    let mut acts = Vec::with_capacity(layers + 1);
    acts.push(encoded);
    for l in 0..layers {
        let (out_w, in_w) = params.layer_shape(l);
        let next = dense_forward(params.weight(l), params.bias(l), out_w, in_w, &acts[l], rows, l + 1 < layers);
        acts.push(next);
    }
    ChunkTape { rows, acts }
}

fn backward_chunk(params: &MlpParams, tape: &ChunkTape, upstream: &[f64]) -> MlpParams {
    let mut grads = params.zeros_like();
    let layers = params.layers();
    let n = tape.rows;
    let mut delta = upstream.to_vec();
    for l in (0..layers).rev() {
        let (out_w, in_w) = params.layer_shape(l);
        let input = &tape.acts[l];
        {
            let (gw, gb) = grads.layer_mut(l);
            // dW = δᵀ · input
            unsafe {
                dgemm(
                    out_w,
                    n,
                    in_w,
                    1.0,
                    delta.as_ptr(),
                    1,
                    out_w as isize,
                    input.as_ptr(),
                    in_w as isize,
                    1,
                    0.0,
                    gw.as_mut_ptr(),
                    in_w as isize,
                    1,
                );
            }
            for row in delta.chunks_exact(out_w) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
        }
        if l == 0 {
            break;
        }
        // δ_prev = (δ · W) ⊙ relu'(input); relu'(0) = 0
        let mut prev = vec![0.0; n * in_w];
        unsafe {
            dgemm(
                n,
                out_w,
                in_w,
                1.0,
                delta.as_ptr(),
                out_w as isize,
                1,
                params.weight(l).as_ptr(),
                in_w as isize,
                1,
                0.0,
                prev.as_mut_ptr(),
                in_w as isize,
                1,
            );
        }
        for (p, &a) in prev.iter_mut().zip(input.iter()) {
            if a <= 0.0 {
                *p = 0.0;
            }
        }
        delta = prev;
    }
    grads
}

/// Forward pass over `n × 4` normalized coordinates, keeping the activations.
pub fn forward_train(params: &MlpParams, encoder: &Encoder, coords: &[f64]) -> Result<(Vec<f64>, Tape)> {
    let n = check_coords(coords)?;
    if encoder.output_width() != params.input_width() {
        bail!(
            Shape,
            "encoder emits {} features but the network expects {}",
            encoder.output_width(),
            params.input_width()
        );
    }
    let chunks: Vec<ChunkTape> = coords
        .par_chunks(CHUNK_ROWS * COORD_DIM)
        .map(|c| forward_chunk(params, encoder.encode(c), c.len() / COORD_DIM))
        .collect();
    let c = params.output_width();
    let mut out = Vec::with_capacity(n * c);
    for chunk in &chunks {
        out.extend_from_slice(chunk.acts.last().expect("output layer"));
    }
    Ok((out, Tape { chunks, rows: n }))
}

/// Network outputs (`n × c`, row-major) for `n × 4` normalized coordinates.
pub fn forward(params: &MlpParams, encoder: &Encoder, coords: &[f64]) -> Result<Vec<f64>> {
    forward_train(params, encoder, coords).map(|(out, _)| out)
}

/// Parameter gradients of `Σ upstream · output` for the batch recorded in `tape`.
pub fn backward_tape(params: &MlpParams, tape: &Tape, upstream: &[f64]) -> Result<MlpParams> {
    let c = params.output_width();
    if upstream.len() != tape.rows * c {
        bail!(Argument, "upstream gradient has {} values, expected {}", upstream.len(), tape.rows * c);
    }
    let mut offsets = Vec::with_capacity(tape.chunks.len());
    let mut off = 0;
    for chunk in &tape.chunks {
        offsets.push(off);
        off += chunk.rows * c;
    }
    let partial: Vec<MlpParams> = tape
        .chunks
        .par_iter()
        .zip(offsets.par_iter())
        .map(|(chunk, &o)| backward_chunk(params, chunk, &upstream[o..o + chunk.rows * c]))
        .collect();
    let mut total = params.zeros_like();
    for g in &partial {
        total.add_assign(g);
    }
    Ok(total)
}

/// Recomputes the forward pass and returns parameter gradients.
pub fn backward(params: &MlpParams, encoder: &Encoder, coords: &[f64], upstream: &[f64]) -> Result<MlpParams> {
    let (_, tape) = forward_train(params, encoder, coords)?;
    backward_tape(params, &tape, upstream)
}
