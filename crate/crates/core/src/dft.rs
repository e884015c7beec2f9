//! Real-input DFT along the third cube axis, its inverse, and the adjoint of
//! the inverse.
//!
//! Convention: the forward transform is unscaled and the inverse carries `1/N`.
//! Transforms use direct summation against a precomputed twiddle table indexed
//! by `(k * n) mod N`, so odd lengths such as 251 work unchanged and every
//! fiber is summed in a fixed order.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::hypercube::{AxisGrid, Domain, HyperCube};

/// The `floor(N/2) + 1` non-redundant bins of a length-`N` real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpectrum {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub n_time: usize,
}

impl HalfSpectrum {
    pub fn zeros(n_time: usize) -> Self {
        let bins = bin_count(n_time);
        Self {
            re: vec![0.0; bins],
            im: vec![0.0; bins],
            n_time,
        }
    }

    pub fn bins(&self) -> usize {
        self.re.len()
    }

    /// Frequency-domain inner product `Σ re·re' + im·im'`.
    pub fn dot(&self, other: &HalfSpectrum) -> f64 {
        self.re.iter().zip(&other.re).map(|(a, b)| a * b).sum::<f64>()
            + self.im.iter().zip(&other.im).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[inline]
pub fn bin_count(n_time: usize) -> usize {
    n_time / 2 + 1
}

/// Bins whose imaginary part must vanish for a real signal.
pub fn hermitian_real_bins(n_time: usize) -> Vec<usize> {
    if n_time.is_multiple_of(2) && n_time > 1 {
        vec![0, n_time / 2]
    } else {
        vec![0]
    }
}

/// Precomputed twiddles for one transform length.
#[derive(Debug, Clone)]
pub struct RealDft {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RealDft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            bail!(Argument, "transform length must be >= 1");
        }
        let (cos, sin) = (0..n)
            .map(|m| match (4 * m) % n == 0 {
                // exact values on the quarter turns keep self-conjugate bins real
                true => [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][4 * m / n],
                false => {
                    let phase = 2.0 * PI * m as f64 / n as f64;
                    (phase.cos(), phase.sin())
                }
            })
            .unzip();
        Ok(Self { n, cos, sin })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bins(&self) -> usize {
        bin_count(self.n)
    }

    /// Weight of bin `k` in the inverse sum (1 for self-conjugate bins, 2 otherwise).
    #[inline]
    fn fold_weight(&self, k: usize) -> f64 {
        if k == 0 || (self.n.is_multiple_of(2) && k == self.n / 2) {
            1.0
        } else {
            2.0
        }
    }

    /// `X[k] = Σ s[n] exp(-2πi kn/N)` written into `re`/`im`.
    pub fn forward_into(&self, signal: &[f64], re: &mut [f64], im: &mut [f64]) {
        debug_assert_eq!(signal.len(), self.n);
        for k in 0..self.bins() {
            let (mut acc_re, mut acc_im) = (0.0, 0.0);
            let mut idx = 0usize;
            for &s in signal {
                acc_re += s * self.cos[idx];
                acc_im -= s * self.sin[idx];
                idx += k;
                if idx >= self.n {
                    idx -= self.n;
                }
            }
            re[k] = acc_re;
            im[k] = acc_im;
        }
    }

    /// Inverse transform. Imaginary parts of self-conjugate bins are ignored.
    pub fn inverse_into(&self, re: &[f64], im: &[f64], signal: &mut [f64]) {
        let scale = 1.0 / self.n as f64;
        for (t, out) in signal.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut idx = 0usize;
            for k in 0..self.bins() {
                let w = self.fold_weight(k);
                acc += w * (re[k] * self.cos[idx] - im[k] * self.sin[idx]);
                idx += t;
                if idx >= self.n {
                    idx -= self.n;
                }
            }
            *out = acc * scale;
        }
    }

    /// Adjoint of [`RealDft::inverse_into`] with respect to the real inner
    /// products on both sides.
    pub fn inverse_adjoint_into(&self, residual: &[f64], g_re: &mut [f64], g_im: &mut [f64]) {
        let scale = 1.0 / self.n as f64;
        for k in 0..self.bins() {
            let w = self.fold_weight(k) * scale;
            let (mut acc_re, mut acc_im) = (0.0, 0.0);
            let mut idx = 0usize;
            for &r in residual {
                acc_re += r * self.cos[idx];
                acc_im -= r * self.sin[idx];
                idx += k;
                if idx >= self.n {
                    idx -= self.n;
                }
            }
            g_re[k] = w * acc_re;
            g_im[k] = w * acc_im;
        }
    }

    pub fn forward(&self, signal: &[f64]) -> HalfSpectrum {
        let mut out = HalfSpectrum::zeros(self.n);
        self.forward_into(signal, &mut out.re, &mut out.im);
        out
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        bail!(Argument, "non-finite sample at index {i}");
    }
    Ok(())
}

fn check_hermitian(spectrum: &HalfSpectrum) -> Result<()> {
    let bins = bin_count(spectrum.n_time);
    if spectrum.re.len() != bins || spectrum.im.len() != bins {
        bail!(Argument, "expected {bins} bins for N = {}", spectrum.n_time);
    }
    for k in hermitian_real_bins(spectrum.n_time) {
        if spectrum.im[k] != 0.0 {
            bail!(Argument, "bin {k} must be real, imaginary part is {}", spectrum.im[k]);
        }
    }
    Ok(())
}

pub fn rfft_axis(signal: &[f64]) -> Result<HalfSpectrum> {
    check_finite(signal)?;
    Ok(RealDft::new(signal.len())?.forward(signal))
}

pub fn irfft_axis(spectrum: &HalfSpectrum) -> Result<Vec<f64>> {
    check_hermitian(spectrum)?;
    check_finite(&spectrum.re)?;
    check_finite(&spectrum.im)?;
    let plan = RealDft::new(spectrum.n_time)?;
    let mut out = vec![0.0; spectrum.n_time];
    plan.inverse_into(&spectrum.re, &spectrum.im, &mut out);
    Ok(out)
}

pub fn irfft_adjoint(residual: &[f64]) -> Result<HalfSpectrum> {
    check_finite(residual)?;
    let plan = RealDft::new(residual.len())?;
    let mut g = HalfSpectrum::zeros(residual.len());
    plan.inverse_adjoint_into(residual, &mut g.re, &mut g.im);
    Ok(g)
}

/// Evaluates the band-limited inverse at a fractional sample position `t`
/// (in units of the original sample spacing).
pub fn irfft_at(spectrum: &HalfSpectrum, t: f64) -> f64 {
    let n = spectrum.n_time as f64;
    let mut acc = 0.0;
    for k in 0..spectrum.bins() {
        let phase = 2.0 * PI * k as f64 * t / n;
        let self_conj = k == 0 || (spectrum.n_time.is_multiple_of(2) && k == spectrum.n_time / 2);
        if self_conj {
            acc += spectrum.re[k] * phase.cos();
        } else {
            acc += 2.0 * (spectrum.re[k] * phase.cos() - spectrum.im[k] * phase.sin());
        }
    }
    acc / n
}

/// Pump-frequency axis matching a coherence-time axis.
pub fn frequency_axis(t1: &AxisGrid) -> AxisGrid {
    AxisGrid {
        name: "w1".into(),
        unit: format!("1/{}", t1.unit),
        origin: 0.0,
        step: 1.0 / (t1.count as f64 * t1.step),
        count: bin_count(t1.count),
    }
}

/// Transforms every `(t2, x, ω3)` fiber of a time-domain cube.
pub fn rfft_cube(cube: &HyperCube) -> Result<HyperCube> {
    if cube.domain() != Domain::Time {
        bail!(Argument, "rfft_cube expects a time-domain cube");
    }
    let [nt, nx, n, nw] = cube.dims();
    let plan = RealDft::new(n)?;
    let bins = plan.bins();
    let mut axes = cube.axes().clone();
    axes[2] = frequency_axis(cube.a3_axis());
    let mut out = HyperCube::zeros(axes, Domain::Frequency, 2)?;
    let slab = nx * bins * nw * 2;
    out.data_mut()
        .par_chunks_mut(slab)
        .enumerate()
        .for_each(|(t, block)| {
            let mut fiber = vec![0.0; n];
            let mut re = vec![0.0; bins];
            let mut im = vec![0.0; bins];
            for x in 0..nx {
                for w in 0..nw {
                    for (a, f) in fiber.iter_mut().enumerate() {
                        *f = cube.get(t, x, a, w, 0);
                    }
                    plan.forward_into(&fiber, &mut re, &mut im);
                    for k in 0..bins {
                        let off = ((x * bins + k) * nw + w) * 2;
                        block[off] = re[k];
                        block[off + 1] = im[k];
                    }
                }
            }
        });
    debug_assert_eq!(out.dims()[0], nt);
    Ok(out)
}

/// Inverse of [`rfft_cube`] onto the coherence-time axis `t1`.
///
/// A one-channel cube is treated as purely real spectra. Imaginary parts of
/// self-conjugate bins are dropped.
pub fn irfft_cube(cube: &HyperCube, t1: &AxisGrid) -> Result<HyperCube> {
    if cube.domain() != Domain::Frequency {
        bail!(Argument, "irfft_cube expects a frequency-domain cube");
    }
    let [_, nx, bins, nw] = cube.dims();
    if bin_count(t1.count) != bins {
        bail!(Shape, "{} bins cannot come from a {}-sample t1 axis", bins, t1.count);
    }
    let plan = RealDft::new(t1.count)?;
    let n = t1.count;
    let mut axes = cube.axes().clone();
    axes[2] = t1.clone();
    let mut out = HyperCube::zeros(axes, Domain::Time, 1)?;
    let channels = cube.channels();
    out.data_mut()
        .par_chunks_mut(nx * n * nw)
        .enumerate()
        .for_each(|(t, block)| {
            let mut re = vec![0.0; bins];
            let mut im = vec![0.0; bins];
            let mut signal = vec![0.0; n];
            for x in 0..nx {
                for w in 0..nw {
                    for k in 0..bins {
                        re[k] = cube.get(t, x, k, w, 0);
                        im[k] = if channels == 2 { cube.get(t, x, k, w, 1) } else { 0.0 };
                    }
                    plan.inverse_into(&re, &im, &mut signal);
                    for (a, &s) in signal.iter().enumerate() {
                        block[(x * n + a) * nw + w] = s;
                    }
                }
            }
        });
    Ok(out)
}
