//! Training objective: data-fidelity terms in the frequency and time domains,
//! the box-projected spatial profile with its moments, and the moment,
//! monotonicity and smoothness penalties, each with exact gradients.

use std::collections::VecDeque;

use log::warn;
use rayon::prelude::*;

use crate::dft::{HalfSpectrum, RealDft};
use crate::error::{bail, Result};
use crate::hypercube::{Domain, HyperCube, Profile2D, SpectralBox};
use crate::net::{backward_tape, forward_train, Encoder, MlpParams, COORD_DIM};

/// Weights of the composite objective and the hinge parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub mse: f64,
    pub moment: f64,
    pub mono: f64,
    pub smooth: f64,
    /// Monotonicity margin.
    pub delta: f64,
    /// Curvature threshold.
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            mse: 1.0,
            moment: 0.1,
            mono: 0.01,
            smooth: 0.01,
            delta: 0.0,
            gamma: 0.0,
        }
    }
}

impl LossWeights {
    pub fn mse_only() -> Self {
        Self {
            moment: 0.0,
            mono: 0.0,
            smooth: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("mse", self.mse),
            ("moment", self.moment),
            ("mono", self.mono),
            ("smooth", self.smooth),
            ("delta", self.delta),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                bail!(Config, "loss weight {name} must be finite and non-negative, got {w}");
            }
        }
        if !self.gamma.is_finite() {
            bail!(Config, "curvature threshold gamma must be finite");
        }
        if self.mse == 0.0 && self.moment == 0.0 && self.mono == 0.0 && self.smooth == 0.0 {
            bail!(Config, "all loss weights are zero");
        }
        Ok(())
    }

    /// Whether any term needs the predicted spatial profile.
    pub fn uses_profile(&self) -> bool {
        self.moment > 0.0 || self.mono > 0.0 || self.smooth > 0.0
    }
}

/// A scalar loss and its gradient with respect to the quantity it was fed.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Bounding box of the dominant peak of an `(ω1, ω3)` magnitude plane.
///
/// `plane` is row-major `n_w1 × n_w3` and holds non-negative magnitudes.
pub fn find_peak_box_plane(plane: &[f64], n_w1: usize, n_w3: usize) -> Result<SpectralBox> {
    if plane.len() != n_w1 * n_w3 || plane.is_empty() {
        bail!(Shape, "plane has {} values, expected {n_w1} x {n_w3}", plane.len());
    }
    if plane.iter().any(|v| !v.is_finite() || *v < 0.0) {
        bail!(Argument, "magnitude plane must be finite and non-negative");
    }
    let mut peak = 0usize;
    for (i, &v) in plane.iter().enumerate() {
        if v > plane[peak] {
            peak = i;
        }
    }
    let top = plane[peak];
    if top == 0.0 {
        bail!(Degenerate, "cannot locate a peak in an all-zero plane");
    }
    let half = top / 2.0;
    let mut seen = vec![false; plane.len()];
    let mut queue = VecDeque::from([peak]);
    seen[peak] = true;
    let (mut lo1, mut hi1, mut lo3, mut hi3) = (peak / n_w3, peak / n_w3, peak % n_w3, peak % n_w3);
    while let Some(i) = queue.pop_front() {
        let (a, b) = (i / n_w3, i % n_w3);
        lo1 = lo1.min(a);
        hi1 = hi1.max(a);
        lo3 = lo3.min(b);
        hi3 = hi3.max(b);
        let mut visit = |a: usize, b: usize| {
            let j = a * n_w3 + b;
            if !seen[j] && plane[j] >= half {
                seen[j] = true;
                queue.push_back(j);
            }
        };
        if a > 0 {
            visit(a - 1, b);
        }
        if a + 1 < n_w1 {
            visit(a + 1, b);
        }
        if b > 0 {
            visit(a, b - 1);
        }
        if b + 1 < n_w3 {
            visit(a, b + 1);
        }
    }
    Ok(SpectralBox {
        w1: lo1..hi1 + 1,
        w3: lo3..hi3 + 1,
    })
}

/// Half-maximum box around the peak magnitude of channel 0 averaged over `(t2, x)`.
pub fn find_peak_box(cube: &HyperCube) -> Result<SpectralBox> {
    if cube.domain() != Domain::Frequency {
        bail!(Argument, "peak search needs a frequency-domain cube");
    }
    let [nt, nx, nw1, nw3] = cube.dims();
    let mut plane = vec![0.0; nw1 * nw3];
    for t in 0..nt {
        for x in 0..nx {
            for w1 in 0..nw1 {
                for w3 in 0..nw3 {
                    plane[w1 * nw3 + w3] += cube.get(t, x, w1, w3, 0);
                }
            }
        }
    }
    let norm = 1.0 / (nt * nx) as f64;
    plane.iter_mut().for_each(|v| *v = (*v * norm).abs());
    find_peak_box_plane(&plane, nw1, nw3)
}

/// Per-column mean and standard deviation of a profile treated as a
/// distribution over `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `false` where the column has (nearly) cancelling mass and the moments
    /// are undefined.
    pub valid: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
struct ColumnMoments {
    sum: f64,
    mu: f64,
    e2: f64,
    sigma: f64,
}

/// A column counts as a distribution only when its net mass is at least this
/// fraction of its absolute mass; below that the moments are unbounded.
pub const MIN_NET_MASS: f64 = 0.5;

fn column_moments(m: &[f64], x: &[f64]) -> Option<ColumnMoments> {
    let sum: f64 = m.iter().sum();
    let scale: f64 = m.iter().map(|v| v.abs()).sum();
    if scale == 0.0 || sum.abs() < MIN_NET_MASS * scale {
        return None;
    }
    let mu = m.iter().zip(x).map(|(v, xi)| v * xi).sum::<f64>() / sum;
    let e2 = m.iter().zip(x).map(|(v, xi)| v * xi * xi).sum::<f64>() / sum;
    let sigma = (e2 - mu * mu).max(0.0).sqrt();
    Some(ColumnMoments { sum, mu, e2, sigma })
}

/// Gradients of `μ` and `σ` of one column with respect to its entries.
fn column_moment_grads(m: &ColumnMoments, x: &[f64], dmu: &mut [f64], dsigma: &mut [f64]) {
    for (j, &xj) in x.iter().enumerate() {
        let d_mu = (xj - m.mu) / m.sum;
        dmu[j] = d_mu;
        let d_var = (xj * xj - m.e2 - 2.0 * m.mu * (xj - m.mu)) / m.sum;
        dsigma[j] = if m.sigma > 1e-12 { d_var / (2.0 * m.sigma) } else { 0.0 };
    }
}

/// Moments of every `t2` column of `m` at spatial coordinates `x`.
pub fn profile_moments(m: &Profile2D, x: &[f64]) -> Result<Moments> {
    if x.len() != m.n_x() {
        bail!(Shape, "{} x coordinates for a profile with {} rows", x.len(), m.n_x());
    }
    let mut out = Moments {
        mu: vec![0.0; m.n_t2()],
        sigma: vec![0.0; m.n_t2()],
        valid: vec![false; m.n_t2()],
    };
    for t in 0..m.n_t2() {
        match column_moments(m.column(t), x) {
            Some(c) => {
                out.mu[t] = c.mu;
                out.sigma[t] = c.sigma;
                out.valid[t] = true;
            }
            None => warn!("profile column {t} has zero mass; moments undefined"),
        }
    }
    Ok(out)
}

/// Mean squared error over matching samples; gradient with respect to `pred`.
pub fn loss_mse_slow(pred: &[f64], meas: &[f64]) -> Result<LossTerm> {
    if pred.len() != meas.len() {
        bail!(Shape, "{} predictions for {} measurements", pred.len(), meas.len());
    }
    if pred.is_empty() {
        bail!(Argument, "no sampled coordinates");
    }
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(meas)
        .map(|(p, s)| {
            let r = p - s;
            value += r * r;
            2.0 * r / n
        })
        .collect();
    Ok(LossTerm { value: value / n, grad })
}

/// Time-domain MSE of predicted half-spectra.
///
/// Each spectrum is inverted along `t1`; the residual is taken only at
/// `t1_indices`, against `meas` laid out as `spectra.len() × t1_indices.len()`.
/// Returns the value and the gradient with respect to every spectrum.
pub fn loss_mse_fast(
    spectra: &[HalfSpectrum],
    meas: &[f64],
    t1_indices: &[usize],
) -> Result<(f64, Vec<HalfSpectrum>)> {
    let Some(first) = spectra.first() else {
        bail!(Argument, "no spectra supplied");
    };
    if t1_indices.is_empty() {
        bail!(Argument, "empty t1 mask");
    }
    let n = first.n_time;
    if let Some(bad) = t1_indices.iter().find(|&&j| j >= n) {
        bail!(Argument, "t1 index {bad} outside a {n}-point axis");
    }
    if meas.len() != spectra.len() * t1_indices.len() {
        bail!(Shape, "{} measured values for {} x {} samples", meas.len(), spectra.len(), t1_indices.len());
    }
    let plan = RealDft::new(n)?;
    let count = (spectra.len() * t1_indices.len()) as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(spectra.len());
    let mut signal = vec![0.0; n];
    let mut residual = vec![0.0; n];
    for (spec, s) in spectra.iter().zip(meas.chunks_exact(t1_indices.len())) {
        if spec.n_time != n || spec.re.len() != plan.bins() || spec.im.len() != plan.bins() {
            bail!(Shape, "spectra disagree on the transform length");
        }
        if spec.im[0] != 0.0 || (n % 2 == 0 && spec.im[n / 2] != 0.0) {
            bail!(Argument, "imaginary part must vanish at the Hermitian-real bins");
        }
        plan.inverse_into(&spec.re, &spec.im, &mut signal);
        residual.iter_mut().for_each(|r| *r = 0.0);
        for (&j, &v) in t1_indices.iter().zip(s) {
            let r = signal[j] - v;
            value += r * r;
            residual[j] = 2.0 * r / count;
        }
        let mut g = HalfSpectrum::zeros(n);
        plan.inverse_adjoint_into(&residual, &mut g.re, &mut g.im);
        grads.push(g);
    }
    Ok((value / count, grads))
}

/// Moment-matching loss between a predicted and a reference profile.
///
/// Sums, over columns, the squared differences of the means and standard
/// deviations plus the squared ℓ2 distance of the raw columns. Columns with a
/// degenerate reference are skipped entirely; a degenerate predicted column
/// contributes only its ℓ2 term.
pub fn loss_moment(pred: &Profile2D, reference: &Profile2D, x: &[f64]) -> Result<LossTerm> {
    if pred.shape() != reference.shape() {
        bail!(Shape, "profile shapes {:?} and {:?} differ", pred.shape(), reference.shape());
    }
    if x.len() != pred.n_x() {
        bail!(Shape, "{} x coordinates for a profile with {} rows", x.len(), pred.n_x());
    }
    let nx = pred.n_x();
    let mut value = 0.0;
    let mut grad = vec![0.0; pred.data().len()];
    let mut dmu = vec![0.0; nx];
    let mut dsigma = vec![0.0; nx];
    for t in 0..pred.n_t2() {
        let (p, r) = (pred.column(t), reference.column(t));
        let Some(rm) = column_moments(r, x) else {
            warn!("reference profile column {t} has zero mass; skipped");
            continue;
        };
        let g = &mut grad[t * nx..(t + 1) * nx];
        for j in 0..nx {
            let d = p[j] - r[j];
            value += d * d;
            g[j] += 2.0 * d;
        }
        if let Some(pm) = column_moments(p, x) {
            let (e_mu, e_sigma) = (pm.mu - rm.mu, pm.sigma - rm.sigma);
            value += e_mu * e_mu + e_sigma * e_sigma;
            column_moment_grads(&pm, x, &mut dmu, &mut dsigma);
            for j in 0..nx {
                g[j] += 2.0 * e_mu * dmu[j] + 2.0 * e_sigma * dsigma[j];
            }
        }
    }
    Ok(LossTerm { value, grad })
}

/// Mean hinge penalty on decreases of `sigma` by more than `-delta`.
pub fn loss_mono(sigma: &[f64], delta: f64) -> Result<LossTerm> {
    if sigma.len() < 2 {
        bail!(Argument, "monotonicity needs at least two samples, got {}", sigma.len());
    }
    let k = (sigma.len() - 1) as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; sigma.len()];
    for i in 0..sigma.len() - 1 {
        let h = delta - (sigma[i + 1] - sigma[i]);
        if h > 0.0 {
            value += h;
            grad[i] += 1.0 / k;
            grad[i + 1] -= 1.0 / k;
        }
    }
    Ok(LossTerm { value: value / k, grad })
}

/// Mean hinge penalty on second differences of `sigma` above `gamma`.
pub fn loss_smooth(sigma: &[f64], gamma: f64) -> Result<LossTerm> {
    if sigma.len() < 3 {
        bail!(Argument, "smoothness needs at least three samples, got {}", sigma.len());
    }
    let k = (sigma.len() - 2) as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; sigma.len()];
    for i in 0..sigma.len() - 2 {
        let h = sigma[i + 2] - 2.0 * sigma[i + 1] + sigma[i] - gamma;
        if h > 0.0 {
            value += h;
            grad[i] += 1.0 / k;
            grad[i + 1] -= 2.0 / k;
            grad[i + 2] += 1.0 / k;
        }
    }
    Ok(LossTerm { value: value / k, grad })
}

/// Values of the individual objective terms (unweighted) and their weighted sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub mse: f64,
    pub moment: f64,
    pub mono: f64,
    pub smooth: f64,
}

/// Profile-based terms evaluated on a predicted profile.
///
/// Returns the breakdown (without the MSE term) and the gradient of the
/// weighted sum with respect to the profile entries.
pub fn profile_terms(
    pred: &Profile2D,
    reference: Option<&Profile2D>,
    x: &[f64],
    weights: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let nx = pred.n_x();
    let mut out = LossBreakdown::default();
    let mut grad = vec![0.0; pred.data().len()];
    if weights.moment > 0.0 {
        if let Some(r) = reference {
            let term = loss_moment(pred, r, x)?;
            out.moment = term.value;
            out.total += weights.moment * term.value;
            grad.iter_mut().zip(&term.grad).for_each(|(g, d)| *g += weights.moment * d);
        }
    }
    if weights.mono > 0.0 || weights.smooth > 0.0 {
        let mut cols = Vec::new();
        let mut sigma = Vec::new();
        for t in 0..pred.n_t2() {
            if let Some(c) = column_moments(pred.column(t), x) {
                cols.push((t, c));
                sigma.push(c.sigma);
            }
        }
        let mut dsig = vec![0.0; sigma.len()];
        if weights.mono > 0.0 && sigma.len() >= 2 {
            let term = loss_mono(&sigma, weights.delta)?;
            out.mono = term.value;
            out.total += weights.mono * term.value;
            dsig.iter_mut().zip(&term.grad).for_each(|(g, d)| *g += weights.mono * d);
        }
        if weights.smooth > 0.0 && sigma.len() >= 3 {
            let term = loss_smooth(&sigma, weights.gamma)?;
            out.smooth = term.value;
            out.total += weights.smooth * term.value;
            dsig.iter_mut().zip(&term.grad).for_each(|(g, d)| *g += weights.smooth * d);
        }
        let mut dmu = vec![0.0; nx];
        let mut ds = vec![0.0; nx];
        for ((t, c), &w) in cols.iter().zip(&dsig) {
            if w == 0.0 {
                continue;
            }
            column_moment_grads(c, x, &mut dmu, &mut ds);
            for j in 0..nx {
                grad[t * nx + j] += w * ds[j];
            }
        }
    }
    Ok((out, grad))
}

/// Which data-fidelity term drives the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Fidelity {
    /// One output channel fit directly to frequency-domain targets.
    Slow { coords: Vec<f64>, targets: Vec<f64> },
    /// Two output channels (real, imaginary) per `ω1` bin, compared with
    /// time-domain samples after the inverse transform. Targets are in units
    /// of the unnormalized inverse sum, `n_time` times the inverse transform.
    Fast {
        /// Per fiber: the `(x, t2, ω3)` normalized coordinates.
        fibers: Vec<[f64; 3]>,
        n_time: usize,
        t1_indices: Vec<usize>,
        /// `fibers.len() × t1_indices.len()` measured values.
        targets: Vec<f64>,
    },
}

/// The projected-profile part of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    /// Normalized spatial coordinates, one per profile row.
    pub x: Vec<f64>,
    /// Normalized `t2` coordinates of the profile columns, chronological.
    pub t2: Vec<f64>,
    /// Normalized `ω1` coordinates of the box.
    pub w1: Vec<f64>,
    /// Normalized `ω3` coordinates of the box.
    pub w3: Vec<f64>,
    pub reference: Option<Profile2D>,
}

impl ProfileSpec {
    fn box_len(&self) -> usize {
        self.w1.len() * self.w3.len()
    }

    /// Coordinates of every box point, ordered `(t2, x, ω1, ω3)`.
    fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.t2.len() * self.x.len() * self.box_len() * COORD_DIM);
        for &t in &self.t2 {
            for &x in &self.x {
                for &a in &self.w1 {
                    for &b in &self.w3 {
                        out.extend_from_slice(&[x, t, a, b]);
                    }
                }
            }
        }
        out
    }
}

/// A complete training objective over normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub fidelity: Fidelity,
    pub profile: Option<ProfileSpec>,
    pub weights: LossWeights,
}

/// Subset of the data term to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum Batch<'a> {
    All,
    /// Sample rows (slow) or fiber indices (fast).
    Rows(&'a [usize]),
}

/// Network input order: `(x, t2, ω1, ω3)`.
fn coord(x: f64, t2: f64, w1: f64, w3: f64) -> [f64; 4] {
    [x, t2, w1, w3]
}

impl Objective {
    pub fn channels(&self) -> usize {
        match self.fidelity {
            Fidelity::Slow { .. } => 1,
            Fidelity::Fast { .. } => 2,
        }
    }

    /// Number of selectable batch units (samples or fibers).
    pub fn units(&self) -> usize {
        match &self.fidelity {
            Fidelity::Slow { targets, .. } => targets.len(),
            Fidelity::Fast { fibers, .. } => fibers.len(),
        }
    }

    fn rows<'a>(&self, batch: &'a Batch<'a>) -> Result<Option<&'a [usize]>> {
        match batch {
            Batch::All => Ok(None),
            Batch::Rows(r) => {
                if r.is_empty() {
                    bail!(Argument, "empty batch");
                }
                if let Some(bad) = r.iter().find(|&&i| i >= self.units()) {
                    bail!(Argument, "batch index {bad} out of range");
                }
                Ok(Some(r))
            }
        }
    }

    fn data_term(&self, params: &MlpParams, enc: &Encoder, batch: &Batch) -> Result<(f64, MlpParams)> {
        let rows = self.rows(batch)?;
        match &self.fidelity {
            Fidelity::Slow { coords, targets } => {
                let (c, t): (Vec<f64>, Vec<f64>) = match rows {
                    None => (coords.clone(), targets.clone()),
                    Some(r) => (
                        r.iter().flat_map(|&i| coords[i * COORD_DIM..(i + 1) * COORD_DIM].iter().copied()).collect(),
                        r.iter().map(|&i| targets[i]).collect(),
                    ),
                };
                let (out, tape) = forward_train(params, enc, &c)?;
                let term = loss_mse_slow(&out, &t)?;
                let g = backward_tape(params, &tape, &term.grad)?;
                Ok((term.value, g))
            }
            Fidelity::Fast {
                fibers,
                n_time,
                t1_indices,
                targets,
            } => {
                let sel: Vec<usize> = match rows {
                    None => (0..fibers.len()).collect(),
                    Some(r) => r.to_vec(),
                };
                let bins = crate::dft::bin_count(*n_time);
                let mut c = Vec::with_capacity(sel.len() * bins * COORD_DIM);
                for &f in &sel {
                    let [x, t2, w3] = fibers[f];
                    for b in 0..bins {
                        c.extend_from_slice(&coord(x, t2, crate::sampling::normalize_index(b, bins), w3));
                    }
                }
                let (out, tape) = forward_train(params, enc, &c)?;
                let gain = *n_time as f64;
                let scaled: Vec<f64> = out.iter().map(|v| v * gain).collect();
                let spectra = spectra_from_outputs(&scaled, *n_time, sel.len());
                let k = t1_indices.len();
                let meas: Vec<f64> = sel.iter().flat_map(|&f| targets[f * k..(f + 1) * k].iter().copied()).collect();
                let (value, grads) = loss_mse_fast(&spectra, &meas, t1_indices)?;
                let mut upstream = vec![0.0; out.len()];
                for (f, g) in grads.iter().enumerate() {
                    for b in 0..bins {
                        upstream[(f * bins + b) * 2] = g.re[b] * gain;
                        upstream[(f * bins + b) * 2 + 1] = g.im[b] * gain;
                    }
                }
                zero_hermitian_imag(&mut upstream, *n_time, sel.len());
                let g = backward_tape(params, &tape, &upstream)?;
                Ok((value, g))
            }
        }
    }

    /// Mean squared residual of each batch unit (sample or fiber) under `params`.
    pub fn unit_residuals(&self, params: &MlpParams, enc: &Encoder) -> Result<Vec<f64>> {
        match &self.fidelity {
            Fidelity::Slow { coords, targets } => {
                let out = crate::net::forward(params, enc, coords)?;
                Ok(out.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).collect())
            }
            Fidelity::Fast {
                fibers,
                n_time,
                t1_indices,
                targets,
            } => {
                let bins = crate::dft::bin_count(*n_time);
                let mut c = Vec::with_capacity(fibers.len() * bins * COORD_DIM);
                for &[x, t2, w3] in fibers {
                    for b in 0..bins {
                        c.extend_from_slice(&coord(x, t2, crate::sampling::normalize_index(b, bins), w3));
                    }
                }
                let out = crate::net::forward(params, enc, &c)?;
                let gain = *n_time as f64;
                let spectra = spectra_from_outputs(&out, *n_time, fibers.len());
                let plan = RealDft::new(*n_time)?;
                let k = t1_indices.len();
                let mut signal = vec![0.0; *n_time];
                Ok(spectra
                    .iter()
                    .zip(targets.chunks_exact(k))
                    .map(|(s, meas)| {
                        plan.inverse_into(&s.re, &s.im, &mut signal);
                        t1_indices.iter().zip(meas).map(|(&j, v)| (signal[j] * gain - v).powi(2)).sum::<f64>() / k as f64
                    })
                    .collect())
            }
        }
    }

    /// Predicted box-mean profile and the forward tape that produced it.
    fn predicted_profile(
        &self,
        spec: &ProfileSpec,
        params: &MlpParams,
        enc: &Encoder,
    ) -> Result<(Profile2D, crate::net::Tape, usize)> {
        let c = self.channels();
        let (out, tape) = forward_train(params, enc, &spec.coords())?;
        let bl = spec.box_len();
        let data: Vec<f64> = out
            .chunks_exact(bl * c)
            .map(|cell| cell.iter().step_by(c).sum::<f64>() / bl as f64)
            .collect();
        Ok((Profile2D::from_columns(spec.x.len(), spec.t2.len(), data)?, tape, bl))
    }

    /// Weighted objective value on `batch` and its parameter gradient.
    pub fn total_loss(&self, params: &MlpParams, enc: &Encoder, batch: Batch) -> Result<(LossBreakdown, MlpParams)> {
        self.evaluate(params, enc, batch, true)
    }

    /// As [`Objective::total_loss`], optionally skipping the profile terms.
    pub fn evaluate(
        &self,
        params: &MlpParams,
        enc: &Encoder,
        batch: Batch,
        with_profile: bool,
    ) -> Result<(LossBreakdown, MlpParams)> {
        self.weights.validate()?;
        if params.output_width() != self.channels() {
            bail!(Shape, "network has {} outputs, objective needs {}", params.output_width(), self.channels());
        }
        let mut out = LossBreakdown::default();
        let mut grad = params.zeros_like();
        if self.weights.mse > 0.0 {
            let (v, mut g) = self.data_term(params, enc, &batch)?;
            out.mse = v;
            out.total += self.weights.mse * v;
            g.scale(self.weights.mse);
            grad.add_assign(&g);
        }
        if let (true, true, Some(spec)) = (with_profile, self.weights.uses_profile(), &self.profile) {
            let (profile, tape, bl) = self.predicted_profile(spec, params, enc)?;
            let (terms, pgrad) = profile_terms(&profile, spec.reference.as_ref(), &spec.x, &self.weights)?;
            out.moment = terms.moment;
            out.mono = terms.mono;
            out.smooth = terms.smooth;
            out.total += terms.total;
            let c = self.channels();
            let mut upstream = vec![0.0; tape.rows() * c];
            for (cell, g) in pgrad.iter().enumerate() {
                let share = g / bl as f64;
                for k in 0..bl {
                    upstream[(cell * bl + k) * c] = share;
                }
            }
            grad.add_assign(&backward_tape(params, &tape, &upstream)?);
        }
        if !out.total.is_finite() {
            bail!(Optimizer, "objective evaluated to {}", out.total);
        }
        Ok((out, grad))
    }
}

/// Packs interleaved `(re, im)` network outputs into half-spectra, zeroing the
/// imaginary part at the Hermitian-real bins.
pub fn spectra_from_outputs(out: &[f64], n_time: usize, fibers: usize) -> Vec<HalfSpectrum> {
    let bins = crate::dft::bin_count(n_time);
    (0..fibers)
        .into_par_iter()
        .map(|f| {
            let mut s = HalfSpectrum::zeros(n_time);
            for b in 0..bins {
                s.re[b] = out[(f * bins + b) * 2];
                s.im[b] = out[(f * bins + b) * 2 + 1];
            }
            for b in crate::dft::hermitian_real_bins(n_time) {
                s.im[b] = 0.0;
            }
            s
        })
        .collect()
}

fn zero_hermitian_imag(upstream: &mut [f64], n_time: usize, fibers: usize) {
    let bins = crate::dft::bin_count(n_time);
    for f in 0..fibers {
        for b in crate::dft::hermitian_real_bins(n_time) {
            upstream[(f * bins + b) * 2 + 1] = 0.0;
        }
    }
}
