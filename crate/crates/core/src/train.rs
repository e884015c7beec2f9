//! Turning sparse measurements into a training objective, running Adam on
//! it, and evaluating the fitted network on the dense grid.

use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dft::{bin_count, frequency_axis, hermitian_real_bins, RealDft};
use crate::error::{bail, Error, Result};
use crate::hypercube::{AxisGrid, Domain, HyperCube, Profile2D, SpectralBox};
use crate::loss::{find_peak_box_plane, Batch, Fidelity, LossBreakdown, LossWeights, Objective, ProfileSpec};
use crate::net::{forward, init_params, Encoder, MlpParams, OptState, COORD_DIM};
use crate::sampling::{normalize_index, rescale_weak_lobe, Measurement, RescaleRecord};
use crate::synth::stream_key;

/// Which fidelity term the network is trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Frequency-domain targets from fully sampled `t1` fibers, one output channel.
    Slow,
    /// Two-channel half-spectra compared in the time domain at sampled `t1`.
    Fast,
}

impl FitMode {
    pub fn channels(self) -> usize {
        match self {
            FitMode::Slow => 1,
            FitMode::Fast => 2,
        }
    }
}

impl fmt::Display for FitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMode::Slow => "slow",
            FitMode::Fast => "fast",
        })
    }
}

impl FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slow" => Ok(FitMode::Slow),
            "fast" => Ok(FitMode::Fast),
            other => bail!(Config, "unknown fit mode {other:?} (expected slow or fast)"),
        }
    }
}

/// Input encoding applied before the MLP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EncoderSpec {
    Identity,
    Fourier { m: usize, sigma: f64 },
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub mode: FitMode,
    pub iterations: usize,
    pub lr: f64,
    pub eps: f64,
    /// Network rows per step; 0 trains full-batch.
    pub batch_size: usize,
    pub weights: LossWeights,
    pub seed: u64,
    pub encoder: EncoderSpec,
    /// Profile terms are evaluated on every `profile_every`-th step.
    pub profile_every: usize,
    /// Fraction of the iterations trained on the data term alone.
    pub warmup: f64,
    /// Loss-curve sampling interval in steps.
    pub curve_every: usize,
    /// Rescale the weaker lobe before slow-mode fitting.
    pub rescale: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mode: FitMode::Slow,
            iterations: 50_000,
            lr: 1e-3,
            eps: 1e-8,
            batch_size: 512,
            weights: LossWeights::default(),
            seed: 0,
            encoder: EncoderSpec::Identity,
            profile_every: 1,
            warmup: 0.2,
            curve_every: 100,
            rescale: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.eps > 0.0 && self.eps.is_finite()) {
            bail!(Config, "learning rate and epsilon must be positive");
        }
        if self.profile_every == 0 || self.curve_every == 0 {
            bail!(Config, "profile_every and curve_every must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.warmup) {
            bail!(Config, "warmup must be a fraction in [0, 1]");
        }
        if let EncoderSpec::Fourier { m, sigma } = self.encoder {
            if m == 0 || !(sigma > 0.0 && sigma.is_finite()) {
                bail!(Config, "fourier encoder needs m > 0 and sigma > 0");
            }
        }
        Ok(())
    }

    pub fn build_encoder(&self) -> Result<Encoder> {
        match self.encoder {
            EncoderSpec::Identity => Ok(Encoder::Identity),
            EncoderSpec::Fourier { m, sigma } => Encoder::fourier(m, sigma, stream_key(self.seed, 0, 0, 1)),
        }
    }
}

/// Normalization fixed when a problem is first built.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocess {
    /// Training values are measured values divided by this.
    pub scale: f64,
    pub rescale: RescaleRecord,
    pub peak_box: SpectralBox,
}

/// Objective plus everything needed to map network outputs back to data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Objective,
    pub prep: Preprocess,
    pub mode: FitMode,
    axes: [AxisGrid; 4],
    t2_indices: Vec<usize>,
    t1_indices: Vec<usize>,
    /// Position in `t2_indices` of every batch unit.
    unit_t2: Vec<usize>,
}

/// Real parts of the `t1` spectra of every measured fiber, laid out
/// `(t2_sel, x, bin, ω3)`, with unsampled `t1` points zero-filled.
fn measured_spectra(meas: &Measurement) -> Result<(Vec<f64>, Vec<f64>)> {
    let axes = meas.axes();
    let (nx, n1, nw) = (axes[1].count, axes[2].count, axes[3].count);
    let bins = bin_count(n1);
    let plan = RealDft::new(n1)?;
    let nk = meas.t2_indices().len();
    let mut re = vec![0.0; nk * nx * bins * nw];
    let mut im = vec![0.0; nk * nx * bins * nw];
    let mut fiber = vec![0.0; n1];
    let (mut fr, mut fi) = (vec![0.0; bins], vec![0.0; bins]);
    for k in 0..nk {
        for x in 0..nx {
            for w in 0..nw {
                fiber.iter_mut().for_each(|v| *v = 0.0);
                for (j, &a) in meas.t1_indices().iter().enumerate() {
                    fiber[a] = meas.get(k, x, j, w);
                }
                plan.forward_into(&fiber, &mut fr, &mut fi);
                for b in 0..bins {
                    let o = ((k * nx + x) * bins + b) * nw + w;
                    re[o] = fr[b];
                    im[o] = fi[b];
                }
            }
        }
    }
    Ok((re, im))
}

/// Box around the dominant peak of `values` averaged over `(t2_sel, x)`.
fn box_from_values(values: &[f64], nk: usize, nx: usize, bins: usize, nw: usize) -> Result<SpectralBox> {
    let mut plane = vec![0.0; bins * nw];
    for cell in values.chunks_exact(bins * nw).take(nk * nx) {
        for (p, v) in plane.iter_mut().zip(cell) {
            *p += v;
        }
    }
    plane.iter_mut().for_each(|v| *v = v.abs());
    find_peak_box_plane(&plane, bins, nw)
}

fn box_profile(values: &[f64], nk: usize, nx: usize, bins: usize, nw: usize, bx: &SpectralBox) -> Result<Profile2D> {
    let mut data = vec![0.0; nk * nx];
    for k in 0..nk {
        for x in 0..nx {
            let mut acc = 0.0;
            for b in bx.w1.clone() {
                for w in bx.w3.clone() {
                    acc += values[((k * nx + x) * bins + b) * nw + w];
                }
            }
            data[k * nx + x] = acc / bx.len() as f64;
        }
    }
    Profile2D::from_columns(nx, nk, data)
}

impl Problem {
    /// Builds the objective, deriving normalization and the peak box from `meas`.
    pub fn new(meas: &Measurement, cfg: &FitConfig) -> Result<Self> {
        Self::build(meas, cfg, None)
    }

    /// Builds the objective reusing an earlier normalization and peak box.
    pub fn with_preprocess(meas: &Measurement, cfg: &FitConfig, prep: &Preprocess) -> Result<Self> {
        Self::build(meas, cfg, Some(prep))
    }

    fn build(meas: &Measurement, cfg: &FitConfig, frozen: Option<&Preprocess>) -> Result<Self> {
        cfg.validate()?;
        let axes = meas.axes().clone();
        let (nt, nx, n1, nw) = (axes[0].count, axes[1].count, axes[2].count, axes[3].count);
        let bins = bin_count(n1);
        let t2 = meas.t2_indices().to_vec();
        let nk = t2.len();
        let (re, im) = measured_spectra(meas)?;
        let full_t1 = meas.is_full_t1();

        let peak_box = match frozen {
            Some(p) => p.peak_box.clone(),
            None => box_from_values(&re, nk, nx, bins, nw)?,
        };
        let x_norm: Vec<f64> = (0..nx).map(|i| normalize_index(i, nx)).collect();
        let t2_norm: Vec<f64> = t2.iter().map(|&t| normalize_index(t, nt)).collect();
        let w_norm = |i: usize| normalize_index(i, nw);
        let b_norm = |b: usize| normalize_index(b, bins);

        let (fidelity, prep, reference, unit_t2) = match cfg.mode {
            FitMode::Slow => {
                if !full_t1 {
                    bail!(
                        Config,
                        "slow mode needs every t1 sample ({} of {n1} measured); use fast mode for sparse t1",
                        meas.t1_indices().len()
                    );
                }
                let scale = match frozen {
                    Some(p) => p.scale,
                    None => re.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                };
                if !(scale > 0.0 && scale.is_finite()) {
                    bail!(Degenerate, "measured spectra are identically zero");
                }
                let normalized: Vec<f64> = re.iter().map(|v| v / scale).collect();
                let (targets, rescale) = match (frozen, cfg.rescale) {
                    (Some(p), _) => (normalized.iter().map(|&v| p.rescale.apply(v)).collect(), p.rescale),
                    (None, true) => rescale_weak_lobe(&normalized),
                    (None, false) => (normalized, RescaleRecord::identity()),
                };
                let reference = box_profile(&targets, nk, nx, bins, nw, &peak_box)?;
                let mut coords = Vec::with_capacity(targets.len() * COORD_DIM);
                let mut unit_t2 = Vec::with_capacity(targets.len());
                for (k, &tn) in t2_norm.iter().enumerate() {
                    for &xn in &x_norm {
                        for b in 0..bins {
                            for w in 0..nw {
                                coords.extend_from_slice(&[xn, tn, b_norm(b), w_norm(w)]);
                                unit_t2.push(k);
                            }
                        }
                    }
                }
                let prep = Preprocess {
                    scale,
                    rescale,
                    peak_box: peak_box.clone(),
                };
                (Fidelity::Slow { coords, targets }, prep, Some(reference), unit_t2)
            }
            FitMode::Fast => {
                let scale = match frozen {
                    Some(p) => p.scale,
                    None => re.iter().zip(&im).fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b))),
                };
                if !(scale > 0.0 && scale.is_finite()) {
                    bail!(Degenerate, "measured spectra are identically zero");
                }
                let mut fibers = Vec::with_capacity(nk * nx * nw);
                let mut unit_t2 = Vec::with_capacity(nk * nx * nw);
                let k1 = meas.t1_indices().len();
                let mut targets = Vec::with_capacity(nk * nx * nw * k1);
                for (k, &tn) in t2_norm.iter().enumerate() {
                    for (x, &xn) in x_norm.iter().enumerate() {
                        for w in 0..nw {
                            fibers.push([xn, tn, w_norm(w)]);
                            unit_t2.push(k);
                            for j in 0..k1 {
                                targets.push(meas.get(k, x, j, w) * n1 as f64 / scale);
                            }
                        }
                    }
                }
                let reference = if full_t1 {
                    let normalized: Vec<f64> = re.iter().map(|v| v / scale).collect();
                    Some(box_profile(&normalized, nk, nx, bins, nw, &peak_box)?)
                } else {
                    if cfg.weights.moment > 0.0 {
                        info!("moment matching disabled: the reference profile needs every t1 sample");
                    }
                    None
                };
                let prep = Preprocess {
                    scale,
                    rescale: RescaleRecord::identity(),
                    peak_box: peak_box.clone(),
                };
                let fid = Fidelity::Fast {
                    fibers,
                    n_time: n1,
                    t1_indices: meas.t1_indices().to_vec(),
                    targets,
                };
                (fid, prep, reference, unit_t2)
            }
        };
        let profile = ProfileSpec {
            x: x_norm,
            t2: t2_norm,
            w1: peak_box.w1.clone().map(b_norm).collect(),
            w3: peak_box.w3.clone().map(w_norm).collect(),
            reference,
        };
        Ok(Self {
            objective: Objective {
                fidelity,
                profile: Some(profile),
                weights: cfg.weights,
            },
            prep,
            mode: cfg.mode,
            axes,
            t2_indices: t2,
            t1_indices: meas.t1_indices().to_vec(),
            unit_t2,
        })
    }

    pub fn axes(&self) -> &[AxisGrid; 4] {
        &self.axes
    }

    pub fn t2_indices(&self) -> &[usize] {
        &self.t2_indices
    }

    pub fn t1_indices(&self) -> &[usize] {
        &self.t1_indices
    }

    /// Reference profile derived from the measurements, in training units.
    pub fn reference_profile(&self) -> Option<&Profile2D> {
        self.objective.profile.as_ref().and_then(|p| p.reference.as_ref())
    }

    /// Network rows consumed by one batch unit.
    fn rows_per_unit(&self) -> usize {
        match self.mode {
            FitMode::Slow => 1,
            FitMode::Fast => bin_count(self.axes[2].count),
        }
    }

    /// Mean squared training-space residual of every sampled delay.
    pub fn per_sample_losses(&self, state: &TrainState) -> Result<Vec<f64>> {
        let res = self.objective.unit_residuals(&state.params, &state.encoder)?;
        let mut sum = vec![0.0; self.t2_indices.len()];
        let mut count = vec![0usize; self.t2_indices.len()];
        for (&k, r) in self.unit_t2.iter().zip(&res) {
            sum[k] += r;
            count[k] += 1;
        }
        Ok(sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect())
    }
}

/// Network parameters, encoder and optimizer state carried between fits.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: MlpParams,
    pub encoder: Encoder,
    pub opt: OptState,
}

impl TrainState {
    pub fn new(cfg: &FitConfig) -> Result<Self> {
        let encoder = cfg.build_encoder()?;
        let params = init_params(cfg.seed, cfg.mode.channels(), &encoder)?;
        let opt = OptState::new(&params, cfg.lr, cfg.eps)?;
        Ok(Self { params, encoder, opt })
    }

    /// Wraps existing parameters with a fresh optimizer.
    pub fn from_params(params: MlpParams, cfg: &FitConfig) -> Result<Self> {
        let encoder = cfg.build_encoder()?;
        if params.input_width() != encoder.output_width() || params.output_width() != cfg.mode.channels() {
            bail!(Shape, "checkpoint layer widths do not match the configured network");
        }
        let opt = OptState::new(&params, cfg.lr, cfg.eps)?;
        Ok(Self { params, encoder, opt })
    }
}

/// One sample of the training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    pub loss: LossBreakdown,
}

/// Result of [`fit`]: trained state, sampled loss curve and the final
/// full-data loss.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub state: TrainState,
    pub curve: Vec<CurvePoint>,
    pub final_loss: LossBreakdown,
}

/// Writes the curve as `iteration,total,mse,moment,mono,smooth`.
pub fn write_curve_csv<W: std::io::Write>(curve: &[CurvePoint], mut out: W) -> Result<()> {
    writeln!(out, "iteration,total,mse,moment,mono,smooth")?;
    for p in curve {
        let l = p.loss;
        writeln!(out, "{},{},{},{},{},{}", p.iteration, l.total, l.mse, l.moment, l.mono, l.smooth)?;
    }
    Ok(())
}

/// Runs `cfg.iterations` Adam steps on `problem`, starting from `state` when
/// given (warm start) or from a fresh initialization.
pub fn fit(problem: &Problem, cfg: &FitConfig, state: Option<TrainState>) -> Result<FitOutcome> {
    cfg.validate()?;
    if cfg.mode != problem.mode {
        bail!(Config, "problem was built for {} mode, config asks for {}", problem.mode, cfg.mode);
    }
    let mut state = match state {
        Some(s) => s,
        None => TrainState::new(cfg)?,
    };
    let obj = &problem.objective;
    let units = obj.units();
    let per_step = match cfg.batch_size {
        0 => units,
        n => (n / problem.rows_per_unit()).max(1).min(units),
    };
    let full = per_step >= units;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(cfg.seed, state.opt.step_count() as usize, 0, 2));
    let mut order: Vec<usize> = (0..units).collect();
    let mut cursor = units;
    let warmup = (cfg.warmup * cfg.iterations as f64).round() as usize;
    let mut curve = Vec::new();
    let mut rows = Vec::with_capacity(per_step);
    for it in 0..cfg.iterations {
        let batch = if full {
            Batch::All
        } else {
            rows.clear();
            while rows.len() < per_step {
                if cursor == units {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let take = (per_step - rows.len()).min(units - cursor);
                rows.extend_from_slice(&order[cursor..cursor + take]);
                cursor += take;
            }
            Batch::Rows(&rows)
        };
        let with_profile = it >= warmup && (it - warmup).is_multiple_of(cfg.profile_every);
        let (loss, grad) = obj.evaluate(&state.params, &state.encoder, batch, with_profile)?;
        state.opt.step(&mut state.params, &grad)?;
        if it % cfg.curve_every == 0 {
            curve.push(CurvePoint { iteration: it, loss });
            debug!("iteration {it}: loss {:.6e}", loss.total);
        }
    }
    let (final_loss, _) = obj.evaluate(&state.params, &state.encoder, Batch::All, true)?;
    curve.push(CurvePoint {
        iteration: cfg.iterations,
        loss: final_loss,
    });
    Ok(FitOutcome {
        state,
        curve,
        final_loss,
    })
}

/// Dense outputs of a fitted network.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Frequency-domain cube (one channel in slow mode, real and imaginary in fast mode).
    pub freq: HyperCube,
    /// Time-domain cube, available in fast mode.
    pub time: Option<HyperCube>,
}

/// Evaluates the network on every `(t2, x, ω1, ω3)` grid point and undoes
/// the training normalization.
pub fn reconstruct(problem: &Problem, state: &TrainState) -> Result<Reconstruction> {
    let axes = &problem.axes;
    let (nt, nx, n1, nw) = (axes[0].count, axes[1].count, axes[2].count, axes[3].count);
    let bins = bin_count(n1);
    let c = problem.mode.channels();
    let freq_axes = [axes[0].clone(), axes[1].clone(), frequency_axis(&axes[2]), axes[3].clone()];
    let mut freq = HyperCube::zeros(freq_axes, Domain::Frequency, c)?;
    let mut coords = Vec::with_capacity(nx * bins * nw * COORD_DIM);
    for t in 0..nt {
        coords.clear();
        let tn = normalize_index(t, nt);
        for x in 0..nx {
            for b in 0..bins {
                for w in 0..nw {
                    coords.extend_from_slice(&[
                        normalize_index(x, nx),
                        tn,
                        normalize_index(b, bins),
                        normalize_index(w, nw),
                    ]);
                }
            }
        }
        let out = forward(&state.params, &state.encoder, &coords)?;
        let slab = nx * bins * nw * c;
        let dst = &mut freq.data_mut()[t * slab..(t + 1) * slab];
        for (d, o) in dst.iter_mut().zip(&out) {
            *d = *o;
        }
    }
    let prep = &problem.prep;
    match problem.mode {
        FitMode::Slow => {
            freq.data_mut().iter_mut().for_each(|v| *v = prep.rescale.invert(*v) * prep.scale);
            Ok(Reconstruction { freq, time: None })
        }
        FitMode::Fast => {
            freq.data_mut().iter_mut().for_each(|v| *v *= prep.scale);
            let hermitian = hermitian_real_bins(n1);
            for t in 0..nt {
                for x in 0..nx {
                    for &b in &hermitian {
                        for w in 0..nw {
                            freq.set(t, x, b, w, 1, 0.0);
                        }
                    }
                }
            }
            let time = crate::dft::irfft_cube(&freq, &axes[2])?;
            Ok(Reconstruction { freq, time: Some(time) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{PolicyTag, SamplingPlan};
    use crate::synth::{default_axes, SynthConfig, SynthOracle};

    fn small_config(noise: f64) -> SynthConfig {
        SynthConfig {
            axes: default_axes(9, 4, 16, 16),
            noise_sigma: noise,
            ..SynthConfig::default()
        }
    }

    fn quick(mode: FitMode) -> FitConfig {
        FitConfig {
            mode,
            iterations: 300,
            lr: 3e-3,
            curve_every: 50,
            ..FitConfig::default()
        }
    }

    #[test]
    fn slow_problem_normalizes_and_rescales() {
        let oracle = SynthOracle::new(small_config(0.0)).unwrap();
        let plan = SamplingPlan::exhaustive(9, 16, 1);
        let meas = oracle.measure(&plan).unwrap();
        let p = Problem::new(&meas, &quick(FitMode::Slow)).unwrap();
        let Fidelity::Slow { targets, coords } = &p.objective.fidelity else { panic!() };
        assert_eq!(targets.len(), 9 * 4 * 9 * 16);
        assert_eq!(coords.len(), targets.len() * 4);
        let pos = targets.iter().cloned().fold(f64::MIN, f64::max);
        let neg = targets.iter().cloned().fold(f64::MAX, f64::min);
        assert!(((pos.max(-neg)) - 1.0).abs() < 1e-12);
        // both lobes reach the same magnitude after rescaling
        assert!((pos + neg).abs() < 1e-12, "{pos} {neg} {:?}", p.prep.rescale);
        assert!(coords.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(p.reference_profile().is_some());
    }

    #[test]
    fn slow_mode_rejects_sparse_t1() {
        let oracle = SynthOracle::new(small_config(0.0)).unwrap();
        let plan = SamplingPlan::new((0..9).collect(), vec![0, 1, 2, 3, 4, 9, 15], 1, PolicyTag::Custom).unwrap();
        let meas = oracle.measure(&plan).unwrap();
        assert!(matches!(Problem::new(&meas, &quick(FitMode::Slow)), Err(Error::Config(_))));
        let p = Problem::new(&meas, &quick(FitMode::Fast)).unwrap();
        assert!(p.reference_profile().is_none());
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let oracle = SynthOracle::new(small_config(0.0)).unwrap();
        let meas = oracle.measure(&SamplingPlan::exhaustive(9, 16, 1)).unwrap();
        for mode in [FitMode::Slow, FitMode::Fast] {
            let cfg = quick(mode);
            let p = Problem::new(&meas, &cfg).unwrap();
            let a = fit(&p, &cfg, None).unwrap();
            let b = fit(&p, &cfg, None).unwrap();
            assert_eq!(a.state.params, b.state.params);
            assert!(a.final_loss.mse < 0.5 * a.curve[0].loss.mse, "{mode}: {:?}", a.final_loss);
            let rec = reconstruct(&p, &a.state).unwrap();
            assert_eq!(rec.freq.dims(), [9, 4, 9, 16]);
            assert_eq!(rec.time.is_some(), mode == FitMode::Fast);
            assert_eq!(p.per_sample_losses(&a.state).unwrap().len(), 9);
        }
    }

    #[test]
    fn reconstruction_undoes_normalization() {
        // a network that outputs the constant 1 maps back to scale in every cell
        let oracle = SynthOracle::new(small_config(0.0)).unwrap();
        let meas = oracle.measure(&SamplingPlan::exhaustive(9, 16, 1)).unwrap();
        let cfg = FitConfig {
            rescale: false,
            ..quick(FitMode::Slow)
        };
        let p = Problem::new(&meas, &cfg).unwrap();
        let mut state = TrainState::new(&cfg).unwrap();
        state.params.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        let last = state.params.layers() - 1;
        state.params.bias_mut(last)[0] = 1.0;
        let rec = reconstruct(&p, &state).unwrap();
        assert!(rec.freq.data().iter().all(|&v| (v - p.prep.scale).abs() < 1e-12));
    }

    #[test]
    fn warm_start_continues_optimizer() {
        let oracle = SynthOracle::new(small_config(0.0)).unwrap();
        let meas = oracle.measure(&SamplingPlan::exhaustive(9, 16, 1)).unwrap();
        let cfg = FitConfig {
            iterations: 40,
            ..quick(FitMode::Slow)
        };
        let p = Problem::new(&meas, &cfg).unwrap();
        let first = fit(&p, &cfg, None).unwrap();
        let second = fit(&p, &cfg, Some(first.state.clone())).unwrap();
        assert_eq!(second.state.opt.step_count(), 80);
    }

    #[test]
    fn mode_strings_roundtrip() {
        for m in [FitMode::Slow, FitMode::Fast] {
            assert_eq!(m.to_string().parse::<FitMode>().unwrap(), m);
        }
        assert!("medium".parse::<FitMode>().is_err());
    }
}
