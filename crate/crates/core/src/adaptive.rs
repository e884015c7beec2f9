//! Loss-driven acquisition along `t2`.
//!
//! After each fit, adjacent sampled delays form intervals whose score is the
//! mean of their per-sample losses. The midpoint of the best-scoring interval
//! is measured next and the model is refit from its previous state.

use std::collections::BTreeSet;
use std::io::Write;

use log::info;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Error, Result};
use crate::hypercube::{AxisGrid, Domain, HyperCube};
use crate::sampling::{Measurement, PolicyTag, SamplingPlan};
use crate::synth::SynthOracle;
use crate::train::{fit, reconstruct, FitConfig, Preprocess, Problem, Reconstruction, TrainState};

/// One acquisition of the adaptive loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub round: usize,
    pub t2_index: usize,
    /// Score of the interval the index was taken from.
    pub score: f64,
    /// Per-sample loss at the acquired delay after the following refit.
    pub loss_after: f64,
}

/// Sampled delays with their losses, the remaining budget and the history.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    sampled: Vec<usize>,
    per_sample_loss: Vec<f64>,
    budget_remaining: usize,
    history: Vec<Acquisition>,
    /// Intervals `(left, right)` known to have no interior grid point.
    exhausted: BTreeSet<(usize, usize)>,
}

impl AdaptiveState {
    pub fn new(sampled: Vec<usize>, per_sample_loss: Vec<f64>, budget: usize) -> Result<Self> {
        if sampled.windows(2).any(|w| w[0] >= w[1]) {
            bail!(State, "sampled delays must be strictly increasing");
        }
        let state = Self {
            sampled,
            per_sample_loss,
            budget_remaining: budget,
            history: Vec::new(),
            exhausted: BTreeSet::new(),
        };
        state.check_losses()?;
        Ok(state)
    }

    fn check_losses(&self) -> Result<()> {
        if self.per_sample_loss.len() != self.sampled.len() {
            bail!(
                State,
                "{} losses for {} sampled delays",
                self.per_sample_loss.len(),
                self.sampled.len()
            );
        }
        if self.per_sample_loss.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            bail!(State, "per-sample losses must be finite and non-negative");
        }
        Ok(())
    }

    pub fn sampled(&self) -> &[usize] {
        &self.sampled
    }

    pub fn per_sample_loss(&self) -> &[f64] {
        &self.per_sample_loss
    }

    pub fn budget_remaining(&self) -> usize {
        self.budget_remaining
    }

    pub fn history(&self) -> &[Acquisition] {
        &self.history
    }

    /// Replaces the losses after a refit.
    pub fn set_losses(&mut self, losses: Vec<f64>) -> Result<()> {
        let old = std::mem::replace(&mut self.per_sample_loss, losses);
        if let Err(e) = self.check_losses() {
            self.per_sample_loss = old;
            return Err(e);
        }
        Ok(())
    }

    /// Mean loss of each pair of adjacent sampled delays.
    pub fn interval_scores(&self) -> Result<Vec<f64>> {
        if self.sampled.len() < 2 {
            bail!(State, "interval scores need at least two sampled delays");
        }
        Ok(self.per_sample_loss.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect())
    }

    /// Next delay to acquire, with the score of its interval, or `None` when
    /// no interval has an interior grid point.
    pub fn select_next(&mut self) -> Result<Option<(usize, f64)>> {
        if self.budget_remaining == 0 {
            return Err(Error::Budget);
        }
        let scores = self.interval_scores()?;
        loop {
            let mut best: Option<usize> = None;
            for (k, &s) in scores.iter().enumerate() {
                let key = (self.sampled[k], self.sampled[k + 1]);
                if self.exhausted.contains(&key) {
                    continue;
                }
                if best.is_none_or(|b| s > scores[b]) {
                    best = Some(k);
                }
            }
            let Some(k) = best else {
                return Ok(None);
            };
            let (a, b) = (self.sampled[k], self.sampled[k + 1]);
            let mid = (a + b).div_ceil(2);
            if mid == a || mid == b {
                self.exhausted.insert((a, b));
                continue;
            }
            return Ok(Some((mid, scores[k])));
        }
    }

    /// Inserts an acquired delay with a provisional loss equal to its
    /// interval score and spends one unit of budget.
    fn record(&mut self, round: usize, t2: usize, score: f64) -> Result<()> {
        let pos = match self.sampled.binary_search(&t2) {
            Ok(_) => bail!(State, "delay {t2} is already sampled"),
            Err(p) => p,
        };
        if pos == 0 || pos == self.sampled.len() {
            bail!(State, "delay {t2} is not inside a sampled interval");
        }
        self.sampled.insert(pos, t2);
        self.per_sample_loss.insert(pos, score);
        self.budget_remaining -= 1;
        self.history.push(Acquisition {
            round,
            t2_index: t2,
            score,
            loss_after: f64::NAN,
        });
        Ok(())
    }

    /// Writes the history as `round,t2_index,score,loss_after`.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,t2_index,score,loss_after")?;
        for a in &self.history {
            writeln!(out, "{},{},{},{}", a.round, a.t2_index, a.score, a.loss_after)?;
        }
        Ok(())
    }
}

/// Anything that can measure a `t2` slice on request.
pub trait Oracle {
    fn axes(&self) -> &[AxisGrid; 4];

    /// Slice at delay `t2`, laid out `(x, t1_sel, ω3)`, averaged over `r` repeats.
    fn request(&mut self, t2: usize, t1_indices: &[usize], r: u32) -> Result<Vec<f64>>;
}

impl Oracle for SynthOracle {
    fn axes(&self) -> &[AxisGrid; 4] {
        &self.config().axes
    }

    fn request(&mut self, t2: usize, t1_indices: &[usize], r: u32) -> Result<Vec<f64>> {
        if r == 0 {
            bail!(Argument, "repeat count must be >= 1");
        }
        self.acquire_slice(t2, t1_indices, 0..r)
    }
}

/// Answers requests from a stored time-domain cube; `r` is ignored.
#[derive(Debug, Clone)]
pub struct ReplayOracle {
    cube: HyperCube,
}

impl ReplayOracle {
    pub fn new(cube: HyperCube) -> Result<Self> {
        if cube.domain() != Domain::Time || cube.channels() != 1 {
            bail!(Argument, "replay needs a single-channel time-domain cube");
        }
        Ok(Self { cube })
    }
}

impl Oracle for ReplayOracle {
    fn axes(&self) -> &[AxisGrid; 4] {
        self.cube.axes()
    }

    fn request(&mut self, t2: usize, t1_indices: &[usize], _r: u32) -> Result<Vec<f64>> {
        let [nt, nx, n1, nw] = self.cube.dims();
        if t2 >= nt || t1_indices.iter().any(|&j| j >= n1) {
            bail!(Argument, "request outside the stored grid");
        }
        let mut out = Vec::with_capacity(nx * t1_indices.len() * nw);
        for x in 0..nx {
            for &j in t1_indices {
                for w in 0..nw {
                    out.push(self.cube.get(t2, x, j, w, 0));
                }
            }
        }
        Ok(out)
    }
}

/// A model the loop can refit after every acquisition.
pub trait Refit {
    /// Fits to `meas` (warm-starting if possible) and returns the per-sample
    /// loss of every measured delay, in `meas.t2_indices()` order.
    fn refit(&mut self, meas: &Measurement, round: usize) -> Result<Vec<f64>>;
}

/// The adaptive loop's mutable state; survives acquisition failures.
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub state: AdaptiveState,
    pub meas: Measurement,
}

impl AdaptiveRun {
    /// Fits the initial measurements and sets up the budget.
    pub fn start<M: Refit>(model: &mut M, meas: Measurement, budget: usize) -> Result<Self> {
        let nt = meas.axes()[0].count;
        let t2 = meas.t2_indices().to_vec();
        if t2.first() != Some(&0) || t2.last() != Some(&(nt - 1)) {
            bail!(Argument, "initial plan must contain the first and last delays");
        }
        let losses = model.refit(&meas, 0)?;
        let state = AdaptiveState::new(t2, losses, budget)?;
        Ok(Self { state, meas })
    }

    /// Acquires and refits until the budget is spent or no interval can be split.
    pub fn run<O: Oracle, M: Refit>(&mut self, oracle: &mut O, model: &mut M) -> Result<()> {
        let t1 = self.meas.t1_indices().to_vec();
        let r = self.meas.repeats();
        while self.state.budget_remaining > 0 {
            let Some((t2, score)) = self.state.select_next()? else {
                info!("every sampled interval is exhausted; stopping early");
                break;
            };
            let round = self.state.history.len() + 1;
            let slice = oracle.request(t2, &t1, r).map_err(|e| Error::Acquisition {
                t2_index: t2,
                reason: e.to_string(),
            })?;
            self.meas.insert_slice(t2, slice)?;
            self.state.record(round, t2, score)?;
            let losses = model.refit(&self.meas, round)?;
            self.state.set_losses(losses)?;
            let pos = self.state.sampled.binary_search(&t2).expect("just inserted");
            if let Some(last) = self.state.history.last_mut() {
                last.loss_after = self.state.per_sample_loss[pos];
            }
            info!("round {round}: acquired t2 index {t2} (score {score:.4e})");
        }
        Ok(())
    }
}

/// Network refitter: full fit first, then warm-started fixed-length refits
/// with the first fit's normalization and peak box.
#[derive(Debug, Clone)]
pub struct InrRefit {
    pub cfg: FitConfig,
    /// Steps of each refit after the initial one.
    pub round_iterations: usize,
    pub state: Option<TrainState>,
    pub prep: Option<Preprocess>,
    pub problem: Option<Problem>,
}

impl InrRefit {
    pub fn new(cfg: FitConfig, round_iterations: usize) -> Self {
        Self {
            cfg,
            round_iterations,
            state: None,
            prep: None,
            problem: None,
        }
    }

    /// Dense reconstruction from the latest fit.
    pub fn reconstruct(&self) -> Result<Reconstruction> {
        match (&self.problem, &self.state) {
            (Some(p), Some(s)) => reconstruct(p, s),
            _ => bail!(State, "no fit has been run yet"),
        }
    }
}

impl Refit for InrRefit {
    fn refit(&mut self, meas: &Measurement, _round: usize) -> Result<Vec<f64>> {
        let (problem, cfg) = match &self.prep {
            None => {
                let p = Problem::new(meas, &self.cfg)?;
                self.prep = Some(p.prep.clone());
                (p, self.cfg.clone())
            }
            Some(prep) => {
                let cfg = FitConfig {
                    iterations: self.round_iterations,
                    warmup: 0.0,
                    ..self.cfg.clone()
                };
                (Problem::with_preprocess(meas, &self.cfg, prep)?, cfg)
            }
        };
        let outcome = fit(&problem, &cfg, self.state.take())?;
        let losses = problem.per_sample_losses(&outcome.state)?;
        self.state = Some(outcome.state);
        self.problem = Some(problem);
        Ok(losses)
    }
}

/// Default initial delays: both endpoints plus `interior` evenly spaced points.
pub fn initial_t2(t2_count: usize, interior: usize) -> Result<Vec<usize>> {
    baseline_uniform(interior + 2, t2_count)
}

fn baseline_uniform(budget: usize, t2_count: usize) -> Result<Vec<usize>> {
    if budget < 2 || budget > t2_count {
        bail!(Argument, "budget {budget} must lie in [2, {t2_count}]");
    }
    let mut out: Vec<usize> = (0..budget)
        .map(|i| ((i * (t2_count - 1)) as f64 / (budget - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    Ok(out)
}

/// Non-adaptive comparison plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Uniform,
    Random,
}

/// `budget` delays including both endpoints, evenly spaced or drawn at random.
pub fn baseline_plans(
    kind: BaselineKind,
    budget: usize,
    t2_count: usize,
    t1_indices: Vec<usize>,
    r: u32,
    seed: u64,
) -> Result<SamplingPlan> {
    if budget < 2 || budget > t2_count {
        bail!(Argument, "budget {budget} must lie in [2, {t2_count}]");
    }
    let t2 = match kind {
        BaselineKind::Uniform => baseline_uniform(budget, t2_count)?,
        BaselineKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t: Vec<usize> = sample(&mut rng, t2_count - 2, budget - 2).into_iter().map(|i| i + 1).collect();
            t.push(0);
            t.push(t2_count - 1);
            t.sort_unstable();
            t
        }
    };
    SamplingPlan::new(t2, t1_indices, r, PolicyTag::UniformT2)
}

/// Full adaptive run against `oracle`: fit the initial plan, spend `budget`
/// acquisitions, and reconstruct on the dense grid.
pub fn run_adaptive<O: Oracle>(
    oracle: &mut O,
    initial: &SamplingPlan,
    budget: usize,
    cfg: &FitConfig,
    round_iterations: usize,
) -> Result<(TrainState, AdaptiveState, Reconstruction)> {
    let axes = oracle.axes().clone();
    initial.validate(axes[0].count, axes[2].count)?;
    let mut values = Vec::new();
    for &t in &initial.t2_indices {
        values.extend(oracle.request(t, &initial.t1_indices, initial.r).map_err(|e| Error::Acquisition {
            t2_index: t,
            reason: e.to_string(),
        })?);
    }
    let meas = Measurement::new(axes, initial.t2_indices.clone(), initial.t1_indices.clone(), initial.r, values)?;
    let mut model = InrRefit::new(cfg.clone(), round_iterations);
    let mut run = AdaptiveRun::start(&mut model, meas, budget)?;
    run.run(oracle, &mut model)?;
    let rec = model.reconstruct()?;
    let state = model.state.take().expect("fitted");
    Ok((state, run.state, rec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{default_axes, SynthConfig};

    #[test]
    fn interval_scores_by_hand() {
        let s = AdaptiveState::new(vec![0, 8], vec![1.0, 3.0], 1).unwrap();
        assert_eq!(s.interval_scores().unwrap(), vec![2.0]);
        let s = AdaptiveState::new(vec![0, 4, 8], vec![1.0, 5.0, 2.0], 1).unwrap();
        assert_eq!(s.interval_scores().unwrap(), vec![3.0, 3.5]);
        let s = AdaptiveState::new(vec![0, 2, 5, 9], vec![0.7; 4], 1).unwrap();
        assert_eq!(s.interval_scores().unwrap(), vec![0.7; 3]);
        assert!(AdaptiveState::new(vec![3], vec![1.0], 1).unwrap().interval_scores().is_err());
    }

    #[test]
    fn select_next_by_hand() {
        let mut s = AdaptiveState::new(vec![0, 8], vec![1.0, 3.0], 1).unwrap();
        assert_eq!(s.select_next().unwrap(), Some((4, 2.0)));
        let mut s = AdaptiveState::new(vec![0, 4, 8], vec![1.0, 5.0, 2.0], 1).unwrap();
        assert_eq!(s.select_next().unwrap(), Some((6, 3.5)));
        let mut s = AdaptiveState::new(vec![0, 1], vec![4.0, 9.0], 1).unwrap();
        assert_eq!(s.select_next().unwrap(), None);
        let mut s = AdaptiveState::new(vec![0, 8], vec![1.0, 3.0], 0).unwrap();
        assert!(matches!(s.select_next(), Err(Error::Budget)));
    }

    #[test]
    fn select_next_skips_width_one_intervals_and_rounds_up() {
        // (3,4) scores highest but has no interior point; (4,7) → 5.5 → 6
        let mut s = AdaptiveState::new(vec![0, 3, 4, 7], vec![0.0, 9.0, 9.0, 1.0], 1).unwrap();
        assert_eq!(s.select_next().unwrap(), Some((6, 5.0)));
        // ties go to the earliest interval
        let mut s = AdaptiveState::new(vec![0, 2, 4], vec![1.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(s.select_next().unwrap(), Some((1, 1.0)));
    }

    /// Oracle returning zeros; the scripted model supplies the losses.
    struct ZeroOracle {
        axes: [AxisGrid; 4],
        requests: Vec<usize>,
        fail_at: Option<usize>,
    }

    impl Oracle for ZeroOracle {
        fn axes(&self) -> &[AxisGrid; 4] {
            &self.axes
        }

        fn request(&mut self, t2: usize, t1: &[usize], _r: u32) -> Result<Vec<f64>> {
            if self.fail_at == Some(t2) {
                bail!(Argument, "instrument offline");
            }
            self.requests.push(t2);
            Ok(vec![0.0; self.axes[1].count * t1.len() * self.axes[3].count])
        }
    }

    /// Per-sample loss is a fixed function of the delay index.
    struct Scripted<F: Fn(usize) -> f64>(F);

    impl<F: Fn(usize) -> f64> Refit for Scripted<F> {
        fn refit(&mut self, meas: &Measurement, _round: usize) -> Result<Vec<f64>> {
            Ok(meas.t2_indices().iter().map(|&t| (self.0)(t)).collect())
        }
    }

    fn zero_setup(nt: usize, t2: Vec<usize>) -> (ZeroOracle, Measurement) {
        let axes = [
            AxisGrid::index("t2", nt).unwrap(),
            AxisGrid::index("x", 2).unwrap(),
            AxisGrid::index("t1", 4).unwrap(),
            AxisGrid::index("w3", 2).unwrap(),
        ];
        let n = t2.len() * 2 * 4 * 2;
        let meas = Measurement::new(axes.clone(), t2, (0..4).collect(), 1, vec![0.0; n]).unwrap();
        let oracle = ZeroOracle {
            axes,
            requests: Vec::new(),
            fail_at: None,
        };
        (oracle, meas)
    }

    #[test]
    fn scripted_trace_acquires_six() {
        let script = |t: usize| match t {
            0 => 1.0,
            4 => 5.0,
            8 => 2.0,
            _ => 0.0,
        };
        let (mut oracle, meas) = zero_setup(9, vec![0, 4, 8]);
        let mut model = Scripted(script);
        let mut run = AdaptiveRun::start(&mut model, meas, 1).unwrap();
        run.run(&mut oracle, &mut model).unwrap();
        assert_eq!(oracle.requests, vec![6]);
        assert_eq!(run.state.history()[0].score, 3.5);
        assert_eq!(run.state.sampled(), &[0, 4, 6, 8]);
    }

    #[test]
    fn dominant_region_is_bisected() {
        // loss peaks sharply at the right end, so every round splits the last interval
        let (mut oracle, meas) = zero_setup(65, vec![0, 64]);
        let mut model = Scripted(|t: usize| (t as f64 / 8.0).exp());
        let mut run = AdaptiveRun::start(&mut model, meas, 5).unwrap();
        run.run(&mut oracle, &mut model).unwrap();
        assert_eq!(oracle.requests, vec![32, 48, 56, 60, 62]);
        let csv = {
            let mut b = Vec::new();
            run.state.write_history_csv(&mut b).unwrap();
            String::from_utf8(b).unwrap()
        };
        assert!(csv.starts_with("round,t2_index,score,loss_after\n1,32,"));
    }

    #[test]
    fn every_acquisition_lies_inside_a_sampled_interval() {
        let (mut oracle, meas) = zero_setup(33, vec![0, 32]);
        let mut model = Scripted(|t: usize| ((t * 7919) % 13) as f64);
        let mut run = AdaptiveRun::start(&mut model, meas, 12).unwrap();
        run.run(&mut oracle, &mut model).unwrap();
        let mut seen = vec![0, 32];
        for a in run.state.history() {
            let pos = seen.binary_search(&a.t2_index).unwrap_err();
            assert!(pos > 0 && pos < seen.len());
            seen.insert(pos, a.t2_index);
        }
        assert_eq!(run.state.sampled().len(), 14);
    }

    #[test]
    fn exhaustive_budget_on_small_grid() {
        let (mut oracle, meas) = zero_setup(8, vec![0, 7]);
        let mut model = Scripted(|_| 1.0);
        let mut run = AdaptiveRun::start(&mut model, meas, 6).unwrap();
        run.run(&mut oracle, &mut model).unwrap();
        assert_eq!(run.state.sampled(), &(0..8).collect::<Vec<_>>()[..]);
        assert_eq!(run.state.budget_remaining(), 0);
        // flat landscape gives a reproducible order
        assert_eq!(oracle.requests, vec![4, 2, 1, 3, 6, 5]);

        let (mut oracle, meas) = zero_setup(4, vec![0, 3]);
        let mut run = AdaptiveRun::start(&mut model, meas, 10).unwrap();
        run.run(&mut oracle, &mut model).unwrap();
        assert_eq!(run.state.sampled(), &[0, 1, 2, 3]);
        assert_eq!(run.state.budget_remaining(), 8);
    }

    #[test]
    fn oracle_failure_keeps_partial_state() {
        let (mut oracle, meas) = zero_setup(17, vec![0, 16]);
        oracle.fail_at = Some(12);
        let mut model = Scripted(|t: usize| t as f64);
        let mut run = AdaptiveRun::start(&mut model, meas, 4).unwrap();
        let err = run.run(&mut oracle, &mut model).unwrap_err();
        assert!(matches!(err, Error::Acquisition { t2_index: 12, .. }));
        assert_eq!(run.state.sampled(), &[0, 8, 16]);
        assert_eq!(run.meas.t2_indices(), &[0, 8, 16]);
    }

    #[test]
    fn baseline_plan_shapes() {
        let u = baseline_plans(BaselineKind::Uniform, 3, 9, vec![0], 1, 0).unwrap();
        assert_eq!(u.t2_indices, vec![0, 4, 8]);
        for seed in 0..20 {
            let r = baseline_plans(BaselineKind::Random, 5, 40, vec![0], 1, seed).unwrap();
            assert_eq!(r.t2_indices.len(), 5);
            assert_eq!((r.t2_indices[0], r.t2_indices[4]), (0, 39));
        }
        assert!(baseline_plans(BaselineKind::Uniform, 10, 9, vec![0], 1, 0).is_err());
        assert_eq!(initial_t2(129, 2).unwrap(), vec![0, 43, 85, 128]);
    }

    #[test]
    fn inr_loop_runs_with_zero_budget_and_replay() {
        let cfg0 = SynthConfig {
            axes: default_axes(9, 3, 8, 8),
            ..SynthConfig::default()
        };
        let truth = crate::synth::ground_truth_time(&cfg0).unwrap();
        let mut oracle = ReplayOracle::new(truth).unwrap();
        let plan = SamplingPlan::new(vec![0, 4, 8], (0..8).collect(), 1, PolicyTag::Adaptive).unwrap();
        let cfg = FitConfig {
            iterations: 30,
            ..FitConfig::default()
        };
        let (_, state, rec) = run_adaptive(&mut oracle, &plan, 0, &cfg, 10).unwrap();
        assert!(state.history().is_empty());
        assert_eq!(rec.freq.dims()[0], 9);
        let (p, state, _) = run_adaptive(&mut oracle, &plan, 2, &cfg, 10).unwrap();
        assert_eq!(state.sampled().len(), 5);
        assert_eq!(p.opt.step_count(), 50);
    }
}
