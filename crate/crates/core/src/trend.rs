//! Scripted synthetic experiments that check qualitative reconstruction trends:
//! noise averaging, `t2` stride, `t1` rate, keep-versus-drop masks, adaptive
//! sampling, moment regularization and the joint sparse regime.
//!
//! Every verdict is taken on medians over the configured seeds. Within a seed
//! all sweep points share the network initialization and the noise stream.

use std::fmt::Write as _;
use std::io::Write;

use log::info;
use rayon::prelude::*;

use crate::adaptive::{baseline_plans, initial_t2, AdaptiveRun, BaselineKind, InrRefit};
use crate::dft::rfft_cube;
use crate::error::{bail, Result};
use crate::evalmetrics::{baseline_linear, profile_metrics_in_box, spectrum_mse};
use crate::hypercube::{HyperCube, SpectralBox};
use crate::loss::{find_peak_box, LossWeights};
use crate::sampling::{mask_t1_drop_early, mask_t1_random, mask_t2_uniform, PolicyTag, SamplingPlan};
use crate::synth::{default_axes, stream_key, SynthConfig, SynthOracle};
use crate::train::{fit, reconstruct, FitConfig, FitMode, Problem};

/// Shared settings of a trend experiment.
#[derive(Debug, Clone)]
pub struct TrendConfig {
    pub synth: SynthConfig,
    pub fit: FitConfig,
    pub seeds: Vec<u64>,
    /// Signal-averaging count wherever the sweep does not vary it.
    pub repeats: u32,
    /// Warm-start steps after each adaptive acquisition.
    pub round_iterations: usize,
}

impl TrendConfig {
    /// Small grid whose `t2` axis keeps its last point for every power-of-two stride up to 16.
    pub fn desk() -> Self {
        let synth = SynthConfig {
            axes: default_axes(33, 8, 32, 12),
            noise_sigma: 0.2,
            ..SynthConfig::default()
        };
        let fit = FitConfig {
            iterations: 3000,
            profile_every: 4,
            ..FitConfig::default()
        };
        Self {
            synth,
            fit,
            seeds: (0..5).collect(),
            repeats: 5,
            round_iterations: 750,
        }
    }

    /// Heavier noise for the averaging sweep.
    pub fn desk_repeats() -> Self {
        let mut cfg = Self::desk();
        cfg.synth.noise_sigma = 0.6;
        cfg
    }

    /// Fast-mode grid with 64 `t1` samples and fewer pixels.
    pub fn desk_fast() -> Self {
        let mut cfg = Self::desk();
        cfg.synth.axes = default_axes(33, 4, 64, 12);
        cfg.fit.iterations = 8000;
        cfg
    }

    /// Long `t2` grid and light noise for the adaptive comparison.
    pub fn desk_adaptive() -> Self {
        let mut cfg = Self::desk();
        cfg.synth.axes = default_axes(129, 8, 32, 12);
        cfg.synth.noise_sigma = 0.005;
        cfg
    }

    /// Desk preset used by experiment `name`.
    pub fn for_experiment(name: &str) -> Result<Self> {
        Ok(match name {
            "sweep_repeats" => Self::desk_repeats(),
            "sweep_si" | "moment_ablation" => Self::desk(),
            "sweep_t1_rate" | "joint_regime" => Self::desk_fast(),
            "keep_vs_drop" => Self::desk_fast().with_seeds(10),
            "adaptive_vs_baselines" => Self::desk_adaptive(),
            other => bail!(Argument, "unknown experiment '{other}'"),
        })
    }

    pub fn with_seeds(mut self, n: usize) -> Self {
        self.seeds = (0..n as u64).collect();
        self
    }

    fn synth_for(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            ..self.synth.clone()
        }
    }

    fn fit_for(&self, seed: u64, mode: FitMode) -> FitConfig {
        FitConfig {
            seed,
            mode,
            ..self.fit.clone()
        }
    }
}

/// One measured value set of a sweep point for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub point: String,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Per-seed rows, per-point medians and the verdict of one experiment.
#[derive(Debug, Clone)]
pub struct TrendReport {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<TrendRow>,
    pub medians: Vec<(String, Vec<f64>)>,
    pub pass: bool,
    pub verdict: String,
}

impl TrendReport {
    fn new(name: &'static str, columns: Vec<&'static str>, rows: Vec<TrendRow>) -> Self {
        let mut points: Vec<String> = Vec::new();
        for r in &rows {
            if !points.contains(&r.point) {
                points.push(r.point.clone());
            }
        }
        let medians = points
            .into_iter()
            .map(|p| {
                let per: Vec<&TrendRow> = rows.iter().filter(|r| r.point == p).collect();
                let m = (0..columns.len())
                    .map(|c| median(&per.iter().map(|r| r.values[c]).collect::<Vec<_>>()))
                    .collect();
                (p, m)
            })
            .collect();
        Self {
            name,
            columns,
            rows,
            medians,
            pass: false,
            verdict: String::new(),
        }
    }

    /// Median of `column` at every point, in sweep order.
    pub fn median_column(&self, column: &str) -> Vec<f64> {
        let c = self.columns.iter().position(|&n| n == column).expect("known column");
        self.medians.iter().map(|(_, m)| m[c]).collect()
    }

    fn decide(mut self, pass: bool, what: &str) -> Self {
        let mut text = format!("{what}; medians");
        for (p, m) in &self.medians {
            let _ = write!(text, " [{p}:");
            for v in m {
                let _ = write!(text, " {v:.4e}");
            }
            text.push(']');
        }
        self.pass = pass;
        self.verdict = text;
        info!("{}: {} ({})", self.name, if pass { "pass" } else { "fail" }, self.verdict);
        self
    }

    /// `point,seed,<columns>` per run, then one `median` row per point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "point,seed,{}", self.columns.join(","))?;
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{},{},{}", r.point, r.seed, vals.join(","))?;
        }
        for (p, m) in &self.medians {
            let vals: Vec<String> = m.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{p},median,{}", vals.join(","))?;
        }
        Ok(())
    }

    /// One `name = PASS|FAIL: verdict` line.
    pub fn summary_line(&self) -> String {
        format!("{} = {}: {}", self.name, if self.pass { "PASS" } else { "FAIL" }, self.verdict)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n % 2 {
        1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Clean frequency-domain reference and its peak box.
struct Reference {
    freq: HyperCube,
    peak_box: SpectralBox,
}

impl Reference {
    fn new(synth: &SynthConfig) -> Result<Self> {
        let oracle = SynthOracle::new(synth.clone())?;
        let freq = rfft_cube(oracle.truth())?;
        let peak_box = find_peak_box(&freq)?;
        Ok(Self { freq, peak_box })
    }
}

/// Metrics of one dense reconstruction against the clean reference.
#[derive(Debug, Clone, Copy)]
struct Scores {
    spectrum: f64,
    intensity: f64,
    mean_profile: f64,
    std_profile: f64,
}

fn score(pred: &HyperCube, reference: &Reference) -> Result<Scores> {
    let pm = profile_metrics_in_box(pred, &reference.freq, &reference.peak_box)?;
    Ok(Scores {
        spectrum: spectrum_mse(pred, &reference.freq)?,
        intensity: pm.intensity_mse,
        mean_profile: pm.mean_profile_mse,
        std_profile: pm.std_profile_mse,
    })
}

/// Measures `plan` for `seed`, fits and reconstructs the dense spectrum.
fn fit_plan(tc: &TrendConfig, seed: u64, plan: &SamplingPlan, fit_cfg: &FitConfig) -> Result<HyperCube> {
    let oracle = SynthOracle::new(tc.synth_for(seed))?;
    let meas = oracle.measure(plan)?;
    let problem = Problem::new(&meas, fit_cfg)?;
    let outcome = fit(&problem, fit_cfg, None)?;
    Ok(reconstruct(&problem, &outcome.state)?.freq)
}

fn run_jobs<J: Sync, F>(jobs: &[J], f: F) -> Result<Vec<TrendRow>>
where
    F: Fn(&J) -> Result<TrendRow> + Sync + Send,
{
    jobs.par_iter().map(f).collect()
}

fn seed_jobs<P: Clone>(points: &[P], seeds: &[u64]) -> Vec<(P, u64)> {
    points.iter().flat_map(|p| seeds.iter().map(move |&s| (p.clone(), s))).collect()
}

/// Noise averaging: fully sampled slow-mode fits at each repeat count.
pub fn sweep_repeats(tc: &TrendConfig, repeats: &[u32]) -> Result<TrendReport> {
    let reference = Reference::new(&tc.synth)?;
    let [nt, _, n1, _] = [0, 1, 2, 3].map(|i| tc.synth.axes[i].count);
    let jobs = seed_jobs(repeats, &tc.seeds);
    let rows = run_jobs(&jobs, |&(r, seed)| {
        let plan = SamplingPlan::exhaustive(nt, n1, r);
        let oracle = SynthOracle::new(tc.synth_for(seed))?;
        let meas = oracle.measure(&plan)?;
        let raw = rfft_cube(&meas.to_dense()?)?;
        let raw_mse = spectrum_mse(&raw, &reference.freq)?;
        let cfg = tc.fit_for(seed, FitMode::Slow);
        let problem = Problem::new(&meas, &cfg)?;
        let outcome = fit(&problem, &cfg, None)?;
        let pred = reconstruct(&problem, &outcome.state)?.freq;
        let s = score(&pred, &reference)?;
        Ok(TrendRow {
            point: format!("r={r}"),
            seed,
            values: vec![raw_mse, s.spectrum, s.intensity],
        })
    })?;
    let report = TrendReport::new("sweep_repeats", vec!["raw_spectrum_mse", "pred_spectrum_mse", "pred_intensity_mse"], rows);
    let raw = report.median_column("raw_spectrum_mse");
    let pred = report.median_column("pred_spectrum_mse");
    let below = repeats
        .iter()
        .zip(raw.iter().zip(&pred))
        .filter(|(r, _)| **r <= 5)
        .all(|(_, (a, b))| b < a);
    let ordered = non_decreasing(&report.median_column("pred_intensity_mse").into_iter().rev().collect::<Vec<_>>());
    Ok(report.decide(below && ordered, "prediction below raw for r <= 5 and intensity non-increasing in r"))
}

/// `t2` stride: slow-mode fits on `{0, SI, 2·SI, ...}`.
pub fn sweep_si(tc: &TrendConfig, strides: &[i64]) -> Result<TrendReport> {
    let reference = Reference::new(&tc.synth)?;
    let (nt, n1) = (tc.synth.axes[0].count, tc.synth.axes[2].count);
    let jobs = seed_jobs(strides, &tc.seeds);
    let rows = run_jobs(&jobs, |&(si, seed)| {
        let plan = SamplingPlan::new(mask_t2_uniform(si, nt)?, (0..n1).collect(), tc.repeats, PolicyTag::UniformT2)?;
        let pred = fit_plan(tc, seed, &plan, &tc.fit_for(seed, FitMode::Slow))?;
        let s = score(&pred, &reference)?;
        Ok(TrendRow {
            point: format!("SI={si}"),
            seed,
            values: vec![s.intensity, s.spectrum],
        })
    })?;
    let report = TrendReport::new("sweep_si", vec!["intensity_mse", "spectrum_mse"], rows);
    let m = report.median_column("intensity_mse");
    let last = m[m.len() - 1];
    let worst = m[..m.len() - 1].iter().all(|&v| v < last);
    Ok(report.decide(non_decreasing(&m) && worst, "intensity non-decreasing in SI with the largest SI strictly worst"))
}

fn t1_mask_seed(seed: u64) -> u64 {
    stream_key(seed, 0, 0, 3)
}

/// `t1` rate: fast-mode fits on random masks that keep the first five and the last sample.
pub fn sweep_t1_rate(tc: &TrendConfig, rates: &[f64]) -> Result<TrendReport> {
    let reference = Reference::new(&tc.synth)?;
    let (nt, n1) = (tc.synth.axes[0].count, tc.synth.axes[2].count);
    let jobs = seed_jobs(rates, &tc.seeds);
    let rows = run_jobs(&jobs, |&(rate, seed)| {
        let mask = mask_t1_random(rate, n1, t1_mask_seed(seed))?;
        let rule = (0..5).all(|i| mask.contains(&i)) && mask.contains(&(n1 - 1));
        let plan = SamplingPlan::new((0..nt).collect(), mask, tc.repeats, PolicyTag::RandomT1)?;
        let pred = fit_plan(tc, seed, &plan, &tc.fit_for(seed, FitMode::Fast))?;
        let s = score(&pred, &reference)?;
        Ok(TrendRow {
            point: format!("rate={rate}"),
            seed,
            values: vec![s.spectrum, s.intensity, if rule { 1.0 } else { 0.0 }],
        })
    })?;
    let rule_ok = rows.iter().all(|r| r.values[2] == 1.0);
    let report = TrendReport::new("sweep_t1_rate", vec!["spectrum_mse", "intensity_mse", "mask_rule"], rows);
    let ordered = non_decreasing(&report.median_column("spectrum_mse"));
    Ok(report.decide(
        ordered && rule_ok,
        "spectrum non-decreasing as the rate falls and every mask keeps the first five and last samples",
    ))
}

/// Keep versus drop of the earliest `t1` samples at equal sample counts.
pub fn keep_vs_drop(tc: &TrendConfig, rate: f64) -> Result<TrendReport> {
    let reference = Reference::new(&tc.synth)?;
    let (nt, n1) = (tc.synth.axes[0].count, tc.synth.axes[2].count);
    let jobs = seed_jobs(&[true, false], &tc.seeds);
    let rows = run_jobs(&jobs, |&(keep, seed)| {
        let mask = match keep {
            true => mask_t1_random(rate, n1, t1_mask_seed(seed))?,
            false => mask_t1_drop_early(rate, n1, t1_mask_seed(seed))?,
        };
        let count = mask.len() as f64;
        let plan = SamplingPlan::new((0..nt).collect(), mask, tc.repeats, PolicyTag::RandomT1)?;
        let pred = fit_plan(tc, seed, &plan, &tc.fit_for(seed, FitMode::Fast))?;
        Ok(TrendRow {
            point: if keep { "keep" } else { "drop" }.into(),
            seed,
            values: vec![spectrum_mse(&pred, &reference.freq)?, count],
        })
    })?;
    let matched = rows.chunks(tc.seeds.len()).collect::<Vec<_>>();
    let counts_equal = matched[0].iter().zip(matched[1]).all(|(a, b)| a.values[1] == b.values[1]);
    let report = TrendReport::new("keep_vs_drop", vec!["spectrum_mse", "samples"], rows);
    let m = report.median_column("spectrum_mse");
    Ok(report.decide(m[0] < m[1] && counts_equal, "keep strictly below drop at matched sample counts"))
}

/// Loss-driven acquisition against uniform and random plans of equal size.
/// The budget is a sixteenth of the `t2` grid, of which four points form the
/// adaptive initial plan.
pub fn adaptive_vs_baselines(tc: &TrendConfig) -> Result<TrendReport> {
    let reference = Reference::new(&tc.synth)?;
    let (nt, n1) = (tc.synth.axes[0].count, tc.synth.axes[2].count);
    let budget = nt / 16;
    if budget < 5 {
        bail!(Config, "a {nt}-point t2 grid leaves a budget of {budget}, fewer than five delays");
    }
    let t1: Vec<usize> = (0..n1).collect();
    let jobs = seed_jobs(&[0u8, 1, 2], &tc.seeds);
    let rows = run_jobs(&jobs, |&(kind, seed)| {
        let cfg = tc.fit_for(seed, FitMode::Slow);
        let (name, pred, interior) = match kind {
            0 => {
                let oracle = SynthOracle::new(tc.synth_for(seed))?;
                let plan = SamplingPlan::new(initial_t2(nt, 2)?, t1.clone(), tc.repeats, PolicyTag::Adaptive)?;
                let mut model = InrRefit::new(cfg, tc.round_iterations);
                let mut run = AdaptiveRun::start(&mut model, oracle.measure(&plan)?, budget - plan.t2_indices.len())?;
                let mut oracle = oracle;
                run.run(&mut oracle, &mut model)?;
                let interior = history_is_interior(&plan.t2_indices, run.state.history().iter().map(|a| a.t2_index));
                ("adaptive", model.reconstruct()?.freq, interior)
            }
            k => {
                let which = if k == 1 { BaselineKind::Uniform } else { BaselineKind::Random };
                let plan = baseline_plans(which, budget, nt, t1.clone(), tc.repeats, stream_key(seed, 0, 0, 4))?;
                let cfg = FitConfig {
                    iterations: cfg.iterations + (budget - 4) * tc.round_iterations,
                    ..cfg
                };
                let name = if k == 1 { "uniform" } else { "random" };
                (name, fit_plan(tc, seed, &plan, &cfg)?, true)
            }
        };
        let s = score(&pred, &reference)?;
        Ok(TrendRow {
            point: name.into(),
            seed,
            values: vec![s.intensity, s.spectrum, if interior { 1.0 } else { 0.0 }],
        })
    })?;
    let interior = rows.iter().all(|r| r.values[2] == 1.0);
    let report = TrendReport::new("adaptive_vs_baselines", vec!["intensity_mse", "spectrum_mse", "interior"], rows);
    let m = report.median_column("intensity_mse");
    Ok(report.decide(
        m[0] <= m[1] && m[0] <= m[2] && interior,
        "adaptive at or below uniform and random, every acquisition inside a sampled interval",
    ))
}

/// True when each acquired index lies strictly between two already sampled delays.
pub fn history_is_interior(initial: &[usize], acquired: impl IntoIterator<Item = usize>) -> bool {
    let mut seen = initial.to_vec();
    seen.sort_unstable();
    for t in acquired {
        match seen.binary_search(&t) {
            Ok(_) => return false,
            Err(p) if p == 0 || p == seen.len() => return false,
            Err(p) => seen.insert(p, t),
        }
    }
    true
}

/// Default profile weights against all three profile terms switched off, on a
/// strided `t2` plan.
pub fn moment_ablation(tc: &TrendConfig, si: i64) -> Result<TrendReport> {
    if tc.synth.peaks.iter().all(|p| p.diffusion == 0.0) {
        bail!(Config, "the ablation needs a diffusing peak");
    }
    let reference = Reference::new(&tc.synth)?;
    let (nt, n1) = (tc.synth.axes[0].count, tc.synth.axes[2].count);
    let jobs = seed_jobs(&[true, false], &tc.seeds);
    let rows = run_jobs(&jobs, |&(with, seed)| {
        let plan = SamplingPlan::new(mask_t2_uniform(si, nt)?, (0..n1).collect(), tc.repeats, PolicyTag::UniformT2)?;
        let mut cfg = tc.fit_for(seed, FitMode::Slow);
        if !with {
            cfg.weights = LossWeights {
                moment: 0.0,
                mono: 0.0,
                smooth: 0.0,
                ..cfg.weights
            };
        }
        let s = score(&fit_plan(tc, seed, &plan, &cfg)?, &reference)?;
        Ok(TrendRow {
            point: if with { "with_profile_terms" } else { "mse_only" }.into(),
            seed,
            values: vec![s.mean_profile, s.std_profile, s.intensity],
        })
    })?;
    let report = TrendReport::new("moment_ablation", vec!["mean_profile_mse", "std_profile_mse", "intensity_mse"], rows);
    let mean = report.median_column("mean_profile_mse");
    let std = report.median_column("std_profile_mse");
    Ok(report.decide(
        mean[0] < mean[1] && std[0] < std[1],
        "mean and std profile errors strictly lower with profile terms",
    ))
}

/// Sparse `t2`, sparse `t1` and few repeats at once, against linear interpolation.
pub fn joint_regime(tc: &TrendConfig, si: i64, rate: f64, repeats: u32) -> Result<TrendReport> {
    let reference = Reference::new(&tc.synth)?;
    let (nt, n1) = (tc.synth.axes[0].count, tc.synth.axes[2].count);
    let jobs: Vec<u64> = tc.seeds.clone();
    let per_seed: Vec<[TrendRow; 2]> = jobs
        .par_iter()
        .map(|&seed| {
            let plan = SamplingPlan::new(
                mask_t2_uniform(si, nt)?,
                mask_t1_random(rate, n1, t1_mask_seed(seed))?,
                repeats,
                PolicyTag::RandomT1,
            )?;
            let oracle = SynthOracle::new(tc.synth_for(seed))?;
            let meas = oracle.measure(&plan)?;
            let base = spectrum_mse(&baseline_linear(&meas)?, &reference.freq)?;
            let cfg = tc.fit_for(seed, FitMode::Fast);
            let problem = Problem::new(&meas, &cfg)?;
            let outcome = fit(&problem, &cfg, None)?;
            let pred = spectrum_mse(&reconstruct(&problem, &outcome.state)?.freq, &reference.freq)?;
            Ok([
                TrendRow {
                    point: "network".into(),
                    seed,
                    values: vec![pred],
                },
                TrendRow {
                    point: "linear".into(),
                    seed,
                    values: vec![base],
                },
            ])
        })
        .collect::<Result<_>>()?;
    let (mut net, mut lin): (Vec<_>, Vec<_>) = (Vec::new(), Vec::new());
    for [a, b] in per_seed {
        net.push(a);
        lin.push(b);
    }
    net.extend(lin);
    let report = TrendReport::new("joint_regime", vec!["spectrum_mse"], net);
    let m = report.median_column("spectrum_mse");
    Ok(report.decide(m[0] < m[1], "network spectrum error strictly below linear interpolation"))
}

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: [&str; 7] = [
    "sweep_repeats",
    "sweep_si",
    "sweep_t1_rate",
    "keep_vs_drop",
    "adaptive_vs_baselines",
    "moment_ablation",
    "joint_regime",
];

/// Runs experiment `name` at its standard sweep points.
pub fn run_experiment(name: &str, tc: &TrendConfig) -> Result<TrendReport> {
    match name {
        "sweep_repeats" => sweep_repeats(tc, &[2, 5, 10, 20]),
        "sweep_si" => sweep_si(tc, &[1, 2, 4, 8, 16]),
        "sweep_t1_rate" => sweep_t1_rate(tc, &[0.8, 0.6, 0.4, 0.2]),
        "keep_vs_drop" => keep_vs_drop(tc, 0.6),
        "adaptive_vs_baselines" => adaptive_vs_baselines(tc),
        "moment_ablation" => moment_ablation(tc, 4),
        "joint_regime" => joint_regime(tc, 4, 0.6, 5),
        other => bail!(Argument, "unknown experiment '{other}'"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_by_hand() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn interior_history() {
        assert!(history_is_interior(&[0, 8], [4, 6, 5]));
        assert!(!history_is_interior(&[0, 8], [4, 4]));
        assert!(!history_is_interior(&[2, 8], [1]));
    }

    #[test]
    fn report_medians_and_csv() {
        let rows = vec![
            TrendRow { point: "a".into(), seed: 0, values: vec![1.0] },
            TrendRow { point: "a".into(), seed: 1, values: vec![3.0] },
            TrendRow { point: "b".into(), seed: 0, values: vec![5.0] },
        ];
        let r = TrendReport::new("t", vec!["v"], rows).decide(true, "ok");
        assert_eq!(r.median_column("v"), vec![2.0, 5.0]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("point,seed,v"));
        assert!(text.contains("a,median,2e0"));
        assert!(r.summary_line().starts_with("t = PASS"));
    }

    #[test]
    fn tiny_sweep_runs_end_to_end() {
        let mut tc = TrendConfig::desk().with_seeds(1);
        tc.synth.axes = default_axes(9, 3, 16, 8);
        tc.fit.iterations = 20;
        let r = sweep_si(&tc, &[1, 8]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.values.iter().all(|v| v.is_finite())));
    }
}
