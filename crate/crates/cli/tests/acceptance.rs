//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. `ACCEPTANCE_ONLY=1,2,12` runs a subset.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use hyperfield::adaptive::AdaptiveState;
use hyperfield::dft::{hermitian_real_bins, irfft_adjoint, irfft_axis, rfft_axis, HalfSpectrum};
use hyperfield::evalmetrics::spectrum_mse;
use hyperfield::loss::Batch;
use hyperfield::net::MlpParams;
use hyperfield::sampling::SamplingPlan;
use hyperfield::synth::{default_axes, SynthConfig, SynthOracle};
use hyperfield::train::{fit, reconstruct, FitConfig, FitMode, Problem, TrainState};
use hyperfield::trend::{run_experiment, TrendConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn transform_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut roundtrip, mut parseval, mut adjoint) = (0.0_f64, 0.0_f64, 0.0_f64);
    for n in [4, 7, 8, 64, 251] {
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = rfft_axis(&x).map_err(|e| e.to_string())?;
            let back = irfft_axis(&s).map_err(|e| e.to_string())?;
            let num: f64 = x.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = x.iter().map(|a| a * a).sum();
            roundtrip = roundtrip.max((num / den).sqrt());

            let folded: f64 = (0..s.bins())
                .map(|b| {
                    let w = if b == 0 || (n % 2 == 0 && b == n / 2) { 1.0 } else { 2.0 };
                    w * (s.re[b].powi(2) + s.im[b].powi(2))
                })
                .sum::<f64>()
                / n as f64;
            parseval = parseval.max((folded - den).abs() / den);

            let mut spec = HalfSpectrum::zeros(n);
            for b in 0..spec.bins() {
                spec.re[b] = rng.random_range(-1.0..1.0);
                spec.im[b] = rng.random_range(-1.0..1.0);
            }
            for b in hermitian_real_bins(n) {
                spec.im[b] = 0.0;
            }
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs: f64 = irfft_axis(&spec).map_err(|e| e.to_string())?.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs = spec.dot(&irfft_adjoint(&y).map_err(|e| e.to_string())?);
            adjoint = adjoint.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }
    Ok((
        roundtrip < 1e-10 && parseval < 1e-9 && adjoint < 1e-10,
        format!("roundtrip {roundtrip:.1e}, parseval {parseval:.1e}, adjoint {adjoint:.1e}"),
    ))
}

fn toy_params(input: usize, outputs: usize, rng: &mut ChaCha8Rng) -> hyperfield::Result<MlpParams> {
    let mut p = MlpParams::init(&[input, 3, 3, 3, 3, outputs], rng.random())?;
    let last = p.layers() - 1;
    for l in 0..p.layers() {
        for b in p.bias_mut(l) {
            *b = if l == last { 1.0 } else { rng.random_range(0.1..0.5) };
        }
    }
    Ok(p)
}

/// Central differences at step `h`; partials whose one-sided slopes disagree
/// straddle a ReLU kink and are counted separately.
fn gradient_fidelity() -> Outcome {
    let run = || -> hyperfield::Result<(f64, usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut worst, mut checked, mut kinks) = (0.0_f64, 0usize, 0usize);
        for instance in 0..20u64 {
            let mode = if instance % 2 == 0 { FitMode::Slow } else { FitMode::Fast };
            let synth = SynthConfig {
                axes: default_axes(4, 3, 8, 5),
                noise_sigma: 0.05,
                seed: instance,
                ..SynthConfig::default()
            };
            let meas = SynthOracle::new(synth)?.measure(&SamplingPlan::exhaustive(4, 8, 1))?;
            let cfg = FitConfig {
                mode,
                seed: instance,
                ..FitConfig::default()
            };
            let problem = Problem::new(&meas, &cfg)?;
            let enc = TrainState::new(&cfg)?.encoder;
            let mut params = toy_params(enc.output_width(), mode.channels(), &mut rng)?;
            let objective = &problem.objective;
            let (base_loss, grad) = objective.total_loss(&params, &enc, Batch::All)?;
            let h = 1e-6;
            for i in 0..params.len() {
                let base = params.as_slice()[i];
                params.as_mut_slice()[i] = base + h;
                let up = objective.total_loss(&params, &enc, Batch::All)?.0.total;
                params.as_mut_slice()[i] = base - h;
                let down = objective.total_loss(&params, &enc, Batch::All)?.0.total;
                params.as_mut_slice()[i] = base;
                let fd = (up - down) / (2.0 * h);
                let forward = (up - base_loss.total) / h;
                let backward = (base_loss.total - down) / h;
                if (forward - backward).abs() > 1e-3 * fd.abs().max(1e-6) {
                    kinks += 1;
                    continue;
                }
                let g = grad.as_slice()[i];
                let diff = (g - fd).abs();
                if diff >= 1e-9 {
                    worst = worst.max(diff / g.abs().max(fd.abs()));
                }
                checked += 1;
            }
        }
        Ok((worst, checked, kinks))
    };
    let (worst, checked, kinks) = run().map_err(|e| e.to_string())?;
    Ok((
        worst < 1e-4 && checked > 10 * kinks,
        format!("{checked} partials, worst relative error {worst:.2e}, {kinks} straddling a kink"),
    ))
}

fn fit_convergence() -> Outcome {
    let run = || -> hyperfield::Result<f64> {
        let synth = SynthConfig {
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let [t2, _, t1, _] = synth.axes.clone().map(|a| a.count);
        let oracle = SynthOracle::new(synth)?;
        let meas = oracle.measure(&SamplingPlan::exhaustive(t2, t1, 1))?;
        let cfg = FitConfig {
            iterations: 20_000,
            profile_every: 4,
            ..FitConfig::default()
        };
        let problem = Problem::new(&meas, &cfg)?;
        let outcome = fit(&problem, &cfg, None)?;
        let rec = reconstruct(&problem, &outcome.state)?;
        let truth = hyperfield::dft::rfft_cube(oracle.truth())?;
        let peak = truth.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(spectrum_mse(&rec.freq, &truth)? / (peak * peak))
    };
    let rel = run().map_err(|e| e.to_string())?;
    Ok((rel < 1e-3, format!("MSE / peak² = {rel:.2e} after 20000 iterations")))
}

fn trend(name: &str) -> Outcome {
    let tc = TrendConfig::for_experiment(name).map_err(|e| e.to_string())?;
    let rep = run_experiment(name, &tc).map_err(|e| e.to_string())?;
    Ok((rep.pass, rep.summary_line()))
}

fn hyperfield_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out_dir = format!("output_dir={}", dir.display());
    let out = Command::new(env!("CARGO_BIN_EXE_hyperfield"))
        .args(args)
        .args(["--set", &out_dir, "--threads", "1"])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn determinism() -> Outcome {
    let t = tempfile::tempdir().map_err(|e| e.to_string())?;
    let small = [
        "--set", "synth.t2_count=6", "--set", "synth.x_count=4", "--set", "synth.t1_count=16",
        "--set", "synth.w3_count=8", "--set", "net.iterations=200",
    ];
    let mask = t.path().join("mask");
    let mut args = vec!["mask"];
    args.extend_from_slice(&small);
    hyperfield_cli(&mask, &args)?;
    let measured = mask.join("measured.hc1").display().to_string();
    let plan = mask.join("plan.txt").display().to_string();
    let first = t.path().join("fit");
    let mut args = vec!["fit", "--measured", &measured, "--plan", &plan];
    args.extend_from_slice(&small);
    hyperfield_cli(&first, &args)?;
    let saved = t.path().join("first");
    fs::rename(&first, &saved).map_err(|e| e.to_string())?;
    let manifest = saved.join("manifest.txt").display().to_string();
    hyperfield_cli(&first, &["fit", "--manifest", &manifest])?;
    let mut compared = 0;
    for entry in fs::read_dir(&saved).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let a = fs::read(saved.join(&name)).map_err(|e| e.to_string())?;
        let b = fs::read(first.join(&name)).map_err(|e| e.to_string())?;
        if a != b {
            return Ok((false, format!("{} differs after manifest replay", name.to_string_lossy())));
        }
        compared += 1;
    }
    Ok((compared >= 4, format!("{compared} files byte-identical after manifest replay")))
}

fn adaptive_trace() -> Outcome {
    let run = || -> hyperfield::Result<(Vec<f64>, Option<(usize, f64)>)> {
        let mut state = AdaptiveState::new(vec![0, 4, 8], vec![1.0, 5.0, 2.0], 1)?;
        let scores = state.interval_scores()?;
        Ok((scores, state.select_next()?))
    };
    let (scores, next) = run().map_err(|e| e.to_string())?;
    let ok = scores == [3.0, 3.5] && next == Some((6, 3.5));
    Ok((ok, format!("interval scores {scores:?}, next {next:?}")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("transform correctness", transform_correctness),
        ("gradient fidelity", gradient_fidelity),
        ("fit convergence", fit_convergence),
        ("noise robustness trend", || trend("sweep_repeats")),
        ("sampling interval trend", || trend("sweep_si")),
        ("t1 rate trend", || trend("sweep_t1_rate")),
        ("keep versus drop", || trend("keep_vs_drop")),
        ("adaptive sampling", || trend("adaptive_vs_baselines")),
        ("moment ablation", || trend("moment_ablation")),
        ("joint regime", || trend("joint_regime")),
        ("determinism", determinism),
        ("adaptive unit semantics", adaptive_trace),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:2} {name}: {} ({detail}) [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
