use std::io::Write;
use std::path::{Path, PathBuf};

use hyperfield::adaptive::{run_adaptive, Oracle, ReplayOracle};
use hyperfield::dft::rfft_cube;
use hyperfield::evalmetrics::{profile_metrics, spectrum_mse, unsampled_mse, EvalReport};
use hyperfield::hypercube::{load_hc1, reduce_box_mean, write_hc1, Domain, HyperCube};
use hyperfield::loss::find_peak_box;
use hyperfield::net::{load_checkpoint, write_checkpoint};
use hyperfield::sampling::{index_list, Measurement, PolicyTag, SamplingPlan};
use hyperfield::synth::SynthOracle;
use hyperfield::train::{fit, reconstruct, write_curve_csv, Problem, Reconstruction, TrainState};
use hyperfield::trend;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::Run;

fn write_cube(run: &mut Run, name: &str, cube: &HyperCube) -> CliResult<()> {
    run.output(name, |w| Ok(write_hc1(cube, w)?))?;
    Ok(())
}

fn write_plan(run: &mut Run, plan: &SamplingPlan) -> CliResult<()> {
    run.output("plan.txt", |w| Ok(w.write_all(plan.to_text().as_bytes())?))?;
    run.record("plan.t2_indices", index_list(&plan.t2_indices));
    run.record("plan.t1_indices", index_list(&plan.t1_indices));
    run.record("plan.r", plan.r.to_string());
    Ok(())
}

fn read_plan(path: &Path) -> CliResult<SamplingPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(SamplingPlan::from_text(&text)?)
}

fn load_cube(path: &Path) -> CliResult<HyperCube> {
    load_hc1(path).map_err(|e| match e {
        hyperfield::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => other.into(),
    })
}

fn to_freq(cube: HyperCube) -> CliResult<HyperCube> {
    Ok(match cube.domain() {
        Domain::Time => rfft_cube(&cube)?,
        Domain::Frequency => cube,
    })
}

fn write_reconstruction(run: &mut Run, rec: &Reconstruction) -> CliResult<()> {
    write_cube(run, "recon_freq.hc1", &rec.freq)?;
    if let Some(t) = &rec.time {
        write_cube(run, "recon_time.hc1", t)?;
    }
    Ok(())
}

fn load_measurement(run: &mut Run, measured: Option<PathBuf>, plan: Option<PathBuf>) -> CliResult<Measurement> {
    let mpath = run.input("measured", measured)?;
    let ppath = run.input("plan", plan)?;
    let cube = load_cube(&mpath)?;
    let plan = read_plan(&ppath)?;
    Ok(Measurement::from_cube(&cube, &plan)?)
}

/// Report of `pred` against `reference`, both in the frequency domain.
pub fn evaluate(pred: &HyperCube, reference: &HyperCube) -> CliResult<EvalReport> {
    let pm = profile_metrics(pred, reference)?;
    Ok(EvalReport {
        intensity_mse: pm.intensity_mse,
        mean_profile_mse: pm.mean_profile_mse,
        std_profile_mse: pm.std_profile_mse,
        spectrum_mse: spectrum_mse(pred, reference)?,
        unsampled_temporal_mse: None,
        manifest: None,
    })
}

fn write_report(run: &mut Run, report: &EvalReport) -> CliResult<()> {
    run.output("report.csv", |w| Ok(report.write_csv(w)?))?;
    run.output("report.txt", |w| Ok(report.write_kv(w)?))?;
    Ok(())
}

pub fn synth(cfg: &RunConfig, run: &mut Run) -> CliResult<()> {
    let oracle = SynthOracle::new(cfg.synth_config())?;
    write_cube(run, "truth_time.hc1", oracle.truth())?;
    write_cube(run, "truth_freq.hc1", &rfft_cube(oracle.truth())?)?;
    Ok(())
}

pub fn mask(cfg: &RunConfig, run: &mut Run, cube: Option<PathBuf>) -> CliResult<()> {
    let plan = cfg.plan()?;
    let meas = match cube {
        Some(p) => {
            let p = run.input("cube", Some(p))?;
            Measurement::from_cube(&load_cube(&p)?, &plan)?
        }
        None => SynthOracle::new(cfg.synth_config())?.measure(&plan)?,
    };
    write_plan(run, &plan)?;
    write_cube(run, "measured.hc1", &meas.to_dense()?)?;
    Ok(())
}

pub fn fit_cmd(cfg: &RunConfig, run: &mut Run, measured: Option<PathBuf>, plan: Option<PathBuf>) -> CliResult<()> {
    let meas = load_measurement(run, measured, plan)?;
    let fc = cfg.fit_config();
    let problem = Problem::new(&meas, &fc)?;
    let outcome = fit(&problem, &fc, None)?;
    run.output("checkpoint.hfw", |w| Ok(write_checkpoint(&outcome.state.params, w)?))?;
    run.output("loss_curve.csv", |w| Ok(write_curve_csv(&outcome.curve, w)?))?;
    run.record("final_loss", format!("{:e}", outcome.final_loss.total));
    write_reconstruction(run, &reconstruct(&problem, &outcome.state)?)
}

pub fn reconstruct_cmd(
    cfg: &RunConfig,
    run: &mut Run,
    checkpoint: Option<PathBuf>,
    measured: Option<PathBuf>,
    plan: Option<PathBuf>,
) -> CliResult<()> {
    let ck = run.input("checkpoint", checkpoint)?;
    let meas = load_measurement(run, measured, plan)?;
    let fc = cfg.fit_config();
    let problem = Problem::new(&meas, &fc)?;
    let state = TrainState::from_params(load_checkpoint(&ck)?, &fc)?;
    write_reconstruction(run, &reconstruct(&problem, &state)?)
}

fn adaptive_with<O: Oracle>(cfg: &RunConfig, run: &mut Run, oracle: &mut O, reference: &HyperCube) -> CliResult<()> {
    let plan = cfg.adaptive_plan()?;
    let fc = cfg.fit_config();
    let (state, history, rec) = run_adaptive(oracle, &plan, cfg.adaptive.budget, &fc, cfg.adaptive.round_iterations)?;
    let final_plan = SamplingPlan::new(history.sampled().to_vec(), plan.t1_indices.clone(), plan.r, PolicyTag::Adaptive)?;
    run.output("history.csv", |w| Ok(history.write_history_csv(w)?))?;
    write_plan(run, &final_plan)?;
    run.output("checkpoint.hfw", |w| Ok(write_checkpoint(&state.params, w)?))?;
    write_reconstruction(run, &rec)?;
    write_report(run, &evaluate(&rec.freq, reference)?)
}

pub fn adaptive(cfg: &RunConfig, run: &mut Run, replay: Option<PathBuf>) -> CliResult<()> {
    match replay {
        Some(p) => {
            let p = run.input("replay", Some(p))?;
            let cube = load_cube(&p)?;
            let reference = rfft_cube(&cube)?;
            adaptive_with(cfg, run, &mut ReplayOracle::new(cube)?, &reference)
        }
        None => {
            let mut oracle = SynthOracle::new(cfg.synth_config())?;
            let reference = rfft_cube(oracle.truth())?;
            adaptive_with(cfg, run, &mut oracle, &reference)
        }
    }
}

pub struct EvalInputs {
    pub pred: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub pred_time: Option<PathBuf>,
    pub plan: Option<PathBuf>,
}

pub fn eval(run: &mut Run, inputs: EvalInputs) -> CliResult<()> {
    let pred = to_freq(load_cube(&run.input("pred", inputs.pred)?)?)?;
    let ref_cube = load_cube(&run.input("reference", inputs.reference)?)?;
    let ref_time = (ref_cube.domain() == Domain::Time).then(|| ref_cube.clone());
    let reference = to_freq(ref_cube)?;
    let mut report = evaluate(&pred, &reference)?;
    if inputs.pred_time.is_some() || inputs.plan.is_some() {
        let pt = load_cube(&run.input("pred_time", inputs.pred_time)?)?;
        let plan = read_plan(&run.input("plan", inputs.plan)?)?;
        let rt = ref_time.ok_or_else(|| CliError::Usage("unsampled error needs a time-domain reference".into()))?;
        report.unsampled_temporal_mse = Some(unsampled_mse(&pt, &rt, &plan.t2_indices, &plan.t1_indices)?);
    }
    write_report(run, &report)?;
    let bx = find_peak_box(&reference)?;
    run.record("peak_box", format!("w1 {:?} w3 {:?}", bx.w1, bx.w3));
    for (name, cube) in [("pred_profile.csv", &pred), ("reference_profile.csv", &reference)] {
        let prof = reduce_box_mean(cube, &bx)?;
        run.output(name, |w| Ok(prof.write_csv(cube.t2_axis(), cube.x_axis(), w)?))?;
    }
    Ok(())
}

pub fn report(cfg: &RunConfig, run: &mut Run) -> CliResult<()> {
    let mut lines = Vec::new();
    for name in &cfg.eval.trends {
        let rep = trend::run_experiment(name, &cfg.trend_config(name)?)?;
        run.output(&format!("{name}.csv"), |w| Ok(rep.write_csv(w)?))?;
        lines.push(rep.summary_line());
    }
    run.output("summary.txt", |w| {
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })?;
    Ok(())
}
