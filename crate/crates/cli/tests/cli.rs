use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hyperfield::hypercube::{load_hc1, Domain};

const SMALL: &[&str] = &[
    "--set",
    "synth.t2_count=5",
    "--set",
    "synth.x_count=3",
    "--set",
    "synth.t1_count=16",
    "--set",
    "synth.w3_count=12",
    "--set",
    "net.iterations=40",
    "--threads",
    "1",
];

fn hyperfield(dir: &Path, args: &[&str]) -> Output {
    let out_dir = format!("output_dir={}", dir.display());
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperfield"));
    cmd.arg(args[0]).args(SMALL).args(&args[1..]).args(["--set", &out_dir]);
    cmd.output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = hyperfield(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn manifest(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest.txt")).unwrap()
}

fn path(p: PathBuf) -> String {
    p.display().to_string()
}

/// `mask` then `fit` in separate directories; returns (mask dir, fit dir).
fn mask_and_fit(root: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let m = root.join("mask");
    let f = root.join("fit");
    let mut args = vec!["mask"];
    args.extend_from_slice(extra);
    ok(&m, &args);
    let measured = path(m.join("measured.hc1"));
    let plan = path(m.join("plan.txt"));
    let mut args = vec!["fit", "--measured", &measured, "--plan", &plan];
    args.extend_from_slice(extra);
    ok(&f, &args);
    (m, f)
}

#[test]
fn synth_writes_loadable_cubes_deterministically() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    ok(&a, &["synth", "--set", "seed=7"]);
    ok(&b, &["synth", "--set", "seed=7"]);
    let time = load_hc1(a.join("truth_time.hc1")).unwrap();
    assert_eq!(time.dims(), [5, 3, 16, 12]);
    assert_eq!(time.domain(), Domain::Time);
    let freq = load_hc1(a.join("truth_freq.hc1")).unwrap();
    assert_eq!(freq.dims(), [5, 3, 9, 12]);
    for f in ["truth_time.hc1", "truth_freq.hc1"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    assert!(manifest(&a).contains("run.output.truth_time.hc1.sha256 = "));
}

#[test]
fn bad_configuration_exits_with_usage_code() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(code(&hyperfield(t.path(), &["synth", "--set", "synth.colour=3"])), 2);
    assert_eq!(code(&hyperfield(t.path(), &["synth", "--set", "synth.peak0.f_osc=0.6"])), 2);
    assert_eq!(code(&hyperfield(t.path(), &["synth", "--set", "net.mode=fast"])), 2);
    let cfg = t.path().join("bad.toml");
    fs::write(&cfg, "[net]\nlearning_rate = 0.1\n").unwrap();
    assert_eq!(code(&hyperfield(t.path(), &["synth", "--config", &path(cfg)])), 2);
    assert_eq!(code(&hyperfield(t.path(), &["fit"])), 2);
}

#[test]
fn missing_input_file_exits_with_io_code() {
    let t = tempfile::tempdir().unwrap();
    let out = hyperfield(t.path(), &["fit", "--measured", "/nonexistent/m.hc1", "--plan", "/nonexistent/p.txt"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn config_file_keys_apply_and_flags_win() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.toml");
    fs::write(&cfg, "seed = 3\n[mask]\nsi = 2\nr = 4\n").unwrap();
    ok(t.path(), &["mask", "--config", &path(cfg), "--set", "mask.r=2"]);
    let m = manifest(t.path());
    assert!(m.contains("\nseed = 3\n"));
    assert!(m.contains("run.plan.t2_indices = [0, 2, 4]\n"));
    assert!(m.contains("run.plan.r = 2\n"));
}

#[test]
fn mask_with_stride_four_lists_the_progression() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["mask", "--set", "synth.t2_count=10", "--set", "mask.si=4"]);
    assert!(manifest(t.path()).contains("run.plan.t2_indices = [0, 4, 8]\n"));
}

#[test]
fn fit_outputs_and_checkpoint_reconstruction_agree() {
    let t = tempfile::tempdir().unwrap();
    let (m, f) = mask_and_fit(t.path(), &[]);
    for name in ["checkpoint.hfw", "loss_curve.csv", "recon_freq.hc1", "manifest.txt"] {
        assert!(f.join(name).exists(), "{name}");
    }
    let curve = fs::read_to_string(f.join("loss_curve.csv")).unwrap();
    assert!(curve.starts_with("iteration,total,mse,moment,mono,smooth\n"));
    let r = t.path().join("rec");
    let (ck, measured, plan) = (path(f.join("checkpoint.hfw")), path(m.join("measured.hc1")), path(m.join("plan.txt")));
    ok(&r, &["reconstruct", "--checkpoint", &ck, "--measured", &measured, "--plan", &plan]);
    assert_eq!(
        fs::read(f.join("recon_freq.hc1")).unwrap(),
        fs::read(r.join("recon_freq.hc1")).unwrap()
    );
}

#[test]
fn fast_mode_writes_time_reconstruction() {
    let t = tempfile::tempdir().unwrap();
    let (_, f) = mask_and_fit(
        t.path(),
        &["--set", "net.mode=fast", "--set", "net.channels=2", "--set", "mask.t1_policy=random", "--set", "mask.t1_rate=0.5"],
    );
    let time = load_hc1(f.join("recon_time.hc1")).unwrap();
    assert_eq!(time.dims(), [5, 3, 16, 12]);
    let freq = load_hc1(f.join("recon_freq.hc1")).unwrap();
    assert_eq!(freq.channels(), 2);
}

#[test]
fn diverging_fit_exits_with_numerical_code() {
    let t = tempfile::tempdir().unwrap();
    let m = t.path().join("mask");
    ok(&m, &["mask"]);
    let (measured, plan) = (path(m.join("measured.hc1")), path(m.join("plan.txt")));
    let out = hyperfield(
        &t.path().join("fit"),
        &["fit", "--measured", &measured, "--plan", &plan, "--set", "net.lr=1e300"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_of_identical_cubes_is_all_zero() {
    let t = tempfile::tempdir().unwrap();
    let s = t.path().join("s");
    ok(&s, &["synth"]);
    let truth = path(s.join("truth_freq.hc1"));
    let e = t.path().join("e");
    ok(&e, &["eval", "--pred", &truth, "--reference", &truth]);
    let report = fs::read_to_string(e.join("report.txt")).unwrap();
    for line in report.lines() {
        assert!(line.ends_with("= 0e0"), "{line}");
    }
    assert!(e.join("pred_profile.csv").exists());
}

#[test]
fn adaptive_with_zero_budget_matches_the_initial_fit() {
    let t = tempfile::tempdir().unwrap();
    let common = ["--set", "mask.t2_policy=list", "--set", "mask.t2_indices=0,1,3,4", "--set", "adaptive.budget=0"];
    let (_, f) = mask_and_fit(t.path(), &common);
    let s = t.path().join("s");
    ok(&s, &["synth"]);
    let e = t.path().join("e");
    let (pred, truth) = (path(f.join("recon_freq.hc1")), path(s.join("truth_freq.hc1")));
    ok(&e, &["eval", "--pred", &pred, "--reference", &truth]);
    let a = t.path().join("a");
    let mut args = vec!["adaptive"];
    args.extend_from_slice(&common);
    ok(&a, &args);
    let fields = |dir: &Path| -> (String, Vec<f64>) {
        let text = fs::read_to_string(dir.join("report.csv")).unwrap();
        let (header, row) = text.split_once('\n').unwrap();
        (header.to_string(), row.trim().split(',').map(|v| v.parse().unwrap()).collect())
    };
    let (fit_header, fit_values) = fields(&e);
    let (adaptive_header, adaptive_values) = fields(&a);
    assert_eq!(fit_header, adaptive_header);
    // the mask/fit path round-trips measurements through single-precision files
    for (f, ad) in fit_values.iter().zip(&adaptive_values) {
        assert!((f - ad).abs() <= 1e-5 * f.abs().max(ad.abs()), "{f} vs {ad}");
    }
    let history = fs::read_to_string(a.join("history.csv")).unwrap();
    assert_eq!(history, "round,t2_index,score,loss_after\n");
}

#[test]
fn adaptive_acquires_inside_sampled_intervals() {
    let t = tempfile::tempdir().unwrap();
    ok(
        t.path(),
        &["adaptive", "--set", "synth.t2_count=9", "--set", "adaptive.budget=3", "--set", "adaptive.round_iterations=10"],
    );
    let history = fs::read_to_string(t.path().join("history.csv")).unwrap();
    let acquired: Vec<usize> = history
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(acquired.len(), 3);
    assert!(hyperfield::trend::history_is_interior(&[0, 3, 5, 8], acquired));
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let t = tempfile::tempdir().unwrap();
    let (_, f) = mask_and_fit(t.path(), &[]);
    let saved = t.path().join("first");
    fs::rename(&f, &saved).unwrap();
    let mf = path(saved.join("manifest.txt"));
    let out = Command::new(env!("CARGO_BIN_EXE_hyperfield"))
        .args(["fit", "--manifest", &mf, "--threads", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for entry in fs::read_dir(&saved).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(saved.join(&name)).unwrap(), fs::read(f.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn manifest_from_another_command_is_rejected() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["synth"]);
    let mf = path(t.path().join("manifest.txt"));
    let out = hyperfield(t.path(), &["mask", "--manifest", &mf]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_count_falls_back_to_the_environment() {
    let t = tempfile::tempdir().unwrap();
    let out_dir = format!("output_dir={}", t.path().display());
    let out = Command::new(env!("CARGO_BIN_EXE_hyperfield"))
        .args(["synth", "--set", &out_dir, "--set", "synth.t2_count=3"])
        .env("HYPERFIELD_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(manifest(t.path()).contains("run.threads = 1\n"));
}
