//! Run configuration: defaults, TOML files, manifests and `--set` overrides,
//! all reduced to flat dotted keys.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hyperfield::adaptive::initial_t2;
use hyperfield::loss::LossWeights;
use hyperfield::sampling::{
    mask_t1_drop_early, mask_t1_periodic, mask_t1_random, mask_t2_uniform, parse_index_list, PolicyTag, SamplingPlan,
};
use hyperfield::synth::{default_axes, default_peaks, stream_key, PeakSpec, SynthConfig};
use hyperfield::train::{EncoderSpec, FitConfig};
use hyperfield::trend::{TrendConfig, EXPERIMENTS};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum T2Policy {
    Uniform,
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum T1Policy {
    Full,
    Random,
    DropEarly,
    Periodic,
    List,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskConfig {
    pub t2_policy: T2Policy,
    pub si: i64,
    pub t2_indices: Vec<usize>,
    pub t1_policy: T1Policy,
    pub t1_rate: f64,
    pub t1_stride: usize,
    pub t1_indices: Vec<usize>,
    pub r: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub budget: usize,
    pub initial_interior: usize,
    pub round_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub trends: Vec<String>,
    pub trend_seeds: usize,
    pub preset: TrendPreset,
}

/// Where `report` takes its grids and training settings from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendPreset {
    /// Built-in per-experiment desk configurations.
    Desk,
    /// The run's own `synth.*`, `net.*`, `loss.*` and `mask.r` settings.
    Config,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub synth: SynthConfig,
    pub mask: MaskConfig,
    pub fit: FitConfig,
    pub channels: usize,
    pub adaptive: AdaptiveConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            synth: SynthConfig::default(),
            mask: MaskConfig {
                t2_policy: T2Policy::Uniform,
                si: 1,
                t2_indices: Vec::new(),
                t1_policy: T1Policy::Full,
                t1_rate: 0.6,
                t1_stride: 2,
                t1_indices: Vec::new(),
                r: 1,
            },
            fit: FitConfig {
                iterations: 5000,
                ..FitConfig::default()
            },
            channels: 1,
            adaptive: AdaptiveConfig {
                budget: 4,
                initial_interior: 2,
                round_iterations: 1000,
            },
            eval: EvalConfig {
                trends: EXPERIMENTS.iter().map(|s| s.to_string()).collect(),
                trend_seeds: 5,
                preset: TrendPreset::Desk,
            },
        }
    }
}

const PEAK_FIELDS: [&str; 10] = [
    "amplitude",
    "f_osc",
    "t1_decay",
    "t2_decay",
    "w3_center",
    "w3_width",
    "x_center0",
    "x_sigma0",
    "diffusion",
    "phase",
];

fn peak_field<'a>(p: &'a mut PeakSpec, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "amplitude" => &mut p.amplitude,
        "f_osc" => &mut p.f_osc,
        "t1_decay" => &mut p.t1_decay,
        "t2_decay" => &mut p.t2_decay,
        "w3_center" => &mut p.w3_center,
        "w3_width" => &mut p.w3_width,
        "x_center0" => &mut p.x_center0,
        "x_sigma0" => &mut p.x_sigma0,
        "diffusion" => &mut p.diffusion,
        "phase" => &mut p.phase,
        _ => return None,
    })
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_list(key: &str, value: &str) -> CliResult<Vec<usize>> {
    let v = value.trim();
    let bracketed = if v.starts_with('[') { v.to_string() } else { format!("[{v}]") };
    parse_index_list(&bracketed).map_err(|e| CliError::Usage(format!("{key}: {e}")))
}

fn list_text(v: &[usize]) -> String {
    hyperfield::sampling::index_list(v)
}

impl RunConfig {
    /// Applies one dotted key; unknown keys are usage errors.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let unknown = || CliError::Usage(format!("unknown configuration key '{key}'"));
        let axis = |i: usize, cfg: &mut Self| -> CliResult<()> {
            let n: usize = parse(key, value)?;
            let [t2, x, t1, w3] = [0, 1, 2, 3].map(|k| cfg.synth.axes[k].count);
            let mut counts = [t2, x, t1, w3];
            counts[i] = n;
            cfg.synth.axes = default_axes(counts[0], counts[1], counts[2], counts[3]);
            Ok(())
        };
        match key {
            "seed" => self.seed = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "synth.t2_count" => axis(0, self)?,
            "synth.x_count" => axis(1, self)?,
            "synth.t1_count" => axis(2, self)?,
            "synth.w3_count" => axis(3, self)?,
            "synth.noise_sigma" => self.synth.noise_sigma = parse(key, value)?,
            "synth.peaks" => {
                let n: usize = parse(key, value)?;
                let defaults = default_peaks();
                if n == 0 || n > defaults.len() {
                    return Err(CliError::Usage(format!("synth.peaks must lie in [1, {}]", defaults.len())));
                }
                self.synth.peaks.resize_with(n, || defaults[n - 1].clone());
            }
            "mask.t2_policy" => {
                self.mask.t2_policy = match value.trim() {
                    "uniform" => T2Policy::Uniform,
                    "list" => T2Policy::List,
                    other => return Err(CliError::Usage(format!("mask.t2_policy: unknown policy '{other}'"))),
                }
            }
            "mask.si" => self.mask.si = parse(key, value)?,
            "mask.t2_indices" => self.mask.t2_indices = parse_list(key, value)?,
            "mask.t1_policy" => {
                self.mask.t1_policy = match value.trim() {
                    "full" => T1Policy::Full,
                    "random" => T1Policy::Random,
                    "drop_early" => T1Policy::DropEarly,
                    "periodic" => T1Policy::Periodic,
                    "list" => T1Policy::List,
                    other => return Err(CliError::Usage(format!("mask.t1_policy: unknown policy '{other}'"))),
                }
            }
            "mask.t1_rate" => self.mask.t1_rate = parse(key, value)?,
            "mask.t1_stride" => self.mask.t1_stride = parse(key, value)?,
            "mask.t1_indices" => self.mask.t1_indices = parse_list(key, value)?,
            "mask.r" => self.mask.r = parse(key, value)?,
            "net.mode" => self.fit.mode = value.trim().parse().map_err(|e| CliError::Usage(format!("{key}: {e}")))?,
            "net.channels" => self.channels = parse(key, value)?,
            "net.iterations" => self.fit.iterations = parse(key, value)?,
            "net.lr" => self.fit.lr = parse(key, value)?,
            "net.eps" => self.fit.eps = parse(key, value)?,
            "net.batch_size" => self.fit.batch_size = parse(key, value)?,
            "net.encoder" => {
                self.fit.encoder = match (value.trim(), self.fit.encoder) {
                    ("identity", _) => EncoderSpec::Identity,
                    ("fourier", EncoderSpec::Fourier { m, sigma }) => EncoderSpec::Fourier { m, sigma },
                    ("fourier", EncoderSpec::Identity) => EncoderSpec::Fourier { m: 16, sigma: 1.0 },
                    (other, _) => return Err(CliError::Usage(format!("net.encoder: unknown encoder '{other}'"))),
                }
            }
            "net.fourier_m" | "net.fourier_sigma" => {
                let EncoderSpec::Fourier { m, sigma } = &mut self.fit.encoder else {
                    return Err(CliError::Usage(format!("{key} needs net.encoder = fourier first")));
                };
                match key {
                    "net.fourier_m" => *m = parse(key, value)?,
                    _ => *sigma = parse(key, value)?,
                }
            }
            "net.profile_every" => self.fit.profile_every = parse(key, value)?,
            "net.warmup" => self.fit.warmup = parse(key, value)?,
            "net.curve_every" => self.fit.curve_every = parse(key, value)?,
            "net.rescale" => self.fit.rescale = parse(key, value)?,
            "loss.mse" => self.fit.weights.mse = parse(key, value)?,
            "loss.moment" => self.fit.weights.moment = parse(key, value)?,
            "loss.mono" => self.fit.weights.mono = parse(key, value)?,
            "loss.smooth" => self.fit.weights.smooth = parse(key, value)?,
            "loss.delta" => self.fit.weights.delta = parse(key, value)?,
            "loss.gamma" => self.fit.weights.gamma = parse(key, value)?,
            "adaptive.budget" => self.adaptive.budget = parse(key, value)?,
            "adaptive.initial_interior" => self.adaptive.initial_interior = parse(key, value)?,
            "adaptive.round_iterations" => self.adaptive.round_iterations = parse(key, value)?,
            "eval.trends" => {
                let names: Vec<String> = value
                    .trim()
                    .trim_matches(|c| c == '[' || c == ']')
                    .split(',')
                    .map(|s| s.trim().trim_matches('"').to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if let Some(bad) = names.iter().find(|n| !EXPERIMENTS.contains(&n.as_str())) {
                    return Err(CliError::Usage(format!("eval.trends: unknown experiment '{bad}'")));
                }
                self.eval.trends = names;
            }
            "eval.trend_seeds" => self.eval.trend_seeds = parse(key, value)?,
            "eval.preset" => {
                self.eval.preset = match value.trim() {
                    "desk" => TrendPreset::Desk,
                    "config" => TrendPreset::Config,
                    other => return Err(CliError::Usage(format!("eval.preset: expected desk or config, got '{other}'"))),
                }
            }
            _ => {
                let rest = key.strip_prefix("synth.peak").ok_or_else(unknown)?;
                let (idx, field) = rest.split_once('.').ok_or_else(unknown)?;
                let i: usize = idx.parse().map_err(|_| unknown())?;
                let peak = self.synth.peaks.get_mut(i).ok_or_else(unknown)?;
                *peak_field(peak, field).ok_or_else(unknown)? = parse(key, value)?;
            }
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut e: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| e.push((k.to_string(), v));
        push("seed", self.seed.to_string());
        push("output_dir", self.output_dir.display().to_string());
        let a = &self.synth.axes;
        push("synth.t2_count", a[0].count.to_string());
        push("synth.x_count", a[1].count.to_string());
        push("synth.t1_count", a[2].count.to_string());
        push("synth.w3_count", a[3].count.to_string());
        push("synth.noise_sigma", self.synth.noise_sigma.to_string());
        push("synth.peaks", self.synth.peaks.len().to_string());
        for (i, p) in self.synth.peaks.iter().enumerate() {
            let mut p = p.clone();
            for f in PEAK_FIELDS {
                let v = *peak_field(&mut p, f).expect("known field");
                push(&format!("synth.peak{i}.{f}"), v.to_string());
            }
        }
        let m = &self.mask;
        push(
            "mask.t2_policy",
            match m.t2_policy {
                T2Policy::Uniform => "uniform",
                T2Policy::List => "list",
            }
            .into(),
        );
        push("mask.si", m.si.to_string());
        push("mask.t2_indices", list_text(&m.t2_indices));
        push(
            "mask.t1_policy",
            match m.t1_policy {
                T1Policy::Full => "full",
                T1Policy::Random => "random",
                T1Policy::DropEarly => "drop_early",
                T1Policy::Periodic => "periodic",
                T1Policy::List => "list",
            }
            .into(),
        );
        push("mask.t1_rate", m.t1_rate.to_string());
        push("mask.t1_stride", m.t1_stride.to_string());
        push("mask.t1_indices", list_text(&m.t1_indices));
        push("mask.r", m.r.to_string());
        let f = &self.fit;
        push("net.mode", f.mode.to_string());
        push("net.channels", self.channels.to_string());
        push("net.iterations", f.iterations.to_string());
        push("net.lr", f.lr.to_string());
        push("net.eps", f.eps.to_string());
        push("net.batch_size", f.batch_size.to_string());
        match f.encoder {
            EncoderSpec::Identity => push("net.encoder", "identity".into()),
            EncoderSpec::Fourier { m, sigma } => {
                push("net.encoder", "fourier".into());
                push("net.fourier_m", m.to_string());
                push("net.fourier_sigma", sigma.to_string());
            }
        }
        push("net.profile_every", f.profile_every.to_string());
        push("net.warmup", f.warmup.to_string());
        push("net.curve_every", f.curve_every.to_string());
        push("net.rescale", f.rescale.to_string());
        let w: LossWeights = f.weights;
        push("loss.mse", w.mse.to_string());
        push("loss.moment", w.moment.to_string());
        push("loss.mono", w.mono.to_string());
        push("loss.smooth", w.smooth.to_string());
        push("loss.delta", w.delta.to_string());
        push("loss.gamma", w.gamma.to_string());
        push("adaptive.budget", self.adaptive.budget.to_string());
        push("adaptive.initial_interior", self.adaptive.initial_interior.to_string());
        push("adaptive.round_iterations", self.adaptive.round_iterations.to_string());
        push("eval.trends", self.eval.trends.join(","));
        push("eval.trend_seeds", self.eval.trend_seeds.to_string());
        let preset = match self.eval.preset {
            TrendPreset::Desk => "desk",
            TrendPreset::Config => "config",
        };
        push("eval.preset", preset.to_string());
        e
    }

    /// Consistency checks shared by every command.
    pub fn validate(&self) -> CliResult<()> {
        self.synth.validate()?;
        if self.channels != self.fit.mode.channels() {
            return Err(CliError::Usage(format!(
                "net.mode = {} needs net.channels = {}, got {}",
                self.fit.mode,
                self.fit.mode.channels(),
                self.channels
            )));
        }
        if self.mask.r == 0 {
            return Err(CliError::Usage("mask.r must be at least 1".into()));
        }
        self.fit.validate()?;
        Ok(())
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            seed: self.seed,
            ..self.fit.clone()
        }
    }

    pub fn t1_mask(&self) -> CliResult<Vec<usize>> {
        let n1 = self.synth.axes[2].count;
        let seed = stream_key(self.seed, 0, 0, 3);
        let m = &self.mask;
        Ok(match m.t1_policy {
            T1Policy::Full => (0..n1).collect(),
            T1Policy::Random => mask_t1_random(m.t1_rate, n1, seed)?,
            T1Policy::DropEarly => mask_t1_drop_early(m.t1_rate, n1, seed)?,
            T1Policy::Periodic => mask_t1_periodic(m.t1_stride, n1)?,
            T1Policy::List => m.t1_indices.clone(),
        })
    }

    fn t1_tag(&self) -> PolicyTag {
        match self.mask.t1_policy {
            T1Policy::Random | T1Policy::DropEarly => PolicyTag::RandomT1,
            T1Policy::Periodic => PolicyTag::Periodic,
            T1Policy::Full => PolicyTag::UniformT2,
            T1Policy::List => PolicyTag::Custom,
        }
    }

    /// Plan described by the `mask.*` keys.
    pub fn plan(&self) -> CliResult<SamplingPlan> {
        let nt = self.synth.axes[0].count;
        let (t2, tag) = match self.mask.t2_policy {
            T2Policy::Uniform => (mask_t2_uniform(self.mask.si, nt)?, self.t1_tag()),
            T2Policy::List => (self.mask.t2_indices.clone(), PolicyTag::Custom),
        };
        Ok(SamplingPlan::new(t2, self.t1_mask()?, self.mask.r, tag)?)
    }

    /// Initial plan of an adaptive run: endpoints plus evenly spaced interior delays.
    pub fn adaptive_plan(&self) -> CliResult<SamplingPlan> {
        let nt = self.synth.axes[0].count;
        let t2 = initial_t2(nt, self.adaptive.initial_interior)?;
        Ok(SamplingPlan::new(t2, self.t1_mask()?, self.mask.r, PolicyTag::Adaptive)?)
    }

    /// Settings for experiment `name`; keep-vs-drop always uses at least ten seeds.
    pub fn trend_config(&self, name: &str) -> CliResult<TrendConfig> {
        let mut tc = match self.eval.preset {
            TrendPreset::Desk => TrendConfig::for_experiment(name)?,
            TrendPreset::Config => TrendConfig {
                synth: self.synth_config(),
                fit: self.fit_config(),
                seeds: Vec::new(),
                repeats: self.mask.r,
                round_iterations: self.adaptive.round_iterations,
            },
        };
        let n = match name {
            "keep_vs_drop" => self.eval.trend_seeds.max(10),
            _ => self.eval.trend_seeds,
        };
        tc.seeds = (0..n as u64).map(|s| s + self.seed).collect();
        Ok(tc)
    }
}

/// Flat `key -> value` pairs from a TOML document; nested tables become dotted keys.
pub fn flatten_toml(text: &str) -> CliResult<Vec<(String, String)>> {
    let table: toml::Table = text.parse().map_err(|e| CliError::Usage(format!("config: {e}")))?;
    let mut out = Vec::new();
    flatten_into("", &toml::Value::Table(table), &mut out)?;
    Ok(out)
}

fn flatten_into(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) -> CliResult<()> {
    let scalar = |v: &toml::Value| -> CliResult<String> {
        Ok(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            other => return Err(CliError::Usage(format!("{prefix}: unsupported value {other}"))),
        })
    };
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&key, v, out)?;
            }
        }
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<CliResult<Vec<_>>>()?;
            out.push((prefix.to_string(), parts.join(",")));
        }
        v => out.push((prefix.to_string(), scalar(v)?)),
    }
    Ok(())
}

/// Flat `key = value` lines of a manifest.
pub fn parse_manifest(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| CliError::Usage(format!("manifest line {}: expected 'key = value'", n + 1)))?;
        out.push((k.trim().to_string(), v.to_string()));
    }
    Ok(out)
}

/// Config sources merged in precedence order: manifest, config file, `--set`.
#[derive(Debug, Default)]
pub struct Sources {
    pub manifest: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
}

/// Resolved config plus the `run.*` metadata of a replayed manifest.
#[derive(Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub recorded: BTreeMap<String, String>,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn load(src: &Sources) -> CliResult<Loaded> {
    let mut cfg = RunConfig::default();
    let mut recorded = BTreeMap::new();
    if let Some(p) = &src.manifest {
        for (k, v) in parse_manifest(&read(p)?)? {
            if k.starts_with("run.") {
                recorded.insert(k, v);
            } else {
                cfg.set(&k, &v)?;
            }
        }
    }
    if let Some(p) = &src.config {
        for (k, v) in flatten_toml(&read(p)?)? {
            cfg.set(&k, &v)?;
        }
    }
    for o in &src.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{o}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(Loaded { config: cfg, recorded })
}
