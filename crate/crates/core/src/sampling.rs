//! Measurement masks, repeat policies, and the preprocessing applied before a
//! fit (weak-lobe rescaling and coordinate normalization).

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Error, Result};
use crate::hypercube::{AxisGrid, Domain, HyperCube};

/// Number of leading coherence-time samples a random `t1` mask always keeps.
pub const T1_FORCED_PREFIX: usize = 5;
/// Early indices removed by the drop-early strategy.
pub const T1_DROPPED: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyTag {
    UniformT2,
    RandomT1,
    Periodic,
    Adaptive,
    Custom,
}

impl PolicyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyTag::UniformT2 => "uniform_t2",
            PolicyTag::RandomT1 => "random_t1",
            PolicyTag::Periodic => "periodic",
            PolicyTag::Adaptive => "adaptive",
            PolicyTag::Custom => "custom",
        }
    }
}

impl fmt::Display for PolicyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform_t2" => PolicyTag::UniformT2,
            "random_t1" => PolicyTag::RandomT1,
            "periodic" => PolicyTag::Periodic,
            "adaptive" => PolicyTag::Adaptive,
            "custom" => PolicyTag::Custom,
            other => bail!(Argument, "unknown policy tag '{other}'"),
        })
    }
}

/// Which `(t1, t2)` grid indices are measured, and with how many repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPlan {
    pub t2_indices: Vec<usize>,
    pub t1_indices: Vec<usize>,
    pub r: u32,
    pub policy: PolicyTag,
}

impl SamplingPlan {
    pub fn new(t2_indices: Vec<usize>, t1_indices: Vec<usize>, r: u32, policy: PolicyTag) -> Result<Self> {
        let plan = Self {
            t2_indices,
            t1_indices,
            r,
            policy,
        };
        plan.check_sorted()?;
        Ok(plan)
    }

    /// Every grid point, measured `r` times.
    pub fn exhaustive(t2_count: usize, t1_count: usize, r: u32) -> Self {
        Self {
            t2_indices: (0..t2_count).collect(),
            t1_indices: (0..t1_count).collect(),
            r,
            policy: PolicyTag::Custom,
        }
    }

    fn check_sorted(&self) -> Result<()> {
        if self.r == 0 {
            bail!(Argument, "repeat count must be >= 1");
        }
        for (name, idx) in [("t2", &self.t2_indices), ("t1", &self.t1_indices)] {
            if idx.is_empty() {
                bail!(Argument, "{name} index set is empty");
            }
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                bail!(Argument, "{name} indices must be sorted and unique");
            }
        }
        Ok(())
    }

    /// Checks the plan against grid lengths.
    pub fn validate(&self, t2_count: usize, t1_count: usize) -> Result<()> {
        self.check_sorted()?;
        if let Some(&i) = self.t2_indices.last().filter(|&&i| i >= t2_count) {
            bail!(Argument, "t2 index {i} out of range for {t2_count} delays");
        }
        if let Some(&i) = self.t1_indices.last().filter(|&&i| i >= t1_count) {
            bail!(Argument, "t1 index {i} out of range for {t1_count} delays");
        }
        Ok(())
    }

    /// Serializes the plan as `key = value` lines (a TOML subset).
    pub fn to_text(&self) -> String {
        format!(
            "policy = \"{}\"\nr = {}\nt2_indices = {}\nt1_indices = {}\n",
            self.policy,
            self.r,
            index_list(&self.t2_indices),
            index_list(&self.t1_indices)
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut policy = None;
        let mut r = None;
        let mut t2 = None;
        let mut t1 = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("plan line {}: expected key = value", lineno + 1)))?;
            let value = value.trim();
            match key.trim() {
                "policy" => policy = Some(value.trim_matches('"').parse::<PolicyTag>()?),
                "r" => r = Some(value.parse::<u32>().map_err(|e| Error::Format(format!("plan r: {e}")))?),
                "t2_indices" => t2 = Some(parse_index_list(value)?),
                "t1_indices" => t1 = Some(parse_index_list(value)?),
                other => bail!(Format, "unknown plan key '{other}'"),
            }
        }
        let missing = |k: &str| Error::Format(format!("plan is missing '{k}'"));
        Self::new(
            t2.ok_or_else(|| missing("t2_indices"))?,
            t1.ok_or_else(|| missing("t1_indices"))?,
            r.ok_or_else(|| missing("r"))?,
            policy.ok_or_else(|| missing("policy"))?,
        )
    }
}

/// Sparse time-domain measurements on a `(t2, t1)` sub-grid.
///
/// Values are stored row-major over `(t2_sel, x, t1_sel, ω3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    axes: [AxisGrid; 4],
    t2_indices: Vec<usize>,
    t1_indices: Vec<usize>,
    r: u32,
    values: Vec<f64>,
}

impl Measurement {
    pub fn new(
        axes: [AxisGrid; 4],
        t2_indices: Vec<usize>,
        t1_indices: Vec<usize>,
        r: u32,
        values: Vec<f64>,
    ) -> Result<Self> {
        let plan = SamplingPlan::new(t2_indices, t1_indices, r.max(1), PolicyTag::Custom)?;
        plan.validate(axes[0].count, axes[2].count)?;
        let expected = plan.t2_indices.len() * axes[1].count * plan.t1_indices.len() * axes[3].count;
        if values.len() != expected {
            bail!(Shape, "measurement holds {} values, expected {expected}", values.len());
        }
        if values.iter().any(|v| !v.is_finite()) {
            bail!(Argument, "measurement contains non-finite values");
        }
        Ok(Self {
            axes,
            t2_indices: plan.t2_indices,
            t1_indices: plan.t1_indices,
            r,
            values,
        })
    }

    /// Restricts a dense time-domain cube to the points of `plan`.
    pub fn from_cube(cube: &HyperCube, plan: &SamplingPlan) -> Result<Self> {
        if cube.domain() != Domain::Time {
            bail!(Argument, "measurements are taken from time-domain cubes");
        }
        let [nt, nx, n1, nw] = cube.dims();
        plan.validate(nt, n1)?;
        let mut values = Vec::with_capacity(plan.t2_indices.len() * nx * plan.t1_indices.len() * nw);
        for &t in &plan.t2_indices {
            for x in 0..nx {
                for &a in &plan.t1_indices {
                    for w in 0..nw {
                        values.push(cube.get(t, x, a, w, 0));
                    }
                }
            }
        }
        Self::new(cube.axes().clone(), plan.t2_indices.clone(), plan.t1_indices.clone(), plan.r, values)
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

    pub fn repeats(&self) -> u32 {
        self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values per sampled delay: `x · |t1_sel| · ω3`.
    pub fn slice_len(&self) -> usize {
        self.axes[1].count * self.t1_indices.len() * self.axes[3].count
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let len = self.slice_len();
        &self.values[k * len..(k + 1) * len]
    }

    #[inline]
    pub fn get(&self, k: usize, x: usize, j: usize, w: usize) -> f64 {
        let (n_sel, nw) = (self.t1_indices.len(), self.axes[3].count);
        self.values[((k * self.axes[1].count + x) * n_sel + j) * nw + w]
    }

    pub fn is_full_t1(&self) -> bool {
        self.t1_indices.len() == self.axes[2].count
    }

    pub fn plan(&self, policy: PolicyTag) -> SamplingPlan {
        SamplingPlan {
            t2_indices: self.t2_indices.clone(),
            t1_indices: self.t1_indices.clone(),
            r: self.r,
            policy,
        }
    }

    /// Inserts the slice for a newly acquired delay, keeping delays sorted.
    pub fn insert_slice(&mut self, t2: usize, slice: Vec<f64>) -> Result<()> {
        if t2 >= self.axes[0].count {
            bail!(Argument, "t2 index {t2} out of range");
        }
        if slice.len() != self.slice_len() {
            bail!(Shape, "slice holds {} values, expected {}", slice.len(), self.slice_len());
        }
        let pos = match self.t2_indices.binary_search(&t2) {
            Ok(_) => bail!(Argument, "t2 index {t2} already measured"),
            Err(pos) => pos,
        };
        let len = self.slice_len();
        self.t2_indices.insert(pos, t2);
        self.values.splice(pos * len..pos * len, slice);
        Ok(())
    }

    /// Dense time-domain cube with zeros at unmeasured points.
    pub fn to_dense(&self) -> Result<HyperCube> {
        let mut cube = HyperCube::zeros(self.axes.clone(), Domain::Time, 1)?;
        let (nx, nw) = (self.axes[1].count, self.axes[3].count);
        for (k, &t) in self.t2_indices.iter().enumerate() {
            for x in 0..nx {
                for (j, &a) in self.t1_indices.iter().enumerate() {
                    for w in 0..nw {
                        cube.set(t, x, a, w, 0, self.get(k, x, j, w));
                    }
                }
            }
        }
        Ok(cube)
    }
}

pub fn index_list(indices: &[usize]) -> String {
    let body: Vec<String> = indices.iter().map(usize::to_string).collect();
    format!("[{}]", body.join(", "))
}

pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::Format(format!("expected [..] index list, got '{text}'")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|e| Error::Format(format!("bad index '{s}': {e}"))))
        .collect()
}

/// `{0, SI, 2·SI, ...}` below `t2_count`.
pub fn mask_t2_uniform(si: i64, t2_count: usize) -> Result<Vec<usize>> {
    if si <= 0 {
        bail!(Argument, "sampling interval must be positive, got {si}");
    }
    if t2_count == 0 {
        bail!(Argument, "empty t2 grid");
    }
    let si = si as usize;
    if si > 1 && si >= t2_count {
        bail!(Argument, "sampling interval {si} leaves a single delay on a {t2_count}-point grid");
    }
    Ok((0..t2_count).step_by(si).collect())
}

fn t1_total(rate: f64, t1_count: usize) -> Result<usize> {
    if !(rate > 0.0 && rate <= 1.0) {
        bail!(Argument, "t1 sampling rate must lie in (0, 1], got {rate}");
    }
    let total = (rate * t1_count as f64).round() as usize;
    if total < T1_FORCED_PREFIX + 1 || t1_count < T1_FORCED_PREFIX + 1 {
        bail!(
            Argument,
            "rate {rate} keeps {total} of {t1_count} samples, fewer than the {} forced indices",
            T1_FORCED_PREFIX + 1
        );
    }
    Ok(total)
}

/// Draws `amount` interior indices from `[lo, hi)` and merges them with `forced`.
fn draw_with_forced(forced: &[usize], lo: usize, hi: usize, amount: usize, seed: u64) -> Result<Vec<usize>> {
    let pool = hi.saturating_sub(lo);
    if amount > pool {
        bail!(Argument, "cannot draw {amount} indices from an interior of {pool}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = forced.to_vec();
    out.extend(sample(&mut rng, pool, amount).into_iter().map(|i| lo + i));
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Random `t1` mask that always keeps the first five and the last index.
pub fn mask_t1_random(rate: f64, t1_count: usize, seed: u64) -> Result<Vec<usize>> {
    let total = t1_total(rate, t1_count)?;
    let last = t1_count - 1;
    let mut forced: Vec<usize> = (0..T1_FORCED_PREFIX).collect();
    forced.push(last);
    draw_with_forced(&forced, T1_FORCED_PREFIX, last, total - forced.len(), seed)
}

/// Same sample count as [`mask_t1_random`], but indices 1, 2 and 3 are never kept.
pub fn mask_t1_drop_early(rate: f64, t1_count: usize, seed: u64) -> Result<Vec<usize>> {
    let total = t1_total(rate, t1_count)?;
    let last = t1_count - 1;
    let forced = [0, T1_FORCED_PREFIX - 1, last];
    draw_with_forced(&forced, T1_FORCED_PREFIX, last, total - forced.len(), seed)
}

/// Every `stride`-th index plus the forced prefix and the last index.
pub fn mask_t1_periodic(stride: usize, t1_count: usize) -> Result<Vec<usize>> {
    if stride == 0 {
        bail!(Argument, "stride must be positive");
    }
    if t1_count < T1_FORCED_PREFIX + 1 {
        bail!(Argument, "t1 grid of {t1_count} is shorter than the forced prefix");
    }
    let mut out: Vec<usize> = (0..t1_count)
        .filter(|&i| i < T1_FORCED_PREFIX || i % stride == 0 || i == t1_count - 1)
        .collect();
    out.dedup();
    Ok(out)
}

/// Scale applied to the weaker-signed lobe of a measurement set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleRecord {
    pub scale: f64,
    pub sign_of_weaker: f64,
}

impl RescaleRecord {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            sign_of_weaker: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        if v * self.sign_of_weaker > 0.0 {
            v * self.scale
        } else {
            v
        }
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        if v * self.sign_of_weaker > 0.0 {
            v / self.scale
        } else {
            v
        }
    }

    pub fn invert_in_place(&self, values: &mut [f64]) {
        if !self.is_identity() {
            values.iter_mut().for_each(|v| *v = self.invert(*v));
        }
    }
}

/// Multiplies the weaker-signed lobe so its peak magnitude matches the stronger one.
///
/// Lobes are assigned by sign using global extrema.
pub fn rescale_weak_lobe(values: &[f64]) -> (Vec<f64>, RescaleRecord) {
    let pos = values.iter().copied().filter(|&v| v > 0.0).fold(0.0_f64, f64::max);
    let neg = values.iter().copied().filter(|&v| v < 0.0).fold(0.0_f64, |m, v| m.max(-v));
    if pos == 0.0 && neg == 0.0 {
        log::warn!("weak-lobe rescale skipped: data is identically zero");
        return (values.to_vec(), RescaleRecord::identity());
    }
    if pos == 0.0 || neg == 0.0 || pos == neg {
        return (values.to_vec(), RescaleRecord::identity());
    }
    let record = if neg < pos {
        RescaleRecord {
            scale: pos / neg,
            sign_of_weaker: -1.0,
        }
    } else {
        RescaleRecord {
            scale: neg / pos,
            sign_of_weaker: 1.0,
        }
    };
    let out = values.iter().map(|&v| record.apply(v)).collect();
    (out, record)
}

/// Index `i` of an `n`-point axis mapped to `i / (n - 1)`, or 0 for `n = 1`.
#[inline]
pub fn normalize_index(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

/// Grid indices `(x, t2, ω1, ω3)` mapped into `[0, 1]⁴`.
pub fn normalize_coords(indices: [usize; 4], counts: [usize; 4]) -> [f64; 4] {
    std::array::from_fn(|d| normalize_index(indices[d], counts[d]))
}
