//! Reconstruction quality metrics and the non-learned interpolation baselines.

use std::f64::consts::PI;
use std::io::Write;

use crate::dft::{bin_count, frequency_axis, RealDft};
use crate::error::{bail, Result};
use crate::hypercube::{reduce_box_mean, Domain, HyperCube, SpectralBox};
use crate::loss::{find_peak_box, profile_moments};
use crate::sampling::{normalize_index, Measurement};

/// Scalar quality figures of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub intensity_mse: f64,
    pub mean_profile_mse: f64,
    pub std_profile_mse: f64,
    pub spectrum_mse: f64,
    /// Time-domain error off the sampled `(t2, t1)` grid, when a time cube exists.
    pub unsampled_temporal_mse: Option<f64>,
    /// Digest or path of the run manifest the report belongs to.
    pub manifest: Option<String>,
}

impl EvalReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("intensity_mse", format!("{:e}", self.intensity_mse)),
            ("mean_profile_mse", format!("{:e}", self.mean_profile_mse)),
            ("std_profile_mse", format!("{:e}", self.std_profile_mse)),
            ("spectrum_mse", format!("{:e}", self.spectrum_mse)),
        ];
        if let Some(v) = self.unsampled_temporal_mse {
            out.push(("unsampled_temporal_mse", format!("{v:e}")));
        }
        if let Some(m) = &self.manifest {
            out.push(("manifest", m.clone()));
        }
        out
    }

    /// Header row plus one value row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let f = self.fields();
        let names: Vec<&str> = f.iter().map(|(k, _)| *k).collect();
        let values: Vec<&str> = f.iter().map(|(_, v)| v.as_str()).collect();
        writeln!(out, "{}", names.join(","))?;
        writeln!(out, "{}", values.join(","))?;
        Ok(())
    }

    /// One `key = value` line per field.
    pub fn write_kv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in self.fields() {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// The three box-projected profile metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileMetrics {
    pub intensity_mse: f64,
    pub mean_profile_mse: f64,
    pub std_profile_mse: f64,
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn check_pair(pred: &HyperCube, reference: &HyperCube) -> Result<()> {
    if pred.dims() != reference.dims() {
        bail!(Argument, "cube shapes {:?} and {:?} differ", pred.dims(), reference.dims());
    }
    if pred.domain() != reference.domain() {
        bail!(Argument, "cubes are in different domains");
    }
    Ok(())
}

/// Per-`t2` mean magnitude of channel 0 inside `bx`, averaged over `x`.
pub fn intensity_profile(cube: &HyperCube, bx: &SpectralBox) -> Result<Vec<f64>> {
    let [nt, nx, nw1, nw3] = cube.dims();
    if bx.is_empty() || bx.w1.end > nw1 || bx.w3.end > nw3 {
        bail!(Argument, "bounding box {bx:?} does not fit the cube");
    }
    let norm = 1.0 / (bx.len() * nx) as f64;
    Ok((0..nt)
        .map(|t| {
            let mut acc = 0.0;
            for x in 0..nx {
                for a in bx.w1.clone() {
                    for b in bx.w3.clone() {
                        acc += cube.get(t, x, a, b, 0).abs();
                    }
                }
            }
            acc * norm
        })
        .collect())
}

/// Intensity, mean-position and spread profile errors of `pred` against
/// `reference`, both evaluated in the reference's peak box.
pub fn profile_metrics(pred: &HyperCube, reference: &HyperCube) -> Result<ProfileMetrics> {
    check_pair(pred, reference)?;
    if reference.domain() != Domain::Frequency {
        bail!(Argument, "profile metrics need frequency-domain cubes");
    }
    let bx = find_peak_box(reference)?;
    profile_metrics_in_box(pred, reference, &bx)
}

/// As [`profile_metrics`] with an explicit box.
pub fn profile_metrics_in_box(pred: &HyperCube, reference: &HyperCube, bx: &SpectralBox) -> Result<ProfileMetrics> {
    check_pair(pred, reference)?;
    let intensity_mse = mse(&intensity_profile(pred, bx)?, &intensity_profile(reference, bx)?);
    let nx = reference.dims()[1];
    let x: Vec<f64> = (0..nx).map(|i| normalize_index(i, nx)).collect();
    let mp = profile_moments(&reduce_box_mean(pred, bx)?, &x)?;
    let mr = profile_moments(&reduce_box_mean(reference, bx)?, &x)?;
    let keep: Vec<usize> = (0..mp.valid.len()).filter(|&t| mp.valid[t] && mr.valid[t]).collect();
    if keep.is_empty() {
        bail!(Degenerate, "no t2 column has well-defined moments in both cubes");
    }
    let pick = |v: &[f64]| keep.iter().map(|&t| v[t]).collect::<Vec<_>>();
    Ok(ProfileMetrics {
        intensity_mse,
        mean_profile_mse: mse(&pick(&mp.mu), &pick(&mr.mu)),
        std_profile_mse: mse(&pick(&mp.sigma), &pick(&mr.sigma)),
    })
}

/// MSE of channel 0 over the whole cube.
pub fn spectrum_mse(pred: &HyperCube, reference: &HyperCube) -> Result<f64> {
    check_pair(pred, reference)?;
    let [nt, nx, na, nw] = pred.dims();
    let mut acc = 0.0;
    for t in 0..nt {
        for x in 0..nx {
            for a in 0..na {
                for w in 0..nw {
                    let d = pred.get(t, x, a, w, 0) - reference.get(t, x, a, w, 0);
                    acc += d * d;
                }
            }
        }
    }
    Ok(acc / (nt * nx * na * nw) as f64)
}

/// MSE over the entries whose `mask` flag is `false`.
pub fn mse_outside(pred: &[f64], reference: &[f64], mask: &[bool]) -> Result<f64> {
    if pred.len() != reference.len() || pred.len() != mask.len() {
        bail!(Argument, "value and mask lengths differ");
    }
    let (mut acc, mut n) = (0.0, 0usize);
    for ((p, r), &m) in pred.iter().zip(reference).zip(mask) {
        if !m {
            acc += (p - r) * (p - r);
            n += 1;
        }
    }
    if n == 0 {
        bail!(Argument, "mask covers every point; nothing left to evaluate");
    }
    Ok(acc / n as f64)
}

/// Time-domain MSE over grid points outside the sampled `(t2, t1)` lattice.
pub fn unsampled_mse(pred: &HyperCube, reference: &HyperCube, t2_mask: &[usize], t1_mask: &[usize]) -> Result<f64> {
    check_pair(pred, reference)?;
    if reference.domain() != Domain::Time {
        bail!(Argument, "unsampled error is measured in the time domain");
    }
    let [nt, nx, n1, nw] = pred.dims();
    if t2_mask.iter().any(|&t| t >= nt) || t1_mask.iter().any(|&j| j >= n1) {
        bail!(Argument, "mask index outside the grid");
    }
    let mut in_t2 = vec![false; nt];
    t2_mask.iter().for_each(|&t| in_t2[t] = true);
    let mut in_t1 = vec![false; n1];
    t1_mask.iter().for_each(|&j| in_t1[j] = true);
    let (mut p, mut r, mut m) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..nt {
        for x in 0..nx {
            for j in 0..n1 {
                for w in 0..nw {
                    p.push(pred.get(t, x, j, w, 0));
                    r.push(reference.get(t, x, j, w, 0));
                    m.push(in_t2[t] && in_t1[j]);
                }
            }
        }
    }
    mse_outside(&p, &r, &m)
}

/// Piecewise-linear interpolation of `values` known at sorted `positions`
/// onto `0..n`; points beyond the outer samples take the nearest sample.
pub fn interp_linear(positions: &[usize], values: &[f64], n: usize) -> Result<Vec<f64>> {
    if positions.is_empty() || positions.len() != values.len() {
        bail!(Argument, "interpolation needs matching, non-empty samples");
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        bail!(Argument, "sample positions must be strictly increasing");
    }
    let mut out = vec![0.0; n];
    let mut seg = 0;
    for (i, o) in out.iter_mut().enumerate() {
        if i <= positions[0] {
            *o = values[0];
            continue;
        }
        if i >= *positions.last().expect("non-empty") {
            *o = *values.last().expect("non-empty");
            continue;
        }
        while positions[seg + 1] < i {
            seg += 1;
        }
        let (a, b) = (positions[seg], positions[seg + 1]);
        let w = (i - a) as f64 / (b - a) as f64;
        *o = values[seg] * (1.0 - w) + values[seg + 1] * w;
    }
    Ok(out)
}

/// Fills every `t2` of a cube by linear interpolation along `t2` between the
/// `sampled` slices of `sparse`, fiber by fiber.
pub fn baseline_linear_t2(sparse: &HyperCube, sampled: &[usize]) -> Result<HyperCube> {
    if sampled.len() < 2 {
        bail!(Argument, "linear interpolation needs at least two sampled delays");
    }
    let [nt, nx, na, nw] = sparse.dims();
    if sampled.iter().any(|&t| t >= nt) {
        bail!(Argument, "sampled delay outside the grid");
    }
    let c = sparse.channels();
    let mut out = sparse.clone();
    let mut vals = vec![0.0; sampled.len()];
    for x in 0..nx {
        for a in 0..na {
            for w in 0..nw {
                for ch in 0..c {
                    for (v, &t) in vals.iter_mut().zip(sampled) {
                        *v = sparse.get(t, x, a, w, ch);
                    }
                    for (t, v) in interp_linear(sampled, &vals, nt)?.into_iter().enumerate() {
                        out.set(t, x, a, w, ch, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Interpolation control for sparse measurements: linear along `t1` over the
/// sampled points, transform to `ω1`, then linear along `t2`. Returns a
/// two-channel frequency cube.
pub fn baseline_linear(meas: &Measurement) -> Result<HyperCube> {
    let axes = meas.axes();
    let (nx, n1, nw) = (axes[1].count, axes[2].count, axes[3].count);
    let bins = bin_count(n1);
    let plan = RealDft::new(n1)?;
    let freq_axes = [axes[0].clone(), axes[1].clone(), frequency_axis(&axes[2]), axes[3].clone()];
    let mut sparse = HyperCube::zeros(freq_axes, Domain::Frequency, 2)?;
    let t1 = meas.t1_indices();
    let mut vals = vec![0.0; t1.len()];
    let (mut re, mut im) = (vec![0.0; bins], vec![0.0; bins]);
    for (k, &t) in meas.t2_indices().iter().enumerate() {
        for x in 0..nx {
            for w in 0..nw {
                for (j, v) in vals.iter_mut().enumerate() {
                    *v = meas.get(k, x, j, w);
                }
                let fiber = interp_linear(t1, &vals, n1)?;
                plan.forward_into(&fiber, &mut re, &mut im);
                for b in 0..bins {
                    sparse.set(t, x, b, w, 0, re[b]);
                    sparse.set(t, x, b, w, 1, im[b]);
                }
            }
        }
    }
    baseline_linear_t2(&sparse, meas.t2_indices())
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Whittaker–Shannon interpolation of uniformly spaced samples onto a grid
/// `factor` times finer, spanning the same interval.
pub fn baseline_sinc_t1(times: &[f64], values: &[f64], factor: usize) -> Result<Vec<f64>> {
    if times.len() != values.len() || times.len() < 2 {
        bail!(Argument, "sinc interpolation needs at least two matching samples");
    }
    if factor == 0 {
        bail!(Argument, "densify factor must be at least 1");
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0)) {
        bail!(Argument, "sinc interpolation needs uniformly spaced samples");
    }
    let n_out = (times.len() - 1) * factor + 1;
    Ok((0..n_out)
        .map(|i| {
            let u = i as f64 / factor as f64;
            values.iter().enumerate().map(|(n, &s)| s * sinc(u - n as f64)).sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::AxisGrid;

    fn freq_cube(nt: usize, nx: usize, na: usize, nw: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> HyperCube {
        let axes = [
            AxisGrid::index("t2", nt).unwrap(),
            AxisGrid::index("x", nx).unwrap(),
            AxisGrid::index("w1", na).unwrap(),
            AxisGrid::index("w3", nw).unwrap(),
        ];
        let mut c = HyperCube::zeros(axes, Domain::Frequency, 1).unwrap();
        for t in 0..nt {
            for x in 0..nx {
                for a in 0..na {
                    for w in 0..nw {
                        c.set(t, x, a, w, 0, f(t, x, a, w));
                    }
                }
            }
        }
        c
    }

    fn peak(t: usize, x: usize, a: usize, w: usize) -> f64 {
        let spatial = [1.0, 2.0, 1.0][x];
        let line = if (a, w) == (2, 1) { 1.0 } else { 0.1 };
        spatial * line * (1.0 + t as f64)
    }

    #[test]
    fn identical_cubes_score_zero() {
        let c = freq_cube(2, 3, 5, 3, peak);
        let m = profile_metrics(&c, &c).unwrap();
        assert_eq!((m.intensity_mse, m.mean_profile_mse, m.std_profile_mse), (0.0, 0.0, 0.0));
        assert_eq!(spectrum_mse(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_inside_box_by_hand() {
        // 3 x-points × 2 delays, box = single cell (2, 1)
        let r = freq_cube(2, 3, 5, 3, peak);
        let c = 0.5;
        let p = freq_cube(2, 3, 5, 3, |t, x, a, w| peak(t, x, a, w) + if (a, w) == (2, 1) { c } else { 0.0 });
        let m = profile_metrics(&p, &r).unwrap();
        assert!((m.intensity_mse - c * c).abs() < 1e-12);
        // reference column t: (1,2,1)·(1+t) at x = (0, ½, 1) → μ = ½, σ² = ⅛
        // prediction column t: (1+t)·(1,2,1) + ½ → μ = ½, σ² = Σ p x² − ¼
        let mut std_err = 0.0;
        for t in 0..2 {
            let s = 1.0 + t as f64;
            let col = [s + c, 2.0 * s + c, s + c];
            let sum: f64 = col.iter().sum();
            let e2 = (col[1] * 0.25 + col[2]) / sum;
            let sig = (e2 - 0.25).sqrt();
            std_err += (sig - 0.125f64.sqrt()).powi(2);
        }
        assert!(m.mean_profile_mse.abs() < 1e-24);
        assert!((m.std_profile_mse - std_err / 2.0).abs() < 1e-12);
    }

    #[test]
    fn moment_metrics_ignore_common_scale() {
        let r = freq_cube(3, 3, 5, 3, peak);
        let p = freq_cube(3, 3, 5, 3, |t, x, a, w| peak(t, x, a, w) * if x == 0 { 1.3 } else { 1.0 });
        let a = profile_metrics(&p, &r).unwrap();
        let b = profile_metrics(&p.scaled(4.0), &r.scaled(4.0)).unwrap();
        assert!((a.mean_profile_mse - b.mean_profile_mse).abs() < 1e-15);
        assert!((a.std_profile_mse - b.std_profile_mse).abs() < 1e-15);
        assert!(profile_metrics(&freq_cube(3, 2, 5, 3, peak), &r).is_err());
    }

    #[test]
    fn unsampled_mse_by_hand() {
        let p = [0.0, 1.0, 2.0, 0.0];
        let r = [0.0; 4];
        assert_eq!(mse_outside(&p, &r, &[true, false, false, true]).unwrap(), 2.5);
        assert_eq!(mse_outside(&[5.0, 0.0], &[0.0, 0.0], &[true, false]).unwrap(), 0.0);
        assert!(mse_outside(&p, &r, &[true; 4]).is_err());
    }

    #[test]
    fn unsampled_plus_sampled_recovers_global_mse() {
        let axes = [
            AxisGrid::index("t2", 3).unwrap(),
            AxisGrid::index("x", 2).unwrap(),
            AxisGrid::index("t1", 4).unwrap(),
            AxisGrid::index("w3", 2).unwrap(),
        ];
        let mut p = HyperCube::zeros(axes.clone(), Domain::Time, 1).unwrap();
        let r = HyperCube::zeros(axes, Domain::Time, 1).unwrap();
        for (i, v) in p.data_mut().iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        let (t2m, t1m) = (vec![0, 2], vec![1, 3]);
        let outside = unsampled_mse(&p, &r, &t2m, &t1m).unwrap();
        let n_in = t2m.len() * t1m.len() * 4;
        let mut inside = 0.0;
        for &t in &t2m {
            for x in 0..2 {
                for &j in &t1m {
                    for w in 0..2 {
                        inside += p.get(t, x, j, w, 0).powi(2);
                    }
                }
            }
        }
        let global: f64 = p.data().iter().map(|v| v * v).sum::<f64>() / 48.0;
        assert!(((outside * (48 - n_in) as f64 + inside) / 48.0 - global).abs() < 1e-12);
    }

    #[test]
    fn linear_interpolation_cases() {
        assert_eq!(interp_linear(&[0, 4], &[0.0, 4.0], 5).unwrap()[2], 2.0);
        let q: Vec<f64> = (0..9).map(|i| (i as f64).powi(2)).collect();
        let lin = interp_linear(&[0, 4, 8], &[q[0], q[4], q[8]], 9).unwrap();
        // chords of a convex function lie above it
        for i in [1, 2, 3, 5, 6, 7] {
            assert!(lin[i] > q[i]);
        }
        let affine = freq_cube(5, 2, 3, 2, |t, x, a, w| 2.0 * t as f64 + (x + a + w) as f64);
        let mut sparse = affine.clone();
        for t in [1, 2, 3] {
            for x in 0..2 {
                for a in 0..3 {
                    for w in 0..2 {
                        sparse.set(t, x, a, w, 0, -99.0);
                    }
                }
            }
        }
        assert_eq!(baseline_linear_t2(&sparse, &[0, 4]).unwrap(), affine);
        assert!(baseline_linear_t2(&sparse, &[0]).is_err());
    }

    #[test]
    fn sinc_interpolation_cases() {
        let times: Vec<f64> = (0..256).map(|i| i as f64 * 0.5).collect();
        let vals: Vec<f64> = times.iter().map(|t| (0.4 * t).cos()).collect();
        let dense = baseline_sinc_t1(&times, &vals, 4).unwrap();
        for (n, v) in vals.iter().enumerate() {
            assert!((dense[4 * n] - v).abs() < 1e-12);
        }
        // truncation ripple decays away from the ends; check the middle half
        for (i, d) in dense.iter().enumerate().skip(256).take(512) {
            let t = i as f64 * 0.125;
            assert!((d - (0.4 * t).cos()).abs() < 0.01, "t = {t}");
        }
        let ones = baseline_sinc_t1(&times, &[1.0; 256], 2).unwrap();
        // the unwindowed sum overshoots most at the outermost half-sample
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 0.15));
        assert!(ones[16..ones.len() - 16].iter().all(|v| (v - 1.0).abs() < 0.02));
        assert!(baseline_sinc_t1(&[0.0, 1.0, 3.0], &[1.0; 3], 2).is_err());
    }

    #[test]
    fn report_serializations() {
        let r = EvalReport {
            intensity_mse: 0.5,
            mean_profile_mse: 0.25,
            std_profile_mse: 0.0,
            spectrum_mse: 1.0,
            unsampled_temporal_mse: None,
            manifest: Some("abc".into()),
        };
        let mut kv = Vec::new();
        r.write_kv(&mut kv).unwrap();
        let kv = String::from_utf8(kv).unwrap();
        assert!(kv.contains("intensity_mse = 5e-1\n"));
        assert!(kv.contains("manifest = abc\n"));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "intensity_mse,mean_profile_mse,std_profile_mse,spectrum_mse,manifest");
    }
}
