//! Synthetic 2DIR ground truth and the noisy measurement oracle that stands in
//! for the instrument.
//!
//! Each peak is a separable product of a population envelope along `t2`, a
//! diffusing Gaussian along `x`, a decaying cosine along `t1`, and a Lorentzian
//! along `ω3`. Oscillation frequencies are given in cycles per `t1` step so the
//! Nyquist check does not depend on the grid units.

use std::f64::consts::PI;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::hypercube::{AxisGrid, Domain, HyperCube};
use crate::sampling::{Measurement, SamplingPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct PeakSpec {
    /// Signed amplitude; negative values model excited-state absorption.
    pub amplitude: f64,
    /// Oscillation along `t1` in cycles per sample, strictly inside (0, 0.5).
    pub f_osc: f64,
    /// Coherence decay constant, in `t1` axis units.
    pub t1_decay: f64,
    /// Population decay constant, in `t2` axis units.
    pub t2_decay: f64,
    pub w3_center: f64,
    /// Lorentzian half-width along `ω3`.
    pub w3_width: f64,
    pub x_center0: f64,
    pub x_sigma0: f64,
    /// Spatial diffusion coefficient (x units² per t2 unit).
    pub diffusion: f64,
    pub phase: f64,
}

impl PeakSpec {
    pub fn validate(&self, index: usize) -> Result<()> {
        if !(self.f_osc > 0.0 && self.f_osc < 0.5) {
            bail!(
                Config,
                "peak {index}: f_osc = {} aliases, it must lie strictly inside (0, 0.5) cycles per step",
                self.f_osc
            );
        }
        if !(self.t1_decay > 0.0 && self.t2_decay > 0.0) {
            bail!(Config, "peak {index}: decay constants must be positive");
        }
        if !(self.x_sigma0 > 0.0 && self.w3_width > 0.0) {
            bail!(Config, "peak {index}: widths must be positive");
        }
        if self.diffusion < 0.0 {
            bail!(Config, "peak {index}: diffusion must be non-negative");
        }
        let all = [
            self.amplitude,
            self.f_osc,
            self.t1_decay,
            self.t2_decay,
            self.w3_center,
            self.w3_width,
            self.x_center0,
            self.x_sigma0,
            self.diffusion,
            self.phase,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            bail!(Config, "peak {index}: non-finite parameter");
        }
        Ok(())
    }

    /// Spatial variance `σ0² + 2·D·max(t2, 0)`.
    pub fn spatial_variance(&self, t2: f64) -> f64 {
        self.x_sigma0 * self.x_sigma0 + 2.0 * self.diffusion * t2.max(0.0)
    }

    pub fn population(&self, t2: f64) -> f64 {
        if t2 >= 0.0 {
            (-t2 / self.t2_decay).exp()
        } else {
            1.0
        }
    }

    pub fn spatial(&self, x: f64, t2: f64) -> f64 {
        let dx = x - self.x_center0;
        (-dx * dx / (2.0 * self.spatial_variance(t2))).exp()
    }

    /// Decaying cosine at `t1` value `t1` and sample index `step_index`.
    pub fn coherence(&self, t1: f64, step_index: f64) -> f64 {
        (-t1 / self.t1_decay).exp() * (2.0 * PI * self.f_osc * step_index + self.phase).cos()
    }

    pub fn lorentz(&self, w3: f64) -> f64 {
        let d = w3 - self.w3_center;
        let g2 = self.w3_width * self.w3_width;
        g2 / (d * d + g2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// `(t2, x, t1, ω3)` grids.
    pub axes: [AxisGrid; 4],
    pub peaks: Vec<PeakSpec>,
    /// Per-repeat Gaussian noise std, relative to the peak magnitude of the clean signal.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            axes: default_axes(32, 16, 64, 16),
            peaks: default_peaks(),
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

/// Desk-scale grids: 0.5 ps population steps from -1 ps, 24 µm pixels, 32 fs
/// coherence steps, and 1.197 cm⁻¹ probe pixels from 1906.6 cm⁻¹.
pub fn default_axes(t2: usize, x: usize, t1: usize, w3: usize) -> [AxisGrid; 4] {
    [
        AxisGrid {
            name: "t2".into(),
            unit: "ps".into(),
            origin: -1.0,
            step: 0.5,
            count: t2,
        },
        AxisGrid {
            name: "x".into(),
            unit: "µm".into(),
            origin: -12.0 * (x as f64 - 1.0),
            step: 24.0,
            count: x,
        },
        AxisGrid {
            name: "t1".into(),
            unit: "fs".into(),
            origin: 0.0,
            step: 32.0,
            count: t1,
        },
        AxisGrid {
            name: "w3".into(),
            unit: "cm⁻¹".into(),
            origin: 1906.6,
            step: 1.197,
            count: w3,
        },
    ]
}

/// A strong positive lobe and a ten-times weaker negative lobe shifted along ω3.
pub fn default_peaks() -> Vec<PeakSpec> {
    vec![
        PeakSpec {
            amplitude: 1.0,
            f_osc: 0.2,
            t1_decay: 320.0,
            t2_decay: 4.0,
            w3_center: 1912.6,
            w3_width: 2.0,
            x_center0: 12.0,
            x_sigma0: 40.0,
            diffusion: 60.0,
            phase: 0.0,
        },
        PeakSpec {
            amplitude: -0.1,
            f_osc: 0.2,
            t1_decay: 320.0,
            t2_decay: 3.0,
            w3_center: 1919.8,
            w3_width: 2.0,
            x_center0: -12.0,
            x_sigma0: 40.0,
            diffusion: 40.0,
            phase: 0.0,
        },
    ]
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.peaks.is_empty() {
            bail!(Config, "at least one peak is required");
        }
        for (i, p) in self.peaks.iter().enumerate() {
            p.validate(i)?;
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            bail!(Config, "noise_sigma must be finite and >= 0");
        }
        Ok(())
    }
}

/// Noiseless time-domain cube over `(t2, x, t1, ω3)`.
pub fn ground_truth_time(config: &SynthConfig) -> Result<HyperCube> {
    config.validate()?;
    let [t2_axis, x_axis, t1_axis, w3_axis] = &config.axes;
    let (nx, n1, nw) = (x_axis.count, t1_axis.count, w3_axis.count);

    // per-peak separable factors along t1 and ω3
    let coh: Vec<Vec<f64>> = config
        .peaks
        .iter()
        .map(|p| {
            (0..n1)
                .map(|i| p.coherence(t1_axis.value(i) - t1_axis.origin, i as f64))
                .collect()
        })
        .collect();
    let lor: Vec<Vec<f64>> = config
        .peaks
        .iter()
        .map(|p| (0..nw).map(|w| p.lorentz(w3_axis.value(w))).collect())
        .collect();

    let mut cube = HyperCube::zeros(config.axes.clone(), Domain::Time, 1)?;
    cube.data_mut()
        .par_chunks_mut(nx * n1 * nw)
        .enumerate()
        .for_each(|(t, block)| {
            let t2 = t2_axis.value(t);
            for (p, peak) in config.peaks.iter().enumerate() {
                let pop = peak.amplitude * peak.population(t2);
                for x in 0..nx {
                    let sx = pop * peak.spatial(x_axis.value(x), t2);
                    for (a, c) in coh[p].iter().enumerate() {
                        let base = (x * n1 + a) * nw;
                        for (w, l) in lor[p].iter().enumerate() {
                            block[base + w] += sx * c * l;
                        }
                    }
                }
            }
        });
    Ok(cube)
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the noise stream for one `(t2, t1, repeat)` acquisition.
pub fn stream_key(seed: u64, t2: usize, t1: usize, repeat: u32) -> u64 {
    let mut h = mix64(seed);
    h = mix64(h ^ t2 as u64);
    h = mix64(h ^ ((t1 as u64) << 20));
    mix64(h ^ ((repeat as u64) << 40))
}

/// Instrument stand-in: answers acquisition requests from a cached ground truth.
#[derive(Debug, Clone)]
pub struct SynthOracle {
    config: SynthConfig,
    truth: HyperCube,
    noise_std: f64,
}

impl SynthOracle {
    pub fn new(config: SynthConfig) -> Result<Self> {
        let truth = ground_truth_time(&config)?;
        let noise_std = config.noise_sigma * truth.max_abs();
        Ok(Self {
            config,
            truth,
            noise_std,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn truth(&self) -> &HyperCube {
        &self.truth
    }

    /// Absolute per-repeat noise standard deviation.
    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// One `(x, t1_sel, ω3)` slice at delay `t2`, averaged over `repeats`.
    pub fn acquire_slice(&self, t2: usize, t1_indices: &[usize], repeats: Range<u32>) -> Result<Vec<f64>> {
        let [nt, nx, n1, nw] = self.truth.dims();
        if t2 >= nt {
            bail!(Argument, "t2 index {t2} out of range for {nt} delays");
        }
        if let Some(&bad) = t1_indices.iter().find(|&&i| i >= n1) {
            bail!(Argument, "t1 index {bad} out of range for {n1} delays");
        }
        if repeats.is_empty() {
            bail!(Argument, "at least one repeat is required");
        }
        let count = repeats.len() as f64;
        let n_sel = t1_indices.len();
        let mut out = vec![0.0; nx * n_sel * nw];
        let mut noise = vec![0.0; nx * nw];
        for (j, &a) in t1_indices.iter().enumerate() {
            noise.iter_mut().for_each(|v| *v = 0.0);
            if self.noise_std > 0.0 {
                for rep in repeats.clone() {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(self.config.seed, t2, a, rep));
                    for v in noise.iter_mut() {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *v += z;
                    }
                }
            }
            for x in 0..nx {
                for w in 0..nw {
                    let clean = self.truth.get(t2, x, a, w, 0);
                    out[(x * n_sel + j) * nw + w] = clean + self.noise_std * noise[x * nw + w] / count;
                }
            }
        }
        Ok(out)
    }

    /// Measures every `(t1, t2)` pair of `plan`, averaging repeats `0..plan.r`.
    pub fn measure(&self, plan: &SamplingPlan) -> Result<Measurement> {
        self.measure_repeats(plan, 0..plan.r)
    }

    pub fn measure_repeats(&self, plan: &SamplingPlan, repeats: Range<u32>) -> Result<Measurement> {
        let [nt, _, n1, _] = self.truth.dims();
        plan.validate(nt, n1)?;
        let slices = plan
            .t2_indices
            .par_iter()
            .map(|&t| self.acquire_slice(t, &plan.t1_indices, repeats.clone()))
            .collect::<Result<Vec<_>>>()?;
        Measurement::new(
            self.config.axes.clone(),
            plan.t2_indices.clone(),
            plan.t1_indices.clone(),
            repeats.len() as u32,
            slices.concat(),
        )
    }
}

/// Convenience wrapper around [`SynthOracle::measure`].
pub fn measure(config: &SynthConfig, plan: &SamplingPlan) -> Result<Measurement> {
    SynthOracle::new(config.clone())?.measure(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::rfft_axis;
    use crate::sampling::PolicyTag;

    fn single_peak(diffusion: f64) -> SynthConfig {
        let mut peak = default_peaks().remove(0);
        peak.diffusion = diffusion;
        SynthConfig {
            axes: default_axes(12, 8, 32, 6),
            peaks: vec![peak],
            noise_sigma: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn t1_zero_is_envelope() {
        let cfg = single_peak(10.0);
        let cube = ground_truth_time(&cfg).unwrap();
        let p = &cfg.peaks[0];
        let [t2a, xa, _, wa] = &cfg.axes;
        for t in [0, 3, 11] {
            for x in [0, 4] {
                for w in [0, 2] {
                    let expected = p.amplitude
                        * p.population(t2a.value(t))
                        * p.spatial(xa.value(x), t2a.value(t))
                        * p.lorentz(wa.value(w));
                    assert!((cube.get(t, x, 0, w, 0) - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn population_decays_like_closed_form() {
        let cfg = single_peak(0.0);
        let cube = ground_truth_time(&cfg).unwrap();
        let p = &cfg.peaks[0];
        let t2a = &cfg.axes[0];
        let base = cube.get(2, 3, 0, 2, 0); // t2 = 0 ps
        assert_eq!(t2a.value(2), 0.0);
        let mut prev = f64::INFINITY;
        for t in 2..12 {
            let v = cube.get(t, 3, 0, 2, 0);
            let expected = base * (-(t2a.value(t)) / p.t2_decay).exp();
            assert!((v - expected).abs() < 1e-14);
            assert!(v < prev);
            prev = v;
        }
        // before time zero the envelope is held at unity
        assert_eq!(cube.get(0, 3, 0, 2, 0), cube.get(1, 3, 0, 2, 0));
    }

    #[test]
    fn aliasing_frequency_is_rejected() {
        let mut cfg = single_peak(0.0);
        cfg.peaks[0].f_osc = 0.6;
        assert!(matches!(ground_truth_time(&cfg), Err(crate::Error::Config(_))));
        cfg.peaks[0].f_osc = 0.5;
        assert!(ground_truth_time(&cfg).is_err());
    }

    #[test]
    fn spectrum_peaks_at_oscillation_bin() {
        let cfg = single_peak(0.0);
        let cube = ground_truth_time(&cfg).unwrap();
        let spec = rfft_axis(&cube.fiber(4, 4, 2, 0)).unwrap();
        let mags: Vec<f64> = spec.re.iter().zip(&spec.im).map(|(r, i)| r.hypot(*i)).collect();
        let argmax = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let expected = (cfg.peaks[0].f_osc * 32.0).round() as usize;
        assert_eq!(argmax, expected);
    }

    #[test]
    fn zero_noise_measure_is_truth() {
        let cfg = single_peak(5.0);
        let oracle = SynthOracle::new(cfg).unwrap();
        let plan = SamplingPlan::new(vec![1, 5], vec![0, 3, 7], 4, PolicyTag::Custom).unwrap();
        let m = oracle.measure(&plan).unwrap();
        for (k, &t) in plan.t2_indices.iter().enumerate() {
            for x in 0..8 {
                for (j, &a) in plan.t1_indices.iter().enumerate() {
                    for w in 0..6 {
                        assert_eq!(m.get(k, x, j, w), oracle.truth().get(t, x, a, w, 0));
                    }
                }
            }
        }
    }

    #[test]
    fn measurement_is_deterministic_and_order_free() {
        let mut cfg = single_peak(5.0);
        cfg.noise_sigma = 0.1;
        let oracle = SynthOracle::new(cfg).unwrap();
        let plan = SamplingPlan::new(vec![0, 3, 9], vec![0, 1, 2, 3, 4, 31], 3, PolicyTag::Custom).unwrap();
        let a = oracle.measure(&plan).unwrap();
        let b = oracle.measure(&plan).unwrap();
        assert_eq!(a.values(), b.values());
        // querying one delay alone yields the same slice
        let solo = SamplingPlan::new(vec![3], plan.t1_indices.clone(), 3, PolicyTag::Custom).unwrap();
        let s = oracle.measure(&solo).unwrap();
        assert_eq!(s.slice(0), a.slice(1));
    }

    #[test]
    fn disjoint_repeats_combine() {
        let mut cfg = single_peak(5.0);
        cfg.noise_sigma = 0.2;
        let oracle = SynthOracle::new(cfg).unwrap();
        let plan = SamplingPlan::new(vec![2, 7], vec![0, 1, 2, 3, 4, 10, 31], 5, PolicyTag::Custom).unwrap();
        let first = oracle.measure_repeats(&plan, 0..2).unwrap();
        let second = oracle.measure_repeats(&plan, 2..5).unwrap();
        let all = oracle.measure(&plan).unwrap();
        for i in 0..all.values().len() {
            let combined = (2.0 * first.values()[i] + 3.0 * second.values()[i]) / 5.0;
            assert!((combined - all.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_plan_errors() {
        let oracle = SynthOracle::new(single_peak(0.0)).unwrap();
        let plan = SamplingPlan::new(vec![12], vec![0], 1, PolicyTag::Custom).unwrap();
        assert!(oracle.measure(&plan).is_err());
    }
}
