use super::params::MlpParams;
use crate::error::{bail, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;

/// Adam moment accumulators and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptState {
    pub fn new(params: &MlpParams, lr: f64, eps: f64) -> Result<Self> {
        Self::with_betas(params, lr, DEFAULT_BETA1, DEFAULT_BETA2, eps)
    }

    pub fn with_betas(params: &MlpParams, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) || !(eps > 0.0) {
            bail!(Config, "Adam needs lr > 0 and eps > 0");
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            bail!(Config, "Adam betas must lie in [0, 1)");
        }
        Ok(Self {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: vec![0.0; params.len()],
            v: vec![0.0; params.len()],
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `params`.
    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpParams) -> Result<()> {
        if !params.same_shape(grads) || self.m.len() != params.len() {
            bail!(Shape, "gradient and optimizer shapes do not match the parameters");
        }
        if let Some(i) = grads.as_slice().iter().position(|g| !g.is_finite()) {
            bail!(Optimizer, "non-finite gradient at parameter {i} (step {})", self.step + 1);
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let step_size = self.lr / bc1;
        let bc2_sqrt = bc2.sqrt();
        for ((p, &g), (m, v)) in params
            .as_mut_slice()
            .iter_mut()
            .zip(grads.as_slice())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= step_size * *m / (v.sqrt() / bc2_sqrt + self.eps);
        }
        Ok(())
    }
}

/// Functional form of [`OptState::step`].
pub fn adam_step(state: &mut OptState, params: &mut MlpParams, grads: &MlpParams) -> Result<()> {
    state.step(params, grads)
}
