use crate::error::{Error, Result};
use crate::scalar::Real;

use super::model::{ModelDims, Params};

/// Parameter update rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UpdateRule {
    /// Bias-corrected Adam.
    Adam { beta1: f64, beta2: f64, eps: f64 },
    /// Plain gradient step `ε ← ε − η·∇`.
    Sgd,
}

impl Default for UpdateRule {
    fn default() -> Self {
        Self::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer with its moment estimates; single owner during training.
#[derive(Clone, Debug)]
pub struct Optimizer<T> {
    rule: UpdateRule,
    first: Params<T>,
    second: Params<T>,
    steps: u64,
}

impl<T: Real> Optimizer<T> {
    pub fn new(rule: UpdateRule, dims: &ModelDims) -> Self {
        Self {
            rule,
            first: Params::zeros(dims),
            second: Params::zeros(dims),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut Params<T>, grad: &Params<T>, lr: T) -> Result<()> {
        if params.len() != grad.len() || params.len() != self.first.len() {
            return Err(Error::Dimension("optimizer state does not match parameters".into()));
        }
        self.steps += 1;
        match self.rule {
            UpdateRule::Sgd => {
                for (p, g) in params.groups_mut().into_iter().zip(grad.groups()) {
                    for (x, &dx) in p.iter_mut().zip(g) {
                        *x -= lr * dx;
                    }
                }
            }
            UpdateRule::Adam { beta1, beta2, eps } => {
                let (b1, b2, eps) = (T::lit(beta1), T::lit(beta2), T::lit(eps));
                let t = i32::try_from(self.steps).unwrap_or(i32::MAX);
                let corr1 = T::one() - b1.powi(t);
                let corr2 = T::one() - b2.powi(t);
                let groups = params
                    .groups_mut()
                    .into_iter()
                    .zip(grad.groups())
                    .zip(self.first.groups_mut())
                    .zip(self.second.groups_mut());
                for (((p, g), m), v) in groups {
                    for (((x, &dx), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = b1 * *m + (T::one() - b1) * dx;
                        *v = b2 * *v + (T::one() - b2) * dx * dx;
                        let m_hat = *m / corr1;
                        let v_hat = *v / corr2;
                        *x -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
