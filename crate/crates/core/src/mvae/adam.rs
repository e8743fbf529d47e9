//! Bias-corrected Adam over the flat parameter vector.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct AdamState<R> {
    pub m: Vec<R>,
    pub v: Vec<R>,
    pub step: u64,
}

impl<R: Real> AdamState<R> {
    pub fn new(n: usize) -> Self {
        Self { m: vec![R::zero(); n], v: vec![R::zero(); n], step: 0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdamParams<R> {
    pub lr: R,
    pub beta1: R,
    pub beta2: R,
    pub eps: R,
}

impl<R: Real> Default for AdamParams<R> {
    fn default() -> Self {
        Self { lr: R::c(1e-3), beta1: R::c(0.9), beta2: R::c(0.999), eps: R::c(1e-8) }
    }
}

/// One update. Rejects non-finite gradients before touching any state.
pub fn adam_step<R: Real>(
    params: &mut [R],
    grads: &[R],
    state: &mut AdamState<R>,
    cfg: &AdamParams<R>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::DimensionMismatch {
            left: format!("{} params", params.len()),
            right: format!("{} grads / {} moments", grads.len(), state.m.len()),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::TrainingDiverged("non-finite gradient, update aborted".into()));
    }
    state.step += 1;
    let t = R::from_u64(state.step).unwrap();
    let bc1 = R::one() - cfg.beta1.powf(t);
    let bc2 = R::one() - cfg.beta2.powf(t);
    for i in 0..params.len() {
        state.m[i] = cfg.beta1 * state.m[i] + (R::one() - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (R::one() - cfg.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}
