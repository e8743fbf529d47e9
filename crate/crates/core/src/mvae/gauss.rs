//! Diagonal-Gaussian beliefs: Product-of-Experts fusion, KL to the standard
//! prior, the reparameterization trick, and the stable BCE-with-logits loss
//! — forward values and hand-derived gradients.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Diagonal Gaussian over the latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief<R> {
    pub mean: Vec<R>,
    pub variance: Vec<R>,
}

impl<R: Real> GaussianBelief<R> {
    pub fn standard(dim: usize) -> Self {
        Self { mean: vec![R::zero(); dim], variance: vec![R::one(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.variance.len() {
            return Err(Error::DimensionMismatch {
                left: format!("mean of {}", self.mean.len()),
                right: format!("variance of {}", self.variance.len()),
            });
        }
        if self.variance.iter().any(|&v| !(v > R::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParameter("belief variance must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Precision-weighted product of the experts and the standard prior:
/// T = 1 + Σ 1/σᵢ², fused σ² = 1/T, fused μ = (Σ μᵢ/σᵢ²)/T.
pub fn poe_fuse<R: Real>(beliefs: &[GaussianBelief<R>], dim: usize) -> Result<GaussianBelief<R>> {
    let mut precision = vec![R::one(); dim];
    let mut weighted_mean = vec![R::zero(); dim];
    for b in beliefs {
        b.validate()?;
        if b.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: format!("belief of {}", b.dim()),
                right: format!("latent dim {dim}"),
            });
        }
        for j in 0..dim {
            let p = R::one() / b.variance[j];
            precision[j] += p;
            weighted_mean[j] += b.mean[j] * p;
        }
    }
    let mut mean = vec![R::zero(); dim];
    let mut variance = vec![R::zero(); dim];
    for j in 0..dim {
        variance[j] = R::one() / precision[j];
        mean[j] = weighted_mean[j] / precision[j];
    }
    Ok(GaussianBelief { mean, variance })
}

/// Backward pass of [`poe_fuse`] for experts parameterized as (μᵢ, log σᵢ²).
///
/// With pᵢ = 1/σᵢ², T = 1 + Σ pᵢ, fused μ_f = (Σ μᵢpᵢ)/T, fused log-variance
/// l_f = −ln T:
///   ∂μ_f/∂μᵢ = pᵢ/T,  ∂μ_f/∂lᵢ = −pᵢ(μᵢ − μ_f)/T,  ∂l_f/∂lᵢ = pᵢ/T.
/// Given upstream (dμ_f, dl_f), accumulates (dμᵢ, dlᵢ) per expert.
pub fn poe_backward<R: Real>(
    beliefs: &[GaussianBelief<R>],
    fused: &GaussianBelief<R>,
    d_mean_f: &[R],
    d_logvar_f: &[R],
    d_means: &mut [Vec<R>],
    d_logvars: &mut [Vec<R>],
) {
    let dim = fused.dim();
    for (i, b) in beliefs.iter().enumerate() {
        for j in 0..dim {
            let p = R::one() / b.variance[j];
            let t_inv = fused.variance[j]; // 1/T
            let dmu = d_mean_f[j] * p * t_inv;
            let dl = -d_mean_f[j] * p * (b.mean[j] - fused.mean[j]) * t_inv
                + d_logvar_f[j] * p * t_inv;
            d_means[i][j] += dmu;
            d_logvars[i][j] += dl;
        }
    }
}

/// KL(q ‖ N(0, I)) = Σ ½(μ² + σ² − log σ² − 1).
pub fn gaussian_kl<R: Real>(q: &GaussianBelief<R>) -> R {
    q.mean
        .iter()
        .zip(&q.variance)
        .map(|(&m, &v)| (m * m + v - v.ln() - R::one()) * R::half())
        .sum()
}

/// Gradient of [`gaussian_kl`] wrt (μ, log σ²): dKL/dμ = μ, dKL/dl = ½(σ² − 1).
pub fn gaussian_kl_backward<R: Real>(q: &GaussianBelief<R>, scale: R, d_mean: &mut [R], d_logvar: &mut [R]) {
    for j in 0..q.dim() {
        d_mean[j] += scale * q.mean[j];
        d_logvar[j] += scale * R::half() * (q.variance[j] - R::one());
    }
}

/// z = μ + σ ⊙ ε.
pub fn reparameterize<R: Real>(q: &GaussianBelief<R>, noise: &[R]) -> Vec<R> {
    q.mean
        .iter()
        .zip(&q.variance)
        .zip(noise)
        .map(|((&m, &v), &e)| m + v.sqrt() * e)
        .collect()
}

/// Mean over elements of softplus(logit) − target·logit, the numerically
/// stable binary cross-entropy with logits.
pub fn bce_logits<R: Real>(logits: &[R], targets: &[R]) -> Result<R> {
    if logits.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            left: format!("{} logits", logits.len()),
            right: format!("{} targets", targets.len()),
        });
    }
    if targets.iter().any(|&t| t < R::zero() || t > R::one()) {
        return Err(Error::InvalidParameter("BCE targets must lie in [0, 1]".into()));
    }
    let n = R::from_usize(logits.len()).unwrap();
    let sum: R = logits
        .iter()
        .zip(targets)
        .map(|(&l, &t)| softplus(l) - t * l)
        .sum();
    Ok(sum / n)
}

/// dBCE/dlogit = (sigmoid(logit) − target)/N, scaled by the upstream factor.
pub fn bce_logits_backward<R: Real>(logits: &[R], targets: &[R], scale: R, d_logits: &mut [R]) {
    let n = R::from_usize(logits.len()).unwrap();
    for j in 0..logits.len() {
        d_logits[j] += scale * (sigmoid(logits[j]) - targets[j]) / n;
    }
}

/// BCE on already-squashed probabilities, clamped away from {0, 1} for
/// finiteness. Used for scoring predictions; training uses [`bce_logits`].
pub fn bce_probs<R: Real>(probs: &[R], targets: &[R]) -> Result<R> {
    if probs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            left: format!("{} probabilities", probs.len()),
            right: format!("{} targets", targets.len()),
        });
    }
    if targets.iter().any(|&t| t < R::zero() || t > R::one()) {
        return Err(Error::InvalidParameter("BCE targets must lie in [0, 1]".into()));
    }
    let floor = R::c(1e-7);
    let n = R::from_usize(probs.len()).unwrap();
    let sum: R = probs
        .iter()
        .zip(targets)
        .map(|(&p, &t)| {
            let p = p.max(floor).min(R::one() - floor);
            -(t * p.ln() + (R::one() - t) * (R::one() - p).ln())
        })
        .sum();
    Ok(sum / n)
}

pub fn sigmoid<R: Real>(x: R) -> R {
    if x >= R::zero() {
        R::one() / (R::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (R::one() + e)
    }
}

/// ln(1 + eˣ) without overflow.
pub fn softplus<R: Real>(x: R) -> R {
    if x > R::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
