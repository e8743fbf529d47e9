//! The multimodal VAE: per-modality dense codecs, PoE posterior fusion,
//! time-lagged ELBO, the powerset subset loss, prediction with arbitrary
//! modality subsets, and a finite-difference gradient check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::gauss::{
    bce_logits, bce_logits_backward, gaussian_kl, gaussian_kl_backward, poe_backward, poe_fuse,
    reparameterize, sigmoid, GaussianBelief,
};
use super::mlp::Mlp;

pub const N_MODALITIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Visual = 0,
    Tactile = 1,
    Pose = 2,
}

pub const MODALITIES: [Modality; 3] = [Modality::Visual, Modality::Tactile, Modality::Pose];

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::Tactile => "tactile",
            Modality::Pose => "pose",
        }
    }

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn is_image(self) -> bool {
        !matches!(self, Modality::Pose)
    }
}

/// Bitmask over modalities (bit order: visual, tactile, pose).
pub type ModalityMask = u8;
pub const MASK_ALL: ModalityMask = 0b111;

pub fn mask_contains(mask: ModalityMask, m: Modality) -> bool {
    mask & m.bit() != 0
}

const LOGVAR_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<R> {
    pub latent: usize,
    /// 0 when unconditioned; the condition is concatenated to every encoder
    /// input and to z at the bottleneck.
    pub cond_dim: usize,
    pub hidden: Vec<usize>,
    pub image_width: usize,
    pub image_height: usize,
    pub lambda: [R; N_MODALITIES],
    /// Codec presence; unimodal baselines disable the other modalities.
    pub enabled: [bool; N_MODALITIES],
}

impl<R: Real> ModelSpec<R> {
    pub fn toy(image_side: usize, latent: usize, hidden: Vec<usize>) -> Self {
        Self {
            latent,
            cond_dim: 0,
            hidden,
            image_width: image_side,
            image_height: image_side,
            lambda: [R::one(), R::one(), R::c(1000.0)],
            enabled: [true; N_MODALITIES],
        }
    }

    pub fn modality_dim(&self, m: Modality) -> usize {
        match m {
            Modality::Visual | Modality::Tactile => 3 * self.image_width * self.image_height,
            Modality::Pose => 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MvaeModel<R> {
    pub spec: ModelSpec<R>,
    pub encoders: [Option<Mlp>; N_MODALITIES],
    pub decoders: [Option<Mlp>; N_MODALITIES],
    pub params: Vec<R>,
    pub seed: u64,
}

/// Per-call loss breakdown.
#[derive(Debug, Clone, Copy)]
pub struct ElboTerms<R> {
    pub loss: R,
    pub recon: [R; N_MODALITIES],
    pub kl: R,
    /// Log-variance components that hit the numerical clamp.
    pub clamp_events: usize,
}

#[derive(Debug, Clone)]
pub struct Prediction<R> {
    pub visual: Option<Vec<R>>,
    pub tactile: Option<Vec<R>>,
    pub pose: Option<[R; 7]>,
}

struct EncoderPass<R> {
    modality: Modality,
    cache: super::mlp::MlpCache<R>,
    /// Pre-clamp log-variance (for gating the clamp gradient).
    raw_logvar: Vec<R>,
}

impl<R: Real> MvaeModel<R> {
    pub fn new(spec: ModelSpec<R>, seed: u64) -> Result<Self> {
        if spec.latent == 0 {
            return Err(Error::InvalidParameter("latent dim must be positive".into()));
        }
        if !spec.enabled.iter().any(|&e| e) {
            return Err(Error::InvalidParameter("at least one modality must be enabled".into()));
        }
        let mut offset = 0;
        let mut encoders: [Option<Mlp>; N_MODALITIES] = [None, None, None];
        let mut decoders: [Option<Mlp>; N_MODALITIES] = [None, None, None];
        for m in MODALITIES {
            if !spec.enabled[m as usize] {
                continue;
            }
            let d = spec.modality_dim(m);
            let mut enc_dims = vec![d + spec.cond_dim];
            enc_dims.extend(&spec.hidden);
            enc_dims.push(2 * spec.latent);
            encoders[m as usize] = Some(Mlp::reserve(&enc_dims, &mut offset));

            let mut dec_dims = vec![spec.latent + spec.cond_dim];
            dec_dims.extend(spec.hidden.iter().rev());
            dec_dims.push(d);
            decoders[m as usize] = Some(Mlp::reserve(&dec_dims, &mut offset));
        }
        let mut params = vec![R::zero(); offset];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in MODALITIES {
            if let Some(e) = &encoders[m as usize] {
                e.init(&mut params, &mut rng);
            }
            if let Some(d) = &decoders[m as usize] {
                d.init(&mut params, &mut rng);
            }
        }
        Ok(Self { spec, encoders, decoders, params, seed })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn enabled_mask(&self) -> ModalityMask {
        let mut mask = 0;
        for m in MODALITIES {
            if self.spec.enabled[m as usize] {
                mask |= m.bit();
            }
        }
        mask
    }

    fn modality_data<'a>(&self, sample: &'a Sample<R>, m: Modality) -> &'a [R] {
        match m {
            Modality::Visual => &sample.visual,
            Modality::Tactile => &sample.tactile,
            Modality::Pose => &sample.pose,
        }
    }

    fn check_cond(&self, cond: &[R]) -> Result<()> {
        if cond.len() != self.spec.cond_dim {
            return Err(Error::DimensionMismatch {
                left: format!("condition of {}", cond.len()),
                right: format!("model cond_dim {}", self.spec.cond_dim),
            });
        }
        Ok(())
    }

    /// Encode the masked modalities and fuse with the prior.
    fn encode(
        &self,
        input: &Sample<R>,
        mask: ModalityMask,
        cond: &[R],
    ) -> Result<(Vec<GaussianBelief<R>>, Vec<EncoderPass<R>>, usize)> {
        let latent = self.spec.latent;
        let mut beliefs = Vec::new();
        let mut passes = Vec::new();
        let mut clamped = 0usize;
        let hi = R::c(LOGVAR_CLAMP);
        for m in MODALITIES {
            if !mask_contains(mask, m) || !self.spec.enabled[m as usize] {
                continue;
            }
            let enc = self.encoders[m as usize].as_ref().expect("enabled codec");
            let data = self.modality_data(input, m);
            if data.len() != self.spec.modality_dim(m) {
                return Err(Error::DimensionMismatch {
                    left: format!("{} input of {}", m.name(), data.len()),
                    right: format!("expected {}", self.spec.modality_dim(m)),
                });
            }
            let mut x = Vec::with_capacity(data.len() + cond.len());
            x.extend_from_slice(data);
            x.extend_from_slice(cond);
            let (out, cache) = enc.forward(&self.params, &x);
            let raw_logvar = out[latent..].to_vec();
            let mut variance = Vec::with_capacity(latent);
            for &l in &raw_logvar {
                let lc = if l > hi {
                    clamped += 1;
                    hi
                } else if l < -hi {
                    clamped += 1;
                    -hi
                } else {
                    l
                };
                variance.push(lc.exp());
            }
            beliefs.push(GaussianBelief { mean: out[..latent].to_vec(), variance });
            passes.push(EncoderPass { modality: m, cache, raw_logvar });
        }
        Ok((beliefs, passes, clamped))
    }

    /// Time-lagged ELBO of one modality subset: encode inputs at t, fuse,
    /// sample with the given noise, decode all enabled modalities against the
    /// targets at T. When `grads` is given, accumulates the analytic gradient.
    pub fn elbo(
        &self,
        input: &Sample<R>,
        mask: ModalityMask,
        target: &Sample<R>,
        cond: &[R],
        beta: R,
        eps: &[R],
        mut grads: Option<&mut [R]>,
    ) -> Result<ElboTerms<R>> {
        self.check_cond(cond)?;
        let latent = self.spec.latent;
        if eps.len() != latent {
            return Err(Error::DimensionMismatch {
                left: format!("noise of {}", eps.len()),
                right: format!("latent {latent}"),
            });
        }
        if mask & self.enabled_mask() == 0 {
            return Err(Error::InvalidParameter("ELBO needs a non-empty input modality subset".into()));
        }

        let (beliefs, passes, clamp_events) = self.encode(input, mask, cond)?;
        let fused = poe_fuse(&beliefs, latent)?;
        let z = reparameterize(&fused, eps);
        let mut z_in = Vec::with_capacity(latent + cond.len());
        z_in.extend_from_slice(&z);
        z_in.extend_from_slice(cond);

        let kl = gaussian_kl(&fused);
        let mut recon = [R::zero(); N_MODALITIES];
        let mut d_z = vec![R::zero(); latent];
        let mut dec_work: Vec<(Modality, Vec<R>, super::mlp::MlpCache<R>)> = Vec::new();

        for m in MODALITIES {
            if !self.spec.enabled[m as usize] {
                continue;
            }
            let dec = self.decoders[m as usize].as_ref().expect("enabled codec");
            let (out, cache) = dec.forward(&self.params, &z_in);
            let tgt = self.modality_data(target, m);
            recon[m as usize] = if m.is_image() {
                bce_logits(&out, tgt)?
            } else {
                mse(&out, tgt)?
            };
            if grads.is_some() {
                dec_work.push((m, out, cache));
            }
        }

        let mut loss = beta * kl;
        for m in MODALITIES {
            loss += self.spec.lambda[m as usize] * recon[m as usize];
        }
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged(format!(
                "non-finite ELBO (kl {kl}, recon {recon:?})"
            )));
        }

        if let Some(grads) = grads.as_deref_mut() {
            // decoders: λ · d(recon)/d(out), back through the net to z
            for (m, out, cache) in &dec_work {
                let lam = self.spec.lambda[*m as usize];
                let tgt = self.modality_data(target, *m);
                let mut d_out = vec![R::zero(); out.len()];
                if m.is_image() {
                    bce_logits_backward(out, tgt, lam, &mut d_out);
                } else {
                    mse_backward(out, tgt, lam, &mut d_out);
                }
                let dec = self.decoders[*m as usize].as_ref().unwrap();
                let d_in = dec.backward(&self.params, cache, &d_out, grads);
                for j in 0..latent {
                    d_z[j] += d_in[j];
                }
            }

            // reparameterization and KL, in fused (μ_f, log σ_f²) coordinates
            let mut d_mean_f = d_z.clone();
            let mut d_logvar_f = vec![R::zero(); latent];
            for j in 0..latent {
                // z = μ_f + exp(l_f/2)·ε  ⇒  ∂z/∂l_f = ½σ_f ε
                d_logvar_f[j] += d_z[j] * R::half() * fused.variance[j].sqrt() * eps[j];
            }
            gaussian_kl_backward(&fused, beta, &mut d_mean_f, &mut d_logvar_f);

            let mut d_means = vec![vec![R::zero(); latent]; beliefs.len()];
            let mut d_logvars = vec![vec![R::zero(); latent]; beliefs.len()];
            poe_backward(&beliefs, &fused, &d_mean_f, &d_logvar_f, &mut d_means, &mut d_logvars);

            let hi = R::c(LOGVAR_CLAMP);
            for (i, pass) in passes.iter().enumerate() {
                let mut d_out = Vec::with_capacity(2 * latent);
                d_out.extend_from_slice(&d_means[i]);
                for j in 0..latent {
                    // the clamp has zero gradient outside its active range
                    let gated = if pass.raw_logvar[j].abs() > hi { R::zero() } else { d_logvars[i][j] };
                    d_out.push(gated);
                }
                let enc = self.encoders[pass.modality as usize].as_ref().unwrap();
                enc.backward(&self.params, &pass.cache, &d_out, grads);
            }
        }

        Ok(ElboTerms { loss, recon, kl, clamp_events })
    }

    /// Eq.-style powerset objective: the sum of ELBOs over every non-empty
    /// subset of the available modalities, all sharing the same noise draw.
    pub fn subset_loss(
        &self,
        input: &Sample<R>,
        available: ModalityMask,
        target: &Sample<R>,
        cond: &[R],
        beta: R,
        eps: &[R],
        mut grads: Option<&mut [R]>,
    ) -> Result<ElboTerms<R>> {
        let avail = available & self.enabled_mask();
        if avail == 0 {
            return Err(Error::InvalidParameter(
                "subset loss needs at least one available modality".into(),
            ));
        }
        let mut total = ElboTerms {
            loss: R::zero(),
            recon: [R::zero(); N_MODALITIES],
            kl: R::zero(),
            clamp_events: 0,
        };
        // iterate non-empty submasks in a fixed order for determinism
        let mut sub = avail;
        loop {
            let terms = self.elbo(input, sub, target, cond, beta, eps, grads.as_deref_mut())?;
            total.loss += terms.loss;
            total.kl += terms.kl;
            for m in 0..N_MODALITIES {
                total.recon[m] += terms.recon[m];
            }
            total.clamp_events += terms.clamp_events;
            if sub == 0 {
                unreachable!();
            }
            sub = (sub - 1) & avail;
            if sub == 0 {
                break;
            }
        }
        Ok(total)
    }

    /// Decode all enabled heads from the fused belief over the given inputs.
    /// Image heads pass through the logistic squashing; `noise` of `None`
    /// takes the fused mean.
    pub fn predict(
        &self,
        input: &Sample<R>,
        mask: ModalityMask,
        cond: &[R],
        noise: Option<&[R]>,
    ) -> Result<Prediction<R>> {
        self.check_cond(cond)?;
        if mask & self.enabled_mask() == 0 {
            return Err(Error::InvalidParameter("predict needs a non-empty modality subset".into()));
        }
        let latent = self.spec.latent;
        let (beliefs, _passes, _c) = self.encode(input, mask, cond)?;
        let fused = poe_fuse(&beliefs, latent)?;
        let z = match noise {
            Some(eps) => reparameterize(&fused, eps),
            None => fused.mean.clone(),
        };
        let mut z_in = Vec::with_capacity(latent + cond.len());
        z_in.extend_from_slice(&z);
        z_in.extend_from_slice(cond);

        let mut pred = Prediction { visual: None, tactile: None, pose: None };
        for m in MODALITIES {
            if !self.spec.enabled[m as usize] {
                continue;
            }
            let dec = self.decoders[m as usize].as_ref().unwrap();
            let (out, _) = dec.forward(&self.params, &z_in);
            match m {
                Modality::Visual => pred.visual = Some(out.iter().map(|&l| sigmoid(l)).collect()),
                Modality::Tactile => pred.tactile = Some(out.iter().map(|&l| sigmoid(l)).collect()),
                Modality::Pose => {
                    pred.pose = Some(out.as_slice().try_into().expect("pose head emits 7 values"))
                }
            }
        }
        Ok(pred)
    }
}

fn mse<R: Real>(out: &[R], target: &[R]) -> Result<R> {
    if out.len() != target.len() {
        return Err(Error::DimensionMismatch {
            left: format!("{} outputs", out.len()),
            right: format!("{} targets", target.len()),
        });
    }
    let n = R::from_usize(out.len()).unwrap();
    let sum: R = out.iter().zip(target).map(|(&o, &t)| (o - t) * (o - t)).sum();
    Ok(sum / n)
}

fn mse_backward<R: Real>(out: &[R], target: &[R], scale: R, d_out: &mut [R]) {
    let n = R::from_usize(out.len()).unwrap();
    for j in 0..out.len() {
        d_out[j] += scale * R::two() * (out[j] - target[j]) / n;
    }
}

/// Linear KL warm-up: β = min(1, epoch/anneal_epochs).
pub fn beta_schedule<R: Real>(epoch: usize, anneal_epochs: usize) -> R {
    assert!(anneal_epochs >= 1, "anneal_epochs must be at least 1");
    let b = epoch as f64 / anneal_epochs as f64;
    R::c(b.min(1.0))
}

/// Central-finite-difference check of the subset-loss gradient on a sample
/// of parameters. Returns the maximum relative error observed.
pub fn gradient_check<R: Real>(
    model: &mut MvaeModel<R>,
    input: &Sample<R>,
    available: ModalityMask,
    target: &Sample<R>,
    cond: &[R],
    beta: R,
    eps: &[R],
    n_checks: usize,
    h: f64,
) -> Result<R> {
    let n = model.params.len();
    let mut grads = vec![R::zero(); n];
    model.subset_loss(input, available, target, cond, beta, eps, Some(&mut grads))?;

    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ 0x5eed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    indices.truncate(n_checks.min(n));

    let hr = R::c(h);
    let mut max_rel = R::zero();
    for idx in indices {
        let orig = model.params[idx];
        model.params[idx] = orig + hr;
        let up = model.subset_loss(input, available, target, cond, beta, eps, None)?.loss;
        model.params[idx] = orig - hr;
        let dn = model.subset_loss(input, available, target, cond, beta, eps, None)?.loss;
        model.params[idx] = orig;
        let fd = (up - dn) / (R::two() * hr);
        let a = grads[idx];
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(R::c(1e-4));
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn toy_model(seed: u64) -> MvaeModel<f64> {
        MvaeModel::new(ModelSpec::toy(2, 3, vec![8]), seed).unwrap()
    }

    fn toy_sample(seed: u64) -> Sample<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Sample {
            visual: (0..12).map(|_| rng.gen_range(0.0..1.0)).collect(),
            tactile: (0..12).map(|_| rng.gen_range(0.0..1.0)).collect(),
            pose: [0.1, -0.2, 0.05, 1.0, 0.0, 0.0, 0.0],
        }
    }

    #[test]
    fn elbo_finite_on_fresh_model() {
        let model = toy_model(3);
        let (a, b) = (toy_sample(1), toy_sample(2));
        let eps = vec![0.3, -0.5, 0.7];
        let mut grads = vec![0.0; model.param_count()];
        let t = model.elbo(&a, MASK_ALL, &b, &[], 0.7, &eps, Some(&mut grads)).unwrap();
        assert!(t.loss.is_finite());
        assert!(t.kl >= 0.0);
        assert!(grads.iter().all(|g| g.is_finite()));
        assert!(grads.iter().any(|&g| g != 0.0));
    }

    #[test]
    fn beta_zero_gates_kl() {
        let model = toy_model(3);
        let (a, b) = (toy_sample(1), toy_sample(2));
        let eps = vec![0.0; 3];
        let t = model.elbo(&a, MASK_ALL, &b, &[], 0.0, &eps, None).unwrap();
        let recon_sum: f64 = (0..3).map(|m| model.spec.lambda[m] * t.recon[m]).sum();
        assert_relative_eq!(t.loss, recon_sum, epsilon = 1e-12);
    }

    #[test]
    fn subset_loss_counts_terms() {
        let model = toy_model(4);
        let (a, b) = (toy_sample(3), toy_sample(4));
        let eps = vec![0.1, 0.2, -0.3];
        // 3 modalities → 7 subset ELBOs; verify by summing them by hand
        let total = model.subset_loss(&a, MASK_ALL, &b, &[], 0.5, &eps, None).unwrap();
        let mut by_hand = 0.0;
        for sub in 1u8..8 {
            by_hand += model.elbo(&a, sub, &b, &[], 0.5, &eps, None).unwrap().loss;
        }
        assert_relative_eq!(total.loss, by_hand, epsilon = 1e-12);

        // 2 available modalities → 3 terms
        let two = model
            .subset_loss(&a, Modality::Visual.bit() | Modality::Pose.bit(), &b, &[], 0.5, &eps, None)
            .unwrap();
        let mut by_hand2 = 0.0;
        for sub in [0b001u8, 0b100, 0b101] {
            by_hand2 += model.elbo(&a, sub, &b, &[], 0.5, &eps, None).unwrap().loss;
        }
        assert_relative_eq!(two.loss, by_hand2, epsilon = 1e-12);
    }

    #[test]
    fn empty_subset_rejected() {
        let model = toy_model(4);
        let (a, b) = (toy_sample(3), toy_sample(4));
        let eps = vec![0.0; 3];
        assert!(model.elbo(&a, 0, &b, &[], 0.5, &eps, None).is_err());
        assert!(model.subset_loss(&a, 0, &b, &[], 0.5, &eps, None).is_err());
    }

    #[test]
    fn beta_schedule_values() {
        assert_relative_eq!(beta_schedule::<f64>(0, 50), 0.0);
        assert_relative_eq!(beta_schedule::<f64>(25, 50), 0.5);
        assert_relative_eq!(beta_schedule::<f64>(120, 50), 1.0);
    }

    #[test]
    fn single_modality_beta_zero_reduces_to_weighted_recon() {
        let model = toy_model(9);
        let (a, b) = (toy_sample(5), toy_sample(6));
        let eps = vec![0.2, -0.1, 0.4];
        let mask = Modality::Tactile.bit();
        let total = model.subset_loss(&a, mask, &b, &[], 0.0, &eps, None).unwrap();
        let single = model.elbo(&a, mask, &b, &[], 0.0, &eps, None).unwrap();
        assert_relative_eq!(total.loss, single.loss, epsilon = 1e-15);
        let expected: f64 = (0..3).map(|m| model.spec.lambda[m] * single.recon[m]).sum();
        assert_relative_eq!(single.loss, expected, epsilon = 1e-12);
    }

    #[test]
    fn gradient_check_small_model() {
        let mut model = toy_model(7);
        assert!(model.param_count() <= 5000);
        let (a, b) = (toy_sample(7), toy_sample(8));
        let eps = vec![0.3, -0.2, 0.1];
        let err =
            gradient_check(&mut model, &a, MASK_ALL, &b, &[], 0.8, &eps, 200, 1e-5).unwrap();
        assert!(err < 1e-4, "max relative gradient error {err}");
    }

    #[test]
    fn gradient_check_error_scales_quadratically() {
        let mut model = toy_model(7);
        let (a, b) = (toy_sample(7), toy_sample(8));
        let eps = vec![0.3, -0.2, 0.1];
        // central differences are O(h²) while truncation dominates; compare
        // at coarse steps where cancellation noise is negligible
        let e1 = gradient_check(&mut model, &a, MASK_ALL, &b, &[], 0.8, &eps, 60, 1e-1).unwrap();
        let e2 = gradient_check(&mut model, &a, MASK_ALL, &b, &[], 0.8, &eps, 60, 1e-2).unwrap();
        assert!(e2 < e1 / 10.0, "h=1e-2 error {e2} should be ≳100x below h=1e-1 error {e1}");
    }

    #[test]
    fn predict_mean_mode_deterministic_and_complete() {
        let model = toy_model(2);
        let a = toy_sample(9);
        let p1 = model.predict(&a, Modality::Visual.bit(), &[], None).unwrap();
        let p2 = model.predict(&a, Modality::Visual.bit(), &[], None).unwrap();
        assert_eq!(p1.visual, p2.visual);
        assert_eq!(p1.pose, p2.pose);
        // cross-modal generation: visual-only input still yields all heads
        assert!(p1.visual.is_some() && p1.tactile.is_some() && p1.pose.is_some());
        assert!(p1.tactile.unwrap().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn conditioned_model_uses_condition() {
        let mut spec = ModelSpec::toy(2, 3, vec![8]);
        spec.cond_dim = 3;
        let model = MvaeModel::new(spec, 5).unwrap();
        let a = toy_sample(10);
        let p1 = model.predict(&a, MASK_ALL, &[0.0, 0.0, 0.0], None).unwrap();
        let p2 = model.predict(&a, MASK_ALL, &[5.0, 1.0, 0.0], None).unwrap();
        assert_ne!(p1.pose, p2.pose, "condition must influence the prediction");
        assert!(model.predict(&a, MASK_ALL, &[], None).is_err());
    }

    #[test]
    fn unimodal_model_disables_other_heads() {
        let mut spec = ModelSpec::toy(2, 3, vec![8]);
        spec.enabled = [true, false, false];
        let model = MvaeModel::new(spec, 6).unwrap();
        let a = toy_sample(11);
        let p = model.predict(&a, MASK_ALL, &[], None).unwrap();
        assert!(p.visual.is_some());
        assert!(p.tactile.is_none() && p.pose.is_none());
        // tactile-only input has no enabled encoder
        assert!(model.predict(&a, Modality::Tactile.bit(), &[], None).is_err());
    }
}
