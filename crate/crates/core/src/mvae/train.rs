//! Deterministic training loop over extracted pairs, plus checkpoint
//! save/load in the tns container.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::tns::{self, Tensor};
use crate::dataset::TrainingPair;
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::adam::{adam_step, AdamParams, AdamState};
use super::gauss::bce_probs;
use super::model::{beta_schedule, Modality, ModalityMask, ModelSpec, MvaeModel, N_MODALITIES};

#[derive(Debug, Clone, Copy)]
pub struct TrainParams<R> {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: R,
    pub anneal_epochs: usize,
    pub seed: u64,
    /// Nonzero when resuming; epoch numbering continues from here.
    pub start_epoch: usize,
}

impl<R: Real> Default for TrainParams<R> {
    fn default() -> Self {
        Self { epochs: 50, batch_size: 64, lr: R::c(1e-3), anneal_epochs: 50, seed: 0, start_epoch: 0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStats<R> {
    pub epoch: usize,
    pub beta: R,
    pub train_loss: R,
    pub val_loss: R,
    pub val_visual_bce: R,
    pub val_tactile_bce: R,
    pub val_pose_mse: R,
    pub clamp_events: usize,
}

/// Standard normal via Box-Muller, driven by the ChaCha stream.
pub fn standard_normal<R: Real>(rng: &mut ChaCha8Rng) -> R {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    R::c((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
}

fn available_mask<R: Real>(pair: &TrainingPair<R>) -> ModalityMask {
    let mut mask = Modality::Visual.bit() | Modality::Pose.bit();
    if pair.tactile_available {
        mask |= Modality::Tactile.bit();
    }
    mask
}

fn condition_vec<R: Real>(model: &MvaeModel<R>, pair: &TrainingPair<R>) -> Vec<R> {
    if model.spec.cond_dim == 0 {
        Vec::new()
    } else {
        pair.condition.map_or_else(|| vec![R::zero(); model.spec.cond_dim], |c| c.to_vec())
    }
}

/// Validation metrics: mean-mode predictions against the pair targets.
pub fn validate<R: Real>(model: &MvaeModel<R>, pairs: &[TrainingPair<R>], beta: R) -> Result<EpochStats<R>> {
    let mut stats = EpochStats {
        epoch: 0,
        beta,
        train_loss: R::zero(),
        val_loss: R::zero(),
        val_visual_bce: R::zero(),
        val_tactile_bce: R::zero(),
        val_pose_mse: R::zero(),
        clamp_events: 0,
    };
    let eps = vec![R::zero(); model.spec.latent];
    let mut n_vis = 0usize;
    let mut n_tac = 0usize;
    let mut n_pose = 0usize;
    for pair in pairs {
        let mask = available_mask(pair) & model.enabled_mask();
        if mask == 0 {
            continue;
        }
        let cond = condition_vec(model, pair);
        let terms = model.subset_loss(&pair.input, mask, &pair.target, &cond, beta, &eps, None)?;
        stats.val_loss += terms.loss;
        stats.clamp_events += terms.clamp_events;
        let pred = model.predict(&pair.input, mask, &cond, None)?;
        if let Some(v) = &pred.visual {
            stats.val_visual_bce += bce_probs(v, &pair.target.visual)?;
            n_vis += 1;
        }
        if let Some(t) = &pred.tactile {
            stats.val_tactile_bce += bce_probs(t, &pair.target.tactile)?;
            n_tac += 1;
        }
        if let Some(p) = &pred.pose {
            let mse: R = p
                .iter()
                .zip(&pair.target.pose)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<R>()
                / R::c(7.0);
            stats.val_pose_mse += mse;
            n_pose += 1;
        }
    }
    let n = R::from_usize(pairs.len().max(1)).unwrap();
    stats.val_loss /= n;
    if n_vis > 0 {
        stats.val_visual_bce /= R::from_usize(n_vis).unwrap();
    }
    if n_tac > 0 {
        stats.val_tactile_bce /= R::from_usize(n_tac).unwrap();
    }
    if n_pose > 0 {
        stats.val_pose_mse /= R::from_usize(n_pose).unwrap();
    }
    Ok(stats)
}

/// Seeded full-batch-deterministic training: shuffle, batch, powerset loss,
/// hand-derived backprop, Adam. Returns per-epoch stats.
pub fn train<R: Real>(
    model: &mut MvaeModel<R>,
    adam: &mut AdamState<R>,
    train_pairs: &[TrainingPair<R>],
    val_pairs: &[TrainingPair<R>],
    p: &TrainParams<R>,
) -> Result<Vec<EpochStats<R>>> {
    if train_pairs.is_empty() {
        return Err(Error::InvalidParameter("empty training split".into()));
    }
    if p.batch_size == 0 || p.epochs == 0 {
        return Err(Error::InvalidParameter("epochs and batch size must be positive".into()));
    }
    let adam_cfg = AdamParams { lr: p.lr, ..AdamParams::default() };
    let latent = model.spec.latent;
    let mut curve = Vec::with_capacity(p.epochs);

    for epoch in p.start_epoch..p.start_epoch + p.epochs {
        let beta = beta_schedule::<R>(epoch, p.anneal_epochs);
        // one stream per epoch: shuffling and noise are independent of how
        // earlier epochs consumed randomness
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ (epoch as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let mut order: Vec<usize> = (0..train_pairs.len()).collect();
        order.shuffle(&mut rng);

        let mut epoch_loss = R::zero();
        let mut clamp_events = 0usize;
        let mut grads = vec![R::zero(); model.param_count()];
        for (batch_idx, batch) in order.chunks(p.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| *g = R::zero());
            let mut batch_loss = R::zero();
            for &i in batch {
                let pair = &train_pairs[i];
                let mask = available_mask(pair) & model.enabled_mask();
                if mask == 0 {
                    continue;
                }
                let cond = condition_vec(model, pair);
                let eps: Vec<R> = (0..latent).map(|_| standard_normal(&mut rng)).collect();
                let terms = model
                    .subset_loss(&pair.input, mask, &pair.target, &cond, beta, &eps, Some(&mut grads))
                    .map_err(|e| {
                        Error::TrainingDiverged(format!("epoch {epoch}, batch {batch_idx}: {e}"))
                    })?;
                batch_loss += terms.loss;
                clamp_events += terms.clamp_events;
            }
            let inv = R::one() / R::from_usize(batch.len()).unwrap();
            grads.iter_mut().for_each(|g| *g *= inv);
            adam_step(&mut model.params, &grads, adam, &adam_cfg).map_err(|e| {
                Error::TrainingDiverged(format!("epoch {epoch}, batch {batch_idx}: {e}"))
            })?;
            epoch_loss += batch_loss;
        }

        let mut stats = validate(model, val_pairs, beta)?;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / R::from_usize(train_pairs.len()).unwrap();
        stats.clamp_events += clamp_events;
        if !stats.train_loss.is_finite() {
            return Err(Error::TrainingDiverged(format!("epoch {epoch}: non-finite mean loss")));
        }
        curve.push(stats);
    }
    Ok(curve)
}

/// CSV serialization of the loss curve (header + one row per epoch).
pub fn curve_to_csv<R: Real>(curve: &[EpochStats<R>]) -> String {
    let mut s = String::from(
        "epoch,beta,train_loss,val_loss,val_visual_bce,val_tactile_bce,val_pose_mse,clamp_events\n",
    );
    for e in curve {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            e.epoch,
            e.beta.to_f64c(),
            e.train_loss.to_f64c(),
            e.val_loss.to_f64c(),
            e.val_visual_bce.to_f64c(),
            e.val_tactile_bce.to_f64c(),
            e.val_pose_mse.to_f64c(),
            e.clamp_events
        ));
    }
    s
}

/// Checkpoint = `model.tns` (params, Adam moments) + `manifest` (key=value).
pub fn save_checkpoint<R: Real>(
    model: &MvaeModel<R>,
    adam: &AdamState<R>,
    epoch: usize,
    pair_mode: &str,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let to_f32 = |v: &[R]| v.iter().map(|x| x.to_f64c() as f32).collect::<Vec<f32>>();
    let n = model.params.len();
    let tensors = vec![
        Tensor::new(vec![n], to_f32(&model.params))?,
        Tensor::new(vec![n], to_f32(&adam.m))?,
        Tensor::new(vec![n], to_f32(&adam.v))?,
    ];
    tns::write_file(&dir.join("model.tns"), &tensors)?;

    let s = &model.spec;
    let join = |xs: &[String]| xs.join(",");
    let manifest = format!(
        "latent = {}\ncond_dim = {}\nhidden = {}\nimage_width = {}\nimage_height = {}\n\
         lambda = {}\nenabled = {}\nseed = {}\nepoch = {}\nadam_step = {}\npair_mode = {}\n",
        s.latent,
        s.cond_dim,
        join(&s.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>()),
        s.image_width,
        s.image_height,
        join(&s.lambda.iter().map(|l| l.to_f64c().to_string()).collect::<Vec<_>>()),
        join(&s.enabled.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
        model.seed,
        epoch,
        adam.step,
        pair_mode,
    );
    std::fs::write(dir.join("manifest"), manifest)?;
    Ok(())
}

pub struct Checkpoint<R> {
    pub model: MvaeModel<R>,
    pub adam: AdamState<R>,
    pub epoch: usize,
    pub pair_mode: String,
}

pub fn load_checkpoint<R: Real>(dir: &Path) -> Result<Checkpoint<R>> {
    let manifest = std::fs::read_to_string(dir.join("manifest"))
        .map_err(|e| Error::BadCheckpoint(format!("missing manifest: {e}")))?;
    let mut kv = std::collections::BTreeMap::new();
    for line in manifest.lines() {
        if let Some((k, v)) = line.split_once('=') {
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &str| {
        kv.get(k)
            .cloned()
            .ok_or_else(|| Error::BadCheckpoint(format!("manifest missing '{k}'")))
    };
    let parse_usize =
        |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| Error::BadCheckpoint(format!("bad '{k}'"))) };

    let hidden_raw = get("hidden")?;
    let hidden: Vec<usize> = if hidden_raw.is_empty() {
        Vec::new()
    } else {
        hidden_raw
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::BadCheckpoint("bad hidden sizes".into())))
            .collect::<Result<_>>()?
    };
    let lambda_v: Vec<R> = get("lambda")?
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map(R::c)
                .map_err(|_| Error::BadCheckpoint("bad lambda".into()))
        })
        .collect::<Result<_>>()?;
    let enabled_v: Vec<bool> = get("enabled")?
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::BadCheckpoint("bad enabled flags".into())))
        .collect::<Result<_>>()?;
    if lambda_v.len() != N_MODALITIES || enabled_v.len() != N_MODALITIES {
        return Err(Error::BadCheckpoint("manifest modality lists must have 3 entries".into()));
    }

    let spec = ModelSpec {
        latent: parse_usize("latent")?,
        cond_dim: parse_usize("cond_dim")?,
        hidden,
        image_width: parse_usize("image_width")?,
        image_height: parse_usize("image_height")?,
        lambda: [lambda_v[0], lambda_v[1], lambda_v[2]],
        enabled: [enabled_v[0], enabled_v[1], enabled_v[2]],
    };
    let seed: u64 = get("seed")?.parse().map_err(|_| Error::BadCheckpoint("bad seed".into()))?;
    let mut model = MvaeModel::new(spec, seed)?;

    let tensors = tns::read_file(&dir.join("model.tns"))
        .map_err(|e| Error::BadCheckpoint(format!("bad model.tns: {e}")))?;
    if tensors.len() != 3 || tensors.iter().any(|t| t.len() != model.param_count()) {
        return Err(Error::BadCheckpoint("model.tns does not match the manifest dims".into()));
    }
    let from_f32 = |t: &Tensor| t.data.iter().map(|&x| R::c(x as f64)).collect::<Vec<R>>();
    model.params = from_f32(&tensors[0]);
    let mut adam = AdamState::new(model.param_count());
    adam.m = from_f32(&tensors[1]);
    adam.v = from_f32(&tensors[2]);
    adam.step = get("adam_step")?.parse().map_err(|_| Error::BadCheckpoint("bad adam_step".into()))?;

    Ok(Checkpoint { model, adam, epoch: parse_usize("epoch")?, pair_mode: get("pair_mode")? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Sample;

    fn toy_pairs(n: usize, seed: u64) -> Vec<TrainingPair<f32>> {
        // two latent "shapes": targets depend deterministically on the input class
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let class = (i % 2) as f32;
                let noise = |rng: &mut ChaCha8Rng| rng.gen_range(-0.05..0.05f32);
                let vis: Vec<f32> =
                    (0..12).map(|j| (0.2 + 0.6 * class * ((j % 2) as f32) + noise(&mut rng)).clamp(0.0, 1.0)).collect();
                let tac: Vec<f32> =
                    (0..12).map(|j| (0.8 - 0.6 * class * ((j / 6) as f32) + noise(&mut rng)).clamp(0.0, 1.0)).collect();
                let pose = [0.1 * class, -0.1, 0.05, 1.0, 0.0, 0.0, 0.0];
                let s = Sample { visual: vis, tactile: tac, pose };
                TrainingPair { input: s.clone(), tactile_available: i % 3 != 0, condition: None, target: s }
            })
            .collect()
    }

    fn toy_model(seed: u64) -> MvaeModel<f32> {
        MvaeModel::new(ModelSpec::toy(2, 3, vec![10]), seed).unwrap()
    }

    #[test]
    fn loss_decreases_on_toy_data() {
        let pairs = toy_pairs(40, 1);
        let mut model = toy_model(2);
        let mut adam = AdamState::new(model.param_count());
        let p = TrainParams { epochs: 30, batch_size: 8, anneal_epochs: 30, seed: 3, ..Default::default() };
        let curve = train(&mut model, &mut adam, &pairs, &pairs[..8], &p).unwrap();
        assert_eq!(curve.len(), 30);
        let first = curve[0].train_loss;
        let last = curve.last().unwrap().train_loss;
        assert!(last < 0.5 * first, "train loss {first} -> {last}");
    }

    #[test]
    fn training_is_bit_deterministic() {
        let pairs = toy_pairs(24, 5);
        let run = || {
            let mut model = toy_model(7);
            let mut adam = AdamState::new(model.param_count());
            let p = TrainParams { epochs: 5, batch_size: 6, seed: 11, ..Default::default() };
            let curve = train(&mut model, &mut adam, &pairs, &pairs[..6], &p).unwrap();
            (model.params, curve_to_csv(&curve))
        };
        let (pa, ca) = run();
        let (pb, cb) = run();
        assert_eq!(ca, cb);
        assert!(pa.iter().zip(&pb).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn checkpoint_round_trip_and_resume() {
        let pairs = toy_pairs(16, 9);
        let mut model = toy_model(4);
        let mut adam = AdamState::new(model.param_count());
        let p = TrainParams { epochs: 3, batch_size: 8, seed: 2, ..Default::default() };
        train(&mut model, &mut adam, &pairs, &pairs[..4], &p).unwrap();

        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&model, &adam, 3, "final_step", dir.path()).unwrap();
        let ck: Checkpoint<f32> = load_checkpoint(dir.path()).unwrap();
        assert_eq!(ck.epoch, 3);
        assert_eq!(ck.pair_mode, "final_step");
        assert_eq!(ck.model.spec, model.spec);
        assert!(ck.model.params.iter().zip(&model.params).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(ck.adam.step, adam.step);

        // resuming continues epoch numbering
        let mut resumed = ck.model;
        let mut adam2 = ck.adam;
        let p2 = TrainParams { epochs: 2, batch_size: 8, seed: 2, start_epoch: ck.epoch, ..Default::default() };
        let curve = train(&mut resumed, &mut adam2, &pairs, &pairs[..4], &p2).unwrap();
        assert_eq!(curve[0].epoch, 3);
        assert_eq!(curve[1].epoch, 4);
    }

    #[test]
    fn empty_split_rejected() {
        let mut model = toy_model(4);
        let mut adam = AdamState::new(model.param_count());
        let p = TrainParams::<f32>::default();
        assert!(train(&mut model, &mut adam, &[], &[], &p).is_err());
    }

    #[test]
    fn csv_has_strictly_increasing_epochs() {
        let pairs = toy_pairs(12, 3);
        let mut model = toy_model(1);
        let mut adam = AdamState::new(model.param_count());
        let p = TrainParams { epochs: 4, batch_size: 4, seed: 8, ..Default::default() };
        let curve = train(&mut model, &mut adam, &pairs, &pairs[..4], &p).unwrap();
        let csv = curve_to_csv(&curve);
        let epochs: Vec<usize> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert!(epochs.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn standard_normal_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
