//! Flat key=value configuration with `[section]` headers. Unknown keys are
//! rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

use gelsim::dataset::PairMode;
use gelsim::scene::{EpisodeParams, SensorGeometry, SensorRig, ScenarioConfig, ScenarioKind, ShapeKind};
use gelsim::compliance::SpringField;
use gelsim::mvae::{ModelSpec, TrainParams, N_MODALITIES};

#[derive(Debug, Clone)]
pub struct Raw {
    entries: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl Raw {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected 'key = value', got '{line}'", ln + 1);
            };
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("config key '{key}' given twice");
            }
        }
        Ok(Self { entries, consumed: Default::default() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key).map(String::as_str);
        if v.is_some() {
            self.consumed.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("config key '{key}' = '{v}' is not a number")),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("config key '{key}' = '{v}' is not an integer")),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("config key '{key}' = '{v}' is not an integer")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => bail!("config key '{key}' = '{v}' is not a bool"),
        }
    }

    pub fn range_or(&self, key_min: &str, key_max: &str, default: (f64, f64)) -> Result<(f64, f64)> {
        let lo = self.f64_or(key_min, default.0)?;
        let hi = self.f64_or(key_max, default.1)?;
        if lo > hi {
            bail!("config range {key_min}={lo} > {key_max}={hi}");
        }
        Ok((lo, hi))
    }

    /// Error on any key never read — catches misspelled options.
    pub fn finish(&self) -> Result<()> {
        let consumed = self.consumed.borrow();
        let stray: Vec<&String> = self.entries.keys().filter(|k| !consumed.contains(*k)).collect();
        if !stray.is_empty() {
            bail!("unknown config keys: {stray:?}");
        }
        Ok(())
    }
}

pub struct AppConfig {
    pub rig: SensorRig<f64>,
    pub scenario: ScenarioConfig<f64>,
    pub episode: EpisodeParams<f64>,
    pub model: ModelSpec<f64>,
    pub train: TrainParams<f64>,
    pub split_fraction: f64,
    pub split_seed: u64,
    pub pair_mode: PairMode,
    /// Rollout stride used by eval's multi-step column.
    pub rollout_stride: usize,
}

pub fn sensor_rig(raw: &Raw) -> Result<SensorRig<f64>> {
    let geometry = SensorGeometry {
        width_px: raw.usize_or("sensor.width_px", 32)?,
        height_px: raw.usize_or("sensor.height_px", 32)?,
        pitch: raw.f64_or("sensor.pitch", 2e-3)?,
        gel_thickness: raw.f64_or("sensor.gel_thickness", 5e-3)?,
    };
    let stiffness = raw.f64_or("sensor.stiffness", SpringField::<f64>::default_stiffness())?;
    let springs = SpringField::new(stiffness, geometry.gel_thickness, geometry.pitch)?;
    Ok(SensorRig::with_defaults(geometry, springs))
}

pub fn scenario_config(raw: &Raw) -> Result<ScenarioConfig<f64>> {
    let kind = ScenarioKind::parse(&raw.str_or("scenario.kind", "freefall"))?;
    let mut cfg = ScenarioConfig::defaults(kind);
    cfg.episodes = raw.usize_or("scenario.episodes", cfg.episodes)?;
    cfg.seed = raw.u64_or("scenario.seed", cfg.seed)?;
    cfg.gravity = raw.f64_or("scenario.gravity", cfg.gravity)?;
    if let Some(shapes) = raw.get("scenario.shapes") {
        cfg.shapes = shapes
            .split(',')
            .map(|s| ShapeKind::parse(s.trim()))
            .collect::<gelsim::Result<_>>()?;
        if cfg.shapes.is_empty() {
            bail!("scenario.shapes must list at least one shape");
        }
    }
    cfg.size_range = raw.range_or("scenario.size_min", "scenario.size_max", cfg.size_range)?;
    cfg.mass_range = raw.range_or("scenario.mass_min", "scenario.mass_max", cfg.mass_range)?;
    cfg.friction_range =
        raw.range_or("scenario.friction_min", "scenario.friction_max", cfg.friction_range)?;
    cfg.restitution_range =
        raw.range_or("scenario.restitution_min", "scenario.restitution_max", cfg.restitution_range)?;
    cfg.drop_height_range =
        raw.range_or("scenario.drop_min", "scenario.drop_max", cfg.drop_height_range)?;
    cfg.spawn_jitter = raw.f64_or("scenario.spawn_jitter", cfg.spawn_jitter)?;
    cfg.incline_angle_range =
        raw.range_or("scenario.incline_min", "scenario.incline_max", cfg.incline_angle_range)?;
    cfg.perturb_accel_range =
        raw.range_or("scenario.perturb_accel_min", "scenario.perturb_accel_max", cfg.perturb_accel_range)?;
    cfg.perturb_duration = raw.f64_or("scenario.perturb_duration", cfg.perturb_duration)?;
    Ok(cfg)
}

pub fn episode_params(raw: &Raw) -> Result<EpisodeParams<f64>> {
    let d = EpisodeParams::<f64>::default();
    Ok(EpisodeParams {
        dt: raw.f64_or("episode.dt", d.dt)?,
        max_frames: raw.usize_or("episode.max_frames", d.max_frames)?,
        frame_stride: raw.usize_or("episode.frame_stride", d.frame_stride)?,
        lin_thresh: raw.f64_or("episode.lin_thresh", d.lin_thresh)?,
        ang_thresh: raw.f64_or("episode.ang_thresh", d.ang_thresh)?,
        rest_window: raw.usize_or("episode.rest_window", d.rest_window)?,
    })
}

pub fn model_spec(raw: &Raw, conditioned_default: bool) -> Result<ModelSpec<f64>> {
    let side = raw.usize_or("model.image_side", 16)?;
    let latent = raw.usize_or("model.latent", 16)?;
    let hidden: Vec<usize> = raw
        .str_or("model.hidden", "64,32")
        .split(',')
        .map(|s| s.trim().parse().context("model.hidden must be comma-separated integers"))
        .collect::<Result<_>>()?;
    let conditioned = raw.bool_or("model.conditioned", conditioned_default)?;
    let lambda = [
        raw.f64_or("model.lambda_visual", 1.0)?,
        raw.f64_or("model.lambda_tactile", 1.0)?,
        raw.f64_or("model.lambda_pose", 1000.0)?,
    ];
    let mut enabled = [true; N_MODALITIES];
    if let Some(list) = raw.get("model.enabled") {
        enabled = [false; N_MODALITIES];
        for name in list.split(',') {
            match name.trim() {
                "visual" => enabled[0] = true,
                "tactile" => enabled[1] = true,
                "pose" => enabled[2] = true,
                other => bail!("model.enabled: unknown modality '{other}'"),
            }
        }
    }
    Ok(ModelSpec {
        latent,
        cond_dim: if conditioned { 3 } else { 0 },
        hidden,
        image_width: side,
        image_height: side,
        lambda,
        enabled,
    })
}

pub fn train_params(raw: &Raw) -> Result<TrainParams<f64>> {
    let d = TrainParams::<f64>::default();
    Ok(TrainParams {
        epochs: raw.usize_or("train.epochs", d.epochs)?,
        batch_size: raw.usize_or("train.batch_size", d.batch_size)?,
        lr: raw.f64_or("train.lr", 1e-3)?,
        anneal_epochs: raw.usize_or("train.anneal_epochs", d.anneal_epochs)?,
        seed: raw.u64_or("train.seed", 0)?,
        start_epoch: 0,
    })
}

pub fn load_app_config(path: Option<&Path>) -> Result<AppConfig> {
    let raw = match path {
        Some(p) => Raw::load(p)?,
        None => Raw::parse("")?,
    };
    let scenario = scenario_config(&raw)?;
    let conditioned_default = scenario.kind == ScenarioKind::Perturb;
    let cfg = AppConfig {
        rig: sensor_rig(&raw)?,
        scenario,
        episode: episode_params(&raw)?,
        model: model_spec(&raw, conditioned_default)?,
        train: train_params(&raw)?,
        split_fraction: raw.f64_or("train.split_fraction", 0.8)?,
        split_seed: raw.u64_or("train.split_seed", 0)?,
        pair_mode: PairMode::parse(&raw.str_or("train.mode", "final_step"))?,
        rollout_stride: raw.usize_or("eval.rollout_stride", 1)?,
    };
    raw.finish()?;
    if cfg.rig.geometry.width_px % cfg.model.image_width != 0
        || cfg.rig.geometry.height_px % cfg.model.image_height != 0
    {
        bail!(
            "sensor resolution {}x{} must be a multiple of the model resolution {}x{}",
            cfg.rig.geometry.width_px,
            cfg.rig.geometry.height_px,
            cfg.model.image_width,
            cfg.model.image_height
        );
    }
    Ok(cfg)
}
