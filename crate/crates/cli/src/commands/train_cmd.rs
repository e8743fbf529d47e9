//! Training entry point: split, pair extraction, model construction or
//! resume, the training loop, and its artifacts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use gelsim::dataset::{episode_dir, list_ids, make_pairs, read_episode, split, PairMode, SamplePrep, TrainingPair};
use gelsim::mvae::{load_checkpoint, save_checkpoint, train, AdamState, MvaeModel};
use gelsim::scene::EpisodeRecord;

use crate::config::{load_app_config, AppConfig};

pub fn mode_name(mode: PairMode) -> String {
    match mode {
        PairMode::FinalStep => "final_step".into(),
        PairMode::FixedStep(k) => format!("fixed_step({k})"),
    }
}

pub fn load_split_episodes(
    data: &Path,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<EpisodeRecord<f64>>, Vec<EpisodeRecord<f64>>)> {
    let ids = list_ids(data)?;
    if ids.len() < 2 {
        bail!("dataset at {} has {} episodes; need at least 2", data.display(), ids.len());
    }
    let (train_ids, val_ids) = split(&ids, fraction, seed)?;
    let load = |ids: &[u64]| -> Result<Vec<EpisodeRecord<f64>>> {
        ids.iter()
            .map(|&id| {
                read_episode(&episode_dir(data, id)).with_context(|| format!("reading episode {id}"))
            })
            .collect()
    };
    Ok((load(&train_ids)?, load(&val_ids)?))
}

pub fn prep_for(app: &AppConfig) -> SamplePrep<f64> {
    SamplePrep {
        model_width: app.model.image_width,
        model_height: app.model.image_height,
        half_width: app.rig.geometry.half_width(),
    }
}

pub fn extract_pairs(
    episodes: &[EpisodeRecord<f64>],
    mode: PairMode,
    prep: &SamplePrep<f64>,
) -> Result<Vec<TrainingPair<f64>>> {
    let mut pairs = Vec::new();
    for rec in episodes {
        pairs.extend(make_pairs(rec, mode, prep)?);
    }
    Ok(pairs)
}

pub fn run(
    config: Option<&Path>,
    data: &Path,
    out: PathBuf,
    seed: Option<u64>,
    resume: Option<&Path>,
    unimodal: Option<&str>,
) -> Result<()> {
    let mut app = load_app_config(config)?;
    if let Some(s) = seed {
        app.train.seed = s;
    }
    if let Some(m) = unimodal {
        let idx = match m {
            "visual" => 0,
            "tactile" => 1,
            "pose" => 2,
            other => bail!("--unimodal must be visual, tactile, or pose; got '{other}'"),
        };
        app.model.enabled = [false; 3];
        app.model.enabled[idx] = true;
    }

    let (train_eps, val_eps) = load_split_episodes(data, app.split_fraction, app.split_seed)?;
    let prep = prep_for(&app);
    let train_pairs = extract_pairs(&train_eps, app.pair_mode, &prep)?;
    let val_pairs = extract_pairs(&val_eps, app.pair_mode, &prep)?;

    let (mut model, mut adam, start_epoch) = match resume {
        Some(dir) => {
            let ck = load_checkpoint::<f64>(dir).context("loading resume checkpoint")?;
            if ck.pair_mode != mode_name(app.pair_mode) {
                bail!(
                    "checkpoint was trained with mode {}, config asks for {}",
                    ck.pair_mode,
                    mode_name(app.pair_mode)
                );
            }
            (ck.model, ck.adam, ck.epoch)
        }
        None => {
            let model = MvaeModel::new(app.model.clone(), app.train.seed)?;
            let n = model.param_count();
            (model, AdamState::new(n), 0)
        }
    };
    let mut params = app.train;
    params.start_epoch = start_epoch;

    println!(
        "training {} params on {} pairs ({} val), epochs {}..{}",
        model.param_count(),
        train_pairs.len(),
        val_pairs.len(),
        start_epoch,
        start_epoch + params.epochs
    );
    let curve = train(&mut model, &mut adam, &train_pairs, &val_pairs, &params)?;

    std::fs::create_dir_all(&out)?;
    let ck_dir = out.join("checkpoint");
    save_checkpoint(&model, &adam, start_epoch + params.epochs, &mode_name(app.pair_mode), &ck_dir)?;

    let csv = gelsim::mvae::curve_to_csv(&curve);
    let loss_path = out.join("loss.csv");
    if resume.is_some() && loss_path.exists() {
        // resumed runs append so the curve stays monotone in epochs
        let mut existing = std::fs::read_to_string(&loss_path)?;
        existing.push_str(csv.split_once('\n').map(|(_, rest)| rest).unwrap_or(""));
        std::fs::write(&loss_path, existing)?;
    } else {
        std::fs::write(&loss_path, csv)?;
    }

    let manifest = format!(
        "data_root = {}\nconfig_hash = {}\ntool_version = {}\nsplit_fraction = {}\nsplit_seed = {}\n\
         train_seed = {}\nepochs = {}\nbatch_size = {}\nlr = {}\nanneal_epochs = {}\npair_mode = {}\n\
         unimodal = {}\nfinal_epoch = {}\n",
        data.display(),
        super::config_hash(config)?,
        super::tool_version(),
        app.split_fraction,
        app.split_seed,
        params.seed,
        params.epochs,
        params.batch_size,
        params.lr,
        params.anneal_epochs,
        mode_name(app.pair_mode),
        unimodal.unwrap_or("none"),
        start_epoch + params.epochs,
    );
    std::fs::write(out.join("manifest"), manifest)?;

    if let Some(last) = curve.last() {
        println!(
            "done: epoch {} train_loss {:.6} val_loss {:.6} val_visual_bce {:.6}",
            last.epoch, last.train_loss, last.val_loss, last.val_visual_bce
        );
    }
    Ok(())
}
