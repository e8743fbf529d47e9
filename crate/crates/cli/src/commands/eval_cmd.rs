//! Score trained checkpoints on the validation split, emit the results
//! table, and render side-by-side prediction strips.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use gelsim::mvae::{evaluate, load_checkpoint, mean_tactile_baseline, Modality, MvaeModel};
use gelsim::scene::EpisodeRecord;

use crate::config::load_app_config;
use crate::draw;

/// Stride for the recursive rollout: the k of a fixed_step(k) checkpoint,
/// falling back to the config's eval.rollout_stride.
fn rollout_stride(pair_mode: &str, fallback: usize) -> usize {
    pair_mode
        .strip_prefix("fixed_step(")
        .and_then(|s| s.strip_suffix(')'))
        .and_then(|s| s.parse().ok())
        .unwrap_or(fallback)
}

pub fn run(
    config: Option<&Path>,
    checkpoint: Option<&Path>,
    rollout_checkpoint: Option<&Path>,
    data: &Path,
    out: PathBuf,
    strips: usize,
) -> Result<()> {
    if checkpoint.is_none() && rollout_checkpoint.is_none() {
        bail!("eval needs --checkpoint and/or --rollout-checkpoint");
    }
    let app = load_app_config(config)?;

    let final_ck = checkpoint
        .map(|p| load_checkpoint::<f64>(p).with_context(|| format!("loading checkpoint {}", p.display())))
        .transpose()?;
    let step_ck = rollout_checkpoint
        .map(|p| load_checkpoint::<f64>(p).with_context(|| format!("loading checkpoint {}", p.display())))
        .transpose()?;

    let (_, val_eps) =
        super::train_cmd::load_split_episodes(data, app.split_fraction, app.split_seed)?;
    let prep = super::train_cmd::prep_for(&app);

    let step_arg = step_ck
        .as_ref()
        .map(|ck| (&ck.model, rollout_stride(&ck.pair_mode, app.rollout_stride)));
    let table = evaluate(final_ck.as_ref().map(|ck| &ck.model), step_arg, &val_eps, &prep)?;
    let baseline = mean_tactile_baseline(&val_eps, &prep)?;

    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("metrics.csv"), table.to_csv())?;
    let mut text = table.to_text();
    text.push_str(&format!("mean_tactile_baseline  {baseline:.6}\n"));
    std::fs::write(out.join("metrics.txt"), &text)?;

    let manifest = format!(
        "data_root = {}\nconfig_hash = {}\ntool_version = {}\nval_episodes = {}\n\
         checkpoint = {}\nrollout_checkpoint = {}\nmean_tactile_baseline = {}\n",
        data.display(),
        super::config_hash(config)?,
        super::tool_version(),
        val_eps.len(),
        checkpoint.map_or("none".into(), |p| p.display().to_string()),
        rollout_checkpoint.map_or("none".into(), |p| p.display().to_string()),
        baseline,
    );
    std::fs::write(out.join("manifest"), manifest)?;

    if strips > 0 {
        let model = final_ck
            .as_ref()
            .map(|ck| &ck.model)
            .or(step_ck.as_ref().map(|ck| &ck.model))
            .unwrap();
        let dir = out.join("strips");
        std::fs::create_dir_all(&dir)?;
        for (i, rec) in val_eps.iter().take(strips).enumerate() {
            let img = render_strip(model, rec, &prep)?;
            draw::save_png(&img, &dir.join(format!("strip_{i:03}.png")))?;
        }
        println!("wrote {} prediction strips to {}", strips.min(val_eps.len()), dir.display());
    }

    print!("{text}");
    Ok(())
}

/// Panels left to right: input visual, input tactile, predicted final visual
/// and tactile, ground-truth final visual and tactile. Pose axes are drawn
/// solid for ground truth and dashed for the prediction. Episodes that fell
/// off the sensor get blank prediction panels.
fn render_strip(
    model: &MvaeModel<f64>,
    rec: &EpisodeRecord<f64>,
    prep: &gelsim::dataset::SamplePrep<f64>,
) -> Result<draw::Img> {
    let (w, h) = (model.spec.image_width, model.spec.image_height);
    let scale = (96 / w.max(h)).max(1);
    let input = prep.sample(&rec.frames[0])?;
    let target = prep.sample(rec.frames.last().unwrap())?;
    let cond = rec
        .condition()
        .map(|c| c.to_vec())
        .filter(|_| model.spec.cond_dim > 0)
        .unwrap_or_else(|| vec![0.0; model.spec.cond_dim]);

    let blank = || gelsim::render::ImageRgb::constant(w, h, [0.0; 3]);
    let (pred_vis, pred_tac, pred_pose) = if rec.rest.fell_off_sensor {
        (blank(), blank(), None)
    } else {
        let mask = (Modality::Visual.bit() | Modality::Pose.bit()) & model.enabled_mask();
        if mask == 0 {
            (blank(), blank(), None)
        } else {
            let pred = model.predict(&input, mask, &cond, None)?;
            (
                pred.visual.map_or_else(blank, |v| draw::panel_from_chw(&v, w, h)),
                pred.tactile.map_or_else(blank, |t| draw::panel_from_chw(&t, w, h)),
                pred.pose,
            )
        }
    };

    let mut in_vis = draw::upscale_nearest(&draw::panel_from_chw(&input.visual, w, h), scale);
    draw::draw_pose_axes(&mut in_vis, &input.pose, false);
    let in_tac = draw::upscale_nearest(&draw::panel_from_chw(&input.tactile, w, h), scale);

    let mut pv = draw::upscale_nearest(&pred_vis, scale);
    if let Some(p) = pred_pose {
        draw::draw_pose_axes(&mut pv, &p, true);
    }
    let pt = draw::upscale_nearest(&pred_tac, scale);

    let mut gt_vis = draw::upscale_nearest(&draw::panel_from_chw(&target.visual, w, h), scale);
    draw::draw_pose_axes(&mut gt_vis, &target.pose, false);
    let gt_tac = draw::upscale_nearest(&draw::panel_from_chw(&target.tactile, w, h), scale);

    Ok(draw::hstack(&[in_vis, in_tac, pv, pt, gt_vis, gt_tac], [0.3; 3]))
}
