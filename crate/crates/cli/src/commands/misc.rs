//! Small one-shot commands: dataset inspection, a demo render, and the
//! finite-difference gradient check.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gelsim::dataset::{episode_dir, list_ids, Sample};
use gelsim::geom::{Quat, Vec3};
use gelsim::mvae::{gradient_check, standard_normal, ModelSpec, MvaeModel, MASK_ALL};
use gelsim::scene::episode::render_frame;
use gelsim::scene::{Pose, RigidBody, Shape};

use crate::config::load_app_config;
use crate::draw;

pub fn inspect(data: &Path, id: Option<u64>) -> Result<()> {
    if let Some(id) = id {
        let meta = std::fs::read_to_string(episode_dir(data, id).join("meta"))
            .with_context(|| format!("episode {id} not found under {}", data.display()))?;
        print!("{meta}");
        return Ok(());
    }
    let ids = list_ids(data)?;
    if ids.is_empty() {
        bail!("no episodes under {}", data.display());
    }
    let mut by_scenario = std::collections::BTreeMap::<String, usize>::new();
    let mut resting = 0usize;
    let mut fell_off = 0usize;
    let mut frames = 0usize;
    for &id in &ids {
        let meta = std::fs::read_to_string(episode_dir(data, id).join("meta"))
            .with_context(|| format!("reading meta of episode {id}"))?;
        for line in meta.lines() {
            let Some((k, v)) = line.split_once('=') else { continue };
            let (k, v) = (k.trim(), v.trim());
            match k {
                "scenario" => *by_scenario.entry(v.to_string()).or_default() += 1,
                "resting" if v == "true" => resting += 1,
                "fell_off" if v == "true" => fell_off += 1,
                "frames" => frames += v.parse::<usize>().unwrap_or(0),
                _ => {}
            }
        }
    }
    println!("episodes = {}", ids.len());
    for (k, n) in &by_scenario {
        println!("scenario.{k} = {n}");
    }
    println!("resting = {resting}");
    println!("fell_off = {fell_off}");
    println!("total_frames = {frames}");
    Ok(())
}

/// Press a sphere a fixed depth into the gel and save the tactile and visual
/// frames, mostly as a smoke test of the render stack.
pub fn render_demo(config: Option<&Path>, out: PathBuf) -> Result<()> {
    let app = load_app_config(config)?;
    let radius = 0.01;
    let depth = 0.0015;
    let pose = Pose {
        position: Vec3::new(0.0, 0.0, radius - depth),
        orientation: Quat::identity(),
    };
    let body = RigidBody::new(Shape::Sphere { radius }, 0.1, pose);
    let load = body.mass * 9.81;
    let (frame, saturated) = render_frame(&body, &app.rig, load)?;

    std::fs::create_dir_all(&out)?;
    draw::save_png(&frame.visual, &out.join("demo_visual.png"))?;
    draw::save_png(&frame.tactile, &out.join("demo_tactile.png"))?;
    println!(
        "wrote demo_visual.png and demo_tactile.png to {} (contact {}, saturated {})",
        out.display(),
        frame.contact_active,
        saturated
    );
    Ok(())
}

/// Compare analytic gradients against central finite differences on a small
/// seeded model. Fails (exit code 2) when the worst relative error reaches
/// 1e-4.
pub fn gradcheck(seed: u64) -> Result<()> {
    let spec: ModelSpec<f64> = ModelSpec::toy(4, 4, vec![12]);
    let mut model = MvaeModel::new(spec, seed)?;
    let n = model.param_count();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1CE);
    let dim = 3 * 4 * 4;
    let image = |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.gen_range(0.05..0.95)).collect::<Vec<f64>>();
    let mut pose = [0.0; 7];
    pose.iter_mut().for_each(|p| *p = rng.gen_range(-0.5..0.5));
    let input = Sample { visual: image(&mut rng), tactile: image(&mut rng), pose };
    let mut tpose = [0.0; 7];
    tpose.iter_mut().for_each(|p| *p = rng.gen_range(-0.5..0.5));
    let target = Sample { visual: image(&mut rng), tactile: image(&mut rng), pose: tpose };
    let eps: Vec<f64> = (0..model.spec.latent).map(|_| standard_normal(&mut rng)).collect();

    let checks = 200.min(n);
    let max_err = gradient_check(&mut model, &input, MASK_ALL, &target, &[], 1.0, &eps, checks, 1e-5)?;
    println!("checked {checks} of {n} parameters, max relative error {max_err:.3e}");
    if max_err >= 1e-4 {
        bail!("gradient check failed: max relative error {max_err:.3e} >= 1e-4");
    }
    Ok(())
}
