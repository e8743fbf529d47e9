//! Dataset generation across worker threads with disjoint id ranges.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use gelsim::dataset::write_episode_with_id;
use gelsim::scene::{
    incline_outcome, run_episode, sample_episode, InclineOutcome, ScenarioKind,
};

use crate::config::load_app_config;

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    rested: usize,
    fell_off: usize,
    unresolved: usize,
    saturated_frames: usize,
    stick_sim: usize,
    slide_sim: usize,
    stick_analytic: usize,
}

impl Tally {
    fn merge(&mut self, o: &Tally) {
        self.rested += o.rested;
        self.fell_off += o.fell_off;
        self.unresolved += o.unresolved;
        self.saturated_frames += o.saturated_frames;
        self.stick_sim += o.stick_sim;
        self.slide_sim += o.slide_sim;
        self.stick_analytic += o.stick_analytic;
    }
}

pub fn run(config: Option<&Path>, seed: Option<u64>, workers: usize, out: PathBuf) -> Result<()> {
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    let mut app = load_app_config(config)?;
    if let Some(s) = seed {
        app.scenario.seed = s;
    }
    std::fs::create_dir_all(&out)
        .with_context(|| format!("output root {} is not writable", out.display()))?;
    // fail before simulating if the root cannot take files
    let probe = out.join(".write-probe");
    std::fs::write(&probe, b"ok").context("output root is not writable")?;
    std::fs::remove_file(&probe)?;

    let n = app.scenario.episodes;
    let chunk = n.div_ceil(workers.max(1)).max(1);
    let scenario_cfg = &app.scenario;
    let rig = &app.rig;
    let episode_params = &app.episode;

    let tally = std::thread::scope(|scope| -> Result<Tally> {
        let mut handles = Vec::new();
        for w in 0..workers {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(n);
            if lo >= hi {
                break;
            }
            let out = out.clone();
            handles.push(scope.spawn(move || -> Result<Tally> {
                let mut t = Tally::default();
                for i in lo..hi {
                    let (scenario, body) = sample_episode(scenario_cfg, i as u64);
                    let rec = run_episode(&scenario, &body, rig, episode_params)
                        .with_context(|| format!("episode {i} failed"))?;
                    if rec.rest.resting {
                        t.rested += 1;
                    }
                    if rec.rest.fell_off_sensor {
                        t.fell_off += 1;
                    }
                    if rec.unresolved {
                        t.unresolved += 1;
                    }
                    t.saturated_frames += rec.saturated_frames;
                    if scenario.kind == ScenarioKind::Incline {
                        let moved = (rec.rest.final_pose.position - body.position).norm();
                        if moved < 1e-3 {
                            t.stick_sim += 1;
                        } else {
                            t.slide_sim += 1;
                        }
                        if incline_outcome(body.friction, scenario.incline_angle)
                            == InclineOutcome::Stick
                        {
                            t.stick_analytic += 1;
                        }
                    }
                    write_episode_with_id(&rec, &out, i as u64)
                        .with_context(|| format!("writing episode {i}"))?;
                }
                Ok(t)
            }));
        }
        let mut total = Tally::default();
        for h in handles {
            total.merge(&h.join().expect("worker panicked")?);
        }
        Ok(total)
    })?;

    let mut summary = format!(
        "scenario = {}\nepisodes = {}\nseed = {}\nrested = {}\nfell_off = {}\nunresolved = {}\n\
         saturated_frames = {}\nconfig_hash = {}\ntool_version = {}\n",
        app.scenario.kind.name(),
        n,
        app.scenario.seed,
        tally.rested,
        tally.fell_off,
        tally.unresolved,
        tally.saturated_frames,
        super::config_hash(config)?,
        super::tool_version(),
    );
    if app.scenario.kind == ScenarioKind::Incline {
        summary.push_str(&format!(
            "stick = {}\nslide = {}\nstick_analytic = {}\n",
            tally.stick_sim, tally.slide_sim, tally.stick_analytic
        ));
    }
    std::fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
