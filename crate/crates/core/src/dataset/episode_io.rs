//! Episode persistence. Each episode lives in `root/<zero-padded id>/` with
//! a flat key=value `meta` file, per-frame PNGs for inspection, and a
//! `frames.tns` holding the tensor payloads (visual, tactile, pose, contact
//! mask, contact-active) bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::render::ImageRgb;
use crate::scalar::Real;
use crate::scene::body::{Pose, RigidBody, Shape};
use crate::scene::episode::{EpisodeRecord, Frame};
use crate::scene::scenario::{Perturbation, RestState, Scenario, ScenarioKind};

use super::tns::{self, Tensor};

pub const ID_WIDTH: usize = 6;

pub fn episode_dir(root: &Path, id: u64) -> PathBuf {
    root.join(format!("{id:0ID_WIDTH$}"))
}

fn fmt_r<R: Real>(v: R) -> String {
    // shortest round-trip float formatting keeps meta re-parses bit-exact
    format!("{}", v.to_f64c())
}

fn fmt_list<R: Real>(vs: &[R]) -> String {
    let mut s = String::new();
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{}", v.to_f64c());
    }
    s
}

fn image_tensor<R: Real>(frames: &[Frame<R>], tactile: bool) -> Result<Tensor> {
    let f = frames.len();
    let (w, h) = (frames[0].visual.width, frames[0].visual.height);
    let mut data = Vec::with_capacity(f * 3 * h * w);
    for fr in frames {
        let img = if tactile { &fr.tactile } else { &fr.visual };
        data.extend(img.to_chw().iter().map(|v| v.to_f64c() as f32));
    }
    Tensor::new(vec![f, 3, h, w], data)
}

fn meta_string<R: Real>(rec: &EpisodeRecord<R>) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    let sc = &rec.scenario;
    put("scenario", sc.kind.name().to_string());
    put("gravity", fmt_r(sc.gravity));
    put("seed", sc.seed.to_string());
    if sc.kind == ScenarioKind::Incline {
        put("incline_angle", fmt_r(sc.incline_angle));
    }
    if let Some(p) = sc.perturbation {
        put("perturb_magnitude", fmt_r(p.magnitude));
        put("perturb_direction", fmt_r(p.direction));
        put("perturb_duration", fmt_r(p.duration));
    }
    if let Some(c) = rec.condition() {
        put("condition", fmt_list(&c));
    }
    let b = &rec.initial_body;
    put("shape", b.shape.kind_name().to_string());
    let params: Vec<R> = match b.shape {
        Shape::Sphere { radius } => vec![radius],
        Shape::Box { half_extents } => vec![half_extents.x, half_extents.y, half_extents.z],
        Shape::Capsule { half_length, radius } | Shape::Cylinder { half_length, radius } => {
            vec![half_length, radius]
        }
    };
    put("shape_params", fmt_list(&params));
    put("mass", fmt_r(b.mass));
    put("friction", fmt_r(b.friction));
    put("restitution", fmt_r(b.restitution));
    put("color", fmt_list(&b.color));
    put("initial_pose", fmt_list(&b.pose().to_array()));
    put("initial_velocity", fmt_list(&[b.velocity.x, b.velocity.y, b.velocity.z]));
    put(
        "initial_ang_vel_body",
        fmt_list(&[b.ang_vel_body.x, b.ang_vel_body.y, b.ang_vel_body.z]),
    );
    put("frames", rec.frames.len().to_string());
    put("resting", rec.rest.resting.to_string());
    put("frames_to_rest", rec.rest.frames_to_rest.to_string());
    put("fell_off", rec.rest.fell_off_sensor.to_string());
    put("unresolved", rec.unresolved.to_string());
    put("saturated_frames", rec.saturated_frames.to_string());
    put("final_pose", fmt_list(&rec.rest.final_pose.to_array()));
    s
}

fn save_png<R: Real>(img: &ImageRgb<R>, path: &Path) -> Result<()> {
    let mut buf = image::RgbImage::new(img.width as u32, img.height as u32);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.at(x, y);
            let q = |v: R| (v.to_f64c().clamp(0.0, 1.0) * 255.0).round() as u8;
            buf.put_pixel(x as u32, y as u32, image::Rgb([q(p[0]), q(p[1]), q(p[2])]));
        }
    }
    buf.save(path).map_err(|e| Error::Image(e.to_string()))
}

fn validate<R: Real>(rec: &EpisodeRecord<R>) -> Result<()> {
    if rec.frames.len() < 2 {
        return Err(Error::InvalidEpisode(format!(
            "episode needs at least 2 frames, got {}",
            rec.frames.len()
        )));
    }
    let (w, h) = (rec.frames[0].visual.width, rec.frames[0].visual.height);
    for fr in &rec.frames {
        if fr.visual.width != w
            || fr.visual.height != h
            || fr.tactile.width != w
            || fr.tactile.height != h
            || fr.contact_mask.len() != w * h
        {
            return Err(Error::InvalidEpisode("inconsistent frame dimensions".into()));
        }
    }
    Ok(())
}

/// Write the record under the given id. Refuses to overwrite.
pub fn write_episode_with_id<R: Real>(rec: &EpisodeRecord<R>, root: &Path, id: u64) -> Result<()> {
    validate(rec)?;
    let dir = episode_dir(root, id);
    if dir.exists() {
        return Err(Error::EpisodeExists(dir));
    }
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("meta"), meta_string(rec))?;

    let f = rec.frames.len();
    let (w, h) = (rec.frames[0].visual.width, rec.frames[0].visual.height);
    let mut pose = Vec::with_capacity(f * 7);
    let mut mask = Vec::with_capacity(f * w * h);
    let mut active = Vec::with_capacity(f);
    for fr in &rec.frames {
        pose.extend(fr.pose.to_array().iter().map(|v| v.to_f64c() as f32));
        mask.extend(fr.contact_mask.iter().map(|&m| m as u8 as f32));
        active.push(fr.contact_active as u8 as f32);
    }
    let tensors = vec![
        image_tensor(&rec.frames, false)?,
        image_tensor(&rec.frames, true)?,
        Tensor::new(vec![f, 7], pose)?,
        Tensor::new(vec![f, h, w], mask)?,
        Tensor::new(vec![f], active)?,
    ];
    tns::write_file(&dir.join("frames.tns"), &tensors)?;

    for (k, fr) in rec.frames.iter().enumerate() {
        save_png(&fr.visual, &dir.join(format!("frame_{k}_visual.png")))?;
        save_png(&fr.tactile, &dir.join(format!("frame_{k}_tactile.png")))?;
    }
    Ok(())
}

/// Write under the next free sequential id.
pub fn write_episode<R: Real>(rec: &EpisodeRecord<R>, root: &Path) -> Result<u64> {
    let id = next_id(root)?;
    write_episode_with_id(rec, root, id)?;
    Ok(id)
}

/// One past the highest numeric episode directory under the root.
pub fn next_id(root: &Path) -> Result<u64> {
    Ok(list_ids(root)?.last().map_or(0, |&m| m + 1))
}

/// Sorted numeric episode ids present under the root.
pub fn list_ids(root: &Path) -> Result<Vec<u64>> {
    let mut ids = Vec::new();
    if root.exists() {
        for entry in std::fs::read_dir(root)? {
            let entry = entry?;
            if let Some(id) = entry.file_name().to_str().and_then(|n| n.parse::<u64>().ok()) {
                if entry.path().is_dir() {
                    ids.push(id);
                }
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

struct Meta(BTreeMap<String, String>);

impl Meta {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidEpisode(format!("bad meta line: {line}")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn get(&self, k: &str) -> Result<&str> {
        self.0
            .get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidEpisode(format!("meta missing key '{k}'")))
    }

    fn real<R: Real>(&self, k: &str) -> Result<R> {
        let raw = self.get(k)?;
        raw.parse::<f64>()
            .map(R::c)
            .map_err(|_| Error::InvalidEpisode(format!("meta key '{k}' not a number: {raw}")))
    }

    fn int<T: std::str::FromStr>(&self, k: &str) -> Result<T> {
        self.get(k)?
            .parse()
            .map_err(|_| Error::InvalidEpisode(format!("meta key '{k}' not an integer")))
    }

    fn flag(&self, k: &str) -> Result<bool> {
        match self.get(k)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::InvalidEpisode(format!("meta key '{k}' not a bool: {other}"))),
        }
    }

    fn list<R: Real>(&self, k: &str, n: usize) -> Result<Vec<R>> {
        let vals: Vec<R> = self
            .get(k)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map(R::c)
                    .map_err(|_| Error::InvalidEpisode(format!("bad number in '{k}'")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != n {
            return Err(Error::InvalidEpisode(format!(
                "meta key '{k}' expected {n} values, got {}",
                vals.len()
            )));
        }
        Ok(vals)
    }
}

fn shape_from_meta<R: Real>(meta: &Meta) -> Result<Shape<R>> {
    let kind = meta.get("shape")?;
    match kind {
        "sphere" => {
            let p = meta.list::<R>("shape_params", 1)?;
            Ok(Shape::Sphere { radius: p[0] })
        }
        "box" => {
            let p = meta.list::<R>("shape_params", 3)?;
            Ok(Shape::Box { half_extents: Vec3::new(p[0], p[1], p[2]) })
        }
        "capsule" => {
            let p = meta.list::<R>("shape_params", 2)?;
            Ok(Shape::Capsule { half_length: p[0], radius: p[1] })
        }
        "cylinder" => {
            let p = meta.list::<R>("shape_params", 2)?;
            Ok(Shape::Cylinder { half_length: p[0], radius: p[1] })
        }
        other => Err(Error::InvalidEpisode(format!("unknown shape '{other}'"))),
    }
}

pub fn read_episode<R: Real>(dir: &Path) -> Result<EpisodeRecord<R>> {
    let meta = Meta::parse(&std::fs::read_to_string(dir.join("meta"))?)?;

    let kind = ScenarioKind::parse(meta.get("scenario")?)?;
    let mut scenario = Scenario::new(kind, meta.real("gravity")?, meta.int("seed")?);
    if kind == ScenarioKind::Incline {
        scenario = scenario.with_incline(meta.real("incline_angle")?)?;
    }
    if kind == ScenarioKind::Perturb {
        scenario = scenario.with_perturbation(Perturbation {
            magnitude: meta.real("perturb_magnitude")?,
            direction: meta.real("perturb_direction")?,
            duration: meta.real("perturb_duration")?,
        });
    }

    let pose_init = meta.list::<R>("initial_pose", 7)?;
    let mut body = RigidBody::new(
        shape_from_meta(&meta)?,
        meta.real("mass")?,
        Pose::from_array(pose_init.try_into().expect("length checked")),
    );
    let vel = meta.list::<R>("initial_velocity", 3)?;
    body.velocity = Vec3::new(vel[0], vel[1], vel[2]);
    let avb = meta.list::<R>("initial_ang_vel_body", 3)?;
    body.ang_vel_body = Vec3::new(avb[0], avb[1], avb[2]);
    let col = meta.list::<R>("color", 3)?;
    body.color = [col[0], col[1], col[2]];
    body.friction = meta.real("friction")?;
    body.restitution = meta.real("restitution")?;

    let tensors = tns::read_file(&dir.join("frames.tns"))?;
    let [visual_t, tactile_t, pose_t, mask_t, active_t]: [Tensor; 5] = tensors
        .try_into()
        .map_err(|v: Vec<Tensor>| Error::BadTensorFile(format!("expected 5 records, got {}", v.len())))?;
    let f: usize = meta.int("frames")?;
    if visual_t.dims.len() != 4 || visual_t.dims[0] != f || visual_t.dims[1] != 3 {
        return Err(Error::BadTensorFile(format!("bad visual dims {:?}", visual_t.dims)));
    }
    let (h, w) = (visual_t.dims[2], visual_t.dims[3]);
    if tactile_t.dims != visual_t.dims
        || pose_t.dims != [f, 7]
        || mask_t.dims != [f, h, w]
        || active_t.dims != [f]
    {
        return Err(Error::BadTensorFile("inconsistent frame tensor dims".into()));
    }

    let px = 3 * h * w;
    let mut frames = Vec::with_capacity(f);
    for k in 0..f {
        let to_r = |v: &f32| R::c(*v as f64);
        let vis: Vec<R> = visual_t.data[k * px..(k + 1) * px].iter().map(to_r).collect();
        let tac: Vec<R> = tactile_t.data[k * px..(k + 1) * px].iter().map(to_r).collect();
        let pose_arr: [R; 7] = pose_t.data[k * 7..(k + 1) * 7]
            .iter()
            .map(to_r)
            .collect::<Vec<R>>()
            .try_into()
            .expect("checked dims");
        frames.push(Frame {
            visual: ImageRgb::from_chw(w, h, &vis),
            tactile: ImageRgb::from_chw(w, h, &tac),
            pose: Pose::from_array(pose_arr),
            contact_mask: mask_t.data[k * h * w..(k + 1) * h * w].iter().map(|&m| m > 0.5).collect(),
            contact_active: active_t.data[k] > 0.5,
        });
    }

    let final_pose = meta.list::<R>("final_pose", 7)?;
    Ok(EpisodeRecord {
        scenario,
        initial_body: body,
        frames,
        rest: RestState {
            resting: meta.flag("resting")?,
            frames_to_rest: meta.int("frames_to_rest")?,
            final_pose: Pose::from_array(final_pose.try_into().expect("length checked")),
            fell_off_sensor: meta.flag("fell_off")?,
        },
        unresolved: meta.flag("unresolved")?,
        saturated_frames: meta.int("saturated_frames")?,
    })
}
