//! Split, resolution, and (input, target) pair extraction for training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::render::ImageRgb;
use crate::scalar::Real;
use crate::scene::episode::{EpisodeRecord, Frame};

/// Deterministic shuffle-and-cut split: first ⌊fraction·n⌋ ids train, the
/// rest validate.
pub fn split(ids: &[u64], fraction: f64, seed: u64) -> Result<(Vec<u64>, Vec<u64>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("split fraction {fraction} outside (0, 1)")));
    }
    if ids.len() < 2 {
        return Err(Error::InvalidParameter(format!("cannot split {} ids", ids.len())));
    }
    let mut shuffled = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let cut = (fraction * shuffled.len() as f64).floor() as usize;
    let val = shuffled.split_off(cut);
    Ok((shuffled, val))
}

/// Box-filter average over equal blocks. Source dims must be divisible by
/// the target dims.
pub fn downsample<R: Real>(img: &ImageRgb<R>, target_w: usize, target_h: usize) -> Result<ImageRgb<R>> {
    if target_w == 0
        || target_h == 0
        || img.width % target_w != 0
        || img.height % target_h != 0
    {
        return Err(Error::InvalidParameter(format!(
            "cannot downsample {}x{} to {target_w}x{target_h}: dims not divisible",
            img.width, img.height
        )));
    }
    let (bx, by) = (img.width / target_w, img.height / target_h);
    let inv = R::one() / R::from_usize(bx * by).unwrap();
    let mut out = ImageRgb::constant(target_w, target_h, [R::zero(); 3]);
    for ty in 0..target_h {
        for tx in 0..target_w {
            let mut acc = [R::zero(); 3];
            for dy in 0..by {
                for dx in 0..bx {
                    let p = img.at(tx * bx + dx, ty * by + dy);
                    for ch in 0..3 {
                        acc[ch] += p[ch];
                    }
                }
            }
            out.set(tx, ty, [acc[0] * inv, acc[1] * inv, acc[2] * inv]);
        }
    }
    Ok(out)
}

fn bilinear_sample<R: Real>(img: &ImageRgb<R>, x: R, y: R) -> [R; 3] {
    let clampf = |v: R, hi: usize| v.max(R::zero()).min(R::from_usize(hi - 1).unwrap());
    let x = clampf(x, img.width);
    let y = clampf(y, img.height);
    let x0 = x.floor().to_f64c() as usize;
    let y0 = y.floor().to_f64c() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = x - R::from_usize(x0).unwrap();
    let fy = y - R::from_usize(y0).unwrap();
    let (p00, p10) = (img.at(x0, y0), img.at(x1, y0));
    let (p01, p11) = (img.at(x0, y1), img.at(x1, y1));
    let mut out = [R::zero(); 3];
    for ch in 0..3 {
        let top = p00[ch] * (R::one() - fx) + p10[ch] * fx;
        let bot = p01[ch] * (R::one() - fx) + p11[ch] * fx;
        out[ch] = top * (R::one() - fy) + bot * fy;
    }
    out
}

/// Resample to arbitrary dims with bilinear interpolation.
pub fn resize_bilinear<R: Real>(img: &ImageRgb<R>, out_w: usize, out_h: usize) -> ImageRgb<R> {
    let mut out = ImageRgb::constant(out_w, out_h, [R::zero(); 3]);
    let sx = R::from_usize(img.width).unwrap() / R::from_usize(out_w).unwrap();
    let sy = R::from_usize(img.height).unwrap() / R::from_usize(out_h).unwrap();
    for y in 0..out_h {
        for x in 0..out_w {
            let src_x = (R::from_usize(x).unwrap() + R::half()) * sx - R::half();
            let src_y = (R::from_usize(y).unwrap() + R::half()) * sy - R::half();
            out.set(x, y, bilinear_sample(img, src_x, src_y));
        }
    }
    out
}

/// Crop to the padded bounding box of the mask's true pixels and rescale to
/// the requested output size. An empty mask returns the image unchanged
/// (fall-off episodes keep their empty frames).
pub fn crop_to_mask<R: Real>(
    img: &ImageRgb<R>,
    mask: &[bool],
    pad: usize,
    out_w: usize,
    out_h: usize,
) -> Result<ImageRgb<R>> {
    if mask.len() != img.width * img.height {
        return Err(Error::DimensionMismatch {
            left: format!("mask of {}", mask.len()),
            right: format!("image {}x{}", img.width, img.height),
        });
    }
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for y in 0..img.height {
        for x in 0..img.width {
            if mask[y * img.width + x] {
                let (x0, y0, x1, y1) = bounds.unwrap_or((x, y, x, y));
                bounds = Some((x0.min(x), y0.min(y), x1.max(x), y1.max(y)));
            }
        }
    }
    let Some((x0, y0, x1, y1)) = bounds else {
        return Ok(img.clone());
    };
    let x0 = x0.saturating_sub(pad);
    let y0 = y0.saturating_sub(pad);
    let x1 = (x1 + pad).min(img.width - 1);
    let y1 = (y1 + pad).min(img.height - 1);
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut crop = ImageRgb::constant(cw, ch, [R::zero(); 3]);
    for y in 0..ch {
        for x in 0..cw {
            crop.set(x, y, img.at(x0 + x, y0 + y));
        }
    }
    Ok(resize_bilinear(&crop, out_w, out_h))
}

/// Pairing rule for time-lagged training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// Every frame t targets the final frame T, including (T, T).
    FinalStep,
    /// Frame t targets frame t+k; the last k frames target the final frame.
    FixedStep(usize),
}

impl PairMode {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "final_step" {
            return Ok(Self::FinalStep);
        }
        if let Some(k) = s.strip_prefix("fixed_step(").and_then(|s| s.strip_suffix(')')) {
            let k = k
                .parse()
                .map_err(|_| Error::Config(format!("bad fixed_step stride '{k}'")))?;
            return Ok(Self::FixedStep(k));
        }
        Err(Error::Config(format!("unknown pair mode '{s}'")))
    }
}

/// (input index, target index) pairs for an episode of `n_frames` frames.
pub fn pair_indices(n_frames: usize, mode: PairMode) -> Vec<(usize, usize)> {
    let last = n_frames.saturating_sub(1);
    match mode {
        PairMode::FinalStep => (0..n_frames).map(|t| (t, last)).collect(),
        PairMode::FixedStep(k) => (0..n_frames).map(|t| (t, (t + k).min(last))).collect(),
    }
}

/// One frame flattened to model resolution: channel-major image vectors plus
/// the 7-scalar pose (positions normalized by the sensor half-width).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<R> {
    pub visual: Vec<R>,
    pub tactile: Vec<R>,
    pub pose: [R; 7],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair<R> {
    pub input: Sample<R>,
    /// Tactile sensing only exists once contact is made; pairs whose input
    /// frame has no active contact must not present the tactile channel.
    pub tactile_available: bool,
    pub condition: Option<[R; 3]>,
    pub target: Sample<R>,
}

/// Conversion parameters from stored frames to model-resolution samples.
#[derive(Debug, Clone, Copy)]
pub struct SamplePrep<R> {
    pub model_width: usize,
    pub model_height: usize,
    /// Position normalizer (sensor half-width in meters).
    pub half_width: R,
}

impl<R: Real> SamplePrep<R> {
    pub fn sample(&self, frame: &Frame<R>) -> Result<Sample<R>> {
        let vis = downsample(&frame.visual, self.model_width, self.model_height)?;
        let tac = downsample(&frame.tactile, self.model_width, self.model_height)?;
        let mut pose = frame.pose.to_array();
        for p in pose.iter_mut().take(3) {
            *p /= self.half_width;
        }
        Ok(Sample { visual: vis.to_chw(), tactile: tac.to_chw(), pose })
    }
}

/// Expand one episode into training pairs under the given pairing rule.
pub fn make_pairs<R: Real>(
    rec: &EpisodeRecord<R>,
    mode: PairMode,
    prep: &SamplePrep<R>,
) -> Result<Vec<TrainingPair<R>>> {
    if rec.frames.len() < 2 {
        return Err(Error::InvalidEpisode("episode has fewer than 2 frames".into()));
    }
    let condition = rec.condition();
    let mut samples = Vec::with_capacity(rec.frames.len());
    for frame in &rec.frames {
        samples.push(prep.sample(frame)?);
    }
    Ok(pair_indices(rec.frames.len(), mode)
        .into_iter()
        .map(|(t, target)| TrainingPair {
            input: samples[t].clone(),
            tactile_available: rec.frames[t].contact_active,
            condition,
            target: samples[target].clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Quat, Vec3};
    use crate::scene::body::Pose;

    #[test]
    fn split_80_20() {
        let ids: Vec<u64> = (0..10).collect();
        let (train, val) = split(&ids, 0.8, 1).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(val.len(), 2);
        let mut all: Vec<u64> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, ids);
    }

    #[test]
    fn split_floor_rule_and_determinism() {
        let ids: Vec<u64> = (0..5).collect();
        let (train, val) = split(&ids, 0.5, 9).unwrap();
        assert_eq!((train.len(), val.len()), (2, 3));
        assert_eq!(split(&ids, 0.5, 9).unwrap(), (train, val));
        assert!(split(&ids[..1], 0.5, 9).is_err());
        assert!(split(&ids, 1.0, 9).is_err());
    }

    #[test]
    fn downsample_checkerboard() {
        let mut img = ImageRgb::constant(2, 2, [0.0f64; 3]);
        img.set(0, 0, [1.0; 3]);
        img.set(1, 1, [1.0; 3]);
        let out = downsample(&img, 1, 1).unwrap();
        assert_eq!(out.at(0, 0), [0.5; 3]);
    }

    #[test]
    fn downsample_constant_and_divisibility() {
        let img = ImageRgb::constant(8, 8, [0.3f64; 3]);
        let out = downsample(&img, 4, 4).unwrap();
        assert!(out.pixels.iter().all(|p| (p[0] - 0.3).abs() < 1e-15));
        assert!(downsample(&img, 3, 3).is_err());
    }

    #[test]
    fn crop_full_mask_is_whole_image() {
        let img = ImageRgb::constant(6, 6, [0.7f64; 3]);
        let mask = vec![true; 36];
        let out = crop_to_mask(&img, &mask, 0, 6, 6).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn crop_single_pixel_padded() {
        let mut img = ImageRgb::constant(16, 16, [0.0f64; 3]);
        img.set(8, 8, [1.0; 3]);
        let mut mask = vec![false; 256];
        mask[8 * 16 + 8] = true;
        // pad 2 → 5×5 source crop, rescaled up
        let out = crop_to_mask(&img, &mask, 2, 10, 10).unwrap();
        assert_eq!(out.width, 10);
        assert!(out.pixels.iter().any(|p| p[0] > 0.5));
        // the hot pixel sits at the crop center
        assert!(out.at(0, 0)[0] < 1e-12);
    }

    #[test]
    fn crop_empty_mask_identity() {
        let img = ImageRgb::constant(6, 4, [0.2f64; 3]);
        let out = crop_to_mask(&img, &vec![false; 24], 3, 2, 2).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn pair_indices_final_and_fixed() {
        assert_eq!(pair_indices(5, PairMode::FinalStep), vec![(0, 4), (1, 4), (2, 4), (3, 4), (4, 4)]);
        assert_eq!(
            pair_indices(5, PairMode::FixedStep(1)),
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 4)]
        );
        assert_eq!(pair_indices(2, PairMode::FinalStep).len(), 2);
    }

    #[test]
    fn pair_mode_parses() {
        assert_eq!(PairMode::parse("final_step").unwrap(), PairMode::FinalStep);
        assert_eq!(PairMode::parse("fixed_step(3)").unwrap(), PairMode::FixedStep(3));
        assert!(PairMode::parse("sometimes").is_err());
    }

    #[test]
    fn tactile_availability_follows_contact_flag() {
        use crate::scene::episode::{EpisodeRecord, Frame};
        use crate::scene::scenario::{RestState, Scenario, ScenarioKind};

        let pose = Pose { position: Vec3::new(0.01, 0.0, 0.0), orientation: Quat::identity() };
        let frame = |active: bool| Frame {
            visual: ImageRgb::constant(4, 4, [0.5f64; 3]),
            tactile: ImageRgb::constant(4, 4, [0.1; 3]),
            pose,
            contact_mask: vec![active; 16],
            contact_active: active,
        };
        let body = crate::scene::body::RigidBody::new(
            crate::scene::body::Shape::Sphere { radius: 0.01 },
            0.1,
            pose,
        );
        let rec = EpisodeRecord {
            scenario: Scenario::new(ScenarioKind::Freefall, 9.81, 0),
            initial_body: body,
            frames: vec![frame(false), frame(true)],
            rest: RestState { resting: true, frames_to_rest: 1, final_pose: pose, fell_off_sensor: false },
            unresolved: false,
            saturated_frames: 0,
        };
        let prep = SamplePrep { model_width: 2, model_height: 2, half_width: 0.02 };
        let pairs = make_pairs(&rec, PairMode::FinalStep, &prep).unwrap();
        assert!(!pairs[0].tactile_available);
        assert!(pairs[1].tactile_available);
        // positions normalized by the sensor half-width
        assert!((pairs[0].input.pose[0] - 0.5).abs() < 1e-12);
        assert!(pairs[0].condition.is_none());
    }
}
