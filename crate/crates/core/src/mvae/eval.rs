//! Validation-set evaluation: final-step prediction and recursive rollout,
//! reported as a 4-row table over input-modality subsets.

use crate::dataset::{SamplePrep, Sample};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scene::episode::EpisodeRecord;

use super::gauss::bce_probs;
use super::model::{Modality, ModalityMask, MvaeModel};

/// Column order: multi-step visual, multi-step tactile, final-step visual,
/// final-step tactile (BCE, lower is better). `None` renders as NA.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub label: String,
    pub cells: [Option<f64>; 4],
}

#[derive(Debug, Clone)]
pub struct EvalTable {
    pub rows: Vec<EvalRow>,
}

pub const COLUMNS: [&str; 4] = ["ms_visual_bce", "ms_tactile_bce", "fs_visual_bce", "fs_tactile_bce"];

impl EvalTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("model,{}\n", COLUMNS.join(","));
        for r in &self.rows {
            s.push_str(&r.label);
            for c in &r.cells {
                match c {
                    Some(v) => s.push_str(&format!(",{v}")),
                    None => s.push_str(",NA"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut widths = vec!["model".len()];
        widths.extend(COLUMNS.iter().map(|c| c.len()));
        let fmt_cell = |c: &Option<f64>| c.map_or("NA".to_string(), |v| format!("{v:.6}"));
        for r in &self.rows {
            widths[0] = widths[0].max(r.label.len());
            for (i, c) in r.cells.iter().enumerate() {
                widths[i + 1] = widths[i + 1].max(fmt_cell(c).len());
            }
        }
        let mut s = format!("{:<w$}", "model", w = widths[0]);
        for (i, c) in COLUMNS.iter().enumerate() {
            s.push_str(&format!("  {:>w$}", c, w = widths[i + 1]));
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{:<w$}", r.label, w = widths[0]));
            for (i, c) in r.cells.iter().enumerate() {
                s.push_str(&format!("  {:>w$}", fmt_cell(c), w = widths[i + 1]));
            }
            s.push('\n');
        }
        s
    }

    pub fn row(&self, label: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// The four standard input subsets reported in the results table.
pub fn standard_rows() -> Vec<(String, ModalityMask)> {
    let v = Modality::Visual.bit();
    let t = Modality::Tactile.bit();
    let p = Modality::Pose.bit();
    vec![
        ("visual-only".into(), v),
        ("tactile-only".into(), t),
        ("multimodal".into(), v | t),
        ("multimodal+pose".into(), v | t | p),
    ]
}

fn condition_vec<R: Real>(model: &MvaeModel<R>, rec: &EpisodeRecord<R>) -> Vec<R> {
    if model.spec.cond_dim == 0 {
        Vec::new()
    } else {
        rec.condition().map_or_else(|| vec![R::zero(); model.spec.cond_dim], |c| c.to_vec())
    }
}

/// Pick the episode's input frame for a row: the first frame, or the first
/// contact frame when the row needs tactile input.
fn input_frame_index<R: Real>(rec: &EpisodeRecord<R>, mask: ModalityMask) -> Option<usize> {
    if mask & Modality::Tactile.bit() != 0 {
        rec.frames.iter().position(|f| f.contact_active)
    } else {
        Some(0)
    }
}

/// Tactile reference for "no contact": mean tactile sample over frames with
/// the contact flag down, used to decide whether predicted contact is
/// non-empty during rollout.
fn background_tactile<R: Real>(episodes: &[EpisodeRecord<R>], prep: &SamplePrep<R>) -> Result<Option<Vec<R>>> {
    let mut acc: Option<Vec<R>> = None;
    let mut count = 0usize;
    for rec in episodes {
        for f in &rec.frames {
            if !f.contact_active {
                let s = prep.sample(f)?;
                match &mut acc {
                    Some(a) => a.iter_mut().zip(&s.tactile).for_each(|(a, &b)| *a += b),
                    None => acc = Some(s.tactile),
                }
                count += 1;
            }
        }
    }
    Ok(acc.map(|mut a| {
        let inv = R::one() / R::from_usize(count).unwrap();
        a.iter_mut().for_each(|v| *v *= inv);
        a
    }))
}

fn mean_abs_dev<R: Real>(a: &[R], b: &[R]) -> R {
    let n = R::from_usize(a.len()).unwrap();
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum::<R>() / n
}

struct Scores {
    visual: (f64, usize),
    tactile: (f64, usize),
}

impl Scores {
    fn new() -> Self {
        Self { visual: (0.0, 0), tactile: (0.0, 0) }
    }

    fn cell(score: (f64, usize)) -> Option<f64> {
        (score.1 > 0).then(|| score.0 / score.1 as f64)
    }
}

fn score_prediction<R: Real>(
    pred: &super::model::Prediction<R>,
    target: &Sample<R>,
    scores: &mut Scores,
) -> Result<()> {
    if let Some(v) = &pred.visual {
        scores.visual.0 += bce_probs(v, &target.visual)?.to_f64c();
        scores.visual.1 += 1;
    }
    if let Some(t) = &pred.tactile {
        scores.tactile.0 += bce_probs(t, &target.tactile)?.to_f64c();
        scores.tactile.1 += 1;
    }
    Ok(())
}

/// Evaluate over the validation episodes. `final_model` fills the final-step
/// columns; `step_model` (with its stride) fills the multi-step columns via
/// recursive rollout where predictions are fed back as inputs — pose always,
/// tactile only while the predicted contact imprint is non-empty.
pub fn evaluate<R: Real>(
    final_model: Option<&MvaeModel<R>>,
    step_model: Option<(&MvaeModel<R>, usize)>,
    episodes: &[EpisodeRecord<R>],
    prep: &SamplePrep<R>,
) -> Result<EvalTable> {
    if episodes.is_empty() {
        return Err(Error::InvalidParameter("evaluation needs at least one episode".into()));
    }
    let background = background_tactile(episodes, prep)?;
    let contact_threshold = R::c(0.02);

    let mut rows = Vec::new();
    for (label, mask) in standard_rows() {
        let mut fs = Scores::new();
        let mut ms = Scores::new();

        for rec in episodes {
            let target = prep.sample(rec.frames.last().unwrap())?;

            if let Some(model) = final_model {
                let m = mask & model.enabled_mask();
                if m != 0 {
                    if let Some(t0) = input_frame_index(rec, m) {
                        let input = prep.sample(&rec.frames[t0])?;
                        let cond = condition_vec(model, rec);
                        let pred = model.predict(&input, m, &cond, None)?;
                        score_prediction(&pred, &target, &mut fs)?;
                    }
                }
            }

            if let Some((model, stride)) = step_model {
                let m = mask & model.enabled_mask();
                if m != 0 {
                    if let Some(t0) = input_frame_index(rec, m) {
                        let cond = condition_vec(model, rec);
                        let mut current = prep.sample(&rec.frames[t0])?;
                        let mut cur_mask = m;
                        let last = rec.frames.len() - 1;
                        let mut t = t0;
                        let mut final_pred = None;
                        while t < last {
                            let pred = model.predict(&current, cur_mask, &cond, None)?;
                            // feed outputs back as the next inputs
                            let mut next_mask = 0u8;
                            if let Some(v) = &pred.visual {
                                current.visual = v.clone();
                                next_mask |= Modality::Visual.bit();
                            }
                            if let Some(p) = &pred.pose {
                                current.pose = *p;
                                next_mask |= Modality::Pose.bit();
                            }
                            if let Some(tac) = &pred.tactile {
                                let contact = match &background {
                                    Some(bg) => mean_abs_dev(tac, bg) > contact_threshold,
                                    None => true,
                                };
                                if contact {
                                    current.tactile = tac.clone();
                                    next_mask |= Modality::Tactile.bit();
                                }
                            }
                            final_pred = Some(pred);
                            cur_mask = next_mask & model.enabled_mask();
                            if cur_mask == 0 {
                                break;
                            }
                            t += stride.max(1);
                        }
                        if let Some(pred) = final_pred {
                            score_prediction(&pred, &target, &mut ms)?;
                        }
                    }
                }
            }
        }

        rows.push(EvalRow {
            label,
            cells: [
                Scores::cell(ms.visual),
                Scores::cell(ms.tactile),
                Scores::cell(fs.visual),
                Scores::cell(fs.tactile),
            ],
        });
    }
    Ok(EvalTable { rows })
}

/// Dataset-mean baseline: the mean final tactile image predicts every
/// episode. Cross-modal models must beat this to show real signal.
pub fn mean_tactile_baseline<R: Real>(episodes: &[EpisodeRecord<R>], prep: &SamplePrep<R>) -> Result<f64> {
    let finals: Vec<Vec<R>> = episodes
        .iter()
        .map(|rec| prep.sample(rec.frames.last().unwrap()).map(|s| s.tactile))
        .collect::<Result<_>>()?;
    if finals.is_empty() {
        return Err(Error::InvalidParameter("baseline needs at least one episode".into()));
    }
    let dim = finals[0].len();
    let mut mean = vec![R::zero(); dim];
    for f in &finals {
        for (m, &v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    let inv = R::one() / R::from_usize(finals.len()).unwrap();
    mean.iter_mut().for_each(|m| *m *= inv);
    let mut total = 0.0;
    for f in &finals {
        total += bce_probs(&mean, f)?.to_f64c();
    }
    Ok(total / finals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_formatting_handles_na() {
        let table = EvalTable {
            rows: vec![
                EvalRow { label: "visual-only".into(), cells: [Some(0.5), None, Some(0.25), None] },
                EvalRow { label: "multimodal+pose".into(), cells: [None; 4] },
            ],
        };
        let csv = table.to_csv();
        assert!(csv.starts_with("model,ms_visual_bce,ms_tactile_bce,fs_visual_bce,fs_tactile_bce"));
        assert!(csv.contains("visual-only,0.5,NA,0.25,NA"));
        assert!(csv.contains("multimodal+pose,NA,NA,NA,NA"));
        let text = table.to_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("NA"));
    }

    #[test]
    fn standard_rows_are_four() {
        let rows = standard_rows();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].1, 0b111);
    }
}
