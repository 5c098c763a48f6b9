//! Region (J) and boundary (F) scores for video object segmentation.
//!
//! Frame 0 carries the given annotation and is never scored. Per object the
//! per-frame scores are summarized as mean, recall and decay; a sequence
//! averages its objects, and a dataset averages its sequences unweighted.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{dilate, inner_boundary};
use crate::raster::{check_dims, Bitmap, LabelMask};

/// Intersection over union; two empty masks score 1.
pub fn iou(a: &Bitmap, b: &Bitmap) -> Result<f64> {
    check_dims(a.dimensions(), b.dimensions())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// `ceil(0.008 * diagonal)` pixels.
pub fn default_tolerance(width: usize, height: usize) -> usize {
    (0.008 * (width as f64).hypot(height as f64)).ceil() as usize
}

/// Boundary F-measure with a disc tolerance of `tol` pixels.
///
/// Boundaries are the mask pixels removed by a 3x3 erosion. Precision is the
/// fraction of predicted boundary pixels within the dilated ground-truth
/// boundary, recall the converse.
pub fn boundary_f(pred: &Bitmap, gt: &Bitmap, tol: usize) -> Result<f64> {
    check_dims(pred.dimensions(), gt.dimensions())?;
    let bp = inner_boundary(pred);
    let bg = inner_boundary(gt);
    let (np, ng) = (bp.count(), bg.count());
    if np == 0 && ng == 0 {
        return Ok(1.0);
    }
    if np == 0 || ng == 0 {
        return Ok(0.0);
    }
    let precision = bp.intersection(&dilate(&bg, tol)).count() as f64 / np as f64;
    let recall = bg.intersection(&dilate(&bp, tol)).count() as f64 / ng as f64;
    Ok(if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    })
}

/// Mean, recall (fraction above 0.5) and decay of a score series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub mean: f64,
    pub recall: f64,
    pub decay: f64,
}

pub const RECALL_THRESHOLD: f64 = 0.5;

impl Statistics {
    /// Decay is the mean of the first quarter of the series minus the mean of
    /// the last quarter, each quarter holding at least one value.
    pub fn of(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Empty("no scored frames".into()));
        }
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let first_end = ((n as f64 / 4.0).round() as usize).max(1);
        let last_start = ((3.0 * n as f64 / 4.0).round() as usize).min(n - 1);
        Ok(Self {
            mean: mean(values),
            recall: values.iter().filter(|&&v| v > RECALL_THRESHOLD).count() as f64 / n as f64,
            decay: mean(&values[..first_end]) - mean(&values[last_start..]),
        })
    }

    fn average(items: &[Statistics]) -> Self {
        let n = items.len() as f64;
        Self {
            mean: items.iter().map(|s| s.mean).sum::<f64>() / n,
            recall: items.iter().map(|s| s.recall).sum::<f64>() / n,
            decay: items.iter().map(|s| s.decay).sum::<f64>() / n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub label: u8,
    /// Scores of frames `1..T`.
    pub j_frames: Vec<f64>,
    pub f_frames: Vec<f64>,
    pub j: Statistics,
    pub f: Statistics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub name: String,
    pub objects: Vec<ObjectScore>,
    /// Object average.
    pub j: Statistics,
    pub f: Statistics,
    /// `(J mean + F mean) / 2`.
    pub global_mean: f64,
}

/// Scores aligned prediction and ground-truth masks of one sequence.
///
/// Objects are the labels present anywhere in the ground truth. `tol`
/// defaults to [`default_tolerance`].
pub fn sequence_scores(
    name: &str,
    pred: &[LabelMask],
    gt: &[LabelMask],
    tol: Option<usize>,
) -> Result<SequenceScore> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch(format!(
            "{name}: {} predicted frames, {} ground-truth frames",
            pred.len(),
            gt.len()
        )));
    }
    if gt.len() < 2 {
        return Err(Error::Empty(format!(
            "{name}: need at least two frames to score"
        )));
    }
    for (p, g) in pred.iter().zip(gt) {
        check_dims(g.dimensions(), p.dimensions())?;
    }
    let (w, h) = gt[0].dimensions();
    let tol = tol.unwrap_or_else(|| default_tolerance(w, h));
    let mut labels = [false; 256];
    for g in gt {
        for l in g.object_labels() {
            labels[l as usize] = true;
        }
    }
    let labels: Vec<u8> = (1..=255u8).filter(|&l| labels[l as usize]).collect();
    if labels.is_empty() {
        return Err(Error::Empty(format!("{name}: ground truth has no objects")));
    }
    let objects = labels
        .iter()
        .map(|&label| {
            let mut j_frames = Vec::with_capacity(gt.len() - 1);
            let mut f_frames = Vec::with_capacity(gt.len() - 1);
            for (p, g) in pred.iter().zip(gt).skip(1) {
                let (po, go) = (p.object(label), g.object(label));
                j_frames.push(iou(&po, &go)?);
                f_frames.push(boundary_f(&po, &go, tol)?);
            }
            Ok(ObjectScore {
                label,
                j: Statistics::of(&j_frames)?,
                f: Statistics::of(&f_frames)?,
                j_frames,
                f_frames,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let j = Statistics::average(&objects.iter().map(|o| o.j).collect::<Vec<_>>());
    let f = Statistics::average(&objects.iter().map(|o| o.f).collect::<Vec<_>>());
    Ok(SequenceScore {
        name: name.to_string(),
        objects,
        global_mean: (j.mean + f.mean) / 2.0,
        j,
        f,
    })
}

/// Scores many sequences in parallel, keeping input order.
pub fn score_sequences(
    items: &[(String, Vec<LabelMask>, Vec<LabelMask>)],
    tol: Option<usize>,
) -> Result<Vec<SequenceScore>> {
    items
        .par_iter()
        .map(|(name, pred, gt)| sequence_scores(name, pred, gt, tol))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub sequences: Vec<SequenceScore>,
    /// Unweighted means over sequences.
    pub j: Statistics,
    pub f: Statistics,
    pub global_mean: f64,
}

pub const AVERAGING_NOTE: &str =
    "scores average frames 1..T-1 per object, then objects per sequence, then sequences (unweighted)";

/// Aggregates sequence scores into one report.
pub fn dataset_report(sequences: Vec<SequenceScore>) -> Result<DatasetReport> {
    if sequences.is_empty() {
        return Err(Error::Empty("no sequences to report".into()));
    }
    let j = Statistics::average(&sequences.iter().map(|s| s.j).collect::<Vec<_>>());
    let f = Statistics::average(&sequences.iter().map(|s| s.f).collect::<Vec<_>>());
    Ok(DatasetReport {
        sequences,
        global_mean: (j.mean + f.mean) / 2.0,
        j,
        f,
    })
}

impl DatasetReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table, one row per sequence and a closing mean row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {AVERAGING_NOTE}");
        let _ = writeln!(
            out,
            "{:<24} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "sequence", "J&F", "J-mean", "J-rec", "J-dec", "F-mean", "F-rec", "F-dec"
        );
        let row = |out: &mut String, name: &str, g: f64, j: &Statistics, f: &Statistics| {
            let _ = writeln!(
                out,
                "{:<24} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
                name, g, j.mean, j.recall, j.decay, f.mean, f.recall, f.decay
            );
        };
        for s in &self.sequences {
            row(&mut out, &s.name, s.global_mean, &s.j, &s.f);
        }
        row(&mut out, "mean", self.global_mean, &self.j, &self.f);
        out
    }

    /// Per-sequence bars for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,global_mean,j_mean,f_mean\n");
        for s in &self.sequences {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                s.name, s.global_mean, s.j.mean, s.f.mean
            );
        }
        out
    }
}
