//! Grid search of mask post-processing parameters on dream samples.
//!
//! A handful of samples per video form the tuning set. Their coarse masks
//! come from degrading the ground truth (a small shift plus an erosion or
//! dilation), every grid point is scored by the mean IoU of the refined
//! masks against the ground truth, and the best point wins.

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::dreamer::Manifest;
use crate::error::{Error, Result};
use crate::evaluation::iou;
use crate::io::{read_image, read_label_mask};
use crate::morphology::{close, dilate, erode, open, remove_small_components};
use crate::raster::{Bitmap, Image, LabelMask};
use crate::rng::SeededRng;

/// Samples per video used for tuning unless told otherwise.
pub const DEFAULT_PER_VIDEO: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Named axes, enumerated with the first axis varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    #[serde(rename = "axis")]
    pub axes: Vec<Axis>,
}

/// One assignment of a value to every axis, in axis order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint(pub Vec<(String, f64)>);

impl GridPoint {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

impl Serialize for GridPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl std::fmt::Display for GridPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}

impl ParamGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let grid = Self { axes };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Empty("parameter grid has no axes".into()));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(Error::Empty(format!("axis {} has no values", axis.name)));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "axis {} has a non-finite value",
                    axis.name
                )));
            }
            if self.axes[..i].iter().any(|a| a.name == axis.name) {
                return Err(Error::InvalidArgument(format!(
                    "axis {} appears twice",
                    axis.name
                )));
            }
        }
        Ok(())
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `index` in enumeration order.
    pub fn point(&self, mut index: usize) -> GridPoint {
        let mut values = vec![(String::new(), 0.0); self.axes.len()];
        for (slot, axis) in values.iter_mut().zip(&self.axes).rev() {
            let n = axis.values.len();
            *slot = (axis.name.clone(), axis.values[index % n]);
            index /= n;
        }
        GridPoint(values)
    }

    pub fn points(&self) -> Vec<GridPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// A mask post-processor with tunable parameters.
pub trait Refiner: Sync {
    fn refine(&self, image: &Image, mask: &Bitmap, params: &GridPoint) -> Result<Bitmap>;
}

impl<F> Refiner for F
where
    F: Fn(&Image, &Bitmap, &GridPoint) -> Result<Bitmap> + Sync,
{
    fn refine(&self, image: &Image, mask: &Bitmap, params: &GridPoint) -> Result<Bitmap> {
        self(image, mask, params)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceParams {
    pub open_radius: usize,
    pub close_radius: usize,
    pub min_component: usize,
    /// Final dilation radius.
    pub dilate_radius: usize,
}

/// Opening, closing, removal of components below `min_component` pixels,
/// then an optional dilation.
pub fn reference_refiner(_image: &Image, mask: &Bitmap, params: &ReferenceParams) -> Bitmap {
    let mut m = open(mask, params.open_radius);
    m = close(&m, params.close_radius);
    if params.min_component > 0 {
        m = remove_small_components(&m, params.min_component);
    }
    if params.dilate_radius > 0 {
        m = dilate(&m, params.dilate_radius);
    }
    m
}

/// Applies [`reference_refiner`] to every object of a label mask separately.
/// Where refined objects overlap, the higher label wins.
pub fn refine_label_mask(image: &Image, mask: &LabelMask, params: &ReferenceParams) -> LabelMask {
    let (w, h) = mask.dimensions();
    let mut out = LabelMask::new(w, h);
    for label in mask.object_labels() {
        for (x, y) in reference_refiner(image, &mask.object(label), params).iter_set() {
            out.set(x, y, label);
        }
    }
    out
}

/// [`reference_refiner`] driven by grid points with axes named after the
/// fields of [`ReferenceParams`]; missing axes default to 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReferenceRefiner;

pub const REFERENCE_AXES: [&str; 4] = [
    "open_radius",
    "close_radius",
    "min_component",
    "dilate_radius",
];

impl ReferenceRefiner {
    pub fn params(point: &GridPoint) -> Result<ReferenceParams> {
        let mut p = ReferenceParams::default();
        for (name, value) in &point.0 {
            let unsigned = |v: f64| -> Result<usize> {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "{name} must be a non-negative integer, got {v}"
                    )));
                }
                Ok(v as usize)
            };
            match name.as_str() {
                "open_radius" => p.open_radius = unsigned(*value)?,
                "close_radius" => p.close_radius = unsigned(*value)?,
                "min_component" => p.min_component = unsigned(*value)?,
                "dilate_radius" => p.dilate_radius = unsigned(*value)?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown parameter {other}; expected one of {}",
                        REFERENCE_AXES.join(", ")
                    )))
                }
            }
        }
        Ok(p)
    }
}

impl Refiner for ReferenceRefiner {
    fn refine(&self, image: &Image, mask: &Bitmap, params: &GridPoint) -> Result<Bitmap> {
        Ok(reference_refiner(image, mask, &Self::params(params)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningTriple {
    pub video: String,
    pub sample_id: String,
    pub image: Image,
    pub coarse: Bitmap,
    pub truth: Bitmap,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TuningSet {
    pub triples: Vec<TuningTriple>,
}

/// Rough version of `truth`: an integer shift of up to 2% of each image side
/// per axis, then an erosion or dilation with radius 1, 2 or 3.
pub fn degrade(truth: &Bitmap, rng: &mut SeededRng) -> Bitmap {
    let (w, h) = truth.dimensions();
    let dx = rng.symmetric(0.0, 0.02 * w as f64).round() as i64;
    let dy = rng.symmetric(0.0, 0.02 * h as f64).round() as i64;
    let shifted = Bitmap::from_fn(w, h, |x, y| truth.get_signed(x as i64 - dx, y as i64 - dy));
    let grow = rng.coin();
    let radius = 1 + rng.index(3);
    if grow {
        dilate(&shifted, radius)
    } else {
        erode(&shifted, radius)
    }
}

/// How coarse masks are derived from the ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Degradation {
    /// [`degrade`].
    #[default]
    Random,
    /// Erosion with a fixed radius, for checks with a known optimum.
    Erode(usize),
}

/// Picks `per_video` samples of every video in `manifest` (seeded shuffle)
/// and pairs the second frame of each with a degraded copy of its mask.
pub fn build_tuning_set(
    manifest: &Manifest,
    per_video: usize,
    rng: &mut SeededRng,
) -> Result<TuningSet> {
    build_tuning_set_with(manifest, per_video, rng, Degradation::Random)
}

pub fn build_tuning_set_with(
    manifest: &Manifest,
    per_video: usize,
    rng: &mut SeededRng,
    degradation: Degradation,
) -> Result<TuningSet> {
    let mut triples = Vec::new();
    if per_video == 0 {
        return Ok(TuningSet { triples });
    }
    for video in manifest.videos() {
        let mut records: Vec<_> = manifest.records_for(&video).collect();
        if records.len() < per_video {
            let available = records.len();
            return Err(Error::InsufficientSamples {
                video: video.clone(),
                needed: per_video,
                available,
            });
        }
        rng.shuffle(&mut records);
        for record in records.into_iter().take(per_video) {
            let image = read_image(manifest.resolve(&record.files.im_next))?;
            let truth = read_label_mask(manifest.resolve(&record.files.mask_next))?.foreground();
            let coarse = match degradation {
                Degradation::Random => degrade(&truth, rng),
                Degradation::Erode(r) => erode(&truth, r),
            };
            triples.push(TuningTriple {
                video: video.clone(),
                sample_id: record.sample_id.clone(),
                image,
                coarse,
                truth,
            });
        }
    }
    Ok(TuningSet { triples })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreRow {
    pub index: usize,
    pub params: GridPoint,
    /// Mean IoU over the tuning set; 0 for failed points.
    pub score: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_index: usize,
    pub best: GridPoint,
    pub best_score: f64,
    /// One row per grid point, in grid order.
    pub table: Vec<ScoreRow>,
}

fn score_point(refiner: &dyn Refiner, params: &GridPoint, set: &TuningSet) -> Result<f64> {
    let mut total = 0.0;
    for t in &set.triples {
        let refined = refiner.refine(&t.image, &t.coarse, params)?;
        total += iou(&refined, &t.truth)?;
    }
    Ok(total / set.triples.len() as f64)
}

/// Scores every grid point and returns the first one with the highest score.
pub fn grid_search(
    refiner: &dyn Refiner,
    grid: &ParamGrid,
    set: &TuningSet,
) -> Result<SearchResult> {
    grid.validate()?;
    if set.triples.is_empty() {
        return Err(Error::Empty("tuning set is empty".into()));
    }
    let table: Vec<ScoreRow> = (0..grid.len())
        .into_par_iter()
        .map(|index| {
            let params = grid.point(index);
            match score_point(refiner, &params, set) {
                Ok(score) => ScoreRow {
                    index,
                    params,
                    score,
                    error: None,
                },
                Err(e) => {
                    log::warn!("grid point {index} ({params}) failed: {e}");
                    ScoreRow {
                        index,
                        params,
                        score: 0.0,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let mut best = 0;
    for row in &table {
        if row.score > table[best].score {
            best = row.index;
        }
    }
    Ok(SearchResult {
        best_index: best,
        best: table[best].params.clone(),
        best_score: table[best].score,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(axes: &[(&str, &[f64])]) -> ParamGrid {
        ParamGrid::new(
            axes.iter()
                .map(|(n, v)| Axis {
                    name: n.to_string(),
                    values: v.to_vec(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn disc_set() -> TuningSet {
        let truth = Bitmap::from_fn(48, 48, |x, y| {
            let (dx, dy) = (x as f64 - 23.0, y as f64 - 24.0);
            dx * dx + dy * dy <= 14.0 * 14.0
        });
        TuningSet {
            triples: vec![TuningTriple {
                video: "v".into(),
                sample_id: "00000".into(),
                image: Image::filled(48, 48, 3, 0.5),
                coarse: erode(&truth, 2),
                truth,
            }],
        }
    }

    #[test]
    fn enumeration_is_odometer_order() {
        let g = grid(&[("a", &[1.0, 2.0]), ("b", &[10.0, 20.0, 30.0])]);
        assert_eq!(g.len(), 6);
        let pts = g.points();
        assert_eq!(pts[0].0, vec![("a".into(), 1.0), ("b".into(), 10.0)]);
        assert_eq!(pts[1].get("b"), Some(20.0));
        assert_eq!(pts[3].get("a"), Some(2.0));
        assert_eq!(pts[5].to_string(), "a=2, b=30");
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(ParamGrid::new(vec![]).is_err());
        assert!(ParamGrid::new(vec![Axis {
            name: "a".into(),
            values: vec![]
        }])
        .is_err());
        let dup = vec![
            Axis {
                name: "a".into(),
                values: vec![1.0],
            },
            Axis {
                name: "a".into(),
                values: vec![2.0],
            },
        ];
        assert!(ParamGrid::new(dup).is_err());
    }

    #[test]
    fn dilate_radius_recovers_the_erosion() {
        let g = grid(&[("dilate_radius", &[0.0, 1.0, 2.0, 3.0])]);
        let result = grid_search(&ReferenceRefiner, &g, &disc_set()).unwrap();
        assert_eq!(result.table.len(), 4);
        assert_eq!(result.best.get("dilate_radius"), Some(2.0));
        let max = result.table.iter().map(|r| r.score).fold(0.0, f64::max);
        assert_eq!(result.best_score, max);
    }

    #[test]
    fn ties_go_to_the_first_point() {
        let g = grid(&[("x", &[5.0, 1.0])]);
        let identity = |_: &Image, m: &Bitmap, _: &GridPoint| Ok(m.clone());
        let result = grid_search(&identity, &g, &disc_set()).unwrap();
        assert_eq!(result.table[0].score, result.table[1].score);
        assert_eq!(result.best_index, 0);
    }

    #[test]
    fn failing_points_score_zero_and_are_flagged() {
        let g = grid(&[("open_radius", &[0.0, 1.5])]);
        let result = grid_search(&ReferenceRefiner, &g, &disc_set()).unwrap();
        assert!(result.table[1].error.is_some());
        assert_eq!(result.table[1].score, 0.0);
        assert_eq!(result.best_index, 0);
        assert!(grid_search(&ReferenceRefiner, &g, &TuningSet::default()).is_err());
    }

    #[test]
    fn reference_refiner_fixtures() {
        let mut noisy =
            Bitmap::from_fn(30, 30, |x, y| (8..20).contains(&x) && (8..20).contains(&y));
        let clean = noisy.clone();
        assert_eq!(
            reference_refiner(&Image::new(30, 30, 3), &noisy, &ReferenceParams::default()),
            noisy
        );
        noisy.set(2, 2, true);
        noisy.set(25, 4, true);
        let opened = ReferenceParams {
            open_radius: 1,
            ..Default::default()
        };
        assert_eq!(
            reference_refiner(&Image::new(30, 30, 3), &noisy, &opened),
            open(&clean, 1)
        );
        assert!(!reference_refiner(&Image::new(30, 30, 3), &noisy, &opened).get(2, 2));
        let mut blob = clean.clone();
        for x in 24..29 {
            blob.set(x, 25, true);
        }
        let small = ReferenceParams {
            min_component: 10,
            ..Default::default()
        };
        assert_eq!(
            reference_refiner(&Image::new(30, 30, 3), &blob, &small),
            clean
        );
    }

    #[test]
    fn label_masks_are_refined_per_object() {
        let mut mask = LabelMask::from_fn(30, 30, |x, y| {
            if (2..12).contains(&x) && (2..12).contains(&y) {
                1
            } else if (16..28).contains(&x) && (16..28).contains(&y) {
                2
            } else {
                0
            }
        });
        let clean = mask.clone();
        mask.set(20, 5, 2);
        let params = ReferenceParams {
            min_component: 5,
            ..Default::default()
        };
        assert_eq!(
            refine_label_mask(&Image::new(30, 30, 3), &mask, &params),
            clean
        );
    }

    #[test]
    fn degradation_changes_but_overlaps() {
        let truth = Bitmap::from_fn(64, 64, |x, y| {
            (20..40).contains(&x) && (20..40).contains(&y)
        });
        let mut rng = SeededRng::new(0, 0);
        for _ in 0..20 {
            let coarse = degrade(&truth, &mut rng);
            let score = iou(&coarse, &truth).unwrap();
            assert!(score > 0.0 && score < 1.0, "{score}");
        }
        let a = degrade(&truth, &mut SeededRng::new(5, 1));
        assert_eq!(a, degrade(&truth, &mut SeededRng::new(5, 1)));
    }

    #[test]
    fn zero_per_video_gives_an_empty_set() {
        let manifest = Manifest {
            root: std::path::PathBuf::new(),
            records: Vec::new(),
        };
        assert!(build_tuning_set(&manifest, 0, &mut SeededRng::new(0, 0))
            .unwrap()
            .triples
            .is_empty());
    }
}
