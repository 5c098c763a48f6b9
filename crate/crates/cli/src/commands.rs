use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lucid_dream::dreamer::{generate_dataset, DatasetOptions, Dreamer, Manifest};
use lucid_dream::evaluation::{dataset_report, score_sequences};
use lucid_dream::io::{
    ingest_davis_layout, list_mask_tree, read_flo, read_image, read_label_mask, write_label_mask,
    SequenceSet,
};
use lucid_dream::propagation::{load_backward_flows, propagate_sequence, PropagationOptions};
use lucid_dream::tuner::{
    build_tuning_set_with, grid_search, refine_label_mask, Degradation, GridPoint, ParamGrid,
    ReferenceParams, ReferenceRefiner, REFERENCE_AXES,
};
use lucid_dream::{LabelMask, SeededRng};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::failure::Failure;
use crate::{EvaluateArgs, GenerateArgs, InspectFloArgs, PropagateArgs, TuneArgs};

/// Effective configuration echoed next to generated data.
pub const CONFIG_ECHO: &str = "config.json";
pub const TUNED_FILE: &str = "tuned.json";
pub const SCORES_FILE: &str = "scores.csv";

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn in_context<T>(what: &str, r: lucid_dream::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Data(format!("{what}: {e}")))
}

fn find_sequence(root: &Path, name: &str) -> Result<SequenceSet, Failure> {
    let report = ingest_davis_layout(root)?;
    if let Some(seq) = report.sequences.into_iter().find(|s| s.name == name) {
        return Ok(seq);
    }
    match report.skipped.iter().find(|(n, _)| n == name) {
        Some((_, reason)) => Err(Failure::Data(format!("sequence {name}: {reason}"))),
        None => Err(Failure::Data(format!(
            "sequence {name} not found under {}",
            root.display()
        ))),
    }
}

#[derive(Serialize)]
struct GenerateEcho<'a> {
    video: &'a str,
    image: String,
    mask: String,
    #[serde(flatten)]
    config: &'a RunConfig,
}

pub fn generate(args: &GenerateArgs, jobs: Option<usize>) -> Result<(), Failure> {
    let config = RunConfig::resolve(args.config.as_deref(), args.seed, args.count)?;
    let (video, image_path, mask_path): (String, PathBuf, PathBuf) =
        match (&args.root, &args.sequence, &args.image, &args.mask) {
            (Some(root), Some(name), _, _) => {
                let seq = find_sequence(root, name)?;
                (
                    seq.name.clone(),
                    seq.first_frame().to_path_buf(),
                    seq.first_annotation().to_path_buf(),
                )
            }
            (_, _, Some(image), Some(mask)) => {
                let video = image
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (video, image.clone(), mask.clone())
            }
            _ => {
                return Err(Failure::Usage(
                    "either --root with --sequence, or --image with --mask, is required".into(),
                ))
            }
        };
    let image = in_context(&video, read_image(&image_path))?;
    let mask = in_context(&video, read_label_mask(&mask_path))?;
    let dreamer = in_context(&video, Dreamer::new(&image, &mask, config.dream.clone()))?;

    let echo = GenerateEcho {
        video: &video,
        image: image_path.display().to_string(),
        mask: mask_path.display().to_string(),
        config: &config,
    };
    let json = serde_json::to_string_pretty(&echo).map_err(|e| Failure::Data(e.to_string()))?;
    write_file(&args.out.join(CONFIG_ECHO), &(json + "\n"))?;

    let options = DatasetOptions {
        count: config.count,
        base_seed: config.seed,
        video: video.clone(),
        jobs,
    };
    let manifest = in_context(&video, generate_dataset(&dreamer, &options, &args.out))?;
    let fell_back = manifest
        .records
        .iter()
        .filter(|r| r.params.motions.iter().any(|m| m.fell_back))
        .count();
    println!(
        "{video}: wrote {} pairs to {}",
        manifest.records.len(),
        args.out.display()
    );
    if fell_back > 0 {
        println!("{video}: {fell_back} pairs kept an object at its source position after too many rejected placements");
    }
    Ok(())
}

#[derive(Deserialize)]
struct TunedParamsFile {
    params: ReferenceParams,
}

fn load_tuned(path: &Path) -> Result<ReferenceParams, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let file: TunedParamsFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Data(format!("invalid parameter file {}: {e}", path.display())))?;
    Ok(file.params)
}

pub fn propagate(args: &PropagateArgs) -> Result<(), Failure> {
    let refine = args.refine_params.as_deref().map(load_tuned).transpose()?;
    let sequences: Vec<SequenceSet> = if args.sequences.is_empty() {
        let report = ingest_davis_layout(&args.root)?;
        for (name, reason) in &report.skipped {
            eprintln!("warning: skipping {name}: {reason}");
        }
        if report.sequences.is_empty() {
            return Err(Failure::Data(format!(
                "no annotated sequences under {}",
                args.root.display()
            )));
        }
        report.sequences
    } else {
        args.sequences
            .iter()
            .map(|name| find_sequence(&args.root, name))
            .collect::<Result<_, _>>()?
    };
    let options = PropagationOptions {
        temporal_coherency: args.temporal_coherency,
    };
    for seq in &sequences {
        let name = seq.name.as_str();
        let stems: Vec<String> = (0..seq.frames.len()).map(|i| seq.frame_stem(i)).collect();
        let first = in_context(name, read_label_mask(seq.first_annotation()))?;
        let flows = in_context(name, load_backward_flows(&args.flows, name, &stems))?;
        let masks = in_context(
            name,
            propagate_sequence(&first, &flows, &options, |t, m| match &refine {
                Some(params) => Ok(refine_label_mask(&read_image(&seq.frames[t])?, &m, params)),
                None => Ok(m),
            }),
        )?;
        for (mask, stem) in masks.iter().zip(&stems[1..]) {
            in_context(
                name,
                write_label_mask(mask, args.out.join(name).join(format!("{stem}.png"))),
            )?;
        }
        println!("{name}: wrote {} masks", masks.len());
    }
    Ok(())
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Pairs predictions with ground truth by file stem. A missing prediction
/// for the first frame is allowed since that frame is never scored.
fn aligned_sequence(
    name: &str,
    pred: &[PathBuf],
    gt: &[PathBuf],
) -> Result<(Vec<LabelMask>, Vec<LabelMask>), Failure> {
    let by_stem: BTreeMap<String, &PathBuf> = pred.iter().map(|p| (stem_of(p), p)).collect();
    let gt_stems: Vec<String> = gt.iter().map(|p| stem_of(p)).collect();
    if let Some(extra) = by_stem.keys().find(|s| !gt_stems.contains(s)) {
        return Err(Failure::Data(format!(
            "sequence {name}: frame counts differ ({} predicted, {} annotated); prediction {extra} has no ground truth",
            pred.len(),
            gt.len()
        )));
    }
    let mut pred_masks = Vec::with_capacity(gt.len());
    let mut gt_masks = Vec::with_capacity(gt.len());
    for (i, (path, stem)) in gt.iter().zip(&gt_stems).enumerate() {
        let truth = in_context(name, read_label_mask(path))?;
        let predicted = match by_stem.get(stem) {
            Some(p) => in_context(name, read_label_mask(p))?,
            None if i == 0 => truth.clone(),
            None => {
                return Err(Failure::Data(format!(
                    "sequence {name}: frame counts differ ({} predicted, {} annotated); no prediction for frame {stem}",
                    pred.len(),
                    gt.len()
                )))
            }
        };
        pred_masks.push(predicted);
        gt_masks.push(truth);
    }
    Ok((pred_masks, gt_masks))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let gt_tree = list_mask_tree(&args.gt)?;
    let pred_tree = list_mask_tree(&args.pred)?;
    if gt_tree.is_empty() {
        return Err(Failure::Data(format!(
            "no sequences under {}",
            args.gt.display()
        )));
    }
    let mut items = Vec::with_capacity(gt_tree.len());
    for (name, gt) in &gt_tree {
        let pred = pred_tree
            .get(name)
            .ok_or_else(|| Failure::Data(format!("no predictions for sequence {name}")))?;
        let (p, g) = aligned_sequence(name, pred, gt)?;
        items.push((name.clone(), p, g));
    }
    let report = dataset_report(score_sequences(&items, args.tolerance)?)?;
    let text = report.to_text();
    print!("{text}");
    if let Some(out) = &args.out {
        write_file(&out.join("report.json"), &(report.to_json() + "\n"))?;
        write_file(&out.join("report.txt"), &text)?;
        write_file(&out.join("report.csv"), &report.to_csv())?;
    }
    Ok(())
}

pub fn load_grid(path: &Path) -> Result<ParamGrid, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read grid {}: {e}", path.display())))?;
    let grid: ParamGrid = toml::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid grid {}: {e}", path.display())))?;
    grid.validate()
        .map_err(|e| Failure::Usage(format!("invalid grid {}: {e}", path.display())))?;
    if let Some(axis) = grid
        .axes
        .iter()
        .find(|a| !REFERENCE_AXES.contains(&a.name.as_str()))
    {
        return Err(Failure::Usage(format!(
            "unknown grid axis {}; expected one of {}",
            axis.name,
            REFERENCE_AXES.join(", ")
        )));
    }
    Ok(grid)
}

#[derive(Serialize)]
struct TunedOutput<'a> {
    refiner: &'static str,
    params: ReferenceParams,
    grid_point: &'a GridPoint,
    grid_index: usize,
    score: f64,
    per_video: usize,
    seed: u64,
    samples: usize,
}

pub fn tune(args: &TuneArgs) -> Result<(), Failure> {
    let grid = load_grid(&args.grid)?;
    let manifest = in_context(
        &args.manifest.display().to_string(),
        Manifest::read(&args.manifest),
    )?;
    let degradation = args
        .coarse_erosion
        .map_or(Degradation::Random, Degradation::Erode);
    let set = build_tuning_set_with(
        &manifest,
        args.per_video,
        &mut SeededRng::new(args.seed, 0),
        degradation,
    )?;
    let result = grid_search(&ReferenceRefiner, &grid, &set)?;
    let tuned = TunedOutput {
        refiner: "reference",
        params: ReferenceRefiner::params(&result.best)?,
        grid_point: &result.best,
        grid_index: result.best_index,
        score: result.best_score,
        per_video: args.per_video,
        seed: args.seed,
        samples: set.triples.len(),
    };
    let json = serde_json::to_string_pretty(&tuned).map_err(|e| Failure::Data(e.to_string()))?;
    write_file(&args.out.join(TUNED_FILE), &(json + "\n"))?;

    let mut csv = String::from("index");
    for axis in &grid.axes {
        csv.push(',');
        csv.push_str(&axis.name);
    }
    csv.push_str(",mean_iou,error\n");
    for row in &result.table {
        let _ = write!(csv, "{}", row.index);
        for (_, v) in &row.params.0 {
            let _ = write!(csv, ",{v}");
        }
        let error = row.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
        let _ = writeln!(csv, ",{:.6},{error}", row.score);
    }
    write_file(&args.out.join(SCORES_FILE), &csv)?;
    let failed = result.table.iter().filter(|r| r.error.is_some()).count();
    println!(
        "best of {} points on {} samples: {} (mean IoU {:.4})",
        result.table.len(),
        set.triples.len(),
        result.best,
        result.best_score
    );
    if failed > 0 {
        println!(
            "{failed} points failed and were scored 0; see {}",
            args.out.join(SCORES_FILE).display()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct FlowSummary {
    width: usize,
    height: usize,
    min_u: f32,
    max_u: f32,
    min_v: f32,
    max_v: f32,
    mean_magnitude: f64,
    max_magnitude: f64,
}

pub fn inspect_flo(args: &InspectFloArgs) -> Result<(), Failure> {
    let flow = read_flo(&args.file)?;
    let (width, height) = flow.dimensions();
    let mut s = FlowSummary {
        width,
        height,
        min_u: f32::INFINITY,
        max_u: f32::NEG_INFINITY,
        min_v: f32::INFINITY,
        max_v: f32::NEG_INFINITY,
        mean_magnitude: 0.0,
        max_magnitude: 0.0,
    };
    for &[u, v] in flow.vectors() {
        s.min_u = s.min_u.min(u);
        s.max_u = s.max_u.max(u);
        s.min_v = s.min_v.min(v);
        s.max_v = s.max_v.max(v);
        let m = (u as f64).hypot(v as f64);
        s.mean_magnitude += m;
        s.max_magnitude = s.max_magnitude.max(m);
    }
    if !flow.vectors().is_empty() {
        s.mean_magnitude /= flow.vectors().len() as f64;
    } else {
        (s.min_u, s.max_u, s.min_v, s.max_v) = (0.0, 0.0, 0.0, 0.0);
    }
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&s).map_err(|e| Failure::Data(e.to_string()))?
        );
    } else {
        println!("size           {} x {}", s.width, s.height);
        println!("u range        {} .. {}", s.min_u, s.max_u);
        println!("v range        {} .. {}", s.min_v, s.max_v);
        println!("mean magnitude {:.4}", s.mean_magnitude);
        println!("max magnitude  {:.4}", s.max_magnitude);
    }
    Ok(())
}
