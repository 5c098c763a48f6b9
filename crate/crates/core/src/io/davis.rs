//! Benchmark directory layouts.
//!
//! A dataset root holds `JPEGImages/<sequence>/<frame>.{jpg,png}` and
//! `Annotations/<sequence>/<frame>.png`, the layout used by DAVIS. Frames are
//! ordered by the numeric value of their file stem when it parses, otherwise
//! lexicographically.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const IMAGES_DIR: &str = "JPEGImages";
pub const ANNOTATIONS_DIR: &str = "Annotations";

/// One video: ordered frames plus whatever annotations exist for them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceSet {
    pub name: String,
    pub frames: Vec<PathBuf>,
    /// Aligned with `frames`; the first entry is always `Some`.
    pub annotations: Vec<Option<PathBuf>>,
}

impl SequenceSet {
    pub fn first_frame(&self) -> &Path {
        &self.frames[0]
    }

    pub fn first_annotation(&self) -> &Path {
        self.annotations[0]
            .as_deref()
            .expect("first annotation is present by construction")
    }

    /// File stem of frame `i`, used to name per-frame outputs.
    pub fn frame_stem(&self, i: usize) -> String {
        stem(&self.frames[i])
    }
}

#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub sequences: Vec<SequenceSet>,
    /// Sequences that were skipped, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn frame_order(a: &Path, b: &Path) -> Ordering {
    let (sa, sb) = (stem(a), stem(b));
    match (sa.parse::<u64>(), sb.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then(sa.cmp(&sb)),
        _ => sa.cmp(&sb),
    }
}

fn list_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if path.is_file() && extensions.contains(&ext.as_str()) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| frame_order(a, b));
    Ok(files)
}

fn list_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            dirs.push((name, path));
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Scans a dataset root. Sequences whose first frame lacks an annotation are
/// skipped and reported (also logged as warnings).
pub fn ingest_davis_layout(root: impl AsRef<Path>) -> Result<IngestReport> {
    let root = root.as_ref();
    let images = root.join(IMAGES_DIR);
    let annotations = root.join(ANNOTATIONS_DIR);
    let mut report = IngestReport::default();
    if !images.is_dir() {
        return Ok(report);
    }
    for (name, dir) in list_dirs(&images)? {
        let frames = list_files(&dir, &["jpg", "jpeg", "png"])?;
        if frames.is_empty() {
            continue;
        }
        let ann_dir = annotations.join(&name);
        let available: BTreeMap<String, PathBuf> = if ann_dir.is_dir() {
            list_files(&ann_dir, &["png"])?
                .into_iter()
                .map(|p| (stem(&p), p))
                .collect()
        } else {
            BTreeMap::new()
        };
        let aligned: Vec<Option<PathBuf>> = frames
            .iter()
            .map(|f| available.get(&stem(f)).cloned())
            .collect();
        if aligned[0].is_none() {
            let reason = format!(
                "no annotation for first frame {}",
                frames[0].file_name().unwrap_or_default().to_string_lossy()
            );
            log::warn!("skipping sequence {name}: {reason}");
            report.skipped.push((name, reason));
            continue;
        }
        report.sequences.push(SequenceSet {
            name,
            frames,
            annotations: aligned,
        });
    }
    Ok(report)
}

/// Lists `<root>/<sequence>/*.png` mask trees, as used for predictions and
/// ground truth during evaluation.
pub fn list_mask_tree(root: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<PathBuf>>> {
    let root = root.as_ref();
    let mut out = BTreeMap::new();
    for (name, dir) in list_dirs(root)? {
        out.insert(name, list_files(&dir, &["png"])?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(path: &Path) {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, b"").unwrap();
    }

    #[test]
    fn empty_root_gives_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let report = ingest_davis_layout(dir.path()).unwrap();
        assert!(report.sequences.is_empty());
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn missing_first_annotation_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for seq in ["bear", "cows"] {
            for i in 0..3 {
                touch(&root.join(IMAGES_DIR).join(seq).join(format!("{i:05}.jpg")));
            }
        }
        touch(&root.join(ANNOTATIONS_DIR).join("bear").join("00000.png"));
        let report = ingest_davis_layout(root).unwrap();
        assert_eq!(report.sequences.len(), 1);
        assert_eq!(report.sequences[0].name, "bear");
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].0, "cows");
        assert_eq!(report.sequences[0].annotations[1], None);
    }

    #[test]
    fn frames_sort_numerically() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        // unpadded names would sort 10 < 2 lexicographically
        for i in [10, 2, 0, 1, 9, 3, 4, 5, 6, 7, 8] {
            touch(&root.join(IMAGES_DIR).join("s").join(format!("{i}.png")));
        }
        touch(&root.join(ANNOTATIONS_DIR).join("s").join("0.png"));
        let report = ingest_davis_layout(root).unwrap();
        let stems: Vec<String> = (0..11).map(|i| report.sequences[0].frame_stem(i)).collect();
        let expected: Vec<String> = (0..=10).map(|i| i.to_string()).collect();
        assert_eq!(stems, expected);
    }

    #[test]
    fn padded_frames_keep_order() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for i in (0..10).rev() {
            touch(&root.join(IMAGES_DIR).join("s").join(format!("{i:05}.jpg")));
        }
        touch(&root.join(ANNOTATIONS_DIR).join("s").join("00000.png"));
        let seq = &ingest_davis_layout(root).unwrap().sequences[0];
        assert_eq!(seq.frames.len(), 10);
        assert!(seq.frames.windows(2).all(|w| w[0] < w[1]));
    }
}
