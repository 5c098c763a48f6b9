use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::DreamParams;
use super::sample::{
    Dreamer, SampleStats, FLOW, IMAGE_NEXT, IMAGE_PREV, MASK_NEXT, MASK_PREV, OCCLUSION,
};
use crate::error::{Error, Result};
use crate::rng::RNG_ALGORITHM;

/// Pairs generated per annotated frame unless told otherwise.
pub const DEFAULT_COUNT: usize = 2500;

/// Manifest file name inside a dataset directory.
pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Paths of a sample's files, relative to the dataset directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub im_prev: String,
    pub im_next: String,
    pub mask_prev: String,
    pub mask_next: String,
    pub flow: String,
    pub occlusion: String,
}

impl SampleFiles {
    fn for_id(id: &str) -> Self {
        let at = |name: &str| format!("{id}/{name}");
        Self {
            im_prev: at(IMAGE_PREV),
            im_next: at(IMAGE_NEXT),
            mask_prev: at(MASK_PREV),
            mask_next: at(MASK_NEXT),
            flow: at(FLOW),
            occlusion: at(OCCLUSION),
        }
    }
}

/// One manifest line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub sample_id: String,
    pub video: String,
    pub index: usize,
    pub seed: u64,
    pub stream: u64,
    pub rng: String,
    pub files: SampleFiles,
    pub stats: SampleStats,
    pub params: DreamParams,
}

/// All records of a dataset plus the directory their paths are relative to.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    /// Reads `<dir>/manifest.jsonl`, or the given file if `path` is one.
    pub fn read(path: &Path) -> Result<Self> {
        let file_path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let file = std::fs::File::open(&file_path).map_err(|e| Error::io(&file_path, e))?;
        let mut records = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&file_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line)
                .map_err(|e| Error::Manifest(format!("{}:{}: {e}", file_path.display(), n + 1)))?;
            records.push(record);
        }
        let root = file_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(Self { root, records })
    }

    /// Writes the records as JSON lines to `<root>/manifest.jsonl`.
    pub fn write(&self) -> Result<()> {
        let path = self.root.join(MANIFEST_FILE);
        let mut out = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut out, r).map_err(|e| Error::Manifest(e.to_string()))?;
            out.push(b'\n');
        }
        let mut file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(&out).map_err(|e| Error::io(&path, e))
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.root.join(relative)
    }

    /// Distinct video names in first-appearance order.
    pub fn videos(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.video) {
                seen.push(r.video.clone());
            }
        }
        seen
    }

    pub fn records_for<'a>(
        &'a self,
        video: &'a str,
    ) -> impl Iterator<Item = &'a ManifestRecord> + 'a {
        self.records.iter().filter(move |r| r.video == video)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetOptions {
    pub count: usize,
    pub base_seed: u64,
    /// Name recorded for every sample, usually the sequence name.
    pub video: String,
    /// Worker threads; `None` uses the global pool. Output does not depend on it.
    pub jobs: Option<usize>,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            count: DEFAULT_COUNT,
            base_seed: 0,
            video: "video".into(),
            jobs: None,
        }
    }
}

/// Directory name of sample `index`.
pub fn sample_id(index: usize) -> String {
    format!("{index:05}")
}

/// Generates `options.count` pairs into `out_dir`, sample `i` drawing from
/// stream `i` of `options.base_seed`, and writes the manifest.
pub fn generate_dataset(
    dreamer: &Dreamer,
    options: &DatasetOptions,
    out_dir: &Path,
) -> Result<Manifest> {
    if options.count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let work = || -> Result<Vec<ManifestRecord>> {
        (0..options.count)
            .into_par_iter()
            .map(|index| {
                let sample = dreamer.sample_at(options.base_seed, index as u64)?;
                let id = sample_id(index);
                sample.write(&out_dir.join(&id))?;
                log::debug!("wrote sample {id}");
                Ok(ManifestRecord {
                    files: SampleFiles::for_id(&id),
                    sample_id: id,
                    video: options.video.clone(),
                    index,
                    seed: sample.seed,
                    stream: sample.stream,
                    rng: RNG_ALGORITHM.to_string(),
                    stats: sample.stats()?,
                    params: sample.params,
                })
            })
            .collect()
    };
    let records = match options.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        records,
    };
    manifest.write()?;
    Ok(manifest)
}
