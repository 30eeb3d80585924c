//! Seeded train/validation/test partitioning.
//!
//! Indices `0..n` are shuffled with [`rng::permutation`]; the first
//! `⌊r_train·n⌋` shuffled indices go to train, the next `⌊r_val·n⌋` to
//! validation and the rest to test. Records keep their input order inside
//! each split, so file splits can stream the input twice (count, then
//! route) instead of holding records in memory.

pub mod rng;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

use crate::jsonl::{self, JsonlError, LineReader};

const RATIO_TOLERANCE: f64 = 1e-12;
// Absorbs products like 0.6 * 5 = 2.9999999999999996 before flooring.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    RatioMismatch([f64; 3]),
    #[error(transparent)]
    Io(#[from] JsonlError),
    #[error("write failed for {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("input changed between passes: expected {expected} records, found {found}")]
    InputChanged { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { ratios: [0.6, 0.2, 0.2], seed: 0 }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        let sum: f64 = self.ratios.iter().sum();
        if self.ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > RATIO_TOLERANCE {
            return Err(SplitError::RatioMismatch(self.ratios));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for `n` records.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize), SplitError> {
        self.validate()?;
        let part = |r: f64| ((r * n as f64 + FLOOR_SLACK).floor() as usize).min(n);
        let train = part(self.ratios[0]);
        let val = part(self.ratios[1]).min(n - train);
        Ok((train, val, n - train - val))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Train,
    Val,
    Test,
}

impl SplitLabel {
    pub const ALL: [SplitLabel; 3] = [SplitLabel::Train, SplitLabel::Val, SplitLabel::Test];

    pub fn suffix(self) -> &'static str {
        match self {
            SplitLabel::Train => "train",
            SplitLabel::Val => "val",
            SplitLabel::Test => "test",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Split label for every input index.
pub fn assign(n: usize, spec: &SplitSpec) -> Result<Vec<SplitLabel>, SplitError> {
    let (train, val, _) = spec.sizes(n)?;
    let mut labels = vec![SplitLabel::Test; n];
    for (rank, idx) in rng::permutation(n, spec.seed).into_iter().enumerate() {
        labels[idx] = if rank < train {
            SplitLabel::Train
        } else if rank < train + val {
            SplitLabel::Val
        } else {
            SplitLabel::Test
        };
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Partitions an in-memory sequence.
pub fn split_dataset<T>(items: Vec<T>, spec: &SplitSpec) -> Result<Splits<T>, SplitError> {
    let labels = assign(items.len(), spec)?;
    let (a, b, c) = spec.sizes(items.len())?;
    let mut out = Splits { train: Vec::with_capacity(a), val: Vec::with_capacity(b), test: Vec::with_capacity(c) };
    for (item, label) in items.into_iter().zip(labels) {
        match label {
            SplitLabel::Train => out.train.push(item),
            SplitLabel::Val => out.val.push(item),
            SplitLabel::Test => out.test.push(item),
        }
    }
    Ok(out)
}

/// Order-insensitive digest of a multiset of lines: the wrapping sum of
/// each line's xxh3-64 hash.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MultisetChecksum(u64);

impl MultisetChecksum {
    pub fn add(&mut self, line: &[u8]) {
        self.0 = self.0.wrapping_add(xxh3_64(line));
    }

    pub fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPart {
    pub path: PathBuf,
    pub size: usize,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub input_records: usize,
    pub train: SplitPart,
    pub val: SplitPart,
    pub test: SplitPart,
}

/// Output locations derived from a prefix: `<prefix>.train.jsonl`,
/// `<prefix>.val.jsonl`, `<prefix>.test.jsonl`, `<prefix>.manifest.json`.
pub fn output_paths(prefix: &Path) -> ([PathBuf; 3], PathBuf) {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    (
        [with(".train.jsonl"), with(".val.jsonl"), with(".test.jsonl")],
        with(".manifest.json"),
    )
}

/// Splits a JSONL file into three files plus a manifest, copying each
/// line verbatim.
pub fn split_file(input: &Path, prefix: &Path, spec: &SplitSpec) -> Result<SplitManifest, SplitError> {
    spec.validate()?;
    let n = {
        let mut lines = LineReader::new(jsonl::open(input)?);
        let mut n = 0usize;
        while let Some(line) = lines.next_line() {
            line?;
            n += 1;
        }
        n
    };
    let labels = assign(n, spec)?;

    let (paths, manifest_path) = output_paths(prefix);
    let mut writers = Vec::with_capacity(3);
    for p in &paths {
        writers.push(jsonl::create(p)?);
    }
    let mut sizes = [0usize; 3];
    let mut sums = [MultisetChecksum::default(); 3];

    let mut lines = LineReader::new(jsonl::open(input)?);
    let mut i = 0usize;
    while let Some(line) = lines.next_line() {
        let (_, bytes) = line?;
        let label = *labels.get(i).ok_or(SplitError::InputChanged { expected: n, found: i + 1 })?;
        let k = label.index();
        let wrap = |source| SplitError::Write { path: paths[k].clone(), source };
        writers[k].write_all(bytes).map_err(wrap)?;
        writers[k].write_all(b"\n").map_err(wrap)?;
        sizes[k] += 1;
        sums[k].add(bytes);
        i += 1;
    }
    if i != n {
        return Err(SplitError::InputChanged { expected: n, found: i });
    }
    for (w, p) in writers.iter_mut().zip(&paths) {
        w.flush().map_err(|source| SplitError::Write { path: p.clone(), source })?;
    }

    let part = |k: usize| SplitPart { path: paths[k].clone(), size: sizes[k], checksum: sums[k].hex() };
    let manifest = SplitManifest {
        seed: spec.seed,
        ratios: spec.ratios,
        input_records: n,
        train: part(0),
        val: part(1),
        test: part(2),
    };
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, body).map_err(|source| SplitError::Write { path: manifest_path, source })?;
    Ok(manifest)
}
