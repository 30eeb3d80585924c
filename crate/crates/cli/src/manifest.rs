//! Run manifest written by `pipeline`.

use serde::{Deserialize, Serialize};

use tldr_core::extract::ExtractReport;
use tldr_core::split::SplitManifest;
use tldr_core::FilterReport;

use crate::stages::IngestSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub ingest: IngestSummary,
    pub extract: ExtractReport,
    pub filter: FilterReport,
    pub stats_pairs: u64,
    pub split: SplitCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub input_records: u64,
    pub train: u64,
    pub val: u64,
    pub test: u64,
}

impl From<&SplitManifest> for SplitCounts {
    fn from(m: &SplitManifest) -> Self {
        Self {
            input_records: m.input_records as u64,
            train: m.train.size as u64,
            val: m.val.size as u64,
            test: m.test.size as u64,
        }
    }
}

impl StageCounts {
    /// Hand-off mismatches between consecutive stages, if any.
    pub fn reconcile(&self) -> Vec<String> {
        let checks = [
            ("ingest.posts_written", self.ingest.posts_written, "extract.posts_in", self.extract.posts_in),
            ("extract.pairs_out", self.extract.pairs_out, "filter.pairs_in", self.filter.pairs_in),
            ("filter.pairs_out", self.filter.pairs_out, "split.input_records", self.split.input_records),
            ("filter.pairs_out", self.filter.pairs_out, "stats.pair_count", self.stats_pairs),
            (
                "split.input_records",
                self.split.input_records,
                "split.train+val+test",
                self.split.train + self.split.val + self.split.test,
            ),
        ];
        checks
            .iter()
            .filter(|(_, a, _, b)| a != b)
            .map(|(na, a, nb, b)| format!("{na} = {a} but {nb} = {b}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub created_at: String,
    pub config_digest: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub domain: Option<String>,
    pub inputs: Vec<String>,
    pub counts: StageCounts,
    pub reconciled: bool,
}
