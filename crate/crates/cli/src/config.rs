//! Shared JSON configuration for every subcommand.
//!
//! Precedence is CLI flag, then config file, then built-in default. Every
//! section may be omitted from the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use tldr_core::extract::ExtractConfig;
use tldr_core::ingest::{normalize_subreddit, IngestConfig};
use tldr_core::{FilterConfig, SplitSpec};

/// File names of each stage output inside the pipeline output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub posts: PathBuf,
    pub ingest_report: PathBuf,
    pub pairs: PathBuf,
    pub extract_report: PathBuf,
    pub filtered: PathBuf,
    pub filter_report: PathBuf,
    pub stats: PathBuf,
    pub stats_table: PathBuf,
    pub stats_csv: PathBuf,
    /// Prefix for `<prefix>.train.jsonl`, `.val.jsonl`, `.test.jsonl`.
    pub split_prefix: PathBuf,
    pub manifest: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            posts: "posts.jsonl".into(),
            ingest_report: "ingest_report.json".into(),
            pairs: "pairs.jsonl".into(),
            extract_report: "extract_report.json".into(),
            filtered: "filtered.jsonl".into(),
            filter_report: "filter_report.json".into(),
            stats: "stats.json".into(),
            stats_table: "stats.txt".into(),
            stats_csv: "stats.csv".into(),
            split_prefix: "split".into(),
            manifest: "manifest.json".into(),
        }
    }
}

impl PathsConfig {
    fn all(&self) -> Vec<(&'static str, PathBuf)> {
        let split = tldr_core::split::output_paths(&self.split_prefix);
        vec![
            ("posts", self.posts.clone()),
            ("ingest_report", self.ingest_report.clone()),
            ("pairs", self.pairs.clone()),
            ("extract_report", self.extract_report.clone()),
            ("filtered", self.filtered.clone()),
            ("filter_report", self.filter_report.clone()),
            ("stats", self.stats.clone()),
            ("stats_table", self.stats_table.clone()),
            ("stats_csv", self.stats_csv.clone()),
            ("split.train", split.0[0].clone()),
            ("split.val", split.0[1].clone()),
            ("split.test", split.0[2].clone()),
            ("split.manifest", split.1),
            ("manifest", self.manifest.clone()),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.all();
        for (i, (name_a, a)) in all.iter().enumerate() {
            for (name_b, b) in &all[i + 1..] {
                if a == b {
                    bail!("paths.{name_a} and paths.{name_b} both point at {}", a.display());
                }
            }
        }
        Ok(())
    }
}

/// Domain name → subreddit allowlist. Duplicate names are rejected at
/// parse time rather than silently overwritten.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Domains(pub BTreeMap<String, Vec<String>>);

impl<'de> Deserialize<'de> for Domains {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Domains;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of domain name to subreddit list")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Domains, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((name, subs)) = map.next_entry::<String, Vec<String>>()? {
                    let key = name.trim().to_lowercase();
                    if out.contains_key(&key) {
                        return Err(serde::de::Error::custom(format!("duplicate domain name {name:?}")));
                    }
                    out.insert(key, subs.iter().map(|s| normalize_subreddit(s)).collect());
                }
                Ok(Domains(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ingest: IngestConfig,
    pub extract: ExtractConfig,
    pub filter: FilterConfig,
    pub split: SplitSpec,
    pub domains: Domains,
    pub paths: PathsConfig,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Restricts ingestion to the named domain's subreddits.
    pub fn select_domain(&mut self, name: &str) -> Result<()> {
        let key = name.trim().to_lowercase();
        let subs = self.domains.0.get(&key).with_context(|| {
            let known: Vec<&str> = self.domains.0.keys().map(String::as_str).collect();
            format!("unknown domain {name:?}; configured domains: {known:?}")
        })?;
        self.ingest.subreddit_allowlist = subs.clone();
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate().context("filter")?;
        self.split.validate().context("split")?;
        self.paths.validate().context("paths")?;
        Ok(())
    }

    /// SHA-256 of the effective configuration's canonical JSON.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&bytes);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}
