//! Argument parsing and subcommand dispatch.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tldr_core::eval::DEFAULT_LEAD_K;
use tldr_core::{exec, Execution};

use crate::config::PipelineConfig;
use crate::manifest::{RunManifest, SplitCounts, StageCounts};
use crate::stages::{self, note};

#[derive(Debug, Parser)]
#[command(name = "tldr-corpus", version, about = "Build and score Reddit TLDR summarization corpora")]
pub struct Cli {
    /// JSON configuration file. Flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads. Defaults to one per logical CPU; 1 runs sequentially.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Restrict ingestion to a configured domain's subreddits.
    #[arg(long, global = true, value_name = "NAME")]
    pub domain: Option<String>,

    /// Seed for the train/val/test shuffle.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read dump files (or an archive endpoint) and keep candidate posts.
    Ingest(IngestArgs),
    /// Split posts into content/summary pairs.
    Extract(StageArgs),
    /// Apply the quality and deduplication filters.
    Filter(StageArgs),
    /// Corpus statistics over one or more pair files.
    Stats(StatsArgs),
    /// Shuffle pairs into train/val/test files.
    Split(SplitArgs),
    /// Score predictions against references with ROUGE-1/2.
    Eval(EvalArgs),
    /// Write lead-K predictions for a pair file.
    Baseline(BaselineArgs),
    /// Run ingest, extract, filter, stats and split in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSONL dump files, read in order.
    #[arg(long, num_args = 1.., required_unless_present = "archive_endpoint")]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    /// Where to write the line accounting report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Fetch from an archive search endpoint instead of dump files.
    #[arg(long, conflicts_with = "input", requires_all = ["after", "before"])]
    pub archive_endpoint: Option<String>,
    /// Subreddit to fetch; repeatable. Defaults to the allowlist.
    #[arg(long)]
    pub subreddit: Vec<String>,
    /// Window start, unix seconds (inclusive).
    #[arg(long)]
    pub after: Option<i64>,
    /// Window end, unix seconds (exclusive).
    #[arg(long)]
    pub before: Option<i64>,
    #[arg(long, default_value_t = 100)]
    pub page_size: usize,
    /// Minimum delay between archive requests.
    #[arg(long)]
    pub min_delay_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Where to write the stage report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Pair files; statistics cover their concatenation.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the aligned text tables here.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Also write a CSV row here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Dataset label used in the table and CSV.
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output prefix; files become `<prefix>.train.jsonl` and so on.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub references: PathBuf,
    /// Write the full JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Pair file.
    #[arg(long)]
    pub input: PathBuf,
    /// Predictions file.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LEAD_K)]
    pub k: usize,
    /// Also write each pair's summary as a reference file.
    #[arg(long)]
    pub references: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// JSONL dump files.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Output directory; file names come from the config's `paths`.
    #[arg(long)]
    pub output: PathBuf,
}

/// A configuration problem detected before any stage ran.
#[derive(Debug)]
pub struct ConfigInvalid(pub String);

impl fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigInvalid {}

/// Process exit status for an error: 2 for configuration, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigInvalid>().is_some() {
        2
    } else {
        1
    }
}

fn config_invalid(err: anyhow::Error) -> anyhow::Error {
    ConfigInvalid(format!("{err:#}")).into()
}

/// Loads the config file and applies command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref()).map_err(config_invalid)?;
    if let Some(seed) = cli.seed {
        cfg.split.seed = seed;
    }
    if let Some(domain) = &cli.domain {
        cfg.select_domain(domain).map_err(config_invalid)?;
    }
    cfg.validate().map_err(config_invalid)?;
    Ok(cfg)
}

fn execution(threads: Option<usize>) -> Result<Execution> {
    match threads {
        Some(0) => Err(ConfigInvalid("--threads must be at least 1".into()).into()),
        Some(1) => Ok(Execution::Sequential),
        other => {
            if let Err(e) = exec::configure_threads(other) {
                // The global pool can only be built once per process.
                note(format!("note: keeping existing thread pool ({e})"));
            }
            Ok(Execution::Parallel)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = effective_config(&cli)?;
    let exec = execution(cli.threads)?;

    match &cli.command {
        Command::Ingest(args) => run_ingest(args, &cfg, exec).context("ingest"),
        Command::Extract(args) => {
            let report = stages::extract(&args.input, &cfg.extract, &args.output, exec).context("extract")?;
            if let Some(path) = &args.report {
                stages::write_json(path, &report).context("extract")?;
            }
            note(format!("extract: {} posts -> {} pairs", report.posts_in, report.pairs_out));
            Ok(())
        }
        Command::Filter(args) => {
            let report = stages::filter(&args.input, &cfg.filter, &args.output, exec).context("filter")?;
            if let Some(path) = &args.report {
                stages::write_json(path, &report).context("filter")?;
            }
            note(format!("filter: {} pairs -> {} kept", report.pairs_in, report.pairs_out));
            Ok(())
        }
        Command::Stats(args) => {
            let dataset = args.dataset.clone().or_else(|| cli.domain.clone()).unwrap_or_else(|| "corpus".into());
            let stats = stages::stats(&args.input, exec).context("stats")?;
            stages::write_stats(&stats, &dataset, &args.output, args.table.as_deref(), args.csv.as_deref())
                .context("stats")?;
            note(format!("stats: {} pairs", stats.pair_count));
            Ok(())
        }
        Command::Split(args) => {
            let manifest = stages::split(&args.input, &args.output, &cfg.split).context("split")?;
            note(format!(
                "split: {} -> train {} / val {} / test {}",
                manifest.input_records, manifest.train.size, manifest.val.size, manifest.test.size
            ));
            Ok(())
        }
        Command::Eval(args) => {
            let report = stages::evaluate(&args.predictions, &args.references, exec).context("eval")?;
            if let Some(path) = &args.output {
                stages::write_json(path, &report).context("eval")?;
            }
            println!("{}", report.table_line());
            Ok(())
        }
        Command::Baseline(args) => {
            let n = stages::baseline(&args.input, args.k, &args.output, args.references.as_deref())
                .context("baseline")?;
            note(format!("baseline: {n} lead-{} predictions", args.k));
            Ok(())
        }
        Command::Pipeline(args) => run_pipeline(&cli, args, &cfg, exec),
    }
}

fn run_ingest(args: &IngestArgs, cfg: &PipelineConfig, exec: Execution) -> Result<()> {
    let summary = match &args.archive_endpoint {
        Some(endpoint) => ingest_from_archive(endpoint, args, cfg)?,
        None => stages::ingest_files(&args.input, &cfg.ingest, &args.output, exec)?,
    };
    if let Some(path) = &args.report {
        stages::write_json(path, &summary)?;
    }
    note(format!(
        "ingest: {} lines, {} skipped, {} posts kept",
        summary.lines.lines_read, summary.lines.lines_skipped, summary.posts_written
    ));
    Ok(())
}

#[cfg(feature = "archive")]
fn ingest_from_archive(endpoint: &str, args: &IngestArgs, cfg: &PipelineConfig) -> Result<stages::IngestSummary> {
    use tldr_core::ingest::archive::{ArchiveConfig, TimeWindow};
    use tldr_core::ingest::normalize_subreddit;

    let (Some(after), Some(before)) = (args.after, args.before) else {
        bail!("--archive-endpoint needs --after and --before");
    };
    let subreddits: Vec<String> = if args.subreddit.is_empty() {
        cfg.ingest.subreddit_allowlist.clone()
    } else {
        args.subreddit.iter().map(|s| normalize_subreddit(s)).collect()
    };
    if subreddits.is_empty() {
        bail!("no subreddits to fetch; pass --subreddit or --domain");
    }
    let mut config = ArchiveConfig::new(endpoint);
    config.schema = cfg.ingest.schema.clone();
    if let Some(ms) = args.min_delay_ms {
        config.min_delay = std::time::Duration::from_millis(ms);
    }
    let query = stages::ArchiveQuery { config, subreddits, window: TimeWindow::new(after, before), page_size: args.page_size };
    stages::ingest_archive(&query, &cfg.ingest, &args.output)
}

#[cfg(not(feature = "archive"))]
fn ingest_from_archive(_: &str, _: &IngestArgs, _: &PipelineConfig) -> Result<stages::IngestSummary> {
    bail!("this build has no archive support; rebuild with the `archive` feature")
}

fn run_pipeline(cli: &Cli, args: &PipelineArgs, cfg: &PipelineConfig, exec: Execution) -> Result<()> {
    for input in &args.input {
        if !input.is_file() {
            bail!("ingest: input file not readable: {}", input.display());
        }
    }
    let at = |p: &Path| args.output.join(p);
    let paths = &cfg.paths;

    let ingest = stages::ingest_files(&args.input, &cfg.ingest, &at(&paths.posts), exec).context("ingest")?;
    stages::write_json(&at(&paths.ingest_report), &ingest).context("ingest")?;

    let extract = stages::extract(&at(&paths.posts), &cfg.extract, &at(&paths.pairs), exec).context("extract")?;
    stages::write_json(&at(&paths.extract_report), &extract).context("extract")?;

    let filter = stages::filter(&at(&paths.pairs), &cfg.filter, &at(&paths.filtered), exec).context("filter")?;
    stages::write_json(&at(&paths.filter_report), &filter).context("filter")?;

    let dataset = cli.domain.clone().unwrap_or_else(|| "corpus".into());
    let stats = stages::stats(&[at(&paths.filtered)], exec).context("stats")?;
    stages::write_stats(
        &stats,
        &dataset,
        &at(&paths.stats),
        Some(&at(&paths.stats_table)),
        Some(&at(&paths.stats_csv)),
    )
    .context("stats")?;

    let split = stages::split(&at(&paths.filtered), &at(&paths.split_prefix), &cfg.split).context("split")?;

    let counts = StageCounts {
        ingest,
        extract,
        filter,
        stats_pairs: stats.pair_count,
        split: SplitCounts::from(&split),
    };
    let problems = counts.reconcile();
    let manifest = RunManifest {
        tool: "tldr-corpus".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_digest: cfg.digest(),
        seed: cfg.split.seed,
        threads: cli.threads,
        domain: cli.domain.clone(),
        inputs: args.input.iter().map(|p| p.display().to_string()).collect(),
        counts,
        reconciled: problems.is_empty(),
    };
    stages::write_json(&at(&paths.manifest), &manifest).context("manifest")?;
    if !problems.is_empty() {
        bail!("manifest: stage counts do not reconcile: {}", problems.join("; "));
    }
    note(format!(
        "pipeline: {} posts -> {} pairs -> {} kept -> train {} / val {} / test {}",
        manifest.counts.ingest.posts_written,
        manifest.counts.extract.pairs_out,
        manifest.counts.filter.pairs_out,
        manifest.counts.split.train,
        manifest.counts.split.val,
        manifest.counts.split.test
    ));
    Ok(())
}
