//! Command-line front end. Each subcommand reads CSV input, runs one stage
//! of the analysis and writes CSV/JSON tables into the output directory.

mod commands;
mod output;

pub use output::sig9;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::calendar::Month;
use crate::dist::CollapseOptions;
use crate::genmodel::GenerativeModelParams;
use crate::ingestion::{
    bin_monthly, bin_occurrences, parse_events, parse_occurrences, ActivitySeries, ObservationWindow,
    OccurrenceRecord,
};
use crate::lifepath::LifepathOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lifecurve", version, about = "Sigmoid life-cycle analysis of entity activity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit each entity's cumulative activity at one or more cutoffs.
    Fit(CommonArgs),
    /// Yearly refits per entity (trajectories in inflection/slope space).
    Lifepath(CommonArgs),
    /// Survival distributions, two-regime power laws and scaling collapse.
    Dist(CommonArgs),
    /// Sample a population from the generative parameter model.
    Sample(SampleArgs),
    /// Score predicted leaving times for the cohort that left in a given year.
    Validate(ValidateArgs),
    /// Shannon entropy of each entity's occurrences across states.
    Entropy(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Events,
    Occurrences,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input CSV file; repeat to concatenate several.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// `events` (entity_id,timestamp) or `occurrences` (entity_id,month,count[,state]).
    #[arg(long, value_enum, default_value = "events")]
    pub kind: InputKind,
    /// Months of zero padding before the first activity.
    #[arg(long)]
    pub pad: Option<usize>,
    /// Analysis cutoff, `YYYY-MM` or `YYYY` (December); repeatable.
    #[arg(long = "cutoff")]
    pub cutoffs: Vec<String>,
    /// Directory for the output tables.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Accepted for a uniform interface; these commands draw no random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// JSON file overriding fit, lifepath, model and collapse settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Directory for the output tables.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed for the random stream; equal seeds give identical populations.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Population size (defaults to the config's `sample_size`).
    #[arg(long)]
    pub count: Option<usize>,
    /// Accepted for a uniform interface; sampling is sequential.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// JSON file overriding the model parameters and sample size.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Year in which the scored cohort made its last activity.
    #[arg(long)]
    pub leave_year: i32,
}

/// Settings that can be supplied with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lifepath: LifepathOptions,
    pub model: GenerativeModelParams,
    pub collapse: CollapseOptions,
    /// Smallest size used in power-law fits.
    pub jmin: u64,
    pub sample_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lifepath: LifepathOptions::default(),
            model: GenerativeModelParams::default(),
            collapse: CollapseOptions::default(),
            jmin: 1,
            sample_size: 6065,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>, pad: Option<usize>) -> Result<Self, CliError> {
        let mut cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display())))?
            }
        };
        if let Some(pad) = pad {
            cfg.lifepath.pad_length = pad;
        }
        cfg.lifepath.fit.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        cfg.model.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

/// Parsed input: one monthly series per entity over a common window.
pub struct Loaded {
    pub series: BTreeMap<String, ActivitySeries>,
    pub window: ObservationWindow,
    pub occurrences: Vec<OccurrenceRecord>,
}

fn open(path: &PathBuf) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

pub fn load(args: &CommonArgs) -> Result<Loaded, CliError> {
    let data = |p: &PathBuf, e: crate::ingestion::IngestError| CliError::Data(format!("{}: {e}", p.display()));
    match args.kind {
        InputKind::Events => {
            let mut events = Vec::new();
            for p in &args.input {
                events.extend(parse_events(open(p)?).map_err(|e| data(p, e))?);
            }
            let window = ObservationWindow::spanning(&events).ok_or_else(|| CliError::Data("input has no events".into()))?;
            let series = bin_monthly(&events, window).map_err(|e| CliError::Data(e.to_string()))?;
            Ok(Loaded {
                series,
                window,
                occurrences: Vec::new(),
            })
        }
        InputKind::Occurrences => {
            let mut records = Vec::new();
            for p in &args.input {
                records.extend(parse_occurrences(open(p)?).map_err(|e| data(p, e))?);
            }
            let first = records.iter().map(|r| r.month).min();
            let last = records.iter().map(|r| r.month).max();
            let (Some(first), Some(last)) = (first, last) else {
                return Err(CliError::Data("input has no occurrences".into()));
            };
            let window = ObservationWindow::new(first, last).map_err(|e| CliError::Data(e.to_string()))?;
            let series = bin_occurrences(&records, window).map_err(|e| CliError::Data(e.to_string()))?;
            if series.is_empty() {
                return Err(CliError::Data("every occurrence count is zero".into()));
            }
            Ok(Loaded {
                series,
                window,
                occurrences: records,
            })
        }
    }
}

/// `YYYY-MM`, or `YYYY` meaning December of that year.
pub fn parse_cutoff(raw: &str) -> Result<Month, CliError> {
    let raw = raw.trim();
    if let Ok(m) = raw.parse::<Month>() {
        return Ok(m);
    }
    raw.parse::<i32>()
        .map(Month::december)
        .map_err(|_| CliError::Usage(format!("bad cutoff `{raw}`: expected YYYY-MM or YYYY")))
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Lifepath(a) => commands::lifepath(a),
        Command::Dist(a) => commands::dist(a),
        Command::Sample(a) => commands::sample(a),
        Command::Validate(a) => commands::validate(a),
        Command::Entropy(a) => commands::entropy(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
