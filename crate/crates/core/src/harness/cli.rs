use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::campaign::{run_campaign, RunOptions};
use super::config::{CampaignConfig, CampaignKind};
use super::report::{read_jsonl, write_csv, write_jsonl, ReportRow};

pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "momentlab", version, about = "Numerical laboratory for power-sum congruences and moment inequalities")]
pub struct Cli {
    /// TOML campaign file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Maximum number of enumerated tuples per grid cell.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// JSON Lines, one row per line.
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a verification campaign.
    Verify {
        #[arg(value_enum)]
        target: Target,
    },
    /// Exploratory searches.
    Search {
        #[arg(value_enum)]
        target: SearchTarget,
    },
    /// Convert stored report rows.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Sf,
    Vinogradov,
    Pss,
    Newton,
    Vitali,
    ArchMatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchTarget {
    Violations,
}

#[derive(Subcommand, Debug)]
pub enum ReportAction {
    /// Re-emit a JSON Lines report in the chosen format.
    Export {
        /// JSON Lines report to read.
        input: PathBuf,
    },
}

impl From<Target> for CampaignKind {
    fn from(t: Target) -> Self {
        match t {
            Target::Sf => Self::Sf,
            Target::Vinogradov => Self::Vinogradov,
            Target::Pss => Self::Pss,
            Target::Newton => Self::Newton,
            Target::Vitali => Self::Vitali,
            Target::ArchMatch => Self::ArchMatch,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let kind = match &cli.command {
        Command::Verify { target } => CampaignKind::from(*target),
        Command::Search { .. } => CampaignKind::ViolationSearch,
        Command::Report {
            action: ReportAction::Export { input },
        } => {
            let rows = match File::open(input)
                .map_err(|e| e.to_string())
                .and_then(|f| read_jsonl(BufReader::new(f)))
            {
                Ok(rows) => rows,
                Err(e) => return usage(format!("cannot read {}: {e}", input.display())),
            };
            return match emit(&cli, &rows) {
                Ok(()) => 0,
                Err(e) => usage(e),
            };
        }
    };

    let mut config = match &cli.config {
        Some(path) => match CampaignConfig::load(path) {
            Ok(c) => c,
            Err(e) => return usage(e),
        },
        None => CampaignConfig::builtin(kind),
    };
    match config.kind {
        Some(k) if k != kind => {
            return usage(format!("config is a {} campaign, not {}", k.name(), kind.name()));
        }
        _ => config.kind = Some(kind),
    }
    config.seed = cli.seed.or(config.seed);
    config.workers = cli.workers.or(config.workers);
    config.budget = cli.budget.or(config.budget);
    if let Err(e) = config.validate() {
        return usage(e);
    }

    let opts = RunOptions {
        cache: if cli.no_cache { None } else { RunOptions::default().cache },
        ..RunOptions::default()
    };
    let outcome = match run_campaign(&config, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Err(e) = emit(&cli, &outcome.rows) {
        return usage(e);
    }
    eprintln!(
        "{} rows: {} pass, {} fail, {} flagged; cache {} hit(s), {} miss(es)",
        outcome.rows.len(),
        outcome.count(super::report::Status::Pass),
        outcome.count(super::report::Status::Fail),
        outcome.count(super::report::Status::Flagged),
        outcome.cache_hits,
        outcome.cache_misses
    );
    outcome.exit_code()
}

fn emit(cli: &Cli, rows: &[ReportRow]) -> Result<(), String> {
    let out: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    match cli.format {
        Format::Json => write_jsonl(out, rows).map_err(|e| e.to_string()),
        Format::Csv => write_csv(out, rows).map_err(|e| e.to_string()),
    }
}
