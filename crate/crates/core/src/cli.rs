//! `crossbound` command-line front end.
//!
//! Layout under the output directory: `store/` from ingest, `bundle.json`
//! from analyze, `report/` from report.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bundle::MetricsBundle;
use crate::config::AnalysisConfig;
use crate::error::CliError;
use crate::model::Diagnostic;
use crate::pipeline;
use crate::report::{parse_formats, write_reports};
use crate::store::{write_atomic, Store};
use crate::synth::{generate_corpus, SynthParams, GROUND_TRUTH_FILE};

pub const STORE_DIR: &str = "store";
pub const BUNDLE_FILE: &str = "bundle.json";
pub const REPORT_DIR: &str = "report";

#[derive(Debug, Parser)]
#[command(
    name = "crossbound",
    version,
    about = "Mailing-list and revision-log analysis of design discussions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse archives and revision logs into the canonical store.
    Ingest(RunArgs),
    /// Compute every metric from the store into bundle.json.
    Analyze(RunArgs),
    /// Render tables, timelines and graphs from bundle.json.
    Report(RunArgs),
    /// Generate a synthetic corpus with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated subset of csv, json, dot.
    #[arg(long, default_value = "csv,json,dot")]
    pub format: String,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    /// JSON or TOML generator parameters; defaults when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn output_dir(config: &AnalysisConfig, out: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    out.clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output_dir in the config".into()))
}

fn summarize(diagnostics: &[Diagnostic], err: &mut dyn Write) {
    if diagnostics.is_empty() {
        return;
    }
    let mut by_reason: BTreeMap<&str, usize> = BTreeMap::new();
    for d in diagnostics {
        *by_reason.entry(d.reason.as_str()).or_default() += 1;
    }
    let _ = writeln!(
        err,
        "{} diagnostics (details in {STORE_DIR}/diagnostics.json):",
        diagnostics.len()
    );
    for (reason, n) in by_reason {
        let _ = writeln!(err, "  {n:>5}  {reason}");
    }
}

fn cmd_ingest(args: &RunArgs, err: &mut dyn Write) -> Result<(), CliError> {
    parse_formats(&args.format)?;
    let config = AnalysisConfig::load(&args.config)?;
    let store = pipeline::ingest(&config)?;
    let dir = output_dir(&config, &args.out)?.join(STORE_DIR);
    store.save(&dir)?;
    let _ = writeln!(
        err,
        "ingested {} messages, {} revisions, {} corpora into {}",
        store.messages.len(),
        store.revisions.len(),
        store.corpora.len(),
        dir.display()
    );
    summarize(&store.diagnostics, err);
    Ok(())
}

fn cmd_analyze(args: &RunArgs, err: &mut dyn Write) -> Result<(), CliError> {
    parse_formats(&args.format)?;
    let config = AnalysisConfig::load(&args.config)?;
    let out = output_dir(&config, &args.out)?;
    let store = Store::load(&out.join(STORE_DIR))?;
    let lexicon = pipeline::load_lexicon(&config)?;
    let bundle = pipeline::analyze(&config, &store, &lexicon)?;
    let path = out.join(BUNDLE_FILE);
    write_atomic(&path, bundle.to_json().as_bytes())?;
    let _ = writeln!(err, "wrote {} ({} corpora)", path.display(), bundle.corpora.len());
    Ok(())
}

fn cmd_report(args: &RunArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let formats = parse_formats(&args.format)?;
    let config = AnalysisConfig::load(&args.config)?;
    let out = output_dir(&config, &args.out)?;
    let bundle = MetricsBundle::load(&out.join(BUNDLE_FILE))?;
    let dir = out.join(REPORT_DIR);
    let written = write_reports(&bundle, &formats, &dir)?;
    let _ = writeln!(err, "wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let mut params = match &args.params {
        Some(p) => SynthParams::load(p)?,
        None => SynthParams::default(),
    };
    params.seed = args.seed;
    let corpus = generate_corpus(&params)?;
    corpus.write(&args.out)?;
    let gt = &corpus.ground_truth;
    let _ = writeln!(
        err,
        "seed {}: {} messages ({} malformed), {} discussions, {} quotes; ground truth in {}",
        params.seed,
        gt.messages_written,
        gt.malformed_messages,
        gt.discussions.len(),
        gt.quotes.len(),
        args.out.join(GROUND_TRUTH_FILE).display()
    );
    Ok(())
}

pub fn execute(cli: &Cli, err: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, err),
        Command::Analyze(a) => cmd_analyze(a, err),
        Command::Report(a) => cmd_report(a, err),
        Command::Synth(a) => cmd_synth(a, err),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 2 usage or input error, 3 store error.
pub fn run<I, T>(args: I, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    match execute(&cli, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
