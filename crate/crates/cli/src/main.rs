//! `hadarot`: run experiments, the verification suite and the FWHT benchmark.
//!
//! Exit codes: 0 when every assertion holds, 1 when one fails, 2 for invalid
//! configuration or I/O errors.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hadarot::experiment::{
    self, Check, ExperimentConfig, ExperimentKind, Metadata, OutputFormat, SampleSchedule,
};
use hadarot::lemma_suite::{self, SuiteConfig};
use hadarot::{bench, Dimension};
use serde_json::json;

const SEED_ENV: &str = "HADAROT_SEED";

#[derive(Parser)]
#[command(
    name = "hadarot",
    version,
    about = "Two-block Hadamard rotation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its table.
    Experiment(ExperimentArgs),
    /// Run the numerical verification suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Marginal,
    LowerBound,
    E1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Comma-separated powers of two.
    #[arg(long, value_delimiter = ',', value_parser = parse_dim)]
    dims: Option<Vec<usize>>,
    /// Master seed; overrides the HADAROT_SEED environment variable.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads; output does not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Random inputs per dimension (marginal).
    #[arg(long)]
    n_inputs: Option<usize>,
    /// Fixed Monte Carlo samples per input instead of the adaptive schedule.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Points in the t grid of the lower-bound functional.
    #[arg(long)]
    t_grid: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run a single verifier by name.
    #[arg(long)]
    only: Option<String>,
    /// Master seed; overrides HADAROT_SEED.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
    /// Additive tolerance for deterministic inequality checks.
    #[arg(long, allow_negative_numbers = true)]
    tolerance: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Median FWHT time per dimension, scaling fit and dense-product speedup.
    Fwht {
        /// Comma-separated powers of two.
        #[arg(long, value_delimiter = ',', value_parser = parse_dim)]
        dims: Option<Vec<usize>>,
        /// Timed repetitions per dimension.
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_dim(s: &str) -> Result<usize, String> {
    let d: usize = s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Dimension::new(d).map(|_| d).map_err(|e| e.to_string())
}

enum Failure {
    Assertion,
    Config(String),
}

impl From<hadarot::Error> for Failure {
    fn from(e: hadarot::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn report_checks(checks: &[Check]) -> Result<(), Failure> {
    for c in checks {
        eprintln!(
            "{} {}: {} in [{}, {}]",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.lower,
            c.upper
        );
    }
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn run_experiment(a: ExperimentArgs) -> Result<(), Failure> {
    let kind = match a.kind {
        Kind::Marginal => ExperimentKind::Marginal,
        Kind::LowerBound => ExperimentKind::LowerBound,
        Kind::E1 => ExperimentKind::E1,
    };
    let mut config = ExperimentConfig::defaults(kind);
    if let Some(d) = a.dims {
        config.dims = d;
    }
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    if let Some(w) = a.workers {
        config.workers = w;
    }
    if let Some(n) = a.n_inputs {
        config.n_inputs = n;
    }
    if let Some(n) = a.n_samples {
        config.n_samples = SampleSchedule::Fixed(n);
    }
    if let Some(t) = a.t_grid {
        config.t_grid_size = t;
    }
    let format = match a.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let report = experiment::run(&config)?;
    emit(a.out.as_ref(), &report.render(format))?;
    report_checks(&report.checks)
}

fn run_verify(a: VerifyArgs) -> Result<(), Failure> {
    let mut config = SuiteConfig::default();
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    if let Some(t) = a.tolerance {
        config.tolerance = t;
    }
    config.validate()?;
    let hash = experiment::config_hash(&config);
    let workers = a.workers.unwrap_or_else(experiment::default_workers);
    let reports = experiment::with_workers(workers, || {
        lemma_suite::run_suite(&config, a.only.as_deref())
    })??;
    let pass = reports.iter().all(|r| r.pass);
    let mut meta = Metadata::new("verify", config.master_seed, hash);
    if let Some(only) = &a.only {
        meta.extra.insert("only".into(), only.clone());
    }
    meta.extra
        .insert("tolerance".into(), config.tolerance.to_string());
    let doc = json!({ "metadata": meta, "pass": pass, "verifiers": reports });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    emit(a.out.as_ref(), &text)?;
    for r in &reports {
        eprintln!(
            "{} {}: {} instances, {} violations, min slack {}",
            if r.pass { "pass" } else { "FAIL" },
            r.verifier,
            r.instances,
            r.violations,
            r.min_slack
        );
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn run_bench(cmd: BenchCommand) -> Result<(), Failure> {
    let BenchCommand::Fwht { dims, reps, out } = cmd;
    let dims = dims.unwrap_or_else(|| (10..=20).map(|m| 1usize << m).collect());
    let dims = dims
        .iter()
        .map(|&d| Dimension::new(d))
        .collect::<Result<Vec<_>, _>>()?;
    if reps == 0 {
        return Err(Failure::Config("reps must be >= 1".into()));
    }
    let report = bench::bench_fwht(&dims, reps)?;
    let hash = experiment::config_hash(&json!({ "dims": dims, "reps": reps }));
    let mut meta = Metadata::new("bench fwht", bench::INPUT_SEED, hash);
    if let Some(e) = report.scaling_exponent {
        meta.extra.insert("scaling_exponent".into(), e.to_string());
    }
    meta.extra.insert(
        "naive_median_ns_4096".into(),
        report.naive_median_ns.to_string(),
    );
    meta.extra
        .insert("speedup_at_4096".into(), report.speedup_at_4096.to_string());
    let mut text = String::new();
    meta.csv_lines(&mut text);
    text.push_str(&report.to_csv());
    emit(out.as_ref(), &text)?;
    report_checks(&report.checks)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Experiment(a) => run_experiment(a),
        Command::Verify(a) => run_verify(a),
        Command::Bench(b) => run_bench(b),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
