//! `gpq`: runs point, weight, transform, moment and filtering experiments from a JSON config.
//!
//! Exit codes: 0 success, 1 config or I/O error, 2 numerical failure in every method.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gpq::experiments::{run, ExperimentConfig, ExperimentKind, OutputFormat, Report};
use gpq::Error;

#[derive(Parser)]
#[command(name = "gpq", version, about = "Gaussian process quadrature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit unit point sets (and classical or GP weights) as a table.
    Points(RunArgs),
    /// GP quadrature weights and posterior variance for a point set.
    Weights(RunArgs),
    /// Moment-matching transform of a named function.
    Transform(RunArgs),
    /// Moment-integral comparison against a Monte Carlo reference.
    Moments(RunArgs),
    /// Monte Carlo filter/smoother study on the non-linear growth model.
    Ungm(RunArgs),
    /// Monte Carlo filter/smoother study on bearings-only tracking.
    Bot(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent and the config names none.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Added to every trajectory seed and to the Monte Carlo oracle seed.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Command {
    fn parts(&self) -> (ExperimentKind, &RunArgs) {
        match self {
            Command::Points(a) => (ExperimentKind::Points, a),
            Command::Weights(a) => (ExperimentKind::Weights, a),
            Command::Transform(a) => (ExperimentKind::Transform, a),
            Command::Moments(a) => (ExperimentKind::Moments, a),
            Command::Ungm(a) => (ExperimentKind::Ungm, a),
            Command::Bot(a) => (ExperimentKind::Bot, a),
        }
    }
}

fn write_report(report: &Report, format: OutputFormat, out: Option<&PathBuf>) -> gpq::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        OutputFormat::Csv => report.write_csv(sink),
        OutputFormat::Json => report.write_json(sink),
    }
}

fn execute(cli: Cli) -> Result<Report, Error> {
    let (kind, args) = cli.command.parts();
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "{} holds a {:?} experiment, not {}",
            args.config.display(),
            cfg.experiment.name(),
            kind.name()
        )));
    }
    let report = run(&cfg, args.seed_offset)?;
    let format = match args.format {
        Some(Format::Csv) => OutputFormat::Csv,
        Some(Format::Json) => OutputFormat::Json,
        None => cfg.output.format,
    };
    let out = args.out.as_ref().or(cfg.output.path.as_ref());
    write_report(&report, format, out)?;
    if let Some(p) = out {
        eprintln!("wrote {}", p.display());
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(report) if report.all_methods_failed => {
            eprintln!("error: every method failed");
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
