use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use chc_precond::chc::parse_program_with;
use chc_precond::driver::{run_pipeline, Dump, PipelineConfig};
use chc_precond::Error;

#[derive(Parser)]
#[command(name = "chc-precond", version, about = "Infer safe preconditions for CHC programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a sufficient precondition for the initial predicate.
    Analyze(AnalyzeArgs),
}

#[derive(Parser)]
struct AnalyzeArgs {
    file: PathBuf,
    /// Rounds of trace elimination.
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,
    /// Initial predicate as name/arity, overriding the directive.
    #[arg(long)]
    initial: Option<String>,
    /// Drop the initial clauses' constraints and classify against them.
    #[arg(long)]
    strip_init: bool,
    #[arg(long, default_value_t = chc_precond::derivation::DEFAULT_MAX_CEX_NODES)]
    max_cex_nodes: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Print an intermediate artefact to stderr; may be repeated.
    #[arg(long, value_enum)]
    dump: Vec<DumpArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpArg {
    Pe,
    Cs,
    Invariants,
    Trace,
}

fn parse_initial(s: &str) -> Option<(&str, usize)> {
    let (name, arity) = s.rsplit_once('/')?;
    Some((name, arity.parse().ok()?))
}

fn main() -> ExitCode {
    env_logger::init();
    let Command::Analyze(args) = Cli::parse().command;
    let initial = match args.initial.as_deref().map(|s| (s, parse_initial(s))) {
        None => None,
        Some((_, Some(i))) => Some(i),
        Some((s, None)) => {
            eprintln!("error: --initial expects name/arity, got {s}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.file.display());
            return ExitCode::from(2);
        }
    };
    let program = match parse_program_with(&text, initial) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cfg = PipelineConfig {
        iterations: args.iterations,
        timeout: Duration::from_secs(args.timeout),
        max_cex_nodes: args.max_cex_nodes,
        strip_init: args.strip_init,
        dumps: args
            .dump
            .iter()
            .map(|d| match d {
                DumpArg::Pe => Dump::Pe,
                DumpArg::Cs => Dump::Cs,
                DumpArg::Invariants => Dump::Invariants,
                DumpArg::Trace => Dump::Trace,
            })
            .collect(),
        ..PipelineConfig::default()
    };
    let input = args.file.display().to_string();
    let report = match run_pipeline(&input, &program, &cfg) {
        Ok(r) => r,
        Err(e @ Error::CoverageFailed) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for d in &report.dumps {
        eprintln!("{d}");
    }
    match args.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json(true)),
    }
    if report.timed_out {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
