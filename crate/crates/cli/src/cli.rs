//! Argument parsing and exit-code mapping.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use damcmc::oracle::{Mutation, Suite};

use crate::commands::{self, DiagnoseOptions, Functional, ReportFormat};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "damcmc", version, about = "Data-augmentation MCMC: sample, diagnose, verify")]
pub struct Cli {
    /// Worker threads for concurrent chains; 0 picks one per core.
    #[arg(long, global = true, env = "DAMCMC_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the chains described by a TOML config and write the trace CSV.
    Run {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace destination; overrides the config, stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize trace columns: mean, batch-means SE, ESS and autocorrelations.
    Diagnose {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,50")]
        lags: Vec<usize>,
        /// Extra series to summarize: a column name or `sumsq:PREFIX`.
        #[arg(long = "functional")]
        functionals: Vec<Functional>,
        /// Compare this functional across every trace and chain.
        #[arg(long)]
        compare: Option<Functional>,
        /// Defaults to csv when --out ends in .csv, json otherwise.
        #[arg(long, value_enum)]
        format: Option<ReportFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exact-kernel oracle suites and emit a JSON report.
    Verify {
        /// Suites to run (repeatable); all when omitted.
        #[arg(long = "suite", value_parser = parse_suite)]
        suites: Vec<Suite>,
        /// Inject a known defect; the run should then fail.
        #[arg(long, value_parser = parse_mutation)]
        mutate: Option<Mutation>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Live transitions per frequency check.
        #[arg(long, default_value_t = 1_000_000)]
        frequency_steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulated wall-clock cost and ESS of ADDA settings, as CSV.
    AddaReport {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// `fraction:epsilon` pairs, comma separated; overrides adda.report.
        #[arg(long, value_parser = parse_report_configs)]
        configs: Option<ReportConfigs>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// `fraction:epsilon` pairs as one argument.
#[derive(Clone, Debug)]
pub struct ReportConfigs(pub Vec<(f64, f64)>);

fn parse_report_configs(s: &str) -> Result<ReportConfigs, String> {
    commands::parse_report_configs(s).map(ReportConfigs)
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: damcmc::Error| e.to_string())
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    match s {
        "perturb-conditional" => Ok(Mutation::PerturbConditional),
        _ => Err(format!("unknown mutation '{s}' (expected perturb-conditional)")),
    }
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Run { config, seed, out } => {
            let (target, trace) = commands::run(&config, seed, out.as_deref())?;
            commands::emit(target.as_deref(), &trace.to_bytes()?)
        }
        Command::Diagnose { traces, lags, functionals, compare, format, out } => {
            let format = format.unwrap_or(match out.as_ref().and_then(|p| p.extension()) {
                Some(e) if e == "csv" => ReportFormat::Csv,
                _ => ReportFormat::Json,
            });
            let bytes = commands::diagnose(&DiagnoseOptions { traces, lags, functionals, compare, format })?;
            commands::emit(out.as_deref(), &bytes)
        }
        Command::Verify { suites, mutate, seed, frequency_steps, out } => {
            let outcome = commands::verify(&suites, mutate, seed, frequency_steps)?;
            for line in &outcome.summary {
                eprintln!("{line}");
            }
            commands::emit(out.as_deref(), &outcome.json)?;
            if outcome.passed {
                Ok(())
            } else {
                Err(CliError::ChecksFailed { failed: outcome.failed, total: outcome.total })
            }
        }
        Command::AddaReport { config, seed, configs, out } => {
            let bytes = commands::adda_report(&config, seed, configs.map(|c| c.0))?;
            commands::emit(out.as_deref(), &bytes)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 success, 1 invalid input, 2 runtime failure, 3 failed verification.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
