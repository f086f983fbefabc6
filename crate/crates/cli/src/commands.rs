//! The four subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use damcmc::diagnostics::{compare_kernels, diagnose_trace, DiagnosticsReport, KernelComparison};
use damcmc::kernel::{ChainMeta, ChainTrace};
use damcmc::oracle::{run_verification, Mutation, Suite, VerifyOptions};
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::data::Dataset;
use crate::error::{CliError, CliResult};
use crate::sample::{sample, wall_clock_rows};
use crate::trace_file::{fmt_f64, TraceFile, CHAIN_COLUMN, ITERATION_COLUMN};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes to `out`, or to stdout when it is `None`.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.into(), source })?;
            }
            std::fs::write(path, bytes).map_err(|source| CliError::Output { path: path.into(), source })
        }
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|source| CliError::Output { path: "<stdout>".into(), source }),
    }
}

fn software() -> String {
    format!("damcmc {VERSION}")
}

fn load_with_seed(config: &Path, seed: Option<u64>) -> CliResult<(LoadedConfig, Dataset)> {
    let mut loaded = LoadedConfig::load(config)?;
    if let Some(s) = seed {
        loaded.config.seed = s;
    }
    let data = Dataset::load(&loaded.resolve(&loaded.config.data.path))?;
    Ok((loaded, data))
}

/// Samples the configured chains and returns the trace file contents
/// together with where they should go.
pub fn run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> CliResult<(Option<PathBuf>, TraceFile)> {
    let (loaded, data) = load_with_seed(config, seed)?;
    let cfg = &loaded.config;
    let sampled = sample(&loaded, &data)?;
    let mut metadata = vec![
        ("software".to_string(), software()),
        ("config_sha256".into(), cfg.hash()),
        ("data_sha256".into(), data.sha256().to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("model".into(), cfg.model.family().to_string()),
        ("kernel".into(), cfg.kernel.to_string()),
        ("chains".into(), cfg.chains.to_string()),
        ("burn_in".into(), cfg.burn_in.to_string()),
        ("iterations".into(), cfg.iterations.to_string()),
    ];
    for (c, chain) in sampled.chains.iter().enumerate() {
        if let Some(stats) = &chain.adda {
            let json = serde_json::to_string(stats).map_err(CliError::runtime)?;
            metadata.push((format!("adda_stats.{c}"), json));
        }
    }
    let mut columns = vec![CHAIN_COLUMN.to_string(), ITERATION_COLUMN.to_string()];
    columns.extend(sampled.columns);
    let mut rows = Vec::with_capacity(cfg.chains * cfg.iterations);
    for (c, chain) in sampled.chains.iter().enumerate() {
        for (i, r) in chain.trace.rows().enumerate() {
            let mut row = Vec::with_capacity(r.len() + 2);
            row.push(c as f64);
            row.push(i as f64);
            row.extend_from_slice(r);
            rows.push(row);
        }
    }
    let target = out.map(Path::to_path_buf).or_else(|| cfg.output.as_ref().map(|p| loaded.resolve(p)));
    Ok((target, TraceFile { metadata, columns, rows }))
}

/// A derived series summarized alongside the raw columns.
#[derive(Clone, Debug, PartialEq)]
pub enum Functional {
    Column(String),
    /// Sum of squares of every column whose name starts with the prefix.
    SumSquares(String),
}

impl std::str::FromStr for Functional {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("sumsq:") {
            Some("") => Err("sumsq needs a column prefix, as in sumsq:u.".into()),
            Some(p) => Ok(Functional::SumSquares(p.into())),
            None if s.is_empty() => Err("empty functional".into()),
            None => Ok(Functional::Column(s.into())),
        }
    }
}

impl std::fmt::Display for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Functional::Column(c) => f.write_str(c),
            Functional::SumSquares(p) => write!(f, "sumsq:{p}"),
        }
    }
}

impl Functional {
    fn series(&self, names: &[String], rows: &[Vec<f64>]) -> CliResult<Vec<f64>> {
        let cols: Vec<usize> = names
            .iter()
            .enumerate()
            .filter(|(_, n)| match self {
                Functional::Column(c) => *n == c,
                Functional::SumSquares(p) => n.starts_with(p.as_str()),
            })
            .map(|(j, _)| j)
            .collect();
        if cols.is_empty() {
            return Err(CliError::Validation(format!("functional '{self}' matches no trace column")));
        }
        Ok(match self {
            Functional::Column(_) => rows.iter().map(|r| r[cols[0]]).collect(),
            Functional::SumSquares(_) => rows.iter().map(|r| cols.iter().map(|&j| r[j] * r[j]).sum()).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug)]
pub struct DiagnoseOptions {
    pub traces: Vec<PathBuf>,
    pub lags: Vec<usize>,
    pub functionals: Vec<Functional>,
    /// Functional whose series are compared across every trace and chain.
    pub compare: Option<Functional>,
    pub format: ReportFormat,
}

#[derive(Serialize)]
struct ChainReport {
    chain: u64,
    #[serde(flatten)]
    report: DiagnosticsReport,
}

#[derive(Serialize)]
struct TraceReport {
    path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_sha256: Option<String>,
    chains: Vec<ChainReport>,
}

#[derive(Serialize)]
struct DiagnoseReport {
    software: String,
    lags: Vec<usize>,
    traces: Vec<TraceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<KernelComparison>,
}

pub fn diagnose(opts: &DiagnoseOptions) -> CliResult<Vec<u8>> {
    if opts.traces.is_empty() {
        return Err(CliError::Validation("no trace files given".into()));
    }
    let bad = |e: damcmc::Error| CliError::Validation(e.to_string());
    let mut traces = Vec::new();
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for path in &opts.traces {
        let file = TraceFile::load(path)?;
        let (names, chains) = file.chains();
        if chains.is_empty() {
            return Err(CliError::Validation(format!("{}: trace has no rows", path.display())));
        }
        let kernel = file.meta("kernel").map(String::from);
        let label = kernel.clone().unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned());
        let mut columns = names.clone();
        columns.extend(opts.functionals.iter().map(ToString::to_string));
        let mut reports = Vec::new();
        for (id, rows) in &chains {
            let extra = opts.functionals.iter().map(|f| f.series(&names, rows)).collect::<CliResult<Vec<_>>>()?;
            let mut trace = ChainTrace::new(ChainMeta::new(label.clone(), file.meta("model").unwrap_or("unknown")), columns.clone());
            for (i, r) in rows.iter().enumerate() {
                let mut row = r.clone();
                row.extend(extra.iter().map(|s| s[i]));
                trace.push(&row, 0.0);
            }
            reports.push(ChainReport { chain: *id, report: diagnose_trace(&trace, &opts.lags).map_err(bad)? });
            if let Some(f) = &opts.compare {
                let key = if chains.len() > 1 { format!("{label}/chain{id}") } else { label.clone() };
                let mut key_unique = key.clone();
                let mut n = 2;
                while series.iter().any(|(k, _)| *k == key_unique) {
                    key_unique = format!("{key}#{n}");
                    n += 1;
                }
                series.push((key_unique, f.series(&names, rows)?));
            }
        }
        traces.push(TraceReport {
            path: path.display().to_string(),
            kernel,
            config_sha256: file.meta("config_sha256").map(String::from),
            chains: reports,
        });
    }
    let comparison = match opts.compare {
        Some(_) => Some(compare_kernels(&series).map_err(bad)?),
        None => None,
    };
    match opts.format {
        ReportFormat::Json => {
            let report = DiagnoseReport { software: software(), lags: opts.lags.clone(), traces, comparison };
            let mut bytes = serde_json::to_vec_pretty(&report).map_err(CliError::runtime)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => diagnose_csv(&opts.lags, &traces),
    }
}

fn diagnose_csv(lags: &[usize], traces: &[TraceReport]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Runtime(e.to_string());
    let mut header: Vec<String> = ["trace", "chain", "functional", "draws", "mean", "se", "ess"].map(String::from).to_vec();
    header.extend(lags.iter().map(|l| format!("acf.{l}")));
    w.write_record(&header).map_err(io)?;
    for t in traces {
        for c in &t.chains {
            for f in &c.report.functionals {
                let mut rec = vec![t.path.clone(), c.chain.to_string(), f.name.clone(), c.report.draws.to_string()];
                rec.extend([f.mean, f.se, f.ess].map(fmt_f64));
                rec.extend(f.acf.iter().map(|(_, v)| fmt_f64(*v)));
                w.write_record(&rec).map_err(io)?;
            }
        }
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub struct VerifyOutcome {
    pub json: Vec<u8>,
    pub passed: bool,
    pub failed: usize,
    pub total: usize,
    /// One `PASS`/`FAIL` line per check.
    pub summary: Vec<String>,
}

pub fn verify(suites: &[Suite], mutation: Option<Mutation>, seed: u64, frequency_steps: usize) -> CliResult<VerifyOutcome> {
    let opts = VerifyOptions {
        suites: if suites.is_empty() { Suite::ALL.to_vec() } else { suites.to_vec() },
        mutation,
        seed,
        frequency_steps,
    };
    let report = run_verification(&opts).map_err(CliError::runtime)?;
    let summary = report
        .checks
        .iter()
        .map(|c| {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            format!("{verdict} [{}] {}: {:e} (tolerance {:e})", c.suite, c.name, c.value, c.tolerance)
        })
        .collect();
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    let mut json = serde_json::to_vec_pretty(&report).map_err(CliError::runtime)?;
    json.push(b'\n');
    Ok(VerifyOutcome { json, passed: report.passed, failed, total: report.checks.len(), summary })
}

/// Parses `r:eps` pairs separated by commas.
pub fn parse_report_configs(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(|pair| {
            let (r, e) = pair.split_once(':').ok_or_else(|| format!("'{pair}' is not of the form fraction:epsilon"))?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("'{v}' is not a number"));
            Ok((num(r)?, num(e)?))
        })
        .collect()
}

pub fn adda_report(config: &Path, seed: Option<u64>, configs: Option<Vec<(f64, f64)>>) -> CliResult<Vec<u8>> {
    let (loaded, data) = load_with_seed(config, seed)?;
    let cfg = &loaded.config;
    let configs = match (configs, cfg.adda.as_ref()) {
        (Some(c), _) => c,
        (None, Some(a)) => match &a.report {
            Some(pairs) => pairs.iter().map(|p| (p[0], p[1])).collect(),
            None => vec![(1.0, 1.0), (a.fraction, a.epsilon)],
        },
        (None, None) => Vec::new(),
    };
    let rows = wall_clock_rows(&loaded, &data, &configs)?;
    let mut out = Vec::new();
    for (k, v) in [
        ("software", software()),
        ("config_sha256", cfg.hash()),
        ("data_sha256", data.sha256().to_string()),
        ("seed", cfg.seed.to_string()),
        ("model", cfg.model.family().to_string()),
        ("burn_in", cfg.burn_in.to_string()),
        ("iterations", cfg.iterations.to_string()),
    ] {
        out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record([
        "fraction",
        "epsilon",
        "wait_count",
        "iterations",
        "seconds",
        "seconds_per_iteration",
        "min_ess",
        "ess_per_second",
    ])
    .map_err(io)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.fraction),
            fmt_f64(r.epsilon),
            r.wait_count.to_string(),
            r.iterations.to_string(),
            fmt_f64(r.seconds),
            fmt_f64(r.seconds_per_iteration),
            fmt_f64(r.min_ess),
            fmt_f64(r.ess_per_second),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}
