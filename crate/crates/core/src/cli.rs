//! `tactile` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 runtime
//! error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::kinematics::Backend;
use crate::latency::{builtin_graphs, calibrate, t_hardware, CalibrationReport, DataflowGraph};
use crate::pipeline::{
    hardware_time_limit, module_mse, run_pipeline, speedup_report, MseEntry, PipelineError,
    SimulationTrace, SpeedupRow, TraceTable, STANDARD_LIMITS,
};
use crate::scenario::{BackendKind, LoadedScenario, Scenario};

/// Overrides the output directory of `run`.
pub const OUTPUT_DIR_ENV: &str = "TACTILE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "tactile", version, about = "Tactile internet reference model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write traces plus a summary.
    Run { scenario: PathBuf },
    /// Calibrate the operator latency table and report module latencies.
    Latency {
        /// JSON object of module name to target nanoseconds.
        #[arg(long)]
        targets: PathBuf,
        /// JSON object of module name to dataflow graph; defaults to the
        /// built-in FK, IK, KFF and FBF circuits.
        #[arg(long)]
        graphs: Option<PathBuf>,
    },
    /// Per-column MSE between two trace CSVs.
    Mse { a: PathBuf, b: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnMse {
    pub column: String,
    pub mse: f64,
}

fn named(v: Vec<(String, f64)>) -> Vec<ColumnMse> {
    v.into_iter()
        .map(|(column, mse)| ColumnMse { column, mse })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetRow {
    pub t_latency: f64,
    pub hardware_time_limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub version: u32,
    pub seed: u64,
    pub samples: usize,
    pub sample_period: f64,
    pub backends: Vec<BackendKind>,
    pub traces: Vec<PathBuf>,
    /// Hybrid modules against the double-precision run, module by module.
    /// Present when the oracle backend ran.
    pub mse: Option<Vec<MseEntry>>,
    /// Column MSE of the hybrid trace against the oracle trace, end to end.
    pub trace_mse: Option<Vec<ColumnMse>>,
    /// Largest |l(n) - c(n)| component per backend.
    pub max_tracking_error: BTreeMap<String, f64>,
    pub budget: Vec<BudgetRow>,
}

pub fn cmd_run(scenario: &Path, output_override: Option<&Path>) -> Result<RunSummary, CliError> {
    let mut loaded = Scenario::load(scenario).map_err(config)?;
    if let Some(dir) = output_override {
        loaded.output_dir = dir.to_path_buf();
    }
    run_loaded(&loaded)
}

pub fn run_loaded(loaded: &LoadedScenario) -> Result<RunSummary, CliError> {
    let sc = &loaded.scenario;
    let mut kinds = sc.backends.clone();
    kinds.dedup();
    let backends: Vec<Backend> = kinds.iter().map(|k| loaded.backend(*k)).collect();

    // Backends share nothing; run them side by side.
    let traces: Vec<SimulationTrace> = std::thread::scope(|s| {
        let handles: Vec<_> = backends
            .iter()
            .map(|b| s.spawn(|| run_pipeline(&loaded.pipeline, b)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pipeline thread panicked"))
            .collect::<Result<Vec<_>, PipelineError>>()
    })
    .map_err(runtime)?;

    std::fs::create_dir_all(&loaded.output_dir).map_err(|e| {
        runtime(format!(
            "cannot create {}: {e}",
            loaded.output_dir.display()
        ))
    })?;
    let mut paths = Vec::new();
    for t in &traces {
        let path = loaded
            .output_dir
            .join(format!("{}_{}.csv", sc.output.trace_prefix, t.backend));
        let f = File::create(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        t.write_csv(BufWriter::new(f)).map_err(runtime)?;
        paths.push(path);
    }

    let oracle = traces.iter().find(|t| t.backend == "oracle");
    let hybrid = traces.iter().find(|t| t.backend == "hybrid");
    let mse = oracle
        .map(|o| {
            module_mse(
                o,
                &loaded.pipeline.geometry,
                &loaded.pipeline.scene,
                &loaded.cordic,
            )
        })
        .transpose()
        .map_err(runtime)?;
    let trace_mse = match (oracle, hybrid) {
        (Some(o), Some(h)) => Some(named(
            trace_table(h)
                .column_mse(&trace_table(o))
                .map_err(runtime)?,
        )),
        _ => None,
    };
    let max_tracking_error = traces
        .iter()
        .map(|t| {
            let m = t
                .records
                .iter()
                .flat_map(|r| (0..3).map(move |i| (r.l[i] - r.c[i]).abs()))
                .fold(0.0, f64::max);
            (t.backend.clone(), m)
        })
        .collect();

    let summary = RunSummary {
        version: sc.version,
        seed: sc.seed,
        samples: loaded.pipeline.trajectory.len(),
        sample_period: loaded.pipeline.trajectory.sample_period,
        backends: kinds,
        traces: paths,
        mse,
        trace_mse,
        max_tracking_error,
        budget: STANDARD_LIMITS
            .iter()
            .map(|&t| BudgetRow {
                t_latency: t,
                hardware_time_limit: hardware_time_limit(t),
            })
            .collect(),
    };
    let path = loaded.output_dir.join(&sc.output.summary);
    write_json(&path, &summary)?;
    Ok(summary)
}

fn trace_table(t: &SimulationTrace) -> TraceTable {
    let mut buf = Vec::new();
    t.write_csv(&mut buf).expect("in-memory write");
    TraceTable::read_csv(buf.as_slice()).expect("own output parses")
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(runtime)?;
    writeln!(w).map_err(runtime)?;
    w.flush().map_err(runtime)
}

#[derive(Debug, Clone, Serialize)]
pub struct LatencyReport {
    pub calibration: CalibrationReport,
    /// Critical path of every graph under the fitted table, ns.
    pub critical_paths_ns: BTreeMap<String, f64>,
    /// Master plus slave time per sample using the targets where given and
    /// fitted paths otherwise. Absent if a module is missing.
    pub t_hardware_ns: Option<f64>,
    pub speedups: Vec<SpeedupRow>,
    /// The same from fitted paths only.
    pub t_hardware_fitted_ns: Option<f64>,
    pub speedups_fitted: Vec<SpeedupRow>,
}

pub fn cmd_latency(targets: &Path, graphs: Option<&Path>) -> Result<LatencyReport, CliError> {
    let targets: BTreeMap<String, f64> = read_json(targets)?;
    let graphs: BTreeMap<String, DataflowGraph> = match graphs {
        Some(p) => read_json(p)?,
        None => builtin_graphs(),
    };
    latency_report(&graphs, &targets)
}

pub fn latency_report(
    graphs: &BTreeMap<String, DataflowGraph>,
    targets: &BTreeMap<String, f64>,
) -> Result<LatencyReport, CliError> {
    let calibration = calibrate(graphs, targets).map_err(config)?;
    let critical_paths_ns = graphs
        .iter()
        .map(|(k, g)| Ok((k.clone(), g.critical_path(&calibration.table)?.latency)))
        .collect::<Result<BTreeMap<_, _>, crate::latency::LatencyError>>()
        .map_err(config)?;
    let mut blended = critical_paths_ns.clone();
    blended.extend(targets.iter().map(|(k, v)| (k.clone(), *v)));
    let t_hw = t_hardware(&blended).ok();
    let t_fit = t_hardware(&critical_paths_ns).ok();
    let rows = |t: Option<f64>| -> Result<Vec<SpeedupRow>, CliError> {
        match t {
            Some(ns) if ns > 0.0 => speedup_report(ns * 1e-9, &STANDARD_LIMITS).map_err(config),
            _ => Ok(Vec::new()),
        }
    };
    Ok(LatencyReport {
        speedups: rows(t_hw)?,
        speedups_fitted: rows(t_fit)?,
        calibration,
        critical_paths_ns,
        t_hardware_ns: t_hw,
        t_hardware_fitted_ns: t_fit,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let f = File::open(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f))
        .map_err(|e| config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize)]
pub struct MseReport {
    pub rows: usize,
    pub mse: Vec<ColumnMse>,
}

pub fn cmd_mse(a: &Path, b: &Path) -> Result<MseReport, CliError> {
    let read = |p: &Path| -> Result<TraceTable, CliError> {
        let f = File::open(p).map_err(|e| config(format!("{}: {e}", p.display())))?;
        TraceTable::read_csv(BufReader::new(f)).map_err(|e| config(format!("{}: {e}", p.display())))
    };
    let (ta, tb) = (read(a)?, read(b)?);
    if ta.rows.len() != tb.rows.len() {
        return Err(config(format!(
            "row counts differ: {} has {} rows, {} has {} rows",
            a.display(),
            ta.rows.len(),
            b.display(),
            tb.rows.len()
        )));
    }
    let mse = ta.column_mse(&tb).map_err(config)?;
    Ok(MseReport {
        rows: ta.rows.len(),
        mse: named(mse),
    })
}

/// Parse arguments, run, print JSON to stdout and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let out = match cli.command {
        Command::Run { scenario } => {
            let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
            cmd_run(&scenario, dir.as_deref()).and_then(|s| to_json(&s))
        }
        Command::Latency { targets, graphs } => {
            cmd_latency(&targets, graphs.as_deref()).and_then(|r| to_json(&r))
        }
        Command::Mse { a, b } => cmd_mse(&a, &b).and_then(|r| to_json(&r)),
    };
    match out {
        Ok(json) => {
            // A closed pipe on stdout is not an error worth reporting.
            let _ = writeln!(std::io::stdout().lock(), "{json}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn to_json(v: &impl Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(runtime)
}
