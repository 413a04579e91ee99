//! Command-line front end for `qcs-core`.
//!
//! Subcommands write plot-ready CSV or JSON to stdout or to `--out`:
//! `analytic` evaluates the lossy closed forms on an `(r, η)` grid,
//! `table1` sets theory and simulated sampling beside the measured values,
//! `simulate` runs one circuit end to end and `etastar` tabulates the
//! transmission at which a Gaussian state's QCS reaches one.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use qcs_core::estimator::{
    eta_from_energy, qcs_from_distribution, sample_counts, theory_error_band, truncated_estimate,
    EstimatorError, Truncation,
};
use qcs_core::gaussian::{eta_star, qcs_squeezed_lossy, qcs_thermal_lossy, GaussianError};
use qcs_core::protocol::{
    build_sv_experiment, build_thermal_experiment, run_circuit, CircuitSpec, Engine, ProtocolError,
    RunOptions,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// `1` for malformed input, `2` for failures while computing or writing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Protocol(ProtocolError::Parse { .. })
            | CliError::Protocol(ProtocolError::InvalidSpec(_))
            | CliError::Protocol(ProtocolError::AsymmetricLoss { .. }) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qcs",
    version,
    about = "Quadrature coherence scale of squeezed and thermal light"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form lossy QCS curves for squeezed vacuum and thermal light.
    Analytic(AnalyticArgs),
    /// Reference configurations: theory, simulated sampling and measured values.
    Table1(Table1Args),
    /// Run one circuit and estimate its QCS from sampled photon counts.
    Simulate(SimulateArgs),
    /// Transmission at which a Gaussian state's QCS equals one.
    Etastar(EtastarArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Gaussian,
    Fock,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Gaussian => Engine::Gaussian,
            EngineArg::Fock => Engine::Fock,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (a directory for `simulate`); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyticArgs {
    /// Squeezing parameters of the squeezed-vacuum curves.
    #[arg(long, value_delimiter = ',', default_values_t = [0.653, 0.978, 1.156])]
    pub r: Vec<f64>,
    /// Mean photon numbers of the thermal curves; `sinh² r` of each `--r` when absent.
    #[arg(long, value_delimiter = ',')]
    pub nbar: Vec<f64>,
    /// Transmissions; `0, 0.01, …, 1` when absent.
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Seed of the first row; row `i` uses `seed + i`.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub engine: EngineArg,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Two squeezed vacua on a balanced splitter.
    Sv,
    /// Two thermal states, each half of a two-mode squeezed vacuum.
    Thermal,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("circuit").required(true).args(["experiment", "spec"])))]
pub struct SimulateArgs {
    /// Built-in experiment.
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    /// Circuit description file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0.653)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "fock")]
    pub engine: EngineArg,
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EtastarArgs {
    /// Total quadrature variances `W`, paired with `--purity`.
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<f64>,
    /// Purities paired with `--w`; a single value applies to every `W`.
    #[arg(long, value_delimiter = ',')]
    pub purity: Vec<f64>,
    /// Pure squeezed vacua, `W = cosh 2r`.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    /// Thermal states, `W = 2n̄ + 1`, `𝒫 = 1/(2n̄ + 1)`.
    #[arg(long, value_delimiter = ',')]
    pub nbar: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Rows of named columns, rendered as CSV or as a JSON array of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_json(&self) -> Value {
        let rows = self.rows.iter().map(|row| {
            let obj: Map<String, Value> = self
                .columns
                .iter()
                .map(|c| c.to_string())
                .zip(row.iter().cloned())
                .collect();
            Value::Object(obj)
        });
        Value::Array(rows.collect())
    }

    pub fn write<W: Write>(&self, format: Format, mut writer: W) -> Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(writer);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell))?;
                }
                w.flush().map_err(csv::Error::from)?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut writer, &self.to_json())?;
                writeln!(writer).map_err(csv::Error::from)?;
            }
        }
        Ok(())
    }
}

fn emit(table: &Table, output: &OutputArgs, stdout: &mut dyn Write) -> Result<()> {
    match &output.out {
        Some(path) => table.write(output.format, File::create(path).map_err(io_err(path))?),
        None => table.write(output.format, stdout),
    }
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "squeezing r must be finite and non-negative, got {r}"
        )))
    }
}

fn check_nbar(n: f64) -> Result<()> {
    if n.is_finite() && n >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "mean photon number must be finite and non-negative, got {n}"
        )))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "transmission must lie in [0, 1], got {eta}"
        )))
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials >= 2 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "at least two trials are needed, got {trials}"
        )))
    }
}

/// `η*` of a Gaussian state, or `None` when its QCS never reaches one.
fn eta_star_opt(w: f64, purity: f64) -> Result<Option<f64>> {
    match eta_star(w, purity) {
        Ok(v) => Ok(Some(v)),
        Err(GaussianError::NoCrossing(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn default_eta_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Squeezed,
    Thermal,
}

impl StateKind {
    pub fn name(self) -> &'static str {
        match self {
            StateKind::Squeezed => "squeezed",
            StateKind::Thermal => "thermal",
        }
    }
}

/// Lossy QCS curves. Columns: `state, r, nbar, eta, qcs, eta_star`.
pub fn analytic_table(r: &[f64], nbar: &[f64], eta: &[f64]) -> Result<Table> {
    r.iter().try_for_each(|&v| check_r(v))?;
    nbar.iter().try_for_each(|&v| check_nbar(v))?;
    eta.iter().try_for_each(|&v| check_eta(v))?;
    let mut curves: Vec<(StateKind, Option<f64>, f64)> = r
        .iter()
        .map(|&r| (StateKind::Squeezed, Some(r), r.sinh().powi(2)))
        .collect();
    if nbar.is_empty() {
        curves.extend(
            r.iter()
                .map(|&r| (StateKind::Thermal, Some(r), r.sinh().powi(2))),
        );
    } else {
        curves.extend(nbar.iter().map(|&n| (StateKind::Thermal, None, n)));
    }
    let points: Vec<_> = curves
        .iter()
        .flat_map(|&c| eta.iter().map(move |&e| (c, e)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&((kind, r, n), e)| {
            let (qcs, star) = match kind {
                StateKind::Squeezed => {
                    let r = r.unwrap_or(0.0);
                    (
                        qcs_squeezed_lossy(r, e)?,
                        eta_star_opt((2.0 * r).cosh(), 1.0)?,
                    )
                }
                StateKind::Thermal => {
                    let w = 2.0 * n + 1.0;
                    (qcs_thermal_lossy(n, e)?, eta_star_opt(w, 1.0 / w)?)
                }
            };
            Ok(vec![
                json!(kind.name()),
                r.map_or(Value::Null, |v| json!(v)),
                json!(n),
                json!(e),
                json!(qcs),
                star.map_or(Value::Null, |v| json!(v)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: vec!["state", "r", "nbar", "eta", "qcs", "eta_star"],
        rows,
    })
}

/// One reference configuration: calibrated and energy-derived transmissions,
/// measured QCS and its quoted error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub state: StateKind,
    pub r: f64,
    pub eta_c: f64,
    pub eta_m: f64,
    pub measured: f64,
    pub measured_error: f64,
}

pub const TABLE1: [TableEntry; 6] = [
    TableEntry {
        state: StateKind::Squeezed,
        r: 0.653,
        eta_c: 0.190,
        eta_m: 0.2010,
        measured: 0.9003,
        measured_error: 0.0009,
    },
    TableEntry {
        state: StateKind::Squeezed,
        r: 0.978,
        eta_c: 0.190,
        eta_m: 0.1901,
        measured: 0.809,
        measured_error: 0.002,
    },
    TableEntry {
        state: StateKind::Squeezed,
        r: 1.156,
        eta_c: 0.190,
        eta_m: 0.183,
        measured: 0.760,
        measured_error: 0.003,
    },
    TableEntry {
        state: StateKind::Thermal,
        r: 0.653,
        eta_c: 0.267,
        eta_m: 0.2564,
        measured: 0.792,
        measured_error: 0.001,
    },
    TableEntry {
        state: StateKind::Thermal,
        r: 0.978,
        eta_c: 0.267,
        eta_m: 0.2447,
        measured: 0.584,
        measured_error: 0.003,
    },
    TableEntry {
        state: StateKind::Thermal,
        r: 1.156,
        eta_c: 0.267,
        eta_m: 0.240,
        measured: 0.459,
        measured_error: 0.005,
    },
];

pub fn build_experiment(state: StateKind, r: f64, phi: f64, eta: f64) -> Result<CircuitSpec> {
    Ok(match state {
        StateKind::Squeezed => build_sv_experiment(r, phi, eta)?,
        StateKind::Thermal => build_thermal_experiment(r, phi, eta)?,
    })
}

/// Theory, simulated estimate and its standard error at one `(state, r, η)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedPoint {
    pub theory: f64,
    pub exact: f64,
    pub simulated: f64,
    pub std_error: f64,
}

pub fn simulate_point(
    state: StateKind,
    r: f64,
    eta: f64,
    engine: Engine,
    options: &RunOptions,
    trials: u64,
    seed: u64,
) -> Result<SimulatedPoint> {
    check_r(r)?;
    check_eta(eta)?;
    check_trials(trials)?;
    let result = run_circuit(&build_experiment(state, r, 0.0, eta)?, engine, options)?;
    let sampled = sample_counts(&result.exact_distribution, trials, seed)?;
    let est = qcs_from_distribution(&sampled)?;
    let theory = match state {
        StateKind::Squeezed => qcs_squeezed_lossy(r, eta)?,
        StateKind::Thermal => qcs_thermal_lossy(r.sinh().powi(2), eta)?,
    };
    Ok(SimulatedPoint {
        theory,
        exact: result.qcs_two_copy,
        simulated: est.qcs,
        std_error: est.std_error(),
    })
}

/// Columns: `state, r, nbar, eta_source, eta, theory, exact, simulated,
/// std_error, measured, measured_error, relative_gap`, where the gap is
/// `(theory − measured) / theory`.
pub fn table1(engine: Engine, options: &RunOptions, trials: u64, seed: u64) -> Result<Table> {
    let jobs: Vec<(TableEntry, &'static str, f64)> = TABLE1
        .iter()
        .flat_map(|&e| [(e, "calibrated", e.eta_c), (e, "measured", e.eta_m)])
        .collect();
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(e, source, eta))| {
            let p = simulate_point(
                e.state,
                e.r,
                eta,
                engine,
                options,
                trials,
                seed.wrapping_add(i as u64),
            )?;
            Ok(vec![
                json!(e.state.name()),
                json!(e.r),
                json!(e.r.sinh().powi(2)),
                json!(source),
                json!(eta),
                json!(p.theory),
                json!(p.exact),
                json!(p.simulated),
                finite(p.std_error),
                json!(e.measured),
                json!(e.measured_error),
                json!((p.theory - e.measured) / p.theory),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: vec![
            "state",
            "r",
            "nbar",
            "eta_source",
            "eta",
            "theory",
            "exact",
            "simulated",
            "std_error",
            "measured",
            "measured_error",
            "relative_gap",
        ],
        rows,
    })
}

/// Everything `simulate` reports about one run.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub spec: CircuitSpec,
    pub result: qcs_core::protocol::ExperimentResult,
    pub sampled: qcs_core::estimator::CountDistribution,
    pub estimate: qcs_core::estimator::QcsEstimate,
    pub truncated: qcs_core::estimator::QcsEstimate,
    pub eta_hat: Option<qcs_core::estimator::EtaEstimate>,
    pub theory_band: f64,
    pub seed: u64,
}

impl SimulationReport {
    pub fn summary(&self) -> Map<String, Value> {
        let res = &self.result;
        let engine = match res.engine {
            Engine::Gaussian => "gaussian",
            Engine::Fock => "fock",
        };
        let mut m = Map::new();
        m.insert("engine".into(), json!(engine));
        m.insert("eta".into(), json!(res.metadata.eta));
        m.insert("cutoffs".into(), json!(res.metadata.cutoffs));
        m.insert("qcs_analytic".into(), finite(res.qcs_analytic));
        m.insert("qcs_direct".into(), finite(res.qcs_direct));
        m.insert("qcs_two_copy".into(), finite(res.qcs_two_copy));
        m.insert("purity".into(), json!(res.purity));
        m.insert("mean_photon_out".into(), json!(res.mean_photon_out));
        m.insert("trials".into(), json!(self.sampled.trials()));
        m.insert("seed".into(), json!(self.seed));
        m.insert("qcs".into(), finite(self.estimate.qcs));
        m.insert("qcs_purity".into(), finite(self.estimate.purity));
        m.insert("variance".into(), finite(self.estimate.variance));
        m.insert("std_error".into(), finite(self.estimate.std_error()));
        m.insert("out_of_range".into(), json!(self.estimate.out_of_range));
        m.insert("truncated_qcs".into(), finite(self.truncated.qcs));
        m.insert(
            "truncated_std_error".into(),
            finite(self.truncated.std_error()),
        );
        m.insert(
            "eta_hat".into(),
            self.eta_hat.map_or(Value::Null, |e| finite(e.eta)),
        );
        m.insert(
            "eta_hat_exceeds_one".into(),
            self.eta_hat.map_or(Value::Null, |e| json!(e.exceeds_one)),
        );
        m.insert("theory_band".into(), finite(self.theory_band));
        m
    }
}

pub fn simulate(
    spec: CircuitSpec,
    engine: Engine,
    options: &RunOptions,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    check_trials(trials)?;
    let result = run_circuit(&spec, engine, options)?;
    let sampled = sample_counts(&result.exact_distribution, trials, seed)?;
    let estimate = qcs_from_distribution(&sampled)?;
    let truncated = truncated_estimate(&sampled, 4, Truncation::Renormalise)?;
    let r = spec.sources.first().map_or(0.0, |s| s.r);
    let eta_hat = if r > 0.0 {
        Some(eta_from_energy(sampled.mean(), r)?)
    } else {
        None
    };
    let theory_band = theory_error_band(&sampled, &result.exact_distribution)?;
    Ok(SimulationReport {
        spec,
        result,
        sampled,
        estimate,
        truncated,
        eta_hat,
        theory_band,
        seed,
    })
}

fn summary_table(summary: &Map<String, Value>) -> Table {
    let rows = summary
        .iter()
        .map(|(k, v)| {
            let v = match v {
                Value::Array(items) => json!(items.iter().map(cell).collect::<Vec<_>>().join(" ")),
                other => other.clone(),
            };
            vec![json!(k), v]
        })
        .collect();
    Table {
        columns: vec!["key", "value"],
        rows,
    }
}

fn write_simulation(
    report: &SimulationReport,
    output: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<()> {
    let summary = report.summary();
    let Some(dir) = &output.out else {
        return match output.format {
            Format::Csv => summary_table(&summary).write(Format::Csv, stdout),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *stdout, &Value::Object(summary))?;
                writeln!(stdout).map_err(csv::Error::from)?;
                Ok(())
            }
        };
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("exact.csv");
    report
        .result
        .exact_distribution
        .write_csv(File::create(&path).map_err(io_err(&path))?)?;
    let path = dir.join("tallies.csv");
    report
        .sampled
        .write_csv(File::create(&path).map_err(io_err(&path))?)?;
    let path = dir.join("circuit.txt");
    fs::write(&path, report.spec.to_string()).map_err(io_err(&path))?;
    match output.format {
        Format::Csv => {
            let path = dir.join("summary.csv");
            summary_table(&summary).write(Format::Csv, File::create(&path).map_err(io_err(&path))?)
        }
        Format::Json => {
            let path = dir.join("summary.json");
            let text = serde_json::to_string_pretty(&Value::Object(summary))? + "\n";
            fs::write(&path, text).map_err(io_err(&path))
        }
    }
}

/// Columns: `source, w, purity, eta_star`; `eta_star` is empty when the
/// QCS of the state never reaches one.
pub fn etastar_table(args: &EtastarArgs) -> Result<Table> {
    let mut states: Vec<(&'static str, f64, f64)> = Vec::new();
    if !args.w.is_empty() || !args.purity.is_empty() {
        let purity = match args.purity.len() {
            1 => vec![args.purity[0]; args.w.len()],
            n if n == args.w.len() => args.purity.clone(),
            n => {
                return Err(CliError::Usage(format!(
                    "{} values of --w but {n} of --purity",
                    args.w.len()
                )))
            }
        };
        states.extend(args.w.iter().zip(purity).map(|(&w, p)| ("gaussian", w, p)));
    }
    for &r in &args.r {
        check_r(r)?;
        states.push(("squeezed", (2.0 * r).cosh(), 1.0));
    }
    for &n in &args.nbar {
        check_nbar(n)?;
        states.push(("thermal", 2.0 * n + 1.0, 1.0 / (2.0 * n + 1.0)));
    }
    if states.is_empty() {
        return Err(CliError::Usage(
            "give --w with --purity, --r or --nbar".into(),
        ));
    }
    let rows = states
        .iter()
        .map(|&(source, w, p)| {
            if !(w.is_finite() && w >= 1.0) || !(p > 0.0 && p <= 1.0) {
                return Err(CliError::Usage(format!(
                    "need W >= 1 and 0 < purity <= 1, got W = {w}, purity = {p}"
                )));
            }
            let star = eta_star_opt(w, p)?;
            Ok(vec![
                json!(source),
                json!(w),
                json!(p),
                star.map_or(Value::Null, |v| json!(v)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: vec!["source", "w", "purity", "eta_star"],
        rows,
    })
}

fn options(cutoff: Option<usize>) -> RunOptions {
    RunOptions {
        cutoff,
        ..RunOptions::default()
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Analytic(a) => {
            let eta = if a.eta.is_empty() {
                default_eta_grid()
            } else {
                a.eta.clone()
            };
            emit(&analytic_table(&a.r, &a.nbar, &eta)?, &a.output, stdout)
        }
        Command::Table1(a) => {
            check_trials(a.trials)?;
            emit(
                &table1(a.engine.into(), &options(a.cutoff), a.trials, a.seed)?,
                &a.output,
                stdout,
            )
        }
        Command::Simulate(a) => {
            let spec = match (&a.spec, a.experiment) {
                (Some(path), _) => fs::read_to_string(path)
                    .map_err(io_err(path))?
                    .parse::<CircuitSpec>()?,
                (None, Some(Experiment::Sv)) => {
                    build_experiment(StateKind::Squeezed, a.r, a.phi, a.eta)?
                }
                (None, Some(Experiment::Thermal)) => {
                    build_experiment(StateKind::Thermal, a.r, a.phi, a.eta)?
                }
                (None, None) => return Err(CliError::Usage("give an experiment or --spec".into())),
            };
            let report = simulate(spec, a.engine.into(), &options(a.cutoff), a.trials, a.seed)?;
            write_simulation(&report, &a.output, stdout)
        }
        Command::Etastar(a) => emit(&etastar_table(a)?, &a.output, stdout),
    }
}
