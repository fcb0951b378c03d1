//! Command-line front end.
//!
//! Every subcommand reads a [`RunConfig`] assembled from an optional JSON file
//! and command-line flags (flags win), runs a sweep, and writes one table as
//! CSV or JSON. Energies are given relative to `J`, which is fixed to 1.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ChainConfig;
use crate::effective::{mode_spectrum, predict};
use crate::entanglement::distribution_efficiency_with;
use crate::error::ChainError;
use crate::haar::{average_fidelity_exact_with, average_fidelity_mc_with, default_corrections};
use crate::thermal::{minimal_cut, Averaging, ThermalSimulator};
use crate::transfer::{Corrections, QuditAmplitudes, TransferSimulator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_TRUNCATION: i32 = 4;

const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "qudit-chain", version, about = "Qudit state transfer through a spin-S XX chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fidelity of one input state over a time grid or at the optimal time.
    Transfer(RunConfig),
    /// Haar-averaged fidelity over a g/J or spin grid.
    AvgFidelity(RunConfig),
    /// Entanglement distribution efficiency over a spin grid.
    Entangle(RunConfig),
    /// Average fidelity with a thermal bus over temperature, field and spin grids.
    Thermal(RunConfig),
    /// Bus mode energies, register couplings and the optimal time.
    Modes(RunConfig),
}

/// Parameters shared by all subcommands. Every field may also come from the
/// JSON file given by `--config`, using the field names below.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file with default values for any of these fields.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of bus sites N.
    #[arg(long)]
    pub bus_length: Option<usize>,
    /// Spin quantum number S, a multiple of 0.5.
    #[arg(long)]
    pub spin: Option<f64>,
    /// Qudit dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub g_over_j: Option<f64>,
    #[arg(long)]
    pub h_over_j: Option<f64>,
    /// `optimal`, a single time, or a grid (`a,b,c` or `start:stop:count[:log]`), units 1/J.
    #[arg(long)]
    pub time: Option<String>,
    /// `uniform`, `basis:K`, or comma-separated real amplitudes (normalized automatically).
    #[arg(long)]
    pub state: Option<String>,
    /// Sweep axis for avg-fidelity: `g-over-j` or `spin`.
    #[arg(long)]
    pub axis: Option<String>,
    /// Values of the sweep axis.
    #[arg(long)]
    pub grid: Option<String>,
    /// Spin grid for entangle and thermal.
    #[arg(long)]
    pub spins: Option<String>,
    /// Temperature grid (units of J) for thermal.
    #[arg(long, visible_alias = "temp-over-j")]
    pub temps: Option<String>,
    /// Field grid in units of S·J for thermal; overrides --h-over-j.
    #[arg(long)]
    pub h_over_sj: Option<String>,
    /// `exact` or `mc`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bus excitation cut for thermal runs; chosen automatically when absent.
    #[arg(long)]
    pub n_cut: Option<usize>,
    /// Largest Boltzmann weight the thermal truncation may drop.
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long)]
    pub format: Option<String>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field; } )*
    };
}

impl RunConfig {
    /// Fills fields unset on the command line from `file`.
    pub fn overlay(mut self, file: RunConfig) -> Self {
        overlay!(self, file; bus_length, spin, dim, g_over_j, h_over_j, time, state, axis, grid,
            spins, temps, h_over_sj, method, samples, seed, n_cut, tail_tol, output, format);
        self
    }

    /// Reads `--config` if given and overlays it.
    pub fn resolve(self) -> Result<Self, CliError> {
        match &self.config {
            None => Ok(self),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", path.display())))?;
                let file: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::invalid(format!("bad config file {}: {e}", path.display())))?;
                Ok(self.overlay(file))
            }
        }
    }

    fn chain(&self, spin: f64, g: f64, h: f64) -> Result<ChainConfig, CliError> {
        let twice = twice_spin(spin)?;
        let config = ChainConfig::new(self.bus_length.unwrap_or(3), twice, self.dim.unwrap_or(3), g)?;
        Ok(config.with_field(h)?)
    }

    fn g(&self) -> f64 {
        self.g_over_j.unwrap_or(0.1)
    }

    fn h(&self) -> f64 {
        self.h_over_j.unwrap_or(0.0)
    }

    fn required_spin(&self) -> Result<f64, CliError> {
        self.spin.ok_or_else(|| CliError::invalid("--spin is required"))
    }

    fn format(&self) -> Result<Format, CliError> {
        match self.format.as_deref().unwrap_or("csv") {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::invalid(format!("unknown format `{other}`"))),
        }
    }

    fn method(&self) -> Result<Method, CliError> {
        match self.method.as_deref().unwrap_or("exact") {
            "exact" => Ok(Method::Exact),
            "mc" => {
                let seed = self
                    .seed
                    .ok_or_else(|| CliError::invalid("--seed is required with --method mc"))?;
                let samples = self.samples.unwrap_or(10_000);
                if samples < 100 {
                    return Err(CliError::invalid("--samples must be at least 100"));
                }
                Ok(Method::MonteCarlo { samples, seed })
            }
            other => Err(CliError::invalid(format!("unknown method `{other}`"))),
        }
    }

    fn times(&self) -> Result<Times, CliError> {
        match self.time.as_deref().unwrap_or("optimal") {
            "optimal" => Ok(Times::Optimal),
            text => Ok(Times::Grid(text.parse::<Grid>()?.values)),
        }
    }

    fn spin_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.spins {
            Some(text) => Ok(text.parse::<Grid>()?.values),
            None => Ok(vec![self.required_spin()?]),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy)]
enum Method {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

enum Times {
    Optimal,
    Grid(Vec<f64>),
}

impl Times {
    fn resolve(&self, config: &ChainConfig) -> Result<Vec<f64>, CliError> {
        match self {
            Times::Optimal => Ok(vec![predict(config)?.tau0]),
            Times::Grid(v) => {
                if v.iter().any(|t| *t < 0.0) {
                    return Err(CliError::invalid("times must be non-negative"));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Sweep values: `a,b,c` or `start:stop:count[:lin|log]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub values: Vec<f64>,
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CliError::invalid(format!("bad grid `{s}`"));
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(bad());
            }
            let (start, stop) = (num(parts[0])?, num(parts[1])?);
            let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
            let log = match parts.get(3).map(|p| p.trim()) {
                None | Some("lin") => false,
                Some("log") => true,
                Some(_) => return Err(bad()),
            };
            if count == 0 || (log && (start <= 0.0 || stop <= 0.0)) {
                return Err(bad());
            }
            (0..count)
                .map(|i| {
                    let f = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                    if log {
                        (start.ln() + f * (stop.ln() - start.ln())).exp()
                    } else {
                        start + f * (stop - start)
                    }
                })
                .collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        Ok(Grid { values })
    }
}

/// Spin given as a decimal multiple of 1/2.
pub fn twice_spin(spin: f64) -> Result<u32, CliError> {
    let twice = 2.0 * spin;
    if spin.is_nan() || spin <= 0.0 || (twice - twice.round()).abs() > 1e-9 || twice > u8::MAX as f64 {
        return Err(CliError::invalid(format!("spin {spin} is not a positive multiple of 1/2")));
    }
    Ok(twice.round() as u32)
}

fn parse_state(text: &str, d: usize) -> Result<QuditAmplitudes, CliError> {
    if text == "uniform" {
        return Ok(QuditAmplitudes::uniform(d));
    }
    if let Some(k) = text.strip_prefix("basis:") {
        let k: usize = k.parse().map_err(|_| CliError::invalid(format!("bad state `{text}`")))?;
        return Ok(QuditAmplitudes::basis(d, k)?);
    }
    let values = text
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::invalid(format!("bad state `{text}`")))?;
    if values.len() != d {
        return Err(CliError::invalid(format!("state has {} amplitudes, expected {d}", values.len())));
    }
    let v = nalgebra::DVector::from_iterator(d, values.into_iter().map(|x| num_complex::Complex64::new(x, 0.0)));
    Ok(QuditAmplitudes::normalized(v)?)
}

/// Error carrying the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        let code = match e {
            ChainError::Unsupported(_) => EXIT_UNSUPPORTED,
            ChainError::Truncation { .. } => EXIT_TRUNCATION,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Named columns of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_significant(x, SIGNIFICANT_DIGITS)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: &RunConfig) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, &x)| {
                        let rounded: f64 = format_significant(x, SIGNIFICANT_DIGITS).parse().unwrap_or(x);
                        let v = serde_json::Number::from_f64(rounded)
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null);
                        (c.to_string(), v)
                    })
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({ "config": config, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

/// Decimal rendering with `digits` significant digits, trailing zeros removed;
/// scientific notation outside `1e-5 ..= 1e12`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    // round from the scientific value so both paths agree on the digits
    let value: f64 = sci.parse().expect("round trip");
    trim_zeros(&format!("{value:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn cmd_transfer(cfg: &RunConfig) -> Result<Table, CliError> {
    let config = cfg.chain(cfg.required_spin()?, cfg.g(), cfg.h())?;
    let alpha = parse_state(cfg.state.as_deref().unwrap_or("uniform"), config.qudit_dim)?;
    let times = cfg.times()?.resolve(&config)?;
    let sim = TransferSimulator::new(&config)?;
    let corrections = default_corrections(&config);
    let mut table = Table::new(&["tau", "fidelity", "fidelity_uncorrected"]);
    table.rows = times
        .par_iter()
        .map(|&tau| {
            Ok(vec![
                tau,
                sim.corrected_fidelity(&alpha, tau, corrections)?,
                sim.corrected_fidelity(&alpha, tau, Corrections::NONE)?,
            ])
        })
        .collect::<Result<Vec<_>, ChainError>>()?;
    Ok(table)
}

pub fn cmd_avg_fidelity(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = cfg.method()?;
    let axis = cfg.axis.as_deref().unwrap_or("g-over-j");
    let grid = match &cfg.grid {
        Some(text) => text.parse::<Grid>()?.values,
        None => match axis {
            "spin" => vec![cfg.required_spin()?],
            _ => vec![cfg.g()],
        },
    };
    let configs = grid
        .iter()
        .map(|&x| match axis {
            "g-over-j" => cfg.chain(cfg.required_spin()?, x, cfg.h()),
            "spin" => cfg.chain(x, cfg.g(), cfg.h()),
            other => Err(CliError::invalid(format!("unknown axis `{other}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let times = cfg.times()?;
    if let Times::Grid(v) = &times {
        if v.len() != 1 {
            return Err(CliError::invalid("avg-fidelity takes `optimal` or a single time"));
        }
    }
    let mut table = Table::new(&["axis_value", "mean", "stderr"]);
    table.rows = grid
        .par_iter()
        .zip(&configs)
        .map(|(&x, config)| {
            let tau = times.resolve(config)?[0];
            let sim = TransferSimulator::new(config)?;
            let corrections = default_corrections(config);
            let (mean, se) = match method {
                Method::Exact => (average_fidelity_exact_with(&sim, tau, corrections)?, 0.0),
                Method::MonteCarlo { samples, seed } => {
                    let est = average_fidelity_mc_with(&sim, tau, samples, seed, corrections)?;
                    (est.mean, est.standard_error)
                }
            };
            Ok(vec![x, mean, se])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(table)
}

pub fn cmd_entangle(cfg: &RunConfig) -> Result<Table, CliError> {
    let spins = cfg.spin_grid()?;
    let times = cfg.times()?;
    let mut table = Table::new(&["spin", "tau", "efficiency"]);
    let rows = spins
        .par_iter()
        .map(|&spin| {
            let config = cfg.chain(spin, cfg.g(), cfg.h())?;
            let sim = TransferSimulator::new(&config)?;
            let phase = config.bus_length % 2 == 1;
            times
                .resolve(&config)?
                .into_iter()
                .map(|tau| Ok(vec![spin, tau, distribution_efficiency_with(&sim, tau, phase)?]))
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    table.rows = rows.into_iter().flatten().collect();
    Ok(table)
}

pub fn cmd_thermal(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = cfg.method()?;
    let spins = cfg.spin_grid()?;
    let temps = cfg
        .temps
        .as_deref()
        .ok_or_else(|| CliError::invalid("--temps is required"))?
        .parse::<Grid>()?
        .values;
    if temps.iter().any(|t| *t <= 0.0) {
        return Err(CliError::invalid("temperatures must be positive"));
    }
    let tolerance = cfg.tail_tol.unwrap_or(crate::thermal::DEFAULT_TAIL_TOLERANCE);
    let averaging = match method {
        Method::Exact => Averaging::Exact,
        Method::MonteCarlo { samples, seed } => Averaging::MonteCarlo { samples, seed },
    };
    let t_max = temps.iter().copied().fold(f64::MIN, f64::max);
    let mut table = Table::new(&["temperature", "h", "spin", "mean_fidelity"]);
    for &spin in &spins {
        let fields: Vec<f64> = match &cfg.h_over_sj {
            Some(text) => text.parse::<Grid>()?.values.iter().map(|x| x * spin).collect(),
            None => vec![cfg.h()],
        };
        for &h in &fields {
            let config = cfg.chain(spin, cfg.g(), h)?;
            let tau = match cfg.times()? {
                Times::Optimal => predict(&config)?.tau0,
                Times::Grid(v) if v.len() == 1 => v[0],
                Times::Grid(_) => return Err(CliError::invalid("thermal takes `optimal` or a single time")),
            };
            let n_cut = match cfg.n_cut {
                Some(n) => n,
                None => minimal_cut(&config, t_max, tolerance)?,
            };
            let sim = ThermalSimulator::new(&config, n_cut, tau)?;
            let rows = temps
                .iter()
                .map(|&t| Ok(vec![t, h, spin, sim.average_fidelity(t, averaging, tolerance)?.mean]))
                .collect::<Result<Vec<_>, ChainError>>()?;
            table.rows.extend(rows);
        }
    }
    Ok(table)
}

pub fn cmd_modes(cfg: &RunConfig) -> Result<Table, CliError> {
    let config = cfg.chain(cfg.required_spin()?, cfg.g(), cfg.h())?;
    let (eps, t) = mode_spectrum(&config);
    let tau0 = if config.bus_length % 2 == 1 && config.coupling_g > 0.0 {
        Some(predict(&config)?.tau0)
    } else {
        None
    };
    let mut table = Table::new(if tau0.is_some() {
        &["k", "epsilon", "coupling", "tau0"]
    } else {
        &["k", "epsilon", "coupling"]
    });
    for k in 0..eps.len() {
        let mut row = vec![(k + 1) as f64, eps[k], t[k]];
        row.extend(tau0);
        table.rows.push(row);
    }
    Ok(table)
}

type Runner = fn(&RunConfig) -> Result<Table, CliError>;

fn execute(cli: Cli) -> Result<(), CliError> {
    let (cfg, runner): (RunConfig, Runner) = match cli.command {
        Command::Transfer(c) => (c, cmd_transfer),
        Command::AvgFidelity(c) => (c, cmd_avg_fidelity),
        Command::Entangle(c) => (c, cmd_entangle),
        Command::Thermal(c) => (c, cmd_thermal),
        Command::Modes(c) => (c, cmd_modes),
    };
    let cfg = cfg.resolve()?;
    let format = cfg.format()?;
    let table = runner(&cfg)?;
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(&cfg),
    };
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError {
                code: EXIT_IO,
                message: e.to_string(),
            })?,
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
