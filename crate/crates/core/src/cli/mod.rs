//! Command-line front end. Each run resolves a [`RunConfig`], computes one
//! table, and commits `data.csv`, `plot.gp` and `meta.json` into the output
//! directory.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for numerical
//! failures and 1 when outputs cannot be written.

mod config;
mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

pub use config::{CommandKind, GridSpec, RunConfig, Settings, DEFAULT_OUT, OUT_ENV};
pub use output::{
    commit, format_number, sha256_hex, PlotSpec, RunManifest, Table, DATA_FILE, META_FILE, PLOT_FILE,
};

use crate::dynamics::{compute_trace, stationary_exponent, TimeGrid};
use crate::nonmarkov::{channel_capacity, markovian_crossover, nonmarkovianity_measure};
use crate::optimizer::{linear_grid, log_grid, ohmicity_sweep, optimal_s, temperature_sweep, SweepResult};
use crate::spectral::{convexity_check, Convexity, CutoffKind, TemperatureSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("cannot load config file {}: {reason}", path.display())]
    ConfigFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Compute(#[from] crate::Error),
    #[error("cannot write outputs to {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::ConfigFile { .. } => 2,
            CliError::Compute(crate::Error::Domain(_)) => 2,
            CliError::Compute(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dephasim", version, about = "Exact pure-dephasing dynamics of a qubit in an Ohmic-family reservoir")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat TOML file with defaults for any flag
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decoherence factor, dephasing rate and channel capacity over time
    Trace(CommonArgs),
    /// Long-time coherence and its exponent
    Stationary(CommonArgs),
    /// Ohmicity maximising the stationary coherence
    Sopt(CommonArgs),
    /// Information back-flow intervals and the N_Q measure
    Nonmark(CommonArgs),
    /// Ohmicity where back-flow first appears
    Crossover(CommonArgs),
    /// Optimal Ohmicity across temperatures
    SweepTemp(CommonArgs),
    /// Stationary coherence and N_Q across Ohmicities
    SweepS(CommonArgs),
    /// Whether g(x) changes convexity
    Convexity(CommonArgs),
    /// Data and plot script for one of the reference figures
    Figure {
        #[arg(value_enum)]
        figure: Figure,
        #[command(flatten)]
        args: CommonArgs,
    },
}

impl Command {
    fn split(self) -> (CommandKind, CommonArgs) {
        match self {
            Command::Trace(a) => (CommandKind::Trace, a),
            Command::Stationary(a) => (CommandKind::Stationary, a),
            Command::Sopt(a) => (CommandKind::Sopt, a),
            Command::Nonmark(a) => (CommandKind::Nonmark, a),
            Command::Crossover(a) => (CommandKind::Crossover, a),
            Command::SweepTemp(a) => (CommandKind::SweepTemp, a),
            Command::SweepS(a) => (CommandKind::SweepS, a),
            Command::Convexity(a) => (CommandKind::Convexity, a),
            Command::Figure { figure, args } => (
                match figure {
                    Figure::Fig1 => CommandKind::Fig1,
                    Figure::Fig2 => CommandKind::Fig2,
                    Figure::Fig3 => CommandKind::Fig3,
                },
                args,
            ),
        }
    }
}

/// Result of one computation, before anything touches the filesystem.
#[derive(Debug, Clone)]
pub struct Computed {
    pub table: Table,
    pub plot: PlotSpec,
    pub summary: BTreeMap<String, serde_json::Value>,
}

fn plot(title: impl Into<String>, xlabel: &str, ylabel: &str, logx: bool, columns: Vec<usize>) -> PlotSpec {
    PlotSpec {
        title: title.into(),
        xlabel: xlabel.into(),
        ylabel: ylabel.into(),
        logx,
        columns,
    }
}

fn sweep_table(sweep: &SweepResult, names: &[&str]) -> Table {
    let mut header = vec![sweep.axis_name.as_str()];
    header.extend_from_slice(names);
    let mut table = Table::new(&header);
    let cols: Vec<&Vec<f64>> = names
        .iter()
        .map(|n| &sweep.column(n).expect("sweep column exists").values)
        .collect();
    for (i, &x) in sweep.axis.iter().enumerate() {
        let mut row = vec![x];
        row.extend(cols.iter().map(|c| c[i]));
        table.push(row);
    }
    table
}

fn s_axis(cfg: &RunConfig) -> crate::Result<Vec<f64>> {
    linear_grid(cfg.s_grid.min, cfg.s_grid.max, cfg.s_grid.points)
}

fn t_axis(cfg: &RunConfig) -> crate::Result<Vec<f64>> {
    log_grid(cfg.t_grid.min, cfg.t_grid.max, cfg.t_grid.points)
}

/// Runs the library computation selected by `cfg.command`.
pub fn compute(cfg: &RunConfig) -> Result<Computed, CliError> {
    let p = &cfg.spectral;
    let t = &cfg.temperature;
    let q = &cfg.quadrature;
    let mut summary = BTreeMap::new();
    let regime = format!("{} cutoff, {} temperature", p.cutoff, t.label());

    let (table, plot) = match cfg.command {
        CommandKind::Trace => {
            let grid = TimeGrid::uniform(cfg.tau_max, cfg.points)?;
            let trace = compute_trace(p, t, &grid, q)?;
            let mut table = Table::new(&["tau", "lambda", "gamma", "capacity"]);
            for i in 0..grid.len() {
                let capacity = channel_capacity(trace.lambda[i])?;
                table.push(vec![grid.tau()[i], trace.lambda[i], trace.gamma[i], capacity]);
            }
            (table, plot(format!("s = {}, {regime}", p.s), "tau", "", false, vec![1, 2, 3]))
        }
        CommandKind::Stationary => {
            let mut table = Table::new(&["s", "lambda_inf", "lambda_inf_error", "coherence"]);
            match stationary_exponent(p, t, q)? {
                Some(r) => table.push(vec![p.s, r.value, r.error_estimate, (-r.value).exp()]),
                None => table.push(vec![p.s, f64::INFINITY, 0.0, 0.0]),
            }
            summary.insert("trapped".into(), json!(table.rows[0][3] > 0.0));
            (table, plot(format!("stationary coherence, {regime}"), "s", "coherence", false, vec![3]))
        }
        CommandKind::Sopt => {
            let o = optimal_s(p.cutoff, t, q)?;
            let mut table = Table::new(&["s_opt", "coherence_at_opt", "digamma_reference"]);
            table.push(vec![o.s_opt, o.coherence_at_opt, o.digamma_reference.unwrap_or(f64::NAN)]);
            (table, plot(format!("optimal Ohmicity, {regime}"), "s_opt", "coherence", false, vec![1]))
        }
        CommandKind::Nonmark => {
            let report = nonmarkovianity_measure(p, t, cfg.tau_max, q)?;
            let mut table = Table::new(&["start", "end", "truncated", "delta_q", "n_q_cumulative"]);
            let mut cumulative = 0.0;
            for iv in &report.intervals {
                let q_start = channel_capacity(crate::dynamics::dephasing_factor(p, t, iv.start, q)?.max(0.0))?;
                let q_end = channel_capacity(crate::dynamics::dephasing_factor(p, t, iv.end, q)?.max(0.0))?;
                let delta = (q_end - q_start).max(0.0);
                cumulative += delta;
                table.push(vec![iv.start, iv.end, if iv.truncated { 1.0 } else { 0.0 }, delta, cumulative]);
            }
            summary.insert("n_q".into(), json!(report.n_q));
            summary.insert("n_q_error".into(), json!(report.n_q_error));
            summary.insert("intervals".into(), json!(report.intervals.len()));
            summary.insert("truncated".into(), json!(report.truncated));
            (table, plot(format!("back-flow intervals, s = {}, {regime}", p.s), "start", "n_q", false, vec![4]))
        }
        CommandKind::Crossover => {
            let s_star = markovian_crossover(t, p.cutoff, q)?;
            let mut table = Table::new(&["s_star"]);
            table.push(vec![s_star]);
            (table, plot(format!("Markovian crossover, {regime}"), "", "s_star", false, vec![0]))
        }
        CommandKind::SweepTemp => {
            let sweep = temperature_sweep(p.cutoff, &t_axis(cfg)?, q)?;
            let c = p.cutoff.name();
            let table = sweep_table(&sweep, &[&format!("s_opt_{c}"), &format!("coherence_{c}")]);
            (table, plot(format!("optimal Ohmicity, {} cutoff", p.cutoff), "t_tilde", "", true, vec![1, 2]))
        }
        CommandKind::SweepS => {
            let sweep = ohmicity_sweep(&s_axis(cfg)?, t, cfg.tau_max, q)?;
            let names: Vec<&str> = sweep.columns.iter().map(|c| c.name.as_str()).collect();
            let table = sweep_table(&sweep, &names);
            let n = table.header.len();
            (table, plot(format!("Ohmicity sweep, {} temperature", t.label()), "s", "", false, (1..n).collect()))
        }
        CommandKind::Convexity => {
            let verdict = convexity_check(p, t, cfg.x_max, cfg.grid_points)?;
            let mut table = Table::new(&["s", "non_convex"]);
            table.push(vec![p.s, if verdict == Convexity::NonConvex { 1.0 } else { 0.0 }]);
            (table, plot(format!("convexity of g, {regime}"), "s", "non_convex", false, vec![1]))
        }
        CommandKind::Fig1 => {
            let grid = t_axis(cfg)?;
            let soft = temperature_sweep(CutoffKind::Soft, &grid, q)?;
            let hard = temperature_sweep(CutoffKind::Hard, &grid, q)?;
            let sweep = soft.merge(hard)?;
            for cutoff in CutoffKind::ALL {
                for (name, regime) in [("zero", TemperatureSpec::Zero), ("high", TemperatureSpec::HighTLimit(1.0))] {
                    let o = optimal_s(cutoff, &regime, q)?;
                    summary.insert(format!("s_opt_{name}_{}", cutoff.name()), json!(o.s_opt));
                }
            }
            let table = sweep_table(&sweep, &["s_opt_soft", "coherence_soft", "s_opt_hard", "coherence_hard"]);
            (table, plot("optimal Ohmicity versus temperature", "t_tilde", "", true, vec![1, 2, 3, 4]))
        }
        CommandKind::Fig2 => {
            let sweep = ohmicity_sweep(&s_axis(cfg)?, t, cfg.tau_max, q)?;
            let table = sweep_table(&sweep, &["coherence_soft", "coherence_hard"]);
            (table, plot(format!("stationary coherence, {} temperature", t.label()), "s", "coherence", false, vec![1, 2]))
        }
        CommandKind::Fig3 => {
            let sweep = ohmicity_sweep(&s_axis(cfg)?, t, cfg.tau_max, q)?;
            let table = sweep_table(
                &sweep,
                &[
                    "coherence_soft_norm",
                    "coherence_hard_norm",
                    "n_q_soft_norm",
                    "n_q_hard_norm",
                    "n_q_soft",
                    "n_q_hard",
                ],
            );
            (table, plot(format!("normalised coherence and N_Q, {} temperature", t.label()), "s", "normalised", false, vec![1, 2, 3, 4]))
        }
    };
    Ok(Computed { table, plot, summary })
}

/// Computes and commits one run, returning its manifest.
pub fn execute(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let computed = match cfg.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config {
                    field: "jobs",
                    reason: e.to_string(),
                })?;
            pool.install(|| compute(cfg))?
        }
        None => compute(cfg)?,
    };

    let data = computed.table.to_csv();
    let script = computed.plot.render(&computed.table.header).into_bytes();
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        duration_seconds: 0.0,
        checksums: BTreeMap::new(),
        summary: computed.summary,
    };
    let mut written = manifest.clone();
    commit(&cfg.out, &[(DATA_FILE, data), (PLOT_FILE, script)], |sums| {
        written.checksums = sums;
        written.duration_seconds = started.elapsed().as_secs_f64();
        let mut text = serde_json::to_string_pretty(&written).expect("manifest serialises");
        text.push('\n');
        text.into_bytes()
    })
    .map_err(|source| CliError::Io {
        path: cfg.out.clone(),
        source,
    })?;
    manifest.checksums = written.checksums;
    manifest.duration_seconds = written.duration_seconds;
    Ok(manifest)
}

/// Runs a resolved configuration and reports errors on stderr.
pub fn run(cfg: &RunConfig) -> i32 {
    match execute(cfg) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Merges flags over the optional config file and resolves the run.
pub fn resolve(command: Command) -> Result<RunConfig, CliError> {
    let (kind, args) = command.split();
    let file = match &args.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    RunConfig::resolve(kind, args.settings.over(file), env_out)
}

/// Entry point shared by the binary and tests.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match resolve(cli.command) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
