//! Run configuration: command-line flags layered over a flat TOML file and
//! resolved into a validated [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::nonmarkov::DEFAULT_TAU_MAX;
use crate::optimizer::{FIG1_POINTS, FIG1_T_RANGE};
use crate::quadrature::QuadratureConfig;
use crate::spectral::{
    CutoffKind, SpectralParams, TemperatureSpec, CONVEXITY_DEFAULT_POINTS, CONVEXITY_DEFAULT_X_MAX,
};

pub const OUT_ENV: &str = "DEPHASIM_OUT";
pub const DEFAULT_OUT: &str = "dephasim-out";

/// Everything settable from the command line or a config file. Config
/// file keys are the flag names without the leading dashes.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Ohmicity parameter
    #[arg(long)]
    pub s: Option<f64>,
    /// Cutoff function: soft (exponential) or hard (Gaussian)
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Temperature regime: zero, finite or high
    #[arg(long)]
    pub temp: Option<String>,
    /// Dimensionless temperature 2 k_B T / ω_c for finite and high regimes
    #[arg(long)]
    pub t_tilde: Option<f64>,
    /// Cutoff frequency ω_c, recorded in the manifest (outputs are in units of ω_c)
    #[arg(long)]
    pub omega_c: Option<f64>,
    /// End of the time window in units of 1/ω_c
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Number of time-grid points
    #[arg(long)]
    pub points: Option<usize>,
    /// Lowest temperature of a sweep
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Highest temperature of a sweep
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of log-spaced temperatures
    #[arg(long)]
    pub t_points: Option<usize>,
    /// Smallest Ohmicity of a sweep
    #[arg(long)]
    pub s_min: Option<f64>,
    /// Largest Ohmicity of a sweep
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Number of evenly spaced Ohmicities
    #[arg(long)]
    pub s_points: Option<usize>,
    /// Upper frequency of the convexity scan
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Number of frequencies in the convexity scan
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Absolute quadrature tolerance
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Panel budget per integral
    #[arg(long)]
    pub max_panels: Option<usize>,
    /// Fixed upper integration limit (otherwise derived from the tolerance)
    #[arg(long)]
    pub tail_cut: Option<f64>,
    /// Output directory [default: $DEPHASIM_OUT or ./dephasim-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel evaluation
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Settings, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigFile {
            path: PathBuf::new(),
            reason: e.message().to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Settings::from_toml(&text).map_err(|e| match e {
            CliError::ConfigFile { reason, .. } => CliError::ConfigFile {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }

    /// Fields set here win over those in `base`.
    pub fn over(self, base: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => { Settings { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            s, cutoff, temp, t_tilde, omega_c, tau_max, points, t_min, t_max, t_points, s_min, s_max,
            s_points, x_max, grid_points, abs_tol, rel_tol, max_panels, tail_cut, out, jobs
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Trace,
    Stationary,
    Sopt,
    Nonmark,
    Crossover,
    SweepTemp,
    SweepS,
    Convexity,
    Fig1,
    Fig2,
    Fig3,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Trace => "trace",
            CommandKind::Stationary => "stationary",
            CommandKind::Sopt => "sopt",
            CommandKind::Nonmark => "nonmark",
            CommandKind::Crossover => "crossover",
            CommandKind::SweepTemp => "sweep-temp",
            CommandKind::SweepS => "sweep-s",
            CommandKind::Convexity => "convexity",
            CommandKind::Fig1 => "fig1",
            CommandKind::Fig2 => "fig2",
            CommandKind::Fig3 => "fig3",
        }
    }
}

/// Endpoints and size of a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Fully resolved and validated run. Embedded verbatim in `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub spectral: SpectralParams,
    pub temperature: TemperatureSpec,
    pub tau_max: f64,
    pub points: usize,
    pub t_grid: GridSpec,
    pub s_grid: GridSpec,
    pub x_max: f64,
    pub grid_points: usize,
    pub quadrature: QuadratureConfig,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

fn bad(field: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field,
        reason: reason.into(),
    }
}

fn positive(field: &'static str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(field, format!("must be a positive finite number, got {v}")))
    }
}

fn at_least(field: &'static str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(bad(field, format!("must be at least {min}, got {v}")))
    }
}

impl RunConfig {
    /// Applies per-command defaults to `settings` and validates the result.
    pub fn resolve(command: CommandKind, settings: Settings, env_out: Option<PathBuf>) -> Result<RunConfig, CliError> {
        let s = positive("s", settings.s.unwrap_or(3.0))?;
        let cutoff: CutoffKind = match settings.cutoff.as_deref() {
            None => CutoffKind::Soft,
            Some(c) => c.parse().map_err(|_| bad("cutoff", format!("expected soft or hard, got {c:?}")))?,
        };
        let omega_c = positive("omega-c", settings.omega_c.unwrap_or(1.0))?;
        let t_tilde = positive("t-tilde", settings.t_tilde.unwrap_or(1.0))?;
        let temperature = match settings.temp.as_deref().unwrap_or("zero") {
            "zero" => TemperatureSpec::Zero,
            "finite" => TemperatureSpec::Finite(t_tilde),
            "high" => TemperatureSpec::HighTLimit(t_tilde),
            other => return Err(bad("temp", format!("expected zero, finite or high, got {other:?}"))),
        };
        let spectral = SpectralParams::new(s, omega_c, cutoff).map_err(|e| bad("s", e.to_string()))?;

        let default_tau_max = match command {
            CommandKind::Trace => 50.0,
            _ => DEFAULT_TAU_MAX,
        };
        let tau_max = positive("tau-max", settings.tau_max.unwrap_or(default_tau_max))?;
        let points = at_least("points", settings.points.unwrap_or(500), 2)?;

        let t_grid = GridSpec {
            min: positive("t-min", settings.t_min.unwrap_or(FIG1_T_RANGE.0))?,
            max: positive("t-max", settings.t_max.unwrap_or(FIG1_T_RANGE.1))?,
            points: at_least("t-points", settings.t_points.unwrap_or(FIG1_POINTS), 2)?,
        };
        if t_grid.max <= t_grid.min {
            return Err(bad("t-max", "must exceed t-min"));
        }
        let s_grid = GridSpec {
            min: positive("s-min", settings.s_min.unwrap_or(0.5))?,
            max: positive("s-max", settings.s_max.unwrap_or(6.0))?,
            points: at_least("s-points", settings.s_points.unwrap_or(111), 2)?,
        };
        if s_grid.max <= s_grid.min {
            return Err(bad("s-max", "must exceed s-min"));
        }

        let x_max = positive("x-max", settings.x_max.unwrap_or(CONVEXITY_DEFAULT_X_MAX))?;
        let grid_points = at_least("grid-points", settings.grid_points.unwrap_or(CONVEXITY_DEFAULT_POINTS), 64)?;

        let defaults = QuadratureConfig::default();
        let quadrature = QuadratureConfig {
            abs_tol: positive("abs-tol", settings.abs_tol.unwrap_or(defaults.abs_tol))?,
            rel_tol: positive("rel-tol", settings.rel_tol.unwrap_or(defaults.rel_tol))?,
            max_panels: settings.max_panels.unwrap_or(defaults.max_panels),
            tail_cut: match settings.tail_cut {
                Some(x) => Some(positive("tail-cut", x)?),
                None => defaults.tail_cut,
            },
        };
        quadrature.validate().map_err(|e| bad("max-panels", e.to_string()))?;

        let jobs = match settings.jobs {
            Some(j) => Some(at_least("jobs", j, 1)?),
            None => None,
        };
        let out = settings
            .out
            .or(env_out.filter(|p| !p.as_os_str().is_empty()))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

        Ok(RunConfig {
            command,
            spectral,
            temperature,
            tau_max,
            points,
            t_grid,
            s_grid,
            x_max,
            grid_points,
            quadrature,
            out,
            jobs,
        })
    }
}
