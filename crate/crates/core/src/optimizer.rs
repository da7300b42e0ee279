//! Optimal Ohmicity and the parameter sweeps behind the coherence and
//! back-flow curves.
//!
//! The stationary coherence `e^{-Λ∞(s)}` is maximised by minimising `Λ∞`
//! with a golden-section search. In the zero-temperature and
//! high-temperature regimes `Λ∞` is a rescaled Gamma function, so the
//! optimum is also available from the root `x*` of the digamma function.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::stationary_exponent;
use crate::error::{domain, Error, Result};
use crate::nonmarkov::nonmarkovianity_measure;
use crate::quadrature::QuadratureConfig;
use crate::special::gamma_min_location;
use crate::spectral::{CutoffKind, SpectralParams, TemperatureSpec};

/// Bracket width at which the golden-section search stops.
pub const S_TOL: f64 = 1e-4;
/// Samples of the coarse scan that checks unimodality and narrows the bracket.
pub const COARSE_SAMPLES: usize = 16;
pub const S_UPPER: f64 = 6.0;
pub const S_GRID_MAX: f64 = 8.0;

/// Default temperature axis for the `s_opt(T̃)` curves.
pub const FIG1_T_RANGE: (f64, f64) = (0.01, 20.0);
pub const FIG1_POINTS: usize = 25;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub s_opt: f64,
    pub coherence_at_opt: f64,
    /// Error estimate of `Λ∞` at the optimum.
    pub exponent_error: f64,
    /// Digamma-root prediction, where a closed form exists.
    pub digamma_reference: Option<f64>,
}

/// A named output series with per-point error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub columns: Vec<Column>,
    pub metadata: BTreeMap<String, String>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Appends `<name>_norm` copies of the named columns scaled to a
    /// maximum of one. All-zero columns stay zero.
    pub fn add_normalized(&mut self, names: &[&str]) {
        for name in names {
            let Some(col) = self.column(name) else { continue };
            let max = col.values.iter().cloned().fold(0.0, f64::max);
            let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
            let normalized = Column {
                name: format!("{name}_norm"),
                values: col.values.iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect(),
                errors: col.errors.iter().map(|e| e * scale).collect(),
            };
            self.columns.push(normalized);
        }
    }

    /// Joins two sweeps over the same axis.
    pub fn merge(mut self, other: SweepResult) -> Result<SweepResult> {
        if self.axis != other.axis {
            return domain("cannot merge sweeps over different axes");
        }
        self.columns.extend(other.columns);
        for (k, v) in other.metadata {
            self.metadata.entry(k).or_insert(v);
        }
        Ok(self)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return domain(format!("invalid log grid [{lo}, {hi}] with {n} points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo && lo.is_finite() && hi.is_finite()) || n < 2 {
        return domain(format!("invalid grid [{lo}, {hi}] with {n} points"));
    }
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect())
}

/// Search interval for `s_opt`. Trapping needs `s > 1` at zero temperature
/// and `s > 2` otherwise; the lower edge stays clear of that boundary.
pub fn search_bracket(t: &TemperatureSpec) -> (f64, f64) {
    match t {
        TemperatureSpec::Zero => (1.05, S_UPPER),
        _ => (2.05, S_UPPER),
    }
}

/// Closed-form optimum `s_opt` from the minimum of Γ.
pub fn digamma_prediction(cutoff: CutoffKind, t: &TemperatureSpec) -> Option<f64> {
    let x = gamma_min_location();
    match (t, cutoff) {
        (TemperatureSpec::Zero, CutoffKind::Soft) => Some(1.0 + x),
        (TemperatureSpec::HighTLimit(_), CutoffKind::Soft) => Some(2.0 + x),
        (TemperatureSpec::Zero, CutoffKind::Hard) => Some(1.0 + 2.0 * x),
        (TemperatureSpec::HighTLimit(_), CutoffKind::Hard) => Some(2.0 + 2.0 * x),
        (TemperatureSpec::Finite(_), _) => None,
    }
}

fn exponent_at(s: f64, cutoff: CutoffKind, t: &TemperatureSpec, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let p = SpectralParams::dimensionless(s, cutoff)?;
    match stationary_exponent(&p, t, cfg)? {
        Some(r) => Ok((r.value, r.error_estimate)),
        None => Err(Error::BracketFailure(format!(
            "coherences are not trapped at s = {s} for {}",
            t.label()
        ))),
    }
}

/// Ohmicity maximising the stationary coherence for a regime.
pub fn optimal_s(cutoff: CutoffKind, t: &TemperatureSpec, cfg: &QuadratureConfig) -> Result<Optimum> {
    t.validate()?;
    cfg.validate()?;
    let (lo, hi) = search_bracket(t);
    let f = |s: f64| exponent_at(s, cutoff, t, cfg).map(|(v, _)| v);

    let samples: Vec<f64> = linear_grid(lo, hi, COARSE_SAMPLES)?;
    let values: Vec<f64> = samples.iter().map(|&s| f(s)).collect::<Result<_>>()?;
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let unimodal = values[..=best].windows(2).all(|w| w[1] <= w[0])
        && values[best..].windows(2).all(|w| w[1] >= w[0]);
    if !unimodal || best == 0 || best == COARSE_SAMPLES - 1 {
        return Err(Error::BracketFailure(format!(
            "stationary exponent is not unimodal on [{lo}, {hi}] for {} {}",
            cutoff,
            t.label()
        )));
    }

    let (mut a, mut b) = (samples[best - 1], samples[best + 1]);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > S_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let s_opt = 0.5 * (a + b);
    let (exponent, exponent_error) = exponent_at(s_opt, cutoff, t, cfg)?;
    Ok(Optimum {
        s_opt,
        coherence_at_opt: (-exponent).exp(),
        exponent_error,
        digamma_reference: digamma_prediction(cutoff, t),
    })
}

fn check_axis(axis: &[f64], what: &str) -> Result<()> {
    if axis.is_empty() {
        return domain(format!("{what} grid is empty"));
    }
    if !axis.windows(2).all(|w| w[1] > w[0]) {
        return domain(format!("{what} grid must be strictly increasing"));
    }
    Ok(())
}

fn tolerance_metadata(cfg: &QuadratureConfig) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("abs_tol".into(), format!("{:e}", cfg.abs_tol));
    m.insert("rel_tol".into(), format!("{:e}", cfg.rel_tol));
    m
}

/// `s_opt` and the coherence at the optimum across temperatures.
pub fn temperature_sweep(cutoff: CutoffKind, t_tilde_grid: &[f64], cfg: &QuadratureConfig) -> Result<SweepResult> {
    check_axis(t_tilde_grid, "temperature")?;
    if let Some(bad) = t_tilde_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return domain(format!("temperature grid entries must be positive, got {bad}"));
    }
    let optima: Vec<Optimum> = t_tilde_grid
        .par_iter()
        .map(|&tt| {
            optimal_s(cutoff, &TemperatureSpec::Finite(tt), cfg).map_err(|e| annotate(e, &format!("t_tilde = {tt}")))
        })
        .collect::<Result<_>>()?;

    let suffix = cutoff.name();
    let mut metadata = tolerance_metadata(cfg);
    metadata.insert("regime".into(), "finite".into());
    metadata.insert("cutoff".into(), suffix.into());
    Ok(SweepResult {
        axis_name: "t_tilde".into(),
        axis: t_tilde_grid.to_vec(),
        columns: vec![
            Column {
                name: format!("s_opt_{suffix}"),
                values: optima.iter().map(|o| o.s_opt).collect(),
                errors: vec![S_TOL; optima.len()],
            },
            Column {
                name: format!("coherence_{suffix}"),
                values: optima.iter().map(|o| o.coherence_at_opt).collect(),
                errors: optima.iter().map(|o| o.coherence_at_opt * o.exponent_error).collect(),
            },
        ],
        metadata,
    })
}

/// Stationary coherence and `N_Q` for both cutoffs across Ohmicities, with
/// max-normalised copies of every column.
pub fn ohmicity_sweep(s_grid: &[f64], t: &TemperatureSpec, tau_max: f64, cfg: &QuadratureConfig) -> Result<SweepResult> {
    check_axis(s_grid, "ohmicity")?;
    t.validate()?;
    if let Some(bad) = s_grid.iter().find(|s| !(**s > 0.0 && **s <= S_GRID_MAX)) {
        return domain(format!("ohmicity grid entries must lie in (0, {S_GRID_MAX}], got {bad}"));
    }
    let jobs: Vec<(f64, CutoffKind)> = s_grid
        .iter()
        .flat_map(|&s| CutoffKind::ALL.into_iter().map(move |c| (s, c)))
        .collect();
    let points: Vec<[f64; 4]> = jobs
        .par_iter()
        .map(|&(s, cutoff)| -> Result<[f64; 4]> {
            let p = SpectralParams::dimensionless(s, cutoff)?;
            let (coh, coh_err) = match stationary_exponent(&p, t, cfg)? {
                Some(r) => {
                    let c = (-r.value).exp();
                    (c, c * r.error_estimate)
                }
                None => (0.0, 0.0),
            };
            let bf = nonmarkovianity_measure(&p, t, tau_max, cfg)?;
            Ok([coh, coh_err, bf.n_q, bf.n_q_error])
        })
        .collect::<Vec<_>>()
        .into_iter()
        .zip(&jobs)
        .map(|(r, &(s, c))| r.map_err(|e| annotate(e, &format!("s = {s}, cutoff = {c}"))))
        .collect::<Result<_>>()?;

    let mut columns = Vec::new();
    for (k, cutoff) in CutoffKind::ALL.into_iter().enumerate() {
        let rows: Vec<&[f64; 4]> = points.iter().skip(k).step_by(2).collect();
        columns.push(Column {
            name: format!("coherence_{}", cutoff.name()),
            values: rows.iter().map(|r| r[0]).collect(),
            errors: rows.iter().map(|r| r[1]).collect(),
        });
        columns.push(Column {
            name: format!("n_q_{}", cutoff.name()),
            values: rows.iter().map(|r| r[2]).collect(),
            errors: rows.iter().map(|r| r[3]).collect(),
        });
    }
    let mut metadata = tolerance_metadata(cfg);
    metadata.insert("regime".into(), t.label());
    metadata.insert("cutoff".into(), "soft,hard".into());
    metadata.insert("tau_max".into(), tau_max.to_string());
    let mut sweep = SweepResult {
        axis_name: "s".into(),
        axis: s_grid.to_vec(),
        columns,
        metadata,
    };
    sweep.add_normalized(&["coherence_soft", "coherence_hard", "n_q_soft", "n_q_hard"]);
    Ok(sweep)
}

fn annotate(e: Error, at: &str) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("{m} (at {at})")),
        Error::Numerical(m) => Error::Numerical(format!("{m} (at {at})")),
        Error::BracketFailure(m) => Error::BracketFailure(format!("{m} (at {at})")),
        Error::NonConvergent { panels, estimate, tolerance } => Error::Numerical(format!(
            "quadrature did not converge after {panels} panels, estimate {estimate:e} vs tolerance {tolerance:e} (at {at})"
        )),
        Error::NotIntegrable => Error::Numerical(format!("integrand is not integrable (at {at})")),
    }
}
