//! Channel capacity of the dephasing channel, information back-flow
//! intervals and the capacity-based non-Markovianity measure `N_Q`.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{dephasing_factor_detailed, dephasing_rate, dephasing_rate_detailed};
use crate::error::{domain, Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::spectral::{CutoffKind, SpectralParams, TemperatureSpec};

/// Uniform scan points used to bracket sign changes of `γ`.
pub const SCAN_POINTS: usize = 4000;
pub const DEFAULT_TAU_MAX: f64 = 200.0;
/// Absolute time tolerance for the interval endpoints.
pub const ROOT_TOL: f64 = 1e-6;
/// Ohmicity bracket and tolerance for [`markovian_crossover`].
pub const CROSSOVER_BRACKET: (f64, f64) = (1.0, 6.0);
pub const CROSSOVER_TOL: f64 = 0.01;

/// A maximal time window on which `γ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackflowInterval {
    pub start: f64,
    pub end: f64,
    /// `γ` was still negative at the end of the scan window.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackflowReport {
    pub intervals: Vec<BackflowInterval>,
    pub n_q: f64,
    /// Propagated from the quadrature error of `Λ` at the endpoints.
    pub n_q_error: f64,
    pub truncated: bool,
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(prob: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prob) {
        return domain(format!("probability must lie in [0, 1], got {prob}"));
    }
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    Ok(term(prob) + term(1.0 - prob))
}

/// `Q = 1 - H₂((1 + e^{-Λ})/2)`.
///
/// Evaluated as `[(1+u)ln(1+u) + (1-u)ln(1-u)] / (2 ln 2)` with `u = e^{-Λ}`,
/// switching to its power series for small `u` so that `Q` keeps full
/// relative precision at large `Λ`.
pub fn channel_capacity(lambda_value: f64) -> Result<f64> {
    if !(lambda_value >= 0.0) {
        return domain(format!("decoherence factor must be non-negative, got {lambda_value}"));
    }
    let u = (-lambda_value).exp();
    let f = if u < 0.1 {
        // Σ_k u^{2k} / (k(2k-1))
        let u2 = u * u;
        let mut term = u2;
        let mut sum = 0.0;
        for k in 1..=12 {
            let kf = k as f64;
            sum += term / (kf * (2.0 * kf - 1.0));
            term *= u2;
        }
        sum
    } else if u >= 1.0 {
        2.0 * LN_2
    } else {
        (1.0 + u) * u.ln_1p() + (1.0 - u) * (-u).ln_1p()
    };
    Ok((f / (2.0 * LN_2)).clamp(0.0, 1.0))
}

/// `dQ/dΛ = -e^{-Λ} artanh(e^{-Λ}) / ln 2`.
pub fn capacity_slope(lambda_value: f64) -> f64 {
    let u = (-lambda_value).exp();
    -u * u.atanh() / LN_2
}

/// Threshold below which a computed `γ` counts as negative.
fn negativity_floor(error_estimate: f64, cfg: &QuadratureConfig) -> f64 {
    error_estimate.max(10.0 * cfg.abs_tol)
}

fn scan_times(tau_max: f64) -> Vec<f64> {
    (1..=SCAN_POINTS)
        .map(|i| {
            if i == SCAN_POINTS {
                tau_max
            } else {
                tau_max * i as f64 / SCAN_POINTS as f64
            }
        })
        .collect()
}

fn check_window(tau_max: f64) -> Result<()> {
    if !(tau_max > 0.0 && tau_max.is_finite()) {
        return domain(format!("tau_max must be positive, got {tau_max}"));
    }
    Ok(())
}

fn is_negative(p: &SpectralParams, t: &TemperatureSpec, tau: f64, cfg: &QuadratureConfig) -> Result<bool> {
    let r = dephasing_rate_detailed(p, t, tau, cfg)?;
    Ok(r.value < -negativity_floor(r.error_estimate, cfg))
}

/// Refines a sign change of `γ` inside `[lo, hi]`, where `γ(lo) ≥ 0` and
/// `γ(hi) < 0` (or the reverse when `falling` is false).
fn refine_root(
    p: &SpectralParams,
    t: &TemperatureSpec,
    mut lo: f64,
    mut hi: f64,
    falling: bool,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let negative = dephasing_rate(p, t, mid, cfg)? < 0.0;
        if negative == falling {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximal intervals in `(0, tau_max]` on which `γ < 0`.
///
/// `γ` is scanned on [`SCAN_POINTS`] uniform points, sign changes are
/// bisected to [`ROOT_TOL`], and an interval still open at `tau_max` is
/// closed there and flagged as truncated.
pub fn find_backflow_intervals(
    p: &SpectralParams,
    t: &TemperatureSpec,
    tau_max: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<BackflowInterval>> {
    p.validate()?;
    t.validate()?;
    cfg.validate()?;
    check_window(tau_max)?;

    let times = scan_times(tau_max);
    let negative: Vec<bool> = times
        .par_iter()
        .map(|&tau| is_negative(p, t, tau, cfg))
        .collect::<Result<_>>()?;

    let mut intervals = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev_tau = 0.0;
    for (&tau, &neg) in times.iter().zip(&negative) {
        match (open, neg) {
            (None, true) => open = Some(refine_root(p, t, prev_tau, tau, true, cfg)?),
            (Some(start), false) => {
                let end = refine_root(p, t, prev_tau, tau, false, cfg)?;
                intervals.push(BackflowInterval {
                    start,
                    end,
                    truncated: false,
                });
                open = None;
            }
            _ => {}
        }
        prev_tau = tau;
    }
    if let Some(start) = open {
        intervals.push(BackflowInterval {
            start,
            end: tau_max,
            truncated: true,
        });
    }
    Ok(intervals)
}

/// `N_Q = Σᵢ Q(bᵢ) - Q(aᵢ)` over the back-flow intervals in `(0, tau_max]`.
pub fn nonmarkovianity_measure(
    p: &SpectralParams,
    t: &TemperatureSpec,
    tau_max: f64,
    cfg: &QuadratureConfig,
) -> Result<BackflowReport> {
    let intervals = find_backflow_intervals(p, t, tau_max, cfg)?;
    let mut n_q = 0.0;
    let mut n_q_error = 0.0;
    for iv in &intervals {
        let start = dephasing_factor_detailed(p, t, iv.start, cfg)?;
        let end = dephasing_factor_detailed(p, t, iv.end, cfg)?;
        let (l_start, l_end) = (start.value.max(0.0), end.value.max(0.0));
        n_q += (channel_capacity(l_end)? - channel_capacity(l_start)?).max(0.0);
        n_q_error += capacity_slope(l_start).abs() * start.error_estimate
            + capacity_slope(l_end).abs() * end.error_estimate;
    }
    Ok(BackflowReport {
        truncated: intervals.iter().any(|iv| iv.truncated),
        intervals,
        n_q,
        n_q_error,
    })
}

/// Whether `γ` turns negative anywhere in `(0, tau_max]`. Stops at the
/// first scan block containing a negative sample.
pub fn has_backflow(
    p: &SpectralParams,
    t: &TemperatureSpec,
    tau_max: f64,
    cfg: &QuadratureConfig,
) -> Result<bool> {
    p.validate()?;
    t.validate()?;
    check_window(tau_max)?;
    let times = scan_times(tau_max);
    for block in times.chunks(250) {
        let flags: Vec<bool> = block
            .par_iter()
            .map(|&tau| is_negative(p, t, tau, cfg))
            .collect::<Result<_>>()?;
        if flags.into_iter().any(|b| b) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Ohmicity `s*` separating monotone dephasing from dynamics with
/// back-flow, found by bisection on [`CROSSOVER_BRACKET`] with the back-flow
/// predicate evaluated up to `τ = 200`.
pub fn markovian_crossover(t: &TemperatureSpec, cutoff: CutoffKind, cfg: &QuadratureConfig) -> Result<f64> {
    t.validate()?;
    cfg.validate()?;
    let predicate = |s: f64| -> Result<bool> {
        let p = SpectralParams::dimensionless(s, cutoff)?;
        has_backflow(&p, t, DEFAULT_TAU_MAX, cfg)
    };
    let (mut lo, mut hi) = CROSSOVER_BRACKET;
    let at_lo = predicate(lo)?;
    let at_hi = predicate(hi)?;
    if at_lo == at_hi {
        return Err(Error::BracketFailure(format!(
            "back-flow predicate is {at_lo} at both s = {lo} and s = {hi}"
        )));
    }
    while hi - lo > CROSSOVER_TOL {
        let mid = 0.5 * (lo + hi);
        if predicate(mid)? == at_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
