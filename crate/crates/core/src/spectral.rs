//! Ohmic-family spectral densities and the temperature-dressed weight
//! `g(x, T̃) = J(x) coth(x/T̃) / x²`.
//!
//! Everything here works in the dimensionless frequency `x = ω/ω_c`, so the
//! spectral density reduces to `J(x) = x^s f(x)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// High-frequency cutoff shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    /// `f(x) = e^{-x}`
    Soft,
    /// `f(x) = e^{-x²}`
    Hard,
}

impl CutoffKind {
    pub const ALL: [CutoffKind; 2] = [CutoffKind::Soft, CutoffKind::Hard];

    /// Evaluates the cutoff function at `x ≥ 0`.
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            CutoffKind::Soft => (-x).exp(),
            CutoffKind::Hard => (-x * x).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CutoffKind::Soft => "soft",
            CutoffKind::Hard => "hard",
        }
    }
}

impl fmt::Display for CutoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CutoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soft" => Ok(CutoffKind::Soft),
            "hard" => Ok(CutoffKind::Hard),
            other => domain(format!("unknown cutoff kind '{other}' (expected soft or hard)")),
        }
    }
}

/// Parameters of the spectral density `J(ω) = ω^s / ω_c^{s-1} f(ω, ω_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    /// Ohmicity exponent.
    pub s: f64,
    /// Cutoff frequency. Only used to convert user-facing times.
    pub omega_c: f64,
    pub cutoff: CutoffKind,
}

impl SpectralParams {
    pub fn new(s: f64, omega_c: f64, cutoff: CutoffKind) -> Result<Self> {
        let p = SpectralParams { s, omega_c, cutoff };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `ω_c = 1`.
    pub fn dimensionless(s: f64, cutoff: CutoffKind) -> Result<Self> {
        Self::new(s, 1.0, cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.s > 0.0) {
            return domain(format!("Ohmicity s must be positive and finite, got {}", self.s));
        }
        if !(self.omega_c.is_finite() && self.omega_c > 0.0) {
            return domain(format!(
                "cutoff frequency must be positive and finite, got {}",
                self.omega_c
            ));
        }
        Ok(())
    }

    /// Returns a copy with a different Ohmicity.
    pub fn with_s(&self, s: f64) -> Self {
        SpectralParams { s, ..*self }
    }
}

/// Reservoir temperature regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", content = "t_tilde", rename_all = "snake_case")]
pub enum TemperatureSpec {
    /// `coth → 1`.
    Zero,
    /// Full `coth(x/T̃)` with `T̃ = 2 k_B T / ω_c`.
    Finite(f64),
    /// `coth(x/T̃) → T̃/x`.
    HighTLimit(f64),
}

impl TemperatureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TemperatureSpec::Zero => Ok(()),
            TemperatureSpec::Finite(t) | TemperatureSpec::HighTLimit(t) => {
                if t.is_finite() && t > 0.0 {
                    Ok(())
                } else {
                    domain(format!("dimensionless temperature must be positive, got {t}"))
                }
            }
        }
    }

    /// `T̃`, or `None` at zero temperature.
    pub fn t_tilde(&self) -> Option<f64> {
        match *self {
            TemperatureSpec::Zero => None,
            TemperatureSpec::Finite(t) | TemperatureSpec::HighTLimit(t) => Some(t),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            TemperatureSpec::Zero => "zero".to_string(),
            TemperatureSpec::Finite(t) => format!("finite(t_tilde={t})"),
            TemperatureSpec::HighTLimit(t) => format!("high(t_tilde={t})"),
        }
    }
}

/// Low-frequency behaviour of `x·g(x, T̃)` as `x → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OriginClass {
    Diverges,
    FiniteNonzero,
    Vanishes,
}

/// Outcome of [`convexity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convexity {
    Convex,
    NonConvex,
}

/// `coth(x/T̃)` guarded against overflow and cancellation.
#[inline]
pub fn thermal_coth(x: f64, t_tilde: f64) -> f64 {
    let y = x / t_tilde;
    if y > 30.0 {
        1.0
    } else if y < 1e-4 {
        1.0 / y + y / 3.0
    } else {
        1.0 / y.tanh()
    }
}

/// `J(x) = x^s f(x)` for `x ≥ 0`.
pub fn spectral_density(p: &SpectralParams, x: f64) -> Result<f64> {
    p.validate()?;
    if !(x >= 0.0) {
        return domain(format!("frequency must be non-negative, got {x}"));
    }
    Ok(x.powf(p.s) * p.cutoff.eval(x))
}

/// `g(x, T̃)` without argument checks. Used by the integrand closures.
#[inline]
pub(crate) fn g_value(p: &SpectralParams, t: &TemperatureSpec, x: f64) -> f64 {
    let zero = x.powf(p.s - 2.0) * p.cutoff.eval(x);
    match *t {
        TemperatureSpec::Zero => zero,
        TemperatureSpec::Finite(tt) => zero * thermal_coth(x, tt),
        TemperatureSpec::HighTLimit(tt) => tt * zero / x,
    }
}

/// Thermal weight `g(x, T̃)` for `x > 0`.
pub fn g_function(p: &SpectralParams, t: &TemperatureSpec, x: f64) -> Result<f64> {
    p.validate()?;
    t.validate()?;
    if !(x > 0.0) {
        return domain(format!("g is evaluated only for x > 0, got {x}"));
    }
    Ok(g_value(p, t, x))
}

/// Classifies the `x → 0` limit of `x·g(x, T̃)`.
///
/// The cutoff never matters here since `f(0) = 1`. Boundary exponents are
/// compared exactly.
pub fn origin_class(p: &SpectralParams, t: &TemperatureSpec) -> OriginClass {
    let critical = match t {
        TemperatureSpec::Zero => 1.0,
        TemperatureSpec::Finite(_) | TemperatureSpec::HighTLimit(_) => 2.0,
    };
    if p.s < critical {
        OriginClass::Diverges
    } else if p.s == critical {
        OriginClass::FiniteNonzero
    } else {
        OriginClass::Vanishes
    }
}

/// Smallest frequency sampled by [`convexity_check`].
pub const CONVEXITY_X_FLOOR: f64 = 1e-4;
pub const CONVEXITY_DEFAULT_X_MAX: f64 = 20.0;
pub const CONVEXITY_DEFAULT_POINTS: usize = 2048;

/// Detects a change of sign of `g''` on a log-spaced grid over
/// `[CONVEXITY_X_FLOOR, x_max]`.
///
/// A sample only counts when `|g''|` is above `10³ ε` times the local
/// finite-difference scale `max|g| / (h₋ h₊)`.
pub fn convexity_check(
    p: &SpectralParams,
    t: &TemperatureSpec,
    x_max: f64,
    n: usize,
) -> Result<Convexity> {
    p.validate()?;
    t.validate()?;
    if !(x_max > CONVEXITY_X_FLOOR) {
        return domain(format!("x_max must exceed {CONVEXITY_X_FLOOR}, got {x_max}"));
    }
    if n < 64 {
        return domain(format!("convexity grid needs at least 64 points, got {n}"));
    }

    let ratio = (x_max / CONVEXITY_X_FLOOR).ln() / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| CONVEXITY_X_FLOOR * (ratio * i as f64).exp())
        .collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g_value(p, t, x)).collect();
    if let Some(i) = gs.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!(
            "g is not finite at x = {:e}",
            xs[i]
        )));
    }

    let floor = 1e3 * f64::EPSILON;
    let mut seen_pos = false;
    let mut seen_neg = false;
    for i in 1..n - 1 {
        let hm = xs[i] - xs[i - 1];
        let hp = xs[i + 1] - xs[i];
        let second = 2.0 * ((gs[i + 1] - gs[i]) / hp - (gs[i] - gs[i - 1]) / hm) / (hp + hm);
        let scale = gs[i - 1].abs().max(gs[i].abs()).max(gs[i + 1].abs()) / (hm * hp);
        if second.abs() <= floor * scale {
            continue;
        }
        if second > 0.0 {
            seen_pos = true;
        } else {
            seen_neg = true;
        }
        if seen_pos && seen_neg {
            return Ok(Convexity::NonConvex);
        }
    }
    Ok(Convexity::Convex)
}
