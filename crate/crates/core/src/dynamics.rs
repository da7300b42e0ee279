//! Decoherence factor, dephasing rate and stationary coherences.
//!
//! ```text
//! Λ(τ) = 2 ∫₀^∞ g(x, T̃) [1 - cos(xτ)] dx
//! γ(τ) = dΛ/dτ = 2 ∫₀^∞ x g(x, T̃) sin(xτ) dx
//! ```
//!
//! Off-diagonal density-matrix elements evolve as `ρ₀₁(τ) = e^{-Λ(τ)} ρ₀₁(0)`;
//! populations are untouched.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::{
    integrate_oscillatory, integrate_smooth, IntegralResult, Oscillation, QuadratureConfig,
};
use crate::special::gamma;
use crate::spectral::{g_value, origin_class, CutoffKind, OriginClass, SpectralParams, TemperatureSpec};

/// Ordered dimensionless times starting at `τ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    tau: Vec<f64>,
}

impl TimeGrid {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return domain("time grid is empty");
        }
        if tau[0] != 0.0 {
            return domain(format!("time grid must start at 0, got {}", tau[0]));
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return domain("time grid contains non-finite entries");
        }
        if tau.windows(2).any(|w| w[1] <= w[0]) {
            return domain("time grid must be strictly increasing");
        }
        Ok(TimeGrid { tau })
    }

    /// `points` equally spaced times on `[0, tau_max]`.
    pub fn uniform(tau_max: f64, points: usize) -> Result<Self> {
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return domain(format!("tau_max must be positive, got {tau_max}"));
        }
        if points < 2 {
            return domain(format!("a uniform grid needs at least 2 points, got {points}"));
        }
        let step = tau_max / (points - 1) as f64;
        let mut tau: Vec<f64> = (0..points).map(|i| i as f64 * step).collect();
        tau[points - 1] = tau_max;
        Self::new(tau)
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// `Λ` and `γ` sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingTrace {
    pub grid: TimeGrid,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda_error: Vec<f64>,
    pub gamma_error: Vec<f64>,
}

/// Long-time coherence relative to its initial value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StationaryCoherence {
    Trapped(f64),
    Vanishing,
}

impl StationaryCoherence {
    /// Trapped value, or 0 when coherences are lost.
    pub fn value(&self) -> f64 {
        match *self {
            StationaryCoherence::Trapped(v) => v,
            StationaryCoherence::Vanishing => 0.0,
        }
    }
}

/// Upper integration limit for an integrand `x^power f(x)·(thermal factor)`
/// such that the neglected tail is below a tenth of `abs_tol`.
pub fn model_tail_cut(p: &SpectralParams, t: &TemperatureSpec, power: f64, cfg: &QuadratureConfig) -> f64 {
    let thermal = |x: f64| match *t {
        TemperatureSpec::Zero => 1.0,
        TemperatureSpec::Finite(tt) => 1.0 + tt / x,
        TemperatureSpec::HighTLimit(tt) => tt / x,
    };
    // ∫_X^∞ x^q e^{-x} ≤ X^q e^{-X} / (1 - q/X) and
    // ∫_X^∞ x^q e^{-x²} ≤ X^q e^{-X²} / (2X - q/X), valid for large enough X.
    let bound = |x: f64| {
        let q = power.max(0.0);
        let len = match p.cutoff {
            CutoffKind::Soft if x > q + 1.0 => 1.0 / (1.0 - q / x),
            CutoffKind::Hard if 2.0 * x * x > q + 1.0 => 1.0 / (2.0 * x - q / x),
            _ => f64::INFINITY,
        };
        2.0 * thermal(x) * x.powf(power) * p.cutoff.eval(x) * len
    };
    let mut x = cfg.tail_cut_for(p.cutoff);
    while bound(x) > 0.1 * cfg.abs_tol {
        x *= 1.05;
    }
    x
}

fn with_tail(p: &SpectralParams, t: &TemperatureSpec, power: f64, cfg: &QuadratureConfig) -> QuadratureConfig {
    match cfg.tail_cut {
        Some(_) => *cfg,
        None => QuadratureConfig {
            tail_cut: Some(model_tail_cut(p, t, power, cfg)),
            ..*cfg
        },
    }
}

fn check_inputs(p: &SpectralParams, t: &TemperatureSpec, tau: f64, cfg: &QuadratureConfig) -> Result<()> {
    p.validate()?;
    t.validate()?;
    cfg.validate()?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return domain(format!("time must be non-negative and finite, got {tau}"));
    }
    Ok(())
}

/// `Λ(τ)` with its quadrature error estimate.
pub fn dephasing_factor_detailed(
    p: &SpectralParams,
    t: &TemperatureSpec,
    tau: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_inputs(p, t, tau, cfg)?;
    let cfg = with_tail(p, t, p.s - 2.0, cfg);
    let (p, t) = (*p, *t);
    let r = integrate_oscillatory(move |x| g_value(&p, &t, x), Oscillation::CosComplement(tau), &cfg)?;
    Ok(IntegralResult {
        value: (2.0 * r.value).max(0.0),
        error_estimate: 2.0 * r.error_estimate,
        panels_used: r.panels_used,
    })
}

/// Decoherence factor `Λ(τ)`.
pub fn dephasing_factor(p: &SpectralParams, t: &TemperatureSpec, tau: f64, cfg: &QuadratureConfig) -> Result<f64> {
    dephasing_factor_detailed(p, t, tau, cfg).map(|r| r.value)
}

/// `γ(τ)` with its quadrature error estimate.
pub fn dephasing_rate_detailed(
    p: &SpectralParams,
    t: &TemperatureSpec,
    tau: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_inputs(p, t, tau, cfg)?;
    let cfg = with_tail(p, t, p.s - 1.0, cfg);
    let (p, t) = (*p, *t);
    let r = integrate_oscillatory(move |x| x * g_value(&p, &t, x), Oscillation::Sin(tau), &cfg)?;
    Ok(IntegralResult {
        value: 2.0 * r.value,
        error_estimate: 2.0 * r.error_estimate,
        panels_used: r.panels_used,
    })
}

/// Dephasing rate `γ(τ) = dΛ/dτ`. Negative values mark recoherence.
pub fn dephasing_rate(p: &SpectralParams, t: &TemperatureSpec, tau: f64, cfg: &QuadratureConfig) -> Result<f64> {
    dephasing_rate_detailed(p, t, tau, cfg).map(|r| r.value)
}

/// Evaluates `Λ` and `γ` at every grid point. Points may be computed in
/// parallel; the output follows grid order and fails if any point fails.
pub fn compute_trace(
    p: &SpectralParams,
    t: &TemperatureSpec,
    grid: &TimeGrid,
    cfg: &QuadratureConfig,
) -> Result<DephasingTrace> {
    p.validate()?;
    t.validate()?;
    cfg.validate()?;
    let points: Vec<(IntegralResult, IntegralResult)> = grid
        .tau()
        .par_iter()
        .map(|&tau| {
            let lambda = dephasing_factor_detailed(p, t, tau, cfg)?;
            let gamma = dephasing_rate_detailed(p, t, tau, cfg)?;
            Ok((lambda, gamma))
        })
        .collect::<Result<_>>()?;
    Ok(DephasingTrace {
        grid: grid.clone(),
        lambda: points.iter().map(|(l, _)| l.value).collect(),
        gamma: points.iter().map(|(_, g)| g.value).collect(),
        lambda_error: points.iter().map(|(l, _)| l.error_estimate).collect(),
        gamma_error: points.iter().map(|(_, g)| g.error_estimate).collect(),
    })
}

/// `|ρ₀₁(τ)|` along a trace, given `|ρ₀₁(0)| ∈ [0, 1/2]`.
pub fn coherence_evolution(initial_offdiag_magnitude: f64, trace: &DephasingTrace) -> Result<Vec<f64>> {
    if !(0.0..=0.5).contains(&initial_offdiag_magnitude) {
        return domain(format!(
            "off-diagonal magnitude of a qubit state must lie in [0, 0.5], got {initial_offdiag_magnitude}"
        ));
    }
    Ok(trace
        .lambda
        .iter()
        .map(|l| initial_offdiag_magnitude * (-l).exp())
        .collect())
}

/// Closed form of `Λ(∞)` where one exists (zero temperature and the
/// high-temperature limit). Assumes the trapping condition holds.
pub fn closed_form_stationary_exponent(p: &SpectralParams, t: &TemperatureSpec) -> Option<f64> {
    let s = p.s;
    match (*t, p.cutoff) {
        (TemperatureSpec::Zero, CutoffKind::Soft) => Some(2.0 * gamma(s - 1.0)),
        (TemperatureSpec::Zero, CutoffKind::Hard) => Some(gamma(0.5 * (s - 1.0))),
        (TemperatureSpec::HighTLimit(tt), CutoffKind::Soft) => Some(2.0 * tt * gamma(s - 2.0)),
        (TemperatureSpec::HighTLimit(tt), CutoffKind::Hard) => Some(tt * gamma(0.5 * s - 1.0)),
        (TemperatureSpec::Finite(_), _) => None,
    }
}

/// `Λ(∞)`, or `None` when coherences are not trapped.
pub fn stationary_exponent(
    p: &SpectralParams,
    t: &TemperatureSpec,
    cfg: &QuadratureConfig,
) -> Result<Option<IntegralResult>> {
    p.validate()?;
    t.validate()?;
    cfg.validate()?;
    if origin_class(p, t) != OriginClass::Vanishes {
        return Ok(None);
    }
    if let Some(v) = closed_form_stationary_exponent(p, t) {
        return Ok(Some(IntegralResult {
            value: v,
            error_estimate: 0.0,
            panels_used: 0,
        }));
    }
    let cfg = with_tail(p, t, p.s - 2.0, cfg);
    let (pp, tt) = (*p, *t);
    let r = integrate_smooth(move |x| g_value(&pp, &tt, x), &cfg)?;
    Ok(Some(IntegralResult {
        value: 2.0 * r.value,
        error_estimate: 2.0 * r.error_estimate,
        panels_used: r.panels_used,
    }))
}

/// Stationary coherence `ρ̃₀₁(∞) = e^{-Λ(∞)}`.
pub fn stationary_coherence(
    p: &SpectralParams,
    t: &TemperatureSpec,
    cfg: &QuadratureConfig,
) -> Result<StationaryCoherence> {
    Ok(match stationary_exponent(p, t, cfg)? {
        Some(r) => StationaryCoherence::Trapped((-r.value).exp()),
        None => StationaryCoherence::Vanishing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn params(s: f64, c: CutoffKind) -> SpectralParams {
        SpectralParams::dimensionless(s, c).unwrap()
    }

    /// Brute-force trapezoid rule on a fine uniform grid.
    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = 0.5 * (f(a) + f(b));
        for i in 1..n {
            acc += f(a + i as f64 * h);
        }
        acc * h
    }

    /// Soft cutoff, zero temperature, via `∫ x^{a-1} e^{-x} e^{ixτ} = Γ(a)/(1-iτ)^a`.
    fn soft_zero_lambda(s: f64, tau: f64) -> f64 {
        let a = s - 1.0;
        2.0 * statrs::function::gamma::gamma(a)
            * (1.0 - (a * tau.atan()).cos() / (1.0 + tau * tau).powf(0.5 * a))
    }

    fn soft_zero_gamma(s: f64, tau: f64) -> f64 {
        2.0 * statrs::function::gamma::gamma(s) * (s * tau.atan()).sin() / (1.0 + tau * tau).powf(0.5 * s)
    }

    #[test]
    fn ohmic_soft_oracle_confirms_log_form() {
        // 2∫ e^{-x}(1 - cos xτ)/x dx on a fine grid versus ln(1 + τ²).
        let tau = 1.0;
        let f = |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                let h = (0.5 * x * tau).sin();
                2.0 * (-x).exp() * 2.0 * h * h / x
            }
        };
        let brute = trapezoid(f, 0.0, 45.0, 2_000_000);
        assert_relative_eq!(brute, 2f64.ln(), max_relative = 1e-9);
    }

    #[test]
    fn factor_examples() {
        let p = params(1.0, CutoffKind::Soft);
        let z = TemperatureSpec::Zero;
        assert_eq!(dephasing_factor(&p, &z, 0.0, &cfg()).unwrap(), 0.0);
        assert_relative_eq!(dephasing_factor(&p, &z, 1.0, &cfg()).unwrap(), 2f64.ln(), max_relative = 1e-8);
        let p3 = params(3.0, CutoffKind::Soft);
        assert_relative_eq!(dephasing_factor(&p3, &z, 1e3, &cfg()).unwrap(), 2.0, max_relative = 1e-5);
    }

    #[test]
    fn rate_examples() {
        let z = TemperatureSpec::Zero;
        let p = params(1.0, CutoffKind::Soft);
        assert_eq!(dephasing_rate(&p, &z, 0.0, &cfg()).unwrap(), 0.0);
        // γ = dΛ/dτ = 2τ/(1+τ²)
        assert_relative_eq!(dephasing_rate(&p, &z, 1.0, &cfg()).unwrap(), 1.0, max_relative = 1e-8);
        let p3 = params(3.0, CutoffKind::Soft);
        assert!(dephasing_rate(&p3, &z, 3.0, &cfg()).unwrap() < 0.0);
    }

    #[test]
    fn negative_time_rejected() {
        let p = params(1.0, CutoffKind::Soft);
        assert!(dephasing_factor(&p, &TemperatureSpec::Zero, -1.0, &cfg()).is_err());
        assert!(dephasing_rate(&p, &TemperatureSpec::Zero, f64::NAN, &cfg()).is_err());
    }

    #[test]
    fn soft_zero_closed_forms() {
        let z = TemperatureSpec::Zero;
        for &s in &[0.5, 1.0, 1.5, 2.5, 3.0, 4.5, 7.0] {
            let p = params(s, CutoffKind::Soft);
            for &tau in &[0.2, 1.0, 3.3, 17.0, 250.0] {
                let l = dephasing_factor(&p, &z, tau, &cfg()).unwrap();
                let g = dephasing_rate(&p, &z, tau, &cfg()).unwrap();
                if s != 1.0 {
                    assert_relative_eq!(l, soft_zero_lambda(s, tau), max_relative = 1e-7, epsilon = 1e-10);
                }
                assert_relative_eq!(g, soft_zero_gamma(s, tau), max_relative = 1e-7, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn trace_examples() {
        let p = params(1.0, CutoffKind::Soft);
        let z = TemperatureSpec::Zero;
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let tr = compute_trace(&p, &z, &grid, &cfg()).unwrap();
        assert_eq!(tr.lambda[0], 0.0);
        assert_eq!(tr.gamma[0], 0.0);
        assert_relative_eq!(tr.lambda[1], 2f64.ln(), max_relative = 1e-8);
        assert_relative_eq!(tr.gamma[1], 1.0, max_relative = 1e-8);

        let single = TimeGrid::new(vec![0.0]).unwrap();
        let tr = compute_trace(&p, &z, &single, &cfg()).unwrap();
        assert_eq!((tr.lambda.as_slice(), tr.gamma.as_slice()), (&[0.0][..], &[0.0][..]));

        let p15 = params(1.5, CutoffKind::Soft);
        let grid = TimeGrid::uniform(60.0, 301).unwrap();
        let tr = compute_trace(&p15, &z, &grid, &cfg()).unwrap();
        for (g, e) in tr.gamma.iter().zip(&tr.gamma_error) {
            assert!(*g >= -e);
        }
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.5, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::uniform(10.0, 1).is_err());
        let g = TimeGrid::uniform(10.0, 11).unwrap();
        assert_eq!(g.tau()[10], 10.0);
    }

    #[test]
    fn coherence_evolution_examples() {
        let trace = DephasingTrace {
            grid: TimeGrid::new(vec![0.0, 1.0]).unwrap(),
            lambda: vec![0.0, 2f64.ln()],
            gamma: vec![0.0, 1.0],
            lambda_error: vec![0.0; 2],
            gamma_error: vec![0.0; 2],
        };
        let c = coherence_evolution(0.5, &trace).unwrap();
        assert_eq!(c[0], 0.5);
        assert_relative_eq!(c[1], 0.25, max_relative = 1e-15);
        assert!(coherence_evolution(0.0, &trace).unwrap().iter().all(|&v| v == 0.0));
        assert!(coherence_evolution(0.6, &trace).is_err());
        assert!(coherence_evolution(-0.1, &trace).is_err());
    }

    #[test]
    fn stationary_examples() {
        let z = TemperatureSpec::Zero;
        let sc = |s, c, t: &TemperatureSpec| stationary_coherence(&params(s, c), t, &cfg()).unwrap();
        assert_relative_eq!(sc(2.0, CutoffKind::Soft, &z).value(), (-2.0f64).exp(), max_relative = 1e-13);
        match sc(3.0, CutoffKind::Hard, &z) {
            StationaryCoherence::Trapped(v) => assert_relative_eq!(v, (-1f64).exp(), max_relative = 1e-13),
            other => panic!("expected trapping, got {other:?}"),
        }
        assert_eq!(sc(1.0, CutoffKind::Soft, &z), StationaryCoherence::Vanishing);
        match sc(3.0, CutoffKind::Soft, &TemperatureSpec::HighTLimit(1.0)) {
            StationaryCoherence::Trapped(v) => assert_relative_eq!(v, (-2f64).exp(), max_relative = 1e-13),
            other => panic!("expected trapping, got {other:?}"),
        }
        assert_eq!(
            sc(1.8, CutoffKind::Soft, &TemperatureSpec::Finite(1.0)),
            StationaryCoherence::Vanishing
        );
        assert_eq!(
            sc(2.0, CutoffKind::Hard, &TemperatureSpec::Finite(1.0)),
            StationaryCoherence::Vanishing
        );
    }

    /// Hurwitz zeta by direct summation plus an Euler-Maclaurin tail.
    fn hurwitz_zeta(s: f64, a: f64) -> f64 {
        let n = 200;
        let mut sum = 0.0;
        for k in 0..n {
            sum += (k as f64 + a).powf(-s);
        }
        let x = n as f64 + a;
        sum + x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s) + s * x.powf(-s - 1.0) / 12.0
            - s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0) / 720.0
    }

    #[test]
    fn finite_temperature_soft_stationary_matches_zeta_series() {
        // coth = 1 + 2Σ e^{-2nx/T̃} gives Λ∞ = 2Γ(s-1)[2(T̃/2)^{s-1} ζ(s-1, T̃/2) - 1].
        for &(s, tt) in &[(2.5, 0.1), (3.0, 1.0), (3.46, 5.0), (4.5, 20.0)] {
            let got = stationary_exponent(&params(s, CutoffKind::Soft), &TemperatureSpec::Finite(tt), &cfg())
                .unwrap()
                .unwrap()
                .value;
            let a = 0.5 * tt;
            let expected = 2.0
                * statrs::function::gamma::gamma(s - 1.0)
                * (2.0 * a.powf(s - 1.0) * hurwitz_zeta(s - 1.0, a) - 1.0);
            assert_relative_eq!(got, expected, max_relative = 1e-8);
        }
    }

    #[test]
    fn finite_temperature_approaches_high_t_limit() {
        for c in CutoffKind::ALL {
            let p = params(3.5, c);
            let finite = stationary_exponent(&p, &TemperatureSpec::Finite(50.0), &cfg()).unwrap().unwrap().value;
            let limit = closed_form_stationary_exponent(&p, &TemperatureSpec::HighTLimit(50.0)).unwrap();
            assert!((finite / limit - 1.0).abs() < 1e-3, "{c}: {finite} vs {limit}");
        }
    }

    #[test]
    fn plateau_matches_closed_form() {
        let z = TemperatureSpec::Zero;
        for c in CutoffKind::ALL {
            for &s in &[2.0, 2.5, 3.0, 5.0] {
                let p = params(s, c);
                let inf = closed_form_stationary_exponent(&p, &z).unwrap();
                for &tau in &[1e3, 1e4] {
                    let l = dephasing_factor(&p, &z, tau, &cfg()).unwrap();
                    assert_relative_eq!(l, inf, max_relative = 1e-4);
                }
            }
            let hi = TemperatureSpec::HighTLimit(1.0);
            let p = params(3.5, c);
            let inf = closed_form_stationary_exponent(&p, &hi).unwrap();
            for &tau in &[1e3, 1e4] {
                assert_relative_eq!(dephasing_factor(&p, &hi, tau, &cfg()).unwrap(), inf, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn unbounded_growth_without_trapping() {
        for c in CutoffKind::ALL {
            for &s in &[0.5, 1.0] {
                let p = params(s, c);
                let l3 = dephasing_factor(&p, &TemperatureSpec::Zero, 1e3, &cfg()).unwrap();
                let l4 = dephasing_factor(&p, &TemperatureSpec::Zero, 1e4, &cfg()).unwrap();
                assert!(l4 > l3 + 0.1, "{c} s={s}: {l3} {l4}");
            }
        }
    }

    #[test]
    fn derivative_consistency_on_dense_grid() {
        let z = TemperatureSpec::Zero;
        for c in CutoffKind::ALL {
            let p = params(3.0, c);
            let h = 1e-3;
            let mut max_err: f64 = 0.0;
            let mut max_gamma: f64 = 0.0;
            let mut tau = 0.05;
            while tau < 12.0 {
                let fd = (dephasing_factor(&p, &z, tau + h, &cfg()).unwrap()
                    - dephasing_factor(&p, &z, tau - h, &cfg()).unwrap())
                    / (2.0 * h);
                let g = dephasing_rate(&p, &z, tau, &cfg()).unwrap();
                max_err = max_err.max((fd - g).abs());
                max_gamma = max_gamma.max(g.abs());
                tau += 0.173;
            }
            assert!(max_err / max_gamma <= 1e-4, "{c}: {}", max_err / max_gamma);
        }
    }

    #[test]
    fn markovian_sign_property() {
        let z = TemperatureSpec::Zero;
        for c in CutoffKind::ALL {
            for &s in &[0.6, 1.0, 1.5, 2.0] {
                let p = params(s, c);
                let grid = TimeGrid::uniform(100.0, 401).unwrap();
                let tr = compute_trace(&p, &z, &grid, &cfg()).unwrap();
                for (g, e) in tr.gamma.iter().zip(&tr.gamma_error) {
                    assert!(*g >= -e, "{c} s={s}: γ = {g}, err = {e}");
                }
            }
        }
        let p = params(3.0, CutoffKind::Soft);
        let grid = TimeGrid::uniform(20.0, 401).unwrap();
        let tr = compute_trace(&p, &z, &grid, &cfg()).unwrap();
        assert!(tr.gamma.iter().cloned().fold(f64::INFINITY, f64::min) < 0.0);
    }

    #[test]
    fn hard_cutoff_traps_more_coherence_in_non_markovian_region() {
        let z = TemperatureSpec::Zero;
        let mut s = 2.0;
        while s <= 8.0 {
            let soft = stationary_coherence(&params(s, CutoffKind::Soft), &z, &cfg()).unwrap().value();
            let hard = stationary_coherence(&params(s, CutoffKind::Hard), &z, &cfg()).unwrap().value();
            assert!(hard >= soft, "s={s}");
            s += 0.25;
        }
    }

    #[test]
    fn temperature_monotonicity() {
        for c in CutoffKind::ALL {
            for &s in &[0.7, 1.5, 3.0] {
                let p = params(s, c);
                for &tau in &[0.5, 4.0, 40.0] {
                    let temps = [
                        TemperatureSpec::Zero,
                        TemperatureSpec::Finite(0.1),
                        TemperatureSpec::Finite(1.0),
                        TemperatureSpec::Finite(10.0),
                    ];
                    let values: Vec<f64> =
                        temps.iter().map(|t| dephasing_factor(&p, t, tau, &cfg()).unwrap()).collect();
                    for w in values.windows(2) {
                        assert!(w[1] >= w[0] - 1e-9, "{c} s={s} τ={tau}: {values:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_trace() {
        let p = params(2.7, CutoffKind::Hard);
        let t = TemperatureSpec::Finite(0.8);
        let grid = TimeGrid::uniform(30.0, 64).unwrap();
        let a = compute_trace(&p, &t, &grid, &cfg()).unwrap();
        let b = compute_trace(&p, &t, &grid, &cfg()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lambda_nonnegative(s in 0.2f64..6.0, tau in 0.0f64..300.0, hard in any::<bool>(), tt in 0.05f64..5.0) {
            let c = if hard { CutoffKind::Hard } else { CutoffKind::Soft };
            let p = params(s, c);
            for t in [TemperatureSpec::Zero, TemperatureSpec::Finite(tt), TemperatureSpec::HighTLimit(tt)] {
                prop_assert!(dephasing_factor(&p, &t, tau, &cfg()).unwrap() >= 0.0);
            }
        }
    }
}
