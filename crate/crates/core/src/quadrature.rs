//! Semi-infinite quadrature for smooth-envelope and oscillatory integrands.
//!
//! Panels are integrated with the 7/15-point Gauss-Kronrod pair; the
//! difference of the two rules (rescaled as in QUADPACK) is the panel error
//! estimate. Integrable power-law singularities at the origin are handled by
//! geometrically graded panels whose innermost remainder is extrapolated as a
//! geometric series. Oscillatory integrands are split at the zeros of the
//! trigonometric factor and the resulting alternating series is summed with
//! the Euler transformation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::spectral::CutoffKind;

/// Ratio between consecutive graded panels next to the origin.
pub const GRADING_RATIO: f64 = 0.25;
/// Number of graded panels before the remainder is extrapolated.
const GRADED_LEVELS: usize = 20;
/// Panels summed directly before Euler acceleration kicks in.
pub const EULER_START: usize = 8;
/// Consecutive small Euler increments required to declare convergence.
const EULER_CONFIRM: usize = 3;

/// Tolerances and limits for the quadrature routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Upper integration limit. `None` picks a default from `abs_tol`
    /// (see [`QuadratureConfig::tail_cut_for`]).
    pub tail_cut: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_panels: 4096,
            tail_cut: None,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return domain(format!("abs_tol must be positive, got {}", self.abs_tol));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return domain(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if self.max_panels < 8 {
            return domain(format!("max_panels must be >= 8, got {}", self.max_panels));
        }
        if let Some(t) = self.tail_cut {
            if !(t > 0.0 && t.is_finite()) {
                return domain(format!("tail_cut must be positive, got {t}"));
            }
        }
        Ok(())
    }

    /// Point beyond which a unit-scale envelope with the given cutoff falls
    /// below `abs_tol`, with a 25% margin.
    pub fn tail_cut_for(&self, cutoff: CutoffKind) -> f64 {
        let l = (1.0 / self.abs_tol).ln().max(1.0);
        match cutoff {
            CutoffKind::Soft => 1.25 * l,
            CutoffKind::Hard => 1.25 * l.sqrt(),
        }
    }

    pub fn effective_tail_cut(&self) -> f64 {
        self.tail_cut
            .unwrap_or_else(|| self.tail_cut_for(CutoffKind::Soft))
    }

    /// Same configuration with both tolerances halved.
    pub fn halved(&self) -> Self {
        QuadratureConfig {
            abs_tol: 0.5 * self.abs_tol,
            rel_tol: 0.5 * self.rel_tol,
            ..*self
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
}

/// Trigonometric factor for [`integrate_oscillatory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oscillation {
    /// `1 - cos(xτ)`
    CosComplement(f64),
    /// `sin(xτ)`
    Sin(f64),
}

impl Oscillation {
    fn tau(&self) -> f64 {
        match *self {
            Oscillation::CosComplement(t) | Oscillation::Sin(t) => t,
        }
    }
}

// 7-point Gauss / 15-point Kronrod abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss-Kronrod panel: (Kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();

    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    segment: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

struct Adaptive {
    total: IntegralResult,
    segments: Vec<f64>,
}

/// Globally adaptive bisection over the segments defined by `breaks`.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Adaptive> {
    let n_seg = breaks.len().saturating_sub(1);
    let mut heap = BinaryHeap::with_capacity(2 * n_seg);
    let mut frozen: Vec<Panel> = Vec::new();
    for i in 0..n_seg {
        let (a, b) = (breaks[i], breaks[i + 1]);
        let (value, error) = gk15(f, a, b);
        heap.push(Panel {
            a,
            b,
            value,
            error,
            segment: i,
        });
    }
    let mut panels = n_seg;

    loop {
        let (value, error) = heap
            .iter()
            .chain(frozen.iter())
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Numerical(
                "integrand produced a non-finite value".to_string(),
            ));
        }
        let target = abs_tol.max(rel_tol * value.abs());
        let worst = heap.peek().map(|p| p.error).unwrap_or(0.0);
        if error <= target || worst == 0.0 {
            let mut segments = vec![0.0; n_seg];
            for p in heap.iter().chain(frozen.iter()) {
                segments[p.segment] += p.value;
            }
            return Ok(Adaptive {
                total: IntegralResult {
                    value,
                    error_estimate: error,
                    panels_used: panels,
                },
                segments,
            });
        }
        if panels >= max_panels {
            return Err(Error::NonConvergent {
                panels,
                estimate: error,
                tolerance: target,
            });
        }
        let worst = heap.pop().expect("heap is non-empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            frozen.push(worst);
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(f, a, b);
            heap.push(Panel {
                a,
                b,
                value,
                error,
                segment: worst.segment,
            });
        }
        panels += 1;
    }
}

/// Breakpoints `head·r^K, …, head·r, head` for the graded panels.
fn graded_breaks(head: f64) -> Vec<f64> {
    (0..=GRADED_LEVELS)
        .rev()
        .map(|k| head * GRADING_RATIO.powi(k as i32))
        .collect()
}

/// Integrates `f` over `[0, head]` followed by the segments given in `rest`
/// (`rest` must start above `head` and increase).
///
/// The graded panels next to the origin are integrated with the rest; the
/// region `[0, head·r^K]` is estimated by extrapolating the last panel
/// integrals as a geometric series, which is exact for a pure power law.
fn integrate_with_origin<F: Fn(f64) -> f64>(
    f: &F,
    head: f64,
    rest: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    let mut breaks = graded_breaks(head);
    breaks.extend(rest.iter().copied().filter(|&x| x > head));
    let run = adaptive(f, &breaks, cfg.abs_tol, cfg.rel_tol, cfg.max_panels)?;

    let inner = &run.segments;
    let i0 = inner[0];
    let i1 = inner[1];
    let i2 = inner[2];
    let (remainder, remainder_err) = if i0 == 0.0 {
        (0.0, i1.abs().min(i2.abs()) * f64::EPSILON)
    } else if i1 == 0.0 || (i0 > 0.0) != (i1 > 0.0) {
        // No clean power law; the innermost panel bounds what is left.
        (0.0, i0.abs())
    } else {
        let r = i0 / i1;
        if r >= 0.999 {
            return Err(Error::NotIntegrable);
        }
        let rem = i0 * r / (1.0 - r);
        let rem_prev = if i2 != 0.0 && (i1 > 0.0) == (i2 > 0.0) {
            let r2 = i1 / i2;
            if r2 < 0.999 {
                i0 * r2 / (1.0 - r2)
            } else {
                0.0
            }
        } else {
            0.0
        };
        (rem, (rem - rem_prev).abs())
    };

    Ok(IntegralResult {
        value: run.total.value + remainder,
        error_estimate: run.total.error_estimate + remainder_err,
        panels_used: run.total.panels_used,
    })
}

/// Breakpoints from `from` to `to` spaced by at most one unit.
fn unit_breaks(from: f64, to: f64) -> Vec<f64> {
    let n = ((to - from).ceil() as usize).max(1);
    (0..=n)
        .map(|i| if i == n { to } else { from + (to - from) * i as f64 / n as f64 })
        .collect()
}

/// `∫₀^∞ f(x) dx` for an integrand that decays beyond the tail cut.
///
/// An integrable power-law singularity `x^α`, `α > -1`, is allowed at the
/// origin; `α ≤ -1` is reported as [`Error::NotIntegrable`].
pub fn integrate_smooth<F: Fn(f64) -> f64>(
    f: F,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    let tail = cfg.effective_tail_cut();
    let head = tail.min(1.0);
    let rest = if tail > head {
        unit_breaks(head, tail)
    } else {
        Vec::new()
    };
    integrate_with_origin(&f, head, &rest, cfg)
}

/// `∫ₐᵇ f(x) dx` on a finite interval, with no special endpoint handling.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return domain(format!("invalid interval [{a}, {b}]"));
    }
    if a == b {
        return Ok(IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            panels_used: 0,
        });
    }
    Ok(adaptive(&f, &[a, b], cfg.abs_tol, cfg.rel_tol, cfg.max_panels)?.total)
}

/// Van Wijngaarden's form of the Euler transformation, fed one term at a
/// time.
#[derive(Debug, Default)]
pub(crate) struct EulerSum {
    work: Vec<f64>,
    nterm: usize,
    sum: f64,
}

impl EulerSum {
    pub(crate) fn push(&mut self, term: f64) -> f64 {
        if self.work.is_empty() {
            self.work.push(term);
            self.nterm = 1;
            self.sum = 0.5 * term;
            return self.sum;
        }
        let mut tmp = self.work[0];
        self.work[0] = term;
        for j in 0..self.nterm - 1 {
            let next = self.work[j + 1];
            self.work[j + 1] = 0.5 * (self.work[j] + tmp);
            tmp = next;
        }
        let fresh = 0.5 * (self.work[self.nterm - 1] + tmp);
        if self.work.len() <= self.nterm {
            self.work.push(fresh);
        } else {
            self.work[self.nterm] = fresh;
        }
        if fresh.abs() <= self.work[self.nterm - 1].abs() {
            self.nterm += 1;
            self.sum += 0.5 * fresh;
        } else {
            self.sum += fresh;
        }
        self.sum
    }
}

/// Sum of `∫ f` over the panels `[start + kπ/τ, start + (k+1)π/τ]`,
/// `k = 0, 1, …`, accelerated once the panel values alternate.
fn oscillatory_series<F: Fn(f64) -> f64>(
    f: &F,
    start: f64,
    tau: f64,
    tail: f64,
    cfg: &QuadratureConfig,
    scale_hint: f64,
) -> Result<IntegralResult> {
    let width = PI / tau;
    let panel_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol * 1e-2,
        rel_tol: cfg.rel_tol * 1e-2,
        ..*cfg
    };

    let mut direct: f64 = 0.0;
    let mut panel_err = 0.0;
    let mut panels_used = 0;
    let mut head_terms: Vec<f64> = Vec::with_capacity(EULER_START);
    let mut euler: Option<EulerSum> = None;
    let mut last: f64 = 0.0;
    let mut last_term: f64 = 0.0;
    let mut quiet = 0;
    let mut quiet_max: f64 = 0.0;
    let mut k = 0usize;

    loop {
        let a = start + k as f64 * width;
        if a >= tail {
            // Beyond the tail cut the envelope bound covers the remainder, so
            // the direct sum is used. A stalled acceleration is folded into
            // the error estimate unless the direct terms have already died out.
            let settled = last_term.abs() <= cfg.target(direct + scale_hint);
            let stall = if euler.is_some() && !settled { (last - direct).abs() } else { 0.0 };
            return Ok(IntegralResult {
                value: direct,
                error_estimate: panel_err + stall,
                panels_used,
            });
        }
        if k >= cfg.max_panels {
            return Err(Error::NonConvergent {
                panels: k,
                estimate: (last - direct).abs(),
                tolerance: cfg.target(last + scale_hint),
            });
        }
        let b = a + width;
        let run = adaptive(f, &[a, b], panel_cfg.abs_tol, panel_cfg.rel_tol, cfg.max_panels)?;
        let term = run.total.value;
        last_term = term;
        panel_err += run.total.error_estimate;
        panels_used += run.total.panels_used;
        k += 1;

        match euler.as_mut() {
            None => {
                direct += term;
                head_terms.push(term);
                if head_terms.len() == EULER_START {
                    let alternating = head_terms
                        .windows(2)
                        .all(|w| w[0] * w[1] < 0.0);
                    if alternating {
                        let mut acc = EulerSum::default();
                        let mut running = 0.0;
                        for &t in &head_terms {
                            running = acc.push(t);
                        }
                        last = running;
                        euler = Some(acc);
                    }
                }
            }
            Some(acc) => {
                direct += term;
                let next = acc.push(term);
                let step = (next - last).abs();
                last = next;
                if step <= 0.25 * cfg.target(next + scale_hint) {
                    quiet += 1;
                    quiet_max = quiet_max.max(step);
                    if quiet >= EULER_CONFIRM {
                        return Ok(IntegralResult {
                            value: next,
                            error_estimate: panel_err + quiet_max,
                            panels_used,
                        });
                    }
                } else {
                    quiet = 0;
                    quiet_max = 0.0;
                }
            }
        }
    }
}

/// `∫₀^∞ envelope(x)·w(xτ) dx` with `w = 1 - cos` or `w = sin`.
///
/// For `τ ≤ 1` the product is handed to [`integrate_smooth`]. For larger
/// `τ` the axis is split at the zeros of the trigonometric factor.
pub fn integrate_oscillatory<F: Fn(f64) -> f64>(
    envelope: F,
    mode: Oscillation,
    cfg: &QuadratureConfig,
) -> Result<IntegralResult> {
    cfg.validate()?;
    let tau = mode.tau();
    if !(tau >= 0.0 && tau.is_finite()) {
        return domain(format!("oscillation frequency must be >= 0, got {tau}"));
    }
    if tau == 0.0 {
        return Ok(IntegralResult {
            value: 0.0,
            error_estimate: 0.0,
            panels_used: 0,
        });
    }
    if tau <= 1.0 {
        return match mode {
            Oscillation::Sin(t) => integrate_smooth(|x| envelope(x) * (x * t).sin(), cfg),
            Oscillation::CosComplement(t) => integrate_smooth(
                |x| {
                    let h = (0.5 * x * t).sin();
                    envelope(x) * 2.0 * h * h
                },
                cfg,
            ),
        };
    }

    let tail = cfg.effective_tail_cut();
    match mode {
        Oscillation::Sin(t) => {
            let first = PI / t;
            let head = integrate_with_origin(&|x: f64| envelope(x) * (x * t).sin(), first, &[], cfg)?;
            let series = oscillatory_series(
                &|x: f64| envelope(x) * (x * t).sin(),
                first,
                t,
                tail,
                cfg,
                head.value,
            )?;
            Ok(IntegralResult {
                value: head.value + series.value,
                error_estimate: head.error_estimate + series.error_estimate,
                panels_used: head.panels_used + series.panels_used,
            })
        }
        Oscillation::CosComplement(t) => {
            // ∫₀^{x₀} env (1 - cos) + ∫_{x₀}^∞ env - ∫_{x₀}^∞ env cos, with x₀
            // the first zero of cos(xτ).
            let x0 = 0.5 * PI / t;
            let head = integrate_with_origin(
                &|x: f64| {
                    let h = (0.5 * x * t).sin();
                    envelope(x) * 2.0 * h * h
                },
                x0,
                &[],
                cfg,
            )?;
            let mut breaks = Vec::new();
            let mut x = x0;
            while x < 1.0 && x < tail {
                breaks.push(x);
                x *= 2.0;
            }
            let tail_from = x.min(tail);
            breaks.extend(unit_breaks(tail_from, tail.max(tail_from)));
            breaks.dedup();
            let plain = if breaks.len() >= 2 {
                adaptive(&envelope, &breaks, cfg.abs_tol * 0.25, cfg.rel_tol * 0.25, cfg.max_panels)?.total
            } else {
                IntegralResult {
                    value: 0.0,
                    error_estimate: 0.0,
                    panels_used: 0,
                }
            };
            let series = oscillatory_series(
                &|x: f64| envelope(x) * (x * t).cos(),
                x0,
                t,
                tail,
                cfg,
                head.value + plain.value,
            )?;
            Ok(IntegralResult {
                value: head.value + plain.value - series.value,
                error_estimate: head.error_estimate + plain.error_estimate + series.error_estimate,
                panels_used: head.panels_used + plain.panels_used + series.panels_used,
            })
        }
    }
}
