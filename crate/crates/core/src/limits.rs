//! Behaviour of the iterates as `s → ∞`: limit tails, the Gamma stop-loss
//! approximation, Weibull bounds and convergence reports.

use std::fmt;

use rayon::prelude::*;

use crate::csv::{format_number, CsvRecord};
use crate::dist::{DistributionSpec, Family};
use crate::error::{check_x, Error, Result};
use crate::iterate::{iterated_tail, stop_loss, IterationIndex};
use crate::special::{ln_factorial, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitKind {
    Exponential,
    DegenerateZero,
    DegenerateOne,
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitKind::Exponential => "exponential",
            LimitKind::DegenerateZero => "degenerate_zero",
            LimitKind::DegenerateOne => "degenerate_one",
        })
    }
}

pub fn limit_kind(spec: &DistributionSpec) -> LimitKind {
    match spec.family() {
        Family::Weibull if spec.shape() > 1.0 => LimitKind::DegenerateZero,
        Family::Weibull if spec.shape() < 1.0 => LimitKind::DegenerateOne,
        _ => LimitKind::Exponential,
    }
}

/// Pointwise limit of `T̄_s(x)` as `s → ∞`.
///
/// Gamma and exponential specs tend to `e^{-x/θ}`. Weibull specs tend to 0
/// (shape > 1, for `x > 0`), `e^{-x/θ}` (shape 1) or 1 (shape < 1). Every
/// tail equals 1 at `x = 0`, so the degenerate-zero limit is 1 there.
pub fn limit_tail(spec: &DistributionSpec, x: f64) -> Result<f64> {
    check_x("limit_tail", x)?;
    Ok(match limit_kind(spec) {
        LimitKind::Exponential => (-x / spec.scale()).exp(),
        LimitKind::DegenerateOne => 1.0,
        LimitKind::DegenerateZero if x == 0.0 => 1.0,
        LimitKind::DegenerateZero => 0.0,
    })
}

/// `ln` of the large-s approximation
/// `E(X-x)_+^{s-1} ≈ e^{-x/θ} θ^{s-1} Γ(α+s-1)/Γ(α)` for `X ~ Gamma(α, θ)`.
/// Exact when `α = 1`.
pub fn stop_loss_approx_gamma(shape: f64, scale: f64, s: IterationIndex, x: f64) -> Result<f64> {
    check_x("stop_loss_approx_gamma", x)?;
    DistributionSpec::gamma(shape, scale)?;
    let r = (s.get() - 1) as f64;
    Ok(-x / scale + r * scale.ln() + ln_gamma(shape + r) - ln_gamma(shape))
}

fn check_weibull_bound_args(shape: f64, s: IterationIndex, x: f64) -> Result<()> {
    if !(shape > 1.0 && shape.is_finite()) {
        return Err(Error::domain("weibull_tail_upper_bound", format!("shape must be > 1, got {shape}")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain("weibull_tail_upper_bound", format!("x must be > 0, got {x}")));
    }
    if s.get() < 2 {
        return Err(Error::domain("weibull_tail_upper_bound", "s must be >= 2"));
    }
    Ok(())
}

/// `ln` of the bound `T̄_s(x) ≤ e^{-x^α} / (E X^{s-1} α^{s-1} x^{(s-1)(α-1)})`
/// for the unit-scale Weibull with shape `α > 1`, as it is usually stated.
///
/// Iterating the integration-by-parts estimate bounds the `(s-1)`-fold
/// integral of `F̄`, which is `E(X-x)_+^{s-1}/(s-1)!`; this form drops the
/// `(s-1)!` and fails for `s ≥ 4`. See [`weibull_tail_upper_bound_corrected`].
pub fn weibull_tail_upper_bound(shape: f64, s: IterationIndex, x: f64) -> Result<f64> {
    check_weibull_bound_args(shape, s, x)?;
    let r = (s.get() - 1) as f64;
    Ok(-x.powf(shape) - ln_gamma(1.0 + r / shape) - r * shape.ln() - r * (shape - 1.0) * x.ln())
}

/// [`weibull_tail_upper_bound`] with the `(s-1)!` restored. Valid for every
/// `s`, but it grows without bound as `s → ∞`.
pub fn weibull_tail_upper_bound_corrected(shape: f64, s: IterationIndex, x: f64) -> Result<f64> {
    Ok(weibull_tail_upper_bound(shape, s, x)? + ln_factorial((s.get() - 1) as u64))
}

/// Bounds on `E(X-x)_+^s` for the unit-scale Weibull with shape `α < 1`,
/// alongside the quadrature value they are meant to bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopLossBracket {
    pub s: u32,
    pub beta: f64,
    pub x: f64,
    /// `ln(e^{-βx} Γ(1+s/α))`
    pub ln_lower: f64,
    /// `ln Γ(1+s/α) = ln E X^s`
    pub ln_upper: f64,
    pub ln_stop_loss: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// `e^{-βx} Γ(1+s/α) ≤ E(X-x)_+^s ≤ Γ(1+s/α)`. The upper bound always
/// holds; the lower one only for `s` beyond some `s₀` depending on `β`, so it
/// is checked against quadrature and flagged.
pub fn weibull_stop_loss_bounds(shape: f64, s: u32, beta: f64, x: f64) -> Result<StopLossBracket> {
    check_x("weibull_stop_loss_bounds", x)?;
    if !(shape > 0.0 && shape < 1.0) {
        return Err(Error::domain("weibull_stop_loss_bounds", format!("shape must be in (0, 1), got {shape}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain("weibull_stop_loss_bounds", format!("beta must be > 0, got {beta}")));
    }
    let spec = DistributionSpec::weibull(shape, 1.0)?;
    let ln_upper = ln_gamma(1.0 + s as f64 / shape);
    let ln_lower = ln_upper - beta * x;
    let ln_stop_loss = stop_loss(&spec, x, s)?;
    // Relative slack for the quadrature error.
    let slack = 1e-9;
    Ok(StopLossBracket {
        s,
        beta,
        x,
        ln_lower,
        ln_upper,
        ln_stop_loss,
        lower_holds: ln_stop_loss >= ln_lower - slack,
        upper_holds: ln_stop_loss <= ln_upper + slack,
    })
}

/// Smallest `s₀ ≤ s_max` such that the lower bound holds at every `x` in
/// `xs` for every `s ∈ [s₀, s_max]`.
pub fn measure_s0(shape: f64, beta: f64, xs: &[f64], s_max: u32) -> Result<Option<u32>> {
    let holds: Vec<bool> = (1..=s_max)
        .into_par_iter()
        .map(|s| {
            xs.iter().try_fold(true, |ok, &x| {
                Ok(ok && weibull_stop_loss_bounds(shape, s, beta, x)?.lower_holds)
            })
        })
        .collect::<Result<_>>()?;
    let failing_tail = holds.iter().rev().take_while(|&&h| h).count() as u32;
    Ok((failing_tail > 0).then(|| s_max - failing_tail + 1))
}

/// `A(s) = s Γ(1+(s-1)/α) / Γ(1+s/α)`.
pub fn gamma_ratio_diagnostic(shape: f64, s: IterationIndex) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::InvalidParameter(format!("shape must be positive, got {shape}")));
    }
    let s = s.get() as f64;
    Ok(((s).ln() + ln_gamma(1.0 + (s - 1.0) / shape) - ln_gamma(1.0 + s / shape)).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub spec: DistributionSpec,
    pub x_grid: Vec<f64>,
    pub s_values: Vec<u32>,
    /// `max_x |T̄_s(x) - limit(x)|` per entry of `s_values`.
    pub sup_distance: Vec<f64>,
    pub limit_kind: LimitKind,
    /// `x = 0` was removed from the grid because the limit is degenerate.
    pub dropped_zero: bool,
}

impl ConvergenceReport {
    /// Whether `sup_distance` never increases with `s`, up to `tol`.
    pub fn monotone_in_s(&self, tol: f64) -> bool {
        self.sup_distance.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    pub fn rows(&self) -> Vec<ConvergenceRow> {
        self.s_values
            .iter()
            .zip(&self.sup_distance)
            .map(|(&s, &d)| ConvergenceRow {
                spec: self.spec,
                s,
                sup_distance: d,
                limit_kind: self.limit_kind,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub spec: DistributionSpec,
    pub s: u32,
    pub sup_distance: f64,
    pub limit_kind: LimitKind,
}

impl CsvRecord for ConvergenceRow {
    fn header() -> &'static [&'static str] {
        &["spec", "s", "sup_distance", "limit_kind"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.spec.to_string(),
            self.s.to_string(),
            format_number(self.sup_distance),
            self.limit_kind.to_string(),
        ]
    }
}

/// Sup distance between `T̄_s` and its limit over `x_grid`, for each `s`.
pub fn convergence_report(
    spec: &DistributionSpec,
    x_grid: &[f64],
    s_values: &[u32],
) -> Result<ConvergenceReport> {
    if x_grid.is_empty() || s_values.is_empty() {
        return Err(Error::InvalidParameter("convergence grids must be nonempty".into()));
    }
    if x_grid.windows(2).any(|w| w[1] <= w[0]) || s_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("convergence grids must be strictly increasing".into()));
    }
    let kind = limit_kind(spec);
    let dropped_zero = kind != LimitKind::Exponential && x_grid[0] == 0.0;
    let xs: Vec<f64> = if dropped_zero {
        x_grid[1..].to_vec()
    } else {
        x_grid.to_vec()
    };
    if xs.is_empty() {
        return Err(Error::InvalidParameter("x grid is empty once x = 0 is dropped".into()));
    }
    let limits: Vec<f64> = xs.iter().map(|&x| limit_tail(spec, x)).collect::<Result<_>>()?;
    let sup_distance = s_values
        .par_iter()
        .map(|&s| {
            let s = IterationIndex::new(s)?;
            xs.iter().zip(&limits).try_fold(0.0f64, |acc, (&x, &lim)| {
                let t = iterated_tail(spec, s, x)?.value_or_zero();
                Ok(acc.max((t - lim).abs()))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceReport {
        spec: *spec,
        x_grid: xs,
        s_values: s_values.to_vec(),
        sup_distance,
        limit_kind: kind,
        dropped_zero,
    })
}
