//! The s-iterated distribution engine.
//!
//! The s-iterated tail is the normalized stop-loss transform of order `s-1`:
//!
//! ```text
//! T̄_s(x) = E(X - x)_+^{s-1} / E X^{s-1}
//! ```
//!
//! Integer-shape Gamma (and exponential) specs use exact closed forms; every
//! other spec evaluates the stop-loss transform with the log-space
//! quadrature oracle. All evaluation happens on the unit scale, using
//! `T̄_{θX,s}(x) = T̄_{X,s}(x/θ)`.

mod reference;

pub use reference::{reference_iterated_tail, ReferenceIteration, MAX_REFERENCE_DEPTH};

use std::fmt;

use crate::dist::{ln_density, ln_raw_moment, ln_tail, DistributionSpec};
use crate::error::{check_x, Error, Result};
use crate::quadrature::{integrate_logspace, IntegralResult, QuadratureConfig};
use crate::special::{ln_binomial_int, ln_factorial, log_sum_exp};

/// `ln(1e-300)`: values below this are reported through their logarithm only.
pub const LN_REPRESENTABLE_FLOOR: f64 = -690.775_527_898_213_7;

/// Iteration step `s ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IterationIndex(u32);

impl IterationIndex {
    pub fn new(s: u32) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParameter("iteration step s must be >= 1".into()));
        }
        Ok(Self(s))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn next(self) -> Self {
        Self(self.0 + 1)
    }
}

impl TryFrom<u32> for IterationIndex {
    type Error = Error;
    fn try_from(s: u32) -> Result<Self> {
        Self::new(s)
    }
}

impl fmt::Display for IterationIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Integer-shape Gamma closed forms (binomial expansion of the stop-loss).
    ClosedFormGamma,
    StopLossQuadrature,
    /// Level-by-level integration of the defining recursion.
    ReferenceRecursion,
    /// `s = 1` or order-0 quantities that are the base distribution itself.
    BaseDistribution,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedFormGamma => "closed_form_gamma",
            Method::StopLossQuadrature => "stop_loss_quadrature",
            Method::ReferenceRecursion => "reference_recursion",
            Method::BaseDistribution => "base_distribution",
        })
    }
}

/// A tail or density of an s-iterated distribution, held as a logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IteratedEvaluation {
    pub spec: DistributionSpec,
    pub s: IterationIndex,
    pub method: Method,
    pub log_value: f64,
}

impl IteratedEvaluation {
    /// The linear value, or `None` below `1e-300`.
    pub fn value(&self) -> Option<f64> {
        (self.log_value >= LN_REPRESENTABLE_FLOOR).then(|| self.log_value.exp())
    }

    /// The linear value, flushing unrepresentable values to zero.
    pub fn value_or_zero(&self) -> f64 {
        self.value().unwrap_or(0.0)
    }
}

/// `ln E(X - y)_+^order` for `X ~ Gamma(shape, 1)` with integer shape, by
/// binomial expansion of `(u + y)^(shape-1)`:
///
/// `E(X-y)_+^r = e^{-y} Σ_{k=0}^{n-1} (r+n-1-k)!/(n-1-k)! · y^k/k!`.
pub fn stop_loss_gamma_closed(shape: u32, y: f64, order: u32) -> f64 {
    let n = shape as u64;
    let r = order as u64;
    if y == 0.0 {
        return ln_factorial(r + n - 1) - ln_factorial(n - 1);
    }
    let ln_y = y.ln();
    -y + log_sum_exp((0..n).map(|k| {
        ln_factorial(r + n - 1 - k) - ln_factorial(n - 1 - k) + k as f64 * ln_y - ln_factorial(k)
    }))
}

/// `ln E(X - x)_+^order` by log-space quadrature, never using a closed form.
pub fn stop_loss_quadrature(
    spec: &DistributionSpec,
    x: f64,
    order: u32,
    config: &QuadratureConfig,
) -> Result<IntegralResult> {
    check_x("stop_loss", x)?;
    let unit = spec.unit_scale();
    let y = x / spec.scale();
    let r = order as f64;
    let log_integrand = |t: f64| {
        let poly = if order == 0 { 0.0 } else { r * (t - y).ln() };
        poly + ln_density(&unit, t).unwrap_or(f64::NAN)
    };
    let mut result = integrate_logspace(log_integrand, y, &unit, config)?;
    let shift = r * spec.scale().ln();
    result.log_value += shift;
    result.value = result.log_value.exp();
    result.error_estimate = result.relative_error * result.value;
    Ok(result)
}

fn stop_loss_routed(
    spec: &DistributionSpec,
    x: f64,
    order: u32,
    config: &QuadratureConfig,
) -> Result<(f64, Method)> {
    check_x("stop_loss", x)?;
    if x == 0.0 {
        return Ok((ln_raw_moment(spec, order), Method::BaseDistribution));
    }
    if let Some(n) = spec.integer_shape() {
        let y = x / spec.scale();
        let l = stop_loss_gamma_closed(n, y, order) + order as f64 * spec.scale().ln();
        return Ok((l, Method::ClosedFormGamma));
    }
    if order == 0 {
        return Ok((ln_tail(spec, x)?, Method::BaseDistribution));
    }
    let r = stop_loss_quadrature(spec, x, order, config)?;
    Ok((r.log_value, Method::StopLossQuadrature))
}

/// `ln E(X - x)_+^order`, the stop-loss transform of the given order.
pub fn stop_loss(spec: &DistributionSpec, x: f64, order: u32) -> Result<f64> {
    stop_loss_with(spec, x, order, &QuadratureConfig::default())
}

pub fn stop_loss_with(
    spec: &DistributionSpec,
    x: f64,
    order: u32,
    config: &QuadratureConfig,
) -> Result<f64> {
    stop_loss_routed(spec, x, order, config).map(|(l, _)| l)
}

/// Unit-scale tail of the s-iterate of `Gamma(shape, 1)` for integer shape:
///
/// `T̄_s(x) = e^{-x} [1 + Σ_{ℓ=1}^{α-1} C(s+α-ℓ-2, α-ℓ-1) / C(α+s-2, α-1) · x^ℓ/ℓ!]`.
///
/// Terms are positive and summed in log space, so large `s` is safe. The
/// formula also holds at `s = 1` (the Erlang tail) and `shape = 1`.
pub fn iterated_tail_gamma_closed(shape: u32, s: IterationIndex, x: f64) -> Result<f64> {
    ln_iterated_tail_gamma_closed(shape, s, x).map(f64::exp)
}

pub fn ln_iterated_tail_gamma_closed(shape: u32, s: IterationIndex, x: f64) -> Result<f64> {
    check_x("iterated_tail_gamma_closed", x)?;
    if shape == 0 {
        return Err(Error::InvalidParameter("gamma shape must be >= 1".into()));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (a, s) = (shape as u64, s.get() as u64);
    let ln_norm = ln_binomial_int(a + s - 2, a - 1);
    let ln_x = x.ln();
    let terms = std::iter::once(0.0).chain((1..a).map(|l| {
        ln_binomial_int(s + a - l - 2, a - l - 1) - ln_norm + l as f64 * ln_x - ln_factorial(l)
    }));
    Ok(-x + log_sum_exp(terms))
}

/// Tail of the s-iterated distribution, `T̄_s(x)`.
pub fn iterated_tail(
    spec: &DistributionSpec,
    s: IterationIndex,
    x: f64,
) -> Result<IteratedEvaluation> {
    iterated_tail_with(spec, s, x, &QuadratureConfig::default())
}

pub fn iterated_tail_with(
    spec: &DistributionSpec,
    s: IterationIndex,
    x: f64,
    config: &QuadratureConfig,
) -> Result<IteratedEvaluation> {
    check_x("iterated_tail", x)?;
    let y = x / spec.scale();
    let (log_value, method) = match spec.integer_shape() {
        Some(n) => (ln_iterated_tail_gamma_closed(n, s, y)?, Method::ClosedFormGamma),
        None if s.get() == 1 => (ln_tail(spec, x)?, Method::BaseDistribution),
        None => {
            let unit = spec.unit_scale();
            let order = s.get() - 1;
            let (l, m) = stop_loss_routed(&unit, y, order, config)?;
            (l - ln_raw_moment(&unit, order), m)
        }
    };
    Ok(IteratedEvaluation {
        spec: *spec,
        s,
        method,
        log_value: log_value.min(0.0),
    })
}

/// `T̄_s(x)` through the stop-loss quadrature regardless of the spec, for
/// cross-checking the closed forms.
pub fn iterated_tail_quadrature(
    spec: &DistributionSpec,
    s: IterationIndex,
    x: f64,
    config: &QuadratureConfig,
) -> Result<IteratedEvaluation> {
    let unit = spec.unit_scale();
    let y = x / spec.scale();
    let order = s.get() - 1;
    let r = stop_loss_quadrature(&unit, y, order, config)?;
    Ok(IteratedEvaluation {
        spec: *spec,
        s,
        method: Method::StopLossQuadrature,
        log_value: (r.log_value - ln_raw_moment(&unit, order)).min(0.0),
    })
}

/// Density of the s-iterate, `f_s(x) = (s-1) E(X-x)_+^{s-2} / E X^{s-1}`.
/// At `s = 1` this is the density of `X`.
pub fn iterated_density(
    spec: &DistributionSpec,
    s: IterationIndex,
    x: f64,
) -> Result<IteratedEvaluation> {
    iterated_density_with(spec, s, x, &QuadratureConfig::default())
}

pub fn iterated_density_with(
    spec: &DistributionSpec,
    s: IterationIndex,
    x: f64,
    config: &QuadratureConfig,
) -> Result<IteratedEvaluation> {
    check_x("iterated_density", x)?;
    let (log_value, method) = if s.get() == 1 {
        (ln_density(spec, x)?, Method::BaseDistribution)
    } else {
        let k = s.get();
        let (l, m) = stop_loss_routed(spec, x, k - 2, config)?;
        ((k as f64 - 1.0).ln() + l - ln_raw_moment(spec, k - 1), m)
    };
    Ok(IteratedEvaluation {
        spec: *spec,
        s,
        method,
        log_value,
    })
}

/// `ln μ_s` where `μ_s = E X^s / (s E X^{s-1})` is the mean of the s-iterate.
pub fn ln_iterated_mean(spec: &DistributionSpec, s: IterationIndex) -> f64 {
    let s = s.get();
    ln_raw_moment(spec, s) - ln_raw_moment(spec, s - 1) - (s as f64).ln()
}

pub fn iterated_mean(spec: &DistributionSpec, s: IterationIndex) -> f64 {
    ln_iterated_mean(spec, s).exp()
}

/// `ln μ_{s,m}`, the order-m moment of the s-iterate:
/// `C(m+s-1, m)^{-1} E X^{m+s-1} / E X^{s-1}` for `s ≥ 2`.
///
/// At `s = 1` the iterate is `X` itself and its raw moments are returned.
pub fn ln_iterated_moment(spec: &DistributionSpec, s: IterationIndex, m: u32) -> f64 {
    let s = s.get();
    if s == 1 {
        return ln_raw_moment(spec, m);
    }
    ln_raw_moment(spec, m + s - 1)
        - ln_raw_moment(spec, s - 1)
        - ln_binomial_int((m + s - 1) as u64, m as u64)
}

pub fn iterated_moment(spec: &DistributionSpec, s: IterationIndex, m: u32) -> Result<f64> {
    let l = ln_iterated_moment(spec, s, m);
    let v = l.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow {
            op: "iterated_moment",
            log_value: l,
        })
    }
}

/// Variance of the s-iterate:
/// `σ²_s = μ_s · (2/(s+1) · E X^{s+1}/E X^s − μ_s)`.
pub fn iterated_variance(spec: &DistributionSpec, s: IterationIndex) -> f64 {
    let k = s.get();
    let mean = iterated_mean(spec, s);
    let ratio_next = (ln_raw_moment(spec, k + 1) - ln_raw_moment(spec, k)).exp();
    (mean * (2.0 / (k as f64 + 1.0) * ratio_next - mean)).max(0.0)
}
