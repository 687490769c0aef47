//! Parametric distribution primitives: density, tail, raw moments and
//! failure rate for the Gamma, Weibull and exponential families.
//!
//! Every quantity is computed in log space first. The linear-space
//! accessors exponentiate on demand and refuse to return a silent infinity.

use std::fmt;

use crate::error::{check_x, Error, Result};
use crate::special::{ln_factorial, ln_gamma, ln_gamma_q, log_sum_exp};

/// Log-tails below this are considered underflowed for ratio purposes.
pub const LOG_TAIL_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gamma,
    Weibull,
    Exponential,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::Exponential => "exp",
        })
    }
}

/// Shape parameter. Integer Gamma shapes are carried explicitly so the
/// closed-form routes never depend on rounding a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Integer(u32),
    Real(f64),
}

impl Shape {
    pub fn value(self) -> f64 {
        match self {
            Shape::Integer(n) => n as f64,
            Shape::Real(a) => a,
        }
    }
}

/// A member of one of the three supported families.
///
/// `scale` is the Gamma `θ`, the Weibull scale (tail `exp(-(x/scale)^shape)`)
/// or the exponential mean `1/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    family: Family,
    shape: Shape,
    scale: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

impl DistributionSpec {
    /// `Gamma(shape, scale)` with a real shape. Always uses the numerical
    /// routes, even when `shape` happens to be a whole number.
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        check_positive("gamma shape", shape)?;
        check_positive("gamma scale", scale)?;
        Ok(Self {
            family: Family::Gamma,
            shape: Shape::Real(shape),
            scale,
        })
    }

    /// `Gamma(n, scale)` with an integer shape; enables the closed forms.
    pub fn erlang(shape: u32, scale: f64) -> Result<Self> {
        if shape == 0 {
            return Err(Error::InvalidParameter("gamma shape must be >= 1".into()));
        }
        check_positive("gamma scale", scale)?;
        Ok(Self {
            family: Family::Gamma,
            shape: Shape::Integer(shape),
            scale,
        })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        check_positive("weibull shape", shape)?;
        check_positive("weibull scale", scale)?;
        Ok(Self {
            family: Family::Weibull,
            shape: Shape::Real(shape),
            scale,
        })
    }

    /// Exponential with hazard `rate`.
    pub fn exponential(rate: f64) -> Result<Self> {
        check_positive("exponential rate", rate)?;
        Ok(Self {
            family: Family::Exponential,
            shape: Shape::Integer(1),
            scale: 1.0 / rate,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn shape(&self) -> f64 {
        self.shape.value()
    }

    pub fn shape_param(&self) -> Shape {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.scale
    }

    /// Integer Gamma shape, if this spec may use the Gamma closed forms.
    /// Exponentials report shape 1.
    pub fn integer_shape(&self) -> Option<u32> {
        match (self.family, self.shape) {
            (Family::Gamma | Family::Exponential, Shape::Integer(n)) => Some(n),
            _ => None,
        }
    }

    /// The same distribution with unit scale.
    pub fn unit_scale(&self) -> Self {
        Self { scale: 1.0, ..*self }
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_positive("scale", scale)?;
        Ok(Self { scale, ..*self })
    }

    /// True when the density is unbounded at the origin.
    pub fn singular_at_zero(&self) -> bool {
        self.family != Family::Exponential && self.shape() < 1.0
    }

    /// Log density on the unit scale; callers apply `x / scale` and the
    /// `-ln scale` Jacobian.
    fn ln_density_unit(&self, y: f64) -> f64 {
        let a = self.shape();
        match self.family {
            Family::Exponential => -y,
            Family::Gamma => {
                if y == 0.0 {
                    return match a.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 0.0,
                        _ => f64::NEG_INFINITY,
                    };
                }
                (a - 1.0) * y.ln() - y - ln_gamma(a)
            }
            Family::Weibull => {
                if y == 0.0 {
                    return match a.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 0.0,
                        _ => f64::NEG_INFINITY,
                    };
                }
                a.ln() + (a - 1.0) * y.ln() - y.powf(a)
            }
        }
    }

    fn ln_tail_unit(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        match self.family {
            Family::Exponential => -y,
            Family::Weibull => -y.powf(self.shape()),
            Family::Gamma => match self.shape {
                Shape::Integer(n) => erlang_ln_tail(n, y),
                Shape::Real(a) => ln_gamma_q(a, y),
            },
        }
    }

    fn ln_raw_moment_real(&self, k: f64) -> f64 {
        let a = self.shape();
        let unit = match self.family {
            Family::Exponential => ln_gamma(k + 1.0),
            Family::Gamma => ln_gamma(a + k) - ln_gamma(a),
            Family::Weibull => ln_gamma(1.0 + k / a),
        };
        k * self.scale.ln() + unit
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Exponential => write!(f, "exp(rate={})", self.rate()),
            _ => write!(f, "{}(shape={},scale={})", self.family, self.shape(), self.scale),
        }
    }
}

/// `ln(e^{-y} Σ_{k<n} y^k/k!)`, the Erlang tail; all terms positive.
fn erlang_ln_tail(n: u32, y: f64) -> f64 {
    let ln_y = y.ln();
    -y + log_sum_exp((0..n as u64).map(|k| k as f64 * ln_y - ln_factorial(k)))
}

/// `ln f(x)`. Infinite at `x = 0` for shapes below one.
pub fn ln_density(spec: &DistributionSpec, x: f64) -> Result<f64> {
    check_x("density", x)?;
    Ok(spec.ln_density_unit(x / spec.scale) - spec.scale.ln())
}

pub fn density(spec: &DistributionSpec, x: f64) -> Result<f64> {
    ln_density(spec, x).map(f64::exp)
}

/// `ln P(X > x)`.
pub fn ln_tail(spec: &DistributionSpec, x: f64) -> Result<f64> {
    check_x("tail", x)?;
    Ok(spec.ln_tail_unit(x / spec.scale))
}

pub fn tail(spec: &DistributionSpec, x: f64) -> Result<f64> {
    ln_tail(spec, x).map(f64::exp)
}

/// `ln P(X ≤ x)`, accurate where the tail is close to one.
pub fn ln_cdf(spec: &DistributionSpec, x: f64) -> Result<f64> {
    check_x("cdf", x)?;
    let y = x / spec.scale;
    if y == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(match spec.family {
        Family::Exponential => (-(-y).exp_m1()).ln(),
        Family::Weibull => (-(-y.powf(spec.shape())).exp_m1()).ln(),
        Family::Gamma => crate::special::ln_gamma_p(spec.shape(), y),
    })
}

/// `ln E X^k`.
pub fn ln_raw_moment(spec: &DistributionSpec, k: u32) -> f64 {
    spec.ln_raw_moment_real(k as f64)
}

/// `E X^k`, or an overflow error carrying the logarithm.
pub fn raw_moment(spec: &DistributionSpec, k: u32) -> Result<f64> {
    let l = ln_raw_moment(spec, k);
    let v = l.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow {
            op: "raw_moment",
            log_value: l,
        })
    }
}

/// `f(x) / P(X > x)`, evaluated as a log difference.
pub fn failure_rate(spec: &DistributionSpec, x: f64) -> Result<f64> {
    check_x("failure_rate", x)?;
    if x == 0.0 {
        return Err(Error::domain("failure_rate", "x must be > 0"));
    }
    let lt = ln_tail(spec, x)?;
    if lt < LOG_TAIL_FLOOR {
        return Err(Error::Underflow {
            op: "failure_rate",
            x,
            log_tail: lt,
        });
    }
    Ok((ln_density(spec, x)? - lt).exp())
}

/// Cached `ln E X^k` for `k = 0..=max_order`.
#[derive(Debug, Clone)]
pub struct MomentTable {
    spec: DistributionSpec,
    log_moments: Vec<f64>,
}

impl MomentTable {
    pub fn new(spec: &DistributionSpec, max_order: u32) -> Self {
        let log_moments = (0..=max_order).map(|k| ln_raw_moment(spec, k)).collect();
        Self {
            spec: *spec,
            log_moments,
        }
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn max_order(&self) -> u32 {
        self.log_moments.len() as u32 - 1
    }

    pub fn log_moments(&self) -> &[f64] {
        &self.log_moments
    }

    /// `ln E X^k`, computed on demand beyond the cached range.
    pub fn ln_moment(&self, k: u32) -> f64 {
        self.log_moments
            .get(k as usize)
            .copied()
            .unwrap_or_else(|| ln_raw_moment(&self.spec, k))
    }

    /// Smallest second difference of the log moments; nonnegative for any
    /// nonnegative variable.
    pub fn min_second_difference(&self) -> Option<f64> {
        self.log_moments
            .windows(3)
            .map(|w| w[2] - 2.0 * w[1] + w[0])
            .reduce(f64::min)
    }
}

/// `ln E S_n^k` for `S_n` the sum of `n` iid copies of `base`.
///
/// Gamma and exponential bases use the closed form `S_n ~ Gamma(nα, θ)`;
/// Weibull bases expand `E(A+B)^k = Σ C(k,i) E A^i E B^{k-i}` recursively.
/// `n = 0` is the point mass at zero.
#[derive(Debug, Clone)]
pub struct ConvolutionMoments {
    /// `table[n][k] = ln E S_n^k`
    table: Vec<Vec<f64>>,
}

impl ConvolutionMoments {
    pub fn new(base: &DistributionSpec, max_power: u32, max_order: u32) -> Self {
        let orders = max_order as usize + 1;
        let mut table = Vec::with_capacity(max_power as usize + 1);
        table.push(
            (0..orders)
                .map(|k| if k == 0 { 0.0 } else { f64::NEG_INFINITY })
                .collect::<Vec<_>>(),
        );
        let base_moments: Vec<f64> = (0..orders as u32).map(|k| ln_raw_moment(base, k)).collect();
        for n in 1..=max_power {
            let row: Vec<f64> = match base.family() {
                Family::Gamma | Family::Exponential => {
                    let a = n as f64 * base.shape();
                    (0..orders)
                        .map(|k| {
                            let k = k as f64;
                            k * base.scale().ln() + ln_gamma(a + k) - ln_gamma(a)
                        })
                        .collect()
                }
                Family::Weibull => {
                    let prev = &table[n as usize - 1];
                    (0..orders)
                        .map(|k| {
                            log_sum_exp((0..=k).map(|i| {
                                crate::special::ln_binomial_int(k as u64, i as u64)
                                    + prev[i]
                                    + base_moments[k - i]
                            }))
                        })
                        .collect()
                }
            };
            table.push(row);
        }
        Self { table }
    }

    pub fn ln_moment(&self, n: u32, k: u32) -> f64 {
        self.table[n as usize][k as usize]
    }
}
