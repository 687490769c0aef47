//! Adaptive Gauss–Legendre integration over `[lower, ∞)`.
//!
//! This is the oracle every closed form in the crate is checked against, so
//! it deliberately shares nothing with them beyond the density functions.
//!
//! The scheme works on the logarithm of the integrand throughout:
//!
//! 1. `[lower, ∞)` is swept with segments whose widths start at the
//!    decay hint's scale and double. The sweep stops at the first boundary
//!    `T` where the integrand is decreasing and the exponential-tail bound
//!    `exp(h(T)) / (-h'(T))` is below `truncation_mass` times the running
//!    total. Hints with shape below one have decreasing hazards, so their
//!    bound is doubled.
//! 2. When the hint's density is singular at the origin, the segment
//!    touching `[0, scale]` is integrated in `u = t^shape`, which cancels the
//!    `t^(shape-1)` factor.
//! 3. All segments enter a global adaptive loop: the panel with the largest
//!    error estimate `|G(panel) - G(left) - G(right)|` is bisected until the
//!    summed error meets `max(abs_tol, rel_tol · |value|)`.
//!
//! Panel values are accumulated with log-sum-exp, so integrals such as
//! `∫ (t-x)^999 f(t) dt` never overflow.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::special::{log_abs_diff, log_add, log_sum_exp};

const GL_ORDER: usize = 20;
const MAX_SEGMENTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Bound on the neglected tail mass, relative to the integral.
    pub truncation_mass: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_panels: 4096,
            truncation_mass: 1e-16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("rel_tol", self.rel_tol)?;
        unit("abs_tol", self.abs_tol)?;
        unit("truncation_mass", self.truncation_mass)?;
        if self.max_panels < 8 {
            return Err(Error::InvalidParameter(format!(
                "max_panels must be >= 8, got {}",
                self.max_panels
            )));
        }
        Ok(())
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    /// `exp(log_value)`; may be `inf` for log-space integrals that only
    /// exist as logarithms.
    pub value: f64,
    pub log_value: f64,
    pub error_estimate: f64,
    pub relative_error: f64,
    pub panels_used: usize,
}

impl IntegralResult {
    fn from_logs(log_value: f64, log_error: f64, panels_used: usize) -> Self {
        let relative_error = if log_value == f64::NEG_INFINITY {
            0.0
        } else {
            (log_error - log_value).exp()
        };
        Self {
            value: log_value.exp(),
            log_value,
            error_estimate: log_error.exp(),
            relative_error,
            panels_used,
        }
    }
}

struct GaussLegendre {
    nodes: [f64; GL_ORDER],
    ln_weights: [f64; GL_ORDER],
}

fn gauss_legendre() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = legendre_nodes(GL_ORDER);
        let mut rule = GaussLegendre {
            nodes: [0.0; GL_ORDER],
            ln_weights: [0.0; GL_ORDER],
        };
        for i in 0..GL_ORDER {
            rule.nodes[i] = nodes[i];
            rule.ln_weights[i] = weights[i].ln();
        }
        rule
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Change of variables applied on a panel.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Map {
    Identity,
    /// `t = u^(1/shape)`, `dt = u^(1/shape - 1) du / shape`.
    Power { shape: f64 },
}

impl Map {
    fn to_t(self, u: f64) -> f64 {
        match self {
            Map::Identity => u,
            Map::Power { shape } => u.powf(1.0 / shape),
        }
    }

    fn ln_jacobian(self, u: f64) -> f64 {
        match self {
            Map::Identity => 0.0,
            Map::Power { shape } => (1.0 / shape - 1.0) * u.ln() - shape.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    ln_left: f64,
    ln_right: f64,
    ln_value: f64,
    ln_error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.ln_error == other.ln_error
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
        self.ln_error.total_cmp(&other.ln_error)
    }
}

struct Integrator<'a, F: Fn(f64) -> f64> {
    log_integrand: &'a F,
    evaluations: usize,
}

impl<F: Fn(f64) -> f64> Integrator<'_, F> {
    fn gauss(&mut self, lo: f64, hi: f64, map: Map) -> Result<f64> {
        let rule = gauss_legendre();
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut terms = [0.0; GL_ORDER];
        for i in 0..GL_ORDER {
            let u = mid + half * rule.nodes[i];
            let t = map.to_t(u);
            let h = (self.log_integrand)(t);
            if h.is_nan() {
                return Err(Error::domain(
                    "quadrature",
                    format!("integrand is NaN at t = {t}"),
                ));
            }
            terms[i] = rule.ln_weights[i] + h + map.ln_jacobian(u);
        }
        self.evaluations += GL_ORDER;
        Ok(log_sum_exp(terms) + half.ln())
    }

    fn panel(&mut self, lo: f64, hi: f64, map: Map, ln_whole: Option<f64>) -> Result<Panel> {
        let whole = match ln_whole {
            Some(w) => w,
            None => self.gauss(lo, hi, map)?,
        };
        let mid = 0.5 * (lo + hi);
        let ln_left = self.gauss(lo, mid, map)?;
        let ln_right = self.gauss(mid, hi, map)?;
        let ln_value = log_add(ln_left, ln_right);
        let ln_error = log_abs_diff(whole, ln_value);
        Ok(Panel {
            lo,
            hi,
            map,
            ln_left,
            ln_right,
            ln_value,
            ln_error,
        })
    }

    fn split(&mut self, p: &Panel) -> Result<[Panel; 2]> {
        let mid = 0.5 * (p.lo + p.hi);
        Ok([
            self.panel(p.lo, mid, p.map, Some(p.ln_left))?,
            self.panel(mid, p.hi, p.map, Some(p.ln_right))?,
        ])
    }
}

/// `∫_lower^∞ integrand(t) dt` for a nonnegative integrand eventually
/// dominated by the tail of `decay_hint`.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    integrand: F,
    lower: f64,
    decay_hint: &DistributionSpec,
    config: &QuadratureConfig,
) -> Result<IntegralResult> {
    let log_integrand = |t: f64| {
        let v = integrand(t);
        if v < 0.0 {
            f64::NAN
        } else {
            v.ln()
        }
    };
    integrate_semi_infinite(&log_integrand, lower, decay_hint, config, true)
}

/// `ln ∫_lower^∞ exp(log_integrand(t)) dt`.
pub fn integrate_logspace<F: Fn(f64) -> f64>(
    log_integrand: F,
    lower: f64,
    decay_hint: &DistributionSpec,
    config: &QuadratureConfig,
) -> Result<IntegralResult> {
    integrate_semi_infinite(&log_integrand, lower, decay_hint, config, false)
}

/// `ln ∫_a^b exp(log_integrand(t)) dt` on a finite interval.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    log_integrand: F,
    a: f64,
    b: f64,
    config: &QuadratureConfig,
) -> Result<IntegralResult> {
    config.validate()?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::domain("integrate_interval", format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(IntegralResult::from_logs(f64::NEG_INFINITY, f64::NEG_INFINITY, 0));
    }
    let mut integrator = Integrator {
        log_integrand: &log_integrand,
        evaluations: 0,
    };
    let first = integrator.panel(a, b, Map::Identity, None)?;
    refine(&mut integrator, vec![first], f64::NEG_INFINITY, config, false)
}

fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    log_integrand: &F,
    lower: f64,
    hint: &DistributionSpec,
    config: &QuadratureConfig,
    linear: bool,
) -> Result<IntegralResult> {
    config.validate()?;
    if !(lower.is_finite() && lower >= 0.0) {
        return Err(Error::domain("quadrature", format!("lower limit must be finite and >= 0, got {lower}")));
    }
    let scale = hint.scale();
    let decreasing_hazard = hint.singular_at_zero();
    let tail_slack = if decreasing_hazard { 2f64.ln() } else { 0.0 };
    let mut integrator = Integrator {
        log_integrand,
        evaluations: 0,
    };

    let mut panels = Vec::new();
    let mut b = lower;
    if decreasing_hazard && lower < scale {
        let shape = hint.shape();
        let map = Map::Power { shape };
        panels.push(integrator.panel(lower.powf(shape), scale.powf(shape), map, None)?);
        b = scale;
    }
    let mut width = scale;
    let ln_truncation = config.truncation_mass.ln();
    let mut ln_tail_bound = f64::NEG_INFINITY;
    loop {
        if panels.len() >= MAX_SEGMENTS {
            let ln_total = log_sum_exp(panels.iter().map(|p| p.ln_value));
            return Err(Error::Convergence {
                panels: panels.len(),
                best: IntegralResult::from_logs(ln_total, ln_total, panels.len()),
            });
        }
        panels.push(integrator.panel(b, b + width, Map::Identity, None)?);
        b += width;
        width *= 2.0;

        let ln_total = log_sum_exp(panels.iter().map(|p| p.ln_value));
        let h = log_integrand(b);
        if h == f64::NEG_INFINITY {
            if ln_total > f64::NEG_INFINITY {
                break;
            }
            continue;
        }
        let d = 1e-6 * b.max(scale);
        let slope = (log_integrand(b + d) - log_integrand(b - d)) / (2.0 * d);
        if slope.is_finite() && slope < 0.0 {
            let bound = h - (-slope).ln() + tail_slack;
            if bound <= ln_total + ln_truncation {
                ln_tail_bound = bound;
                break;
            }
        }
    }
    refine(&mut integrator, panels, ln_tail_bound, config, linear)
}

fn refine<F: Fn(f64) -> f64>(
    integrator: &mut Integrator<'_, F>,
    panels: Vec<Panel>,
    ln_tail_bound: f64,
    config: &QuadratureConfig,
    linear: bool,
) -> Result<IntegralResult> {
    let ln_rel = config.rel_tol.ln();
    let ln_abs = if linear { config.abs_tol.ln() } else { f64::NEG_INFINITY };
    let mut heap: BinaryHeap<Panel> = panels.into_iter().collect();
    let mut frozen: Vec<Panel> = Vec::new();
    loop {
        let all = || heap.iter().chain(frozen.iter());
        let ln_value = log_add(log_sum_exp(all().map(|p| p.ln_value)), ln_tail_bound);
        let ln_error = log_add(log_sum_exp(all().map(|p| p.ln_error)), ln_tail_bound);
        let count = heap.len() + frozen.len();
        if ln_error <= (ln_rel + ln_value).max(ln_abs) || ln_value == f64::NEG_INFINITY {
            return Ok(IntegralResult::from_logs(ln_value, ln_error, count));
        }
        let worst = match heap.pop() {
            Some(p) if count < config.max_panels => p,
            _ => {
                return Err(Error::Convergence {
                    panels: count,
                    best: IntegralResult::from_logs(ln_value, ln_error, count),
                })
            }
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            frozen.push(worst);
            continue;
        }
        for child in integrator.split(&worst)? {
            heap.push(child);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{ln_density, DistributionSpec};
    use crate::special::ln_gamma;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = legendre_nodes(GL_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for k in 0..(2 * GL_ORDER) {
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((approx - exact).abs() < 1e-14, "degree {k}");
        }
    }

    #[test]
    fn exponential_total_mass() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        let r = integrate_tail(|t| (-t).exp(), 0.0, &e, &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13, "{r:?}");
        assert!(r.error_estimate <= cfg().abs_tol.max(cfg().rel_tol * r.value));
    }

    #[test]
    fn gamma3_first_stop_loss() {
        let g = DistributionSpec::gamma(3.0, 1.0).unwrap();
        let r = integrate_tail(
            |t| (t - 1.0) * ln_density(&g, t).unwrap().exp(),
            1.0,
            &g,
            &cfg(),
        )
        .unwrap();
        let exact = 5.5 * (-1.0f64).exp();
        assert!((r.value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn weibull_tail_from_two() {
        let w = DistributionSpec::weibull(2.0, 1.0).unwrap();
        let r = integrate_tail(|t| ln_density(&w, t).unwrap().exp(), 2.0, &w, &cfg()).unwrap();
        let exact = (-4.0f64).exp();
        assert!((r.value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn logspace_examples() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        let r = integrate_logspace(|t| -t, 0.0, &e, &cfg()).unwrap();
        assert!(r.log_value.abs() < 1e-13);

        let r = integrate_logspace(|t| 49.0 * (t - 1.0).ln() - t, 1.0, &e, &cfg()).unwrap();
        let exact = -1.0 + ln_gamma(50.0);
        assert!((r.log_value - exact).abs() < 1e-10 * exact.abs());

        let g = DistributionSpec::gamma(2.0, 1.0).unwrap();
        let r = integrate_logspace(
            |t| 99.0 * t.ln() + ln_density(&g, t).unwrap(),
            0.0,
            &g,
            &cfg(),
        )
        .unwrap();
        let exact = ln_gamma(101.0);
        assert!((r.log_value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn singular_gamma_density_integrates_to_one() {
        for shape in [0.1, 0.3, 0.5, 0.9] {
            let g = DistributionSpec::gamma(shape, 1.0).unwrap();
            let r = integrate_tail(|t| ln_density(&g, t).unwrap().exp(), 0.0, &g, &cfg()).unwrap();
            assert!((r.value - 1.0).abs() < 1e-10, "shape {shape}: {r:?}");
            let w = DistributionSpec::weibull(shape, 1.0).unwrap();
            let r = integrate_tail(|t| ln_density(&w, t).unwrap().exp(), 0.0, &w, &cfg()).unwrap();
            assert!((r.value - 1.0).abs() < 1e-10, "weibull shape {shape}: {r:?}");
        }
    }

    #[test]
    fn huge_order_weibull_moment_in_log_space() {
        // E X^999 for Weibull(0.5): Γ(1 + 1998)
        let w = DistributionSpec::weibull(0.5, 1.0).unwrap();
        let r = integrate_logspace(
            |t| 999.0 * t.ln() + ln_density(&w, t).unwrap(),
            0.0,
            &w,
            &cfg(),
        )
        .unwrap();
        let exact = ln_gamma(1999.0);
        assert!((r.log_value - exact).abs() < 1e-10 * exact, "{r:?}");
        assert!(r.value.is_infinite());
    }

    #[test]
    fn linear_and_log_routes_agree() {
        let g = DistributionSpec::gamma(3.7, 1.0).unwrap();
        for &x in &[0.0, 0.5, 3.0, 12.0] {
            for r in 0..6 {
                let lin = integrate_tail(
                    |t| (t - x).powi(r) * ln_density(&g, t).unwrap().exp(),
                    x,
                    &g,
                    &cfg(),
                )
                .unwrap();
                let log = integrate_logspace(
                    |t| r as f64 * (t - x).ln() + ln_density(&g, t).unwrap(),
                    x,
                    &g,
                    &cfg(),
                )
                .unwrap();
                if lin.value > 1e-300 {
                    assert!((log.log_value.exp() - lin.value).abs() <= 1e-9 * lin.value);
                }
            }
        }
    }

    #[test]
    fn refinement_never_hurts() {
        let g = DistributionSpec::gamma(3.0, 1.0).unwrap();
        let exact = 5.5 * (-1.0f64).exp();
        let mut last = f64::INFINITY;
        for tol in [1e-4, 5e-5, 2.5e-5, 1.25e-5, 1e-6, 1e-8, 1e-10] {
            let r = integrate_tail(
                |t| (t - 1.0) * ln_density(&g, t).unwrap().exp(),
                1.0,
                &g,
                &cfg().with_rel_tol(tol),
            )
            .unwrap();
            let err = (r.value - exact).abs();
            assert!(err <= last.max(1e-15), "tol {tol}: {err} > {last}");
            last = err;
        }
    }

    #[test]
    fn splitting_the_range_reproduces_the_integral() {
        let w = DistributionSpec::weibull(0.7, 2.0).unwrap();
        let f = |t: f64| 3.0 * (t - 0.5).ln() + ln_density(&w, t).unwrap();
        let whole = integrate_logspace(f, 0.5, &w, &cfg()).unwrap();
        for mid in [0.6, 1.0, 4.0, 25.0] {
            let head = integrate_interval(f, 0.5, mid, &cfg()).unwrap();
            let rest = integrate_logspace(f, mid, &w, &cfg()).unwrap();
            let sum = head.value + rest.value;
            let tol = whole.error_estimate + head.error_estimate + rest.error_estimate;
            assert!((sum - whole.value).abs() <= tol.max(1e-14 * whole.value), "mid {mid}");
        }
    }

    #[test]
    fn reports_convergence_failure() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        let tight = QuadratureConfig {
            rel_tol: 1e-15,
            max_panels: 8,
            ..cfg()
        };
        // A kink the rule cannot resolve in eight panels.
        let r = integrate_tail(|t| (-t).exp() * (t - 0.3333).abs().sqrt(), 0.0, &e, &tight);
        match r {
            Err(Error::Convergence { best, .. }) => assert!(best.value > 0.0),
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(QuadratureConfig { rel_tol: 0.0, ..cfg() }.validate().is_err());
        assert!(QuadratureConfig { max_panels: 4, ..cfg() }.validate().is_err());
        assert!(QuadratureConfig { truncation_mass: 1.0, ..cfg() }.validate().is_err());
    }
}
