//! Iterated distributions of convolution powers `S_n = X_1 + ... + X_n`.
//!
//! Densities live on uniform grids starting at zero. `f ∗ g` is computed by
//! product integration against a piecewise-cubic interpolant of `g`, with
//! the base density evaluated exactly; for an exponential base the running
//! recurrence `C(x+h) = e^{-λh} C(x) + λ∫_x^{x+h} e^{-λ(x+h-t)} g(t) dt` makes
//! a full grid pass `O(N)`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::csv::{format_number, CsvRecord};
use crate::dist::{ln_density, ln_raw_moment, ConvolutionMoments, DistributionSpec, Family};
use crate::error::{check_x, Error, Result};
use crate::iterate::{
    iterated_density, iterated_tail, stop_loss_gamma_closed, IterationIndex,
};
use crate::quadrature::legendre_nodes;
use crate::special::{ln_binomial_int, ln_factorial, log_sum_exp};

/// Target for the Richardson error estimate before refining.
const TARGET_ERROR: f64 = 1e-7;
/// Hard limit: past this the grid is reported as too coarse.
const MAX_ERROR: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 3;
const MASS_TOLERANCE: f64 = 1e-6;
const CELL_NODES: usize = 8;

/// Points `0, h, 2h, ..., cells·h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    step: f64,
    cells: usize,
}

impl Grid {
    /// Covers `[0, x_max]` with spacing at most `step`.
    pub fn uniform(x_max: f64, step: f64) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite() && step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid needs positive finite x_max and step, got {x_max} and {step}"
            )));
        }
        Self::with_cells(x_max, (x_max / step).ceil() as usize)
    }

    pub fn with_cells(x_max: f64, cells: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::InvalidParameter("grid needs at least 3 cells".into()));
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid x_max must be positive, got {x_max}")));
        }
        Ok(Self {
            step: x_max / cells as f64,
            cells,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_max(&self) -> f64 {
        self.step * self.cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.step * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.x(i))
    }

    pub fn refine(&self) -> Self {
        Self {
            step: 0.5 * self.step,
            cells: 2 * self.cells,
        }
    }

    fn coarsen(&self) -> Option<Self> {
        (self.cells % 2 == 0 && self.cells >= 6).then(|| Self {
            step: 2.0 * self.step,
            cells: self.cells / 2,
        })
    }

    /// First index of the 4-point interpolation stencil for cell `k`.
    fn stencil_start(&self, k: usize) -> usize {
        k.saturating_sub(1).min(self.cells - 3)
    }
}

/// A density sampled on a [`Grid`], interpolated by local cubics.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_covered("grid_function", x)?;
        let k = self.cell_of(x);
        Ok(self.cubic(k, (x - self.grid.x(k)) / self.grid.step))
    }

    fn check_covered(&self, op: &'static str, x: f64) -> Result<()> {
        check_x(op, x)?;
        let end = self.grid.x_max();
        if x > end * (1.0 + 1e-12) {
            return Err(Error::domain(op, format!("x = {x} beyond grid end {end}")));
        }
        Ok(())
    }

    fn cell_of(&self, x: f64) -> usize {
        ((x / self.grid.step) as usize).min(self.grid.cells - 1)
    }

    /// Cubic through the stencil of cell `k`, at `t_k + u·h`.
    fn cubic(&self, k: usize, u: f64) -> f64 {
        let start = self.grid.stencil_start(k);
        let offsets = stencil_offsets(start, k);
        let basis = lagrange4(&offsets, u);
        (0..4).map(|j| basis[j] * self.values[start + j]).sum()
    }
}

fn stencil_offsets(start: usize, k: usize) -> [f64; 4] {
    let o = start as f64 - k as f64;
    [o, o + 1.0, o + 2.0, o + 3.0]
}

fn lagrange4(nodes: &[f64; 4], u: f64) -> [f64; 4] {
    let mut out = [1.0; 4];
    for j in 0..4 {
        for m in 0..4 {
            if m != j {
                out[j] *= (u - nodes[m]) / (nodes[j] - nodes[m]);
            }
        }
    }
    out
}

fn cell_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    // Nodes and weights mapped to [0, 1].
    RULE.get_or_init(|| {
        let (n, w) = legendre_nodes(CELL_NODES);
        (n.iter().map(|v| 0.5 * (v + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
    })
}

fn base_density(base: &DistributionSpec, w: f64) -> f64 {
    ln_density(base, w).map(f64::exp).unwrap_or(0.0)
}

/// `∫_a^b f(x - t) g̃_k(t) dt` over part of cell `k`, with the substitution
/// `x - t = v^{1/α}` when `b = x` and the base density is singular at zero.
fn cell_integral(base: &DistributionSpec, g: &GridFunction, k: usize, a: f64, b: f64, x: f64) -> f64 {
    let (nodes, weights) = cell_rule();
    let h = g.grid.step;
    let t_k = g.grid.x(k);
    if b >= x && base.singular_at_zero() {
        let alpha = base.shape();
        let top = (x - a).powf(alpha);
        return nodes
            .iter()
            .zip(weights)
            .map(|(&u, &w)| {
                let v = u * top;
                let dist = v.powf(1.0 / alpha);
                let jac = ((1.0 / alpha - 1.0) * v.ln() - alpha.ln()).exp();
                let ln_f = ln_density(base, dist).unwrap_or(f64::NEG_INFINITY);
                w * top * (ln_f.exp() * jac) * g.cubic(k, (x - dist - t_k) / h)
            })
            .sum();
    }
    let len = b - a;
    nodes
        .iter()
        .zip(weights)
        .map(|(&u, &w)| {
            let t = a + u * len;
            w * len * base_density(base, x - t) * g.cubic(k, (t - t_k) / h)
        })
        .sum()
}

/// `(f ∗ g)(x) = ∫_0^x f(x - t) g(t) dt` with `f` the density of `base`.
pub fn conv_with_base(base: &DistributionSpec, g: &GridFunction, x: f64) -> Result<f64> {
    g.check_covered("conv_with_base", x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let h = g.grid.step;
    let last = g.cell_of(x);
    let mut total = 0.0;
    for k in 0..=last {
        let a = g.grid.x(k);
        let b = g.grid.x(k + 1).min(x);
        if b > a {
            total += cell_integral(base, g, k, a, b, x);
        }
    }
    debug_assert!(last as f64 * h <= x);
    Ok(total)
}

/// `f ∗ g` at every point of `g`'s grid.
pub fn conv_with_base_on_grid(base: &DistributionSpec, g: &GridFunction) -> Vec<f64> {
    if base.family() == Family::Exponential {
        conv_exponential(base.rate(), g)
    } else {
        conv_general(base, g)
    }
}

fn conv_exponential(lambda: f64, g: &GridFunction) -> Vec<f64> {
    let grid = g.grid;
    let h = grid.step;
    let (nodes, weights) = {
        let (n, w) = legendre_nodes(16);
        (
            n.iter().map(|v| 0.5 * (v + 1.0)).collect::<Vec<_>>(),
            w.iter().map(|v| 0.5 * v).collect::<Vec<_>>(),
        )
    };
    // Weights for the three stencil shapes: first cell, interior, last cell.
    let shape_weights = |offsets: [f64; 4]| {
        let mut out = [0.0; 4];
        for (&u, &w) in nodes.iter().zip(&weights) {
            let kernel = lambda * h * (-lambda * h * (1.0 - u)).exp() * w;
            let basis = lagrange4(&offsets, u);
            for j in 0..4 {
                out[j] += kernel * basis[j];
            }
        }
        out
    };
    let first = shape_weights([0.0, 1.0, 2.0, 3.0]);
    let interior = shape_weights([-1.0, 0.0, 1.0, 2.0]);
    let end = shape_weights([-2.0, -1.0, 0.0, 1.0]);
    let decay = (-lambda * h).exp();

    let mut out = vec![0.0; grid.len()];
    let mut running = 0.0;
    for k in 0..grid.cells {
        let start = grid.stencil_start(k);
        let w = if start == k {
            &first
        } else if start + 1 == k {
            &interior
        } else {
            &end
        };
        let increment: f64 = (0..4).map(|j| w[j] * g.values[start + j]).sum();
        running = decay * running + increment;
        out[k + 1] = running;
    }
    out
}

fn conv_general(base: &DistributionSpec, g: &GridFunction) -> Vec<f64> {
    let grid = g.grid;
    let h = grid.step;
    let (nodes, weights) = cell_rule();
    // interp[k][q]: interpolant of g at node q of cell k.
    let interp: Vec<[f64; CELL_NODES]> = (0..grid.cells)
        .map(|k| {
            let mut row = [0.0; CELL_NODES];
            for (q, &u) in nodes.iter().enumerate() {
                row[q] = g.cubic(k, u);
            }
            row
        })
        .collect();
    // kernel[d][q] = h·w_q·f((d - u_q)h): the base density only depends on i - k.
    let kernel: Vec<[f64; CELL_NODES]> = (0..=grid.cells)
        .map(|d| {
            let mut row = [0.0; CELL_NODES];
            if d >= 1 {
                for q in 0..CELL_NODES {
                    row[q] = h * weights[q] * base_density(base, (d as f64 - nodes[q]) * h);
                }
            }
            row
        })
        .collect();
    let singular = base.singular_at_zero();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let x = grid.x(i);
            let mut total = 0.0;
            for k in 0..i {
                let d = i - k;
                if d == 1 && singular {
                    total += cell_integral(base, g, k, grid.x(k), x, x);
                } else {
                    total += kernel[d].iter().zip(&interp[k]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            total
        })
        .collect()
}

/// `f_s^{n*}` on a grid: the s-iterated density of `S_n`.
#[derive(Debug, Clone)]
pub struct ConvolutionState {
    base: DistributionSpec,
    n: u32,
    s: IterationIndex,
    density: GridFunction,
    error_estimate: f64,
    mass: f64,
}

impl ConvolutionState {
    pub fn base(&self) -> &DistributionSpec {
        &self.base
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn s(&self) -> IterationIndex {
        self.s
    }

    /// The grid actually used, possibly refined from the requested one.
    pub fn grid(&self) -> &Grid {
        &self.density.grid
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density.values
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.density.eval(x)
    }

    /// Richardson estimate of the largest pointwise error.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    /// Grid mass plus the exact or decay-extrapolated mass beyond the grid.
    pub fn mass(&self) -> f64 {
        self.mass
    }
}

fn richardson(grid: &Grid, values: &[f64], build: &impl Fn(&Grid) -> Result<Vec<f64>>) -> Result<f64> {
    let diff = match grid.coarsen() {
        Some(coarse) => {
            let c = build(&coarse)?;
            c.iter().enumerate().map(|(i, v)| (v - values[2 * i]).abs()).fold(0.0, f64::max)
        }
        None => {
            let f = build(&grid.refine())?;
            values.iter().enumerate().map(|(i, v)| (v - f[2 * i]).abs()).fold(0.0, f64::max)
        }
    };
    Ok(diff / 15.0)
}

fn grid_mass(grid: &Grid, v: &[f64]) -> f64 {
    let h = grid.step;
    let n = v.len() - 1;
    let trapezoid = h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n]));
    let d0 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    let dn = (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h);
    trapezoid - h * h / 12.0 * (dn - d0)
}

fn mass_beyond(base: &DistributionSpec, n: u32, s: IterationIndex, grid: &Grid, v: &[f64]) -> Result<f64> {
    let end = grid.x_max();
    let sum_spec = match (base.family(), base.integer_shape()) {
        (Family::Weibull, _) => None,
        (_, Some(a)) => Some(DistributionSpec::erlang(a * n, base.scale())?),
        _ => Some(DistributionSpec::gamma(base.shape() * n as f64, base.scale())?),
    };
    Ok(match sum_spec {
        Some(spec) => iterated_tail(&spec, s, end)?.value_or_zero(),
        None => {
            let last = v[v.len() - 1];
            if last <= 0.0 {
                0.0
            } else {
                let rate = (v[v.len() - 2].ln() - last.ln()) / grid.step;
                if rate > 0.0 {
                    last / rate
                } else {
                    f64::INFINITY
                }
            }
        }
    })
}

fn build_state(
    base: &DistributionSpec,
    n: u32,
    s: IterationIndex,
    grid: &Grid,
    build: impl Fn(&Grid) -> Result<Vec<f64>>,
) -> Result<ConvolutionState> {
    let mut grid = *grid;
    let mut attempt = 0;
    let (values, estimate) = loop {
        let values = build(&grid)?;
        let estimate = richardson(&grid, &values, &build)?;
        if estimate <= TARGET_ERROR || attempt == MAX_REFINEMENTS {
            break (values, estimate);
        }
        grid = grid.refine();
        attempt += 1;
    };
    if estimate > MAX_ERROR {
        return Err(Error::Resolution {
            estimate,
            tolerance: MAX_ERROR,
        });
    }
    let mass = grid_mass(&grid, &values) + mass_beyond(base, n, s, &grid, &values)?;
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Resolution {
            estimate: (mass - 1.0).abs(),
            tolerance: MASS_TOLERANCE,
        });
    }
    Ok(ConvolutionState {
        base: *base,
        n,
        s,
        density: GridFunction { grid, values },
        error_estimate: estimate,
        mass,
    })
}

fn require_s2(s: IterationIndex) -> Result<()> {
    if s.get() < 2 {
        return Err(Error::InvalidParameter("convolution recursions need s >= 2".into()));
    }
    Ok(())
}

/// Gamma recursion on the convolution power, `S_n ~ Gamma(n, 1/λ)`:
///
/// `f_s^{n*} = (n-1)/(n+s-2) · f ∗ f_s^{(n-1)*} + (s-1)/(n+s-2) · f`.
pub fn gamma_iterated_density_recursion(
    n: u32,
    lambda: f64,
    s: IterationIndex,
    grid: &Grid,
) -> Result<ConvolutionState> {
    require_s2(s)?;
    if n == 0 {
        return Err(Error::InvalidParameter("convolution power n must be >= 1".into()));
    }
    let base = DistributionSpec::exponential(lambda)?;
    let sf = s.get() as f64;
    build_state(&base, n, s, grid, |grid| {
        let f = GridFunction::from_fn(*grid, |x| lambda * (-lambda * x).exp());
        let mut current = f.clone();
        for k in 2..=n {
            let kf = k as f64;
            let conv = conv_with_base_on_grid(&base, &current);
            let (a, b) = ((kf - 1.0) / (kf + sf - 2.0), (sf - 1.0) / (kf + sf - 2.0));
            current.values = conv.iter().zip(&f.values).map(|(c, fv)| a * c + b * fv).collect();
        }
        Ok(current.values)
    })
}

/// General recursion on the convolution power, for any base:
///
/// `f_s^{n*} = μ^{(n-1)*}_{s-1}/μ^{n*}_{s-1} · f ∗ f_s^{(n-1)*}
///   + 1/μ^{n*}_{s-1} · Σ_{ℓ=1}^{s-1} C(s-1,ℓ) μ^{(n-1)*}_{s-ℓ-1} μ_ℓ f_{ℓ+1}`
///
/// where `μ^{k*}_j = E S_k^j` and `f_{ℓ+1}` are iterated densities of the base.
pub fn general_iterated_convolution(
    base: &DistributionSpec,
    n: u32,
    s: IterationIndex,
    grid: &Grid,
) -> Result<ConvolutionState> {
    require_s2(s)?;
    if n < 2 {
        return Err(Error::InvalidParameter("convolution power n must be >= 2".into()));
    }
    let sv = s.get();
    let moments = ConvolutionMoments::new(base, n, sv - 1);
    build_state(base, n, s, grid, |grid| {
        let points: Vec<f64> = grid.points().collect();
        // iterated[j] = f_{j+2} of the base on the grid, j = 0..s-2.
        let iterated: Vec<Vec<f64>> = (2..=sv)
            .map(|j| {
                let j = IterationIndex::new(j)?;
                points
                    .par_iter()
                    .map(|&x| iterated_density(base, j, x).map(|e| e.value_or_zero()))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let mut current = GridFunction {
            grid: *grid,
            values: iterated[sv as usize - 2].clone(),
        };
        for k in 2..=n {
            let ln_mu = moments.ln_moment(k, sv - 1);
            let a = (moments.ln_moment(k - 1, sv - 1) - ln_mu).exp();
            let coefs: Vec<f64> = (1..sv)
                .map(|l| {
                    (ln_binomial_int((sv - 1) as u64, l as u64)
                        + moments.ln_moment(k - 1, sv - l - 1)
                        + ln_raw_moment(base, l)
                        - ln_mu)
                        .exp()
                })
                .collect();
            let conv = conv_with_base_on_grid(base, &current);
            current.values = (0..points.len())
                .map(|i| {
                    let tail_terms: f64 =
                        coefs.iter().enumerate().map(|(l, c)| c * iterated[l][i]).sum();
                    a * conv[i] + tail_terms
                })
                .collect();
        }
        Ok(current.values)
    })
}

/// Density of the s-iterate of `Gamma(shape, 1/λ)` for integer shape, as
/// `-d/dx` of the closed-form tail:
///
/// `f_s(x) = λ e^{-y} Σ_{k=0}^{α-1} C(s+α-k-3, α-k-1)/C(α+s-2, α-1) · y^k/k!`, `y = λx`.
///
/// Adjacent tail coefficients differ by a single binomial (Pascal's rule),
/// so every term is positive.
pub fn gamma_iterated_density_closed(shape: u32, lambda: f64, s: IterationIndex, x: f64) -> Result<f64> {
    check_x("gamma_iterated_density_closed", x)?;
    require_s2(s)?;
    if shape == 0 || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need integer shape >= 1 and rate > 0, got {shape} and {lambda}"
        )));
    }
    let (a, sv) = (shape as u64, s.get() as u64);
    let y = lambda * x;
    let ln_norm = ln_binomial_int(a + sv - 2, a - 1);
    let terms = (0..a).map(|k| {
        let poly = if k == 0 { 0.0 } else { k as f64 * y.ln() };
        ln_binomial_int(sv + a - k - 3, a - k - 1) - ln_norm + poly - ln_factorial(k)
    });
    Ok((lambda.ln() - y + log_sum_exp(terms)).exp())
}

fn check_difference_args(n: u32, lambda: f64, s: IterationIndex, x: f64) -> Result<()> {
    check_x("gamma_difference", x)?;
    require_s2(s)?;
    if n < 2 {
        return Err(Error::InvalidParameter("convolution power n must be >= 2".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate must be positive, got {lambda}")));
    }
    Ok(())
}

/// `μ^{n*}_{s-1} f_s^{n*}(x) - μ^{(n-1)*}_{s-1} f_s^{(n-1)*}(x)` for an
/// exponential base, i.e. `(s-1)[E(S_n-x)_+^{s-2} - E(S_{n-1}-x)_+^{s-2}]`.
///
/// With `r = s-2`, `y = λx` the difference has the positive expansion
/// `λ^{-r} e^{-y} [Σ_{k=0}^{n-2} r (r+n-2-k)!/(n-1-k)! · y^k/k! + r! y^{n-1}/(n-1)!]`.
pub fn gamma_difference_oracle(n: u32, lambda: f64, s: IterationIndex, x: f64) -> Result<f64> {
    check_difference_args(n, lambda, s, x)?;
    let r = (s.get() - 2) as u64;
    let n = n as u64;
    let y = lambda * x;
    let ln_pow = |k: u64| if k == 0 { 0.0 } else { k as f64 * y.ln() };
    let mixed = (0..=n - 2).filter(|_| r > 0).map(|k| {
        (r as f64).ln() + ln_factorial(r + n - 2 - k) - ln_factorial(n - 1 - k) + ln_pow(k)
            - ln_factorial(k)
    });
    let top = ln_factorial(r) + ln_pow(n - 1) - ln_factorial(n - 1);
    let ln_bracket = log_sum_exp(mixed.chain(std::iter::once(top)));
    let s1 = (s.get() - 1) as f64;
    Ok((s1.ln() - r as f64 * lambda.ln() - y + ln_bracket).exp())
}

/// The same difference from the two stop-loss closed forms, subtracted.
/// Kept as a cross-check of [`gamma_difference_oracle`].
pub fn gamma_difference_by_stop_loss(n: u32, lambda: f64, s: IterationIndex, x: f64) -> Result<f64> {
    check_difference_args(n, lambda, s, x)?;
    let r = s.get() - 2;
    let y = lambda * x;
    let scale = -(r as f64) * lambda.ln();
    let hi = (stop_loss_gamma_closed(n, y, r) + scale).exp();
    let lo = (stop_loss_gamma_closed(n - 1, y, r) + scale).exp();
    Ok((s.get() - 1) as f64 * (hi - lo))
}

/// The printed right-hand side under test:
///
/// `(s-1)!/λ^{s-1} · [λ^{n-1} x^{n-2}/(n-2)! · e^{-λx}(λx/(n-1) - 1) + 1 - C(n+s-4, s-2)
///   + e^{-λx} Σ_{k=2}^{n-2} C(s+k-2, k) λ^{n-k} x^{n-k-1}/(n-k-1)!]`
///
/// Empty sums are zero.
pub fn gamma_difference_paper_formula(
    n: u32,
    lambda: f64,
    s: IterationIndex,
    x: f64,
) -> Result<DiscrepancyRow> {
    check_difference_args(n, lambda, s, x)?;
    let (nu, sv) = (n as u64, s.get() as u64);
    let decay = (-lambda * x).exp();
    let first = lambda.powi(n as i32 - 1) * x.powi(n as i32 - 2) / ln_factorial(nu - 2).exp()
        * decay
        * (lambda * x / (n as f64 - 1.0) - 1.0);
    let binomial = ln_binomial_int(nu + sv - 4, sv - 2).exp();
    let sum: f64 = (2..=nu.saturating_sub(2))
        .map(|k| {
            ln_binomial_int(sv + k - 2, k).exp() * lambda.powi((nu - k) as i32)
                * x.powi((nu - k - 1) as i32)
                / ln_factorial(nu - k - 1).exp()
        })
        .sum();
    let prefactor = (ln_factorial(sv - 1) - (sv - 1) as f64 * lambda.ln()).exp();
    let paper_formula = prefactor * (first + 1.0 - binomial + decay * sum);
    let oracle = gamma_difference_oracle(n, lambda, s, x)?;
    Ok(DiscrepancyRow {
        n,
        s: s.get(),
        x,
        paper_formula,
        oracle,
        abs_diff: (paper_formula - oracle).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyRow {
    pub n: u32,
    pub s: u32,
    pub x: f64,
    pub paper_formula: f64,
    pub oracle: f64,
    pub abs_diff: f64,
}

impl CsvRecord for DiscrepancyRow {
    fn header() -> &'static [&'static str] {
        &["n", "s", "x", "paper_formula", "oracle", "abs_diff"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.s.to_string(),
            format_number(self.x),
            format_number(self.paper_formula),
            format_number(self.oracle),
            format_number(self.abs_diff),
        ]
    }
}

/// The printed formula against the oracle on every `(n, s, x)` combination.
pub fn discrepancy_report(lambda: f64, ns: &[u32], ss: &[u32], xs: &[f64]) -> Result<Vec<DiscrepancyRow>> {
    let mut rows = Vec::with_capacity(ns.len() * ss.len() * xs.len());
    for &n in ns {
        for &s in ss {
            let s = IterationIndex::new(s)?;
            for &x in xs {
                rows.push(gamma_difference_paper_formula(n, lambda, s, x)?);
            }
        }
    }
    Ok(rows)
}
