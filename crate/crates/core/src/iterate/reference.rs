//! Independent oracle: integrate the defining recursion
//! `T̄_{k+1}(x) = ∫_x^∞ T̄_k(t) dt / μ_k`, `T̄_1 = F̄`, one level at a time.
//!
//! Each level is held at Gauss–Legendre nodes on a panel mesh and the next
//! level is obtained by exact integration of the per-panel interpolant, so
//! no stop-loss transform or closed form is involved.

use std::sync::OnceLock;

use super::{IteratedEvaluation, IterationIndex, Method};
use crate::dist::{ln_tail, tail, DistributionSpec};
use crate::error::{check_x, Error, Result};
use crate::quadrature::legendre_nodes;

pub const MAX_REFERENCE_DEPTH: u32 = 8;

const NODES: usize = 16;
/// Mesh ends where `ln F̄(T) + s ln(1 + T)` drops below this.
const LN_TRUNCATION: f64 = -45.0;
/// Geometric grading toward zero stops at `2^-GRADING`.
const GRADING: i32 = 45;

struct Rule {
    nodes: [f64; NODES],
    weights: [f64; NODES],
    bary: [f64; NODES],
    /// `cumulative[i][j] = ∫_{ξ_i}^1 L_j`.
    cumulative: [[f64; NODES]; NODES],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (n, w) = legendre_nodes(NODES);
        let mut rule = Rule {
            nodes: [0.0; NODES],
            weights: [0.0; NODES],
            bary: [0.0; NODES],
            cumulative: [[0.0; NODES]; NODES],
        };
        rule.nodes.copy_from_slice(&n);
        rule.weights.copy_from_slice(&w);
        for j in 0..NODES {
            let prod: f64 = (0..NODES)
                .filter(|&k| k != j)
                .map(|k| rule.nodes[j] - rule.nodes[k])
                .product();
            rule.bary[j] = 1.0 / prod;
        }
        for i in 0..NODES {
            rule.cumulative[i] = rule.partial_weights(rule.nodes[i]);
        }
        rule
    })
}

impl Rule {
    /// Values of all Lagrange basis polynomials at `u`.
    fn basis(&self, u: f64) -> [f64; NODES] {
        let mut out = [0.0; NODES];
        if let Some(j) = self.nodes.iter().position(|&x| x == u) {
            out[j] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for j in 0..NODES {
            out[j] = self.bary[j] / (u - self.nodes[j]);
            denom += out[j];
        }
        out.iter_mut().for_each(|v| *v /= denom);
        out
    }

    /// `∫_u^1 L_j(v) dv` for every `j`; exact since `L_j` has degree `NODES-1`.
    fn partial_weights(&self, u: f64) -> [f64; NODES] {
        let half = 0.5 * (1.0 - u);
        let mut out = [0.0; NODES];
        for q in 0..NODES {
            let v = u + half * (self.nodes[q] + 1.0);
            let b = self.basis(v);
            for j in 0..NODES {
                out[j] += half * self.weights[q] * b[j];
            }
        }
        out
    }
}

/// The tabulated level `s - 1` from which `T̄_s` is read off.
#[derive(Debug, Clone)]
pub struct ReferenceIteration {
    spec: DistributionSpec,
    s: IterationIndex,
    breaks: Vec<f64>,
    /// Level `s-1` at the nodes, panel-major. Empty when `s = 1`.
    values: Vec<f64>,
    /// `∫_{breaks[p]}^T` of level `s-1`.
    right: Vec<f64>,
    ln_means: Vec<f64>,
}

impl ReferenceIteration {
    pub fn build(spec: &DistributionSpec, s: IterationIndex) -> Result<Self> {
        if s.get() > MAX_REFERENCE_DEPTH {
            return Err(Error::UnsupportedDepth {
                requested: s.get(),
                max: MAX_REFERENCE_DEPTH,
            });
        }
        let unit = spec.unit_scale();
        let breaks = mesh(&unit, s.get())?;
        let rule = rule();
        let panels = breaks.len() - 1;

        let mut values = Vec::with_capacity(panels * NODES);
        for p in 0..panels {
            let (a, b) = (breaks[p], breaks[p + 1]);
            for &xi in &rule.nodes {
                values.push(tail(&unit, 0.5 * (a + b) + 0.5 * (b - a) * xi)?);
            }
        }

        let mut right = vec![0.0; breaks.len()];
        let mut ln_means = Vec::new();
        for level in 1..s.get() {
            for p in (0..panels).rev() {
                let half = 0.5 * (breaks[p + 1] - breaks[p]);
                let g = &values[p * NODES..(p + 1) * NODES];
                let integral: f64 = half * g.iter().zip(&rule.weights).map(|(v, w)| v * w).sum::<f64>();
                right[p] = right[p + 1] + integral;
            }
            let mean = right[0];
            ln_means.push(mean.ln());
            if level + 1 == s.get() {
                break;
            }
            let mut next = Vec::with_capacity(values.len());
            for p in 0..panels {
                let half = 0.5 * (breaks[p + 1] - breaks[p]);
                let g = &values[p * NODES..(p + 1) * NODES];
                for row in &rule.cumulative {
                    let inner: f64 = row.iter().zip(g).map(|(c, v)| c * v).sum();
                    next.push((right[p + 1] + half * inner) / mean);
                }
            }
            values = next;
        }
        if s.get() == 1 {
            values.clear();
        }

        Ok(Self {
            spec: *spec,
            s,
            breaks,
            values,
            right,
            ln_means,
        })
    }

    /// `ln μ_k` for `k = 1..s-1`, where `μ_k = ∫ T̄_k` is the mean of the k-iterate.
    pub fn ln_level_means(&self) -> &[f64] {
        &self.ln_means
    }

    pub fn panels(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Right end of the mesh in the units of `spec`; beyond it the tail is 0.
    pub fn truncation_point(&self) -> f64 {
        self.breaks.last().copied().unwrap_or(0.0) * self.spec.scale()
    }

    pub fn tail(&self, x: f64) -> Result<IteratedEvaluation> {
        check_x("reference_iterated_tail", x)?;
        let log_value = if self.s.get() == 1 {
            ln_tail(&self.spec, x)?
        } else {
            self.linear_tail(x / self.spec.scale()).ln().min(0.0)
        };
        Ok(IteratedEvaluation {
            spec: self.spec,
            s: self.s,
            method: Method::ReferenceRecursion,
            log_value,
        })
    }

    fn linear_tail(&self, y: f64) -> f64 {
        let last = self.breaks.len() - 1;
        if y >= self.breaks[last] {
            return 0.0;
        }
        let p = self.breaks.partition_point(|&b| b <= y).saturating_sub(1);
        let (a, b) = (self.breaks[p], self.breaks[p + 1]);
        let half = 0.5 * (b - a);
        let u = ((y - a) / half - 1.0).clamp(-1.0, 1.0);
        let w = rule().partial_weights(u);
        let g = &self.values[p * NODES..(p + 1) * NODES];
        let inner: f64 = w.iter().zip(g).map(|(c, v)| c * v).sum();
        let mean = self.ln_means.last().copied().unwrap_or(0.0).exp();
        ((self.right[p + 1] + half * inner) / mean).max(0.0)
    }
}

fn mesh(unit: &DistributionSpec, s: u32) -> Result<Vec<f64>> {
    let mut end = 1.0f64;
    while ln_tail(unit, end)? + s as f64 * end.ln_1p() > LN_TRUNCATION {
        end *= 1.25;
    }
    let mut breaks = vec![0.0];
    breaks.extend((0..=GRADING).rev().map(|k| 2f64.powi(-k)));
    let mut t = 1.0;
    while t < end {
        t += 0.25 * (0.2 * t).max(1.0);
        breaks.push(t);
    }
    Ok(breaks)
}

/// `T̄_s(x)` by the level-by-level recursion, for `s ≤ 8`.
pub fn reference_iterated_tail(
    spec: &DistributionSpec,
    s: IterationIndex,
    x: f64,
) -> Result<IteratedEvaluation> {
    ReferenceIteration::build(spec, s)?.tail(x)
}
