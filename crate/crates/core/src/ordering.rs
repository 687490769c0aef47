//! Grid checks of the s-FR order: `X ≤_{s-FR} Y` when `T̄_{Y,s}/T̄_{X,s}` is
//! nondecreasing. A passing grid is numerical evidence, not a proof.

use rayon::prelude::*;

use crate::csv::{format_number, CsvRecord};
use crate::dist::{DistributionSpec, LOG_TAIL_FLOOR};
use crate::error::{check_x, Error, Result};
use crate::iterate::{iterated_density, iterated_tail, IterationIndex};

pub const DEFAULT_ORDER_TOL: f64 = 1e-9;

/// Whether `values` never decrease by more than `tol`, and the largest decrease.
pub fn check_log_ratio_monotone(values: &[f64], tol: f64) -> (bool, f64) {
    let max_violation = values.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    (max_violation <= tol, max_violation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCheckResult {
    pub spec_x: DistributionSpec,
    pub spec_y: DistributionSpec,
    pub s: IterationIndex,
    /// Grid points kept after dropping tail underflows.
    pub grid: Vec<f64>,
    /// `ln T̄_{Y,s} - ln T̄_{X,s}` at each kept point.
    pub log_ratio: Vec<f64>,
    pub monotone_nondecreasing: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    /// Points removed because a log tail fell below the floor.
    pub dropped: usize,
}

impl OrderCheckResult {
    pub fn ratio_values(&self) -> Vec<f64> {
        self.log_ratio.iter().map(|l| l.exp()).collect()
    }

    pub fn rows(&self) -> Vec<OrderRow> {
        self.grid
            .iter()
            .zip(&self.log_ratio)
            .map(|(&x, &l)| OrderRow {
                x,
                log_ratio: l,
                monotone: self.monotone_nondecreasing,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderRow {
    pub x: f64,
    pub log_ratio: f64,
    pub monotone: bool,
}

impl CsvRecord for OrderRow {
    fn header() -> &'static [&'static str] {
        &["x", "log_ratio", "monotone_flag"]
    }

    fn fields(&self) -> Vec<String> {
        vec![format_number(self.x), format_number(self.log_ratio), self.monotone.to_string()]
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("order grid is empty".into()));
    }
    for &x in grid {
        check_x("sfr_check", x)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("order grid must be strictly increasing".into()));
    }
    Ok(())
}

pub fn sfr_check(
    spec_x: &DistributionSpec,
    spec_y: &DistributionSpec,
    s: IterationIndex,
    grid: &[f64],
    tol: f64,
) -> Result<OrderCheckResult> {
    check_grid(grid)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be nonnegative, got {tol}")));
    }
    let tails = grid
        .par_iter()
        .map(|&x| {
            let ly = iterated_tail(spec_y, s, x)?.log_value;
            let lx = iterated_tail(spec_x, s, x)?.log_value;
            Ok((x, ly, lx))
        })
        .collect::<Result<Vec<_>>>()?;
    let (kept, dropped): (Vec<_>, Vec<_>) = tails
        .into_iter()
        .partition(|&(_, ly, lx)| ly >= LOG_TAIL_FLOOR && lx >= LOG_TAIL_FLOOR);
    let log_ratio: Vec<f64> = kept.iter().map(|&(_, ly, lx)| ly - lx).collect();
    let (monotone, max_violation) = check_log_ratio_monotone(&log_ratio, tol);
    Ok(OrderCheckResult {
        spec_x: *spec_x,
        spec_y: *spec_y,
        s,
        grid: kept.iter().map(|t| t.0).collect(),
        log_ratio,
        monotone_nondecreasing: monotone,
        max_violation,
        tolerance: tol,
        dropped: dropped.len(),
    })
}

/// Checks at `s` and `s + 1`: the order at `s` should imply the order at `s + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeredityProbe {
    pub at_s: OrderCheckResult,
    pub at_next: OrderCheckResult,
}

impl HeredityProbe {
    pub fn implication_holds(&self) -> bool {
        !self.at_s.monotone_nondecreasing || self.at_next.monotone_nondecreasing
    }
}

pub fn sfr_heredity_probe(
    spec_x: &DistributionSpec,
    spec_y: &DistributionSpec,
    s: IterationIndex,
    grid: &[f64],
    tol: f64,
) -> Result<HeredityProbe> {
    Ok(HeredityProbe {
        at_s: sfr_check(spec_x, spec_y, s, grid, tol)?,
        at_next: sfr_check(spec_x, spec_y, s.next(), grid, tol)?,
    })
}

/// `f_s(x) / T̄_s(x)`, the failure rate of the s-iterate.
pub fn iterated_failure_rate(spec: &DistributionSpec, s: IterationIndex, x: f64) -> Result<f64> {
    check_x("iterated_failure_rate", x)?;
    if x == 0.0 {
        return Err(Error::domain("iterated_failure_rate", "x must be > 0"));
    }
    let lt = iterated_tail(spec, s, x)?.log_value;
    if lt < LOG_TAIL_FLOOR {
        return Err(Error::Underflow {
            op: "iterated_failure_rate",
            x,
            log_tail: lt,
        });
    }
    Ok((iterated_density(spec, s, x)?.log_value - lt).exp())
}
