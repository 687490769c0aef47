//! Prints the measured values frozen as acceptance fixtures.
//!
//! cargo run --release -p itereq --example measure_fixtures

use itereq::iterate::iterated_tail;
use itereq::limits::{convergence_report, measure_s0};
use itereq::{DistributionSpec, IterationIndex};

fn main() -> itereq::Result<()> {
    let xs: Vec<f64> = (0..50).map(|i| 10.0 * i as f64 / 49.0).collect();
    let s_values = [1, 2, 5, 10, 20, 50, 100, 200, 500];
    for spec in [
        DistributionSpec::gamma(0.5, 1.0)?,
        DistributionSpec::erlang(2, 1.0)?,
        DistributionSpec::erlang(5, 1.0)?,
    ] {
        let r = convergence_report(&spec, &xs, &s_values)?;
        println!("{spec}: {:?}", r.s_values.iter().zip(&r.sup_distance).collect::<Vec<_>>());
    }

    let w = DistributionSpec::weibull(0.5, 1.0)?;
    for s in 1..=12 {
        let t = iterated_tail(&w, IterationIndex::new(s)?, 1.0)?.value_or_zero();
        println!("weibull(0.5) s={s} tail(1)={t:.10}");
    }

    let grid = [0.5, 1.0, 2.0, 5.0];
    for beta in [0.05, 0.1, 0.2, 0.5] {
        println!("beta={beta} s0={:?}", measure_s0(0.5, beta, &grid, 40)?);
    }
    Ok(())
}
