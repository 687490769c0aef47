use itereq::iterate::{iterated_tail, stop_loss};
use itereq::limits::{
    convergence_report, gamma_ratio_diagnostic, limit_tail, stop_loss_approx_gamma, weibull_stop_loss_bounds,
    weibull_tail_upper_bound, weibull_tail_upper_bound_corrected, LimitKind,
};
use itereq::special::ln_gamma;
use itereq::{DistributionSpec, IterationIndex};

fn idx(s: u32) -> IterationIndex {
    IterationIndex::new(s).unwrap()
}

#[test]
fn stop_loss_approximation_is_exact_for_shape_one() {
    let e = DistributionSpec::exponential(1.0).unwrap();
    for s in [1, 2, 10, 50, 300] {
        for x in [0.0, 0.5, 1.0, 7.0] {
            let approx = stop_loss_approx_gamma(1.0, 1.0, idx(s), x).unwrap();
            let exact = stop_loss(&e, x, s - 1).unwrap();
            assert!((approx - exact).abs() <= 1e-12 * exact.abs().max(1.0), "s={s} x={x}");
        }
    }
}

#[test]
fn stop_loss_approximation_error_at_large_s() {
    let g = DistributionSpec::erlang(2, 1.0).unwrap();
    let unit = (stop_loss_approx_gamma(2.0, 1.0, idx(200), 1.0).unwrap() - stop_loss(&g, 1.0, 199).unwrap()).exp() - 1.0;
    assert!(unit.abs() < 0.02, "{unit}");
    let g3 = DistributionSpec::erlang(2, 3.0).unwrap();
    let scaled = (stop_loss_approx_gamma(2.0, 3.0, idx(200), 3.0).unwrap() - stop_loss(&g3, 3.0, 199).unwrap()).exp() - 1.0;
    assert!((scaled - unit).abs() < 1e-10, "{scaled} vs {unit}");
}

#[test]
fn gamma_ratio_diagnostic_cases() {
    for s in [2, 5, 50, 500] {
        assert!((gamma_ratio_diagnostic(1.0, idx(s)).unwrap() - 1.0).abs() < 1e-12);
    }
    let half: Vec<f64> = [10, 100, 1000].iter().map(|&s| gamma_ratio_diagnostic(0.5, idx(s)).unwrap()).collect();
    assert!(half[0] > half[1] && half[1] > half[2]);
    assert!((half[2] / (0.25 / 1000.0) - 1.0).abs() < 0.1, "{half:?}");
    let two: Vec<f64> = [10, 100].iter().map(|&s| gamma_ratio_diagnostic(2.0, idx(s)).unwrap()).collect();
    assert!(two[1] > two[0]);
}

#[test]
fn weibull_bound_forms() {
    let b = weibull_tail_upper_bound(2.0, idx(2), 1.0).unwrap();
    assert!((b - ((-1.0f64).exp() / (ln_gamma(1.5).exp() * 2.0)).ln()).abs() < 1e-13);
    let w = DistributionSpec::weibull(2.0, 1.0).unwrap();
    let bounds: Vec<f64> = (2..=60).map(|s| weibull_tail_upper_bound(2.0, idx(s), 1.0).unwrap()).collect();
    assert!(bounds.windows(2).all(|p| p[1] < p[0]));
    assert!(weibull_tail_upper_bound(2.0, idx(500), 1.0).unwrap() < -500.0);
    for s in 2..=40 {
        for x in [0.5, 1.0, 2.0] {
            let lt = iterated_tail(&w, idx(s), x).unwrap().log_value;
            assert!(lt <= weibull_tail_upper_bound_corrected(2.0, idx(s), x).unwrap() + 1e-12, "s={s} x={x}");
        }
    }
    // As usually stated the bound holds only for small s.
    for s in [2, 3] {
        assert!(iterated_tail(&w, idx(s), 1.0).unwrap().log_value <= weibull_tail_upper_bound(2.0, idx(s), 1.0).unwrap());
    }
    assert!(iterated_tail(&w, idx(4), 1.0).unwrap().log_value > weibull_tail_upper_bound(2.0, idx(4), 1.0).unwrap());
    assert!(weibull_tail_upper_bound(1.0, idx(2), 1.0).is_err());
}

#[test]
fn weibull_stop_loss_brackets() {
    for s in [1, 5, 20] {
        let b = weibull_stop_loss_bounds(0.5, s, 0.3, 0.0).unwrap();
        assert_eq!(b.ln_lower, b.ln_upper);
        assert!((b.ln_stop_loss - b.ln_upper).abs() < 1e-12);
    }
    let b = weibull_stop_loss_bounds(0.5, 20, 0.1, 1.0).unwrap();
    assert!(b.lower_holds && b.upper_holds);
    assert!((weibull_stop_loss_bounds(0.5, 10, 0.1, 2.0).unwrap().ln_upper - ln_gamma(21.0)).abs() < 1e-12);
    assert!(weibull_stop_loss_bounds(1.0, 10, 0.1, 2.0).is_err());
}

#[test]
fn limits_and_reports() {
    let g = DistributionSpec::gamma(3.7, 2.0).unwrap();
    assert!((limit_tail(&g, 2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(limit_tail(&DistributionSpec::weibull(2.0, 1.0).unwrap(), 1.0).unwrap(), 0.0);
    assert_eq!(limit_tail(&DistributionSpec::weibull(2.0, 1.0).unwrap(), 0.0).unwrap(), 1.0);
    assert_eq!(limit_tail(&DistributionSpec::weibull(0.5, 1.0).unwrap(), 5.0).unwrap(), 1.0);

    let xs: Vec<f64> = (0..50).map(|i| 10.0 * i as f64 / 49.0).collect();
    let e = convergence_report(&DistributionSpec::exponential(1.0).unwrap(), &xs, &[1, 10, 100]).unwrap();
    assert!(e.sup_distance.iter().all(|&d| d < 1e-10));
    let w = convergence_report(&DistributionSpec::weibull(2.0, 1.0).unwrap(), &xs, &[1, 2, 5, 20]).unwrap();
    assert_eq!(w.limit_kind, LimitKind::DegenerateZero);
    assert!(w.dropped_zero);
    assert!(w.monotone_in_s(0.0));
    let g5 = convergence_report(&DistributionSpec::erlang(5, 1.0).unwrap(), &xs, &[2, 200]).unwrap();
    assert!(g5.sup_distance[1] < g5.sup_distance[0]);
    assert!(g5.sup_distance[1] < 7.31e-3);
}
