use itereq::iterate::{iterated_density, iterated_tail, iterated_tail_with, reference_iterated_tail};
use itereq::quadrature::integrate_logspace;
use itereq::{DistributionSpec, IterationIndex, QuadratureConfig};
use proptest::prelude::*;

fn idx(s: u32) -> IterationIndex {
    IterationIndex::new(s).unwrap()
}

fn t(spec: &DistributionSpec, s: u32, x: f64) -> f64 {
    iterated_tail(spec, idx(s), x).unwrap().log_value.exp()
}

fn mixed_specs() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::erlang(3, 1.0).unwrap(),
        DistributionSpec::gamma(2.5, 1.0).unwrap(),
        DistributionSpec::gamma(0.5, 1.0).unwrap(),
        DistributionSpec::weibull(0.5, 1.0).unwrap(),
        DistributionSpec::weibull(2.0, 1.0).unwrap(),
    ]
}

proptest! {
    #[test]
    fn exponential_is_a_fixed_point(lambda in 0.01..50.0f64, s in 1u32..=100, u in 0.0..1.0f64) {
        let e = DistributionSpec::exponential(lambda).unwrap();
        let x = 20.0 * u / lambda;
        prop_assert!((t(&e, s, x) - (-lambda * x).exp()).abs() < 1e-10);
    }

    #[test]
    fn closed_form_matches_quadrature_on_random_points(a in 2u32..=8, s in 2u32..=60, x in 0.0..20.0f64) {
        let closed = DistributionSpec::erlang(a, 1.0).unwrap();
        let real = DistributionSpec::gamma(a as f64, 1.0).unwrap();
        prop_assert!((t(&closed, s, x) - t(&real, s, x)).abs() < 1e-8);
    }
}

#[test]
fn scale_equivariance() {
    for spec in mixed_specs() {
        for theta in [0.3, 2.0, 7.0] {
            let scaled = spec.with_scale(theta).unwrap();
            for s in [1, 2, 5] {
                for x in [0.0, 0.4, 1.0, 3.0, 9.0] {
                    let a = t(&scaled, s, x);
                    let b = t(&spec, s, x / theta);
                    assert!((a - b).abs() < 1e-12, "{scaled} s={s} x={x}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn iterated_density_integrates_to_one() {
    let cfg = QuadratureConfig::default();
    for spec in mixed_specs() {
        for s in [1, 2, 3, 6] {
            let r = integrate_logspace(
                |x| iterated_density(&spec, idx(s), x).map(|e| e.log_value).unwrap_or(f64::NAN),
                0.0,
                &spec,
                &cfg,
            )
            .unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "{spec} s={s}: {}", r.value);
        }
    }
}

#[test]
fn minus_tail_derivative_is_density() {
    let cfg = QuadratureConfig::default().with_rel_tol(1e-13);
    let tail = |spec: &DistributionSpec, s: u32, x: f64| iterated_tail_with(spec, idx(s), x, &cfg).unwrap().log_value.exp();
    for spec in mixed_specs() {
        for s in [2, 3, 5] {
            for x in [0.3, 1.0, 2.5] {
                let h = 1e-3;
                let fd = (8.0 * (tail(&spec, s, x - h) - tail(&spec, s, x + h)) - (tail(&spec, s, x - 2.0 * h) - tail(&spec, s, x + 2.0 * h)))
                    / (12.0 * h);
                let f = iterated_density(&spec, idx(s), x).unwrap().log_value.exp();
                assert!((fd - f).abs() < 1e-6 * f, "{spec} s={s} x={x}: {fd} vs {f}");
            }
        }
    }
}

#[test]
fn gamma_tails_are_monotone_in_s() {
    let xs: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
    for (spec, above_one) in [
        (DistributionSpec::gamma(1.5, 1.0).unwrap(), true),
        (DistributionSpec::gamma(2.5, 1.0).unwrap(), true),
        (DistributionSpec::erlang(4, 1.0).unwrap(), true),
        (DistributionSpec::gamma(0.5, 1.0).unwrap(), false),
        (DistributionSpec::gamma(0.8, 1.0).unwrap(), false),
    ] {
        for &x in &xs {
            let e = (-x).exp();
            let tails: Vec<f64> = (1..=12).map(|s| t(&spec, s, x)).collect();
            for w in tails.windows(2) {
                if above_one {
                    assert!(w[1] <= w[0] + 1e-12, "{spec} x={x}: {tails:?}");
                } else {
                    assert!(w[1] + 1e-12 >= w[0], "{spec} x={x}: {tails:?}");
                }
            }
            for &v in &tails {
                assert!(if above_one { v + 1e-12 >= e } else { v <= e + 1e-12 }, "{spec} x={x}");
            }
        }
    }
}

#[test]
fn stop_loss_route_matches_level_recursion() {
    for spec in mixed_specs() {
        for s in 2..=4 {
            for x in [0.2, 1.0, 2.0, 4.0] {
                let a = t(&spec, s, x);
                let b = reference_iterated_tail(&spec, idx(s), x).unwrap().log_value.exp();
                assert!((a - b).abs() < 1e-7, "{spec} s={s} x={x}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn tails_stay_in_unit_interval_and_decrease_in_x() {
    for spec in mixed_specs() {
        for s in [1, 2, 7, 40] {
            let vals: Vec<f64> = (0..40).map(|i| t(&spec, s, 0.25 * i as f64)).collect();
            assert_eq!(vals[0], 1.0);
            assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(vals.windows(2).all(|w| w[1] <= w[0]), "{spec} s={s}");
        }
    }
}
