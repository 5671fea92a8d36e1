mod common;

use proptest::prelude::*;
use smoothmc::density::{loo_density, FloorPolicy};
use smoothmc::integrator::{boundary_corrected_design, NamedIntegrand};
use smoothmc::regfun::{
    bandwidth_condition_warnings, clt_check, estimate_functional, estimate_functional_with_table,
    loo_nadaraya_watson, BandwidthChoice, RegressionModel, Weighting,
};
use smoothmc::rng::{derive_seed, rng_from_seed};
use smoothmc::stats::std_dev;
use smoothmc::{Bandwidth, BoxRegion, Error, Integrand, KernelSpec, Sample};

fn h(v: f64) -> Bandwidth {
    Bandwidth::new(v).unwrap()
}

fn one() -> Integrand {
    Integrand::indicator(BoxRegion::unit_cube(1))
}

fn with_y(s: &Sample, f: impl Fn(&[f64]) -> f64) -> Sample {
    let y = s.rows().map(f).collect();
    s.clone().with_response(y).unwrap()
}

#[test]
fn trivial_cases() {
    let x = common::uniform_sample(100, 1, 1);
    let k = KernelSpec::epanechnikov(1);
    let zero_y = with_y(&x, |_| 0.0);
    assert_eq!(estimate_functional(&zero_y, &one(), &k, h(0.2)).unwrap().c_hat, 0.0);
    let s = with_y(&x, |r| r[0].sin());
    let est = estimate_functional(&s, &Integrand::zero(), &k, h(0.2)).unwrap();
    assert_eq!((est.c_hat, est.v_hat), (0.0, 0.0));
    let err = estimate_functional(&x, &one(), &k, h(0.2)).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn hand_computed_estimate() {
    // three points, each sees the other two
    let s = Sample::new(vec![0.0, 0.2, 0.4], 1, Some(vec![1.0, 2.0, 4.0])).unwrap();
    let k = KernelSpec::epanechnikov(1);
    let kv = |u: f64| k.eval(&[u]);
    let f = [(kv(0.2) + kv(0.4)) / 2.0, (kv(0.2) + kv(0.2)) / 2.0, (kv(0.4) + kv(0.2)) / 2.0];
    let psi = Integrand::unbounded(|_| 1.0);
    let est = estimate_functional(&s, &psi, &k, h(1.0)).unwrap();
    let c = (1.0 / f[0] + 2.0 / f[1] + 4.0 / f[2]) / 3.0;
    assert!((est.c_hat - c).abs() < 1e-14);
    // pilot fit is the leave-one-out Nadaraya-Watson average
    let pilot = loo_nadaraya_watson(&s, &k, h(1.0)).unwrap();
    let g0 = (2.0 * kv(0.2) + 4.0 * kv(0.4)) / (kv(0.2) + kv(0.4));
    assert!((pilot[0].unwrap() - g0).abs() < 1e-14);
}

#[test]
fn scale_equivariance() {
    let x = common::uniform_sample(200, 1, 2);
    let k = KernelSpec::epanechnikov(1);
    let s = with_y(&x, |r| (3.0 * r[0]).cos() + r[0]);
    let a = 2.5;
    let scaled = with_y(&x, |r| a * ((3.0 * r[0]).cos() + r[0]));
    let e1 = estimate_functional(&s, &one(), &k, h(0.2)).unwrap();
    let e2 = estimate_functional(&scaled, &one(), &k, h(0.2)).unwrap();
    assert!(common::rel_close(e2.c_hat, a * e1.c_hat, 1e-12));
    assert!(common::rel_close(e2.v_hat, a * a * e1.v_hat, 1e-12));
}

#[test]
fn bandwidth_warnings() {
    assert!(bandwidth_condition_warnings(1000, 1, 2, 0.1).is_empty());
    assert_eq!(bandwidth_condition_warnings(1000, 1, 2, 0.5).len(), 1);
    assert_eq!(bandwidth_condition_warnings(1000, 1, 2, 0.001).len(), 1);
}

#[test]
fn noiseless_error_shrinks_faster_than_root_n() {
    let k = KernelSpec::epanechnikov(1);
    let spread = |n: usize| {
        let bw = (n as f64).powf(-1.0 / 3.0);
        let design = boundary_corrected_design(&BoxRegion::unit_cube(1), bw).unwrap();
        let model = RegressionModel::homoscedastic(design, |x| (std::f64::consts::PI * x[0]).sin(), 0.0);
        let draws: Vec<f64> = (0..200u64)
            .map(|r| {
                let data = model.generate(n, &mut rng_from_seed(derive_seed(6, &[n as u64, r])));
                // c_hat does not depend on the pilot fit, so skip it
                let table = loo_density(&data, &k, h(bw)).unwrap();
                let pilot = vec![None; n];
                let c = estimate_functional_with_table(&data, &one(), &table, &pilot, FloorPolicy::Skip)
                    .unwrap()
                    .c_hat;
                (n as f64).sqrt() * (c - 2.0 / std::f64::consts::PI)
            })
            .collect();
        std_dev(&draws)
    };
    let (small, large) = (spread(250), spread(4000));
    assert!(large < 0.5 * small, "std {large} at n=4000 vs {small} at n=250");
}

#[test]
fn clt_report_is_reproducible() {
    let model = RegressionModel::homoscedastic(BoxRegion::unit_cube(1), |_| 0.0, 1.0);
    let k = KernelSpec::epanechnikov(1);
    let bw = BandwidthChoice::Power { constant: 1.0, exponent: 1.0 / 3.0 };
    let a = clt_check(&model, &one(), &k, bw, Weighting::PlugIn, 200, 20, 4).unwrap();
    let b = clt_check(&model, &one(), &k, bw, Weighting::PlugIn, 200, 20, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.draws.len(), 20);
    assert!((a.v - 1.0).abs() < 1e-9, "analytic v = {}", a.v);
    let mut csv = Vec::new();
    a.write_draws_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 21);
}

#[test]
fn analytic_targets_by_quadrature() {
    let model = RegressionModel::homoscedastic(BoxRegion::unit_cube(1), |x| (std::f64::consts::PI * x[0]).sin(), 0.5);
    let (c, v) = model.analytic_targets(&NamedIntegrand::Polynomial.integrand(1), 20_000);
    // int 6x(1-x) sin(pi x) dx = 24 / pi^3
    assert!((c - 24.0 / std::f64::consts::PI.powi(3)).abs() < 1e-8);
    // 0.25 * int 36 x^2 (1-x)^2 dx = 0.25 * 36 / 30
    assert!((v - 0.3).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_in_response_and_psi(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let x = common::uniform_sample(60, 1, seed);
        let k = KernelSpec::epanechnikov(1);
        let t = loo_density(&x, &k, h(0.25)).unwrap();
        let pilot = vec![None; 60];
        let y1: Vec<f64> = x.rows().map(|r| r[0] * r[0]).collect();
        let y2: Vec<f64> = x.rows().map(|r| (5.0 * r[0]).sin()).collect();
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| a * p + b * q).collect();
        let c = |y: &[f64], psi: &Integrand| {
            let s = x.clone().with_response(y.to_vec()).unwrap();
            estimate_functional_with_table(&s, psi, &t, &pilot, FloorPolicy::Skip).unwrap().c_hat
        };
        let psi = one();
        let lhs = c(&mix, &psi);
        let rhs = a * c(&y1, &psi) + b * c(&y2, &psi);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let p1 = NamedIntegrand::SinPi.integrand(1);
        let p2 = NamedIntegrand::Polynomial.integrand(1);
        let combo = Integrand::linear_combination(a, &p1, b, &p2);
        let lhs = c(&y1, &combo);
        let rhs = a * c(&y1, &p1) + b * c(&y1, &p2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn variance_estimate_nonnegative(seed in 0u64..1000) {
        let x = common::uniform_sample(50, 1, seed);
        let s = with_y(&x, |r| r[0] * 3.0 - 1.0);
        let est = estimate_functional(&s, &one(), &KernelSpec::epanechnikov(1), h(0.3)).unwrap();
        prop_assert!(est.v_hat >= 0.0);
    }
}
