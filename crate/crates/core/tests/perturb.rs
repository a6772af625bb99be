use std::f64::consts::PI;

use dipole_core::model::{bessel_k0, bessel_k1, MomentModel};
use dipole_core::perturb::{first_order_schwinger, wick_exp_correlation, CouplingMeasure};
use dipole_core::QuadSpec;
use num_complex::Complex64;
use proptest::prelude::*;

fn g(a: [f64; 2], b: [f64; 2], m: f64) -> f64 {
    bessel_k0(m * (a[0] - b[0]).hypot(a[1] - b[1])) / (2.0 * PI)
}

/// Gaussian moments with a linear source, by expansion along the first
/// factor: `E[1..n] = s_1 E[2..n] + sum_j G_1j E[2..n without j]`.
fn shifted_gaussian_moment(items: &[usize], shift: &[f64], cov: &dyn Fn(usize, usize) -> f64) -> f64 {
    let Some((&first, rest)) = items.split_first() else {
        return 1.0;
    };
    let mut v = shift[first] * shifted_gaussian_moment(rest, shift, cov);
    for (k, &j) in rest.iter().enumerate() {
        let without: Vec<usize> = rest.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &x)| x).collect();
        v += cov(first, j) * shifted_gaussian_moment(&without, shift, cov);
    }
    v
}

fn plane_points(seed: u64, n: usize) -> Vec<[f64; 2]> {
    let mut rng = dipole_core::rng::Lcg64::new(seed);
    (0..n).map(|i| [i as f64 * 0.9 + rng.uniform(-0.3, 0.3), rng.uniform(-1.0, 1.0)]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wick_correlation_matches_recursion(seed in 0u64..10_000, n in 0usize..6, alpha in -3.0..3.0f64) {
        let model = MomentModel::new(1.2, 2, vec![1.0]).unwrap();
        let pts = plane_points(seed, n);
        let x = [-1.0, 2.5];
        let v = wick_exp_correlation(&pts, x, alpha, &model).unwrap();
        let shift: Vec<f64> = pts.iter().map(|&p| alpha * g(p, x, 1.2)).collect();
        let items: Vec<usize> = (0..n).collect();
        let oracle = shifted_gaussian_moment(&items, &shift, &|i, j| g(pts[i], pts[j], 1.2));
        prop_assert!((v - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()), "{} vs {}", v, oracle);
    }
}

#[test]
fn first_order_is_linear_in_coupling() {
    let spec = QuadSpec::default();
    let model = MomentModel::new(1.0, 2, vec![1.0]).unwrap();
    let rho = CouplingMeasure::new(vec![(-0.5, 0.3), (1.1, 0.7)]).unwrap();
    let pts = plane_points(3, 3);
    let a = first_order_schwinger(&pts, 0.7, &rho, &model, &spec).unwrap();
    let b = first_order_schwinger(&pts, -0.4, &rho, &model, &spec).unwrap();
    assert_eq!(a.free, b.free);
    let slope = (a.value.value - b.value.value) / 1.1;
    assert!((slope - a.first_order.value).norm() <= 1e-12 * (1.0 + slope.norm()));
    assert!(a.first_order.value.norm() > 1e-6);
}

#[test]
fn two_point_first_order_is_order_two_kernel() {
    // -(mu_2 / 2) int G(x1 - x) G(x2 - x) dx = -(mu_2 / 2) r K1(m r) / (4 pi m)
    let spec = QuadSpec::default();
    let m = 1.1;
    let model = MomentModel::new(m, 2, vec![1.0]).unwrap();
    let rho = CouplingMeasure::new(vec![(-0.8, 0.25), (0.4, 0.75)]).unwrap();
    let pts = [[0.0, 0.0], [0.9, 1.2]];
    let r = 1.5;
    let v = first_order_schwinger(&pts, 1.0, &rho, &model, &spec).unwrap();
    let mu2 = 0.64 * 0.25 + 0.16 * 0.75;
    // single-point subsets leave one unpaired point and contribute nothing
    let expect = -0.5 * mu2 * r * bessel_k1(m * r) / (4.0 * PI * m);
    assert!((v.first_order.value.re - expect).abs() < 1e-8, "{} vs {expect}", v.first_order.value.re);
    assert!((v.free - g(pts[0], pts[1], m)).abs() < 1e-15);
}

#[test]
fn sinh_gordon_odd_moments_vanish() {
    let rho = CouplingMeasure::sinh_gordon();
    for q in [1, 3, 5] {
        assert_eq!(rho.real_moment(q), 0.0);
    }
    assert_eq!(rho.real_moment(2), 1.0);
}

#[test]
fn trigonometric_moments_rotate() {
    let rho = CouplingMeasure::new(vec![(0.3, 0.4), (-1.2, 0.6)]).unwrap();
    let trig = rho.clone().trigonometric();
    for q in 0..6 {
        let mu = 0.4 * 0.3f64.powi(q as i32) + 0.6 * (-1.2f64).powi(q as i32);
        assert!((rho.moment(q) - Complex64::new(mu, 0.0)).norm() < 1e-15);
        assert!((trig.moment(q) - Complex64::new(0.0, 1.0).powu(q as u32) * mu).norm() < 1e-15);
    }
}

#[test]
fn invalid_measures_are_rejected() {
    assert!(CouplingMeasure::new(vec![]).is_err());
    assert!(CouplingMeasure::new(vec![(4.0, 1.0)]).is_err());
    assert!(CouplingMeasure::new(vec![(0.5, 0.6), (0.1, 0.6)]).is_err());
    assert!(CouplingMeasure::new(vec![(0.5, -0.5), (0.1, 1.5)]).is_err());
}

#[test]
fn json_errors_carry_position() {
    let text = "{\n  \"atoms\": [[0.5, 1.0]],\n  \"trigonometric\": yes\n}";
    let err = CouplingMeasure::from_json(text).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
    let ok = CouplingMeasure::from_json("{\"atoms\": [[0.5, 0.5], [-0.5, 0.5]]}").unwrap();
    assert!(!ok.trigonometric);
}
