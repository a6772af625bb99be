use dipole_core::quad::{fp_double, fp_double_detail, integrate_1d, integrate_nd, pv_simple};
use dipole_core::QuadSpec;
use num_complex::Complex64;
use proptest::prelude::*;

/// Composite Simpson rule with `n` (even) panels.
fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += f(a + i as f64 * h) * w;
    }
    s * (h / 3.0)
}

/// Richardson for an error expansion in integer powers of `eps`, with `eps`
/// halving between entries.
fn richardson(mut v: Vec<Complex64>) -> Complex64 {
    let mut k = 1;
    while v.len() > 1 {
        let f = (1u64 << k) as f64;
        v = v.windows(2).map(|w| (w[1] * f - w[0]) / (f - 1.0)).collect();
        k += 1;
    }
    v[0]
}

fn bump(a: [Complex64; 2], c: f64, s: f64) -> impl Fn(f64) -> Complex64 + Copy {
    move |u: f64| (a[0] + a[1] * u) * (-(u - c) * (u - c) / (2.0 * s * s)).exp()
}

/// Principal value by excising `(u0 - eps, u0 + eps)` and extrapolating in
/// eps. The two sides are folded onto `v = |u - u0|` so the integrand stays
/// bounded.
fn pv_by_exclusion<F: Fn(f64) -> Complex64 + Copy>(g: F, u0: f64, half: f64) -> Complex64 {
    let vals: Vec<Complex64> = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
        .iter()
        .map(|&eps| simpson(|v| (g(u0 + v) - g(u0 - v)) / v, eps, half, 40_000))
        .collect();
    richardson(vals)
}

/// Finite part by excision: `int_{eps < |v| < L} g / v^2 - 2 g(u0) / eps`.
/// Folding and subtracting `2 g(u0)` leaves
/// `int_eps^L (g(u0 + v) + g(u0 - v) - 2 g(u0)) / v^2 dv - 2 g(u0) / L`.
fn fp_by_exclusion<F: Fn(f64) -> Complex64 + Copy>(g: F, u0: f64, half: f64) -> Complex64 {
    let vals: Vec<Complex64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&eps| simpson(|v| (g(u0 + v) + g(u0 - v) - g(u0) * 2.0) / (v * v), eps, half, 40_000) - g(u0) * (2.0 / half))
        .collect();
    richardson(vals)
}

#[test]
fn principal_value_matches_excision() {
    let spec = QuadSpec::default();
    let g = bump([Complex64::new(1.0, 0.3), Complex64::new(-0.4, 0.8)], 0.2, 0.7);
    for u0 in [-0.5, 0.1, 0.9] {
        let half = 8.0;
        let v = pv_simple(g, u0, u0 - half, u0 + half, &spec).unwrap();
        let oracle = pv_by_exclusion(g, u0, half);
        assert!((v.value - oracle).norm() < 1e-8, "u0 {u0}: {} vs {oracle}", v.value);
    }
}

#[test]
fn finite_part_matches_excision() {
    let spec = QuadSpec::default();
    let g = bump([Complex64::new(0.7, -0.2), Complex64::new(0.5, 0.1)], -0.3, 0.9);
    for u0 in [-0.8, 0.0, 0.6] {
        let half = 9.0;
        let v = fp_double(g, u0, u0 - half, u0 + half, &spec).unwrap();
        let oracle = fp_by_exclusion(g, u0, half);
        assert!((v.value - oracle).norm() < 1e-7, "u0 {u0}: {} vs {oracle}", v.value);
    }
}

#[test]
fn finite_part_methods_agree() {
    let spec = QuadSpec::default();
    let g = bump([Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.6)], 0.4, 0.5);
    let d = fp_double_detail(g, 0.1, -6.0, 6.0, &spec).unwrap();
    let gap = (d.taylor.value - d.pole_derivative.value).norm();
    assert!(gap <= d.taylor.err_est + d.pole_derivative.err_est, "gap {gap}");
}

#[test]
fn gaussian_moments() {
    let spec = QuadSpec::default();
    let v = integrate_1d(|u| Complex64::new(u * u * (-u * u / 2.0).exp(), 0.0), -12.0, 12.0, &spec);
    assert!((v.value.re - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    let w = integrate_nd(
        |x| Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp(), 0.0),
        &[(-12.0, 12.0), (-9.0, 9.0)],
        &spec,
    )
    .unwrap();
    let exact = 2.0 * std::f64::consts::PI / 2f64.sqrt();
    assert!((w.value.re - exact).abs() < 1e-9 * exact);
    assert!(w.err_est < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integration_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -1.0..1.0f64) {
        let spec = QuadSpec::default();
        let f = |u: f64| Complex64::new((-(u - c) * (u - c)).exp(), 0.0);
        let g = |u: f64| Complex64::new(0.0, u * (-u * u).exp());
        let lhs = integrate_1d(|u| f(u) * a + g(u) * b, -10.0, 10.0, &spec);
        let rf = integrate_1d(f, -10.0, 10.0, &spec);
        let rg = integrate_1d(g, -10.0, 10.0, &spec);
        let rhs = rf.value * a + rg.value * b;
        prop_assert!((lhs.value - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()) + lhs.err_est + rf.err_est + rg.err_est);
    }

    #[test]
    fn principal_value_vanishes_for_even_numerator(s in 0.3..2.0f64) {
        // g even about the pole: PV vanishes
        let spec = QuadSpec::default();
        let v = pv_simple(|u| Complex64::new((-(u * u) / (2.0 * s * s)).exp(), 0.0), 0.0, -12.0 * s, 12.0 * s, &spec).unwrap();
        prop_assert!(v.value.norm() <= 1e-10 + v.err_est);
    }
}
