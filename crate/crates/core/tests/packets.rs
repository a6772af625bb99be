use std::f64::consts::PI;

use dipole_core::rng::{random_packet, Lcg64, PacketDraw};
use dipole_core::{Poly, WavePacket};
use num_complex::Complex64;
use proptest::prelude::*;

/// `(2 pi)^-1 sum_k h^2 exp(-i s (k0 x0 - k1 x1)) p(k)` on a uniform grid
/// covering the packet to many standard deviations.
fn dft_2d(p: &WavePacket, x: [f64; 2], sign: f64) -> Complex64 {
    let h = 0.04;
    let half = [9.0 * p.marginal_sigma(0), 9.0 * p.marginal_sigma(1)];
    let c = p.center();
    let n = [(half[0] / h).ceil() as i64, (half[1] / h).ceil() as i64];
    let mut total = Complex64::new(0.0, 0.0);
    for i in -n[0]..=n[0] {
        let k0 = c[0] + i as f64 * h;
        for j in -n[1]..=n[1] {
            let k1 = c[1] + j as f64 * h;
            let phase = Complex64::new(0.0, -sign * (k0 * x[0] - k1 * x[1])).exp();
            total += phase * p.eval(&[k0, k1]);
        }
    }
    total * (h * h / (2.0 * PI))
}

fn drawn(seed: u64, dim: usize) -> WavePacket {
    random_packet(&mut Lcg64::new(seed), dim, &PacketDraw::default())
}

#[test]
fn fourier_transform_matches_grid_sum() {
    for seed in [1, 2, 3] {
        let p = drawn(seed, 2);
        let f = p.fourier(false);
        let g = p.fourier(true);
        for x in [[0.0, 0.0], [0.7, -0.3], [-1.1, 1.4]] {
            let oracle = dft_2d(&p, x, 1.0);
            assert!((f.eval(&x) - oracle).norm() < 1e-10, "seed {seed} x {x:?}: {} vs {oracle}", f.eval(&x));
            let oracle_inv = dft_2d(&p, x, -1.0);
            assert!((g.eval(&x) - oracle_inv).norm() < 1e-10);
        }
    }
}

#[test]
fn polynomial_packet_transform() {
    // P(k) = k0 k1 + i on a shifted, phased Gaussian
    let poly = Poly::from_terms(2, [(vec![1, 1], Complex64::new(1.0, 0.0)), (vec![0, 0], Complex64::new(0.0, 1.0))]);
    let p = WavePacket::new(2, poly, vec![0.4, -0.2], vec![1.5, 0.2, 0.2, 0.8], vec![0.3, -0.5]).unwrap();
    let f = p.fourier(false);
    for x in [[0.2, 0.1], [-0.9, 0.6]] {
        assert!((f.eval(&x) - dft_2d(&p, x, 1.0)).norm() < 1e-10);
    }
}

#[test]
fn json_round_trip_is_exact() {
    let p = drawn(11, 3);
    let s = serde_json::to_string(&p).unwrap();
    let q: WavePacket = serde_json::from_str(&s).unwrap();
    assert_eq!(p, q);
    assert_eq!(serde_json::to_string(&q).unwrap(), s);
}

#[test]
fn malformed_json_is_rejected() {
    let bad = r#"{"dim": 2, "poly": [], "center": [0, 0], "widths": [1, 2, 3, 1], "phase_shift": [0, 0]}"#;
    assert!(serde_json::from_str::<WavePacket>(bad).is_err());
    let short = r#"{"dim": 2, "poly": [], "center": [0], "widths": [1, 0, 0, 1], "phase_shift": [0, 0]}"#;
    assert!(serde_json::from_str::<WavePacket>(short).is_err());
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-12 * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_inversion(seed in 0u64..1000, k0 in -2.0..2.0f64, k1 in -2.0..2.0f64) {
        let p = drawn(seed, 2);
        let back = p.fourier(false).fourier(true);
        prop_assert!((back.eval(&[k0, k1]) - p.eval(&[k0, k1])).norm() < 1e-9);
    }

    #[test]
    fn involutions(seed in 0u64..1000, k in prop::array::uniform3(-2.0..2.0f64)) {
        let p = drawn(seed, 3);
        prop_assert!(close(p.reflect().reflect().eval(&k), p.eval(&k)));
        prop_assert!(close(p.conj().conj().eval(&k), p.eval(&k)));
        let neg: Vec<f64> = k.iter().map(|x| -x).collect();
        prop_assert!(close(p.reflect().eval(&k), p.eval(&neg)));
        prop_assert!(close(p.conj().eval(&k), p.eval(&k).conj()));
    }

    #[test]
    fn sums_and_scaling(seed in 0u64..1000, re in -2.0..2.0f64, im in -2.0..2.0f64, k in prop::array::uniform2(-2.0..2.0f64)) {
        let p = drawn(seed, 2);
        let s = Complex64::new(re, im);
        let q = p.scale(s);
        prop_assert!(close(q.eval(&k), p.eval(&k) * s));
        let sum = p.add(&q).unwrap();
        prop_assert!(close(sum.eval(&k), p.eval(&k) * (s + 1.0)));
    }

    #[test]
    fn derivative_matches_difference(seed in 0u64..1000, k in prop::array::uniform2(-1.5..1.5f64)) {
        let p = drawn(seed, 2);
        let h = 1e-5;
        for j in 0..2 {
            let mut up = k;
            let mut dn = k;
            up[j] += h;
            dn[j] -= h;
            let fd = (p.eval(&up) - p.eval(&dn)) / (2.0 * h);
            prop_assert!((p.partial(j).eval(&k) - fd).norm() < 1e-7);
        }
    }
}
