use std::f64::consts::PI;

use dipole_core::dist::{commutator_pairing, smear, smear_factor, DistExpr, ShellFactor, Sign};
use dipole_core::model::{wightman_truncated, MomentModel};
use dipole_core::rng::{random_packet, Lcg64, PacketDraw};
use dipole_core::waveop::{Channel, Multiplier};
use dipole_core::{QuadSpec, WavePacket};
use num_complex::Complex64;
use proptest::prelude::*;

fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

/// `int d^2k theta(s k0) eta(k^2 - m^2) p(k)` with a Gaussian mollifier of
/// width `eps` (or its derivative), integrated on a grid near the sheet.
fn mollified_shell(p: &WavePacket, sign: f64, m: f64, eps: f64, derivative: bool) -> Complex64 {
    let norm = 1.0 / (eps * (2.0 * PI).sqrt());
    let eta = |kappa: f64| {
        let g = norm * (-kappa * kappa / (2.0 * eps * eps)).exp();
        if derivative {
            -kappa / (eps * eps) * g
        } else {
            g
        }
    };
    let c1 = p.center()[1];
    let s1 = p.marginal_sigma(1);
    simpson(
        |k1| {
            let w = (k1 * k1 + m * m).sqrt();
            let half = 10.0 * eps / w;
            simpson(|k0| p.eval(&[k0, k1]) * eta(k0 * k0 - k1 * k1 - m * m), sign * w - half, sign * w + half, 400)
        },
        c1 - 10.0 * s1,
        c1 + 10.0 * s1,
        1600,
    )
}

/// Extrapolate `eps -> 0` for an expansion in even powers of eps.
fn shell_oracle(p: &WavePacket, sign: f64, derivative: bool) -> Complex64 {
    let v: Vec<Complex64> = [0.04, 0.02, 0.01].iter().map(|&e| mollified_shell(p, sign, 1.0, e, derivative)).collect();
    let r1 = [(v[1] * 4.0 - v[0]) / 3.0, (v[2] * 4.0 - v[1]) / 3.0];
    (r1[1] * 16.0 - r1[0]) / 15.0
}

#[test]
fn shell_deltas_match_mollified_grid() {
    let spec = QuadSpec::default();
    let mut rng = Lcg64::new(5);
    for _ in 0..3 {
        let p = random_packet(&mut rng, 2, &PacketDraw::default());
        for (sign, s) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let d = smear_factor(&ShellFactor::delta(sign, 1.0), &p, &spec).unwrap();
            let oracle = shell_oracle(&p, s, false);
            assert!((d.value - oracle).norm() < 1e-7 * (1.0 + oracle.norm()), "delta {sign:?}: {} vs {oracle}", d.value);
            let dp = smear_factor(&ShellFactor::delta_prime(sign, 1.0), &p, &spec).unwrap();
            let oracle = shell_oracle(&p, s, true);
            assert!((dp.value - oracle).norm() < 1e-6 * (1.0 + oracle.norm()), "delta' {sign:?}: {} vs {oracle}", dp.value);
        }
    }
}

#[test]
fn commutator_is_antisymmetric() {
    let spec = QuadSpec::default();
    let m = MomentModel::new(1.0, 2, vec![1.0]).unwrap();
    let w2 = wightman_truncated(2, &m).unwrap();
    let f = WavePacket::gaussian(&[1.3, 0.2], 0.7);
    let g = WavePacket::gaussian(&[-1.1, -0.4], 0.8);
    let a = commutator_pairing(&w2, &f, &g, &spec).unwrap();
    let b = commutator_pairing(&w2, &g, &f, &spec).unwrap();
    assert!((a.value + b.value).norm() <= a.err_est + b.err_est + 1e-14);
}

#[test]
fn expression_json_round_trip() {
    let e = DistExpr::single(ShellFactor::delta_prime(Sign::Plus, 1.0).with_multiplier(Multiplier::chi_d_t(Channel::Out, 10.0, 1.0)));
    let s = serde_json::to_string(&e).unwrap();
    let back: DistExpr = serde_json::from_str(&s).unwrap();
    assert_eq!(e, back);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reflection_swaps_sheets(seed in 0u64..500) {
        let spec = QuadSpec::default();
        let p = random_packet(&mut Lcg64::new(seed), 2, &PacketDraw::default());
        let a = smear_factor(&ShellFactor::delta(Sign::Plus, 1.0), &p, &spec).unwrap();
        let b = smear_factor(&ShellFactor::delta(Sign::Minus, 1.0), &p.reflect(), &spec).unwrap();
        prop_assert!((a.value - b.value).norm() <= a.err_est + b.err_est + 1e-14);
    }

    #[test]
    fn smearing_is_linear(seed in 0u64..500, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let spec = QuadSpec::default();
        let p = random_packet(&mut Lcg64::new(seed), 2, &PacketDraw::default());
        let s = Complex64::new(re, im);
        let e = DistExpr::single(ShellFactor::delta_prime(Sign::Plus, 1.0));
        let a = smear(&e, &[p.scale(s)], &spec).unwrap();
        let b = smear(&e, &[p], &spec).unwrap();
        prop_assert!((a.value - b.value * s).norm() <= a.err_est + b.err_est * s.norm() + 1e-13);
    }
}
