//! Reproducible pseudo-random inputs.
//!
//! The generator is the 64-bit linear congruential generator
//! `x_{n+1} = a x_n + c (mod 2^64)` with Knuth's MMIX constants
//! `a = 6364136223846793005`, `c = 1442695040888963407`. The state is
//! initialized to the seed itself. Uniform doubles take the top 53 bits:
//! `(x >> 11) * 2^-53`. Any implementation following these three rules
//! reproduces the packet suites bit for bit.

use num_complex::Complex64;
use serde::Serialize;

use crate::packets::WavePacket;
use crate::poly::Poly;

pub const LCG_MULTIPLIER: u64 = 6364136223846793005;
pub const LCG_INCREMENT: u64 = 1442695040888963407;

/// Algorithm tag written into reports next to the seed.
pub const LCG_NAME: &str = "lcg64-mmix";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(LCG_MULTIPLIER).wrapping_add(LCG_INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn coin(&mut self) -> bool {
        self.next_f64() < 0.5
    }
}

/// Ranges for randomized packets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PacketDraw {
    /// Energy component of the center.
    pub energy: (f64, f64),
    /// Each spatial component of the center.
    pub momentum: (f64, f64),
    /// Per-axis standard deviations.
    pub sigma: (f64, f64),
    /// Attach a random complex polynomial of degree one.
    pub polynomial: bool,
}

impl Default for PacketDraw {
    fn default() -> Self {
        PacketDraw {
            energy: (-1.5, 1.5),
            momentum: (-0.8, 0.8),
            sigma: (0.6, 1.2),
            polynomial: true,
        }
    }
}

/// Draw a packet: axis-aligned widths, a small random correlation between
/// the energy and first spatial axis, and optionally a linear polynomial.
pub fn random_packet(rng: &mut Lcg64, dim: usize, draw: &PacketDraw) -> WavePacket {
    let mut center = vec![rng.uniform(draw.energy.0, draw.energy.1)];
    for _ in 1..dim {
        center.push(rng.uniform(draw.momentum.0, draw.momentum.1));
    }
    let sig: Vec<f64> = (0..dim).map(|_| rng.uniform(draw.sigma.0, draw.sigma.1)).collect();
    let mut widths = vec![0.0; dim * dim];
    for i in 0..dim {
        widths[i * dim + i] = 1.0 / (sig[i] * sig[i]);
    }
    // |rho| <= 0.3 keeps the matrix positive definite
    let rho = rng.uniform(-0.3, 0.3);
    let off = rho / (sig[0] * sig[1]);
    widths[1] = off;
    widths[dim] = off;
    let poly = if draw.polynomial {
        let a: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)))
            .collect();
        Poly::linear(&a, Complex64::new(1.0, rng.uniform(-0.5, 0.5)))
    } else {
        Poly::one(dim)
    };
    WavePacket::new(dim, poly, center, widths, vec![0.0; dim]).expect("drawn packets are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_outputs_from_zero_seed() {
        let mut r = Lcg64::new(0);
        assert_eq!(r.next_u64(), LCG_INCREMENT);
        assert_eq!(r.next_u64(), LCG_INCREMENT.wrapping_mul(LCG_MULTIPLIER).wrapping_add(LCG_INCREMENT));
    }

    #[test]
    fn uniform_in_range() {
        let mut r = Lcg64::new(7);
        for _ in 0..1000 {
            let x = r.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn packets_are_reproducible() {
        let a = random_packet(&mut Lcg64::new(3), 3, &PacketDraw::default());
        let b = random_packet(&mut Lcg64::new(3), 3, &PacketDraw::default());
        assert_eq!(a, b);
    }
}
