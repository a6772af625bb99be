//! Polynomial-times-Gaussian wave packets in momentum space.
//!
//! A packet is `P(k) exp(-(k-mu)^T A (k-mu)/2) exp(i b.k)` with complex
//! polynomial `P`, center `mu`, symmetric positive-definite width matrix `A`
//! and phase shift `b` (Euclidean pairing in the phase). The class is closed
//! under the Fourier transform, which is computed exactly with the symmetric
//! `(2 pi)^{-d/2}` normalization and the Minkowski pairing
//! `k.x = k^0 x^0 - k.x` (spatial part subtracted).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::PacketError;
use crate::jet::Jet;
use crate::poly::Poly;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WavePacket {
    dim: usize,
    poly: Poly,
    center: Vec<f64>,
    /// Row-major `dim x dim`.
    widths: Vec<f64>,
    phase_shift: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPacket {
    dim: usize,
    poly: Poly,
    center: Vec<f64>,
    widths: Vec<f64>,
    phase_shift: Vec<f64>,
}

impl<'de> Deserialize<'de> for WavePacket {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawPacket::deserialize(d)?;
        let poly = raw.poly.with_dim(raw.dim);
        WavePacket::new(raw.dim, poly, raw.center, raw.widths, raw.phase_shift)
            .map_err(serde::de::Error::custom)
    }
}

fn minkowski_signature(dim: usize, sign: f64) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = if i == 0 { sign } else { -sign };
    }
    m
}

impl WavePacket {
    pub fn new(
        dim: usize,
        poly: Poly,
        center: Vec<f64>,
        widths: Vec<f64>,
        phase_shift: Vec<f64>,
    ) -> Result<Self, PacketError> {
        if dim < 1 {
            return Err(PacketError::Dimension(dim));
        }
        if poly.dim() != dim || center.len() != dim || phase_shift.len() != dim {
            return Err(PacketError::ShapeMismatch);
        }
        if widths.len() != dim * dim {
            return Err(PacketError::ShapeMismatch);
        }
        let scale = widths.iter().fold(0.0f64, |a, w| a.max(w.abs()));
        for i in 0..dim {
            for j in 0..i {
                if (widths[i * dim + j] - widths[j * dim + i]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(PacketError::NotSymmetric);
                }
            }
        }
        if DMatrix::from_row_slice(dim, dim, &widths).cholesky().is_none() {
            return Err(PacketError::NotPositiveDefinite);
        }
        if center.iter().chain(&phase_shift).chain(&widths).any(|v| !v.is_finite()) {
            return Err(PacketError::NonFinite);
        }
        Ok(WavePacket {
            dim,
            poly,
            center,
            widths,
            phase_shift,
        })
    }

    /// Pure Gaussian with isotropic standard deviation `sigma` (so `A = I / sigma^2`).
    pub fn gaussian(center: &[f64], sigma: f64) -> Self {
        let d = center.len();
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            w[i * d + i] = 1.0 / (sigma * sigma);
        }
        WavePacket::new(d, Poly::one(d), center.to_vec(), w, vec![0.0; d])
            .expect("isotropic Gaussian is always valid")
    }

    /// Gaussian with per-axis standard deviations.
    pub fn gaussian_axes(center: &[f64], sigmas: &[f64]) -> Self {
        let d = center.len();
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            w[i * d + i] = 1.0 / (sigmas[i] * sigmas[i]);
        }
        WavePacket::new(d, Poly::one(d), center.to_vec(), w, vec![0.0; d])
            .expect("axis-aligned Gaussian is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn poly(&self) -> &Poly {
        &self.poly
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }
    pub fn phase_shift(&self) -> &[f64] {
        &self.phase_shift
    }

    fn quad_form(&self, k: &[f64]) -> f64 {
        let d = self.dim;
        let mut q = 0.0;
        for i in 0..d {
            let ui = k[i] - self.center[i];
            for j in 0..d {
                q += ui * self.widths[i * d + j] * (k[j] - self.center[j]);
            }
        }
        q
    }

    /// Gaussian envelope `exp(-(k-mu)^T A (k-mu)/2)` without polynomial or phase.
    pub fn envelope(&self, k: &[f64]) -> f64 {
        (-0.5 * self.quad_form(k)).exp()
    }

    pub fn eval(&self, k: &[f64]) -> Complex64 {
        let phase: f64 = k.iter().zip(&self.phase_shift).map(|(a, b)| a * b).sum();
        let expo = Complex64::new(-0.5 * self.quad_form(k), phase);
        self.poly.eval(k) * expo.exp()
    }

    pub fn eval_jet(&self, k: &[Jet]) -> Jet {
        let d = self.dim;
        let bits = k.iter().map(|j| j.bits()).max().unwrap_or(0);
        let u: Vec<Jet> = (0..d).map(|i| k[i] - self.center[i]).collect();
        let mut q = Jet::real(bits, 0.0);
        for i in 0..d {
            let mut row = Jet::real(bits, 0.0);
            for j in 0..d {
                let a = self.widths[i * d + j];
                if a != 0.0 {
                    row += u[j] * a;
                }
            }
            q += u[i] * row;
        }
        let mut expo = q * -0.5;
        for i in 0..d {
            if self.phase_shift[i] != 0.0 {
                expo += k[i] * Complex64::new(0.0, self.phase_shift[i]);
            }
        }
        self.poly.eval_jet(k) * expo.exp()
    }

    /// Inverse width matrix `A^{-1}` (row-major).
    pub fn covariance(&self) -> Vec<f64> {
        let a = DMatrix::from_row_slice(self.dim, self.dim, &self.widths);
        let inv = a.try_inverse().expect("positive definite");
        // nalgebra is column-major; the matrix is symmetric so either order works
        inv.transpose().as_slice().to_vec()
    }

    /// Axis-aligned box containing every point where the Gaussian envelope
    /// exceeds `exp(-radius^2/2)`.
    pub fn support_box(&self, radius: f64) -> Vec<(f64, f64)> {
        let cov = self.covariance();
        (0..self.dim)
            .map(|i| {
                let s = cov[i * self.dim + i].sqrt();
                (self.center[i] - radius * s, self.center[i] + radius * s)
            })
            .collect()
    }

    /// Marginal standard deviation along axis `i`.
    pub fn marginal_sigma(&self, i: usize) -> f64 {
        self.covariance()[i * self.dim + i].sqrt()
    }

    /// Exact Fourier transform with Minkowski pairing; `inverse` flips the sign
    /// of the exponent.
    pub fn fourier(&self, inverse: bool) -> WavePacket {
        let d = self.dim;
        let a = DMatrix::from_row_slice(d, d, &self.widths);
        let det = a.determinant();
        let b_mat = a.try_inverse().expect("positive definite");
        let b: Vec<f64> = b_mat.transpose().as_slice().to_vec();

        // shifted polynomial P(mu + u)
        let mut ident = vec![0.0; d * d];
        for i in 0..d {
            ident[i * d + i] = 1.0;
        }
        let shifted = self.poly.affine_substitute(&ident, &self.center);

        // (B y)_j as polynomials in y
        let by: Vec<Poly> = (0..d)
            .map(|j| {
                let row: Vec<Complex64> = (0..d).map(|l| Complex64::new(b[j * d + l], 0.0)).collect();
                Poly::linear(&row, Complex64::new(0.0, 0.0))
            })
            .collect();
        let i_unit = Complex64::new(0.0, 1.0);

        // Q(y) = sum_alpha c_alpha (-i d_y)^alpha applied to exp(-y^T B y / 2)
        let mut q = Poly::zero(d);
        for (alpha, coeff) in shifted.terms() {
            let mut r = Poly::one(d);
            for (j, &e) in alpha.iter().enumerate() {
                for _ in 0..e {
                    r = r.deriv(j).scale(-i_unit).add(&r.mul(&by[j]).scale(i_unit));
                }
            }
            q = q.add(&r.scale(*coeff));
        }

        // Euclidean transform: e^{i b.mu} det^{-1/2} Q(b - x) e^{-(x-b)^T B (x-b)/2} e^{-i mu.x}
        let bmu: f64 = self.phase_shift.iter().zip(&self.center).map(|(x, y)| x * y).sum();
        let pref = Complex64::new(0.0, bmu).exp() / det.sqrt();
        let neg_ident: Vec<f64> = ident.iter().map(|v| -v).collect();
        let q_euclid = q.affine_substitute(&neg_ident, &self.phase_shift).scale(pref);

        // Minkowski pairing: evaluate the Euclidean transform at L x
        let l = minkowski_signature(d, if inverse { -1.0 } else { 1.0 });
        let poly = q_euclid.affine_substitute(&l, &vec![0.0; d]);
        let ldiag: Vec<f64> = (0..d).map(|i| l[i * d + i]).collect();
        let center: Vec<f64> = (0..d).map(|i| ldiag[i] * self.phase_shift[i]).collect();
        let mut widths = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                widths[i * d + j] = ldiag[i] * b[i * d + j] * ldiag[j];
            }
        }
        let phase_shift: Vec<f64> = (0..d).map(|i| -ldiag[i] * self.center[i]).collect();
        WavePacket::new(d, poly, center, widths, phase_shift)
            .expect("transform of a valid packet is valid")
    }

    pub fn same_gaussian(&self, other: &WavePacket) -> bool {
        self.dim == other.dim
            && self.center == other.center
            && self.widths == other.widths
            && self.phase_shift == other.phase_shift
    }

    pub fn add(&self, other: &WavePacket) -> Result<WavePacket, PacketError> {
        if !self.same_gaussian(other) {
            return Err(PacketError::MismatchedGaussian);
        }
        let mut p = self.clone();
        p.poly = self.poly.add(&other.poly);
        Ok(p)
    }

    pub fn scale(&self, s: Complex64) -> WavePacket {
        let mut p = self.clone();
        p.poly = self.poly.scale(s);
        p
    }

    pub fn multiply_poly(&self, q: &Poly) -> Result<WavePacket, PacketError> {
        if q.dim() != self.dim {
            return Err(PacketError::ShapeMismatch);
        }
        let mut p = self.clone();
        p.poly = self.poly.mul(q);
        Ok(p)
    }

    /// Exact partial derivative along axis `j`.
    pub fn partial(&self, j: usize) -> WavePacket {
        let d = self.dim;
        // d_j of the exponent: -(A (k - mu))_j + i b_j
        let row: Vec<Complex64> = (0..d)
            .map(|l| Complex64::new(-self.widths[j * d + l], 0.0))
            .collect();
        let shift: f64 = (0..d).map(|l| self.widths[j * d + l] * self.center[l]).sum();
        let dq = Poly::linear(&row, Complex64::new(shift, self.phase_shift[j]));
        let mut p = self.clone();
        p.poly = self.poly.deriv(j).add(&self.poly.mul(&dq));
        p
    }

    /// `k -> p(-k)`.
    pub fn reflect(&self) -> WavePacket {
        let d = self.dim;
        let mut neg = vec![0.0; d * d];
        for i in 0..d {
            neg[i * d + i] = -1.0;
        }
        WavePacket {
            dim: d,
            poly: self.poly.affine_substitute(&neg, &vec![0.0; d]),
            center: self.center.iter().map(|v| -v).collect(),
            widths: self.widths.clone(),
            phase_shift: self.phase_shift.iter().map(|v| -v).collect(),
        }
    }

    /// Pointwise complex conjugate `k -> conj(p(k))`.
    pub fn conj(&self) -> WavePacket {
        WavePacket {
            dim: self.dim,
            poly: self.poly.conj(),
            center: self.center.clone(),
            widths: self.widths.clone(),
            phase_shift: self.phase_shift.iter().map(|v| -v).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gaussian_peak_is_one() {
        let p = WavePacket::gaussian(&[0.3, -1.0], 0.7);
        assert!((p.eval(&[0.3, -1.0]) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn polynomial_zero() {
        let p = WavePacket::gaussian(&[0.0, 0.0], 1.0)
            .multiply_poly(&Poly::var(2, 0))
            .unwrap();
        assert_eq!(p.eval(&[0.0, 0.8]), c(0.0));
    }

    #[test]
    fn unit_width_value() {
        let p = WavePacket::gaussian(&[2.0, 0.0], 1.0);
        assert!((p.eval(&[2.0, 1.0]).re - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn unit_gaussian_self_dual() {
        let p = WavePacket::gaussian(&[0.0, 0.0, 0.0], 1.0);
        let f = p.fourier(false);
        for x in [[0.1, 0.4, -0.3], [1.0, 0.0, 2.0]] {
            assert!((f.eval(&x) - p.eval(&x)).norm() < 1e-14);
        }
    }

    #[test]
    fn add_requires_matching_gaussian() {
        let p = WavePacket::gaussian(&[0.0, 0.0], 1.0);
        let q = WavePacket::gaussian(&[0.1, 0.0], 1.0);
        assert!(matches!(p.add(&q), Err(PacketError::MismatchedGaussian)));
        let z = p.scale(c(0.0));
        let s = p.add(&z).unwrap();
        assert_eq!(s.eval(&[0.3, 0.2]), p.eval(&[0.3, 0.2]));
    }

    #[test]
    fn shell_multiplier_vanishes_on_shell() {
        let p = WavePacket::gaussian(&[1.0, 0.5], 0.9);
        let q = p.multiply_poly(&Poly::mass_shell(2, 1.0)).unwrap();
        let k = [(1.0f64 + 0.49).sqrt(), 0.7];
        assert!(q.eval(&k).norm() < 1e-15);
    }

    #[test]
    fn partial_matches_jet() {
        let p = WavePacket::new(
            2,
            Poly::from_terms(2, [(vec![1, 1], Complex64::new(0.5, 0.2)), (vec![0, 0], c(1.0))]),
            vec![0.4, -0.2],
            vec![1.2, 0.3, 0.3, 0.8],
            vec![0.5, -1.1],
        )
        .unwrap();
        let k = [0.3, 0.9];
        let jet = p.eval_jet(&[Jet::variable(1, k[0], 0), Jet::real(1, k[1])]);
        let sym = p.partial(0).eval(&k);
        assert!((jet.top() - sym).norm() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_widths() {
        let r = WavePacket::new(2, Poly::one(2), vec![0.0; 2], vec![1.0, 2.0, 2.0, 1.0], vec![0.0; 2]);
        assert!(matches!(r, Err(PacketError::NotPositiveDefinite)));
    }
}
