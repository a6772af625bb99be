//! Sparse multivariate polynomials with complex coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::jet::Jet;

/// Polynomial in `dim` variables stored as a map from multi-index to coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

/// Wire form: `[[multi-index...], re, im]` triples.
#[derive(Serialize, Deserialize)]
struct WireTerm(Vec<u32>, f64, f64);

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        let mut p = Poly::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Poly::constant(dim, Complex64::new(1.0, 0.0))
    }

    /// The coordinate `x_j`.
    pub fn var(dim: usize, j: usize) -> Self {
        let mut idx = vec![0; dim];
        idx[j] = 1;
        let mut p = Poly::zero(dim);
        p.add_term(idx, Complex64::new(1.0, 0.0));
        p
    }

    /// Affine linear form `c0 + sum_j a_j x_j`.
    pub fn linear(a: &[Complex64], c0: Complex64) -> Self {
        let dim = a.len();
        let mut p = Poly::constant(dim, c0);
        for (j, &aj) in a.iter().enumerate() {
            p = p.add(&Poly::var(dim, j).scale(aj));
        }
        p
    }

    /// Minkowski square `(x^0)^2 - |x|^2` shifted by `-m^2`, i.e. `k^2 - m^2`.
    pub fn mass_shell(dim: usize, mass: f64) -> Self {
        let mut p = Poly::constant(dim, Complex64::new(-mass * mass, 0.0));
        for j in 0..dim {
            let mut idx = vec![0; dim];
            idx[j] = 2;
            let sign = if j == 0 { 1.0 } else { -1.0 };
            p.add_term(idx, Complex64::new(sign, 0.0));
        }
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, Complex64)>) -> Self {
        let mut p = Poly::zero(dim);
        for (idx, c) in terms {
            assert_eq!(idx.len(), dim, "multi-index length must equal dimension");
            p.add_term(idx, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|k| k.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, idx: Vec<u32>, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(idx) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                // keep the map free of explicit zeros so equality is structural
                if *o.get() == Complex64::new(0.0, 0.0) {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut p = self.clone();
        for (k, v) in &other.terms {
            p.add_term(k.clone(), *v);
        }
        p
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        let mut p = Poly::zero(self.dim);
        for (k, v) in &self.terms {
            p.add_term(k.clone(), v * s);
        }
        p
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut p = Poly::zero(self.dim);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let idx: Vec<u32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                p.add_term(idx, va * vb);
            }
        }
        p
    }

    pub fn conj(&self) -> Poly {
        let mut p = Poly::zero(self.dim);
        for (k, v) in &self.terms {
            p.add_term(k.clone(), v.conj());
        }
        p
    }

    /// Partial derivative with respect to variable `j`.
    pub fn deriv(&self, j: usize) -> Poly {
        let mut p = Poly::zero(self.dim);
        for (k, v) in &self.terms {
            if k[j] > 0 {
                let mut idx = k.clone();
                idx[j] -= 1;
                p.add_term(idx, v * k[j] as f64);
            }
        }
        p
    }

    /// Composition with an affine map: returns `q(x) = p(M x + c)`.
    ///
    /// `m` is row-major `dim x dim`.
    pub fn affine_substitute(&self, m: &[f64], c: &[f64]) -> Poly {
        let d = self.dim;
        assert_eq!(m.len(), d * d);
        assert_eq!(c.len(), d);
        // y_i = sum_j M_ij x_j + c_i as polynomials in x
        let ys: Vec<Poly> = (0..d)
            .map(|i| {
                let a: Vec<Complex64> = (0..d).map(|j| Complex64::new(m[i * d + j], 0.0)).collect();
                Poly::linear(&a, Complex64::new(c[i], 0.0))
            })
            .collect();
        let mut out = Poly::zero(d);
        for (k, v) in &self.terms {
            let mut mono = Poly::constant(d, *v);
            for (i, &e) in k.iter().enumerate() {
                for _ in 0..e {
                    mono = mono.mul(&ys[i]);
                }
            }
            out = out.add(&mono);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in &self.terms {
            let mut m = 1.0;
            for (xi, &e) in x.iter().zip(k) {
                m *= xi.powi(e as i32);
            }
            acc += v * m;
        }
        acc
    }

    pub fn eval_complex(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in &self.terms {
            let mut m = Complex64::new(1.0, 0.0);
            for (xi, &e) in x.iter().zip(k) {
                m *= xi.powi(e as i32);
            }
            acc += v * m;
        }
        acc
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        let bits = x.iter().map(|j| j.bits()).max().unwrap_or(0);
        let mut acc = Jet::real(bits, 0.0);
        for (k, v) in &self.terms {
            let mut m = Jet::constant(bits, *v);
            for (xi, &e) in x.iter().zip(k) {
                if e > 0 {
                    m = m * xi.powi(e);
                }
            }
            acc += m;
        }
        acc
    }

    /// Largest coefficient modulus, used for scale-aware comparisons.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire: Vec<WireTerm> = self
            .terms
            .iter()
            .map(|(k, v)| WireTerm(k.clone(), v.re, v.im))
            .collect();
        wire.serialize(s)
    }
}

/// Deserialization needs the dimension from the multi-index lengths; an
/// empty list deserializes to a dimension-0 zero polynomial that callers
/// re-dimension.
impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire: Vec<WireTerm> = Vec::deserialize(d)?;
        let dim = wire.first().map(|w| w.0.len()).unwrap_or(0);
        let mut p = Poly::zero(dim);
        for WireTerm(idx, re, im) in wire {
            if idx.len() != dim {
                return Err(serde::de::Error::custom(
                    "polynomial multi-indices have inconsistent lengths",
                ));
            }
            p.add_term(idx, Complex64::new(re, im));
        }
        Ok(p)
    }
}

impl Poly {
    /// Fix the dimension of a zero polynomial produced by deserialization.
    pub(crate) fn with_dim(mut self, dim: usize) -> Poly {
        if self.terms.is_empty() {
            self.dim = dim;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn mass_shell_vanishes_on_shell() {
        let p = Poly::mass_shell(3, 1.3);
        let k = [(1.3f64 * 1.3 + 0.4 * 0.4 + 0.2 * 0.2).sqrt(), 0.4, -0.2];
        assert!(p.eval(&k).norm() < 1e-14);
    }

    #[test]
    fn derivative_and_product() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&x).mul(&y).add(&Poly::constant(2, c(3.0)));
        let dp = p.deriv(0);
        assert_eq!(dp.eval(&[2.0, 5.0]), c(20.0));
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn affine_substitution_matches_pointwise() {
        let p = Poly::from_terms(2, [(vec![2, 1], c(1.5)), (vec![0, 1], Complex64::new(0.0, 2.0))]);
        let m = [1.0, 2.0, -0.5, 3.0];
        let sh = [0.3, -1.0];
        let q = p.affine_substitute(&m, &sh);
        let x = [0.7, -0.2];
        let y = [m[0] * x[0] + m[1] * x[1] + sh[0], m[2] * x[0] + m[3] * x[1] + sh[1]];
        assert!((q.eval(&x) - p.eval(&y)).norm() < 1e-13);
    }

    #[test]
    fn cancellation_leaves_zero() {
        let x = Poly::var(1, 0);
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn json_roundtrip() {
        let p = Poly::from_terms(2, [(vec![1, 0], Complex64::new(0.1, -0.3)), (vec![0, 2], c(2.0))]);
        let s = serde_json::to_string(&p).unwrap();
        let q: Poly = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
