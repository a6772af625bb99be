//! Truncated multivariate jets with nilpotent first-order infinitesimals.
//!
//! A [`Jet`] carries one complex coefficient per subset of up to
//! [`MAX_BITS`] independent infinitesimals `e_i` with `e_i^2 = 0`. Evaluating
//! an expression on jets seeded with `x_i + e_i` yields, in the coefficient of
//! `e_1 e_2 ... e_n`, the exact mixed partial derivative
//! `d^n/dx_1...dx_n` of the expression. This is how every derivative of a
//! mass-shell distribution is taken: no finite differences in inner loops.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Maximum number of independent infinitesimals.
pub const MAX_BITS: usize = 4;
const LEN: usize = 1 << MAX_BITS;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex reciprocal that does not square the modulus, so it stays finite
/// for tiny and huge arguments (Smith's scaling).
fn robust_inv(a: Complex64) -> Complex64 {
    if a.im == 0.0 {
        return Complex64::new(1.0 / a.re, 0.0);
    }
    if a.re.abs() >= a.im.abs() {
        let r = a.im / a.re;
        let den = a.re + a.im * r;
        Complex64::new(1.0 / den, -r / den)
    } else {
        let r = a.re / a.im;
        let den = a.re * r + a.im;
        Complex64::new(r / den, -1.0 / den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    bits: u8,
    c: [Complex64; LEN],
}

impl Jet {
    pub fn constant(bits: usize, v: Complex64) -> Self {
        assert!(bits <= MAX_BITS, "at most {MAX_BITS} infinitesimals supported");
        let mut c = [ZERO; LEN];
        c[0] = v;
        Jet { bits: bits as u8, c }
    }

    pub fn real(bits: usize, v: f64) -> Self {
        Self::constant(bits, Complex64::new(v, 0.0))
    }

    /// `v + e_bit`.
    pub fn variable(bits: usize, v: f64, bit: usize) -> Self {
        assert!(bit < bits);
        let mut j = Self::real(bits, v);
        j.c[1 << bit] = Complex64::new(1.0, 0.0);
        j
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.bits as usize
    }

    #[inline]
    fn len(&self) -> usize {
        1 << self.bits
    }

    /// Value part (coefficient of the empty monomial).
    #[inline]
    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    /// Real part of the value; used for branch decisions (signs, supports).
    #[inline]
    pub fn re(&self) -> f64 {
        self.c[0].re
    }

    /// Coefficient of the monomial selected by `mask`.
    pub fn coeff(&self, mask: usize) -> Complex64 {
        self.c[mask]
    }

    /// Coefficient of the product of all infinitesimals.
    pub fn top(&self) -> Complex64 {
        self.c[self.len() - 1]
    }

    fn nilpotent(&self) -> Jet {
        let mut n = *self;
        n.c[0] = ZERO;
        n
    }

    fn unify(a: &Jet, b: &Jet) -> usize {
        a.bits.max(b.bits) as usize
    }

    fn widen(&self, bits: usize) -> Jet {
        if self.bits as usize == bits {
            *self
        } else {
            // lower-dimensional jets embed as jets constant in the extra bits
            let mut j = *self;
            j.bits = bits as u8;
            j
        }
    }

    /// `f(self)` given Taylor coefficients `taylor[k] = f^{(k)}(x0) / k!`.
    ///
    /// Only `bits + 1` coefficients are ever needed since the nilpotent part
    /// raised to a power beyond the bit count vanishes.
    pub fn compose(&self, taylor: &[Complex64]) -> Jet {
        let n = self.nilpotent();
        let mut out = Jet::constant(self.bits(), taylor[0]);
        let mut pow = Jet::real(self.bits(), 1.0);
        for t in taylor.iter().take(self.bits() + 1).skip(1) {
            pow = pow * n;
            out += pow * *t;
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        let mut taylor = [ZERO; MAX_BITS + 1];
        let mut fact = 1.0;
        for (k, t) in taylor.iter_mut().enumerate().take(self.bits() + 1) {
            if k > 0 {
                fact *= k as f64;
            }
            *t = e / fact;
        }
        self.compose(&taylor[..=self.bits()])
    }

    pub fn recip(&self) -> Jet {
        let inv = robust_inv(self.c[0]);
        let mut taylor = [ZERO; MAX_BITS + 1];
        let mut p = inv;
        for t in taylor.iter_mut().take(self.bits() + 1) {
            *t = p;
            p = -p * inv;
        }
        self.compose(&taylor[..=self.bits()])
    }

    /// Principal square root; the value part must not sit on the branch cut.
    pub fn sqrt(&self) -> Jet {
        let a = self.c[0];
        let s = a.sqrt();
        let mut taylor = [ZERO; MAX_BITS + 1];
        // binom(1/2, k) a^{1/2 - k}
        let mut binom = 1.0;
        let mut p = s;
        let inv = robust_inv(a);
        for (k, t) in taylor.iter_mut().enumerate().take(self.bits() + 1) {
            if k > 0 {
                binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
                p *= inv;
            }
            *t = p * binom;
        }
        self.compose(&taylor[..=self.bits()])
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::real(self.bits(), 1.0);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    /// Absolute value for real-valued jets, branching on the sign of the value.
    pub fn abs_real(&self) -> Jet {
        if self.re() < 0.0 {
            -*self
        } else {
            *self
        }
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        let mut j = *self;
        for v in j.c.iter_mut().take(self.len()) {
            *v *= s;
        }
        j
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let bits = Jet::unify(&self, &rhs);
        let mut a = self.widen(bits);
        let b = rhs.widen(bits);
        for i in 0..a.len() {
            a.c[i] += b.c[i];
        }
        a
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let bits = Jet::unify(&self, &rhs);
        let a = self.widen(bits);
        let b = rhs.widen(bits);
        let mut out = Jet::constant(bits, ZERO);
        for s in 0..a.len() {
            // sum over submasks t of s
            let mut acc = ZERO;
            let mut t = s;
            loop {
                acc += a.c[t] * b.c[s ^ t];
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            out.c[s] = acc;
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Add<Complex64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Complex64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn product_rule_single_bit() {
        let x = Jet::variable(1, 2.0, 0);
        let y = x * x * x; // d/dx x^3 = 12 at 2
        assert_eq!(y.value(), c(8.0));
        assert_eq!(y.top(), c(12.0));
    }

    #[test]
    fn mixed_partial_two_bits() {
        let x = Jet::variable(2, 1.5, 0);
        let y = Jet::variable(2, -0.5, 1);
        // d^2/dxdy exp(x y) = (1 + x y) exp(x y)
        let f = (x * y).exp();
        let expect = (1.0 + 1.5 * -0.5) * (1.5f64 * -0.5).exp();
        assert!((f.top().re - expect).abs() < 1e-14);
    }

    #[test]
    fn recip_and_sqrt_derivatives() {
        let x = Jet::variable(1, 3.0, 0);
        assert!((x.recip().top().re + 1.0 / 9.0).abs() < 1e-15);
        assert!((x.sqrt().top().re - 0.5 / 3f64.sqrt()).abs() < 1e-15);
        // third derivative of 1/x through three copies of the same variable
        let a = Jet::variable(3, 2.0, 0) + Jet::variable(3, 0.0, 1) + Jet::variable(3, 0.0, 2);
        assert!((a.recip().top().re + 6.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn mixed_widths_combine() {
        let x = Jet::variable(1, 2.0, 0);
        let y = Jet::variable(2, 1.0, 1);
        let p = x * y;
        assert_eq!(p.bits(), 2);
        assert_eq!(p.top(), c(1.0));
    }
}
