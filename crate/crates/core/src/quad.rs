//! Adaptive Gauss-Kronrod quadrature, principal-value and Hadamard
//! finite-part rules, and oscillatory integration.
//!
//! Every routine returns a [`SmearValue`]: the integral, an absolute error
//! estimate and the number of integrand evaluations. Multi-dimensional
//! integrals are computed by nesting the one-dimensional adaptive rule; inner
//! error estimates are propagated through the outer quadrature weights.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::QuadError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Half-width of the integration window in units of packet width.
    pub truncation_radius: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_depth: 50,
            truncation_radius: 12.0,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(QuadError::InvalidSpec("tolerances must be positive".into()));
        }
        if self.max_depth < 1 {
            return Err(QuadError::InvalidSpec("max_depth must be at least 1".into()));
        }
        if !(self.truncation_radius >= 6.0) {
            return Err(QuadError::InvalidSpec("truncation_radius must be at least 6".into()));
        }
        Ok(())
    }

    /// Tolerances for an inner integral nested under an outer one of the given width.
    fn nested(&self, outer_width: f64) -> QuadSpec {
        QuadSpec {
            abs_tol: self.abs_tol * 0.1 / outer_width.max(1.0),
            rel_tol: self.rel_tol * 0.1,
            ..*self
        }
    }
}

/// A complex value with an absolute error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmearValue {
    pub value: Complex64,
    pub err_est: f64,
    pub n_evals: u64,
    /// False when the adaptive scheme stopped before meeting its tolerance.
    #[serde(default = "yes")]
    pub converged: bool,
}

fn yes() -> bool {
    true
}

impl SmearValue {
    pub fn exact(value: Complex64) -> Self {
        SmearValue {
            value,
            err_est: 0.0,
            n_evals: 0,
            converged: true,
        }
    }

    pub fn zero() -> Self {
        SmearValue::exact(Complex64::new(0.0, 0.0))
    }

    pub fn scale(self, s: Complex64) -> Self {
        SmearValue {
            value: self.value * s,
            err_est: self.err_est * s.norm(),
            ..self
        }
    }

    /// Product with first-order error propagation.
    pub fn times(self, other: SmearValue) -> Self {
        SmearValue {
            value: self.value * other.value,
            err_est: self.err_est * other.value.norm()
                + other.err_est * self.value.norm()
                + self.err_est * other.err_est,
            n_evals: self.n_evals + other.n_evals,
            converged: self.converged && other.converged,
        }
    }

    /// `|self - other| <= tol_rel * max(|self|, |other|) + combined error`.
    pub fn agrees_with(&self, other: &SmearValue, tol_rel: f64) -> bool {
        let scale = self.value.norm().max(other.value.norm());
        (self.value - other.value).norm() <= tol_rel * scale + self.err_est + other.err_est
    }

    pub fn into_result(self) -> Result<SmearValue, QuadError> {
        if self.converged {
            Ok(self)
        } else {
            Err(QuadError::ToleranceNotMet(self))
        }
    }
}

impl Add for SmearValue {
    type Output = SmearValue;
    fn add(self, rhs: SmearValue) -> SmearValue {
        SmearValue {
            value: self.value + rhs.value,
            err_est: self.err_est + rhs.err_est,
            n_evals: self.n_evals + rhs.n_evals,
            converged: self.converged && rhs.converged,
        }
    }
}

impl Mul<f64> for SmearValue {
    type Output = SmearValue;
    fn mul(self, rhs: f64) -> SmearValue {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

// Gauss-Kronrod 10/21 abscissae and weights (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208573957983,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651748,
];

struct Segment {
    a: f64,
    b: f64,
    depth: u32,
    value: Complex64,
    err: f64,
    inner: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// One Kronrod panel: value, rule error, propagated inner error.
struct Panel {
    value: Complex64,
    err: f64,
    inner: f64,
    inner_ok: bool,
}

/// Apply the 21-point Kronrod rule on `[a, b]`; the integrand returns its
/// own value plus an inner error estimate (zero for plain functions).
fn gk21<F: FnMut(f64) -> SmearValue>(f: &mut F, a: f64, b: f64, evals: &mut u64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    *evals += fc.n_evals.max(1);
    let mut resk = fc.value * WGK[10];
    let mut resg = Complex64::new(0.0, 0.0);
    let mut resabs = fc.value.norm() * WGK[10];
    let mut inner = fc.err_est * WGK[10];
    let mut inner_ok = fc.converged;
    let mut fv1 = [Complex64::new(0.0, 0.0); 10];
    let mut fv2 = [Complex64::new(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        *evals += f1.n_evals.max(1) + f2.n_evals.max(1);
        inner_ok &= f1.converged && f2.converged;
        fv1[j] = f1.value;
        fv2[j] = f2.value;
        let s = f1.value + f2.value;
        resk += s * WGK[j];
        resabs += WGK[j] * (f1.value.norm() + f2.value.norm());
        inner += WGK[j] * (f1.err_est + f2.err_est);
        if j % 2 == 1 {
            resg += s * WG[j / 2];
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * (fc.value - mean).norm();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if round > err {
        err = round;
    }
    Panel {
        value: result,
        err,
        inner: inner * half.abs(),
        inner_ok,
    }
}

/// Options for a single one-dimensional adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Adaptive1d {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub init_pieces: usize,
    /// Segments narrower than this are never split.
    pub min_width: f64,
    pub max_segments: usize,
}

impl Adaptive1d {
    pub fn from_spec(spec: &QuadSpec) -> Self {
        Adaptive1d {
            abs_tol: spec.abs_tol,
            rel_tol: spec.rel_tol,
            max_depth: spec.max_depth,
            init_pieces: 8,
            min_width: 0.0,
            max_segments: 4000,
        }
    }

    pub fn pieces(mut self, n: usize) -> Self {
        self.init_pieces = n.max(1);
        self
    }

    pub fn min_width(mut self, w: f64) -> Self {
        self.min_width = w;
        self
    }

    /// Globally adaptive integration over `[a, b]`.
    pub fn run<F: FnMut(f64) -> SmearValue>(&self, mut f: F, a: f64, b: f64) -> SmearValue {
        let mut evals = 0u64;
        if a == b {
            return SmearValue::zero();
        }
        let n = self.init_pieces;
        let mut heap = BinaryHeap::new();
        let mut done: Vec<Segment> = Vec::new();
        let mut total = Complex64::new(0.0, 0.0);
        let mut total_err = 0.0;
        let mut inner_ok = true;
        let panel = |f: &mut F, lo: f64, hi: f64, depth: u32, evals: &mut u64, ok: &mut bool| {
            let p = gk21(f, lo, hi, evals);
            *ok &= p.inner_ok;
            Segment {
                a: lo,
                b: hi,
                depth,
                value: p.value,
                err: p.err,
                inner: p.inner,
            }
        };
        for i in 0..n {
            let lo = a + (b - a) * i as f64 / n as f64;
            let hi = a + (b - a) * (i + 1) as f64 / n as f64;
            let seg = panel(&mut f, lo, hi, 0, &mut evals, &mut inner_ok);
            total += seg.value;
            total_err += seg.err;
            heap.push(seg);
        }
        // refinement is driven by the rule error alone: inner errors do not
        // shrink when the outer axis is split
        let mut converged = true;
        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.norm());
            if total_err <= tol {
                break;
            }
            if !total_err.is_finite() {
                converged = false;
                break;
            }
            if heap.len() + done.len() >= self.max_segments {
                converged = false;
                break;
            }
            let Some(seg) = heap.pop() else {
                converged = false;
                break;
            };
            if seg.depth >= self.max_depth || (seg.b - seg.a).abs() <= self.min_width {
                // cannot refine further; freeze it
                done.push(seg);
                continue;
            }
            let mid = 0.5 * (seg.a + seg.b);
            let s1 = panel(&mut f, seg.a, mid, seg.depth + 1, &mut evals, &mut inner_ok);
            let s2 = panel(&mut f, mid, seg.b, seg.depth + 1, &mut evals, &mut inner_ok);
            total += s1.value + s2.value - seg.value;
            total_err += s1.err + s2.err - seg.err;
            heap.push(s1);
            heap.push(s2);
        }
        // re-sum to shed accumulated cancellation in the running totals
        let mut value = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        let mut inner = 0.0;
        for s in heap.iter().chain(done.iter()) {
            value += s.value;
            err += s.err;
            inner += s.inner;
        }
        let tol = self.abs_tol.max(self.rel_tol * value.norm());
        SmearValue {
            value,
            err_est: err + inner,
            n_evals: evals,
            converged: converged && inner_ok && err <= tol * 1.0001,
        }
    }
}

/// Integrate a plain function over `[a, b]`.
pub fn integrate_1d<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, spec: &QuadSpec) -> SmearValue {
    Adaptive1d::from_spec(spec).run(|x| SmearValue::exact(f(x)), a, b)
}

/// Nested adaptive integration of an integrand that itself returns a
/// [`SmearValue`] (so inner errors propagate).
pub fn integrate_box_sv<F>(f: &F, bounds: &[(f64, f64)], spec: &QuadSpec) -> SmearValue
where
    F: Fn(&[f64]) -> SmearValue,
{
    let mut x = vec![0.0; bounds.len()];
    nest(f, bounds, 0, &mut x, spec)
}

fn nest<F>(f: &F, bounds: &[(f64, f64)], level: usize, x: &mut Vec<f64>, spec: &QuadSpec) -> SmearValue
where
    F: Fn(&[f64]) -> SmearValue,
{
    let n = bounds.len();
    if n == 0 {
        return f(x);
    }
    let (a, b) = bounds[level];
    if level + 1 == n {
        let opts = Adaptive1d::from_spec(spec);
        return opts.run(
            |xi| {
                x[level] = xi;
                f(x)
            },
            a,
            b,
        );
    }
    let inner = spec.nested(b - a);
    let opts = Adaptive1d::from_spec(spec);
    let mut scratch = x.clone();
    opts.run(
        |xi| {
            scratch[level] = xi;
            let mut local = scratch.clone();
            nest(f, bounds, level + 1, &mut local, &inner)
        },
        a,
        b,
    )
}

/// `integrate_nd`: integral of `g` over the box `bounds` (the truncated window).
pub fn integrate_nd<F>(g: F, bounds: &[(f64, f64)], spec: &QuadSpec) -> Result<SmearValue, QuadError>
where
    F: Fn(&[f64]) -> Complex64,
{
    spec.validate()?;
    integrate_box_sv(&|x: &[f64]| SmearValue::exact(g(x)), bounds, spec).into_result()
}

/// Window `center +- truncation_radius * width` on every axis.
pub fn gaussian_window(center: &[f64], width: &[f64], spec: &QuadSpec) -> Vec<(f64, f64)> {
    center
        .iter()
        .zip(width)
        .map(|(c, w)| (c - spec.truncation_radius * w, c + spec.truncation_radius * w))
        .collect()
}

fn check_pole(pole: f64, lo: f64, hi: f64) -> Result<bool, QuadError> {
    if (pole - lo).abs() < 1e-6 || (hi - pole).abs() < 1e-6 {
        return Err(QuadError::PoleAtBoundary { pole, lo, hi });
    }
    Ok(pole > lo && pole < hi)
}

/// Which singular kernel to fold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kernel {
    Simple,
    Double,
}

fn singular<F: Fn(f64) -> Complex64>(
    g: &F,
    pole: f64,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
    kernel: Kernel,
) -> Result<SmearValue, QuadError> {
    let inside = check_pole(pole, lo, hi)?;
    let power = if kernel == Kernel::Simple { 1 } else { 2 };
    let plain = |u: f64| g(u) / (u - pole).powi(power);
    let opts = Adaptive1d::from_spec(spec);
    if !inside {
        return Ok(opts.run(|u| SmearValue::exact(plain(u)), lo, hi));
    }
    let r = (pole - lo).min(hi - pole);
    let g0 = g(pole);
    // folded symmetric window [pole - r, pole + r]
    let fold = opts.min_width(r * 1e-3).run(
        |x| {
            let v = match kernel {
                Kernel::Simple => (g(pole + x) - g(pole - x)) / x,
                Kernel::Double => (g(pole + x) + g(pole - x) - g0 * 2.0) / (x * x),
            };
            SmearValue::exact(v)
        },
        0.0,
        r,
    );
    let mut total = fold;
    if kernel == Kernel::Double {
        // finite part of the window integral of 1/x^2
        total = total + SmearValue::exact(-g0 * 2.0 / r);
    }
    let left = pole - r;
    let right = pole + r;
    if left - lo > 0.0 {
        total = total + opts.run(|u| SmearValue::exact(plain(u)), lo, left);
    }
    if hi - right > 0.0 {
        total = total + opts.run(|u| SmearValue::exact(plain(u)), right, hi);
    }
    total.n_evals += 1;
    Ok(total)
}

/// Principal value of `int g(u) / (u - pole) du` over `[lo, hi]`.
pub fn pv_simple<F: Fn(f64) -> Complex64>(
    g: F,
    pole: f64,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
) -> Result<SmearValue, QuadError> {
    singular(&g, pole, lo, hi, spec, Kernel::Simple)
}

/// Hadamard finite part by symmetric Taylor subtraction only (no cross-check).
pub fn fp_taylor<F: Fn(f64) -> Complex64>(
    g: F,
    pole: f64,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
) -> Result<SmearValue, QuadError> {
    singular(&g, pole, lo, hi, spec, Kernel::Double)
}

/// Both finite-part evaluations and their reconciliation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FinitePart {
    pub taylor: SmearValue,
    pub pole_derivative: SmearValue,
    /// The Taylor value with error inflated by the disagreement.
    pub value: SmearValue,
}

/// Hadamard finite part of `int g(u) / (u - pole)^2 du` over `[lo, hi]`,
/// computed by symmetric Taylor subtraction and cross-checked against the
/// pole-location derivative of the principal value.
pub fn fp_double_detail<F: Fn(f64) -> Complex64>(
    g: F,
    pole: f64,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
) -> Result<FinitePart, QuadError> {
    let taylor = singular(&g, pole, lo, hi, spec, Kernel::Double)?;
    let r = (pole - lo).min(hi - pole);
    let h = (r * 2e-3).min(1e-2);
    let tight = QuadSpec {
        abs_tol: spec.abs_tol * 1e-2,
        rel_tol: spec.rel_tol * 1e-2,
        ..*spec
    };
    let pv = |s: f64| singular(&g, s, lo, hi, &tight, Kernel::Simple);
    let p2 = pv(pole + 2.0 * h)?;
    let p1 = pv(pole + h)?;
    let m1 = pv(pole - h)?;
    let m2 = pv(pole - 2.0 * h)?;
    let five = (-p2.value + p1.value * 8.0 - m1.value * 8.0 + m2.value) / (12.0 * h);
    let three = (p1.value - m1.value) / (2.0 * h);
    let noise = (p2.err_est + 8.0 * p1.err_est + 8.0 * m1.err_est + m2.err_est) / (12.0 * h);
    // the 3-point/5-point gap bounds the 5-point truncation error generously
    let trunc = (five - three).norm() * 0.25;
    let pole_derivative = SmearValue {
        value: five,
        err_est: noise + trunc,
        n_evals: p2.n_evals + p1.n_evals + m1.n_evals + m2.n_evals,
        converged: p2.converged && p1.converged && m1.converged && m2.converged,
    };
    let gap = (taylor.value - pole_derivative.value).norm();
    let combined = taylor.err_est + pole_derivative.err_est;
    if gap > 100.0 * combined.max(f64::MIN_POSITIVE) && gap > 1e3 * f64::EPSILON * taylor.value.norm() {
        return Err(QuadError::InconsistentFinitePart {
            taylor: taylor.value,
            derivative: pole_derivative.value,
            gap,
            combined,
        });
    }
    let value = SmearValue {
        err_est: taylor.err_est + gap,
        n_evals: taylor.n_evals + pole_derivative.n_evals,
        ..taylor
    };
    Ok(FinitePart {
        taylor,
        pole_derivative,
        value,
    })
}

pub fn fp_double<F: Fn(f64) -> Complex64>(
    g: F,
    pole: f64,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
) -> Result<SmearValue, QuadError> {
    Ok(fp_double_detail(g, pole, lo, hi, spec)?.value)
}

/// Number of initial pieces needed to put a few nodes on every half period
/// of `exp(i t theta)` along `[a, b]`.
pub fn oscillation_pieces<P: Fn(f64) -> f64>(theta: P, t: f64, a: f64, b: f64) -> usize {
    if t == 0.0 {
        return 8;
    }
    let samples = 64;
    let mut max_slope: f64 = 0.0;
    let mut prev = theta(a);
    let dx = (b - a) / samples as f64;
    for i in 1..=samples {
        let cur = theta(a + dx * i as f64);
        max_slope = max_slope.max(((cur - prev) / dx).abs());
        prev = cur;
    }
    let half_periods = t.abs() * max_slope * (b - a).abs() / std::f64::consts::PI;
    (half_periods.ceil() as usize / 2).clamp(8, 2048)
}

/// `int g(k) exp(i t theta(k)) dk` over a box, with the initial subdivision
/// along each axis scaled to the local phase gradient.
pub fn oscillatory_integrate<G, P>(
    g: G,
    theta: P,
    t: f64,
    bounds: &[(f64, f64)],
    spec: &QuadSpec,
) -> Result<SmearValue, QuadError>
where
    G: Fn(&[f64]) -> Complex64,
    P: Fn(&[f64]) -> f64,
{
    spec.validate()?;
    if t == 0.0 {
        return integrate_nd(g, bounds, spec);
    }
    let mut x = vec![0.0; bounds.len()];
    let integrand = |k: &[f64]| g(k) * Complex64::new(0.0, t * theta(k)).exp();
    osc_nest(&integrand, &theta, t, bounds, 0, &mut x, spec).into_result()
}

fn osc_nest<F, P>(
    f: &F,
    theta: &P,
    t: f64,
    bounds: &[(f64, f64)],
    level: usize,
    x: &mut Vec<f64>,
    spec: &QuadSpec,
) -> SmearValue
where
    F: Fn(&[f64]) -> Complex64,
    P: Fn(&[f64]) -> f64,
{
    let n = bounds.len();
    let (a, b) = bounds[level];
    let mut probe = x.clone();
    for (l, &(lo, hi)) in bounds.iter().enumerate().skip(level + 1) {
        probe[l] = 0.5 * (lo + hi);
    }
    let pieces = oscillation_pieces(
        |xi| {
            let mut p = probe.clone();
            p[level] = xi;
            theta(&p)
        },
        t,
        a,
        b,
    );
    let opts = Adaptive1d::from_spec(spec).pieces(pieces);
    if level + 1 == n {
        let mut local = x.clone();
        return opts.run(
            |xi| {
                local[level] = xi;
                SmearValue::exact(f(&local))
            },
            a,
            b,
        );
    }
    let inner = spec.nested(b - a);
    let mut scratch = x.clone();
    opts.run(
        |xi| {
            scratch[level] = xi;
            let mut local = scratch.clone();
            osc_nest(f, theta, t, bounds, level + 1, &mut local, &inner)
        },
        a,
        b,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn kronrod_tables_are_exact_on_monomials() {
        let spec = QuadSpec::default();
        for k in 0..=30 {
            let mut evals = 0;
            let v = gk21(&mut |x: f64| SmearValue::exact(c(x.powi(k))), -1.0, 1.0, &mut evals).value;
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((v.re - exact).abs() < 1e-15, "degree {k}");
        }
        // Gauss weights sum to the interval length
        let s: f64 = WG.iter().sum::<f64>() * 2.0;
        assert!((s - 2.0).abs() < 1e-15);
        let _ = spec;
    }

    #[test]
    fn gaussian_integral() {
        let spec = QuadSpec::default();
        let v = integrate_nd(|x| c((-x[0] * x[0]).exp()), &[(-12.0, 12.0)], &spec).unwrap();
        assert!((v.value.re - PI.sqrt()).abs() / PI.sqrt() < 1e-10);
    }

    #[test]
    fn odd_two_dimensional_integral_vanishes() {
        let spec = QuadSpec::default();
        let v = integrate_nd(
            |x| c((-x[0] * x[0] - x[1] * x[1]).exp() * x[0]),
            &[(-12.0, 12.0), (-12.0, 12.0)],
            &spec,
        )
        .unwrap();
        assert!(v.value.norm() < 1e-12);
    }

    #[test]
    fn fast_oscillation_is_not_spurious() {
        let spec = QuadSpec::default();
        let v = integrate_nd(|x| c((-x[0] * x[0]).exp() * (50.0 * x[0]).cos()), &[(-12.0, 12.0)], &spec)
            .unwrap();
        assert!(v.value.norm() < 1e-10, "{:?}", v);
    }

    #[test]
    fn pv_odd_integrand_vanishes() {
        let spec = QuadSpec::default();
        let v = pv_simple(|u| c((-u * u).exp()), 0.0, -12.0, 12.0, &spec).unwrap();
        assert!(v.value.norm() < 1e-13);
    }

    #[test]
    fn pv_rejects_pole_on_boundary() {
        let spec = QuadSpec::default();
        let r = pv_simple(|u| c(u), 1.0, 1.0 - 1e-8, 3.0, &spec);
        assert!(matches!(r, Err(QuadError::PoleAtBoundary { .. })));
    }

    #[test]
    fn pv_antisymmetry_under_reflection() {
        let spec = QuadSpec::default();
        let u0 = 0.3;
        let g = |u: f64| c((-(u - 1.0) * (u - 1.0)).exp() * (1.0 + 0.2 * u));
        let a = pv_simple(g, u0, u0 - 12.0, u0 + 12.0, &spec).unwrap();
        let b = pv_simple(|u| g(2.0 * u0 - u), u0, u0 - 12.0, u0 + 12.0, &spec).unwrap();
        assert!((a.value + b.value).norm() <= 1e-9 * a.value.norm());
    }

    #[test]
    fn fp_removable_singularity() {
        let spec = QuadSpec::default();
        let u0 = 0.4;
        let g = |u: f64| c((u - u0) * (u - u0) * (-u * u).exp());
        let fp = fp_double(g, u0, -12.0, 12.0, &spec).unwrap();
        let plain = integrate_nd(|x| c((-x[0] * x[0]).exp()), &[(-12.0, 12.0)], &spec).unwrap();
        assert!((fp.value - plain.value).norm() / plain.value.norm() < 1e-8);
    }

    #[test]
    fn oscillatory_linear_phase_closed_form() {
        let spec = QuadSpec::default();
        // int exp(-x^2/2) exp(i t x) dx = sqrt(2 pi) exp(-t^2/2)
        for t in [0.0, 1.5, 4.0] {
            let v = oscillatory_integrate(|x| c((-0.5 * x[0] * x[0]).exp()), |x| x[0], t, &[(-12.0, 12.0)], &spec)
                .unwrap();
            let exact = (2.0 * PI).sqrt() * (-0.5 * t * t).exp();
            assert!((v.value.re - exact).abs() <= 1e-8 * exact.max(1e-3), "t={t}: {:?}", v);
        }
    }
}
