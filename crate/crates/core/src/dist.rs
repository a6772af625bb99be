//! Mass-shell distributions and their smearing against wave packets.
//!
//! A [`DistExpr`] is a sum of terms; each term is a product of one
//! [`ShellFactor`] per momentum argument times at most one momentum
//! conservation delta `delta(sum_l s_l k_l)`.
//!
//! Shell factors are integrated over the spatial momenta of their sheet with
//! the `1/(2 omega)` Jacobian. The derivative shell `delta'` uses
//! `<delta'(k^2 - m^2) theta(+-k^0), f> = -int dk/(2 omega) d_0[f / (2 k^0)]` at
//! `k^0 = +-omega`, with `d_0` taken exactly on jets (including the chain rule
//! through the conservation substitution). Principal-value and finite-part
//! powers of `1/(k^2 - m^2)` are split by partial fractions in `k^0` and
//! handed to the singular quadrature rules.

use std::cell::Cell;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::DistError;
use crate::jet::{Jet, MAX_BITS};
use crate::packets::WavePacket;
use crate::quad::{self, Adaptive1d, QuadSpec, SmearValue};
use crate::waveop::Multiplier;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Delta,
    DeltaPrime,
    PvPow1,
    FpPow2,
    Smooth,
}

impl FactorKind {
    pub fn is_shell(self) -> bool {
        matches!(self, FactorKind::Delta | FactorKind::DeltaPrime)
    }

    pub fn is_singular(self) -> bool {
        matches!(self, FactorKind::PvPow1 | FactorKind::FpPow2)
    }
}

/// One per-variable factor of a term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellFactor {
    pub kind: FactorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<Multiplier>,
}

impl ShellFactor {
    pub fn delta(sign: Sign, mass: f64) -> Self {
        ShellFactor {
            kind: FactorKind::Delta,
            sign: Some(sign),
            mass,
            multiplier: None,
        }
    }

    pub fn delta_prime(sign: Sign, mass: f64) -> Self {
        ShellFactor {
            kind: FactorKind::DeltaPrime,
            sign: Some(sign),
            mass,
            multiplier: None,
        }
    }

    pub fn pv(mass: f64) -> Self {
        ShellFactor {
            kind: FactorKind::PvPow1,
            sign: None,
            mass,
            multiplier: None,
        }
    }

    pub fn fp(mass: f64) -> Self {
        ShellFactor {
            kind: FactorKind::FpPow2,
            sign: None,
            mass,
            multiplier: None,
        }
    }

    pub fn smooth(mass: f64) -> Self {
        ShellFactor {
            kind: FactorKind::Smooth,
            sign: None,
            mass,
            multiplier: None,
        }
    }

    pub fn with_multiplier(mut self, m: Multiplier) -> Self {
        self.multiplier = Some(match self.multiplier.take() {
            Some(old) => old.then(m),
            None => m,
        });
        self
    }

    pub fn validate(&self) -> Result<(), DistError> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(DistError::InvalidFactor(format!("mass must be positive, got {}", self.mass)));
        }
        match (self.kind.is_shell(), self.sign) {
            (true, None) => Err(DistError::InvalidFactor("shell factors need an energy sign".into())),
            (false, Some(_)) => Err(DistError::InvalidFactor(
                "only shell factors carry an energy sign".into(),
            )),
            _ => Ok(()),
        }
    }

    fn sigma(&self) -> f64 {
        self.sign.map(Sign::value).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    pub factors: Vec<ShellFactor>,
    /// Signed incidence vector of `delta(sum_l s_l k_l)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation: Option<Vec<i8>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistExpr {
    pub n_args: usize,
    pub terms: Vec<Term>,
}

impl DistExpr {
    pub fn new(n_args: usize, terms: Vec<Term>) -> Result<Self, DistError> {
        let e = DistExpr { n_args, terms };
        e.validate()?;
        Ok(e)
    }

    /// Single-variable expression made of one factor.
    pub fn single(factor: ShellFactor) -> Self {
        DistExpr {
            n_args: 1,
            terms: vec![Term {
                coeff: Complex64::new(1.0, 0.0),
                factors: vec![factor],
                conservation: None,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        for t in &self.terms {
            if t.factors.len() != self.n_args {
                return Err(DistError::DimensionMismatch {
                    expected: self.n_args,
                    got: t.factors.len(),
                });
            }
            for f in &t.factors {
                f.validate()?;
            }
            if let Some(s) = &t.conservation {
                if s.len() != self.n_args {
                    return Err(DistError::DimensionMismatch {
                        expected: self.n_args,
                        got: s.len(),
                    });
                }
                if s.iter().any(|v| !matches!(v, -1..=1)) {
                    return Err(DistError::InvalidFactor("incidence entries must be -1, 0 or +1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn scale(&self, s: Complex64) -> DistExpr {
        let mut e = self.clone();
        for t in &mut e.terms {
            t.coeff *= s;
        }
        e
    }

    pub fn add(&self, other: &DistExpr) -> Result<DistExpr, DistError> {
        if self.n_args != other.n_args {
            return Err(DistError::DimensionMismatch {
                expected: self.n_args,
                got: other.n_args,
            });
        }
        let mut e = self.clone();
        e.terms.extend(other.terms.iter().cloned());
        Ok(e)
    }

    /// Attach (compose) a smooth multiplier on variable `var` of every term.
    pub fn apply_multiplier(&self, var: usize, mult: &Multiplier) -> DistExpr {
        assert!(var < self.n_args, "variable index out of range");
        let mut e = self.clone();
        for t in &mut e.terms {
            let f = t.factors[var].clone();
            t.factors[var] = f.with_multiplier(mult.clone());
        }
        e
    }
}

/// Mollified evaluation parameters for over-determined shell products.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    /// Largest mollifier width, in units of `m^2`.
    pub eps0: f64,
    /// Number of halvings used for Richardson extrapolation.
    pub levels: usize,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization { eps0: 0.1, levels: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmearConfig {
    /// Minimum distance of a pointwise singular factor from its shell, in
    /// units of `m^2`.
    pub pole_margin: f64,
    pub regularization: Regularization,
}

impl Default for SmearConfig {
    fn default() -> Self {
        SmearConfig {
            pole_margin: 0.05,
            regularization: Regularization::default(),
        }
    }
}

fn spatial_jets(k: &[f64]) -> Vec<Jet> {
    k.iter().map(|&v| Jet::real(0, v)).collect()
}

fn test_fn(packet: &WavePacket, mult: Option<&Multiplier>, k: &[Jet]) -> Jet {
    let v = packet.eval_jet(k);
    match mult {
        Some(m) => v * m.eval_jet(k),
        None => v,
    }
}

fn in_window(x: f64, w: (f64, f64)) -> bool {
    x >= w.0 && x <= w.1
}

fn omega(spatial: &[f64], mass: f64) -> f64 {
    (spatial.iter().map(|v| v * v).sum::<f64>() + mass * mass).sqrt()
}

/// `k^0` windows for singular or band-limited inner integrals at fixed
/// spatial momentum.
fn k0_windows(packet: &WavePacket, mult: Option<&Multiplier>, spatial: &[f64], poles: &[f64], spec: &QuadSpec) -> Vec<(f64, f64)> {
    if let Some((eps, mb)) = mult.and_then(|m| m.shell_band()) {
        let w2 = spatial.iter().map(|v| v * v).sum::<f64>() + mb * mb;
        let lo = (w2 - eps).max(0.0).sqrt();
        let hi = (w2 + eps).sqrt();
        return vec![(-hi, -lo), (lo, hi)];
    }
    let s0 = packet.marginal_sigma(0);
    let c0 = packet.center()[0];
    let mut lo = c0 - spec.truncation_radius * s0;
    let mut hi = c0 + spec.truncation_radius * s0;
    for &p in poles {
        if p > lo - s0 && p < hi + s0 {
            lo = lo.min(p - s0);
            hi = hi.max(p + s0);
        }
    }
    vec![(lo, hi)]
}

/// Inner `k^0` integral of `g / (k^2 - m^2)^power` by partial fractions.
fn singular_k0<G: Fn(f64) -> Complex64>(
    g: &G,
    w: f64,
    power: u32,
    windows: &[(f64, f64)],
    spec: &QuadSpec,
) -> Result<SmearValue, DistError> {
    let mut total = SmearValue::zero();
    for &(lo, hi) in windows {
        let pp = quad::pv_simple(g, w, lo, hi, spec)?;
        let pm = quad::pv_simple(g, -w, lo, hi, spec)?;
        let pv_diff = pp + pm.scale(Complex64::new(-1.0, 0.0));
        if power == 1 {
            total = total + pv_diff * (0.5 / w);
        } else {
            let fp = quad::fp_taylor(g, w, lo, hi, spec)?;
            let fm = quad::fp_taylor(g, -w, lo, hi, spec)?;
            total = total + (fp + fm) * (0.25 / (w * w)) + pv_diff * (-0.25 / (w * w * w));
        }
    }
    Ok(total)
}

/// Smear of a single factor against one packet (no conservation delta).
pub fn smear_factor(factor: &ShellFactor, packet: &WavePacket, spec: &QuadSpec) -> Result<SmearValue, DistError> {
    factor.validate()?;
    let d = packet.dim();
    let mult = factor.multiplier.as_ref();
    let bx = packet.support_box(spec.truncation_radius);
    let spatial_box = &bx[1..];
    let m = factor.mass;
    let inner = QuadSpec {
        abs_tol: spec.abs_tol * 0.1,
        rel_tol: spec.rel_tol * 0.1,
        ..*spec
    };
    let value = match factor.kind {
        FactorKind::Smooth => {
            if mult.and_then(|m| m.shell_band()).is_some() {
                let res = Cell::new(Ok(()));
                let v = quad::integrate_box_sv(
                    &|x: &[f64]| {
                        let windows = k0_windows(packet, mult, x, &[], spec);
                        let mut acc = SmearValue::zero();
                        for (lo, hi) in windows {
                            acc = acc
                                + Adaptive1d::from_spec(&inner).run(
                                    |k0| {
                                        let mut k = vec![Jet::real(0, k0)];
                                        k.extend(spatial_jets(x));
                                        SmearValue::exact(test_fn(packet, mult, &k).value())
                                    },
                                    lo,
                                    hi,
                                );
                        }
                        if !acc.converged {
                            res.set(Err(DistError::Quad(crate::QuadError::ToleranceNotMet(acc))));
                        }
                        acc
                    },
                    spatial_box,
                    spec,
                );
                res.into_inner()?;
                v
            } else {
                quad::integrate_box_sv(
                    &|k: &[f64]| SmearValue::exact(test_fn(packet, mult, &spatial_jets(k)).value()),
                    &bx,
                    spec,
                )
            }
        }
        FactorKind::Delta | FactorKind::DeltaPrime => {
            let sigma = factor.sigma();
            let prime = factor.kind == FactorKind::DeltaPrime;
            let energy = bx[0];
            quad::integrate_box_sv(
                &|x: &[f64]| {
                    let w = omega(x, m);
                    if !in_window(sigma * w, energy) {
                        // the shell point lies outside the packet's truncation window
                        return SmearValue::zero();
                    }
                    let mut k = Vec::with_capacity(d);
                    if prime {
                        k.push(Jet::variable(1, sigma * w, 0));
                    } else {
                        k.push(Jet::real(0, sigma * w));
                    }
                    k.extend(spatial_jets(x));
                    let h = test_fn(packet, mult, &k);
                    let v = if prime {
                        -(h / (k[0] * 2.0)).top() / (2.0 * w)
                    } else {
                        h.value() / (2.0 * w)
                    };
                    SmearValue::exact(v)
                },
                spatial_box,
                spec,
            )
        }
        FactorKind::PvPow1 | FactorKind::FpPow2 => {
            let power = if factor.kind == FactorKind::PvPow1 { 1 } else { 2 };
            let res: Cell<Result<(), DistError>> = Cell::new(Ok(()));
            let v = quad::integrate_box_sv(
                &|x: &[f64]| {
                    let w = omega(x, m);
                    let windows = k0_windows(packet, mult, x, &[w, -w], spec);
                    let g = |k0: f64| {
                        let mut k = vec![Jet::real(0, k0)];
                        k.extend(spatial_jets(x));
                        test_fn(packet, mult, &k).value()
                    };
                    match singular_k0(&g, w, power, &windows, &inner) {
                        Ok(v) => v,
                        Err(e) => {
                            res.set(Err(e));
                            SmearValue::zero()
                        }
                    }
                },
                spatial_box,
                spec,
            );
            res.into_inner()?;
            v
        }
    };
    Ok(value)
}

/// Kernel applied to the pointwise-evaluated (eliminated) variable.
#[derive(Clone, Copy, Debug)]
enum ElimKernel {
    Smooth,
    Pole(u32),
    /// Lorentzian-mollified shell `L_eps(kappa)` or its derivative, with an
    /// energy sign.
    Mollified { prime: bool, sigma: f64, eps: f64 },
}

struct FreeVar<'a> {
    incidence: f64,
    shell: Option<(f64, bool)>,
    bit: Option<usize>,
    offset: usize,
    packet: &'a WavePacket,
    factor: &'a ShellFactor,
    /// Energy range of the packet's truncation window.
    energy: (f64, f64),
}

struct ConservedPlan<'a> {
    d: usize,
    free: Vec<FreeVar<'a>>,
    elim: usize,
    elim_incidence: f64,
    elim_packet: &'a WavePacket,
    elim_factor: &'a ShellFactor,
    kernel: ElimKernel,
    bits: usize,
    bounds: Vec<(f64, f64)>,
    pole_margin: f64,
}

/// Result of one integrand evaluation, before quadrature.
struct Sample {
    value: Complex64,
    kappa: f64,
    weight: f64,
}

impl<'a> ConservedPlan<'a> {
    fn eval(&self, x: &[f64]) -> Sample {
        let d = self.d;
        let bits = self.bits;
        let mut ke: Vec<Jet> = vec![Jet::real(bits, 0.0); d];
        let mut acc = Jet::real(bits, 1.0);
        let mut scalar = 1.0;
        let mut weight = 1.0;
        for fv in &self.free {
            let xs = &x[fv.offset..];
            let k: Vec<Jet> = match fv.shell {
                Some((sigma, _)) => {
                    let spatial = &xs[..d - 1];
                    let w = omega(spatial, fv.factor.mass);
                    if !in_window(sigma * w, fv.energy) {
                        return Sample {
                            value: Complex64::new(0.0, 0.0),
                            kappa: f64::INFINITY,
                            weight: 0.0,
                        };
                    }
                    let k0 = match fv.bit {
                        Some(b) => Jet::variable(bits, sigma * w, b),
                        None => Jet::real(bits, sigma * w),
                    };
                    let mut k = vec![k0];
                    k.extend(spatial.iter().map(|&v| Jet::real(bits, v)));
                    scalar *= if fv.bit.is_some() { -0.5 / w } else { 0.5 / w };
                    k
                }
                None => xs[..d].iter().map(|&v| Jet::real(bits, v)).collect(),
            };
            let kre: Vec<f64> = k.iter().map(|j| j.re()).collect();
            weight *= fv.packet.envelope(&kre);
            let mut h = test_fn(fv.packet, fv.factor.multiplier.as_ref(), &k);
            if fv.bit.is_some() {
                h = h / (k[0] * 2.0);
            }
            acc *= h;
            for i in 0..d {
                ke[i] += k[i] * (-self.elim_incidence * fv.incidence);
            }
        }
        let kre: Vec<f64> = ke.iter().map(|j| j.re()).collect();
        weight *= self.elim_packet.envelope(&kre);
        let m = self.elim_factor.mass;
        let mut spatial = Jet::real(bits, m * m);
        for kj in &ke[1..] {
            spatial += *kj * *kj;
        }
        let w = spatial.sqrt();
        let kappa = (ke[0] - w) * (ke[0] + w);
        let he = test_fn(self.elim_packet, self.elim_factor.multiplier.as_ref(), &ke);
        let kern = match self.kernel {
            ElimKernel::Smooth => Jet::real(bits, 1.0),
            ElimKernel::Pole(p) => {
                if kappa.re().abs() < self.pole_margin * m * m && weight < 1e-14 {
                    // negligible weight inside the excluded band: truncated away
                    return Sample {
                        value: Complex64::new(0.0, 0.0),
                        kappa: kappa.re(),
                        weight,
                    };
                }
                kappa.recip().powi(p)
            }
            ElimKernel::Mollified { prime, sigma, eps } => {
                // smooth energy gate, equal to 1 wherever |k^0| >= m and
                // hence on the whole shell
                let gate = crate::waveop::smooth_step(ke[0] * (sigma / m));
                let e2 = eps * eps;
                let den = (kappa * kappa + e2).recip();
                let l = if prime {
                    kappa * den * den * (-2.0 * eps / std::f64::consts::PI)
                } else {
                    den * (eps / std::f64::consts::PI)
                };
                gate * l
            }
        };
        let total = acc * he * kern;
        Sample {
            value: total.top() * scalar,
            kappa: kappa.re(),
            weight,
        }
    }
}

fn build_plan<'a>(
    term: &'a Term,
    term_index: usize,
    packets: &'a [WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
    eps: Option<f64>,
) -> Result<(ConservedPlan<'a>, Vec<usize>), DistError> {
    let s = term.conservation.as_ref().expect("conserved term");
    let n = term.factors.len();
    let d = packets[0].dim();
    let in_delta: Vec<usize> = (0..n).filter(|&l| s[l] != 0).collect();
    let singular: Vec<usize> = in_delta
        .iter()
        .copied()
        .filter(|&l| term.factors[l].kind.is_singular())
        .collect();
    if singular.len() > 1 {
        return Err(DistError::InvalidFactor(
            "at most one singular factor per conserved term is supported".into(),
        ));
    }
    let elim = match singular.first() {
        Some(&l) => l,
        None => *in_delta
            .last()
            .ok_or_else(|| DistError::InvalidFactor("empty conservation delta".into()))?,
    };
    let ef = &term.factors[elim];
    let kernel = match ef.kind {
        FactorKind::Smooth => ElimKernel::Smooth,
        FactorKind::PvPow1 => ElimKernel::Pole(1),
        FactorKind::FpPow2 => ElimKernel::Pole(2),
        FactorKind::Delta | FactorKind::DeltaPrime => match eps {
            Some(eps) => ElimKernel::Mollified {
                prime: ef.kind == FactorKind::DeltaPrime,
                sigma: ef.sigma(),
                eps: eps * ef.mass * ef.mass,
            },
            None => return Err(DistError::Overdetermined { term: term_index }),
        },
    };
    let mut free = Vec::new();
    let mut bounds = Vec::new();
    let mut bit = 0;
    for &l in &in_delta {
        if l == elim {
            continue;
        }
        let f = &term.factors[l];
        if f.kind.is_singular() {
            return Err(DistError::InvalidFactor(
                "at most one singular factor per conserved term is supported".into(),
            ));
        }
        let bx = packets[l].support_box(spec.truncation_radius);
        let offset = bounds.len();
        let (shell, b) = if f.kind.is_shell() {
            bounds.extend_from_slice(&bx[1..]);
            let prime = f.kind == FactorKind::DeltaPrime;
            let b = if prime {
                bit += 1;
                Some(bit - 1)
            } else {
                None
            };
            (Some((f.sigma(), prime)), b)
        } else {
            bounds.extend_from_slice(&bx);
            (None, None)
        };
        free.push(FreeVar {
            incidence: s[l] as f64,
            shell,
            bit: b,
            offset,
            packet: &packets[l],
            factor: f,
            energy: bx[0],
        });
    }
    if bit > MAX_BITS {
        return Err(DistError::InvalidFactor(format!(
            "at most {MAX_BITS} derivative shells per conserved term"
        )));
    }
    let outside: Vec<usize> = (0..n).filter(|&l| s[l] == 0).collect();
    Ok((
        ConservedPlan {
            d,
            free,
            elim,
            elim_incidence: s[elim] as f64,
            elim_packet: &packets[elim],
            elim_factor: ef,
            kernel,
            bits: bit,
            bounds,
            pole_margin: cfg.pole_margin,
        },
        outside,
    ))
}

fn integrate_plan(plan: &ConservedPlan<'_>, spec: &QuadSpec) -> Result<SmearValue, DistError> {
    let closest = Cell::new(f64::INFINITY);
    let is_pole = matches!(plan.kernel, ElimKernel::Pole(_));
    let v = quad::integrate_box_sv(
        &|x: &[f64]| {
            let s = plan.eval(x);
            if is_pole && s.weight >= 1e-14 {
                closest.set(closest.get().min(s.kappa.abs()));
            }
            SmearValue::exact(s.value)
        },
        &plan.bounds,
        spec,
    );
    let m = plan.elim_factor.mass;
    if is_pole && closest.get() < plan.pole_margin * m * m {
        return Err(DistError::PoleProximity {
            var: plan.elim,
            distance: closest.get(),
        });
    }
    Ok(v)
}

fn smear_term_inner(
    term: &Term,
    term_index: usize,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
    eps: Option<f64>,
) -> Result<SmearValue, DistError> {
    let mut value = match &term.conservation {
        None => {
            let mut v = SmearValue::exact(Complex64::new(1.0, 0.0));
            for (f, p) in term.factors.iter().zip(packets) {
                v = v.times(smear_factor(f, p, spec)?);
            }
            v
        }
        Some(_) => {
            let (plan, outside) = build_plan(term, term_index, packets, spec, cfg, eps)?;
            let mut v = integrate_plan(&plan, spec)?;
            for l in outside {
                v = v.times(smear_factor(&term.factors[l], &packets[l], spec)?);
            }
            v
        }
    };
    value = value.scale(term.coeff);
    Ok(value)
}

fn check_packets(e: &DistExpr, packets: &[WavePacket]) -> Result<(), DistError> {
    e.validate()?;
    if packets.len() != e.n_args {
        return Err(DistError::DimensionMismatch {
            expected: e.n_args,
            got: packets.len(),
        });
    }
    if let Some(p0) = packets.first() {
        if let Some(bad) = packets.iter().find(|p| p.dim() != p0.dim()) {
            return Err(DistError::DimensionMismatch {
                expected: p0.dim(),
                got: bad.dim(),
            });
        }
    }
    Ok(())
}

fn sum_terms(parts: Vec<Result<SmearValue, DistError>>) -> Result<SmearValue, DistError> {
    let mut total = SmearValue::zero();
    for p in parts {
        total = total + p?;
    }
    Ok(total)
}

/// `<e, f_1 (x) ... (x) f_n>` with default configuration.
pub fn smear(e: &DistExpr, packets: &[WavePacket], spec: &QuadSpec) -> Result<SmearValue, DistError> {
    smear_with(e, packets, spec, &SmearConfig::default())
}

pub fn smear_with(e: &DistExpr, packets: &[WavePacket], spec: &QuadSpec, cfg: &SmearConfig) -> Result<SmearValue, DistError> {
    spec.validate()?;
    check_packets(e, packets)?;
    let parts: Vec<_> = e
        .terms
        .par_iter()
        .enumerate()
        .map(|(i, t)| smear_term_inner(t, i, packets, spec, cfg, None))
        .collect();
    sum_terms(parts)
}

/// Outcome of a mollified smear with its extrapolation table.
#[derive(Clone, Debug, Serialize)]
pub struct RegularizedValue {
    pub value: SmearValue,
    /// Mollifier widths (units of `m^2`).
    pub eps_levels: Vec<f64>,
    /// Raw smeared values per width.
    pub raw: Vec<Complex64>,
    /// Diagonal of the Richardson table.
    pub extrapolants: Vec<Complex64>,
}

/// Richardson extrapolation assuming an expansion in integer powers of eps
/// with eps halving between levels. Returns the diagonal and the weights of
/// the final extrapolant.
fn richardson(values: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
    let n = values.len();
    // tableau over weight vectors to track error propagation
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::new();
    for i in 0..n {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        let mut row = vec![w];
        for j in 1..=i {
            let f = (1u64 << j) as f64 - 1.0;
            let prev = &row[j - 1];
            let up = &rows[i - 1][j - 1];
            let next: Vec<f64> = prev.iter().zip(up).map(|(a, b)| a + (a - b) / f).collect();
            row.push(next);
        }
        rows.push(row);
    }
    let diag: Vec<Complex64> = (0..n)
        .map(|i| {
            rows[i][i]
                .iter()
                .zip(values)
                .map(|(w, v)| v * w)
                .sum()
        })
        .collect();
    (diag, rows[n - 1][n - 1].clone())
}

/// Smear where over-determined shell products are replaced by a Lorentzian
/// mollification of the eliminated variable's shell, extrapolated to zero
/// width. Terms that are not over-determined are smeared exactly.
pub fn smear_regularized(
    e: &DistExpr,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
) -> Result<RegularizedValue, DistError> {
    spec.validate()?;
    check_packets(e, packets)?;
    let reg = cfg.regularization;
    if reg.levels < 3 {
        return Err(DistError::InvalidFactor("at least 3 regularization levels are needed".into()));
    }
    let eps_levels: Vec<f64> = (0..reg.levels).map(|i| reg.eps0 / (1u64 << i) as f64).collect();
    let mut exact = SmearValue::zero();
    let mut per_level: Vec<SmearValue> = vec![SmearValue::zero(); reg.levels];
    let mut any_mollified = false;
    for (i, t) in e.terms.iter().enumerate() {
        match smear_term_inner(t, i, packets, spec, cfg, None) {
            Ok(v) => exact = exact + v,
            Err(DistError::Overdetermined { .. }) => {
                any_mollified = true;
                let vals: Vec<_> = eps_levels
                    .par_iter()
                    .map(|&eps| smear_term_inner(t, i, packets, spec, cfg, Some(eps)))
                    .collect();
                for (slot, v) in per_level.iter_mut().zip(vals) {
                    *slot = *slot + v?;
                }
            }
            Err(other) => return Err(other),
        }
    }
    if !any_mollified {
        return Ok(RegularizedValue {
            value: exact,
            eps_levels: vec![],
            raw: vec![],
            extrapolants: vec![],
        });
    }
    let raw: Vec<Complex64> = per_level.iter().map(|v| v.value).collect();
    let (diag, weights) = richardson(&raw);
    let n = diag.len();
    let quad_err: f64 = weights.iter().zip(&per_level).map(|(w, v)| w.abs() * v.err_est).sum();
    let last = (diag[n - 1] - diag[n - 2]).norm();
    let before = (diag[n - 2] - diag[n - 3]).norm();
    let scale = diag[n - 1].norm();
    let floor = quad_err + spec.abs_tol + spec.rel_tol * scale;
    if last > before.max(floor) {
        return Err(DistError::RegularizationNotConverged(format!(
            "extrapolants {:?} do not settle (last step {last:e}, previous {before:e})",
            diag
        )));
    }
    let evals: u64 = per_level.iter().map(|v| v.n_evals).sum();
    let value = SmearValue {
        value: diag[n - 1],
        err_est: last + quad_err,
        n_evals: evals,
        converged: per_level.iter().all(|v| v.converged),
    } + exact;
    Ok(RegularizedValue {
        value,
        eps_levels,
        raw,
        extrapolants: diag,
    })
}

/// `<e2, f (x) g> - <e2, g (x) f>`.
pub fn commutator_pairing(e2: &DistExpr, f: &WavePacket, g: &WavePacket, spec: &QuadSpec) -> Result<SmearValue, DistError> {
    if e2.n_args != 2 {
        return Err(DistError::DimensionMismatch {
            expected: 2,
            got: e2.n_args,
        });
    }
    let a = smear(e2, &[f.clone(), g.clone()], spec)?;
    let b = smear(e2, &[g.clone(), f.clone()], spec)?;
    Ok(a + b.scale(Complex64::new(-1.0, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadSpec {
        QuadSpec::default()
    }

    #[test]
    fn lemma_a2_shell_multiplier_lowers_derivative() {
        let p = WavePacket::gaussian(&[1.3, 0.4], 0.7);
        for sign in [Sign::Plus, Sign::Minus] {
            let lhs = smear_factor(
                &ShellFactor::delta_prime(sign, 1.0).with_multiplier(Multiplier::shell_power(2, 1.0, 1)),
                &p,
                &spec(),
            )
            .unwrap();
            let rhs = smear_factor(&ShellFactor::delta(sign, 1.0), &p, &spec()).unwrap();
            assert!(
                (lhs.value + rhs.value).norm() <= 1e-8 * rhs.value.norm().max(1e-300) + lhs.err_est + rhs.err_est,
                "{sign:?}: {:?} vs {:?}",
                lhs,
                rhs
            );
        }
    }

    #[test]
    fn derivative_shell_is_mass_derivative_of_shell() {
        let p = WavePacket::gaussian(&[-1.1, 0.5], 0.9).scale(Complex64::new(0.3, 0.8));
        let h = 1e-4;
        for sign in [Sign::Plus, Sign::Minus] {
            let dp = smear_factor(&ShellFactor::delta_prime(sign, 1.0), &p, &spec()).unwrap();
            let up = smear_factor(&ShellFactor::delta(sign, (1.0f64 + h).sqrt()), &p, &spec()).unwrap();
            let dn = smear_factor(&ShellFactor::delta(sign, (1.0f64 - h).sqrt()), &p, &spec()).unwrap();
            let fd = -(up.value - dn.value) / (2.0 * h);
            assert!((dp.value - fd).norm() <= 1e-5, "{sign:?}: {} vs {}", dp.value, fd);
        }
    }

    #[test]
    fn fp_times_shell_square_is_plain_integral() {
        let p = WavePacket::gaussian(&[1.2, 0.4], 0.8);
        let fp = smear_factor(&ShellFactor::fp(1.0).with_multiplier(Multiplier::shell_power(2, 1.0, 2)), &p, &spec())
            .unwrap();
        let plain = smear_factor(&ShellFactor::smooth(1.0), &p, &spec()).unwrap();
        assert!((fp.value - plain.value).norm() <= 1e-8 * plain.value.norm(), "{fp:?} {plain:?}");
    }

    #[test]
    fn pv_times_shell_is_plain_integral() {
        let p = WavePacket::gaussian(&[0.4, -0.3], 0.9);
        let pv = smear_factor(&ShellFactor::pv(1.0).with_multiplier(Multiplier::shell_power(2, 1.0, 1)), &p, &spec())
            .unwrap();
        let plain = smear_factor(&ShellFactor::smooth(1.0), &p, &spec()).unwrap();
        assert!((pv.value - plain.value).norm() <= 1e-8 * plain.value.norm(), "{pv:?} {plain:?}");
    }

    #[test]
    fn conserved_product_matches_pairing_of_reflected_packet() {
        // <delta^+(k1) delta(k1 + k2), f (x) g> = <delta^+, f(k) g(-k)>
        let f = WavePacket::gaussian(&[1.4, 0.3], 0.6);
        let g = WavePacket::gaussian(&[-1.1, -0.2], 0.8);
        let e = DistExpr::new(
            2,
            vec![Term {
                coeff: Complex64::new(1.0, 0.0),
                factors: vec![ShellFactor::delta(Sign::Plus, 1.0), ShellFactor::smooth(1.0)],
                conservation: Some(vec![1, 1]),
            }],
        )
        .unwrap();
        let conserved = smear(&e, &[f.clone(), g.clone()], &spec()).unwrap();
        // single-variable oracle with the product packet folded in as a multiplier
        let gr = g.reflect();
        let direct = quad::integrate_box_sv(
            &|x: &[f64]| {
                let w = omega(x, 1.0);
                let k = [w, x[0]];
                SmearValue::exact(f.eval(&k) * gr.eval(&k) / (2.0 * w))
            },
            &[(-12.0, 12.0)],
            &spec(),
        );
        assert!((conserved.value - direct.value).norm() <= 1e-9 * direct.value.norm());
    }

    #[test]
    fn overdetermined_is_reported() {
        let f = WavePacket::gaussian(&[1.4, 0.3], 0.6);
        let e = DistExpr::new(
            2,
            vec![Term {
                coeff: Complex64::new(1.0, 0.0),
                factors: vec![ShellFactor::delta(Sign::Plus, 1.0), ShellFactor::delta(Sign::Minus, 1.0)],
                conservation: Some(vec![1, 1]),
            }],
        )
        .unwrap();
        let r = smear(&e, &[f.clone(), f], &spec());
        assert!(matches!(r, Err(DistError::Overdetermined { term: 0 })));
    }

    #[test]
    fn richardson_removes_polynomial_error() {
        let exact = Complex64::new(2.0, -1.0);
        let vals: Vec<Complex64> = (0..4)
            .map(|i| {
                let e = 0.1 / (1 << i) as f64;
                exact + Complex64::new(3.0 * e - 7.0 * e * e + 11.0 * e * e * e, e)
            })
            .collect();
        let (diag, w) = richardson(&vals);
        assert!((diag[3] - exact).norm() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let e = DistExpr::single(ShellFactor::delta(Sign::Plus, 1.0));
        let p = WavePacket::gaussian(&[1.0, 0.0], 1.0);
        assert!(matches!(
            smear(&e, &[p.clone(), p], &spec()),
            Err(DistError::DimensionMismatch { .. })
        ));
    }
}
