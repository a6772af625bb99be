//! Mass-shell cutoffs and the finite-time one-particle wave-operator
//! multipliers.
//!
//! All multipliers are evaluated on [`Jet`]s so that shell-derivative
//! smearings can differentiate through them exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::DistError;
use crate::jet::Jet;
use crate::packets::WavePacket;
use crate::poly::Poly;

/// Asymptotic channel of a field argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    In,
    Loc,
    Out,
}

impl std::str::FromStr for Channel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "in" => Ok(Channel::In),
            "loc" => Ok(Channel::Loc),
            "out" => Ok(Channel::Out),
            other => Err(format!("unknown channel '{other}' (expected in, loc or out)")),
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::In => "in",
            Channel::Loc => "loc",
            Channel::Out => "out",
        })
    }
}

/// Smooth plateau bump in the shell variable `kappa = k^2 - m^2`: one on
/// `|kappa| <= eps/2`, zero on `|kappa| >= eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    eps: f64,
}

/// `h(x) = g(x) / (g(x) + g(1 - x))`: 0 for `x <= 0`, 1 for `x >= 1`.
///
/// Evaluated as a logistic function of `z = 1/x - 1/(1-x)`, always
/// exponentiating `-|z|` so that neither the value nor its derivatives
/// overflow.
pub(crate) fn smooth_step(x: Jet) -> Jet {
    if x.re() <= 0.0 {
        return Jet::real(x.bits(), 0.0);
    }
    if x.re() >= 1.0 {
        return Jet::real(x.bits(), 1.0);
    }
    let z = x.recip() - (-x + 1.0).recip();
    if z.re() > 700.0 {
        return Jet::real(x.bits(), 0.0);
    }
    if z.re() < -700.0 {
        return Jet::real(x.bits(), 1.0);
    }
    if z.re() > 0.0 {
        let w = (-z).exp();
        w * (w + 1.0).recip()
    } else {
        (z.exp() + 1.0).recip()
    }
}

impl Cutoff {
    pub fn new(eps: f64, mass: f64) -> Result<Self, DistError> {
        if !(mass > 0.0) {
            return Err(DistError::InvalidFactor(format!("mass must be positive, got {mass}")));
        }
        if !(eps > 0.0 && eps < mass * mass) {
            return Err(DistError::InvalidFactor(format!(
                "cutoff width must lie in (0, m^2) = (0, {}), got {eps}",
                mass * mass
            )));
        }
        Ok(Cutoff { eps })
    }

    /// Midpoint choice `eps = m^2 / 2`.
    pub fn for_mass(mass: f64) -> Self {
        Cutoff { eps: 0.5 * mass * mass }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn phi(&self, kappa: f64) -> f64 {
        self.phi_jet(Jet::real(0, kappa)).re()
    }

    pub fn phi_jet(&self, kappa: Jet) -> Jet {
        let x = (-kappa.abs_real() + self.eps) * (2.0 / self.eps);
        smooth_step(x)
    }
}

/// Parameters shared by the time-dependent multipliers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asymptotic {
    pub channel: Channel,
    pub t: f64,
    pub mass: f64,
    pub eps: f64,
}

impl Asymptotic {
    pub fn new(channel: Channel, t: f64, mass: f64) -> Self {
        Asymptotic {
            channel,
            t,
            mass,
            eps: 0.5 * mass * mass,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self, DistError> {
        Cutoff::new(eps, self.mass)?;
        self.eps = eps;
        Ok(self)
    }

    pub fn cutoff(&self) -> Cutoff {
        Cutoff { eps: self.eps }
    }
}

/// Smooth momentum-space multiplier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Multiplier {
    /// Plain finite-time cutoff multiplier.
    ChiT(Asymptotic),
    /// Dipole-corrected finite-time multiplier.
    ChiDT(Asymptotic),
    /// Non-dipole Haag-Ruelle multiplier; evaluates exactly as `ChiT`.
    HaagRuelle(Asymptotic),
    Poly { poly: Poly },
    Product { factors: Vec<Multiplier> },
}

fn one_jet(bits: usize) -> Jet {
    Jet::real(bits, 1.0)
}

impl Multiplier {
    pub fn chi_t(channel: Channel, t: f64, mass: f64) -> Self {
        Multiplier::ChiT(Asymptotic::new(channel, t, mass))
    }

    pub fn chi_d_t(channel: Channel, t: f64, mass: f64) -> Self {
        Multiplier::ChiDT(Asymptotic::new(channel, t, mass))
    }

    pub fn haag_ruelle(channel: Channel, t: f64, mass: f64) -> Self {
        Multiplier::HaagRuelle(Asymptotic::new(channel, t, mass))
    }

    pub fn poly(poly: Poly) -> Self {
        Multiplier::Poly { poly }
    }

    /// `(k^2 - m^2)^power` in `dim` dimensions.
    pub fn shell_power(dim: usize, mass: f64, power: u32) -> Self {
        let shell = Poly::mass_shell(dim, mass);
        let mut p = Poly::one(dim);
        for _ in 0..power {
            p = p.mul(&shell);
        }
        Multiplier::poly(p)
    }

    /// Compose two multipliers into their pointwise product.
    pub fn then(self, other: Multiplier) -> Multiplier {
        let mut factors = match self {
            Multiplier::Product { factors } => factors,
            m => vec![m],
        };
        match other {
            Multiplier::Product { factors: more } => factors.extend(more),
            m => factors.push(m),
        }
        Multiplier::Product { factors }
    }

    /// Plain `chi_t` value on jets.
    fn chi_t_jet(a: &Asymptotic, k: &[Jet]) -> Jet {
        let bits = k.iter().map(|j| j.bits()).max().unwrap_or(0);
        if a.channel == Channel::Loc {
            return one_jet(bits);
        }
        let k0 = k[0];
        if k0.re() == 0.0 {
            return Jet::real(bits, 0.0);
        }
        let mut spatial = Jet::real(bits, a.mass * a.mass);
        for kj in &k[1..] {
            spatial += *kj * *kj;
        }
        let omega = spatial.sqrt();
        // factored form keeps kappa exactly zero for on-shell input
        let kappa = (k0 - omega) * (k0 + omega);
        if kappa.re().abs() >= a.eps {
            return Jet::real(bits, 0.0);
        }
        let phi = a.cutoff().phi_jet(kappa);
        let detune = if k0.re() > 0.0 { k0 - omega } else { k0 + omega };
        let sign = if a.channel == Channel::In { -1.0 } else { 1.0 };
        let phase = (detune * Complex64::new(0.0, sign * a.t)).exp();
        phi * phase
    }

    pub fn eval_jet(&self, k: &[Jet]) -> Jet {
        let bits = k.iter().map(|j| j.bits()).max().unwrap_or(0);
        match self {
            Multiplier::ChiT(a) | Multiplier::HaagRuelle(a) => Self::chi_t_jet(a, k),
            Multiplier::ChiDT(a) => {
                if a.channel == Channel::Loc {
                    return one_jet(bits);
                }
                let base = Self::chi_t_jet(a, k);
                let mut spatial = Jet::real(bits, a.mass * a.mass);
                for kj in &k[1..] {
                    spatial += *kj * *kj;
                }
                let omega = spatial.sqrt();
                let kappa = (k[0] - omega) * (k[0] + omega);
                let sign = if a.channel == Channel::In { 1.0 } else { -1.0 };
                let correction = kappa * (k[0] * 2.0).recip() * Complex64::new(0.0, sign * a.t);
                (correction + 1.0) * base
            }
            Multiplier::Poly { poly } => {
                if poly.is_zero() {
                    Jet::real(bits, 0.0)
                } else {
                    poly.eval_jet(k)
                }
            }
            Multiplier::Product { factors } => {
                let mut acc = one_jet(bits);
                for f in factors {
                    acc *= f.eval_jet(k);
                }
                acc
            }
        }
    }

    pub fn eval(&self, k: &[f64]) -> Complex64 {
        let jets: Vec<Jet> = k.iter().map(|&v| Jet::real(0, v)).collect();
        self.eval_jet(&jets).value()
    }

    /// True for multipliers identically equal to one.
    pub fn is_identity(&self) -> bool {
        match self {
            Multiplier::ChiT(a) | Multiplier::ChiDT(a) | Multiplier::HaagRuelle(a) => a.channel == Channel::Loc,
            Multiplier::Poly { poly } => {
                let d = poly.dim();
                d > 0 && poly.degree() == 0 && *poly == Poly::one(d)
            }
            Multiplier::Product { factors } => factors.iter().all(|f| f.is_identity()),
        }
    }

    /// If the multiplier vanishes wherever `|k^2 - m^2| >= band`, the band
    /// and its mass.
    pub fn shell_band(&self) -> Option<(f64, f64)> {
        match self {
            Multiplier::ChiT(a) | Multiplier::ChiDT(a) | Multiplier::HaagRuelle(a) => {
                (a.channel != Channel::Loc).then_some((a.eps, a.mass))
            }
            Multiplier::Poly { .. } => None,
            Multiplier::Product { factors } => factors.iter().find_map(|f| f.shell_band()),
        }
    }
}

/// A packet seen through a multiplier: `k -> mu(k) f(k)`.
#[derive(Clone, Debug)]
pub struct WaveopHandle {
    pub multiplier: Multiplier,
    pub packet: WavePacket,
}

impl WaveopHandle {
    pub fn eval(&self, k: &[f64]) -> Complex64 {
        self.multiplier.eval(k) * self.packet.eval(k)
    }

    pub fn eval_jet(&self, k: &[Jet]) -> Jet {
        self.multiplier.eval_jet(k) * self.packet.eval_jet(k)
    }
}

/// Momentum-space action of the finite-time wave operator on a packet.
pub fn apply_waveop(mu: &Multiplier, p: &WavePacket) -> WaveopHandle {
    WaveopHandle {
        multiplier: mu.clone(),
        packet: p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_shell(m: f64, kx: f64, sign: f64) -> [f64; 2] {
        [sign * (kx * kx + m * m).sqrt(), kx]
    }

    #[test]
    fn bump_plateau_and_support() {
        let c = Cutoff::for_mass(1.0);
        for i in 0..10_000 {
            let kappa = -1.0 + 2.0 * i as f64 / 9999.0;
            let v = c.phi(kappa);
            assert!((0.0..=1.0).contains(&v), "phi({kappa}) = {v}");
            if kappa.abs() <= 0.25 {
                assert_eq!(v, 1.0);
            }
            if kappa.abs() >= 0.5 {
                assert_eq!(v, 0.0);
            }
        }
        // symmetric, and strictly between 0 and 1 inside the transition band
        assert!((c.phi(0.4) - c.phi(-0.4)).abs() < 1e-16);
        assert!(c.phi(0.375) > 0.0 && c.phi(0.375) < 1.0);
    }

    #[test]
    fn bump_derivatives_are_bounded() {
        let c = Cutoff::for_mass(1.0);
        let mut max_d = [0.0f64; 5];
        for i in 0..2000 {
            let kappa = -0.6 + 1.2 * i as f64 / 1999.0;
            let x = Jet::variable(4, kappa, 0)
                + Jet::variable(4, 0.0, 1)
                + Jet::variable(4, 0.0, 2)
                + Jet::variable(4, 0.0, 3);
            let j = c.phi_jet(x);
            max_d[0] = max_d[0].max(j.value().norm());
            max_d[1] = max_d[1].max(j.coeff(1).norm());
            max_d[4] = max_d[4].max(j.top().norm());
        }
        assert!(max_d.iter().all(|v| v.is_finite()));
        assert!(max_d[4] < 1e6);
    }

    #[test]
    fn chi_d_t_is_one_on_shell_at_time_zero() {
        for ch in [Channel::In, Channel::Out, Channel::Loc] {
            let mu = Multiplier::chi_d_t(ch, 0.0, 1.0);
            let v = mu.eval(&on_shell(1.0, 0.7, 1.0));
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn chi_t_out_is_stationary_on_shell() {
        for t in [0.0, 3.0, 100.0] {
            let mu = Multiplier::chi_t(Channel::Out, t, 1.0);
            let v = mu.eval(&on_shell(1.0, -1.3, 1.0));
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn chi_d_t_vanishes_outside_cutoff() {
        let m: f64 = 1.0;
        let eps = 0.5;
        let kx: f64 = 0.3;
        let k0 = (kx * kx + m * m + eps).sqrt();
        let mu = Multiplier::chi_d_t(Channel::Out, 5.0, m);
        assert_eq!(mu.eval(&[k0, kx]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn dipole_correction_vanishes_on_shell() {
        for i in 0..100 {
            let kx = -3.0 + 6.0 * i as f64 / 99.0;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let k = on_shell(1.0, kx, sign);
            let t = 0.37 * i as f64;
            for ch in [Channel::In, Channel::Out] {
                let a = Multiplier::chi_d_t(ch, t, 1.0).eval(&k);
                let b = Multiplier::chi_t(ch, t, 1.0).eval(&k);
                assert!((a - b).norm() <= 1e-15, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn haag_ruelle_aliases_chi_t() {
        let k = [1.3, 0.4];
        for ch in [Channel::In, Channel::Out] {
            assert_eq!(
                Multiplier::haag_ruelle(ch, 7.0, 1.0).eval(&k),
                Multiplier::chi_t(ch, 7.0, 1.0).eval(&k)
            );
        }
    }

    #[test]
    fn handle_matches_pointwise_product() {
        let p = WavePacket::gaussian(&[1.2, 0.4], 0.8);
        let mu = Multiplier::chi_d_t(Channel::In, 2.5, 1.0);
        let h = apply_waveop(&mu, &p);
        for k in [[1.1, 0.3], [1.25, 0.5], [-1.2, 0.1], [1.05, -0.2], [0.9, 0.0]] {
            assert!((h.eval(&k) - mu.eval(&k) * p.eval(&k)).norm() <= 1e-14);
        }
    }

    #[test]
    fn serde_names() {
        let mu = Multiplier::chi_d_t(Channel::Out, 1.0, 1.0);
        let s = serde_json::to_string(&mu).unwrap();
        assert!(s.contains("\"kind\":\"chi_d_t\""), "{s}");
        let back: Multiplier = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
        let hr = serde_json::to_string(&Multiplier::haag_ruelle(Channel::In, 1.0, 1.0)).unwrap();
        assert!(hr.contains("haag_ruelle"));
    }

    #[test]
    fn rejects_bad_cutoff() {
        assert!(Cutoff::new(1.0, 1.0).is_err());
        assert!(Cutoff::new(0.0, 1.0).is_err());
        assert!(Cutoff::new(0.3, 1.0).is_ok());
    }
}
