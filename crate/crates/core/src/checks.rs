//! Seeded identity suites for the shell distributions, the finite-time
//! multipliers and the finite-part rule. Each suite draws its packets from
//! [`crate::rng::Lcg64`] and reports every comparison it makes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{smear_factor, ShellFactor, Sign};
use crate::error::Error;
use crate::packets::WavePacket;
use crate::quad::{fp_double, fp_double_detail, integrate_1d, QuadSpec, SmearValue};
use crate::rng::{random_packet, Lcg64, PacketDraw, LCG_NAME};
use crate::waveop::{Channel, Multiplier};

/// Which identity a suite verifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `delta'` smearing equals `-d/d(m^2)` of `delta` smearing.
    MassDerivative,
    /// `(k^2 - m^2) delta' = -delta`.
    ShellLowering,
    /// `chi^d_t delta = delta` for all `t`.
    ShellInvariance,
    /// `chi^d_t delta' = delta'` for all `t`.
    DerivativeShellInvariance,
}

impl Identity {
    /// Short identifier used on the command line.
    pub fn tag(self) -> &'static str {
        match self {
            Identity::MassDerivative => "A1",
            Identity::ShellLowering => "A2",
            Identity::ShellInvariance => "A3",
            Identity::DerivativeShellInvariance => "A4",
        }
    }

    pub fn from_tag(s: &str) -> Option<Identity> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A1" => Some(Identity::MassDerivative),
            "A2" => Some(Identity::ShellLowering),
            "A3" => Some(Identity::ShellInvariance),
            "A4" => Some(Identity::DerivativeShellInvariance),
            _ => None,
        }
    }

    pub fn all() -> [Identity; 4] {
        [
            Identity::MassDerivative,
            Identity::ShellLowering,
            Identity::ShellInvariance,
            Identity::DerivativeShellInvariance,
        ]
    }

    /// Default tolerance and whether it is absolute.
    pub fn tolerance(self) -> (f64, Metric) {
        match self {
            Identity::MassDerivative => (1e-5, Metric::Absolute),
            Identity::ShellLowering => (1e-8, Metric::Relative),
            Identity::ShellInvariance => (1e-8, Metric::Relative),
            Identity::DerivativeShellInvariance => (1e-7, Metric::Relative),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Absolute,
    Relative,
}

/// One comparison `lhs` vs. `rhs`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub label: String,
    pub lhs: SmearValue,
    pub rhs: SmearValue,
    /// `|lhs - rhs|`, divided by `|rhs|` for relative metrics.
    pub deviation: f64,
    pub pass: bool,
}

impl Check {
    fn new(label: String, lhs: SmearValue, rhs: SmearValue, tol: f64, metric: Metric) -> Self {
        let gap = (lhs.value - rhs.value).norm();
        let deviation = match metric {
            Metric::Absolute => gap,
            Metric::Relative => {
                let s = rhs.value.norm();
                if s > 0.0 {
                    gap / s
                } else {
                    gap
                }
            }
        };
        Check {
            label,
            lhs,
            rhs,
            deviation,
            pass: deviation <= tol,
        }
    }
}

/// All comparisons made for one packet.
#[derive(Clone, Debug, Serialize)]
pub struct PacketCase {
    pub index: usize,
    pub dim: usize,
    pub packet: WavePacket,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitySuite {
    pub identity: Identity,
    pub tag: &'static str,
    pub generator: &'static str,
    pub seed: u64,
    pub metric: Metric,
    pub tolerance: f64,
    pub cases: Vec<PacketCase>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Options for [`identity_suite`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub cases: usize,
    /// Dimensions used in turn.
    pub dims: Vec<usize>,
    pub mass: f64,
    /// Times for the invariance identities.
    pub times: Vec<f64>,
    /// Step in `m^2` for the mass derivative.
    pub mass_step: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            cases: 20,
            dims: vec![2, 3],
            mass: 1.0,
            times: vec![0.0, 1.0, 10.0, 100.0],
            mass_step: 1e-4,
        }
    }
}

fn sign_label(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

fn case_checks(
    identity: Identity,
    p: &WavePacket,
    opts: &SuiteOptions,
    spec: &QuadSpec,
) -> Result<Vec<Check>, Error> {
    let (tol, metric) = identity.tolerance();
    let m = opts.mass;
    let d = p.dim();
    let mut out = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let s = sign_label(sign);
        match identity {
            Identity::MassDerivative => {
                let h = opts.mass_step;
                let dp = smear_factor(&ShellFactor::delta_prime(sign, m), p, spec)?;
                let up = smear_factor(&ShellFactor::delta(sign, (m * m + h).sqrt()), p, spec)?;
                let dn = smear_factor(&ShellFactor::delta(sign, (m * m - h).sqrt()), p, spec)?;
                let fd = SmearValue {
                    value: -(up.value - dn.value) / (2.0 * h),
                    err_est: (up.err_est + dn.err_est) / (2.0 * h),
                    n_evals: up.n_evals + dn.n_evals,
                    converged: up.converged && dn.converged,
                };
                out.push(Check::new(format!("sign={s}"), dp, fd, tol, metric));
            }
            Identity::ShellLowering => {
                let lowered = ShellFactor::delta_prime(sign, m).with_multiplier(Multiplier::shell_power(d, m, 1));
                let lhs = smear_factor(&lowered, p, spec)?;
                let rhs = smear_factor(&ShellFactor::delta(sign, m), p, spec)?;
                out.push(Check::new(format!("sign={s}"), lhs, rhs.scale(Complex64::new(-1.0, 0.0)), tol, metric));
            }
            Identity::ShellInvariance | Identity::DerivativeShellInvariance => {
                let base = if identity == Identity::ShellInvariance {
                    ShellFactor::delta(sign, m)
                } else {
                    ShellFactor::delta_prime(sign, m)
                };
                let plain = smear_factor(&base, p, spec)?;
                for ch in [Channel::In, Channel::Loc, Channel::Out] {
                    for &t in &opts.times {
                        let f = base.clone().with_multiplier(Multiplier::chi_d_t(ch, t, m));
                        let v = smear_factor(&f, p, spec)?;
                        out.push(Check::new(format!("sign={s} channel={ch} t={t}"), v, plain, tol, metric));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Run one identity over `opts.cases` seeded packets.
pub fn identity_suite(identity: Identity, seed: u64, opts: &SuiteOptions, spec: &QuadSpec) -> Result<IdentitySuite, Error> {
    if opts.cases == 0 || opts.dims.is_empty() {
        return Err(Error::Invalid("a suite needs at least one case and one dimension".into()));
    }
    if opts.dims.iter().any(|&d| d < 2) {
        return Err(Error::Invalid("suite dimensions must be at least 2".into()));
    }
    let mut rng = Lcg64::new(seed);
    let draw = PacketDraw::default();
    let packets: Vec<WavePacket> = (0..opts.cases)
        .map(|i| random_packet(&mut rng, opts.dims[i % opts.dims.len()], &draw))
        .collect();
    let cases: Vec<PacketCase> = packets
        .into_par_iter()
        .enumerate()
        .map(|(index, packet)| {
            let checks = case_checks(identity, &packet, opts, spec)?;
            Ok(PacketCase {
                index,
                dim: packet.dim(),
                pass: checks.iter().all(|c| c.pass),
                checks,
                packet,
            })
        })
        .collect::<Result<_, Error>>()?;
    let max_deviation = cases
        .iter()
        .flat_map(|c| c.checks.iter().map(|k| k.deviation))
        .fold(0.0, f64::max);
    let (tolerance, metric) = identity.tolerance();
    Ok(IdentitySuite {
        identity,
        tag: identity.tag(),
        generator: LCG_NAME,
        seed,
        metric,
        tolerance,
        pass: cases.iter().all(|c| c.pass),
        cases,
        max_deviation,
    })
}

/// One smooth finite-part case: `g(u) = (a0 + a1 u + a2 u^2)
/// exp(-(u - c)^2 / (2 s^2))` with a pole inside the window.
#[derive(Clone, Debug, Serialize)]
pub struct FinitePartCase {
    pub index: usize,
    pub coefficients: [Complex64; 3],
    pub center: f64,
    pub width: f64,
    pub pole: f64,
    pub taylor: SmearValue,
    pub pole_derivative: SmearValue,
    pub method_gap: f64,
    pub methods_agree: bool,
    /// Finite part of `(u - pole)^2 g / (u - pole)^2`.
    pub restored: SmearValue,
    pub plain: SmearValue,
    pub restore_deviation: f64,
    pub restore_pass: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FinitePartSuite {
    pub generator: &'static str,
    pub seed: u64,
    pub restore_tolerance: f64,
    pub cases: Vec<FinitePartCase>,
    pub pass: bool,
}

/// Taylor subtraction vs. pole derivative on seeded smooth numerators, and
/// recovery of the plain integral after multiplying back by the square.
pub fn finite_part_suite(seed: u64, cases: usize, spec: &QuadSpec) -> Result<FinitePartSuite, Error> {
    let restore_tolerance = 1e-8;
    let mut rng = Lcg64::new(seed);
    let params: Vec<([Complex64; 3], f64, f64, f64)> = (0..cases)
        .map(|_| {
            let a = [(); 3].map(|_| Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
            let c = rng.uniform(-1.0, 1.0);
            let s = rng.uniform(0.5, 1.5);
            let pole = c + rng.uniform(-1.0, 1.0) * s;
            (a, c, s, pole)
        })
        .collect();
    let out: Vec<FinitePartCase> = params
        .into_par_iter()
        .enumerate()
        .map(|(index, (a, c, s, pole))| {
            let g = move |u: f64| (a[0] + a[1] * u + a[2] * u * u) * (-(u - c) * (u - c) / (2.0 * s * s)).exp();
            let (lo, hi) = (c - spec.truncation_radius * s, c + spec.truncation_radius * s);
            let fp = fp_double_detail(g, pole, lo, hi, spec)?;
            let method_gap = (fp.taylor.value - fp.pole_derivative.value).norm();
            let methods_agree = method_gap <= fp.taylor.err_est + fp.pole_derivative.err_est;
            let restored = fp_double(|u| g(u) * (u - pole) * (u - pole), pole, lo, hi, spec)?;
            let plain = integrate_1d(g, lo, hi, spec);
            let restore_deviation = (restored.value - plain.value).norm() / plain.value.norm();
            let restore_pass = restore_deviation <= restore_tolerance;
            Ok(FinitePartCase {
                index,
                coefficients: a,
                center: c,
                width: s,
                pole,
                taylor: fp.taylor,
                pole_derivative: fp.pole_derivative,
                method_gap,
                methods_agree,
                restored,
                plain,
                restore_deviation,
                restore_pass,
                pass: methods_agree && restore_pass,
            })
        })
        .collect::<Result<_, Error>>()?;
    Ok(FinitePartSuite {
        generator: LCG_NAME,
        seed,
        restore_tolerance,
        pass: out.iter().all(|c| c.pass),
        cases: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for id in Identity::all() {
            assert_eq!(Identity::from_tag(id.tag()), Some(id));
        }
        assert_eq!(Identity::from_tag("a2"), Some(Identity::ShellLowering));
        assert_eq!(Identity::from_tag("B1"), None);
    }

    #[test]
    fn small_lowering_suite_passes() {
        let opts = SuiteOptions {
            cases: 3,
            ..Default::default()
        };
        let r = identity_suite(Identity::ShellLowering, 1, &opts, &QuadSpec::default()).unwrap();
        assert_eq!(r.cases.len(), 3);
        assert!(r.pass, "{}", r.max_deviation);
    }
}
