//! Large-time limits of wave-operator multipliers divided by powers of the
//! shell variable, compared against their closed-form distributional limits.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{smear, smear_factor, DistExpr, ShellFactor, Sign, Term};
use crate::error::Error;
use crate::packets::WavePacket;
use crate::quad::{QuadSpec, SmearValue};
use crate::waveop::{Channel, Multiplier};

/// Closed-form large-time limit of `chi^d_t(a, k) / (k^2 - m^2)^power`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitTarget {
    pub pole_power: u32,
    pub channel: Channel,
    pub mass: f64,
    pub target_expr: DistExpr,
}

impl LimitTarget {
    /// Power 2: `+i pi (delta'+ - delta'-)` for in, finite part for loc,
    /// `-i pi (delta'+ - delta'-)` for out.
    ///
    /// Power 1: finite-time phases `exp(+-i (k^0 -+ omega) t)` over a simple
    /// pole tend to `+i pi (delta+ - delta-)` for out and `-i pi (delta+ -
    /// delta-)` for in (principal value for loc). This is the sign for which
    /// multiplying the power-2 table by `k^2 - m^2` reproduces it.
    pub fn new(pole_power: u32, channel: Channel, mass: f64) -> Result<Self, Error> {
        if !(pole_power == 1 || pole_power == 2) {
            return Err(Error::Invalid(format!("pole power must be 1 or 2, got {pole_power}")));
        }
        let (plus, minus, singular) = if pole_power == 1 {
            (
                ShellFactor::delta(Sign::Plus, mass),
                ShellFactor::delta(Sign::Minus, mass),
                ShellFactor::pv(mass),
            )
        } else {
            (
                ShellFactor::delta_prime(Sign::Plus, mass),
                ShellFactor::delta_prime(Sign::Minus, mass),
                ShellFactor::fp(mass),
            )
        };
        let ipi = Complex64::new(0.0, std::f64::consts::PI);
        let c = match (pole_power, channel) {
            (_, Channel::Loc) => None,
            (2, Channel::In) | (1, Channel::Out) => Some(ipi),
            _ => Some(-ipi),
        };
        let target_expr = match c {
            None => DistExpr::single(singular),
            Some(c) => DistExpr {
                n_args: 1,
                terms: vec![
                    Term {
                        coeff: c,
                        factors: vec![plus],
                        conservation: None,
                    },
                    Term {
                        coeff: -c,
                        factors: vec![minus],
                        conservation: None,
                    },
                ],
            },
        };
        Ok(LimitTarget {
            pole_power,
            channel,
            mass,
            target_expr,
        })
    }
}

/// Strictly increasing positive times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub values: Vec<f64>,
}

impl TGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::Invalid("time grid must not be empty".into()));
        }
        if values.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::Invalid("time grid values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("time grid must be strictly increasing".into()));
        }
        Ok(TGrid { values })
    }
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid {
            values: vec![5.0, 10.0, 20.0, 40.0, 80.0],
        }
    }
}

/// Pass thresholds for a limit comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitThresholds {
    /// Final relative deviation allowed.
    pub tol_final: f64,
    /// Minimal deviation ratio per doubling of t.
    pub min_ratio: f64,
}

impl Default for LimitThresholds {
    fn default() -> Self {
        LimitThresholds {
            tol_final: 1e-2,
            min_ratio: 4.0,
        }
    }
}

/// `<chi^d_t(channel, .) / (k^2 - m^2)^power, f>`.
pub fn finite_t_value(
    power: u32,
    channel: Channel,
    t: f64,
    mass: f64,
    packet: &WavePacket,
    spec: &QuadSpec,
) -> Result<SmearValue, Error> {
    let factor = match power {
        1 => ShellFactor::pv(mass),
        2 => ShellFactor::fp(mass),
        p => return Err(Error::Invalid(format!("pole power must be 1 or 2, got {p}"))),
    };
    let factor = factor.with_multiplier(Multiplier::chi_d_t(channel, t, mass));
    Ok(smear_factor(&factor, packet, spec)?)
}

/// Comparison of a sequence of finite-time values with a limit value.
#[derive(Clone, Debug, Serialize)]
pub struct DecayAnalysis {
    pub t_grid: Vec<f64>,
    pub values: Vec<SmearValue>,
    pub target: SmearValue,
    /// `|v(t) - target|`.
    pub deviations: Vec<f64>,
    /// Error estimate attached to each deviation.
    pub deviation_errs: Vec<f64>,
    pub rel_deviations: Vec<f64>,
    /// `dev(t_i) / dev(t_{i+1})`, normalized to one doubling of t.
    pub decay_ratios: Vec<f64>,
    /// `v(t_last) / target`: a constant factor here would reveal a
    /// normalization mismatch of the target.
    pub fitted_constant: Option<Complex64>,
    /// Aitken extrapolation of the last three values (diagnostic only).
    pub extrapolated: Option<Complex64>,
    pub thresholds: LimitThresholds,
    pub monotone_tail: bool,
    pub pass: bool,
}

impl DecayAnalysis {
    /// Judge `values` (one per grid time) against `target`.
    ///
    /// A deviation is resolved when it exceeds its error estimate; unresolved
    /// deviations are at the quadrature noise floor and cannot fail a ratio
    /// or monotonicity check.
    pub fn new(grid: &TGrid, values: Vec<SmearValue>, target: SmearValue, thresholds: LimitThresholds) -> Self {
        let deviations: Vec<f64> = values.iter().map(|v| (v.value - target.value).norm()).collect();
        let deviation_errs: Vec<f64> = values.iter().map(|v| v.err_est + target.err_est).collect();
        let scale = target.value.norm();
        let rel_deviations: Vec<f64> = deviations
            .iter()
            .map(|d| if scale > 0.0 { d / scale } else { *d })
            .collect();
        let decay_ratios: Vec<f64> = (1..deviations.len())
            .map(|i| {
                let doublings = (grid.values[i] / grid.values[i - 1]).log2();
                (deviations[i - 1] / deviations[i]).powf(1.0 / doublings)
            })
            .collect();
        let resolved = |i: usize| deviations[i] > deviation_errs[i];
        let ratios_ok = decay_ratios
            .iter()
            .enumerate()
            .all(|(i, r)| *r >= thresholds.min_ratio || !resolved(i) || !resolved(i + 1));
        let n = deviations.len();
        let tail_start = n.saturating_sub(3);
        let monotone_tail = (tail_start + 1..n).all(|i| deviations[i] < deviations[i - 1] || !resolved(i - 1));
        let final_ok = n > 0 && (rel_deviations[n - 1] <= thresholds.tol_final || !resolved(n - 1));
        let fitted_constant = match values.last() {
            Some(v) if scale > 0.0 => Some(v.value / target.value),
            _ => None,
        };
        let raw: Vec<Complex64> = values.iter().map(|v| v.value).collect();
        DecayAnalysis {
            t_grid: grid.values.clone(),
            values,
            target,
            deviations,
            deviation_errs,
            rel_deviations,
            decay_ratios,
            fitted_constant,
            extrapolated: aitken(&raw),
            thresholds,
            monotone_tail,
            pass: ratios_ok && final_ok && monotone_tail,
        }
    }

    /// Surface a non-decaying deviation sequence as an error.
    pub fn into_result(self) -> Result<Self, Error> {
        if self.monotone_tail {
            Ok(self)
        } else {
            Err(Error::NonDecaying(self.deviations))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub pole_power: u32,
    pub channel: Channel,
    #[serde(flatten)]
    pub decay: DecayAnalysis,
}

impl LimitReport {
    pub fn pass(&self) -> bool {
        self.decay.pass
    }
}

fn aitken(v: &[Complex64]) -> Option<Complex64> {
    if v.len() < 3 {
        return None;
    }
    let n = v.len();
    let (a, b, c) = (v[n - 3], v[n - 2], v[n - 1]);
    let den = c - b * 2.0 + a;
    if den.norm() <= 1e-300 {
        return Some(c);
    }
    Some(c - (c - b) * (c - b) / den)
}

/// Evaluate along the grid, compare with the target and judge the decay.
pub fn limit_and_compare(
    target: &LimitTarget,
    grid: &TGrid,
    packet: &WavePacket,
    spec: &QuadSpec,
    thresholds: LimitThresholds,
) -> Result<LimitReport, Error> {
    let tv = smear(&target.target_expr, std::slice::from_ref(packet), spec)?;
    let values: Vec<SmearValue> = grid
        .values
        .par_iter()
        .map(|&t| finite_t_value(target.pole_power, target.channel, t, target.mass, packet, spec))
        .collect::<Result<_, _>>()?;
    Ok(LimitReport {
        pole_power: target.pole_power,
        channel: target.channel,
        decay: DecayAnalysis::new(grid, values, tv, thresholds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loc_channel_is_time_independent() {
        let p = WavePacket::gaussian(&[1.2, 0.4], 1.0);
        let spec = QuadSpec::default();
        let a = finite_t_value(2, Channel::Loc, 3.0, 1.0, &p, &spec).unwrap();
        let b = finite_t_value(2, Channel::Loc, 30.0, 1.0, &p, &spec).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn target_shapes() {
        let t = LimitTarget::new(2, Channel::In, 1.0).unwrap();
        assert_eq!(t.target_expr.terms.len(), 2);
        assert_eq!(t.target_expr.terms[0].coeff, Complex64::new(0.0, std::f64::consts::PI));
        let l = LimitTarget::new(1, Channel::Loc, 1.0).unwrap();
        assert_eq!(l.target_expr.terms.len(), 1);
        assert!(LimitTarget::new(3, Channel::In, 1.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(TGrid::new(vec![]).is_err());
        assert!(TGrid::new(vec![5.0, 5.0]).is_err());
        assert!(TGrid::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn aitken_geometric() {
        let v: Vec<Complex64> = (0..3).map(|i| Complex64::new(1.0 + 0.5f64.powi(i), 0.0)).collect();
        assert!((aitken(&v).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
