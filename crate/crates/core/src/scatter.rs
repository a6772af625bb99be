//! Dipole form factors and the truncated S-matrix: finite-time products of
//! wave-operator multipliers with the truncated Wightman functions, their
//! large-time limits, the closed-form S-matrix and the polynomial divergence
//! of amplitudes built without the dipole correction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymlim::{DecayAnalysis, LimitThresholds, TGrid};
use crate::dist::{smear_regularized, smear_with, DistExpr, RegularizedValue, ShellFactor, SmearConfig, Sign, Term};
use crate::error::Error;
use crate::model::{wightman_truncated, MomentModel};
use crate::packets::WavePacket;
use crate::quad::{QuadSpec, SmearValue};
use crate::waveop::{Channel, Multiplier};

/// Channel and time per argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelAssignment {
    pub channels: Vec<Channel>,
    pub times: Vec<f64>,
}

impl ChannelAssignment {
    pub fn new(channels: Vec<Channel>, times: Vec<f64>) -> Result<Self, Error> {
        if channels.len() != times.len() {
            return Err(Error::Invalid(format!(
                "{} channels but {} times",
                channels.len(),
                times.len()
            )));
        }
        if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Invalid("times must be finite and non-negative".into()));
        }
        Ok(ChannelAssignment { channels, times })
    }

    /// Every argument at the same time.
    pub fn uniform(channels: Vec<Channel>, t: f64) -> Result<Self, Error> {
        let n = channels.len();
        Self::new(channels, vec![t; n])
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }
}

/// Which one-particle multiplier realizes the asymptotic limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticKind {
    /// `chi^d_t`, with the dipole correction.
    ChiDT,
    /// `chi_t` alone (Haag-Ruelle without the dipole correction).
    HaagRuelle,
}

impl std::str::FromStr for AsymptoticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "chi_d_t" => Ok(AsymptoticKind::ChiDT),
            "chi_t" | "haag_ruelle" => Ok(AsymptoticKind::HaagRuelle),
            other => Err(Error::Invalid(format!("unknown multiplier kind {other:?}"))),
        }
    }
}

fn multiplied(expr: &DistExpr, assign: &ChannelAssignment, mass: f64, kind: AsymptoticKind) -> DistExpr {
    let mut e = expr.clone();
    for (l, (&ch, &t)) in assign.channels.iter().zip(&assign.times).enumerate() {
        if ch == Channel::Loc {
            continue;
        }
        let m = match kind {
            AsymptoticKind::ChiDT => Multiplier::chi_d_t(ch, t, mass),
            AsymptoticKind::HaagRuelle => Multiplier::haag_ruelle(ch, t, mass),
        };
        e = e.apply_multiplier(l, &m);
    }
    e
}

fn check_len(n: usize, assign: &ChannelAssignment, packets: &[WavePacket]) -> Result<(), Error> {
    if assign.len() != n || packets.len() != n {
        return Err(Error::Invalid(format!(
            "need {n} channels and packets, got {} and {}",
            assign.len(),
            packets.len()
        )));
    }
    Ok(())
}

/// `< prod_l mu_{t_l}(a_l, k_l) W_n^T, f_1 (x) ... (x) f_n >` with the given
/// multiplier kind.
pub fn finite_time_amplitude(
    assign: &ChannelAssignment,
    kind: AsymptoticKind,
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
) -> Result<SmearValue, Error> {
    let n = assign.len();
    check_len(n, assign, packets)?;
    let w = wightman_truncated(n, model)?;
    let e = multiplied(&w, assign, model.mass, kind);
    Ok(smear_with(&e, packets, spec, &SmearConfig::default())?)
}

/// Finite-time Wightman function with the dipole multipliers `chi^d_t`.
pub fn finite_time_wightman(
    assign: &ChannelAssignment,
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
) -> Result<SmearValue, Error> {
    finite_time_amplitude(assign, AsymptoticKind::ChiDT, model, packets, spec)
}

/// Limit of `chi^d_t(a, k) / (k^2 - m^2)^2` written out per channel as
/// `(coefficient, factor)` pairs.
fn double_pole_limit(ch: Channel, mass: f64) -> Vec<(Complex64, ShellFactor)> {
    let ipi = Complex64::new(0.0, PI);
    match ch {
        Channel::Loc => vec![(Complex64::new(1.0, 0.0), ShellFactor::fp(mass))],
        Channel::In => vec![
            (ipi, ShellFactor::delta_prime(Sign::Plus, mass)),
            (-ipi, ShellFactor::delta_prime(Sign::Minus, mass)),
        ],
        Channel::Out => vec![
            (-ipi, ShellFactor::delta_prime(Sign::Plus, mass)),
            (ipi, ShellFactor::delta_prime(Sign::Minus, mass)),
        ],
    }
}

/// Limit of `chi_t(a, k) / (k^2 - m^2)` per channel.
pub(crate) fn simple_pole_limit(ch: Channel, mass: f64) -> Vec<(Complex64, ShellFactor)> {
    let ipi = Complex64::new(0.0, PI);
    match ch {
        Channel::Loc => vec![(Complex64::new(1.0, 0.0), ShellFactor::pv(mass))],
        Channel::Out => vec![
            (ipi, ShellFactor::delta(Sign::Plus, mass)),
            (-ipi, ShellFactor::delta(Sign::Minus, mass)),
        ],
        Channel::In => vec![
            (-ipi, ShellFactor::delta(Sign::Plus, mass)),
            (ipi, ShellFactor::delta(Sign::Minus, mass)),
        ],
    }
}

/// Replace the singular factor of each term by its channel limit; shell
/// factors stay as they are (multipliers act trivially on the shell).
pub(crate) fn limit_expr<L>(base: &DistExpr, channels: &[Channel], limit: L) -> DistExpr
where
    L: Fn(Channel) -> Vec<(Complex64, ShellFactor)>,
{
    let mut terms = Vec::new();
    for t in &base.terms {
        let Some(j) = t.factors.iter().position(|f| f.kind.is_singular()) else {
            terms.push(t.clone());
            continue;
        };
        for (c, f) in limit(channels[j]) {
            let mut factors = t.factors.clone();
            factors[j] = f;
            terms.push(Term {
                coeff: t.coeff * c,
                factors,
                conservation: t.conservation.clone(),
            });
        }
    }
    DistExpr {
        n_args: base.n_args,
        terms,
    }
}

/// The form factor distribution `F_n^{d,T(a_1..a_n)}`: the truncated
/// Wightman function with each finite-part factor replaced by its channel
/// limit.
pub fn form_factor_expr(channels: &[Channel], model: &MomentModel) -> Result<DistExpr, Error> {
    let w = wightman_truncated(channels.len(), model)?;
    if channels.len() == 2 {
        return Ok(w);
    }
    Ok(limit_expr(&w, channels, |ch| double_pole_limit(ch, model.mass)))
}

/// Smear of the form factor; over-determined shell products are mollified
/// and extrapolated.
pub fn form_factor(
    channels: &[Channel],
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
) -> Result<RegularizedValue, Error> {
    if channels.len() != packets.len() {
        return Err(Error::Invalid(format!(
            "{} channels but {} packets",
            channels.len(),
            packets.len()
        )));
    }
    let e = form_factor_expr(channels, model)?;
    Ok(smear_regularized(&e, packets, spec, cfg)?)
}

/// `2 pi i c~_n prod_l delta'^+(k_l) delta(sum_{l<=r} k_l - sum_{l>r} k_l)`.
pub fn smatrix_expr(n: usize, r: usize, model: &MomentModel) -> Result<DistExpr, Error> {
    check_nr(n, r)?;
    let coeff = Complex64::new(0.0, 2.0 * PI * model.c_tilde(n)?);
    Ok(signed_shell_product(n, r, coeff, ShellFactor::delta_prime(Sign::Plus, model.mass)))
}

pub(crate) fn check_nr(n: usize, r: usize) -> Result<(), Error> {
    if n < 3 || r < 1 || r >= n {
        return Err(Error::Invalid(format!("need n >= 3 and 1 <= r < n, got n = {n}, r = {r}")));
    }
    Ok(())
}

pub(crate) fn signed_shell_product(n: usize, r: usize, coeff: Complex64, shell: ShellFactor) -> DistExpr {
    let conservation = (0..n).map(|l| if l < r { 1 } else { -1 }).collect();
    DistExpr {
        n_args: n,
        terms: vec![Term {
            coeff,
            factors: vec![shell; n],
            conservation: Some(conservation),
        }],
    }
}

pub(crate) fn check_positive_energy(packets: &[WavePacket]) -> Result<(), Error> {
    for (l, p) in packets.iter().enumerate() {
        if !(p.center()[0] > 0.0) {
            return Err(Error::Invalid(format!(
                "packet {l} must be centered at positive energy for creation operators"
            )));
        }
    }
    Ok(())
}

/// Closed-form truncated S-matrix element, mollified and extrapolated.
pub fn smatrix_truncated(
    n: usize,
    r: usize,
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
) -> Result<RegularizedValue, Error> {
    let e = smatrix_expr(n, r, model)?;
    if packets.len() != n {
        return Err(Error::Invalid(format!("need {n} packets, got {}", packets.len())));
    }
    check_positive_energy(packets)?;
    Ok(smear_regularized(&e, packets, spec, cfg)?)
}

/// The same S-matrix element from the form factor with the first `r`
/// arguments incoming and the rest outgoing. Incoming states enter through
/// the bra, so their packets are reflected `k -> -k`.
pub fn smatrix_limit_path(
    n: usize,
    r: usize,
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
) -> Result<RegularizedValue, Error> {
    check_nr(n, r)?;
    if packets.len() != n {
        return Err(Error::Invalid(format!("need {n} packets, got {}", packets.len())));
    }
    check_positive_energy(packets)?;
    let channels: Vec<Channel> = (0..n).map(|l| if l < r { Channel::In } else { Channel::Out }).collect();
    let reflected: Vec<WavePacket> = packets
        .iter()
        .enumerate()
        .map(|(l, p)| if l < r { p.reflect() } else { p.clone() })
        .collect();
    form_factor(&channels, model, &reflected, spec, cfg)
}

/// Agreement of two independently regularized evaluations.
#[derive(Clone, Debug, Serialize)]
pub struct DualPathReport {
    pub closed_form: RegularizedValue,
    pub limit_path: RegularizedValue,
    /// `limit / closed` when the closed form is resolved above its error.
    pub ratio: Option<Complex64>,
    pub gap: f64,
    pub allowed: f64,
    pub tol_rel: f64,
    pub pass: bool,
}

impl DualPathReport {
    /// Pass iff `|a - b| <= tol_rel max(|a|, |b|) + err_a + err_b`.
    pub fn new(closed_form: RegularizedValue, limit_path: RegularizedValue, tol_rel: f64) -> Self {
        let a = closed_form.value;
        let b = limit_path.value;
        let gap = (a.value - b.value).norm();
        let allowed = tol_rel * a.value.norm().max(b.value.norm()) + a.err_est + b.err_est;
        let ratio = (a.value.norm() > a.err_est).then(|| b.value / a.value);
        DualPathReport {
            closed_form,
            limit_path,
            ratio,
            gap,
            allowed,
            tol_rel,
            pass: gap <= allowed,
        }
    }
}

/// Closed form vs. limit path of the truncated S-matrix.
pub fn smatrix_dual_path(
    n: usize,
    r: usize,
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
    tol_rel: f64,
) -> Result<DualPathReport, Error> {
    let (a, b) = rayon::join(
        || smatrix_truncated(n, r, model, packets, spec, cfg),
        || smatrix_limit_path(n, r, model, packets, spec, cfg),
    );
    Ok(DualPathReport::new(a?, b?, tol_rel))
}

/// Finite-time Wightman values along a time grid against the form factor.
#[derive(Clone, Debug, Serialize)]
pub struct FormFactorConvergence {
    pub channels: Vec<Channel>,
    pub form_factor: RegularizedValue,
    #[serde(flatten)]
    pub decay: DecayAnalysis,
}

/// Send all times to infinity together along `grid`.
pub fn form_factor_convergence(
    channels: &[Channel],
    grid: &TGrid,
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
    thresholds: LimitThresholds,
) -> Result<FormFactorConvergence, Error> {
    let ff = form_factor(channels, model, packets, spec, cfg)?;
    let values: Vec<SmearValue> = grid
        .values
        .par_iter()
        .map(|&t| {
            let a = ChannelAssignment::uniform(channels.to_vec(), t)?;
            finite_time_wightman(&a, model, packets, spec)
        })
        .collect::<Result<_, _>>()?;
    Ok(FormFactorConvergence {
        channels: channels.to_vec(),
        decay: DecayAnalysis::new(grid, values, ff.value, thresholds),
        form_factor: ff,
    })
}

/// Growth of the amplitude without the dipole correction, with the dipole
/// multipliers as control.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub channels: Vec<Channel>,
    pub kind: AsymptoticKind,
    pub t_grid: Vec<f64>,
    pub values: Vec<SmearValue>,
    pub control: Vec<SmearValue>,
    /// Least-squares slope of `log |v|` against `log t`.
    pub slope: f64,
    pub intercept: f64,
    /// `max |control| / min |control|`.
    pub control_spread: f64,
    pub min_slope: f64,
    pub max_spread: f64,
    pub growth_pass: bool,
    pub control_pass: bool,
    pub pass: bool,
}

/// Least-squares line through `(x_i, y_i)`: `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Evaluate the amplitude with `kind` multipliers and with `chi^d_t` along
/// `grid`; the first must grow at least with `min_slope` in log-log, the
/// control must stay within `max_spread`.
#[allow(clippy::too_many_arguments)]
pub fn divergence_demo(
    channels: &[Channel],
    kind: AsymptoticKind,
    grid: &TGrid,
    model: &MomentModel,
    packets: &[WavePacket],
    spec: &QuadSpec,
    min_slope: f64,
    max_spread: f64,
) -> Result<DivergenceReport, Error> {
    if channels.len() < 3 {
        return Err(Error::Invalid("the divergence demonstration needs n >= 3".into()));
    }
    let eval = |k: AsymptoticKind| -> Result<Vec<SmearValue>, Error> {
        grid.values
            .par_iter()
            .map(|&t| {
                let a = ChannelAssignment::uniform(channels.to_vec(), t)?;
                finite_time_amplitude(&a, k, model, packets, spec)
            })
            .collect()
    };
    let (values, control) = rayon::join(|| eval(kind), || eval(AsymptoticKind::ChiDT));
    let (values, control) = (values?, control?);
    let lx: Vec<f64> = grid.values.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.value.norm().max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    let norms: Vec<f64> = control.iter().map(|v| v.value.norm()).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let control_spread = if min > 0.0 { max / min } else { f64::INFINITY };
    let growth_pass = slope >= min_slope;
    let control_pass = control_spread <= max_spread;
    Ok(DivergenceReport {
        channels: channels.to_vec(),
        kind,
        t_grid: grid.values.clone(),
        values,
        control,
        slope,
        intercept,
        control_spread,
        min_slope,
        max_spread,
        growth_pass,
        control_pass,
        // with chi^d_t as the kind under test there is no growth to demonstrate
        pass: if kind == AsymptoticKind::ChiDT { control_pass } else { growth_pass && control_pass },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MomentModel {
        MomentModel::new(1.0, 2, vec![1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn form_factor_structure() {
        let m = model();
        let e = form_factor_expr(&[Channel::In, Channel::Loc, Channel::Out], &m).unwrap();
        // in: 2 terms, loc: 1, out: 2
        assert_eq!(e.terms.len(), 5);
        let all_loc = form_factor_expr(&[Channel::Loc; 3], &m).unwrap();
        assert_eq!(all_loc, wightman_truncated(3, &m).unwrap());
        let two = form_factor_expr(&[Channel::In, Channel::Out], &m).unwrap();
        assert_eq!(two, wightman_truncated(2, &m).unwrap());
    }

    #[test]
    fn smatrix_shape() {
        let m = model();
        let e = smatrix_expr(3, 1, &m).unwrap();
        assert_eq!(e.terms[0].conservation, Some(vec![1, -1, -1]));
        assert!(smatrix_expr(3, 3, &m).is_err());
        assert!(smatrix_expr(2, 1, &m).is_err());
    }

    #[test]
    fn linear_fit_exact() {
        let (s, i) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-15 && (i - 1.0).abs() < 1e-15);
    }

    #[test]
    fn channel_assignment_validation() {
        assert!(ChannelAssignment::new(vec![Channel::In], vec![1.0, 2.0]).is_err());
        assert!(ChannelAssignment::new(vec![Channel::In], vec![-1.0]).is_err());
        assert!("chi_d_t".parse::<AsymptoticKind>().is_ok());
        assert!("bogus".parse::<AsymptoticKind>().is_err());
    }
}
