//! First-order perturbation theory of the exponential and trigonometric
//! interactions: Wick-exponential correlations, the subset and pair-partition
//! expansion of the first-order Schwinger functions, their momentum-space
//! continuation and the resulting scattering amplitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dist::{smear_regularized, DistExpr, RegularizedValue, ShellFactor, SmearConfig, Sign};
use crate::error::{Error, ModelError};
use crate::model::{c_tilde_factor, euclid_kernel_radial, kernel_product_integral, pair_partitions, shell_sum, two_point_dipole, MomentModel};
use crate::packets::WavePacket;
use crate::quad::{QuadSpec, SmearValue};
use crate::scatter::{check_nr, check_positive_energy, signed_shell_product, DualPathReport};
use crate::waveop::Channel;

/// Coupling measure `rho` as weighted atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingMeasure {
    /// `(location alpha_i, weight w_i)`.
    pub atoms: Vec<(f64, f64)>,
    /// Trigonometric interaction: `alpha -> i alpha`.
    #[serde(default)]
    pub trigonometric: bool,
}

impl CouplingMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, Error> {
        let m = CouplingMeasure {
            atoms,
            trigonometric: false,
        };
        m.validate()?;
        Ok(m)
    }

    /// `rho = (delta_{-1} + delta_1) / 2`, the sinh-Gordon choice.
    pub fn sinh_gordon() -> Self {
        CouplingMeasure {
            atoms: vec![(-1.0, 0.5), (1.0, 0.5)],
            trigonometric: false,
        }
    }

    pub fn trigonometric(mut self) -> Self {
        self.trigonometric = true;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.atoms.is_empty() {
            return Err(Error::Invalid("coupling measure needs at least one atom".into()));
        }
        let bound = (4.0 * PI).sqrt();
        for &(a, w) in &self.atoms {
            if !(a.abs() < bound) {
                return Err(Error::Invalid(format!("atom {a} lies outside (-sqrt(4 pi), sqrt(4 pi))")));
            }
            if !(w >= 0.0) {
                return Err(Error::Invalid(format!("negative weight {w}")));
            }
        }
        let total: f64 = self.atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        let m: CouplingMeasure = serde_json::from_str(s)
            .map_err(|e| Error::Invalid(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        m.validate()?;
        Ok(m)
    }

    /// Real moment `sum_i w_i alpha_i^q`.
    pub fn real_moment(&self, q: usize) -> f64 {
        self.atoms.iter().map(|(a, w)| w * a.powi(q as i32)).sum()
    }

    /// Moment of the effective coupling: `mu_q`, or `i^q mu_q` for the
    /// trigonometric interaction.
    pub fn moment(&self, q: usize) -> Complex64 {
        let mu = Complex64::new(self.real_moment(q), 0.0);
        if self.trigonometric {
            mu * Complex64::new(0.0, 1.0).powu(q as u32)
        } else {
            mu
        }
    }

    /// `c~_q` with `c_q` replaced by the `q`-th moment.
    pub fn c_tilde(&self, dim: usize, q: usize) -> Complex64 {
        self.moment(q) * c_tilde_factor(dim, q)
    }
}

fn green(a: [f64; 2], b: [f64; 2], model: &MomentModel) -> Result<f64, ModelError> {
    let r = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    euclid_kernel_radial(1, r, model.mass, 2)
}

fn check_plane(model: &MomentModel) -> Result<(), Error> {
    if model.dim != 2 {
        return Err(Error::Model(ModelError::Unsupported(format!(
            "first-order expansion is implemented for d = 2, got d = {}",
            model.dim
        ))));
    }
    Ok(())
}

fn check_distinct(points: &[[f64; 2]]) -> Result<(), Error> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]) < crate::model::ORIGIN_CUTOFF {
                return Err(Error::Model(ModelError::CoincidentPoints(i, j)));
            }
        }
    }
    Ok(())
}

/// All subsets of `{0..n-1}` as sorted index lists, in order of increasing
/// bitmask.
pub fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// All pairs `(S, I)` with `S` a subset of `{0..n-1}` and `I` a perfect
/// matching of its complement, ordered by the bitmask of `S` and then by the
/// matching order of [`pair_partitions`].
pub fn subset_pairings(n: usize) -> Vec<(Vec<usize>, Vec<(usize, usize)>)> {
    let mut out = Vec::new();
    for s in subsets(n) {
        let rest: Vec<usize> = (0..n).filter(|i| !s.contains(i)).collect();
        for p in pair_partitions(&rest) {
            out.push((s.clone(), p));
        }
    }
    out
}

/// `sum over pairings I of items of prod_{ {j,l} in I } G(x_j - x_l)`.
fn pairing_sum(items: &[usize], points: &[[f64; 2]], model: &MomentModel) -> Result<f64, Error> {
    let mut total = 0.0;
    for p in pair_partitions(items) {
        let mut v = 1.0;
        for (a, b) in p {
            v *= green(points[a], points[b], model)?;
        }
        total += v;
    }
    Ok(total)
}

/// `<phi(x_1) ... phi(x_n) :exp(alpha phi(x)):>`: the sum over subsets `S`
/// of `alpha^|S| prod_{j in S} G(x_j - x)` times the pairings of the
/// complement.
pub fn wick_exp_correlation(points: &[[f64; 2]], x: [f64; 2], alpha: f64, model: &MomentModel) -> Result<f64, Error> {
    check_plane(model)?;
    let mut all = points.to_vec();
    all.push(x);
    check_distinct(&all)?;
    let mut total = 0.0;
    for (s, pairs) in subset_pairings(points.len()) {
        let mut v = alpha.powi(s.len() as i32);
        for &j in &s {
            v *= green(points[j], x, model)?;
        }
        for (a, b) in pairs {
            v *= green(points[a], points[b], model)?;
        }
        total += v;
    }
    Ok(total)
}

/// Contribution of one subset `S` to the first-order coefficient.
#[derive(Clone, Debug, Serialize)]
pub struct SubsetTerm {
    pub subset: Vec<usize>,
    pub moment: Complex64,
    /// `int prod_{j in S} G(x_j - x) dx`; absent when the moment vanishes.
    pub integral: Option<SmearValue>,
    pub pairing: f64,
    pub value: SmearValue,
}

/// First-order Schwinger function.
#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderSchwinger {
    /// `<phi(x_1) ... phi(x_n)>` of the free field.
    pub free: f64,
    /// Coefficient of `lambda`.
    pub first_order: SmearValue,
    pub lambda: f64,
    /// `free + lambda * first_order`.
    pub value: SmearValue,
    pub terms: Vec<SubsetTerm>,
    /// The `S = {}` terms and the volume counter-term cancel identically;
    /// neither is generated.
    pub volume_counterterm_consumed: bool,
}

/// `<phi(x_1) ... phi(x_n)>_lambda` to first order: the free pairing sum plus
/// `-(lambda/2) sum_{S != {}} mu_|S| int prod_{j in S} G(x_j - x) dx` times
/// the pairings of the complement of `S`.
pub fn first_order_schwinger(
    points: &[[f64; 2]],
    lambda: f64,
    rho: &CouplingMeasure,
    model: &MomentModel,
    spec: &QuadSpec,
) -> Result<FirstOrderSchwinger, Error> {
    check_plane(model)?;
    rho.validate()?;
    check_distinct(points)?;
    let n = points.len();
    if n > 4 {
        return Err(Error::Model(ModelError::Unsupported(format!("n <= 4 is supported, got {n}"))));
    }
    let all: Vec<usize> = (0..n).collect();
    let free = pairing_sum(&all, points, model)?;
    let mut terms = Vec::new();
    let mut first = SmearValue::zero();
    for s in subsets(n).into_iter().filter(|s| !s.is_empty()) {
        let rest: Vec<usize> = (0..n).filter(|i| !s.contains(i)).collect();
        let pairing = pairing_sum(&rest, points, model)?;
        let moment = rho.moment(s.len());
        let (integral, value) = if moment == Complex64::new(0.0, 0.0) || pairing == 0.0 {
            (None, SmearValue::zero())
        } else {
            let centers: Vec<[f64; 2]> = s.iter().map(|&j| points[j]).collect();
            let i = kernel_product_integral(&centers, 1, model.mass, spec)?;
            (Some(i), i.scale(moment * (-0.5 * pairing)))
        };
        first = first + value;
        terms.push(SubsetTerm {
            subset: s,
            moment,
            integral,
            pairing,
            value,
        });
    }
    let value = SmearValue::exact(Complex64::new(free, 0.0)) + first.scale(Complex64::new(lambda, 0.0));
    Ok(FirstOrderSchwinger {
        free,
        first_order: first,
        lambda,
        value,
        terms,
        volume_counterterm_consumed: true,
    })
}

/// Momentum-space continuation of the `|S| = q` first-order term.
///
/// `q = 2`: `-(mu_2 K / m^4) delta'^-(k_1) delta(k_1 + k_2)` with the
/// configurable constant `K`.
/// `q >= 3`: `c~_q sum_j prod_{l<j} delta^-(k_l) PV (k_j^2 - m^2)^(-1)
/// prod_{l>j} delta^+(k_l) delta(sum k)`.
pub fn first_order_wightman_term(q: usize, model: &MomentModel, rho: &CouplingMeasure, dipole_constant: f64) -> Result<DistExpr, Error> {
    let m = model.mass;
    match q {
        0 | 1 => Err(Error::Invalid(format!("first-order Wightman terms need q >= 2, got {q}"))),
        2 => {
            let mut e = two_point_dipole(-dipole_constant / m.powi(4), m);
            e.terms[0].coeff *= rho.moment(2);
            Ok(e)
        }
        _ => Ok(shell_sum(q, rho.c_tilde(model.dim, q), ShellFactor::pv(m), |s| ShellFactor::delta(s, m))),
    }
}

/// `2 pi i c~_q prod_l delta^+(k_l) delta(sum_{l<=r} k_l - sum_{l>r} k_l)`.
pub fn first_order_smatrix_expr(q: usize, r: usize, model: &MomentModel, rho: &CouplingMeasure) -> Result<DistExpr, Error> {
    check_nr(q, r)?;
    let coeff = rho.c_tilde(model.dim, q) * Complex64::new(0.0, 2.0 * PI);
    Ok(signed_shell_product(q, r, coeff, ShellFactor::delta(Sign::Plus, model.mass)))
}

/// First-order scattering amplitude, closed form, mollified and extrapolated.
/// Packets of negative energy are allowed; the `delta^+` shells annihilate
/// them.
pub fn first_order_smatrix(
    q: usize,
    r: usize,
    model: &MomentModel,
    rho: &CouplingMeasure,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
) -> Result<RegularizedValue, Error> {
    let e = first_order_smatrix_expr(q, r, model, rho)?;
    if packets.len() != q {
        return Err(Error::Invalid(format!("need {q} packets, got {}", packets.len())));
    }
    Ok(smear_regularized(&e, packets, spec, cfg)?)
}

/// The same amplitude as the large-time limit of the continued `q`-point
/// term with `chi_t` multipliers: incoming arguments first (packets
/// reflected), outgoing after.
pub fn first_order_limit_path(
    q: usize,
    r: usize,
    model: &MomentModel,
    rho: &CouplingMeasure,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
) -> Result<RegularizedValue, Error> {
    check_nr(q, r)?;
    if packets.len() != q {
        return Err(Error::Invalid(format!("need {q} packets, got {}", packets.len())));
    }
    check_positive_energy(packets)?;
    let base = first_order_wightman_term(q, model, rho, 1.0)?;
    let channels: Vec<Channel> = (0..q).map(|l| if l < r { Channel::In } else { Channel::Out }).collect();
    let e = crate::scatter::limit_expr(&base, &channels, |ch| crate::scatter::simple_pole_limit(ch, model.mass));
    let reflected: Vec<WavePacket> = packets
        .iter()
        .enumerate()
        .map(|(l, p)| if l < r { p.reflect() } else { p.clone() })
        .collect();
    Ok(smear_regularized(&e, &reflected, spec, cfg)?)
}

/// Closed form vs. limit path for the first-order amplitude.
#[allow(clippy::too_many_arguments)]
pub fn first_order_dual_path(
    q: usize,
    r: usize,
    model: &MomentModel,
    rho: &CouplingMeasure,
    packets: &[WavePacket],
    spec: &QuadSpec,
    cfg: &SmearConfig,
    tol_rel: f64,
) -> Result<DualPathReport, Error> {
    let (a, b) = rayon::join(
        || first_order_smatrix(q, r, model, rho, packets, spec, cfg),
        || first_order_limit_path(q, r, model, rho, packets, spec, cfg),
    );
    Ok(DualPathReport::new(a?, b?, tol_rel))
}

/// The two-point (`q = 2`) term is a pure dipole: its shell part is a
/// `delta'`, which the limit of `chi^d_t` leaves unchanged and which has no
/// on-shell `delta` component, so it does not scatter. Returns the smear of
/// `(k^2 - m^2)^2` times the term, which must vanish.
pub fn dipole_term_scattering(
    model: &MomentModel,
    rho: &CouplingMeasure,
    packets: &[WavePacket],
    spec: &QuadSpec,
) -> Result<SmearValue, Error> {
    let e = first_order_wightman_term(2, model, rho, 1.0)?;
    let sq = crate::waveop::Multiplier::shell_power(model.dim, model.mass, 2);
    let e = e.apply_multiplier(0, &sq);
    Ok(crate::dist::smear(&e, packets, spec)?)
}

/// Ratio of the `|S| = 2` plane integral to the order-2 kernel at the same
/// separation: the constant relating the first-order two-point term to the
/// dipole two-point function.
pub fn fitted_dipole_constant(points: [[f64; 2]; 2], model: &MomentModel, spec: &QuadSpec) -> Result<SmearValue, Error> {
    check_plane(model)?;
    let integral = kernel_product_integral(&points, 1, model.mass, spec)?;
    let r = (points[0][0] - points[1][0]).hypot(points[0][1] - points[1][1]);
    let k2 = euclid_kernel_radial(2, r, model.mass, 2)?;
    Ok(integral.scale(Complex64::new(1.0 / k2, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MomentModel {
        MomentModel::new(1.0, 2, vec![1.0]).unwrap()
    }

    #[test]
    fn measure_validation_and_moments() {
        assert!(CouplingMeasure::new(vec![(4.0, 1.0)]).is_err());
        assert!(CouplingMeasure::new(vec![(1.0, 0.6)]).is_err());
        let sg = CouplingMeasure::sinh_gordon();
        assert_eq!(sg.real_moment(3), 0.0);
        assert_eq!(sg.real_moment(2), 1.0);
        let tr = CouplingMeasure::new(vec![(0.5, 1.0)]).unwrap().trigonometric();
        assert!((tr.moment(2) - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn wick_correlation_small_cases() {
        let m = model();
        let x = [0.3, 0.4];
        let p = [[0.0, 0.0], [1.0, 0.0]];
        let g = |a: [f64; 2], b: [f64; 2]| green(a, b, &m).unwrap();
        let v1 = wick_exp_correlation(&p[..1], x, 0.7, &m).unwrap();
        assert!((v1 - 0.7 * g(p[0], x)).abs() < 1e-15);
        let v2 = wick_exp_correlation(&p, x, 1.0, &m).unwrap();
        assert!((v2 - (g(p[0], p[1]) + g(p[0], x) * g(p[1], x))).abs() < 1e-15);
        let free = wick_exp_correlation(&p, x, 0.0, &m).unwrap();
        assert!((free - g(p[0], p[1])).abs() < 1e-15);
        assert!(wick_exp_correlation(&p, p[0], 1.0, &m).is_err());
    }

    #[test]
    fn first_order_term_structure() {
        let m = MomentModel::new(1.0, 2, vec![1.0, 1.0]).unwrap();
        let rho = CouplingMeasure::new(vec![(0.5, 0.5), (1.0, 0.5)]).unwrap();
        let e = first_order_wightman_term(3, &m, &rho, 1.0).unwrap();
        assert_eq!(e.terms.len(), 3);
        use crate::dist::FactorKind::*;
        let kinds: Vec<_> = e.terms[2].factors.iter().map(|f| f.kind).collect();
        assert_eq!(kinds, vec![Delta, Delta, PvPow1]);
        let two = first_order_wightman_term(2, &m, &rho, 1.0).unwrap();
        assert_eq!(two.terms[0].factors[0].kind, DeltaPrime);
    }

    #[test]
    fn sinh_gordon_odd_terms_vanish() {
        let m = model();
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = first_order_schwinger(&pts, 0.1, &CouplingMeasure::sinh_gordon(), &m, &QuadSpec::default()).unwrap();
        for t in &r.terms {
            if t.subset.len() % 2 == 1 {
                assert_eq!(t.value.value, Complex64::new(0.0, 0.0));
                assert!(t.integral.is_none());
            }
        }
        assert!(r.volume_counterterm_consumed);
        assert!(r.terms.iter().all(|t| !t.subset.is_empty()));
    }

    #[test]
    fn subsets_enumerated() {
        assert_eq!(subsets(3).len(), 8);
        assert_eq!(subsets(0), vec![Vec::<usize>::new()]);
        // involution numbers
        let counts: Vec<usize> = (0..7).map(|n| subset_pairings(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 10, 26, 76]);
    }
}
