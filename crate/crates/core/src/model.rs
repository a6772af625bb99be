//! Moment data of the Lévy-noise dipole model: Euclidean kernels, truncated
//! Schwinger functions, truncated Wightman functions in momentum space and
//! assembly of full moments from truncated ones over set partitions.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DistExpr, ShellFactor, Sign, Term};
use crate::error::ModelError;
use crate::quad::{Adaptive1d, QuadSpec, SmearValue};

/// Below this distance kernels report [`ModelError::OriginSingularity`].
pub const ORIGIN_CUTOFF: f64 = 1e-12;

const BESSEL_STEP: f64 = 0.05;
const BESSEL_TABLE: usize = 1200;

fn cosh_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (0..BESSEL_TABLE).map(|k| (k as f64 * BESSEL_STEP).cosh()).collect())
}

/// `e^x K_nu(x)` by the trapezoidal rule on
/// `int_0^inf exp(-x (cosh u - 1)) cosh(nu u) du`, which converges
/// geometrically in the step for this entire integrand.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k_scaled needs x > 0");
    let table = cosh_table();
    let u_max = (1.0 + 45.0 / x).acosh() + 1.0;
    let n = ((u_max / BESSEL_STEP).ceil() as usize).min(BESSEL_TABLE - 1);
    let nu = nu.abs();
    let mut sum = 0.5;
    for (k, ch) in table.iter().enumerate().take(n + 1).skip(1) {
        let weight = if nu == 0.0 {
            1.0
        } else if nu == 1.0 {
            *ch
        } else {
            (nu * k as f64 * BESSEL_STEP).cosh()
        };
        sum += (-x * (ch - 1.0)).exp() * weight;
    }
    sum * BESSEL_STEP
}

/// Modified Bessel function of the second kind `K_nu(x)`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}

/// `K_0(x)`.
pub fn bessel_k0(x: f64) -> f64 {
    bessel_k(0.0, x)
}

/// `K_1(x)`.
pub fn bessel_k1(x: f64) -> f64 {
    bessel_k(1.0, x)
}

/// Optional generator of the cumulant sequence from a named Lévy
/// characteristic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Generator {
    /// `psi(s) = lambda (exp(i a s) - 1)`, so `c_n = lambda a^n`.
    Poisson { lambda: f64, a: f64 },
}

impl Generator {
    pub fn cumulant(&self, n: usize) -> f64 {
        match self {
            Generator::Poisson { lambda, a } => lambda * a.powi(n as i32),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_n_max() -> usize {
    8
}

/// Parameters of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentModel {
    pub mass: f64,
    pub dim: usize,
    /// Variance constant `c = -psi''(0)`.
    pub c: f64,
    /// `c_2, c_3, ...`; generated from `generator` when empty.
    #[serde(default)]
    pub cumulants: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    /// Truncated one-point function (constant field shift).
    #[serde(default)]
    pub one_point: f64,
    /// Overall constant of the two-point function.
    #[serde(default = "one")]
    pub w2_normalization: f64,
    /// Highest cumulant order produced by the generator.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

impl MomentModel {
    /// Model with explicit cumulants `c_2, c_3, ...`; `c` is taken from `c_2`.
    pub fn new(mass: f64, dim: usize, cumulants: Vec<f64>) -> Result<Self, ModelError> {
        let c = cumulants.first().copied().unwrap_or(0.0);
        let m = MomentModel {
            mass,
            dim,
            c,
            cumulants,
            generator: None,
            one_point: 0.0,
            w2_normalization: 1.0,
            n_max: default_n_max(),
        };
        m.validated()
    }

    pub fn poisson(mass: f64, dim: usize, lambda: f64, a: f64, n_max: usize) -> Result<Self, ModelError> {
        let m = MomentModel {
            mass,
            dim,
            c: lambda * a * a,
            cumulants: vec![],
            generator: Some(Generator::Poisson { lambda, a }),
            one_point: 0.0,
            w2_normalization: 1.0,
            n_max,
        };
        m.validated()
    }

    /// Check invariants and fill the cumulant list from the generator.
    pub fn validated(mut self) -> Result<Self, ModelError> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(ModelError::Invalid(format!("mass must be positive, got {}", self.mass)));
        }
        if self.dim < 2 {
            return Err(ModelError::Invalid(format!("dimension must be at least 2, got {}", self.dim)));
        }
        if let Some(g) = &self.generator {
            let Generator::Poisson { lambda, a } = g;
            if !(*lambda >= 0.0) || !a.is_finite() {
                return Err(ModelError::Invalid("poisson generator needs lambda >= 0 and finite a".into()));
            }
            let generated: Vec<f64> = (2..=self.n_max.max(2)).map(|n| g.cumulant(n)).collect();
            if self.cumulants.is_empty() {
                self.cumulants = generated;
            } else {
                for (i, (given, gen)) in self.cumulants.iter().zip(&generated).enumerate() {
                    if (given - gen).abs() > 1e-12 * gen.abs().max(1.0) {
                        return Err(ModelError::Invalid(format!(
                            "cumulant c_{} = {given} disagrees with the generator value {gen}",
                            i + 2
                        )));
                    }
                }
            }
        }
        if self.cumulants.iter().any(|c| !c.is_finite()) || !self.c.is_finite() {
            return Err(ModelError::Invalid("cumulants must be finite".into()));
        }
        if let Some(c2) = self.cumulants.first() {
            if (c2 - self.c).abs() > 1e-12 * self.c.abs().max(1.0) {
                return Err(ModelError::Invalid(format!(
                    "c = {} must equal c_2 = {c2} (both are -psi''(0))",
                    self.c
                )));
            }
        }
        Ok(self)
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let m: MomentModel = serde_json::from_str(s).map_err(|e| {
            ModelError::Invalid(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        m.validated()
    }

    /// `c_n` for `n >= 2`.
    pub fn cumulant(&self, n: usize) -> Result<f64, ModelError> {
        if n < 2 {
            return Err(ModelError::Invalid(format!("cumulants start at order 2, got {n}")));
        }
        self.cumulants
            .get(n - 2)
            .copied()
            .ok_or_else(|| ModelError::Invalid(format!("cumulant c_{n} not supplied")))
    }

    /// `c~_n = (2 pi)^((d (n - 2) - 2) / 2) c_n`.
    pub fn c_tilde(&self, n: usize) -> Result<f64, ModelError> {
        Ok(c_tilde_factor(self.dim, n) * self.cumulant(n)?)
    }

    /// Copy with every cumulant (and `c`) multiplied by `s`.
    pub fn scaled(&self, s: f64) -> MomentModel {
        MomentModel {
            c: self.c * s,
            cumulants: self.cumulants.iter().map(|c| c * s).collect(),
            generator: None,
            ..self.clone()
        }
    }
}

/// `(2 pi)^((d (n - 2) - 2) / 2)`.
pub fn c_tilde_factor(dim: usize, n: usize) -> f64 {
    let e = (dim as f64 * (n as f64 - 2.0) - 2.0) / 2.0;
    (2.0 * PI).powf(e)
}

/// `(-Delta + m^2)^(-order)(x)` for `order` 1 or 2 at distance `r`.
///
/// Order 1 is `(2 pi)^(-d/2) (m/r)^nu K_nu(m r)` with `nu = d/2 - 1`; order 2
/// is its `-d/d(m^2)`, `(2 pi)^(-d/2) m^(nu-1) r^(1-nu) K_(nu-1)(m r) / 2`.
pub fn euclid_kernel_radial(order: u32, r: f64, mass: f64, dim: usize) -> Result<f64, ModelError> {
    if !(r >= ORIGIN_CUTOFF) {
        return Err(ModelError::OriginSingularity(r));
    }
    if !(mass > 0.0 && mass.is_finite() && r.is_finite()) || dim == 0 {
        return Err(ModelError::Invalid(format!("kernel needs m > 0, finite r and d >= 1 (m = {mass}, r = {r}, d = {dim})")));
    }
    let nu = dim as f64 / 2.0 - 1.0;
    let pre = (2.0 * PI).powf(-(dim as f64) / 2.0);
    let z = mass * r;
    match order {
        1 => Ok(pre * (mass / r).powf(nu) * bessel_k(nu, z)),
        2 => Ok(pre * 0.5 * mass.powf(nu - 1.0) * r.powf(1.0 - nu) * bessel_k(nu - 1.0, z)),
        o => Err(ModelError::Unsupported(format!("kernel order {o}"))),
    }
}

/// Euclidean kernel at a point `x`.
pub fn euclid_kernel(order: u32, x: &[f64], model: &MomentModel) -> Result<f64, ModelError> {
    if x.len() != model.dim {
        return Err(ModelError::Invalid(format!("point has {} coordinates, expected {}", x.len(), model.dim)));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    euclid_kernel_radial(order, r, model.mass, model.dim)
}

fn check_distinct(points: &[[f64; 2]]) -> Result<(), ModelError> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
            if d < ORIGIN_CUTOFF {
                return Err(ModelError::CoincidentPoints(i, j));
            }
        }
    }
    Ok(())
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

/// Angles in `[0, 2 pi)` at which the polar radius of the Voronoi cell of
/// `centers[i]`, truncated at `r_max`, fails to be smooth.
fn cell_breakpoints(centers: &[[f64; 2]], i: usize, r_max: f64) -> Vec<f64> {
    let p = centers[i];
    let rel: Vec<[f64; 2]> = centers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, q)| [q[0] - p[0], q[1] - p[1]])
        .collect();
    let mut angles = vec![0.0];
    for (a, q) in rel.iter().enumerate() {
        let dist = (q[0] * q[0] + q[1] * q[1]).sqrt();
        let phi = q[1].atan2(q[0]);
        if dist < 2.0 * r_max {
            let half = (dist / (2.0 * r_max)).acos();
            angles.push(wrap_angle(phi + half));
            angles.push(wrap_angle(phi - half));
        }
        for q2 in &rel[a + 1..] {
            // intersection of the two bisectors: 2 q.v = |q|^2, 2 q2.v = |q2|^2
            let det = q[0] * q2[1] - q[1] * q2[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let b1 = 0.5 * (q[0] * q[0] + q[1] * q[1]);
            let b2 = 0.5 * (q2[0] * q2[0] + q2[1] * q2[1]);
            let vx = (b1 * q2[1] - b2 * q[1]) / det;
            let vy = (q[0] * b2 - q2[0] * b1) / det;
            angles.push(wrap_angle(vy.atan2(vx)));
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    angles.push(2.0 * PI);
    angles
}

fn cell_radius(centers: &[[f64; 2]], i: usize, theta: f64, r_max: f64) -> f64 {
    let p = centers[i];
    let (s, c) = theta.sin_cos();
    let mut r = r_max;
    for (j, q) in centers.iter().enumerate() {
        if j == i {
            continue;
        }
        let dx = q[0] - p[0];
        let dy = q[1] - p[1];
        let proj = dx * c + dy * s;
        if proj > 0.0 {
            r = r.min(0.5 * (dx * dx + dy * dy) / proj);
        }
    }
    r
}

/// Integral over the plane of a function whose only non-smooth points are
/// `centers`, by polar quadrature over the Voronoi cell of each center,
/// truncated at distance `r_max`.
pub fn integrate_plane<F>(centers: &[[f64; 2]], r_max: f64, f: &F, spec: &QuadSpec) -> Result<SmearValue, ModelError>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    spec.validate()?;
    if centers.is_empty() {
        return Err(ModelError::Invalid("plane integral needs at least one center".into()));
    }
    check_distinct(centers)?;
    let outer = Adaptive1d::from_spec(&QuadSpec {
        abs_tol: spec.abs_tol / centers.len() as f64,
        ..*spec
    })
    .pieces(1);
    let inner = Adaptive1d::from_spec(&QuadSpec {
        abs_tol: spec.abs_tol * 0.1 / (2.0 * PI * centers.len() as f64),
        rel_tol: spec.rel_tol * 0.1,
        ..*spec
    })
    .pieces(2);
    let cells: Vec<SmearValue> = (0..centers.len())
        .into_par_iter()
        .map(|i| {
            let p = centers[i];
            let bps = cell_breakpoints(centers, i, r_max);
            let mut total = SmearValue::zero();
            for w in bps.windows(2) {
                total = total
                    + outer.run(
                        |theta| {
                            let rad = cell_radius(centers, i, theta, r_max);
                            let (s, c) = theta.sin_cos();
                            inner.run(
                                |r| SmearValue::exact(Complex64::new(r * f([p[0] + r * c, p[1] + r * s]), 0.0)),
                                0.0,
                                rad,
                            )
                        },
                        w[0],
                        w[1],
                    );
            }
            total
        })
        .collect();
    let mut total = SmearValue::zero();
    for c in cells {
        total = total + c;
    }
    if !total.converged {
        return Err(ModelError::Quad(crate::QuadError::ToleranceNotMet(total)));
    }
    Ok(total)
}

/// Truncation radius for plane integrals of products of kernels.
pub fn plane_radius(mass: f64) -> f64 {
    40.0 / mass
}

fn as_plane_points(points: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, ModelError> {
    points
        .iter()
        .map(|p| {
            if p.len() == 2 {
                Ok([p[0], p[1]])
            } else {
                Err(ModelError::Unsupported("plane integrals need two-dimensional points".into()))
            }
        })
        .collect()
}

/// Truncated Schwinger function `S_n^T(x_1, ..., x_n)`.
///
/// `n = 2`: `(c / m^4) (-Delta + m^2)^(-2)(x_1 - x_2)`.
/// `n >= 3`: `c_n int prod_l (-Delta + m^2)^(-2)(x - x_l) dx`, for `d = 2` and
/// `n <= 4`.
pub fn schwinger_truncated(points: &[Vec<f64>], model: &MomentModel, spec: &QuadSpec) -> Result<SmearValue, ModelError> {
    let n = points.len();
    if n < 2 {
        return Err(ModelError::Invalid(format!("truncated Schwinger functions start at n = 2, got {n}")));
    }
    if points.iter().any(|p| p.len() != model.dim) {
        return Err(ModelError::Invalid(format!("points must have {} coordinates", model.dim)));
    }
    let m = model.mass;
    if n == 2 {
        let diff: Vec<f64> = points[0].iter().zip(&points[1]).map(|(a, b)| a - b).collect();
        let k = euclid_kernel(2, &diff, model)?;
        let v = model.c / m.powi(4) * k * model.w2_normalization;
        return Ok(SmearValue::exact(Complex64::new(v, 0.0)));
    }
    if model.dim != 2 || n > 4 {
        return Err(ModelError::Unsupported(format!(
            "n-point plane integral needs d = 2 and n <= 4 (got d = {}, n = {n})",
            model.dim
        )));
    }
    let cn = model.cumulant(n)?;
    let centers = as_plane_points(points)?;
    let integral = kernel_product_integral(&centers, 2, m, spec)?;
    Ok(integral.scale(Complex64::new(cn, 0.0)))
}

/// `int_{R^2} prod_l (-Delta + m^2)^(-order)(x - x_l) dx`.
pub fn kernel_product_integral(centers: &[[f64; 2]], order: u32, mass: f64, spec: &QuadSpec) -> Result<SmearValue, ModelError> {
    check_distinct(centers)?;
    let f = |x: [f64; 2]| {
        let mut v = 1.0;
        for c in centers {
            let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
            v *= if r < ORIGIN_CUTOFF {
                // integrable endpoint value of the polar integrand; the r
                // factor of the measure vanishes there
                if order == 2 {
                    1.0 / (4.0 * PI * mass * mass)
                } else {
                    0.0
                }
            } else {
                euclid_kernel_radial(order, r, mass, 2).unwrap_or(0.0)
            };
        }
        v
    };
    integrate_plane(centers, plane_radius(mass), &f, spec)
}

/// Truncated Wightman function in momentum space.
///
/// `n = 2`: `-(c/m^4) delta'^-(k_1) delta(k_1 + k_2)`.
/// `n >= 3`: `(-1)^n c~_n sum_j prod_{l<j} delta'^-(k_l) FP (k_j^2 - m^2)^(-2)
/// prod_{l>j} delta'^+(k_l) delta(sum k)`.
pub fn wightman_truncated(n: usize, model: &MomentModel) -> Result<DistExpr, ModelError> {
    let m = model.mass;
    match n {
        0 | 1 => Err(ModelError::Invalid(format!(
            "truncated Wightman functions start at n = 2, got {n}"
        ))),
        2 => {
            let coeff = -model.c / m.powi(4) * model.w2_normalization;
            Ok(two_point_dipole(coeff, m))
        }
        _ => {
            let coeff = if n % 2 == 0 { 1.0 } else { -1.0 } * model.c_tilde(n)?;
            Ok(shell_sum(
                n,
                Complex64::new(coeff, 0.0),
                ShellFactor::fp(m),
                |s| ShellFactor::delta_prime(s, m),
            ))
        }
    }
}

/// `coeff delta'^-(k_1) delta(k_1 + k_2)`.
pub fn two_point_dipole(coeff: f64, mass: f64) -> DistExpr {
    DistExpr {
        n_args: 2,
        terms: vec![Term {
            coeff: Complex64::new(coeff, 0.0),
            factors: vec![ShellFactor::delta_prime(Sign::Minus, mass), ShellFactor::smooth(mass)],
            conservation: Some(vec![1, 1]),
        }],
    }
}

/// `coeff sum_j prod_{l<j} shell^-(k_l) singular(k_j) prod_{l>j} shell^+(k_l)
/// delta(sum k)`.
pub fn shell_sum<S: Fn(Sign) -> ShellFactor>(
    n: usize,
    coeff: Complex64,
    singular: ShellFactor,
    shell: S,
) -> DistExpr {
    let terms = (0..n)
        .map(|j| {
            let factors = (0..n)
                .map(|l| {
                    if l < j {
                        shell(Sign::Minus)
                    } else if l == j {
                        singular.clone()
                    } else {
                        shell(Sign::Plus)
                    }
                })
                .collect();
            Term {
                coeff,
                factors,
                conservation: Some(vec![1; n]),
            }
        })
        .collect();
    DistExpr { n_args: n, terms }
}

/// All set partitions of `{0, .., n-1}` via restricted growth strings, in
/// lexicographic order of the strings. Blocks list their elements in
/// increasing order.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(vec![]);
        return out;
    }
    let mut a = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        let blocks = a.iter().copied().max().unwrap_or(0) + 1;
        let mut p: Vec<Vec<usize>> = vec![Vec::new(); blocks];
        for (i, &b) in a.iter().enumerate() {
            p[b].push(i);
        }
        out.push(p);
        // next restricted growth string: a[i] <= 1 + max(a[0..i])
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            if a[i] <= maxes[i - 1] {
                a[i] += 1;
                maxes[i] = maxes[i - 1].max(a[i]);
                for j in i + 1..n {
                    a[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Set partitions by inserting each element into an existing block or a new
/// one. Independent of [`set_partitions`]; used to cross-check it.
pub fn set_partitions_recursive(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            go(i + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        go(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// Bell number by the Bell triangle.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// All perfect matchings of `items` (empty for odd length), each pair in
/// increasing position order.
pub fn pair_partitions(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    if items.len() % 2 == 1 {
        return vec![];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().enumerate().filter(|(i, _)| *i + 1 != k).map(|(_, v)| *v).collect();
        for mut tail in pair_partitions(&rest) {
            let mut p = vec![(first, items[k])];
            p.append(&mut tail);
            out.push(p);
        }
    }
    out
}

/// `(n - 1)!!` for even `n`, 0 for odd `n`.
pub fn double_factorial_pairs(n: usize) -> u64 {
    if n % 2 == 1 {
        return 0;
    }
    (1..n as u64).step_by(2).product::<u64>().max(1)
}

/// Moment `<phi(f_1) ... phi(f_n)>` from truncated values: the sum over set
/// partitions of the product over blocks, with argument order preserved
/// inside each block. `truncated` receives the block's argument indices;
/// singleton blocks are handed to it as well.
pub fn assemble_moments<F, E>(n: usize, truncated: F) -> Result<SmearValue, E>
where
    F: Fn(&[usize]) -> Result<SmearValue, E> + Sync,
    E: Send,
{
    let parts = set_partitions(n);
    let values: Vec<Result<SmearValue, E>> = parts
        .par_iter()
        .map(|p| {
            let mut v = SmearValue::exact(Complex64::new(1.0, 0.0));
            for block in p {
                let b = truncated(block)?;
                if b.value == Complex64::new(0.0, 0.0) && b.err_est == 0.0 {
                    return Ok(SmearValue::zero());
                }
                v = v.times(b);
            }
            Ok(v)
        })
        .collect();
    let mut total = SmearValue::zero();
    for v in values {
        total = total + v?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        assert!((bessel_k0(1.0) - 0.42102443824070834).abs() < 1e-15);
        assert!((bessel_k1(1.0) - 0.6019072301972346).abs() < 1e-15);
        // K_{1/2}(x) = sqrt(pi / (2x)) e^{-x}
        for x in [0.1, 1.0, 7.0, 30.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x as f64).exp();
            assert!((bessel_k(0.5, x) / exact - 1.0).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn kernel_in_two_dimensions() {
        let m = MomentModel::new(1.0, 2, vec![1.0]).unwrap();
        let g1 = euclid_kernel(1, &[1.0, 0.0], &m).unwrap();
        assert!((g1 - bessel_k0(1.0) / (2.0 * PI)).abs() < 1e-15);
        let g2 = euclid_kernel(2, &[0.0, 1.0], &m).unwrap();
        assert!((g2 - bessel_k1(1.0) / (4.0 * PI)).abs() < 1e-15);
        assert!(matches!(euclid_kernel(1, &[0.0, 0.0], &m), Err(ModelError::OriginSingularity(_))));
    }

    #[test]
    fn three_dimensional_yukawa() {
        // d = 3: e^{-m r} / (4 pi r)
        let r = 0.7;
        let g = euclid_kernel_radial(1, r, 1.3, 3).unwrap();
        let exact = (-1.3 * r as f64).exp() / (4.0 * PI * r);
        assert!((g / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn partition_counts() {
        assert_eq!(set_partitions(4).len(), 15);
        assert_eq!(set_partitions(5).len(), 52);
        for n in 0..8 {
            assert_eq!(set_partitions(n).len() as u64, bell(n));
        }
        assert_eq!(pair_partitions(&[0, 1, 2, 3]).len(), 3);
        assert_eq!(pair_partitions(&[0, 1, 2]).len(), 0);
        assert_eq!(pair_partitions(&[0, 1, 2, 3, 4, 5]).len() as u64, double_factorial_pairs(6));
    }

    #[test]
    fn model_json_and_generator() {
        let m = MomentModel::from_json(r#"{"mass": 1, "dim": 2, "c": 2, "generator": {"type": "poisson", "lambda": 2, "a": 1}}"#).unwrap();
        assert_eq!(m.cumulant(3).unwrap(), 2.0);
        assert!(MomentModel::from_json(r#"{"mass": 1, "dim": 2, "c": 3, "generator": {"type": "poisson", "lambda": 2, "a": 1}}"#).is_err());
        let err = MomentModel::from_json("{\n\"mass\": 1,\n\"dim\": }").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert_eq!(m.c_tilde(2).unwrap(), 2.0 / (2.0 * PI));
    }

    #[test]
    fn wightman_structure() {
        let m = MomentModel::new(1.0, 2, vec![1.0, 1.0]).unwrap();
        let w3 = wightman_truncated(3, &m).unwrap();
        assert_eq!(w3.terms.len(), 3);
        let kinds: Vec<_> = w3.terms[1].factors.iter().map(|f| f.kind).collect();
        use crate::dist::FactorKind::*;
        assert_eq!(kinds, vec![DeltaPrime, FpPow2, DeltaPrime]);
        assert_eq!(w3.terms[1].factors[0].sign, Some(Sign::Minus));
        assert_eq!(w3.terms[1].factors[2].sign, Some(Sign::Plus));
        let w2 = wightman_truncated(2, &m).unwrap();
        assert_eq!(w2.terms.len(), 1);
        assert_eq!(w2.terms[0].coeff, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn plane_integral_of_single_kernel() {
        // int (-Delta + m^2)^{-1} = 1/m^2 and int (-Delta + m^2)^{-2} = 1/m^4
        let spec = QuadSpec::default();
        let v1 = kernel_product_integral(&[[0.3, -0.2]], 1, 1.5, &spec).unwrap();
        assert!((v1.value.re - 1.0 / 2.25).abs() < 1e-9, "{v1:?}");
        let v2 = kernel_product_integral(&[[0.3, -0.2]], 2, 1.5, &spec).unwrap();
        assert!((v2.value.re - 1.0 / 2.25f64.powi(2)).abs() < 1e-9, "{v2:?}");
    }
}
