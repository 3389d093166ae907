use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{estimate_data_bound, BellmanProblem, CoefficientOracle, Coefficients, ProblemError};
use crate::lattice::{field, Domain, Field};
use crate::scalar::Scalar;
use crate::stencil::{decompose_matrix, DirectionSet, SymMatrix};

const BOUND_SAMPLES: usize = 2000;
const BOUND_SEED: u64 = 0x5eed;
/// Safety factor applied to the sampled data bound.
const BOUND_INFLATION: f64 = 1.5;

/// One control with constant stencil weights and a spatially varying source.
#[derive(Clone)]
pub struct TableEntry<T> {
    pub label: String,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub c: T,
    pub f: Field<T>,
}

/// Oracle over a finite list of [`TableEntry`] controls.
#[derive(Clone)]
pub struct ControlTable<T> {
    entries: Vec<TableEntry<T>>,
}

impl<T: Scalar> ControlTable<T> {
    pub fn new(entries: Vec<TableEntry<T>>) -> Self {
        ControlTable { entries }
    }

    pub fn entries(&self) -> &[TableEntry<T>] {
        &self.entries
    }

    /// Smallest positive diffusion weight and smallest `c` over all controls.
    fn ellipticity(&self) -> T {
        let mut m = T::infinity();
        for e in &self.entries {
            for &a in &e.a {
                if a > T::zero() {
                    m = m.min(a);
                }
            }
            if e.c > T::zero() {
                m = m.min(e.c);
            }
        }
        if m.is_finite() {
            m
        } else {
            T::zero()
        }
    }
}

impl<T: Scalar> CoefficientOracle<T> for ControlTable<T> {
    fn n_controls(&self) -> usize {
        self.entries.len()
    }

    fn evaluate(&self, control: usize, x: &[T]) -> Coefficients<T> {
        let e = &self.entries[control];
        Coefficients { a: e.a.clone(), b: e.b.clone(), c: e.c, f: (e.f)(x) }
    }

    fn uniform_stencil(&self) -> bool {
        true
    }

    fn label(&self, control: usize) -> String {
        self.entries[control].label.clone()
    }
}

fn finish<T: Scalar>(
    name: &str,
    directions: DirectionSet,
    domain: Domain<T>,
    table: ControlTable<T>,
    g: Field<T>,
) -> BellmanProblem<T> {
    let delta = table.ellipticity();
    let provisional = BellmanProblem::new(name, directions, domain, Arc::new(table), g, delta, T::one());
    let k = estimate_data_bound(&provisional, BOUND_SAMPLES, BOUND_SEED);
    let mut p = provisional;
    p.big_k = (k * T::lit(BOUND_INFLATION)).max(T::lit(1e-12));
    p
}

/// Closed-form solutions for manufactured problems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Manufactured {
    Zero,
    /// `1 - |x|^2`.
    Paraboloid,
    /// `prod_i sin(freq x_i)`.
    SineProduct {
        freq: f64,
    },
}

impl Default for Manufactured {
    fn default() -> Self {
        Manufactured::SineProduct { freq: PI }
    }
}

impl Manufactured {
    pub fn value<T: Scalar>(&self, x: &[T]) -> T {
        match *self {
            Manufactured::Zero => T::zero(),
            Manufactured::Paraboloid => T::one() - x.iter().map(|&v| v * v).sum::<T>(),
            Manufactured::SineProduct { freq } => {
                let w = T::lit(freq);
                x.iter().fold(T::one(), |p, &v| p * (w * v).sin())
            }
        }
    }

    /// Row-major Hessian.
    pub fn hessian<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let d = x.len();
        match *self {
            Manufactured::Zero => vec![T::zero(); d * d],
            Manufactured::Paraboloid => {
                let mut h = vec![T::zero(); d * d];
                for i in 0..d {
                    h[i * d + i] = T::lit(-2.0);
                }
                h
            }
            Manufactured::SineProduct { freq } => crate::stencil::SineProduct { dim: d, freq: T::lit(freq) }.hessian(x),
        }
    }
}

/// Single-control linear problem whose continuum solution is `exact`.
///
/// The weights come from decomposing `a` over the canonical direction set;
/// the source is `f = c0 v - sum_k a_k D^2_{e_k} v`, and `g = v`.
pub fn builtin_linear_manufactured<T: Scalar>(
    domain: Domain<T>,
    exact: Manufactured,
    a: &SymMatrix<T>,
    c0: T,
) -> Result<BellmanProblem<T>, ProblemError> {
    let dim = domain.dim();
    if !(c0 > T::zero()) {
        return Err(ProblemError::InvalidParameter(format!("c0 must be positive, got {c0}")));
    }
    let directions = DirectionSet::canonical(dim)?;
    let lambda = decompose_matrix(a, &directions, T::zero())?.lambda;
    let dirs: Vec<Vec<T>> =
        directions.offsets().iter().map(|e| e.iter().map(|&c| T::from_int(i64::from(c))).collect()).collect();
    let weights = lambda.clone();
    let f = field(move |x: &[T]| {
        let hess = exact.hessian(x);
        let d = x.len();
        let mut diffusion = T::zero();
        for (l, e) in weights.iter().zip(&dirs) {
            let mut q = T::zero();
            for i in 0..d {
                for j in 0..d {
                    q += e[i] * hess[i * d + j] * e[j];
                }
            }
            diffusion += *l * q;
        }
        c0 * exact.value(x) - diffusion
    });
    let table = ControlTable::new(vec![TableEntry {
        label: "linear".into(),
        a: lambda,
        b: vec![T::zero(); directions.n_signed()],
        c: c0,
        f,
    }]);
    let exact_field = field(move |x: &[T]| exact.value(x));
    Ok(finish("linear-manufactured-disk", directions, domain, table, exact_field.clone()).with_exact(exact_field))
}

/// Two controls with diffusions `I` and `[[2,1],[1,2]]`, `c = 1`, `g = 0`, and
/// sources `1 + x1`, `1 - x1`.
pub fn builtin_two_control<T: Scalar>(domain: Domain<T>) -> Result<BellmanProblem<T>, ProblemError> {
    two_control_with(domain, field(|x: &[T]| T::one() + x[0]), field(|x: &[T]| T::one() - x[0]))
}

/// [`builtin_two_control`] with custom sources.
pub fn two_control_with<T: Scalar>(
    domain: Domain<T>,
    f1: Field<T>,
    f2: Field<T>,
) -> Result<BellmanProblem<T>, ProblemError> {
    if domain.dim() != 2 {
        return Err(ProblemError::Dimension { problem: "two-control".into(), expected: 2, got: domain.dim() });
    }
    let directions = DirectionSet::canonical(2)?;
    let (one, two) = (T::one(), T::lit(2.0));
    let a1 = SymMatrix::identity(2);
    let a2 = SymMatrix::from_rows(&[vec![two, one], vec![one, two]])?;
    let zeros = vec![T::zero(); directions.n_signed()];
    let entries = vec![
        TableEntry {
            label: "identity".into(),
            a: decompose_matrix(&a1, &directions, T::zero())?.lambda,
            b: zeros.clone(),
            c: one,
            f: f1,
        },
        TableEntry {
            label: "coupled".into(),
            a: decompose_matrix(&a2, &directions, T::zero())?.lambda,
            b: zeros,
            c: one,
            f: f2,
        },
    ];
    Ok(finish("two-control", directions, domain, ControlTable::new(entries), field(|_: &[T]| T::zero())))
}

/// A sampled trace-one positive semidefinite matrix
/// `R(theta) diag(s, 1 - s) R(theta)^T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MongeAmpereControl {
    pub theta: f64,
    pub s: f64,
}

impl MongeAmpereControl {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (sn, cs) = self.theta.sin_cos();
        let (p, q) = (self.s, 1.0 - self.s);
        [[p * cs * cs + q * sn * sn, (p - q) * sn * cs], [(p - q) * sn * cs, p * sn * sn + q * cs * cs]]
    }

    /// `det(a)^{1/2}`.
    pub fn det_root(&self) -> f64 {
        (self.s * (1.0 - self.s)).max(0.0).sqrt()
    }
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut out, mut scale) = (0.0, inv);
    while i > 0 {
        out += (i % base) as f64 * scale;
        i /= base;
        scale *= inv;
    }
    out
}

/// The first `n` points of the two-dimensional Halton sequence mapped to
/// `(theta, s) in [0, pi) x [0, 1)`. Prefixes are nested, so increasing `n`
/// only enlarges the control set.
pub fn monge_ampere_controls(n: usize) -> Vec<MongeAmpereControl> {
    (0..n).map(|i| MongeAmpereControl { s: radical_inverse(i, 2), theta: PI * radical_inverse(i, 3) }).collect()
}

/// Regularized Monge–Ampère equation
/// `sup_a [(a_ij + gamma^2 delta_ij) D_ij v + 2 det(a)^{1/2} f] - c0 v = 0`
/// over `n_controls` sampled trace-one matrices, with `g = 0`.
pub fn builtin_monge_ampere<T: Scalar>(
    domain: Domain<T>,
    gamma: T,
    f_field: Field<T>,
    n_controls: usize,
    c0: T,
    allow_outside_theory: bool,
) -> Result<BellmanProblem<T>, ProblemError> {
    if domain.dim() != 2 {
        return Err(ProblemError::Dimension { problem: "monge-ampere".into(), expected: 2, got: domain.dim() });
    }
    if !(gamma > T::zero()) {
        return Err(ProblemError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if n_controls < 4 {
        return Err(ProblemError::InvalidParameter(format!("n_controls must be at least 4, got {n_controls}")));
    }
    if c0 < T::zero() {
        return Err(ProblemError::InvalidParameter(format!("c0 must be nonnegative, got {c0}")));
    }
    if c0.is_zero() && !allow_outside_theory {
        return Err(ProblemError::OutsideTheory);
    }
    let directions = DirectionSet::canonical(2)?;
    let g2 = gamma * gamma;
    let mut entries = Vec::with_capacity(n_controls);
    for ctl in monge_ampere_controls(n_controls) {
        let m = ctl.matrix();
        let rows: Vec<Vec<T>> = m.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
        let a = SymMatrix::from_rows(&rows)?.shifted(g2);
        let lambda = decompose_matrix(&a, &directions, T::zero())?.lambda;
        let weight = T::lit(2.0 * ctl.det_root());
        let src = f_field.clone();
        entries.push(TableEntry {
            label: format!("theta={:.6} s={:.6}", ctl.theta, ctl.s),
            a: lambda,
            b: vec![T::zero(); directions.n_signed()],
            c: c0,
            f: field(move |x: &[T]| weight * src(x)),
        });
    }
    let p = finish("monge-ampere", directions, domain, ControlTable::new(entries), field(|_: &[T]| T::zero()));
    Ok(p.with_outside_theory(c0.is_zero()))
}
