//! Bellman problems: a finite control set, a coefficient oracle, boundary
//! data and a domain.
//!
//! Coefficients follow the unsigned convention of the stencil module: the
//! diffusion weight `a_k` is stored once per unsigned direction and multiplies
//! the symmetric second difference `Delta_{h,k}`, while the drift `b` has one
//! entry per signed direction (slot layout) and multiplies the forward
//! difference `delta_{h,k}`. The discrete operator at an interior node is
//!
//! ```text
//! H_h[v](x) = max_alpha [ sum_k a_k Delta_{h,k} v + sum_{±k} b_k delta_{h,k} v - c v + f ]
//! ```

mod builtin;
mod catalogue;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{build_grid, Domain, Field, Grid};
use crate::scalar::Scalar;
use crate::stencil::{DirectionSet, StencilError};

pub use builtin::{
    builtin_linear_manufactured, builtin_monge_ampere, builtin_two_control, monge_ampere_controls, two_control_with,
    ControlTable, Manufactured, MongeAmpereControl, TableEntry,
};
pub use catalogue::{list_problems, CatalogueEntry, DomainConfig, ParamSchema, ProblemConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem `{name}`; registered problems: {}", known.join(", "))]
    UnknownProblem { name: String, known: Vec<String> },
    #[error("parameter `{param}` is not used by problem `{problem}`")]
    UnusedParameter { problem: String, param: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("c0 = 0 lies outside the uniformly elliptic theory; set allow_outside_theory to accept it")]
    OutsideTheory,
    #[error("problem `{problem}` requires dimension {expected}, domain has {got}")]
    Dimension { problem: String, expected: usize, got: usize },
    #[error(transparent)]
    Decomposition(#[from] StencilError),
}

/// Coefficients of one control at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients<T> {
    /// One diffusion weight per unsigned direction.
    pub a: Vec<T>,
    /// One drift weight per signed direction, slot layout.
    pub b: Vec<T>,
    pub c: T,
    pub f: T,
}

/// Pure, reentrant map `(control, x) -> coefficients`.
pub trait CoefficientOracle<T: Scalar>: Send + Sync {
    fn n_controls(&self) -> usize;

    fn evaluate(&self, control: usize, x: &[T]) -> Coefficients<T>;

    /// `true` when `a` and `b` do not depend on `x`.
    fn uniform_stencil(&self) -> bool {
        false
    }

    fn label(&self, control: usize) -> String {
        format!("control-{control}")
    }
}

/// A fully specified Bellman problem.
#[derive(Clone)]
pub struct BellmanProblem<T> {
    name: String,
    directions: DirectionSet,
    domain: Domain<T>,
    oracle: Arc<dyn CoefficientOracle<T>>,
    g: Field<T>,
    delta: T,
    big_k: T,
    exact: Option<Field<T>>,
    outside_theory: bool,
}

impl<T: Scalar> fmt::Debug for BellmanProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BellmanProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("controls", &self.oracle.n_controls())
            .field("delta", &self.delta)
            .field("big_k", &self.big_k)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl<T: Scalar> BellmanProblem<T> {
    pub fn new(
        name: impl Into<String>,
        directions: DirectionSet,
        domain: Domain<T>,
        oracle: Arc<dyn CoefficientOracle<T>>,
        g: Field<T>,
        delta: T,
        big_k: T,
    ) -> Self {
        BellmanProblem {
            name: name.into(),
            directions,
            domain,
            oracle,
            g,
            delta,
            big_k,
            exact: None,
            outside_theory: false,
        }
    }

    /// Registers the continuum solution (manufactured problems).
    pub fn with_exact(mut self, exact: Field<T>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn without_exact(mut self) -> Self {
        self.exact = None;
        self
    }

    pub fn with_outside_theory(mut self, flag: bool) -> Self {
        self.outside_theory = flag;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.directions
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn oracle(&self) -> &dyn CoefficientOracle<T> {
        self.oracle.as_ref()
    }

    pub fn n_controls(&self) -> usize {
        self.oracle.n_controls()
    }

    pub fn coefficients(&self, control: usize, x: &[T]) -> Coefficients<T> {
        self.oracle.evaluate(control, x)
    }

    pub fn g(&self, x: &[T]) -> T {
        (self.g)(x)
    }

    pub fn g_field(&self) -> &Field<T> {
        &self.g
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn big_k(&self) -> T {
        self.big_k
    }

    pub fn exact(&self) -> Option<&Field<T>> {
        self.exact.as_ref()
    }

    pub fn outside_theory(&self) -> bool {
        self.outside_theory
    }

    /// Builds the lattice for this problem's domain and directions.
    pub fn grid(&self, h: T) -> Result<Grid<T>, crate::lattice::LatticeError> {
        build_grid(&self.domain, h, &self.directions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Coefficient vectors of the wrong length.
    Malformed,
    NegativeDiffusion,
    /// `0 < a_k < delta`.
    BelowEllipticity,
    NegativeZerothOrder,
    /// `h |b_k| > a_k`.
    DriftDominates,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub control: usize,
    pub point: Vec<f64>,
    pub direction: Option<isize>,
    pub value: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub h: f64,
    pub passed: bool,
    /// Number of `(control, node)` pairs inspected.
    pub checked: usize,
    pub violation_count: usize,
    /// The first violations found (at most [`MAX_RECORDED_VIOLATIONS`]).
    pub violations: Vec<Violation>,
    /// Largest step for which every drift term is dominated; `None` if unbounded.
    pub max_admissible_h: Option<f64>,
    /// `delta / K`, the window of the convergence theory.
    pub theory_h_max: f64,
    pub grid_error: Option<String>,
}

pub const MAX_RECORDED_VIOLATIONS: usize = 64;

/// Checks ellipticity, sign and drift-domination conditions at every interior
/// node of the grid at step `h`, for every control.
pub fn validate_problem<T: Scalar>(p: &BellmanProblem<T>, h: T) -> ValidationReport {
    match p.grid(h) {
        Ok(grid) => validate_on_grid(p, &grid),
        Err(e) => ValidationReport {
            h: h.as_f64(),
            passed: false,
            checked: 0,
            violation_count: 0,
            violations: Vec::new(),
            max_admissible_h: None,
            theory_h_max: (p.delta / p.big_k).as_f64(),
            grid_error: Some(e.to_string()),
        },
    }
}

/// [`validate_problem`] on an existing grid.
pub fn validate_on_grid<T: Scalar>(p: &BellmanProblem<T>, grid: &Grid<T>) -> ValidationReport {
    let h = grid.h();
    let d1 = p.directions.d1();
    let n_signed = p.directions.n_signed();
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut max_h: Option<T> = None;
    let mut checked = 0usize;
    let mut record = |v: Violation| {
        count += 1;
        if violations.len() < MAX_RECORDED_VIOLATIONS {
            violations.push(v);
        }
    };
    let slack = T::one() - T::lit(1e-12);
    for &s in grid.interior_slots() {
        let x = grid.coords(s);
        let point: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        for alpha in 0..p.n_controls() {
            checked += 1;
            let co = p.coefficients(alpha, &x);
            let mk = |kind, direction, value: T, limit: T| Violation {
                kind,
                control: alpha,
                point: point.clone(),
                direction,
                value: value.as_f64(),
                limit: limit.as_f64(),
            };
            if co.a.len() != d1 || co.b.len() != n_signed {
                record(mk(ViolationKind::Malformed, None, T::from_int(co.a.len() as i64), T::from_int(d1 as i64)));
                continue;
            }
            for (k, &a) in co.a.iter().enumerate() {
                let dir = Some(k as isize + 1);
                if a < T::zero() {
                    record(mk(ViolationKind::NegativeDiffusion, dir, a, T::zero()));
                } else if a > T::zero() && a < p.delta * slack {
                    record(mk(ViolationKind::BelowEllipticity, dir, a, p.delta));
                }
                for (sign, slot) in [(1isize, 2 * k), (-1, 2 * k + 1)] {
                    let b = co.b[slot].abs();
                    if b.is_zero() {
                        continue;
                    }
                    let bound = a.max(T::zero()) / b;
                    max_h = Some(max_h.map_or(bound, |m: T| m.min(bound)));
                    if h * b > a * (T::one() + T::lit(1e-12)) {
                        record(mk(ViolationKind::DriftDominates, Some(sign * (k as isize + 1)), h * b, a));
                    }
                }
            }
            if co.c < T::zero() {
                record(mk(ViolationKind::NegativeZerothOrder, None, co.c, T::zero()));
            }
        }
    }
    ValidationReport {
        h: h.as_f64(),
        passed: count == 0,
        checked,
        violation_count: count,
        violations,
        max_admissible_h: max_h.map(|v| v.as_f64()),
        theory_h_max: (p.delta / p.big_k).as_f64(),
        grid_error: None,
    }
}

/// Sampled estimate of the data bound: the largest value of `|phi|` and of the
/// finite-difference Lipschitz quotient of `phi` over random nearby point pairs
/// in the domain, for `phi` ranging over `a_k, b_k, c, f` (all controls) and `g`.
pub fn estimate_data_bound<T: Scalar>(p: &BellmanProblem<T>, samples: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bbox = p.domain.bounding_box().to_vec();
    let side = bbox.iter().fold(0.0f64, |m, &(lo, hi)| m.max((hi - lo).as_f64()));
    let step = 1e-4 * side;
    let mut worst = T::zero();
    let mut taken = 0usize;
    let mut attempts = 0usize;
    while taken < samples && attempts < samples * 50 {
        attempts += 1;
        let x: Vec<T> = bbox.iter().map(|&(lo, hi)| T::lit(rng.random_range(lo.as_f64()..hi.as_f64()))).collect();
        if !p.domain.contains(&x) {
            continue;
        }
        let dir: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
        let y: Vec<T> = x.iter().zip(&dir).map(|(&xi, d)| xi + T::lit(step * d / len)).collect();
        let dist = T::lit(step);
        taken += 1;
        let mut consider = |u: T, w: T| {
            worst = worst.max(u.abs()).max((u - w).abs() / dist);
        };
        consider(p.g(&x), p.g(&y));
        for alpha in 0..p.n_controls() {
            let (cx, cy) = (p.coefficients(alpha, &x), p.coefficients(alpha, &y));
            for (u, w) in cx.a.iter().zip(&cy.a).chain(cx.b.iter().zip(&cy.b)) {
                consider(*u, *w);
            }
            consider(cx.c, cy.c);
            consider(cx.f, cy.f);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::field;

    struct Constant {
        a: f64,
        b: f64,
        c: f64,
    }

    impl CoefficientOracle<f64> for Constant {
        fn n_controls(&self) -> usize {
            1
        }

        fn evaluate(&self, _control: usize, _x: &[f64]) -> Coefficients<f64> {
            Coefficients { a: vec![self.a; 2], b: vec![self.b; 4], c: self.c, f: 0.0 }
        }
    }

    fn constant(a: f64, b: f64, c: f64) -> BellmanProblem<f64> {
        BellmanProblem::new(
            "constant",
            DirectionSet::axes(2),
            Domain::disk(1.0),
            Arc::new(Constant { a, b, c }),
            field(|_: &[f64]| 0.0),
            1.0,
            10.0,
        )
    }

    #[test]
    fn benign_problem_passes() {
        let r = validate_problem(&constant(1.0, 0.0, 1.0), 0.25);
        assert!(r.passed, "{r:?}");
        assert!(r.checked > 0);
        assert_eq!(r.max_admissible_h, None);
        assert_eq!(r.theory_h_max, 0.1);
    }

    #[test]
    fn strong_drift_fails_with_witness() {
        let r = validate_problem(&constant(1.0, 10.0, 1.0), 0.5);
        assert!(!r.passed);
        let w = &r.violations[0];
        assert_eq!(w.kind, ViolationKind::DriftDominates);
        assert_eq!(w.value, 5.0);
        assert_eq!(w.limit, 1.0);
        assert_eq!(w.control, 0);
        assert_eq!(r.max_admissible_h, Some(0.1));
        // every interior node fails for every signed direction
        assert_eq!(r.violation_count, r.checked * 4);
    }

    #[test]
    fn sign_conditions() {
        let r = validate_problem(&constant(-1.0, 0.0, -0.5), 0.25);
        let kinds: Vec<ViolationKind> = r.violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::NegativeDiffusion));
        assert!(kinds.contains(&ViolationKind::NegativeZerothOrder));
        let r = validate_problem(&constant(0.5, 0.0, 1.0), 0.25);
        assert_eq!(r.violations[0].kind, ViolationKind::BelowEllipticity);
    }

    #[test]
    fn grid_failure_is_reported_not_raised() {
        let r = validate_problem(&constant(1.0, 0.0, 1.0), 5.0);
        assert!(!r.passed);
        assert!(r.grid_error.is_some());
    }

    #[test]
    fn data_bound_of_constants() {
        let k = estimate_data_bound(&constant(1.0, 0.5, 2.0), 100, 3);
        assert_eq!(k, 2.0);
    }
}
