//! Monotone finite-difference solver for uniformly elliptic Bellman equations
//! `sup_alpha [L^alpha v + f^alpha] = 0` on bounded domains, with `v = g` outside.
//!
//! The scheme uses second differences along a fixed family of lattice
//! directions and forward differences for drift. Its discrete operator is
//! monotone whenever `h |b| <= a`, which makes the damped fixed-point map a
//! sup-norm contraction and gives a discrete comparison principle.
//!
//! Modules, in dependency order: [`lattice`] (domains and node classes),
//! [`stencil`] (direction sets, differences, matrix decomposition),
//! [`problem`] (coefficient oracles and built-in problems), [`solver`], and
//! [`study`] (convergence rates, estimate monitors, property suites).
//!
//! Everything is generic over the scalar type; `f64` aliases are provided.

// `!(x > 0)` deliberately rejects NaN; index loops mirror matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod lattice;
pub mod problem;
pub mod scalar;
pub mod solver;
pub mod stencil;
pub mod study;

pub use lattice::{build_grid, distance_to_complement, Domain, Grid, NodeClass};
pub use problem::{BellmanProblem, ProblemConfig};
pub use scalar::Scalar;
pub use solver::{solve, GridFunction, Method, SchemeCache, SolveOptions, SolveReport};
pub use stencil::DirectionSet;
pub use study::{run_convergence_study, StudyReport};

pub type Domain64 = Domain<f64>;
pub type Grid64 = Grid<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type BellmanProblem64 = BellmanProblem<f64>;
pub type SchemeCache64 = SchemeCache<f64>;
pub type SolveOptions64 = SolveOptions<f64>;
