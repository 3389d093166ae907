//! Single-control solves against a dense direct solve of the same linear system.

use std::sync::Arc;

use hjb_core::lattice::{field, Domain};
use hjb_core::problem::{ControlTable, DomainConfig, Manufactured, ProblemConfig, TableEntry};
use hjb_core::solver::{solve, Method, SolveOptions};
use hjb_core::{BellmanProblem, DirectionSet, GridFunction};

mod common;
use common::dense_solution;

const ORACLE_TOL: f64 = 1e-8;

fn check_against_oracle(p: &BellmanProblem<f64>, h: f64) {
    let grid = Arc::new(p.grid(h).unwrap());
    let n = grid.n_interior();
    assert!(n > 0 && n <= 50, "{}: {n} interior nodes at h = {h}", p.name());
    let direct = dense_solution(p, &grid);
    for method in Method::ALL {
        let opts = SolveOptions::new(method, 1e-12);
        let (v, report) = solve(p, grid.clone(), &opts).unwrap();
        assert!(report.converged);
        let gap = grid.interior_slots().iter().zip(&direct).fold(0.0f64, |m, (&s, d)| m.max((v.value(s) - d).abs()));
        assert!(gap <= ORACLE_TOL, "{} {method}: sup gap {gap:e}", p.name());
    }
}

#[test]
fn manufactured_disk_matches_dense_solve() {
    let p = ProblemConfig::named("linear-manufactured-disk").build::<f64>().unwrap();
    check_against_oracle(&p, 0.25);
}

#[test]
fn manufactured_variants_match_dense_solve() {
    let mut ellipse = ProblemConfig::named("linear-manufactured-disk");
    ellipse.domain = DomainConfig::Ellipse { a: 1.0, b: 0.6 };
    ellipse.solution = Some(Manufactured::Paraboloid);
    ellipse.a_matrix = Some(vec![vec![2.0, -0.5], vec![-0.5, 1.0]]);
    ellipse.c0 = Some(0.5);
    check_against_oracle(&ellipse.build().unwrap(), 0.2);

    let mut ball = ProblemConfig::named("linear-manufactured-disk");
    ball.domain = DomainConfig::Ball { dim: 3, radius: 1.0 };
    ball.a_matrix = Some(vec![vec![1.5, 0.2, 0.1], vec![0.2, 1.0, -0.3], vec![0.1, -0.3, 2.0]]);
    check_against_oracle(&ball.build().unwrap(), 0.45);
}

#[test]
fn drift_terms_match_dense_solve() {
    let dirs = DirectionSet::canonical(2).unwrap();
    let mut b = vec![0.0; dirs.n_signed()];
    b[dirs.slot(1).unwrap()] = 0.7;
    b[dirs.slot(-2).unwrap()] = 0.3;
    b[dirs.slot(3).unwrap()] = 0.2;
    let table = ControlTable::new(vec![TableEntry {
        label: "drift".into(),
        a: vec![1.0, 0.8, 0.25, 0.1],
        b,
        c: 0.4,
        f: field(|x: &[f64]| 1.0 + x[0] * x[1]),
    }]);
    let p = BellmanProblem::new(
        "drift",
        dirs,
        Domain::disk(1.0),
        Arc::new(table),
        field(|x: &[f64]| x[0] - 0.5 * x[1]),
        0.1,
        10.0,
    );
    check_against_oracle(&p, 0.25);
}

#[test]
fn dense_solve_is_exact_on_quadratics() {
    // Second differences are exact on quadratics, so the discrete solution is
    // the closed form itself.
    let mut cfg = ProblemConfig::named("linear-manufactured-disk");
    cfg.solution = Some(Manufactured::Paraboloid);
    let p = cfg.build::<f64>().unwrap();
    let grid = Arc::new(p.grid(0.25).unwrap());
    let exact = GridFunction::from_fn(grid.clone(), |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
    let direct = dense_solution(&p, &grid);
    for (&s, d) in grid.interior_slots().iter().zip(&direct) {
        assert!((exact.value(s) - d).abs() < 1e-12);
    }
}
