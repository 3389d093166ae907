use std::sync::Arc;

use hjb_core::lattice::{build_grid, distance_to_complement, Domain, NodeClass};
use hjb_core::problem::{monge_ampere_controls, DomainConfig, Manufactured, ProblemConfig};
use hjb_core::solver::{compute_damping, jacobi_step, residual, solve, SolveOptions};
use hjb_core::stencil::{forward_difference, second_difference};
use hjb_core::{DirectionSet, Grid, GridFunction, SchemeCache};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Random interior values, band values from `band`.
fn random_function(grid: &Arc<Grid<f64>>, rng: &mut ChaCha8Rng, band: &dyn Fn(&[f64]) -> f64) -> GridFunction<f64> {
    let values = (0..grid.n_valued())
        .map(|s| match grid.class(s) {
            NodeClass::Interior => rng.random_range(-2.0..2.0),
            _ => band(&grid.coords(s)),
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

fn builtin(name: &str) -> hjb_core::BellmanProblem<f64> {
    ProblemConfig::named(name).build().unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn coarse_interior_nodes_stay_interior_on_the_refined_lattice(
        n in 3usize..12,
        a in 0.6f64..1.4,
        b in 0.6f64..1.4,
    ) {
        let domain = Domain::ellipse(a, b);
        let dirs = DirectionSet::canonical(2).unwrap();
        let h = 1.0 / n as f64;
        let coarse = build_grid(&domain, h, &dirs).unwrap();
        let fine = build_grid(&domain, h / 2.0, &dirs).unwrap();
        for &s in coarse.interior_slots() {
            let idx: Vec<i64> = coarse.index(s).iter().map(|i| 2 * i).collect();
            prop_assert_eq!(fine.class_at(&idx), NodeClass::Interior);
        }
        prop_assert!(fine.n_interior() > coarse.n_interior());
    }

    #[test]
    fn distance_to_complement_is_one_lipschitz(
        x in prop::array::uniform2(-1.5f64..1.5),
        y in prop::array::uniform2(-1.5f64..1.5),
        r in 0.5f64..1.5,
    ) {
        let disk = Domain::disk(r);
        let ellipse = Domain::ellipse(r, 0.7 * r);
        let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        for d in [&disk, &ellipse] {
            let gap = (distance_to_complement(d, &x) - distance_to_complement(d, &y)).abs();
            prop_assert!(gap <= dist + 1e-9, "{} > {}", gap, dist);
        }
    }

    #[test]
    fn difference_quotients_are_linear_and_symmetric(
        seed in any::<u64>(),
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
    ) {
        let p = builtin("two-control");
        let grid = Arc::new(p.grid(0.2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_function(&grid, &mut rng, &|x| x[0]);
        let w = random_function(&grid, &mut rng, &|x| x[1] * x[1]);
        let combo: Vec<f64> = u.values().iter().zip(w.values()).map(|(a, b)| alpha * a + beta * b).collect();
        let combo = GridFunction::new(grid.clone(), combo);
        let h = grid.h();
        for &s in grid.interior_slots() {
            let node = grid.index(s);
            for k in 1..=grid.directions().d1() as isize {
                let lhs = second_difference(&combo, node, k).unwrap();
                let rhs = alpha * second_difference(&u, node, k).unwrap() + beta * second_difference(&w, node, k).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
                let sym = second_difference(&u, node, -k).unwrap();
                let plus = second_difference(&u, node, k).unwrap();
                prop_assert!((plus - sym).abs() <= 1e-12 * (1.0 + sym.abs()));
                // The second difference is the forward difference of the backward one.
                let fwd = forward_difference(&u, node, k).unwrap();
                let bwd = forward_difference(&u, node, -k).unwrap();
                prop_assert!(((fwd + bwd) / h - sym).abs() <= 1e-9 * (1.0 + sym.abs()));
            }
        }
    }

    #[test]
    fn jacobi_step_is_monotone_and_contracts(seed in any::<u64>(), which in 0usize..3) {
        let name = ["linear-manufactured-disk", "two-control", "monge-ampere"][which];
        let p = builtin(name);
        let grid = Arc::new(p.grid(0.1).unwrap());
        let cache = SchemeCache::build(&p, grid.clone()).unwrap();
        let damping = compute_damping(&cache);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = p.g_field().clone();
        let v = random_function(&grid, &mut rng, &|x| g(x));
        let bumped: Vec<f64> = (0..grid.n_valued())
            .map(|s| match grid.class(s) {
                NodeClass::Interior => v.value(s) + rng.random_range(0.0..0.5),
                _ => v.value(s),
            })
            .collect();
        let w = GridFunction::new(grid.clone(), bumped);
        let (tv, _) = jacobi_step(&cache, &v, &damping);
        let (tw, _) = jacobi_step(&cache, &w, &damping);
        for s in 0..grid.n_valued() {
            prop_assert!(tv.value(s) <= tw.value(s) + 1e-12, "{} at slot {}", name, s);
        }
        let before = sup(v.values(), w.values());
        let after = sup(tv.values(), tw.values());
        prop_assert!(after <= damping.contraction * before + 1e-12, "{}: {} > {} * {}", name, after, damping.contraction, before);
    }

    #[test]
    fn operator_vanishes_on_quadratic_manufactured_solutions(
        a11 in 1.0f64..3.0,
        a22 in 1.0f64..3.0,
        a12 in -0.9f64..0.9,
        c0 in 0.1f64..4.0,
        h in prop::sample::select(vec![0.2, 0.1, 0.05]),
    ) {
        let mut cfg = ProblemConfig::named("linear-manufactured-disk");
        cfg.solution = Some(Manufactured::Paraboloid);
        cfg.a_matrix = Some(vec![vec![a11, a12], vec![a12, a22]]);
        cfg.c0 = Some(c0);
        let p = cfg.build::<f64>().unwrap();
        let grid = Arc::new(p.grid(h).unwrap());
        let cache = SchemeCache::build(&p, grid.clone()).unwrap();
        let exact = GridFunction::from_fn(grid, |x| 1.0 - x[0] * x[0] - x[1] * x[1]);
        prop_assert!(residual(&cache, &exact) <= 1e-10);
    }

    #[test]
    fn manufactured_source_matches_symbolic_differentiation(
        a11 in 1.0f64..3.0,
        a22 in 1.0f64..3.0,
        a12 in -0.9f64..0.9,
        c0 in 0.1f64..4.0,
        x in prop::array::uniform2(-0.9f64..0.9),
    ) {
        let mut cfg = ProblemConfig::named("linear-manufactured-disk");
        cfg.a_matrix = Some(vec![vec![a11, a12], vec![a12, a22]]);
        cfg.c0 = Some(c0);
        let p = cfg.build::<f64>().unwrap();
        // u = sin(pi x) sin(pi y): f = c0 u - tr(a D^2 u).
        let w = std::f64::consts::PI;
        let (s1, c1, s2, c2) = ((w * x[0]).sin(), (w * x[0]).cos(), (w * x[1]).sin(), (w * x[1]).cos());
        let u = s1 * s2;
        let trace = -w * w * u * (a11 + a22) + 2.0 * a12 * w * w * c1 * c2;
        let expected = c0 * u - trace;
        let got = p.coefficients(0, &x).f;
        prop_assert!((got - expected).abs() <= 1e-10 * (1.0 + expected.abs()), "{} vs {}", got, expected);
    }
}

#[test]
fn monge_ampere_controls_are_nested() {
    let small = monge_ampere_controls(8);
    let large = monge_ampere_controls(32);
    assert_eq!(&large[..8], &small[..]);
}

#[test]
fn refining_the_monge_ampere_control_set_raises_the_solution() {
    let tol = 1e-10;
    let opts = SolveOptions { tol, ..SolveOptions::default() };
    let mut previous: Option<GridFunction<f64>> = None;
    for n in [4, 8, 16, 32] {
        let mut cfg = ProblemConfig::named("monge-ampere");
        cfg.n_controls = Some(n);
        let p = cfg.build::<f64>().unwrap();
        let grid = Arc::new(p.grid(0.1).unwrap());
        let (v, _) = solve(&p, grid, &opts).unwrap();
        if let Some(prev) = &previous {
            for s in 0..v.values().len() {
                assert!(prev.value(s) <= v.value(s) + 10.0 * tol, "n = {n}, slot {s}");
            }
        }
        previous = Some(v);
    }
}

#[test]
fn ellipse_configs_build_and_solve() {
    let mut cfg = ProblemConfig::named("two-control");
    cfg.domain = DomainConfig::Ellipse { a: 1.2, b: 0.8 };
    let p = cfg.build::<f64>().unwrap();
    let (_, report) = solve(&p, Arc::new(p.grid(0.1).unwrap()), &SolveOptions::default()).unwrap();
    assert!(report.converged);
}
