//! Scheme evaluations assembled from the coefficient oracle and the lattice
//! alone, without touching the solver.

#![allow(dead_code)]

use hjb_core::lattice::Grid;
use hjb_core::BellmanProblem;
use nalgebra::{DMatrix, DVector};

/// Dense direct solve of a single-control scheme.
pub fn dense_solution(p: &BellmanProblem<f64>, grid: &Grid<f64>) -> Vec<f64> {
    let n = grid.n_interior();
    let h = grid.h();
    let dirs = grid.directions();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (row, &slot) in grid.interior_slots().iter().enumerate() {
        let x = grid.coords(slot);
        let coef = p.coefficients(0, &x);
        let here = grid.index(slot).to_vec();
        let couple = |offset: &[i32], w: f64, a: &mut DMatrix<f64>, rhs: &mut DVector<f64>| {
            let idx: Vec<i64> = here.iter().zip(offset).map(|(&i, &o)| i + i64::from(o)).collect();
            let nb = grid.slot_of(&idx).expect("stencil neighbours are valued");
            match grid.interior_position(nb) {
                Some(col) => a[(row, col)] += w,
                None => rhs[row] -= w * p.g(&grid.point(&idx)),
            }
            a[(row, row)] -= w;
        };
        for (k, e) in dirs.offsets().iter().enumerate() {
            let w = coef.a[k] / (h * h);
            let neg: Vec<i32> = e.iter().map(|c| -c).collect();
            couple(e, w, &mut a, &mut rhs);
            couple(&neg, w, &mut a, &mut rhs);
        }
        for k in 1..=dirs.d1() as isize {
            for signed in [k, -k] {
                let w = coef.b[dirs.slot(signed).unwrap()] / h;
                if w != 0.0 {
                    couple(&dirs.offset(signed).unwrap(), w, &mut a, &mut rhs);
                }
            }
        }
        a[(row, row)] -= coef.c;
        rhs[row] -= coef.f;
    }
    let v = a.lu().solve(&rhs).expect("M-matrix is invertible");
    v.iter().copied().collect()
}

fn shifted_slot(grid: &Grid<f64>, slot: usize, offset: &[i32]) -> usize {
    let idx: Vec<i64> = grid.index(slot).iter().zip(offset).map(|(&i, &o)| i + i64::from(o)).collect();
    grid.slot_of(&idx).expect("stencil neighbours are valued")
}

/// `H_h[v]` at each interior node, in interior order.
pub fn hamiltonian(p: &BellmanProblem<f64>, grid: &Grid<f64>, v: &[f64]) -> Vec<f64> {
    let h = grid.h();
    let dirs = grid.directions();
    grid.interior_slots()
        .iter()
        .map(|&s| {
            let x = grid.coords(s);
            (0..p.n_controls())
                .map(|control| {
                    let coef = p.coefficients(control, &x);
                    let mut total = coef.f - coef.c * v[s];
                    for (k, e) in dirs.offsets().iter().enumerate() {
                        let neg: Vec<i32> = e.iter().map(|c| -c).collect();
                        let (up, down) = (v[shifted_slot(grid, s, e)], v[shifted_slot(grid, s, &neg)]);
                        total += coef.a[k] * (up - 2.0 * v[s] + down) / (h * h);
                    }
                    for k in 1..=dirs.d1() as isize {
                        for signed in [k, -k] {
                            let b = coef.b[dirs.slot(signed).unwrap()];
                            if b != 0.0 {
                                let nb = shifted_slot(grid, s, &dirs.offset(signed).unwrap());
                                total += b * (v[nb] - v[s]) / h;
                            }
                        }
                    }
                    total
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Smallest zeroth-order coefficient over controls and interior nodes.
pub fn c_min(p: &BellmanProblem<f64>, grid: &Grid<f64>) -> f64 {
    grid.interior_slots()
        .iter()
        .flat_map(|&s| {
            let x = grid.coords(s);
            (0..p.n_controls()).map(move |control| p.coefficients(control, &x).c)
        })
        .fold(f64::INFINITY, f64::min)
}
