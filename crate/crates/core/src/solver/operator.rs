use rayon::prelude::*;
use serde::Serialize;

use super::{SchemeCache, SolveError};
use crate::scalar::Scalar;
use crate::solver::GridFunction;

/// Interior sizes below this run sequentially.
const PARALLEL_THRESHOLD: usize = 4096;

/// `max_alpha L^alpha v` at interior position `pos`, with the maximizing
/// control (lowest index on ties).
#[inline]
pub(crate) fn node_value<T: Scalar>(cache: &SchemeCache<T>, v: &[T], pos: usize) -> (T, usize) {
    let slot = cache.grid().interior_slots()[pos];
    let nbrs = cache.grid().neighbors(pos);
    let center = v[slot];
    let mut best = T::neg_infinity();
    let mut arg = 0;
    for alpha in 0..cache.n_controls() {
        let w = cache.weights(pos, alpha);
        let mut s = cache.f(pos, alpha);
        for (wj, &nb) in w.iter().zip(nbrs) {
            s += *wj * v[nb];
        }
        let val = s - cache.diagonal(pos, alpha) * center;
        if val > best {
            best = val;
            arg = alpha;
        }
    }
    (best, arg)
}

/// `max_alpha (sum_j w_j v_j + f) / D`: the value at `pos` that zeroes the
/// operator with all neighbors held fixed.
#[inline]
fn local_solve<T: Scalar>(cache: &SchemeCache<T>, v: &[T], pos: usize) -> T {
    let nbrs = cache.grid().neighbors(pos);
    let mut best = T::neg_infinity();
    for alpha in 0..cache.n_controls() {
        let w = cache.weights(pos, alpha);
        let mut s = cache.f(pos, alpha);
        for (wj, &nb) in w.iter().zip(nbrs) {
            s += *wj * v[nb];
        }
        let t = s / cache.diagonal(pos, alpha);
        if t > best {
            best = t;
        }
    }
    best
}

fn check_grid<T: Scalar>(cache: &SchemeCache<T>, v: &GridFunction<T>) {
    assert!(
        std::sync::Arc::ptr_eq(cache.grid_arc(), v.grid_arc()),
        "grid function and scheme cache belong to different grids"
    );
}

/// The discrete Bellman operator at one interior slot.
pub fn bellman_apply<T: Scalar>(cache: &SchemeCache<T>, v: &GridFunction<T>, slot: usize) -> Result<T, SolveError<T>> {
    check_grid(cache, v);
    let pos = cache.grid().interior_position(slot).ok_or(SolveError::NotInterior(slot))?;
    Ok(node_value(cache, v.values(), pos).0)
}

/// Operator values and maximizing controls at every interior position.
pub fn evaluate_policy<T: Scalar>(cache: &SchemeCache<T>, v: &GridFunction<T>) -> (Vec<T>, Vec<usize>) {
    check_grid(cache, v);
    evaluate_raw(cache, v.values())
}

pub(crate) fn evaluate_raw<T: Scalar>(cache: &SchemeCache<T>, v: &[T]) -> (Vec<T>, Vec<usize>) {
    let n = cache.n_interior();
    if n < PARALLEL_THRESHOLD {
        (0..n).map(|p| node_value(cache, v, p)).unzip()
    } else {
        (0..n).into_par_iter().with_min_len(256).map(|p| node_value(cache, v, p)).unzip()
    }
}

/// `sup |H_h[v]|` over the interior.
pub fn residual<T: Scalar>(cache: &SchemeCache<T>, v: &GridFunction<T>) -> T {
    check_grid(cache, v);
    residual_raw(cache, v.values())
}

pub(crate) fn residual_raw<T: Scalar>(cache: &SchemeCache<T>, v: &[T]) -> T {
    evaluate_raw(cache, v).0.into_iter().fold(T::zero(), |m, r| m.max(r.abs()))
}

/// The damping constant of the fixed-point map and its contraction factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Damping<T> {
    pub n0: T,
    pub contraction: T,
}

/// `N0 = max (2 sum a + h sum |b| + c h^2)` over cached rows. This makes every
/// coefficient of the update `v + h^2 / N0 H_h[v]` nonnegative, so the map
/// contracts with factor `1 - c_min h^2 / N0`.
pub fn compute_damping<T: Scalar>(cache: &SchemeCache<T>) -> Damping<T> {
    let h = cache.h();
    let h2 = h * h;
    let mut n0 = T::zero();
    for pos in 0..cache.n_interior() {
        for alpha in 0..cache.n_controls() {
            n0 = n0.max(cache.spread(pos, alpha) + cache.c(pos, alpha) * h2);
        }
    }
    let contraction = T::one() - cache.c_min() * h2 / n0;
    Damping { n0, contraction }
}

/// Reusable storage for repeated Jacobi steps.
pub(crate) struct JacobiWorkspace<T> {
    op: Vec<T>,
}

impl<T: Scalar> JacobiWorkspace<T> {
    pub(crate) fn new(n: usize) -> Self {
        JacobiWorkspace { op: vec![T::zero(); n] }
    }
}

/// One in-place Jacobi step; returns `(sup change, sup |H_h[v]|)` where the
/// residual is that of the input.
pub(crate) fn jacobi_in_place<T: Scalar>(
    cache: &SchemeCache<T>,
    v: &mut [T],
    damping: &Damping<T>,
    ws: &mut JacobiWorkspace<T>,
) -> (T, T) {
    let n = cache.n_interior();
    {
        let snapshot: &[T] = v;
        if n < PARALLEL_THRESHOLD {
            for (p, o) in ws.op.iter_mut().enumerate() {
                *o = node_value(cache, snapshot, p).0;
            }
        } else {
            ws.op.par_iter_mut().with_min_len(256).enumerate().for_each(|(p, o)| *o = node_value(cache, snapshot, p).0);
        }
    }
    let h = cache.h();
    let tau = h * h / damping.n0;
    let mut change = T::zero();
    let mut res = T::zero();
    for (&slot, &o) in cache.grid().interior_slots().iter().zip(&ws.op) {
        let step = tau * o;
        v[slot] += step;
        change = change.max(step.abs());
        res = res.max(o.abs());
    }
    for &(slot, g) in cache.band() {
        change = change.max((v[slot] - g).abs());
        v[slot] = g;
    }
    (change, res)
}

/// `v + h^2 / N0 H_h[v]` on the interior and `g` on the band.
pub fn jacobi_step<T: Scalar>(
    cache: &SchemeCache<T>,
    v: &GridFunction<T>,
    damping: &Damping<T>,
) -> (GridFunction<T>, T) {
    check_grid(cache, v);
    let mut next = v.clone();
    let mut ws = JacobiWorkspace::new(cache.n_interior());
    let (change, _) = jacobi_in_place(cache, next.values_mut(), damping, &mut ws);
    (next, change)
}

/// One lexicographic nonlinear Gauss–Seidel sweep with relaxation `omega`
/// (exact local solves at `omega = 1`). Returns the sup change.
pub fn gauss_seidel_sweep<T: Scalar>(cache: &SchemeCache<T>, v: &mut GridFunction<T>, omega: T) -> T {
    check_grid(cache, v);
    gauss_seidel_raw(cache, v.values_mut(), omega)
}

pub(crate) fn gauss_seidel_raw<T: Scalar>(cache: &SchemeCache<T>, v: &mut [T], omega: T) -> T {
    let mut change = T::zero();
    for &(slot, g) in cache.band() {
        change = change.max((v[slot] - g).abs());
        v[slot] = g;
    }
    for (pos, &slot) in cache.grid().interior_slots().iter().enumerate() {
        let target = local_solve(cache, v, pos);
        let step = omega * (target - v[slot]);
        v[slot] += step;
        change = change.max(step.abs());
    }
    change
}

/// One lexicographic SOR sweep on the linear system of a frozen policy.
/// Returns the largest residual met before each update.
pub(crate) fn frozen_sor_sweep<T: Scalar>(cache: &SchemeCache<T>, policy: &[usize], v: &mut [T], omega: T) -> T {
    let mut worst = T::zero();
    for (pos, &slot) in cache.grid().interior_slots().iter().enumerate() {
        let alpha = policy[pos];
        let w = cache.weights(pos, alpha);
        let nbrs = cache.grid().neighbors(pos);
        let mut s = cache.f(pos, alpha);
        for (wj, &nb) in w.iter().zip(nbrs) {
            s += *wj * v[nb];
        }
        let d = cache.diagonal(pos, alpha);
        let r = s - d * v[slot];
        worst = if r.is_finite() { worst.max(r.abs()) } else { T::infinity() };
        v[slot] += omega * r / d;
    }
    worst
}
