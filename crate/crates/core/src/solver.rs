//! Discrete Bellman operator and its solvers.
//!
//! At an interior node `x` the scheme reads
//!
//! ```text
//! H_h[v](x) = max_alpha [ sum_j w_j (v(x + h e_j) - v(x)) - c v(x) + f ] = 0,
//! ```
//!
//! with `v = g` on the boundary band. Three iterations are provided: the damped
//! fixed-point map (a sup-norm contraction), nonlinear Gauss-Seidel, and
//! policy iteration.

mod cache;
mod checks;
mod grid_function;
mod operator;
mod report;

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::lattice::{Grid, LatticeError};
use crate::problem::BellmanProblem;
use crate::scalar::{sup_diff, Scalar};

pub use cache::SchemeCache;
pub use checks::{apriori_bound_check, comparison_check, AprioriReport, ComparisonReport};
pub use grid_function::GridFunction;
pub use operator::{
    bellman_apply, compute_damping, evaluate_policy, gauss_seidel_sweep, jacobi_step, residual, Damping,
};
pub use report::{Method, SolveReport};

use operator::{evaluate_raw, frozen_sor_sweep, gauss_seidel_raw, jacobi_in_place, residual_raw, JacobiWorkspace};

#[derive(Debug, Error)]
pub enum SolveError<T: Scalar> {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("scheme is not monotone for control {control} at {point:?} (direction {direction:?}): {detail}")]
    Monotonicity { control: usize, point: Vec<f64>, direction: Option<isize>, detail: String },
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("slot {0} is not an interior node")]
    NotInterior(usize),
    #[error("{} did not converge in {} iterations (residual {:.3e}, tol {:.3e})", report.method, report.iterations, report.residual, report.tol)]
    NotConverged { best: Box<GridFunction<T>>, report: Box<SolveReport> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions<T> {
    pub method: Method,
    /// Stop once `sup |H_h[v]| <= tol` over the interior.
    pub tol: T,
    /// Iterations, sweeps or policy steps depending on the method.
    pub max_iter: usize,
    /// Inner tolerance for policy iteration; defaults to
    /// `max(tol / 2, FORCING * residual)` at each step.
    pub linear_tol: Option<T>,
    /// Relaxation factor. Policy iteration defaults to `2 / (1 + sin(pi h / diam))`,
    /// Gauss-Seidel to 1.
    pub relaxation: Option<T>,
    pub max_linear_sweeps: usize,
    /// Worker cap for the parallel parts; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            method: Method::Policy,
            tol: T::lit(1e-9),
            max_iter: 2_000_000,
            linear_tol: None,
            relaxation: None,
            max_linear_sweeps: 100_000,
            threads: None,
        }
    }
}

impl<T: Scalar> SolveOptions<T> {
    pub fn new(method: Method, tol: T) -> Self {
        SolveOptions { method, tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > T::zero()) || !self.tol.is_finite() {
            return Err(format!("tol must be positive and finite, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return Err("max_iter must be at least 1".into());
        }
        if let Some(l) = self.linear_tol {
            if !(l > T::zero()) {
                return Err(format!("linear_tol must be positive, got {l}"));
            }
        }
        if let Some(w) = self.relaxation {
            if !(w > T::zero() && w < T::lit(2.0)) {
                return Err(format!("relaxation must lie in (0, 2), got {w}"));
            }
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// Policy steps without an explicit `linear_tol` solve the frozen system to
/// `max(tol / 2, FORCING * residual)`.
pub const FORCING: f64 = 1e-3;

/// Over-relaxation factor suited to the grid: `2 / (1 + sin(pi h / diam))`,
/// with `diam` the longest side of the domain's bounding box.
pub fn auto_relaxation<T: Scalar>(grid: &Grid<T>) -> T {
    let diam = grid.domain().bounding_box().iter().fold(T::zero(), |m, &(lo, hi)| m.max(hi - lo));
    let s = (T::lit(std::f64::consts::PI) * grid.h() / diam).sin();
    T::lit(2.0) / (T::one() + s)
}

/// Result of one policy-iteration step.
#[derive(Clone)]
pub struct PolicyStep<T> {
    pub value: GridFunction<T>,
    /// Maximizing controls at the input, one per interior position.
    pub policy: Vec<usize>,
    pub sweeps: usize,
    pub linear_residual: T,
    pub relaxation: T,
    /// The inner solve stalled and a fixed-point step was taken instead.
    pub fell_back: bool,
}

/// Freezes the maximizing controls at `v` and solves the resulting linear
/// system by SOR sweeps to `linear_tol`. An SOR run whose residual climbs
/// 100-fold above its best is restarted with `2 - omega` doubled (never below
/// plain Gauss-Seidel); one that stalls is replaced by a single fixed-point step.
pub fn policy_iteration_step<T: Scalar>(
    cache: &SchemeCache<T>,
    v: &GridFunction<T>,
    linear_tol: T,
    relaxation: Option<T>,
    max_sweeps: usize,
) -> PolicyStep<T> {
    let (_, policy) = evaluate_policy(cache, v);
    let mut omega = relaxation.unwrap_or_else(|| auto_relaxation(cache.grid()));
    let start = {
        let mut s = v.values().to_vec();
        for &(slot, g) in cache.band() {
            s[slot] = g;
        }
        s
    };
    let mut x = start.clone();
    let mut sweeps = 0usize;
    let mut since_reset = 0usize;
    let mut best = T::zero();
    let mut last;
    loop {
        let r = frozen_sor_sweep(cache, &policy, &mut x, omega);
        sweeps += 1;
        since_reset += 1;
        if since_reset == 1 || r < best {
            best = r;
        }
        last = if r.is_finite() { r } else { T::infinity() };
        if omega > T::one() && (!r.is_finite() || r > T::lit(100.0) * best.max(linear_tol)) {
            x.clone_from(&start);
            let two = T::lit(2.0);
            omega = (two - two * (two - omega)).max(T::one());
            since_reset = 0;
            continue;
        }
        if r <= linear_tol {
            break;
        }
        if sweeps >= max_sweeps {
            let damping = compute_damping(cache);
            let (next, _) = jacobi_step(cache, v, &damping);
            return PolicyStep {
                value: next,
                policy,
                sweeps,
                linear_residual: last,
                relaxation: omega,
                fell_back: true,
            };
        }
    }
    PolicyStep {
        value: GridFunction::new(v.grid_arc().clone(), x),
        policy,
        sweeps,
        linear_residual: last,
        relaxation: omega,
        fell_back: false,
    }
}

/// Builds the grid cache and solves from `v = 0` inside, `g` on the band.
pub fn solve<T: Scalar>(
    p: &BellmanProblem<T>,
    grid: Arc<Grid<T>>,
    opts: &SolveOptions<T>,
) -> Result<(GridFunction<T>, SolveReport), SolveError<T>> {
    opts.validate().map_err(SolveError::InvalidOptions)?;
    let cache = SchemeCache::build(p, grid)?;
    solve_cached(&cache, opts, None)
}

/// Solves on a prepared cache, optionally from a given starting function.
pub fn solve_cached<T: Scalar>(
    cache: &SchemeCache<T>,
    opts: &SolveOptions<T>,
    initial: Option<&GridFunction<T>>,
) -> Result<(GridFunction<T>, SolveReport), SolveError<T>> {
    opts.validate().map_err(SolveError::InvalidOptions)?;
    match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SolveError::InvalidOptions(e.to_string()))?;
            pool.install(|| run(cache, opts, initial))
        }
        None => run(cache, opts, initial),
    }
}

fn initial_values<T: Scalar>(cache: &SchemeCache<T>, initial: Option<&GridFunction<T>>) -> Vec<T> {
    let mut v = match initial {
        Some(f) => {
            assert!(Arc::ptr_eq(f.grid_arc(), cache.grid_arc()), "initial guess lives on another grid");
            f.values().to_vec()
        }
        None => vec![T::zero(); cache.grid().n_valued()],
    };
    for &(slot, g) in cache.band() {
        v[slot] = g;
    }
    v
}

fn run<T: Scalar>(
    cache: &SchemeCache<T>,
    opts: &SolveOptions<T>,
    initial: Option<&GridFunction<T>>,
) -> Result<(GridFunction<T>, SolveReport), SolveError<T>> {
    let clock = Instant::now();
    let damping = compute_damping(cache);
    let mut v = initial_values(cache, initial);
    let mut report = SolveReport {
        method: opts.method,
        h: cache.h().as_f64(),
        n_interior: cache.n_interior(),
        n_controls: cache.n_controls(),
        tol: opts.tol.as_f64(),
        converged: false,
        iterations: 0,
        residual: f64::INFINITY,
        final_sup_change: 0.0,
        n0: damping.n0.as_f64(),
        contraction_bound: damping.contraction.as_f64(),
        c_min: cache.c_min().as_f64(),
        max_contraction_ratio: None,
        policy_steps: 0,
        linear_sweeps: 0,
        fallbacks: 0,
        relaxation: None,
        sup_change_history: Vec::new(),
        residual_history: Vec::new(),
        wall_time: Default::default(),
    };
    match opts.method {
        Method::Jacobi => {
            let mut ws = JacobiWorkspace::new(cache.n_interior());
            let mut prev: Option<T> = None;
            let mut worst_ratio: Option<f64> = None;
            for _ in 0..opts.max_iter {
                let (change, res) = jacobi_in_place(cache, &mut v, &damping, &mut ws);
                report.iterations += 1;
                report.sup_change_history.push(change.as_f64());
                report.residual_history.push(res.as_f64());
                if let Some(p) = prev.filter(|p| *p > T::zero()) {
                    let ratio = (change / p).as_f64();
                    worst_ratio = Some(worst_ratio.map_or(ratio, |w| w.max(ratio)));
                }
                prev = Some(change);
                if res <= opts.tol {
                    break;
                }
            }
            report.max_contraction_ratio = worst_ratio;
        }
        Method::GaussSeidel => {
            let omega = opts.relaxation.unwrap_or(T::one());
            report.relaxation = Some(omega.as_f64());
            for _ in 0..opts.max_iter {
                let change = gauss_seidel_raw(cache, &mut v, omega);
                let res = residual_raw(cache, &v);
                report.iterations += 1;
                report.sup_change_history.push(change.as_f64());
                report.residual_history.push(res.as_f64());
                if res <= opts.tol {
                    break;
                }
            }
        }
        Method::Policy => {
            let floor = opts.tol * T::lit(0.5);
            let mut omega = opts.relaxation;
            let grid = cache.grid_arc().clone();
            let mut current = GridFunction::new(grid, v);
            for _ in 0..opts.max_iter {
                let (ops, _) = evaluate_raw(cache, current.values());
                let res = ops.into_iter().fold(T::zero(), |m, r| m.max(r.abs()));
                report.residual_history.push(res.as_f64());
                if res <= opts.tol {
                    break;
                }
                let linear_tol = opts.linear_tol.unwrap_or_else(|| floor.max(res * T::lit(FORCING)));
                let step = policy_iteration_step(cache, &current, linear_tol, omega, opts.max_linear_sweeps);
                omega = Some(step.relaxation);
                report.iterations += 1;
                report.policy_steps += 1;
                report.linear_sweeps += step.sweeps;
                report.fallbacks += usize::from(step.fell_back);
                report.relaxation = Some(step.relaxation.as_f64());
                report.sup_change_history.push(sup_diff(step.value.values(), current.values()).as_f64());
                current = step.value;
            }
            v = current.into_values();
        }
    }
    let res = residual_raw(cache, &v);
    report.residual = res.as_f64();
    report.converged = res <= opts.tol;
    report.final_sup_change = report.sup_change_history.last().copied().unwrap_or(0.0);
    report.wall_time = clock.elapsed();
    let out = GridFunction::new(cache.grid_arc().clone(), v);
    if report.converged {
        Ok((out, report))
    } else {
        Err(SolveError::NotConverged { best: Box::new(out), report: Box::new(report) })
    }
}
