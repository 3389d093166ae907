//! Convergence studies and estimate monitors.

mod monitor;
mod output;
mod rate;
pub mod suites;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{Field, Grid, LatticeError};
use crate::problem::BellmanProblem;
use crate::scalar::Scalar;
use crate::solver::{solve, GridFunction, Method, SolveError, SolveOptions, SolveReport};

pub use monitor::{estimate_monitor, monitor_spread, MonitorRecord, MonitorSpread, MONITOR_DEPTH};
pub use output::{render_svg, CSV_HEADER};
pub use rate::{fit_rate, FitError, RateFit};

#[derive(Debug, Error)]
pub enum StudyError<T: Scalar> {
    #[error("h list must be nonempty, positive and strictly decreasing")]
    BadSteps,
    #[error("reference step {h_ref} does not divide {h}")]
    NotNested { h: f64, h_ref: f64 },
    #[error("node {index:?} of the coarse grid has no counterpart on the fine grid")]
    NonCoincident { index: Vec<i64> },
    #[error("problem `{0}` has no closed-form solution; use a fine-grid reference")]
    NoExactSolution(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("solve at h = {h} failed: {source}")]
    Solve {
        h: f64,
        #[source]
        source: SolveError<T>,
        partial: Box<StudyReport>,
    },
}

/// What the coarse solutions are compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference<T> {
    /// The problem's closed-form solution evaluated at the nodes.
    Exact,
    /// A solve at `h_ref`, which must divide every step of the study.
    FineGrid { h_ref: T },
}

#[derive(Clone, Debug)]
pub struct StudyOptions<T> {
    pub h_list: Vec<T>,
    pub reference: Reference<T>,
    pub solve: SolveOptions<T>,
    /// Node pairs sampled by the Lipschitz monitor.
    pub monitor_pairs: usize,
    pub seed: u64,
}

impl<T: Scalar> StudyOptions<T> {
    /// Fine-grid reference at half the smallest step.
    pub fn fine_grid(h_list: Vec<T>) -> Self {
        let h_min = h_list.iter().copied().fold(T::infinity(), T::min);
        StudyOptions {
            h_list,
            reference: Reference::FineGrid { h_ref: h_min * T::lit(0.5) },
            solve: SolveOptions::default(),
            monitor_pairs: 1000,
            seed: 0,
        }
    }

    pub fn exact(h_list: Vec<T>) -> Self {
        StudyOptions { reference: Reference::Exact, ..Self::fine_grid(h_list) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveSummary {
    pub h: f64,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub n_interior: usize,
}

impl From<&SolveReport> for SolveSummary {
    fn from(r: &SolveReport) -> Self {
        SolveSummary {
            h: r.h,
            method: r.method,
            iterations: r.iterations,
            residual: r.residual,
            converged: r.converged,
            n_interior: r.n_interior,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub problem: String,
    pub directions: Vec<Vec<i32>>,
    pub reference: String,
    pub h_ref: Option<f64>,
    pub h: Vec<f64>,
    /// `max |v_h - v_ref|` over the interior of each coarse grid.
    pub errors: Vec<f64>,
    pub rate: Option<RateFit>,
    /// Why no rate was fitted, when none was.
    pub rate_note: Option<String>,
    pub monitors: Vec<MonitorRecord>,
    pub monitor_spread: Option<MonitorSpread>,
    pub solves: Vec<SolveSummary>,
    pub reference_solve: Option<SolveSummary>,
}

impl StudyReport {
    /// `(h, error)` rows.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.h.iter().copied().zip(self.errors.iter().copied()).collect()
    }

    /// Errors strictly decrease as `h` decreases.
    pub fn errors_decrease(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }
}

/// Integer ratio `coarse / fine`, if it is one.
fn step_ratio<T: Scalar>(coarse: T, fine: T) -> Option<i64> {
    let r = (coarse / fine).as_f64();
    let n = r.round();
    (n >= 1.0 && (r - n).abs() <= 1e-9 * n).then_some(n as i64)
}

/// Copies `fine` onto the nodes of `coarse` that coincide with fine nodes.
/// Coarse nodes whose counterpart is not valued on the fine grid take `fill`,
/// which is the boundary data; without it they are an error.
pub fn restrict_to_coarse<T: Scalar>(
    fine: &GridFunction<T>,
    coarse: Arc<Grid<T>>,
    fill: Option<&Field<T>>,
) -> Result<GridFunction<T>, StudyError<T>> {
    let fg = fine.grid();
    let ratio = step_ratio(coarse.h(), fg.h())
        .ok_or(StudyError::NotNested { h: coarse.h().as_f64(), h_ref: fg.h().as_f64() })?;
    let mut values = Vec::with_capacity(coarse.n_valued());
    for s in 0..coarse.n_valued() {
        let idx: Vec<i64> = coarse.index(s).iter().map(|&i| i * ratio).collect();
        match fg.slot_of(&idx) {
            Some(fs) => values.push(fine.value(fs)),
            None => match fill {
                Some(g) => values.push(g(&coarse.coords(s))),
                None => return Err(StudyError::NonCoincident { index: coarse.index(s).to_vec() }),
            },
        }
    }
    Ok(GridFunction::new(coarse, values))
}

/// `max |u - w|` over interior nodes.
pub fn interior_error<T: Scalar>(u: &GridFunction<T>, w: &GridFunction<T>) -> T {
    u.grid().interior_slots().iter().fold(T::zero(), |m, &s| m.max((u.value(s) - w.value(s)).abs()))
}

/// Solves at each step of `opts.h_list`, then at the reference step, measures
/// the interior sup error against the reference, records the estimate
/// monitors, and fits the rate.
pub fn run_convergence_study<T: Scalar>(
    p: &BellmanProblem<T>,
    opts: &StudyOptions<T>,
) -> Result<StudyReport, StudyError<T>> {
    let hs = &opts.h_list;
    if hs.is_empty() || hs.iter().any(|h| !(*h > T::zero())) || hs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(StudyError::BadSteps);
    }
    let h_ref = match opts.reference {
        Reference::Exact => {
            if p.exact().is_none() {
                return Err(StudyError::NoExactSolution(p.name().to_string()));
            }
            None
        }
        Reference::FineGrid { h_ref } => {
            if let Some(&h) = hs.iter().find(|&&h| step_ratio(h, h_ref).is_none()) {
                return Err(StudyError::NotNested { h: h.as_f64(), h_ref: h_ref.as_f64() });
            }
            Some(h_ref)
        }
    };
    let mut report = StudyReport {
        problem: p.name().to_string(),
        directions: p.directions().offsets().to_vec(),
        reference: match opts.reference {
            Reference::Exact => "exact".into(),
            Reference::FineGrid { .. } => "fine-grid".into(),
        },
        h_ref: h_ref.map(|h| h.as_f64()),
        h: Vec::new(),
        errors: Vec::new(),
        rate: None,
        rate_note: None,
        monitors: Vec::new(),
        monitor_spread: None,
        solves: Vec::new(),
        reference_solve: None,
    };
    let mut solutions: Vec<GridFunction<T>> = Vec::with_capacity(hs.len());
    for &h in hs {
        let grid = Arc::new(p.grid(h)?);
        let (v, r) = match solve(p, grid, &opts.solve) {
            Ok(out) => out,
            Err(source) => return Err(StudyError::Solve { h: h.as_f64(), source, partial: Box::new(report) }),
        };
        report.h.push(h.as_f64());
        report.solves.push(SolveSummary::from(&r));
        report.monitors.push(estimate_monitor(p, &v, opts.monitor_pairs, opts.seed));
        solutions.push(v);
    }
    report.monitor_spread = Some(monitor_spread(&report.monitors));
    let reference = match h_ref {
        Some(h_ref) => {
            let grid = Arc::new(p.grid(h_ref)?);
            match solve(p, grid, &opts.solve) {
                Ok((v, r)) => {
                    report.reference_solve = Some(SolveSummary::from(&r));
                    Some(v)
                }
                Err(source) => return Err(StudyError::Solve { h: h_ref.as_f64(), source, partial: Box::new(report) }),
            }
        }
        None => None,
    };
    for v in &solutions {
        let grid = v.grid_arc().clone();
        let target = match (&reference, p.exact()) {
            (Some(fine), _) => restrict_to_coarse(fine, grid, Some(p.g_field()))?,
            (None, Some(exact)) => GridFunction::from_fn(grid, |x| exact(x)),
            (None, None) => unreachable!("checked above"),
        };
        report.errors.push(interior_error(v, &target).as_f64());
    }
    match fit_rate(&report.pairs()) {
        Ok(fit) => report.rate = Some(fit),
        Err(e) => report.rate_note = Some(e.to_string()),
    }
    Ok(report)
}
