use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::problem::BellmanProblem;
use crate::scalar::{norm, Scalar};
use crate::solver::GridFunction;

/// Chain depth defining the deep interior used by the second-difference monitor.
pub const MONITOR_DEPTH: usize = 3;

/// Empirical constants of the discrete interior estimates at one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorRecord {
    pub h: f64,
    /// `max |v - g| / rho` over interior nodes.
    pub m1: f64,
    /// `max |delta_{h,j} v|` over interior nodes and signed directions.
    pub m2: f64,
    /// `max (rho - 6 h s)_+ |delta_{h,i} delta_{h,j} v|` over the deep interior.
    pub m3: f64,
    /// `max |v(x) - v(y)| / (|x - y| + h)` over sampled node pairs.
    pub m4: f64,
}

impl MonitorRecord {
    pub fn values(&self) -> [f64; 4] {
        [self.m1, self.m2, self.m3, self.m4]
    }
}

pub fn estimate_monitor<T: Scalar>(
    p: &BellmanProblem<T>,
    v: &GridFunction<T>,
    pairs: usize,
    seed: u64,
) -> MonitorRecord {
    let grid = v.grid();
    let h = grid.h();
    let vals = v.values();

    let mut m1 = T::zero();
    let mut m2 = T::zero();
    for (pos, &s) in grid.interior_slots().iter().enumerate() {
        let rho = grid.rho(s);
        if rho > T::zero() {
            m1 = m1.max((vals[s] - p.g(&grid.coords(s))).abs() / rho);
        }
        for &nb in grid.neighbors(pos) {
            m2 = m2.max((vals[nb] - vals[s]).abs() / h);
        }
    }

    let signed = grid.directions().signed_offsets();
    let cut = T::lit(6.0) * h * T::from_int(grid.stencil_reach());
    let mut m3 = T::zero();
    let shift = |idx: &[i64], e: &[i32]| -> Vec<i64> { idx.iter().zip(e).map(|(&i, &o)| i + i64::from(o)).collect() };
    for s in grid.classify_deep_interior(MONITOR_DEPTH) {
        let weight = (grid.rho(s) - cut).max(T::zero());
        if weight.is_zero() {
            continue;
        }
        let idx = grid.index(s);
        let at = |q: &[i64]| grid.slot_of(q).map(|t| vals[t]).expect("deep-interior chains stay on valued nodes");
        for ei in &signed {
            let xi = shift(idx, ei);
            let vi = at(&xi);
            for ej in &signed {
                let vj = at(&shift(idx, ej));
                let vij = at(&shift(&xi, ej));
                let dd = (vij - vi - vj + vals[s]) / (h * h);
                m3 = m3.max(weight * dd.abs());
            }
        }
    }

    let n = grid.n_valued();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m4 = T::zero();
    for _ in 0..pairs {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let (xa, xb) = (grid.coords(a), grid.coords(b));
        let d: Vec<T> = xa.iter().zip(&xb).map(|(&u, &w)| u - w).collect();
        m4 = m4.max((vals[a] - vals[b]).abs() / (norm(&d) + h));
    }

    MonitorRecord { h: h.as_f64(), m1: m1.as_f64(), m2: m2.as_f64(), m3: m3.as_f64(), m4: m4.as_f64() }
}

/// Variation of each monitor across a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorSpread {
    /// `max / min` per monitor; 1 when all values are zero, infinite when only some are.
    pub max_over_min: [f64; 4],
    /// Largest factor separating a value from the median, per monitor.
    pub median_factor: [f64; 4],
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

pub fn monitor_spread(records: &[MonitorRecord]) -> MonitorSpread {
    let mut max_over_min = [1.0; 4];
    let mut median_factor = [1.0; 4];
    for i in 0..4 {
        let mut col: Vec<f64> = records.iter().map(|r| r.values()[i]).collect();
        if col.is_empty() {
            continue;
        }
        col.sort_by(f64::total_cmp);
        let (lo, hi) = (col[0], col[col.len() - 1]);
        max_over_min[i] = ratio(hi, lo);
        let m = col.len();
        let median = if m % 2 == 1 { col[m / 2] } else { 0.5 * (col[m / 2 - 1] + col[m / 2]) };
        median_factor[i] = ratio(hi, median).max(ratio(median, lo));
    }
    MonitorSpread { max_over_min, median_factor }
}
