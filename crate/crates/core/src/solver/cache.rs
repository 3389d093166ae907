use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::SolveError;
use crate::lattice::Grid;
use crate::problem::BellmanProblem;
use crate::scalar::Scalar;

/// Coefficients of every control at every interior node, in the neighbor-weight
/// form used by the iterations:
///
/// ```text
/// L^alpha v(x) = sum_j w_j (v(x + h e_j) - v(x)) - c v(x) + f,   w_j = a_k / h^2 + b_j / h.
/// ```
///
/// When the oracle reports a uniform stencil the weights are stored once per
/// control; `c` and `f` are always stored per node.
#[derive(Clone)]
pub struct SchemeCache<T> {
    grid: Arc<Grid<T>>,
    n_controls: usize,
    n_signed: usize,
    uniform: bool,
    weights: Vec<T>,
    weight_sum: Vec<T>,
    /// `2 sum a + h sum |b|`.
    spread: Vec<T>,
    c: Vec<T>,
    f: Vec<T>,
    band: Vec<(usize, T)>,
    c_min: T,
    outside_theory: bool,
}

impl<T: Scalar> std::fmt::Debug for SchemeCache<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemeCache")
            .field("h", &self.grid.h())
            .field("interior", &self.grid.n_interior())
            .field("controls", &self.n_controls)
            .field("uniform", &self.uniform)
            .field("c_min", &self.c_min)
            .finish()
    }
}

struct Row<T> {
    weights: Vec<T>,
    spread: T,
    c: T,
    f: T,
}

fn build_row<T: Scalar>(
    p: &BellmanProblem<T>,
    grid: &Grid<T>,
    slot: usize,
    alpha: usize,
) -> Result<Row<T>, SolveError<T>> {
    let h = grid.h();
    let x = grid.coords(slot);
    let co = p.coefficients(alpha, &x);
    let dirs = p.directions();
    let witness = |direction: Option<isize>, detail: String| SolveError::Monotonicity {
        control: alpha,
        point: x.iter().map(|v| v.as_f64()).collect(),
        direction,
        detail,
    };
    if co.a.len() != dirs.d1() || co.b.len() != dirs.n_signed() {
        return Err(witness(
            None,
            format!("oracle returned {} diffusion and {} drift weights", co.a.len(), co.b.len()),
        ));
    }
    if !(co.c >= T::zero()) {
        return Err(witness(None, format!("c = {}", co.c)));
    }
    if !co.f.is_finite() {
        return Err(witness(None, format!("f = {}", co.f)));
    }
    let h2 = h * h;
    let mut weights = Vec::with_capacity(dirs.n_signed());
    let mut spread = T::zero();
    for (k, &a) in co.a.iter().enumerate() {
        spread += a + a;
        for (sign, j) in [(1isize, 2 * k), (-1, 2 * k + 1)] {
            let b = co.b[j];
            spread += h * b.abs();
            let num = a + h * b;
            if !(num >= T::zero()) {
                return Err(witness(Some(sign * (k as isize + 1)), format!("a + h b = {num} < 0")));
            }
            weights.push(num / h2);
        }
    }
    Ok(Row { weights, spread, c: co.c, f: co.f })
}

impl<T: Scalar> SchemeCache<T> {
    /// Evaluates the oracle at every interior node and control. Fails when a
    /// neighbor weight or `c` is negative at the grid step, or when `c`
    /// vanishes somewhere on a problem not flagged outside the theory.
    pub fn build(p: &BellmanProblem<T>, grid: Arc<Grid<T>>) -> Result<Self, SolveError<T>> {
        if grid.directions() != p.directions() {
            return Err(SolveError::InvalidOptions("grid was built with a different direction set".into()));
        }
        let nc = p.n_controls();
        if nc == 0 {
            return Err(SolveError::InvalidOptions("problem has no controls".into()));
        }
        let ns = p.directions().n_signed();
        let uniform = p.oracle().uniform_stencil();
        let rows: Vec<Row<T>> = grid
            .interior_slots()
            .par_iter()
            .flat_map_iter(|&s| (0..nc).map(move |a| (s, a)))
            .map(|(s, a)| build_row(p, &grid, s, a))
            .collect::<Result<_, _>>()?;
        let (weights, weight_sum, spread) = if uniform {
            let first = &rows[..nc];
            (
                first.iter().flat_map(|r| r.weights.iter().copied()).collect(),
                first.iter().map(|r| r.weights.iter().copied().sum()).collect(),
                first.iter().map(|r| r.spread).collect(),
            )
        } else {
            (
                rows.iter().flat_map(|r| r.weights.iter().copied()).collect(),
                rows.iter().map(|r| r.weights.iter().copied().sum()).collect(),
                rows.iter().map(|r| r.spread).collect(),
            )
        };
        let c: Vec<T> = rows.iter().map(|r| r.c).collect();
        let f = rows.iter().map(|r| r.f).collect();
        let c_min = c.iter().copied().fold(T::infinity(), T::min);
        if c_min.is_zero() && !p.outside_theory() {
            return Err(SolveError::InvalidOptions(
                "zeroth-order coefficient vanishes; the problem must be flagged outside the theory".into(),
            ));
        }
        let band = grid.band_slots().map(|s| (s, p.g(&grid.coords(s)))).collect();
        Ok(SchemeCache {
            grid,
            n_controls: nc,
            n_signed: ns,
            uniform,
            weights,
            weight_sum,
            spread,
            c,
            f,
            band,
            c_min,
            outside_theory: p.outside_theory(),
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn h(&self) -> T {
        self.grid.h()
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn n_interior(&self) -> usize {
        self.grid.n_interior()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Smallest zeroth-order coefficient over all nodes and controls.
    pub fn c_min(&self) -> T {
        self.c_min
    }

    pub fn outside_theory(&self) -> bool {
        self.outside_theory
    }

    /// `(slot, g)` for every band node.
    pub fn band(&self) -> &[(usize, T)] {
        &self.band
    }

    #[inline]
    fn row_index(&self, pos: usize, alpha: usize) -> usize {
        pos * self.n_controls + alpha
    }

    /// Neighbor weights of `alpha` at interior position `pos`, signed-slot layout.
    #[inline]
    pub fn weights(&self, pos: usize, alpha: usize) -> &[T] {
        let r = if self.uniform { alpha } else { self.row_index(pos, alpha) };
        &self.weights[r * self.n_signed..(r + 1) * self.n_signed]
    }

    /// `sum_j w_j + c`, the coefficient of the center value.
    #[inline]
    pub fn diagonal(&self, pos: usize, alpha: usize) -> T {
        let r = self.row_index(pos, alpha);
        let ws = if self.uniform { self.weight_sum[alpha] } else { self.weight_sum[r] };
        ws + self.c[r]
    }

    #[inline]
    pub fn c(&self, pos: usize, alpha: usize) -> T {
        self.c[self.row_index(pos, alpha)]
    }

    #[inline]
    pub fn f(&self, pos: usize, alpha: usize) -> T {
        self.f[self.row_index(pos, alpha)]
    }

    /// `2 sum_k a_k + h sum_j |b_j|` of `alpha` at `pos`.
    pub fn spread(&self, pos: usize, alpha: usize) -> T {
        if self.uniform {
            self.spread[alpha]
        } else {
            self.spread[self.row_index(pos, alpha)]
        }
    }

    /// Largest deviation between cached rows and fresh oracle evaluations over
    /// `samples` random (node, control) pairs.
    pub fn spot_check(&self, p: &BellmanProblem<T>, samples: usize, seed: u64) -> T {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = T::zero();
        for _ in 0..samples {
            let pos = rng.random_range(0..self.n_interior());
            let alpha = rng.random_range(0..self.n_controls);
            let slot = self.grid.interior_slots()[pos];
            let Ok(row) = build_row(p, &self.grid, slot, alpha) else {
                return T::infinity();
            };
            worst = worst.max((row.c - self.c(pos, alpha)).abs()).max((row.f - self.f(pos, alpha)).abs());
            for (a, b) in row.weights.iter().zip(self.weights(pos, alpha)) {
                worst = worst.max((*a - *b).abs());
            }
        }
        worst
    }
}
