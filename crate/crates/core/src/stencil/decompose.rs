use serde::Serialize;

use super::{DirectionSet, StencilError};
use crate::scalar::Scalar;

/// Dense symmetric `d x d` matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Builds from rows; fails when the rows are ragged or the matrix is not symmetric.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, StencilError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(StencilError::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        let m = SymMatrix { dim, data };
        let asym = m.asymmetry();
        if asym > T::epsilon() * T::lit(64.0) * T::one().max(m.max_abs()) {
            return Err(StencilError::NotSymmetric(asym.as_f64()));
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![T::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = T::one();
        }
        SymMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// `self + s I`.
    pub fn shifted(&self, s: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] += s;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionPath {
    /// Closed form on the canonical planar set, valid for diagonally dominant matrices.
    Explicit,
    /// Minimum-mass vertex of the feasible polytope.
    LinearProgram,
}

/// Weights `lambda_k`, one per unsigned direction, with `sum lambda_k e_k e_k^T = a`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixDecomposition<T> {
    pub lambda: Vec<T>,
    pub path: DecompositionPath,
}

/// `sum_k lambda_k e_k e_k^T`.
pub fn reconstruct<T: Scalar>(lambda: &[T], directions: &DirectionSet) -> SymMatrix<T> {
    let d = directions.dim();
    let mut data = vec![T::zero(); d * d];
    for (l, e) in lambda.iter().zip(directions.offsets()) {
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] += *l * T::from_int(i64::from(e[i] * e[j]));
            }
        }
    }
    SymMatrix { dim: d, data }
}

/// Writes a symmetric matrix as a nonnegative combination of direction dyads,
/// every weight at least `floor`.
///
/// The canonical planar set uses the closed form
/// `lambda_{e1±e2} = floor + (±a12)_+`, `lambda_{e_i} = a_ii - |a12| - 2 floor`.
/// Everything else (and planar matrices that are not diagonally dominant) goes
/// through an exact vertex enumeration of the linear program
/// `min sum lambda` subject to reconstruction and `lambda >= floor`.
pub fn decompose_matrix<T: Scalar>(
    a: &SymMatrix<T>,
    directions: &DirectionSet,
    floor: T,
) -> Result<MatrixDecomposition<T>, StencilError> {
    if a.dim() != directions.dim() {
        return Err(StencilError::DimensionMismatch { expected: directions.dim(), got: a.dim() });
    }
    if is_canonical_planar(directions) {
        let a12 = a.get(0, 1);
        let plus = floor + a12.max(T::zero());
        let minus = floor + (-a12).max(T::zero());
        let l1 = a.get(0, 0) - plus - minus;
        let l2 = a.get(1, 1) - plus - minus;
        if l1 >= floor && l2 >= floor {
            return Ok(MatrixDecomposition { lambda: vec![l1, l2, plus, minus], path: DecompositionPath::Explicit });
        }
    }
    vertex_program(a, directions, floor)
}

fn is_canonical_planar(d: &DirectionSet) -> bool {
    d.dim() == 2 && d.offsets() == [vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]]
}

fn vertex_program<T: Scalar>(
    a: &SymMatrix<T>,
    directions: &DirectionSet,
    floor: T,
) -> Result<MatrixDecomposition<T>, StencilError> {
    let d = a.dim();
    let n = directions.d1();
    let infeasible = || StencilError::Infeasible { floor: floor.as_f64() };

    // one equation per upper-triangular entry
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let coeff: Vec<Vec<T>> = pairs
        .iter()
        .map(|&(i, j)| directions.offsets().iter().map(|e| T::from_int(i64::from(e[i] * e[j]))).collect())
        .collect();
    let rhs: Vec<T> =
        pairs.iter().zip(&coeff).map(|(&(i, j), row)| a.get(i, j) - floor * row.iter().copied().sum::<T>()).collect();

    let scale = T::one().max(a.max_abs());
    let tol = T::epsilon() * T::lit(4096.0) * scale;
    let rows = independent_rows(&coeff, n);
    let m = rows.len();
    if m > n {
        return Err(infeasible());
    }

    let mut best: Option<(T, Vec<T>)> = None;
    for cols in Combinations::new(n, m) {
        let mut sys: Vec<Vec<T>> = rows
            .iter()
            .map(|&r| {
                let mut row: Vec<T> = cols.iter().map(|&c| coeff[r][c]).collect();
                row.push(rhs[r]);
                row
            })
            .collect();
        let Some(x) = solve_square(&mut sys) else { continue };
        if x.iter().any(|&v| v < -tol) {
            continue;
        }
        let mut mu = vec![T::zero(); n];
        for (&c, &v) in cols.iter().zip(&x) {
            mu[c] = v.max(T::zero());
        }
        let consistent = coeff.iter().zip(&rhs).all(|(row, &b)| {
            let lhs: T = row.iter().zip(&mu).map(|(&p, &q)| p * q).sum();
            (lhs - b).abs() <= tol
        });
        if !consistent {
            continue;
        }
        let mass: T = mu.iter().copied().sum();
        if best.as_ref().is_none_or(|(b, _)| mass < *b - tol) {
            best = Some((mass, mu));
        }
    }
    let (_, mu) = best.ok_or_else(infeasible)?;
    Ok(MatrixDecomposition {
        lambda: mu.into_iter().map(|v| v + floor).collect(),
        path: DecompositionPath::LinearProgram,
    })
}

/// Indices of a maximal linearly independent subset of rows.
fn independent_rows<T: Scalar>(rows: &[Vec<T>], n: usize) -> Vec<usize> {
    // reduced rows with their pivot column, each normalized to 1 at the pivot
    let mut basis: Vec<(usize, Vec<T>)> = Vec::new();
    let mut picked = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (pc, b) in &basis {
            let f = r[*pc];
            if !f.is_zero() {
                for c in 0..n {
                    r[c] -= f * b[c];
                }
            }
        }
        let scale = row.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let (pivot, p) =
            r.iter().enumerate().fold((0, T::zero()), |acc, (i, &v)| if v.abs() > acc.1.abs() { (i, v) } else { acc });
        if p.abs() > T::epsilon() * T::lit(64.0) * scale {
            let r = r.iter().map(|&v| v / p).collect();
            basis.push((pivot, r));
            picked.push(idx);
        }
    }
    picked
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` system.
fn solve_square<T: Scalar>(sys: &mut [Vec<T>]) -> Option<Vec<T>> {
    let m = sys.len();
    for col in 0..m {
        let p = (col..m).max_by(|&x, &y| sys[x][col].abs().partial_cmp(&sys[y][col].abs()).unwrap())?;
        if sys[p][col].abs() < T::epsilon() * T::lit(1024.0) {
            return None;
        }
        sys.swap(col, p);
        for r in col + 1..m {
            let f = sys[r][col] / sys[col][col];
            if f.is_zero() {
                continue;
            }
            for c in col..=m {
                let v = sys[col][c];
                sys[r][c] -= f * v;
            }
        }
    }
    let mut x = vec![T::zero(); m];
    for r in (0..m).rev() {
        let mut s = sys[r][m];
        for c in r + 1..m {
            s -= sys[r][c] * x[c];
        }
        x[r] = s / sys[r][r];
    }
    Some(x)
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Combinations { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[f64]]) -> SymMatrix<f64> {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_uses_axes_only() {
        let d = DirectionSet::canonical(2).unwrap();
        let dec = decompose_matrix(&SymMatrix::<f64>::identity(2), &d, 0.0).unwrap();
        assert_eq!(dec.lambda, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(dec.path, DecompositionPath::Explicit);
    }

    #[test]
    fn dominant_matrix_closed_form() {
        let d = DirectionSet::canonical(2).unwrap();
        let a = sym(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let dec = decompose_matrix(&a, &d, 0.0).unwrap();
        assert_eq!(dec.lambda, vec![1.0, 1.0, 1.0, 0.0]);
        // reconstruct entrywise
        assert_eq!(reconstruct(&dec.lambda, &d).max_abs_diff(&a), 0.0);
    }

    #[test]
    fn axis_set_cannot_make_off_diagonal() {
        let a = sym(&[&[1.0, 0.9], &[0.9, 1.0]]);
        let err = decompose_matrix(&a, &DirectionSet::axes(2), 0.0).unwrap_err();
        assert!(matches!(err, StencilError::Infeasible { .. }));
    }

    #[test]
    fn non_dominant_planar_matrix_is_infeasible_on_canonical_set() {
        let a = sym(&[&[1.0, 0.9], &[0.9, 0.5]]);
        let err = decompose_matrix(&a, &DirectionSet::canonical(2).unwrap(), 0.0).unwrap_err();
        assert!(matches!(err, StencilError::Infeasible { .. }));
    }

    #[test]
    fn floor_is_respected_and_reconstruction_holds() {
        let d = DirectionSet::canonical(2).unwrap();
        let a = sym(&[&[2.0, -0.5], &[-0.5, 1.5]]);
        let dec = decompose_matrix(&a, &d, 0.1).unwrap();
        assert!(dec.lambda.iter().all(|&l| l >= 0.1));
        assert!(reconstruct(&dec.lambda, &d).max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn lp_path_finds_minimum_mass_vertex() {
        // mass = a11 + a22 - (lambda_{e1+e2} + lambda_{e1-e2}), so the optimum
        // loads the diagonals until one axis weight hits zero
        let permuted = DirectionSet::new(2, vec![vec![1, 1], vec![1, 0], vec![1, -1], vec![0, 1]], None).unwrap();
        let a = sym(&[&[2.0, 0.7], &[0.7, 1.0]]);
        let lp = decompose_matrix(&a, &permuted, 0.0).unwrap();
        assert_eq!(lp.path, DecompositionPath::LinearProgram);
        let expected = [0.85, 1.0, 0.15, 0.0];
        for (l, e) in lp.lambda.iter().zip(expected) {
            assert!((l - e).abs() < 1e-14, "{:?}", lp.lambda);
        }
        assert!(reconstruct(&lp.lambda, &permuted).max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn three_dimensional_lp() {
        let d = DirectionSet::canonical(3).unwrap();
        let a = sym(&[&[3.0, 0.5, -0.4], &[0.5, 2.0, 0.3], &[-0.4, 0.3, 1.5]]);
        let dec = decompose_matrix(&a, &d, 0.0).unwrap();
        assert!(dec.lambda.iter().all(|&l| l >= 0.0));
        assert!(reconstruct(&dec.lambda, &d).max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let rows = vec![vec![1.0, 0.2], vec![0.3, 1.0]];
        assert!(matches!(SymMatrix::<f64>::from_rows(&rows), Err(StencilError::NotSymmetric(_))));
    }

    #[test]
    fn combinations_enumerate_binomial() {
        assert_eq!(Combinations::new(5, 2).count(), 10);
        assert_eq!(Combinations::new(9, 6).count(), 84);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn single_precision() {
        let d = DirectionSet::canonical(2).unwrap();
        let a = SymMatrix::<f32>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(decompose_matrix(&a, &d, 0.0).unwrap().lambda, vec![1.0f32, 1.0, 1.0, 0.0]);
    }
}
