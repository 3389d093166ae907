//! Direction sets, directional difference operators and the positive
//! rank-one decomposition of elliptic coefficient matrices.
//!
//! A direction set holds the unsigned integer offsets `e_1, .., e_{d1}`.
//! The signed family `e_{-k} = -e_k` and the zero offset are implied, so the
//! symmetry requirement holds by construction. Signed directions are addressed
//! either by the conventional index `k = ±1, .., ±d1` or by their *slot*
//! `2(|k| - 1) + [k < 0]`, the layout used for neighbor tables and drift
//! coefficients throughout the crate.

mod decompose;
mod difference;
mod taylor;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decompose::{decompose_matrix, reconstruct, DecompositionPath, MatrixDecomposition, SymMatrix};
pub use difference::{forward_difference, second_difference};
pub use taylor::{
    forward_consistency, taylor_consistency, DirectionalJet, Paraboloid, QuarticAxis, SineAxis, SineProduct,
    TaylorCheck,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StencilError {
    #[error("unsupported dimension {0}: canonical direction sets exist for d = 2 and d = 3")]
    UnsupportedDimension(usize),
    #[error("offset {index} has length {len}, expected {dim}")]
    WrongLength { index: usize, len: usize, dim: usize },
    #[error("offset {0} is the zero vector; the zero direction is implicit")]
    ZeroOffset(usize),
    #[error("offset {0} repeats an earlier direction up to sign")]
    Duplicate(usize),
    #[error("offsets span a space of dimension {rank}, expected {dim}")]
    RankDeficient { rank: usize, dim: usize },
    #[error("core index {0} out of range")]
    CoreIndex(usize),
    #[error("core set violates the structure condition: {0}")]
    CoreCondition(String),
    #[error("matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no nonnegative combination of direction dyads reproduces the matrix (floor {floor})")]
    Infeasible { floor: f64 },
    #[error("direction index {0} is out of range")]
    BadDirection(isize),
    #[error("node {node:?} has no value in direction {k}: grid and scheme disagree")]
    MissingNeighbor { node: Vec<i64>, k: isize },
}

#[derive(Serialize, Deserialize)]
struct RawDirectionSet {
    dim: usize,
    offsets: Vec<Vec<i32>>,
    #[serde(default)]
    core: Option<Vec<usize>>,
}

/// The signed family `{e_k}` of integer stencil offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDirectionSet", into = "RawDirectionSet")]
pub struct DirectionSet {
    dim: usize,
    offsets: Vec<Vec<i32>>,
    core: Option<Vec<usize>>,
}

impl TryFrom<RawDirectionSet> for DirectionSet {
    type Error = StencilError;

    fn try_from(raw: RawDirectionSet) -> Result<Self, Self::Error> {
        DirectionSet::new(raw.dim, raw.offsets, raw.core)
    }
}

impl From<DirectionSet> for RawDirectionSet {
    fn from(d: DirectionSet) -> Self {
        RawDirectionSet { dim: d.dim, offsets: d.offsets, core: d.core }
    }
}

impl DirectionSet {
    /// Validates and builds a direction set from its unsigned offsets.
    ///
    /// `core` lists unsigned indices (0-based) forming the core family; when
    /// given, the sum-set conditions relating it to the full family are checked.
    pub fn new(dim: usize, offsets: Vec<Vec<i32>>, core: Option<Vec<usize>>) -> Result<Self, StencilError> {
        let mut seen = BTreeSet::new();
        for (i, e) in offsets.iter().enumerate() {
            if e.len() != dim {
                return Err(StencilError::WrongLength { index: i, len: e.len(), dim });
            }
            if e.iter().all(|&c| c == 0) {
                return Err(StencilError::ZeroOffset(i));
            }
            let neg: Vec<i32> = e.iter().map(|&c| -c).collect();
            if seen.contains(e) || seen.contains(&neg) {
                return Err(StencilError::Duplicate(i));
            }
            seen.insert(e.clone());
        }
        let rank = integer_rank(&offsets, dim);
        if rank < dim {
            return Err(StencilError::RankDeficient { rank, dim });
        }
        let set = DirectionSet { dim, offsets, core };
        if let Some(core) = &set.core {
            if let Some(&bad) = core.iter().find(|&&c| c >= set.offsets.len()) {
                return Err(StencilError::CoreIndex(bad));
            }
            set.check_core_structure()?;
        }
        Ok(set)
    }

    /// `{0, ±e_i, ±(e_i ± e_j) : i < j}` with core `{0, ±e_i}`.
    pub fn canonical(dim: usize) -> Result<Self, StencilError> {
        if !(2..=3).contains(&dim) {
            return Err(StencilError::UnsupportedDimension(dim));
        }
        let unit = |i: usize| -> Vec<i32> { (0..dim).map(|c| i32::from(c == i)).collect() };
        let mut offsets: Vec<Vec<i32>> = (0..dim).map(unit).collect();
        for i in 0..dim {
            for j in i + 1..dim {
                let (ei, ej) = (unit(i), unit(j));
                offsets.push(ei.iter().zip(&ej).map(|(a, b)| a + b).collect());
                offsets.push(ei.iter().zip(&ej).map(|(a, b)| a - b).collect());
            }
        }
        DirectionSet::new(dim, offsets, Some((0..dim).collect()))
    }

    /// Coordinate axes only. Spans `R^d` but reproduces diagonal matrices only.
    pub fn axes(dim: usize) -> Self {
        let offsets = (0..dim).map(|i| (0..dim).map(|c| i32::from(c == i)).collect()).collect();
        DirectionSet { dim, offsets, core: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of unsigned directions.
    pub fn d1(&self) -> usize {
        self.offsets.len()
    }

    /// Number of signed nonzero directions, `2 d1`.
    pub fn n_signed(&self) -> usize {
        2 * self.offsets.len()
    }

    /// Unsigned offsets, `e_1 .. e_{d1}`.
    pub fn offsets(&self) -> &[Vec<i32>] {
        &self.offsets
    }

    pub fn core_indices(&self) -> Option<&[usize]> {
        self.core.as_deref()
    }

    /// Offset for the signed index `k`; `k = 0` gives the zero vector.
    pub fn offset(&self, k: isize) -> Result<Vec<i32>, StencilError> {
        if k == 0 {
            return Ok(vec![0; self.dim]);
        }
        let e = self.offsets.get(k.unsigned_abs() - 1).ok_or(StencilError::BadDirection(k))?;
        Ok(if k > 0 { e.clone() } else { e.iter().map(|&c| -c).collect() })
    }

    /// Slot of the signed index `k` (nonzero) in neighbor/drift layouts.
    pub fn slot(&self, k: isize) -> Result<usize, StencilError> {
        if k == 0 || k.unsigned_abs() > self.offsets.len() {
            return Err(StencilError::BadDirection(k));
        }
        Ok(2 * (k.unsigned_abs() - 1) + usize::from(k < 0))
    }

    /// Signed offsets in slot order: `e_1, -e_1, e_2, -e_2, ..`.
    pub fn signed_offsets(&self) -> Vec<Vec<i32>> {
        self.offsets.iter().flat_map(|e| [e.clone(), e.iter().map(|&c| -c).collect()]).collect()
    }

    /// `max_k |e_k|_inf`.
    pub fn reach(&self) -> i64 {
        self.offsets.iter().flat_map(|e| e.iter().map(|c| i64::from(c.abs()))).max().unwrap_or(0)
    }

    fn check_core_structure(&self) -> Result<(), StencilError> {
        let zero = vec![0; self.dim];
        let mut full: BTreeSet<Vec<i32>> = self.signed_offsets().into_iter().collect();
        full.insert(zero.clone());
        let mut core: BTreeSet<Vec<i32>> = BTreeSet::new();
        core.insert(zero);
        for &i in self.core.as_deref().unwrap_or(&[]) {
            let e = &self.offsets[i];
            core.insert(e.clone());
            core.insert(e.iter().map(|&c| -c).collect());
        }
        let add = |a: &[i32], b: &[i32]| -> Vec<i32> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
        let mut core_sums = BTreeSet::new();
        for a in &core {
            for b in &core {
                let s = add(a, b);
                if a != b && !full.contains(&s) {
                    return Err(StencilError::CoreCondition(format!("{a:?} + {b:?} = {s:?} is not a direction")));
                }
                core_sums.insert(s);
            }
        }
        if let Some(missing) = full.iter().find(|e| !core_sums.contains(*e)) {
            return Err(StencilError::CoreCondition(format!(
                "direction {missing:?} is not a sum of two core directions"
            )));
        }
        Ok(())
    }
}

fn integer_rank(vectors: &[Vec<i32>], dim: usize) -> usize {
    let mut rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().map(|&c| f64::from(c)).collect()).collect();
    let mut rank = 0;
    for col in 0..dim {
        let Some(p) = (rank..rows.len()).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs())) else {
            break;
        };
        if rows[p][col].abs() < 1e-9 {
            continue;
        }
        rows.swap(rank, p);
        for r in rank + 1..rows.len() {
            let m = rows[r][col] / rows[rank][col];
            for c in col..dim {
                rows[r][c] -= m * rows[rank][c];
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_2d() {
        let d = DirectionSet::canonical(2).unwrap();
        assert_eq!(d.d1(), 4);
        // zero offset plus the eight signed ones
        assert_eq!(1 + d.n_signed(), 9);
        assert_eq!(d.offsets()[2], vec![1, 1]);
        assert_eq!(d.offsets()[3], vec![1, -1]);
        assert_eq!(d.reach(), 1);
        assert_eq!(d.offset(0).unwrap(), vec![0, 0]);
        assert_eq!(d.offset(-3).unwrap(), vec![-1, -1]);
    }

    #[test]
    fn canonical_core_sums_contain_diagonal() {
        let d = DirectionSet::canonical(2).unwrap();
        let core: Vec<&Vec<i32>> = d.core_indices().unwrap().iter().map(|&i| &d.offsets()[i]).collect();
        let sum: Vec<i32> = core[0].iter().zip(core[1]).map(|(a, b)| a + b).collect();
        assert_eq!(sum, vec![1, 1]);
    }

    #[test]
    fn canonical_3d_counts_pairs() {
        // 3 axes plus C(3,2) = 3 pairs with both relative signs
        let expected = 3 + (0..3).flat_map(|i| (i + 1..3).map(move |_| 2)).sum::<usize>();
        let d = DirectionSet::canonical(3).unwrap();
        assert_eq!(d.d1(), expected);
        assert_eq!(d.d1(), 9);
    }

    #[test]
    fn unsupported_dimension() {
        assert_eq!(DirectionSet::canonical(4), Err(StencilError::UnsupportedDimension(4)));
        assert_eq!(DirectionSet::canonical(1), Err(StencilError::UnsupportedDimension(1)));
    }

    #[test]
    fn slots_follow_sign_layout() {
        let d = DirectionSet::canonical(2).unwrap();
        assert_eq!(d.slot(1).unwrap(), 0);
        assert_eq!(d.slot(-1).unwrap(), 1);
        assert_eq!(d.slot(4).unwrap(), 6);
        assert_eq!(d.slot(-4).unwrap(), 7);
        assert!(d.slot(0).is_err());
        assert!(d.slot(5).is_err());
        let s = d.signed_offsets();
        for k in 1..=4isize {
            assert_eq!(s[d.slot(k).unwrap()], d.offset(k).unwrap());
            assert_eq!(s[d.slot(-k).unwrap()], d.offset(-k).unwrap());
        }
    }

    #[test]
    fn rejects_malformed_sets() {
        assert_eq!(DirectionSet::new(2, vec![vec![1, 0], vec![0, 0]], None), Err(StencilError::ZeroOffset(1)));
        assert_eq!(DirectionSet::new(2, vec![vec![1, 0], vec![-1, 0]], None), Err(StencilError::Duplicate(1)));
        assert_eq!(
            DirectionSet::new(2, vec![vec![1, 1], vec![2, 2]], None),
            Err(StencilError::RankDeficient { rank: 1, dim: 2 })
        );
        assert!(matches!(DirectionSet::new(2, vec![vec![1, 0, 0]], None), Err(StencilError::WrongLength { .. })));
    }

    #[test]
    fn core_condition_detects_missing_sums() {
        // axes as core but no diagonals: e1 + e2 is not a direction
        let err = DirectionSet::new(2, vec![vec![1, 0], vec![0, 1]], Some(vec![0, 1])).unwrap_err();
        assert!(matches!(err, StencilError::CoreCondition(_)));
        // a direction that is not a sum of two core members
        let err =
            DirectionSet::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1], vec![2, 1]], Some(vec![0, 1]))
                .unwrap_err();
        assert!(matches!(err, StencilError::CoreCondition(_)));
    }

    #[test]
    fn serde_validates() {
        let d = DirectionSet::canonical(3).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<DirectionSet>(&json).unwrap(), d);
        let bad = r#"{"dim":2,"offsets":[[1,0],[2,0]]}"#;
        assert!(serde_json::from_str::<DirectionSet>(bad).is_err());
    }
}
