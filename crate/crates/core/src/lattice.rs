//! Computational lattice inside a level-set domain.
//!
//! Nodes live on `h Z^d` (origin at zero). A node is *interior* when it and
//! all of its stencil neighbors `x ± h e_k` lie in `{psi > 0}`; the *boundary
//! band* is every non-interior node one stencil step away from an interior
//! node. Only those two classes carry values; the boundary data is imposed on
//! the band and everything else is left unused.

mod dump;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{norm, Scalar};
use crate::stencil::DirectionSet;

pub use dump::{parse_dump, write_dump, DumpNode, GridDump};

/// Scalar field on `R^d`.
pub type Field<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Wraps a closure as a [`Field`].
pub fn field<T, F>(f: F) -> Field<T>
where
    F: Fn(&[T]) -> T + Send + Sync + 'static,
{
    Arc::new(f)
}

/// Refuse to allocate lattices beyond this many nodes.
const MAX_BOX_NODES: usize = 1 << 27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("mesh step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("dimension mismatch: domain has {domain}, directions have {directions}")]
    DimensionMismatch { domain: usize, directions: usize },
    #[error("bounding box is not finite")]
    UnboundedBox,
    #[error("no interior node at h = {0}; refine the mesh")]
    EmptyInterior(f64),
    #[error("index box of {0} nodes is too large")]
    TooLarge(usize),
    #[error("domain invariant violated: {0}")]
    Invariant(String),
    #[error("line {line}: {msg}")]
    DumpParse { line: usize, msg: String },
}

/// Level-set domain `{psi > 0}` with a bounding box.
#[derive(Clone)]
pub struct Domain<T> {
    name: String,
    psi: Field<T>,
    bounding_box: Vec<(T, T)>,
    exact_distance: Option<Field<T>>,
    grad_bound: T,
}

impl<T: Scalar> fmt::Debug for Domain<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("name", &self.name)
            .field("bounding_box", &self.bounding_box)
            .field("exact_distance", &self.exact_distance.is_some())
            .finish()
    }
}

impl<T: Scalar> Domain<T> {
    pub fn new(name: impl Into<String>, psi: Field<T>, bounding_box: Vec<(T, T)>) -> Self {
        let grad_bound = sampled_gradient_bound(&psi, &bounding_box);
        Domain { name: name.into(), psi, bounding_box, exact_distance: None, grad_bound }
    }

    pub fn with_exact_distance(mut self, distance: Field<T>) -> Self {
        self.exact_distance = Some(distance);
        self
    }

    /// Disk of the given radius centered at the origin, `psi = r^2 - |x|^2`.
    pub fn disk(radius: T) -> Self {
        Self::ball(2, radius).renamed("disk")
    }

    /// Ball in `dim` dimensions centered at the origin.
    pub fn ball(dim: usize, radius: T) -> Self {
        let r2 = radius * radius;
        Domain::new(
            "ball",
            field(move |x: &[T]| r2 - x.iter().map(|&v| v * v).sum::<T>()),
            vec![(-radius, radius); dim],
        )
        .with_exact_distance(field(move |x: &[T]| (radius - norm(x)).max(T::zero())))
    }

    /// Axis-aligned ellipse `(x/a)^2 + (y/b)^2 < 1`. No closed-form distance.
    pub fn ellipse(a: T, b: T) -> Self {
        Domain::new(
            "ellipse",
            field(move |x: &[T]| T::one() - (x[0] / a).powi(2) - (x[1] / b).powi(2)),
            vec![(-a, a), (-b, b)],
        )
    }

    fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.bounding_box.len()
    }

    pub fn psi(&self, x: &[T]) -> T {
        (self.psi)(x)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.psi(x) > T::zero()
    }

    pub fn bounding_box(&self) -> &[(T, T)] {
        &self.bounding_box
    }

    pub fn has_exact_distance(&self) -> bool {
        self.exact_distance.is_some()
    }

    /// Sampled-maximum of `|grad psi|` over the bounding box.
    pub fn gradient_bound(&self) -> T {
        self.grad_bound
    }

    /// Rejection-sampling check of the box and distance invariants.
    pub fn check_invariants(&self, samples: usize, seed: u64) -> Result<(), LatticeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            // sample a box twice as wide as the bounding box
            let x: Vec<T> = self
                .bounding_box
                .iter()
                .map(|&(lo, hi)| {
                    let (lo, hi) = (lo.as_f64(), hi.as_f64());
                    let pad = 0.5 * (hi - lo);
                    T::lit(rng.random_range(lo - pad..hi + pad))
                })
                .collect();
            let inside_box = x.iter().zip(&self.bounding_box).all(|(&v, &(lo, hi))| lo <= v && v <= hi);
            let positive = self.contains(&x);
            if positive && !inside_box {
                return Err(LatticeError::Invariant(format!("psi > 0 outside the bounding box at {x:?}")));
            }
            if let Some(dist) = &self.exact_distance {
                let d = dist(&x);
                if positive != (d > T::zero()) {
                    return Err(LatticeError::Invariant(format!("distance {d} disagrees with psi sign at {x:?}")));
                }
            }
        }
        Ok(())
    }
}

fn sampled_gradient_bound<T: Scalar>(psi: &Field<T>, bbox: &[(T, T)]) -> T {
    let dim = bbox.len();
    let per_axis: usize = match dim {
        0 | 1 => 401,
        2 => 121,
        _ => 31,
    };
    let side = bbox.iter().fold(T::zero(), |m, &(lo, hi)| m.max(hi - lo));
    let step = side * T::lit(1e-3);
    let total = per_axis.pow(dim as u32);
    let mut best = T::zero();
    let mut x = vec![T::zero(); dim];
    for n in 0..total {
        let mut rem = n;
        for (c, &(lo, hi)) in bbox.iter().enumerate() {
            let i = rem % per_axis;
            rem /= per_axis;
            x[c] = lo + (hi - lo) * T::from_int(i as i64) / T::from_int(per_axis as i64 - 1);
        }
        let mut g2 = T::zero();
        for c in 0..dim {
            let mut p = x.clone();
            let mut m = x.clone();
            p[c] += step;
            m[c] -= step;
            let d = (psi(&p) - psi(&m)) / (step + step);
            g2 += d * d;
        }
        best = best.max(g2.sqrt());
    }
    if best > T::zero() {
        best
    } else {
        T::one()
    }
}

/// `dist(x, complement of the domain)`.
///
/// Exact when the domain carries a distance function; otherwise
/// `max(psi, 0) / max|grad psi|`, a lower estimate that is only used for
/// diagnostics.
pub fn distance_to_complement<T: Scalar>(domain: &Domain<T>, x: &[T]) -> T {
    if !domain.contains(x) {
        return T::zero();
    }
    match &domain.exact_distance {
        Some(d) => d(x).max(T::zero()),
        None => domain.psi(x).max(T::zero()) / domain.grad_bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    BoundaryBand,
    Unused,
}

impl NodeClass {
    pub fn tag(self) -> char {
        match self {
            NodeClass::Interior => 'I',
            NodeClass::BoundaryBand => 'B',
            NodeClass::Unused => 'U',
        }
    }
}

/// Rectangular index lattice with node classification.
///
/// Valued nodes (interior and band) are numbered by *slot* in lexicographic
/// index order. Interior nodes additionally have a *position* in
/// [`Grid::interior_slots`], and a neighbor table of `2 d1` slots per position
/// in the layout of [`DirectionSet::slot`].
#[derive(Clone)]
pub struct Grid<T> {
    h: T,
    domain: Domain<T>,
    directions: DirectionSet,
    lo: Vec<i64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    dense_slot: Vec<usize>,
    slot_index: Vec<i64>,
    slot_class: Vec<NodeClass>,
    interior: Vec<usize>,
    interior_pos: Vec<usize>,
    neighbors: Vec<usize>,
    reach: i64,
}

const NONE: usize = usize::MAX;

impl<T: Scalar> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("h", &self.h)
            .field("domain", &self.domain)
            .field("range", &self.index_range())
            .field("valued", &self.n_valued())
            .field("interior", &self.n_interior())
            .finish()
    }
}

/// Builds the lattice for `domain` at step `h`.
pub fn build_grid<T: Scalar>(domain: &Domain<T>, h: T, directions: &DirectionSet) -> Result<Grid<T>, LatticeError> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(LatticeError::InvalidStep(h.as_f64()));
    }
    let dim = domain.dim();
    if dim != directions.dim() {
        return Err(LatticeError::DimensionMismatch { domain: dim, directions: directions.dim() });
    }
    if domain.bounding_box().iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite()) {
        return Err(LatticeError::UnboundedBox);
    }
    let reach = directions.reach();
    let mut lo = Vec::with_capacity(dim);
    let mut shape = Vec::with_capacity(dim);
    for &(blo, bhi) in domain.bounding_box() {
        let l = (blo / h).floor().to_i64().ok_or(LatticeError::UnboundedBox)? - reach;
        let u = (bhi / h).ceil().to_i64().ok_or(LatticeError::UnboundedBox)? + reach;
        lo.push(l);
        shape.push((u - l + 1) as usize);
    }
    let total = shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).unwrap_or(usize::MAX);
    if total > MAX_BOX_NODES {
        return Err(LatticeError::TooLarge(total));
    }
    let mut strides = vec![1usize; dim];
    for c in (0..dim.saturating_sub(1)).rev() {
        strides[c] = strides[c + 1] * shape[c + 1];
    }

    let unravel = |mut n: usize| -> Vec<i64> {
        let mut idx = vec![0i64; dim];
        for c in 0..dim {
            idx[c] = lo[c] + (n / strides[c]) as i64;
            n %= strides[c];
        }
        idx
    };
    let ravel = |idx: &[i64]| -> Option<usize> {
        let mut n = 0usize;
        for c in 0..dim {
            let off = idx[c] - lo[c];
            if off < 0 || off >= shape[c] as i64 {
                return None;
            }
            n += off as usize * strides[c];
        }
        Some(n)
    };
    let point = |idx: &[i64]| -> Vec<T> { idx.iter().map(|&i| h * T::from_int(i)).collect() };

    let positive: Vec<bool> = (0..total).map(|n| domain.contains(&point(&unravel(n)))).collect();
    let signed = directions.signed_offsets();
    let step = |idx: &[i64], e: &[i32]| -> Vec<i64> { idx.iter().zip(e).map(|(&i, &o)| i + i64::from(o)).collect() };

    let mut class = vec![NodeClass::Unused; total];
    for n in 0..total {
        if !positive[n] {
            continue;
        }
        let idx = unravel(n);
        let all_inside = signed.iter().all(|e| ravel(&step(&idx, e)).is_some_and(|m| positive[m]));
        if all_inside {
            class[n] = NodeClass::Interior;
        }
    }
    for n in 0..total {
        if class[n] != NodeClass::Interior {
            continue;
        }
        let idx = unravel(n);
        for e in &signed {
            let m = ravel(&step(&idx, e)).expect("interior neighbors lie inside the index box");
            if class[m] == NodeClass::Unused {
                class[m] = NodeClass::BoundaryBand;
            }
        }
    }

    let mut dense_slot = vec![NONE; total];
    let mut slot_index = Vec::new();
    let mut slot_class = Vec::new();
    let mut interior = Vec::new();
    for n in 0..total {
        if class[n] == NodeClass::Unused {
            continue;
        }
        let s = slot_class.len();
        dense_slot[n] = s;
        slot_index.extend(unravel(n));
        slot_class.push(class[n]);
        if class[n] == NodeClass::Interior {
            interior.push(s);
        }
    }
    if interior.is_empty() {
        return Err(LatticeError::EmptyInterior(h.as_f64()));
    }
    let mut interior_pos = vec![NONE; slot_class.len()];
    let mut neighbors = Vec::with_capacity(interior.len() * signed.len());
    for (p, &s) in interior.iter().enumerate() {
        interior_pos[s] = p;
        let idx = &slot_index[s * dim..(s + 1) * dim];
        for e in &signed {
            let m = ravel(&step(idx, e)).expect("in box");
            neighbors.push(dense_slot[m]);
        }
    }

    Ok(Grid {
        h,
        domain: domain.clone(),
        directions: directions.clone(),
        lo,
        shape,
        strides,
        dense_slot,
        slot_index,
        slot_class,
        interior,
        interior_pos,
        neighbors,
        reach,
    })
}

impl<T: Scalar> Grid<T> {
    pub fn h(&self) -> T {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.directions
    }

    pub fn stencil_reach(&self) -> i64 {
        self.reach
    }

    /// Inclusive index range per axis.
    pub fn index_range(&self) -> Vec<(i64, i64)> {
        self.lo.iter().zip(&self.shape).map(|(&l, &n)| (l, l + n as i64 - 1)).collect()
    }

    /// Number of valued (interior + band) nodes.
    pub fn n_valued(&self) -> usize {
        self.slot_class.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Slots of interior nodes, lexicographic.
    pub fn interior_slots(&self) -> &[usize] {
        &self.interior
    }

    pub fn band_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_valued()).filter(|&s| self.slot_class[s] == NodeClass::BoundaryBand)
    }

    pub fn class(&self, slot: usize) -> NodeClass {
        self.slot_class[slot]
    }

    #[allow(clippy::should_implement_trait)]
    pub fn index(&self, slot: usize) -> &[i64] {
        let d = self.dim();
        &self.slot_index[slot * d..(slot + 1) * d]
    }

    /// Coordinates `h * index` of an integer index.
    pub fn point(&self, index: &[i64]) -> Vec<T> {
        index.iter().map(|&i| self.h * T::from_int(i)).collect()
    }

    pub fn coords(&self, slot: usize) -> Vec<T> {
        self.point(self.index(slot))
    }

    fn dense(&self, index: &[i64]) -> Option<usize> {
        if index.len() != self.dim() {
            return None;
        }
        let mut n = 0usize;
        for c in 0..self.dim() {
            let off = index[c] - self.lo[c];
            if off < 0 || off >= self.shape[c] as i64 {
                return None;
            }
            n += off as usize * self.strides[c];
        }
        Some(n)
    }

    /// Slot of a valued node.
    pub fn slot_of(&self, index: &[i64]) -> Option<usize> {
        self.dense(index).map(|n| self.dense_slot[n]).filter(|&s| s != NONE)
    }

    pub fn class_at(&self, index: &[i64]) -> NodeClass {
        self.slot_of(index).map_or(NodeClass::Unused, |s| self.slot_class[s])
    }

    pub fn interior_position(&self, slot: usize) -> Option<usize> {
        self.interior_pos.get(slot).copied().filter(|&p| p != NONE)
    }

    /// Neighbor slots of the interior node at `position`, in signed-slot layout.
    pub fn neighbors(&self, position: usize) -> &[usize] {
        let n = self.directions.n_signed();
        &self.neighbors[position * n..(position + 1) * n]
    }

    /// `dist(x, complement)` at a slot.
    pub fn rho(&self, slot: usize) -> T {
        distance_to_complement(&self.domain, &self.coords(slot))
    }

    /// Interior slots whose every chain of at most `depth` stencil steps stays
    /// in the domain. `depth = 1` reproduces the interior.
    pub fn classify_deep_interior(&self, depth: usize) -> Vec<usize> {
        let depth = depth.max(1);
        let sums = chain_offsets(&self.directions, depth);
        self.interior
            .iter()
            .copied()
            .filter(|&s| {
                let idx = self.index(s);
                sums.iter().all(|o| {
                    let q: Vec<i64> = idx.iter().zip(o).map(|(&i, &d)| i + d).collect();
                    self.domain.contains(&self.point(&q))
                })
            })
            .collect()
    }
}

/// All sums of at most `depth` signed offsets (including the empty sum).
pub(crate) fn chain_offsets(directions: &DirectionSet, depth: usize) -> Vec<Vec<i64>> {
    let signed: Vec<Vec<i64>> =
        directions.signed_offsets().into_iter().map(|e| e.into_iter().map(i64::from).collect()).collect();
    let mut all: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut frontier = vec![vec![0i64; directions.dim()]];
    all.insert(frontier[0].clone());
    for _ in 0..depth {
        let mut next = Vec::new();
        for f in &frontier {
            for e in &signed {
                let s: Vec<i64> = f.iter().zip(e).map(|(a, b)| a + b).collect();
                if all.insert(s.clone()) {
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    all.into_iter().collect()
}
