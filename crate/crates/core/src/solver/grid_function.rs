use std::fmt;
use std::sync::Arc;

use crate::lattice::{Grid, NodeClass};
use crate::scalar::Scalar;

/// One value per valued (interior or band) node of a grid.
#[derive(Clone)]
pub struct GridFunction<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Scalar> fmt::Debug for GridFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction").field("h", &self.grid.h()).field("nodes", &self.values.len()).finish()
    }
}

impl<T: Scalar> GridFunction<T> {
    /// Panics when `values` does not have one entry per valued node.
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Self {
        assert_eq!(values.len(), grid.n_valued(), "one value per valued node");
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let n = grid.n_valued();
        GridFunction { grid, values: vec![T::zero(); n] }
    }

    /// Samples `f` at every valued node.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.n_valued()).map(|s| f(&grid.coords(s))).collect();
        GridFunction { grid, values }
    }

    /// `interior` on interior nodes and `band` on band nodes.
    pub fn from_parts(grid: Arc<Grid<T>>, interior: impl Fn(&[T]) -> T, band: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.n_valued())
            .map(|s| {
                let x = grid.coords(s);
                match grid.class(s) {
                    NodeClass::Interior => interior(&x),
                    _ => band(&x),
                }
            })
            .collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn value(&self, slot: usize) -> T {
        self.values[slot]
    }

    /// Value at an integer index, `None` for unused nodes.
    pub fn value_at(&self, index: &[i64]) -> Option<T> {
        self.grid.slot_of(index).map(|s| self.values[s])
    }

    /// Sup-norm distance over all valued nodes.
    pub fn sup_diff(&self, other: &Self) -> T {
        crate::scalar::sup_diff(&self.values, &other.values)
    }

    /// Sup-norm distance over interior nodes.
    pub fn sup_diff_interior(&self, other: &Self) -> T {
        self.grid.interior_slots().iter().fold(T::zero(), |m, &s| m.max((self.values[s] - other.values[s]).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
