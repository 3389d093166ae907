use serde::Serialize;

use super::operator::evaluate_raw;
use super::{GridFunction, SchemeCache};
use crate::scalar::Scalar;

/// Both sides of the discrete comparison inequality
/// `sup (v' - v'')_+ <= c_min^{-1} sup_interior (H[v''] - H[v'])_+ + sup_band (v' - v'')_+`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub lhs: f64,
    pub rhs: f64,
    pub interior_term: f64,
    pub band_term: f64,
    pub delta: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub passed: bool,
}

pub const COMPARISON_SLACK: f64 = 1e-12;

pub fn comparison_check<T: Scalar>(
    cache: &SchemeCache<T>,
    v1: &GridFunction<T>,
    v2: &GridFunction<T>,
) -> ComparisonReport {
    let (h1, _) = evaluate_raw(cache, v1.values());
    let (h2, _) = evaluate_raw(cache, v2.values());
    let pos = |x: T| x.max(T::zero());
    let lhs = v1.values().iter().zip(v2.values()).fold(T::zero(), |m, (&a, &b)| m.max(pos(a - b)));
    let interior = h1.iter().zip(&h2).fold(T::zero(), |m, (&a, &b)| m.max(pos(b - a)));
    let band = cache.band().iter().fold(T::zero(), |m, &(s, _)| m.max(pos(v1.value(s) - v2.value(s))));
    let delta = cache.c_min();
    let scaled = if interior.is_zero() {
        T::zero()
    } else if delta.is_zero() {
        T::infinity()
    } else {
        interior / delta
    };
    let rhs = scaled + band;
    ComparisonReport {
        lhs: lhs.as_f64(),
        rhs: rhs.as_f64(),
        interior_term: interior.as_f64(),
        band_term: band.as_f64(),
        delta: delta.as_f64(),
        slack: (rhs - lhs).as_f64(),
        passed: lhs.as_f64() <= rhs.as_f64() + COMPARISON_SLACK,
    }
}

/// Sup bounds of a solution in terms of `H_h[0]` and the band data:
/// `sup v_+ <= c_min^{-1} sup (H[0])_+ + sup g_+` and the mirror bound for `v_-`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AprioriReport {
    pub sup_positive: f64,
    pub upper_bound: f64,
    pub sup_negative: f64,
    pub lower_bound: f64,
    pub upper_margin: f64,
    pub lower_margin: f64,
    /// Allowance for an inexact solve: `10 tol / c_min`.
    pub allowance: f64,
    pub passed: bool,
}

pub fn apriori_bound_check<T: Scalar>(cache: &SchemeCache<T>, v: &GridFunction<T>, tol: T) -> AprioriReport {
    let zero = GridFunction::zeros(v.grid_arc().clone());
    let (h0, _) = evaluate_raw(cache, zero.values());
    let delta = cache.c_min();
    let (mut hp, mut hn) = (T::zero(), T::zero());
    for &x in &h0 {
        hp = hp.max(x);
        hn = hn.max(-x);
    }
    let (mut gp, mut gn) = (T::zero(), T::zero());
    for &(_, g) in cache.band() {
        gp = gp.max(g);
        gn = gn.max(-g);
    }
    let scale = |x: T| {
        if x.is_zero() {
            T::zero()
        } else if delta.is_zero() {
            T::infinity()
        } else {
            x / delta
        }
    };
    let (mut vp, mut vn) = (T::zero(), T::zero());
    for &x in v.values() {
        vp = vp.max(x);
        vn = vn.max(-x);
    }
    let upper = scale(hp) + gp;
    let lower = scale(hn) + gn;
    let allowance = scale(T::lit(10.0) * tol);
    AprioriReport {
        sup_positive: vp.as_f64(),
        upper_bound: upper.as_f64(),
        sup_negative: vn.as_f64(),
        lower_bound: lower.as_f64(),
        upper_margin: (upper - vp).as_f64(),
        lower_margin: (lower - vn).as_f64(),
        allowance: allowance.as_f64(),
        passed: vp <= upper + allowance && vn <= lower + allowance,
    }
}
