//! One-dimensional Taylor diagnostics for the difference quotients.
//!
//! For `phi` smooth along `l`,
//! `|D^2_l phi(x) - Delta_{h,l} phi(x)| <= h^2 sup_{|t|<=1} |D^4_l phi(x + t h l)|` and
//! `|D_l phi(x) - delta_{h,l} phi(x)| <= h sup_{t in [0,1]} |D^2_l phi(x + t h l)|`.
//! The checks below evaluate both sides of these inequalities.

use serde::Serialize;

use crate::scalar::Scalar;

/// A scalar field with analytic directional derivatives along arbitrary
/// (unnormalized) vectors `l`.
pub trait DirectionalJet<T: Scalar> {
    fn value(&self, x: &[T]) -> T;
    fn first(&self, x: &[T], l: &[T]) -> T;
    fn second(&self, x: &[T], l: &[T]) -> T;
    /// Upper bound for `|D^2_l phi|` on the segment `x + t r l`, `|t| <= 1`.
    fn second_sup(&self, x: &[T], l: &[T], r: T) -> T;
    /// Upper bound for `|D^4_l phi|` on the segment `x + t r l`, `|t| <= 1`.
    fn fourth_sup(&self, x: &[T], l: &[T], r: T) -> T;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaylorCheck<T> {
    pub measured_gap: T,
    pub certified_bound: T,
    /// Floating point error of the difference quotient itself.
    pub rounding: T,
}

impl<T: Scalar> TaylorCheck<T> {
    pub fn holds(&self) -> bool {
        self.measured_gap <= self.certified_bound + self.rounding
    }
}

fn shifted<T: Scalar>(x: &[T], l: &[T], s: T) -> Vec<T> {
    x.iter().zip(l).map(|(&xi, &li)| xi + s * li).collect()
}

/// Value error caused by rounding the coordinates of `x + s l`, `|s| <= r`:
/// `sum_i (|x_i| + r |l_i|) |d_i phi(x)|`, to be scaled by epsilon.
fn argument_error<T: Scalar>(phi: &dyn DirectionalJet<T>, x: &[T], l: &[T], r: T) -> T {
    let mut axis = vec![T::zero(); x.len()];
    let mut total = T::zero();
    for i in 0..x.len() {
        axis[i] = T::one();
        total += (x[i].abs() + r * l[i].abs()) * phi.first(x, &axis).abs();
        axis[i] = T::zero();
    }
    total
}

fn as_scalar<T: Scalar>(l: &[i32]) -> Vec<T> {
    l.iter().map(|&c| T::from_int(i64::from(c))).collect()
}

/// Second-difference consistency along the integer offset `l`.
pub fn taylor_consistency<T: Scalar>(phi: &dyn DirectionalJet<T>, x: &[T], l: &[i32], h: T) -> TaylorCheck<T> {
    let l = as_scalar(l);
    let (p, c, m) = (phi.value(&shifted(x, &l, h)), phi.value(x), phi.value(&shifted(x, &l, -h)));
    let quotient = (p - c - c + m) / (h * h);
    let eps = T::epsilon() * T::lit(8.0);
    TaylorCheck {
        measured_gap: (quotient - phi.second(x, &l)).abs(),
        certified_bound: h * h * phi.fourth_sup(x, &l, h),
        rounding: eps * (p.abs() + T::lit(2.0) * c.abs() + m.abs() + T::lit(4.0) * argument_error(phi, x, &l, h))
            / (h * h)
            + eps * phi.second(x, &l).abs(),
    }
}

/// Forward-difference consistency along the integer offset `l`.
pub fn forward_consistency<T: Scalar>(phi: &dyn DirectionalJet<T>, x: &[T], l: &[i32], h: T) -> TaylorCheck<T> {
    let l = as_scalar(l);
    let (p, c) = (phi.value(&shifted(x, &l, h)), phi.value(x));
    let eps = T::epsilon() * T::lit(8.0);
    TaylorCheck {
        measured_gap: ((p - c) / h - phi.first(x, &l)).abs(),
        certified_bound: h * phi.second_sup(x, &l, h),
        rounding: eps * (p.abs() + c.abs() + T::lit(2.0) * argument_error(phi, x, &l, h)) / h
            + eps * phi.first(x, &l).abs(),
    }
}

/// `x^T Q x + q . x + q0`.
#[derive(Clone, Debug)]
pub struct Paraboloid<T> {
    pub quad: Vec<Vec<T>>,
    pub linear: Vec<T>,
    pub constant: T,
}

impl<T: Scalar> Paraboloid<T> {
    /// `|x|^2` in `dim` dimensions.
    pub fn norm_squared(dim: usize) -> Self {
        let quad = (0..dim).map(|i| (0..dim).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
        Paraboloid { quad, linear: vec![T::zero(); dim], constant: T::zero() }
    }

    fn quad_form(&self, u: &[T], w: &[T]) -> T {
        let mut s = T::zero();
        for (i, row) in self.quad.iter().enumerate() {
            for (j, &q) in row.iter().enumerate() {
                s += u[i] * q * w[j];
            }
        }
        s
    }
}

impl<T: Scalar> DirectionalJet<T> for Paraboloid<T> {
    fn value(&self, x: &[T]) -> T {
        self.quad_form(x, x) + self.linear.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() + self.constant
    }

    fn first(&self, x: &[T], l: &[T]) -> T {
        self.quad_form(x, l) + self.quad_form(l, x) + self.linear.iter().zip(l).map(|(&a, &b)| a * b).sum::<T>()
    }

    fn second(&self, _x: &[T], l: &[T]) -> T {
        T::lit(2.0) * self.quad_form(l, l)
    }

    fn second_sup(&self, x: &[T], l: &[T], _r: T) -> T {
        self.second(x, l).abs()
    }

    fn fourth_sup(&self, _x: &[T], _l: &[T], _r: T) -> T {
        T::zero()
    }
}

/// `x_axis^4`.
#[derive(Clone, Copy, Debug)]
pub struct QuarticAxis {
    pub axis: usize,
}

impl<T: Scalar> DirectionalJet<T> for QuarticAxis {
    fn value(&self, x: &[T]) -> T {
        x[self.axis].powi(4)
    }

    fn first(&self, x: &[T], l: &[T]) -> T {
        T::lit(4.0) * x[self.axis].powi(3) * l[self.axis]
    }

    fn second(&self, x: &[T], l: &[T]) -> T {
        T::lit(12.0) * (x[self.axis] * l[self.axis]).powi(2)
    }

    fn second_sup(&self, x: &[T], l: &[T], r: T) -> T {
        let reach = x[self.axis].abs() + r * l[self.axis].abs();
        T::lit(12.0) * (reach * l[self.axis]).powi(2)
    }

    fn fourth_sup(&self, _x: &[T], l: &[T], _r: T) -> T {
        T::lit(24.0) * l[self.axis].powi(4)
    }
}

/// `sin(freq * x_axis)`.
#[derive(Clone, Copy, Debug)]
pub struct SineAxis<T> {
    pub axis: usize,
    pub freq: T,
}

impl<T: Scalar> SineAxis<T> {
    fn sin_sup(&self, x: &[T], l: &[T], r: T) -> T {
        // |sin| is 1-Lipschitz and bounded by one
        let arg = self.freq * x[self.axis];
        (arg.sin().abs() + self.freq.abs() * r * l[self.axis].abs()).min(T::one())
    }
}

impl<T: Scalar> DirectionalJet<T> for SineAxis<T> {
    fn value(&self, x: &[T]) -> T {
        (self.freq * x[self.axis]).sin()
    }

    fn first(&self, x: &[T], l: &[T]) -> T {
        self.freq * l[self.axis] * (self.freq * x[self.axis]).cos()
    }

    fn second(&self, x: &[T], l: &[T]) -> T {
        -(self.freq * l[self.axis]).powi(2) * (self.freq * x[self.axis]).sin()
    }

    fn second_sup(&self, x: &[T], l: &[T], r: T) -> T {
        (self.freq * l[self.axis]).powi(2) * self.sin_sup(x, l, r)
    }

    fn fourth_sup(&self, x: &[T], l: &[T], r: T) -> T {
        (self.freq * l[self.axis]).powi(4) * self.sin_sup(x, l, r)
    }
}

/// `prod_i sin(freq * x_i)`.
#[derive(Clone, Copy, Debug)]
pub struct SineProduct<T> {
    pub dim: usize,
    pub freq: T,
}

impl<T: Scalar> SineProduct<T> {
    /// Full Hessian, row-major.
    pub fn hessian(&self, x: &[T]) -> Vec<T> {
        let w = self.freq;
        let s: Vec<T> = x.iter().map(|&xi| (w * xi).sin()).collect();
        let c: Vec<T> = x.iter().map(|&xi| (w * xi).cos()).collect();
        let d = self.dim;
        let mut out = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut p = T::one();
                for m in 0..d {
                    let factor = if i == j && m == i {
                        -w * w * s[m]
                    } else if m == i || m == j {
                        w * c[m]
                    } else {
                        s[m]
                    };
                    p *= factor;
                }
                out[i * d + j] = p;
            }
        }
        out
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let w = self.freq;
        (0..self.dim)
            .map(|i| {
                (0..self.dim).fold(T::one(), |p, m| p * if m == i { w * (w * x[m]).cos() } else { (w * x[m]).sin() })
            })
            .collect()
    }

    fn l1(l: &[T]) -> T {
        l.iter().map(|v| v.abs()).sum()
    }
}

impl<T: Scalar> DirectionalJet<T> for SineProduct<T> {
    fn value(&self, x: &[T]) -> T {
        x.iter().fold(T::one(), |p, &xi| p * (self.freq * xi).sin())
    }

    fn first(&self, x: &[T], l: &[T]) -> T {
        self.gradient(x).iter().zip(l).map(|(&g, &li)| g * li).sum()
    }

    fn second(&self, x: &[T], l: &[T]) -> T {
        let hess = self.hessian(x);
        let d = self.dim;
        let mut s = T::zero();
        for i in 0..d {
            for j in 0..d {
                s += l[i] * hess[i * d + j] * l[j];
            }
        }
        s
    }

    fn second_sup(&self, _x: &[T], l: &[T], _r: T) -> T {
        (self.freq * Self::l1(l)).powi(2)
    }

    fn fourth_sup(&self, _x: &[T], l: &[T], _r: T) -> T {
        // every partial derivative of order m is bounded by freq^m
        (self.freq * Self::l1(l)).powi(4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let phi = Paraboloid { quad: vec![vec![1.0, 0.5], vec![0.5, -2.0]], linear: vec![0.25, -1.0], constant: 3.0 };
        for l in [[1, 0], [0, 1], [1, 1], [1, -1]] {
            let chk = taylor_consistency(&phi, &[0.5, -0.25], &l, 0.125);
            assert_eq!(chk.measured_gap, 0.0, "{l:?}");
            assert_eq!(chk.certified_bound, 0.0);
            assert!(chk.holds());
        }
    }

    #[test]
    fn quartic_at_origin() {
        let chk = taylor_consistency::<f64>(&QuarticAxis { axis: 0 }, &[0.0, 0.0], &[1, 0], 0.5);
        // (0.0625 + 0.0625) / 0.25 - 0
        assert_eq!(chk.measured_gap, 0.5);
        // h^2 * sup |D^4| = 0.25 * 24
        assert_eq!(chk.certified_bound, 6.0);
        assert!(chk.holds());
    }

    #[test]
    fn sine_gap_is_small() {
        let phi = SineAxis { axis: 0, freq: 1.0 };
        let chk = taylor_consistency::<f64>(&phi, &[0.0], &[1], 0.1);
        assert!(chk.measured_gap <= 0.01);
        assert!(chk.holds());
        // sin is odd, so the centered quotient vanishes at the origin
        assert!(chk.measured_gap < 1e-15);
        let off = taylor_consistency::<f64>(&phi, &[0.7], &[1], 0.1);
        assert!(off.measured_gap > 0.0 && off.measured_gap <= 0.01 && off.holds());
    }

    #[test]
    fn forward_difference_consistency() {
        let phi = SineProduct { dim: 2, freq: std::f64::consts::PI };
        for h in [0.2, 0.1, 0.05] {
            let chk = forward_consistency(&phi, &[0.3, 0.1], &[1, -1], h);
            assert!(chk.holds(), "{chk:?}");
        }
    }

    #[test]
    fn sine_product_hessian_matches_finite_differences() {
        let phi = SineProduct { dim: 3, freq: 2.0f64 };
        let x = [0.3, -0.2, 0.7];
        let hess = phi.hessian(&x);
        let e = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let at = |di: f64, dj: f64| {
                    let mut y = x;
                    y[i] += di;
                    y[j] += dj;
                    phi.value(&y)
                };
                let fd = (at(e, e) - at(e, -e) - at(-e, e) + at(-e, -e)) / (4.0 * e * e);
                assert!((fd - hess[i * 3 + j]).abs() < 1e-6, "{i}{j}");
            }
        }
    }
}
