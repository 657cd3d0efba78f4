//! Phase-one simplex for feasibility of `A x = b, x >= 0`, generic over the
//! scalar field so the same code runs in `f64` and in exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic the tableau needs. `is_positive` and `is_negative` carry the
/// pivoting tolerance (zero for exact fields).
pub trait Scalar:
    Clone + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_exact_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
}

/// Pivot tolerance of the floating tableau.
pub const FLOAT_EPS: f64 = 1e-12;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational value of a float that is an integer multiple of `2^-bits`.
pub fn dyadic(x: f64, bits: i32) -> Option<BigRational> {
    let scaled = x * 2f64.powi(bits);
    if !scaled.is_finite() || scaled.fract() != 0.0 || scaled.abs() >= 2f64.powi(63) {
        return None;
    }
    Some(BigRational::new(BigInt::from(scaled as i64), BigInt::from(1) << bits as usize))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOne<T> {
    /// Basic solution at the phase-one optimum; feasible for `A x = b`
    /// exactly when `infeasibility` is zero.
    pub point: Vec<T>,
    /// Optimal phase-one objective `Σ artificials`.
    pub infeasibility: T,
    /// Dual vector `y` with `A^T y <= 0` and `b^T y = infeasibility`.
    pub dual: Vec<T>,
}

/// Minimizes the sum of artificial variables for `A x = b, x >= 0` with
/// `b >= 0`, using Bland's rule. `a` is row-major `m × n`.
pub fn phase_one<T: Scalar>(a: &[Vec<T>], b: &[T]) -> PhaseOne<T> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let width = n + m + 1;
    // Tableau rows: [A | I | b]; objective row holds reduced costs.
    let mut t: Vec<Vec<T>> = (0..m)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..m).map(|j| if i == j { T::one() } else { T::zero() }));
            row.push(b[i].clone());
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Reduced costs of phase one: c_j - 1^T A_j for structurals, 0 for artificials.
    let mut obj: Vec<T> = vec![T::zero(); width];
    for row in &t {
        for j in 0..n {
            obj[j] = obj[j].clone() - row[j].clone();
        }
        obj[width - 1] = obj[width - 1].clone() - row[width - 1].clone();
    }
    loop {
        let Some(enter) = (0..n + m).find(|&j| obj[j].is_negative()) else { break };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = t[i][width - 1].clone() / t[i][enter].clone();
                let better = match &leave {
                    None => true,
                    Some((l, r)) => ratio < *r || (ratio == *r && basis[i] < basis[*l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { break };
        let p = t[r][enter].clone();
        for v in t[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[enter].is_exact_zero() {
                let f = row[enter].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        let f = obj[enter].clone();
        for (v, pv) in obj.iter_mut().zip(&pivot_row) {
            *v = v.clone() - f.clone() * pv.clone();
        }
        basis[r] = enter;
    }
    let infeasibility = -obj[width - 1].clone();
    // Artificial i has cost 1, so its reduced cost is 1 - y_i.
    let dual: Vec<T> = (0..m).map(|i| T::one() - obj[n + i].clone()).collect();
    let mut point = vec![T::zero(); n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            point[j] = t[i][width - 1].clone();
        }
    }
    PhaseOne { point, infeasibility, dual }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn feasible_transport() {
        // x11 + x12 = 1/2, x21 + x22 = 1/2, x11 + x21 = 1/4, x12 + x22 = 3/4.
        let a = vec![
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
        ];
        let r = phase_one(&a, &[0.5, 0.5, 0.25, 0.75]);
        assert!(r.infeasibility.abs() < 1e-12);
        let x = r.point;
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((x[0] + x[1] - 0.5).abs() < 1e-12 && (x[1] + x[3] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn exact_infeasibility_certificate() {
        // x1 + x2 = 1 and x1 + x2 = 2 cannot both hold.
        let a = vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]];
        let b = vec![q(1, 1), q(2, 1)];
        let r = phase_one(&a, &b);
        assert_eq!(r.infeasibility, q(1, 1));
        for j in 0..2 {
            let s = a[0][j].clone() * r.dual[0].clone() + a[1][j].clone() * r.dual[1].clone();
            assert!(!Scalar::is_positive(&s));
        }
        let by = b[0].clone() * r.dual[0].clone() + b[1].clone() * r.dual[1].clone();
        assert_eq!(by, r.infeasibility);
    }

    #[test]
    fn redundant_rows_are_harmless() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(phase_one(&a, &[1.0, 1.0, 2.0]).infeasibility.abs() < 1e-12);
    }

    #[test]
    fn dyadic_detection() {
        assert_eq!(dyadic(0.375, 30), Some(q(3, 8)));
        assert_eq!(dyadic(0.1, 30), None);
    }
}
