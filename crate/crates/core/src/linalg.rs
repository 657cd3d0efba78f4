//! Dense complex linear algebra shared by the kernel modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest `|m[i][j] - conj(m[j][i])|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Determinant. Orders up to 3 use the closed forms, larger ones a
/// partially pivoted LU factorization.
pub fn det(m: &CMatrix) -> C64 {
    match m.nrows() {
        0 => ONE,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => det_lu(m),
    }
}

/// Determinant through partially pivoted LU, for every order.
pub fn det_lu(m: &CMatrix) -> C64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut d = ONE;
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, a[(i, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot == 0.0 {
            return ZERO;
        }
        if p != k {
            a.swap_rows(p, k);
            d = -d;
        }
        let akk = a[(k, k)];
        d *= akk;
        for i in (k + 1)..n {
            let f = a[(i, k)] / akk;
            if f != ZERO {
                for j in (k + 1)..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
    }
    d
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// in descending order and eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    // Symmetrize so the solver only ever sees an exactly Hermitian input.
    let h = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100_000).ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// `Σ λ_k v_k v_k*`.
pub fn reconstruct(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        for j in 0..n {
            let vj = v[j].conj() * lambda;
            for i in 0..n {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    out
}

/// Inner product `<a, b> = Σ a_i conj(b_i)`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Removes from `v` its components along the orthonormal vectors in `basis`,
/// running modified Gram–Schmidt twice.
pub fn deflate(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for e in basis {
            let coef = inner(v, e);
            for (x, y) in v.iter_mut().zip(e) {
                *x -= coef * y;
            }
        }
    }
}

/// Orthonormal basis for the span of `vectors`. A vector is dropped when its
/// orthogonalized norm falls below `rel_tol` times its original norm.
pub fn orthonormalize(vectors: &[Vec<C64>], rel_tol: f64) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        let original = norm_sqr(v).sqrt();
        if original == 0.0 {
            continue;
        }
        let mut w = v.clone();
        deflate(&mut w, &basis);
        let r = norm_sqr(&w).sqrt();
        if r > rel_tol * original {
            w.iter_mut().for_each(|x| *x /= r);
            basis.push(w);
        }
    }
    basis
}

/// `Σ_k b_k b_k*` for orthonormal vectors `b_k`.
pub fn projector(basis: &[Vec<C64>], n: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for b in basis {
        for j in 0..n {
            let bj = b[j].conj();
            for i in 0..n {
                p[(i, j)] += b[i] * bj;
            }
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn closed_forms_agree_with_lu() {
        for n in 1..=3 {
            for seed in 0..20 {
                let m = random_matrix(n, seed);
                assert!((det(&m) - det_lu(&m)).norm() < 1e-13, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn lu_handles_singular_and_permuted() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        assert!(det_lu(&m).norm() < 1e-15);
        let p = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!((det_lu(&p) + ONE).norm() < 1e-15);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.3), ZERO, ZERO, c(0.7)]);
        let (vals, vecs) = hermitian_eigen(&m).unwrap();
        assert!((vals[0] - 0.7).abs() < 1e-15 && (vals[1] - 0.3).abs() < 1e-15);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormalize_drops_dependent_vectors() {
        let v = vec![vec![ONE, ZERO], vec![c(2.0), ZERO], vec![ONE, ONE]];
        let b = orthonormalize(&v, 1e-10);
        assert_eq!(b.len(), 2);
        assert!(inner(&b[0], &b[1]).norm() < 1e-15);
    }
}
