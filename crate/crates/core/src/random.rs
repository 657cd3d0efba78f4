//! Random kernels for tests, scans and benchmarks: eigenvalues i.i.d.
//! uniform on [0, 1] and eigenbases from orthonormalized complex Gaussian
//! matrices.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::kernel::{ContractionKernel, ProjectionKernel};
use crate::linalg::{reconstruct, CMatrix, C64};

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn hermitize(m: CMatrix) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// `U diag(λ) U*` for a Haar unitary `U`.
pub fn contraction_with_spectrum<R: Rng + ?Sized>(spectrum: &[f64], rng: &mut R) -> ContractionKernel {
    let u = random_unitary(spectrum.len(), rng);
    ContractionKernel::from_matrix(hermitize(reconstruct(spectrum, &u))).expect("spectrum lies in [0, 1]")
}

pub fn random_contraction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ContractionKernel {
    let spectrum: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    contraction_with_spectrum(&spectrum, rng)
}

/// Projection onto the span of the first `rank` columns of a Haar unitary.
pub fn random_projection<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> ProjectionKernel {
    let u = random_unitary(n, rng);
    projection_onto_columns(&u, 0..rank)
}

/// Projection onto the span of the selected columns of a unitary.
pub fn projection_onto_columns(u: &CMatrix, cols: impl IntoIterator<Item = usize>) -> ProjectionKernel {
    let n = u.nrows();
    let mut spectrum = vec![0.0; n];
    cols.into_iter().for_each(|k| spectrum[k] = 1.0);
    let p = hermitize(reconstruct(&spectrum, u));
    ProjectionKernel::certify(ContractionKernel::from_matrix(p).expect("projector is a contraction"))
        .expect("projector certifies")
}

/// Projections `P1 <= P2` onto nested random subspaces of ranks `r1 <= r2`.
pub fn random_nested_projections<R: Rng + ?Sized>(
    n: usize,
    r1: usize,
    r2: usize,
    rng: &mut R,
) -> (ProjectionKernel, ProjectionKernel) {
    assert!(r1 <= r2 && r2 <= n);
    let u = random_unitary(n, rng);
    (projection_onto_columns(&u, 0..r1), projection_onto_columns(&u, 0..r2))
}

/// Contractions `0 <= Q1 <= Q2 <= I`: `Q1 = Q2^{1/2} C Q2^{1/2}` for a
/// random contraction `C`.
pub fn random_ordered_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (ContractionKernel, ContractionKernel) {
    let q2 = random_contraction(n, rng);
    let c = random_contraction(n, rng);
    let s = q2.spectrum();
    let roots: Vec<f64> = s.eigenvalues.iter().map(|l| l.sqrt()).collect();
    let half = reconstruct(&roots, &s.eigenvectors);
    let q1 = hermitize(&half * c.kernel().entries() * &half);
    let q1 = ContractionKernel::from_matrix(q1).expect("compression of a contraction is a contraction");
    (q1, q2)
}

/// Random projections with orthogonal ranges of ranks `r1`, `r2`.
pub fn random_orthogonal_pair<R: Rng + ?Sized>(
    n: usize,
    r1: usize,
    r2: usize,
    rng: &mut R,
) -> (ProjectionKernel, ProjectionKernel) {
    assert!(r1 + r2 <= n);
    let u = random_unitary(n, rng);
    (projection_onto_columns(&u, 0..r1), projection_onto_columns(&u, r1..r1 + r2))
}
