//! Hermitian kernels over a finite ground set and the operations every
//! other module builds on: certification as a positive contraction,
//! spectra, projections, compressions, dilations and principal minors.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, hermitian_eigen, max_asymmetry, orthonormalize, projector, reconstruct, CMatrix, C64, ONE,
};

/// Tolerance used to certify spectra and projections.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Tolerance on `|K[i][j] - conj(K[j][i])|` for kernels built by this crate.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-14;
/// Largest ground set a dense kernel may live on.
pub const MAX_KERNEL_DIM: usize = 4096;
/// Relative drop tolerance for rank detection when orthogonalizing.
pub const RANK_DROP_TOL: f64 = 1e-10;

/// Ordered, duplicate-free element labels.
#[derive(Clone, PartialEq, Eq)]
pub struct GroundSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl GroundSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate label {l:?}")));
            }
        }
        Ok(GroundSet { labels, index })
    }

    /// Labels `1..=n`.
    pub fn numbered(n: usize) -> Self {
        GroundSet::new((1..=n).map(|i| i.to_string())).expect("numbered labels are distinct")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index.get(label).copied().ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    /// Errors with `UnknownLabel` when an index is out of range.
    pub fn check_indices(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.len()) {
            Some(i) => Err(Error::UnknownLabel(format!("#{i}"))),
            None => Ok(()),
        }
    }

    pub fn restrict(&self, idx: &[usize]) -> Result<GroundSet> {
        self.check_indices(idx)?;
        GroundSet::new(idx.iter().map(|&i| self.labels[i].clone()))
    }
}

impl fmt::Debug for GroundSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.labels).finish()
    }
}

/// Dense self-adjoint matrix indexed by a ground set.
#[derive(Clone, Debug)]
pub struct HermitianKernel {
    ground: GroundSet,
    entries: CMatrix,
    tol: f64,
}

impl HermitianKernel {
    pub fn new(ground: GroundSet, entries: CMatrix, tol: f64) -> Result<Self> {
        let n = ground.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels but a {}x{} matrix",
                n,
                entries.nrows(),
                entries.ncols()
            )));
        }
        if n > MAX_KERNEL_DIM {
            return Err(Error::GroundSetTooLarge { size: n, cap: MAX_KERNEL_DIM });
        }
        if !(tol >= 0.0) {
            return Err(Error::InvalidInput(format!("tolerance {tol} must be nonnegative")));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite kernel entry".into()));
        }
        let max_asymmetry = max_asymmetry(&entries);
        if max_asymmetry > tol {
            return Err(Error::NotHermitian { max_asymmetry, tol });
        }
        Ok(HermitianKernel { ground, entries, tol })
    }

    /// Kernel on labels `1..=n` from row-major real entries.
    pub fn from_real(n: usize, rows: &[f64]) -> Result<Self> {
        let m = CMatrix::from_row_iterator(n, n, rows.iter().map(|&x| c(x)));
        HermitianKernel::new(GroundSet::numbered(n), m, DEFAULT_SYMMETRY_TOL)
    }

    /// Kernel on labels `1..=n`; the matrix is symmetrized first.
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        let sym = CMatrix::from_fn(n, n, |i, j| (entries[(i, j)] + entries[(j, i)].conj()) * 0.5);
        HermitianKernel::new(GroundSet::numbered(n), sym, DEFAULT_SYMMETRY_TOL)
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.ground.len()
    }

    /// `det(K restricted to A)`; 1 for the empty set.
    pub fn principal_minor(&self, subset: &[usize]) -> Result<f64> {
        self.ground.check_indices(subset)?;
        Ok(linalg::det(&linalg::submatrix(&self.entries, subset)).re)
    }

    /// SHA-256 over the ground-set labels and the little-endian entry bytes.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for l in self.ground.labels() {
            h.update(l.as_bytes());
            h.update([0u8]);
        }
        for z in self.entries.iter() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// `principal_minor` as a free function.
pub fn principal_minor(kernel: &HermitianKernel, subset: &[usize]) -> Result<f64> {
    kernel.principal_minor(subset)
}

/// Eigenvalues in descending order with orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        reconstruct(&self.eigenvalues, &self.eigenvectors)
    }

    /// Frobenius distance between the reconstruction and `source`.
    pub fn reconstruction_error(&self, source: &CMatrix) -> f64 {
        linalg::frobenius(&(self.reconstruct() - source))
    }

    /// Frobenius distance between `V* V` and the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let g = v.adjoint() * v;
        linalg::frobenius(&(g - CMatrix::identity(v.ncols(), v.ncols())))
    }
}

/// A kernel certified to satisfy `0 <= K <= I`.
#[derive(Clone, Debug)]
pub struct ContractionKernel {
    kernel: HermitianKernel,
    spectrum: SpectralDecomposition,
    /// The original entries, or the clamped reconstruction when certification
    /// had to move an eigenvalue back into `[0, 1]`.
    working: CMatrix,
    tol: f64,
}

/// Certifies `kernel` as a positive contraction: every eigenvalue must lie in
/// `[-tol, 1 + tol]`. Eigenvalues are then clamped to `[0, 1]`.
pub fn validate_contraction(kernel: HermitianKernel, tol: f64) -> Result<ContractionKernel> {
    let max_asymmetry = max_asymmetry(kernel.entries());
    if max_asymmetry > tol.max(kernel.tol) {
        return Err(Error::NotHermitian { max_asymmetry, tol });
    }
    let (mut values, vectors) = hermitian_eigen(kernel.entries())?;
    if let Some(&bad) = values.iter().find(|&&l| l < -tol || l > 1.0 + tol) {
        return Err(Error::SpectrumOutOfRange { eigenvalue: bad, tol });
    }
    let mut clamped = false;
    for l in values.iter_mut() {
        if *l < 0.0 || *l > 1.0 {
            *l = l.clamp(0.0, 1.0);
            clamped = true;
        }
    }
    let spectrum = SpectralDecomposition { eigenvalues: values, eigenvectors: vectors };
    let working = if clamped {
        let r = spectrum.reconstruct();
        let n = r.nrows();
        CMatrix::from_fn(n, n, |i, j| (r[(i, j)] + r[(j, i)].conj()) * 0.5)
    } else {
        kernel.entries().clone()
    };
    Ok(ContractionKernel { kernel, spectrum, working, tol })
}

/// Spectral decomposition of a certified contraction.
pub fn spectral_decompose(q: &ContractionKernel) -> Result<SpectralDecomposition> {
    Ok(q.spectrum.clone())
}

impl ContractionKernel {
    pub fn new(kernel: HermitianKernel) -> Result<Self> {
        validate_contraction(kernel, DEFAULT_TOL)
    }

    /// Contraction on labels `1..=n` from row-major real entries.
    pub fn from_real(n: usize, rows: &[f64]) -> Result<Self> {
        ContractionKernel::new(HermitianKernel::from_real(n, rows)?)
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        ContractionKernel::new(HermitianKernel::from_matrix(m)?)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { C64::new(0.0, 0.0) });
        ContractionKernel::new(HermitianKernel::new(GroundSet::numbered(n), m, DEFAULT_SYMMETRY_TOL)?)
    }

    pub fn kernel(&self) -> &HermitianKernel {
        &self.kernel
    }

    pub fn ground(&self) -> &GroundSet {
        self.kernel.ground()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Matrix used for probability computations (see the field doc).
    pub fn matrix(&self) -> &CMatrix {
        &self.working
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.spectrum.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn principal_minor(&self, subset: &[usize]) -> Result<f64> {
        self.ground().check_indices(subset)?;
        Ok(linalg::det(&linalg::submatrix(&self.working, subset)).re)
    }
}

/// A certified orthogonal projection together with an orthonormal basis of its range.
#[derive(Clone, Debug)]
pub struct ProjectionKernel {
    contraction: ContractionKernel,
    rank: usize,
    /// `n x rank`, orthonormal columns spanning the range.
    basis: CMatrix,
}

impl ProjectionKernel {
    /// Certifies `q` as a projection: eigenvalues within `tol` of {0, 1},
    /// trace within `tol * n` of the rank and `|K^2 - K|_F <= tol`.
    pub fn certify(q: ContractionKernel) -> Result<Self> {
        let tol = q.tol;
        let n = q.dim();
        let values = q.eigenvalues();
        if let Some(&bad) = values.iter().find(|&&l| l > tol && l < 1.0 - tol) {
            return Err(Error::NotProjection(format!("eigenvalue {bad} is not 0 or 1")));
        }
        let rank = values.iter().filter(|&&l| l > 0.5).count();
        let m = q.kernel.entries();
        let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        if (trace - rank as f64).abs() > tol * (n.max(1) as f64) {
            return Err(Error::NotProjection(format!("trace {trace} differs from rank {rank}")));
        }
        let idem = linalg::frobenius(&(m * m - m));
        if idem > tol {
            return Err(Error::NotProjection(format!("|K^2 - K|_F = {idem:e}")));
        }
        let basis = q.spectrum.eigenvectors.columns(0, rank).into_owned();
        Ok(ProjectionKernel { contraction: q, rank, basis })
    }

    pub fn new(kernel: HermitianKernel) -> Result<Self> {
        ProjectionKernel::certify(ContractionKernel::new(kernel)?)
    }

    pub fn from_real(n: usize, rows: &[f64]) -> Result<Self> {
        ProjectionKernel::new(HermitianKernel::from_real(n, rows)?)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn contraction(&self) -> &ContractionKernel {
        &self.contraction
    }

    pub fn ground(&self) -> &GroundSet {
        self.contraction.ground()
    }

    pub fn dim(&self) -> usize {
        self.contraction.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.contraction.kernel.entries()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn into_contraction(self) -> ContractionKernel {
        self.contraction
    }
}

impl AsRef<ContractionKernel> for ProjectionKernel {
    fn as_ref(&self) -> &ContractionKernel {
        &self.contraction
    }
}

impl AsRef<ContractionKernel> for ContractionKernel {
    fn as_ref(&self) -> &ContractionKernel {
        self
    }
}

/// Orthogonal projection onto the span of `vectors` (each of length `|E|`).
pub fn projection_from_basis(ground: GroundSet, vectors: &[Vec<C64>]) -> Result<ProjectionKernel> {
    let n = ground.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!("vector of length {} over {} labels", v.len(), n)));
    }
    let basis = orthonormalize(vectors, RANK_DROP_TOL);
    if basis.is_empty() {
        return Err(Error::AllZeroInput);
    }
    let p = projector(&basis, n);
    let p = CMatrix::from_fn(n, n, |i, j| (p[(i, j)] + p[(j, i)].conj()) * 0.5);
    let q = validate_contraction(HermitianKernel::new(ground, p, DEFAULT_SYMMETRY_TOL)?, DEFAULT_TOL)?;
    let projection = ProjectionKernel::certify(q)?;
    if projection.rank != basis.len() {
        return Err(Error::NumericalDegeneracy(format!(
            "span has dimension {} but the projector has rank {}",
            basis.len(),
            projection.rank
        )));
    }
    Ok(projection)
}

/// Principal submatrix `K restricted to A`, re-certified on the ground set `A`.
pub fn compress(q: &ContractionKernel, subset: &[usize]) -> Result<ContractionKernel> {
    if subset.is_empty() {
        return Err(Error::InvalidInput("compression to the empty set".into()));
    }
    let ground = q.ground().restrict(subset)?;
    let entries = linalg::submatrix(q.kernel.entries(), subset);
    validate_contraction(HermitianKernel::new(ground, entries, q.kernel.tol)?, q.tol)
}

/// Projection dilation on `E ⊎ E'` with block form
/// `[[K, S], [S, I - K]]`, `S = sqrt(K (I - K))`.
pub fn dilate(q: &ContractionKernel) -> Result<ProjectionKernel> {
    let n = q.dim();
    let k = q.matrix();
    let id = CMatrix::identity(n, n);
    let defect = k * (&id - k);
    let (mut values, vectors) = hermitian_eigen(&defect)?;
    values.iter_mut().for_each(|l| *l = l.max(0.0).sqrt());
    let s = reconstruct(&values, &vectors);
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let sij = (s[(i, j)] + s[(j, i)].conj()) * 0.5;
            block[(i, j)] = k[(i, j)];
            block[(i, n + j)] = sij;
            block[(n + i, j)] = sij;
            block[(n + i, n + j)] = id[(i, j)] - k[(i, j)];
        }
    }
    let labels = q
        .ground()
        .labels()
        .iter()
        .cloned()
        .chain(q.ground().labels().iter().map(|l| format!("{l}'")));
    let ground = GroundSet::new(labels)?;
    let kernel = HermitianKernel::new(ground, block, q.kernel.tol.max(DEFAULT_SYMMETRY_TOL))?;
    ProjectionKernel::certify(validate_contraction(kernel, q.tol)?)
}

/// `I - P`, the projection onto the orthogonal complement.
pub fn complement_kernel(p: &ProjectionKernel) -> Result<ProjectionKernel> {
    let n = p.dim();
    let m = p.matrix();
    let comp = CMatrix::from_fn(n, n, |i, j| if i == j { ONE - m[(i, j)] } else { -m[(i, j)] });
    let kernel = HermitianKernel::new(p.ground().clone(), comp, p.contraction.kernel.tol)?;
    ProjectionKernel::certify(validate_contraction(kernel, p.contraction.tol)?)
}
