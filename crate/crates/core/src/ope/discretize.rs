//! Transference to a finite ground set: a discrete kernel whose cell counts
//! have the same joint law as the continuous process on a partition.
//!
//! For each cell `A_i` the Gram matrix `G_i = [⟨1_{A_i} φ_j, φ_k⟩]` is
//! factored as `G_i = W_i W_i^*`; the columns of `W_i` become the ground
//! elements of cell `i`. With `W = [W_1 ... W_m]` and `Σ G_i = I`, the rows
//! `v_k` of `W` are orthonormal and `Q = Σ_k v_k ⊗ conj(v_k)` is a
//! projection. The joint count generating function on both sides is
//! `det(I + Σ_i (z_i - 1) G_i)`.

use std::collections::BTreeMap;

use super::{OpeFamily, PointConfiguration, Region};
use crate::dpm::{full_distribution_capped, mask_to_indices};
use crate::error::{Error, Result};
use crate::kernel::{ContractionKernel, GroundSet, HermitianKernel, DEFAULT_TOL};
use crate::linalg::{frobenius, hermitian_eigen, CMatrix};

/// Eigenvalues of a cell Gram matrix at or below this are dropped.
pub const GRAM_DROP_TOL: f64 = 1e-13;
/// Allowed deviation of `Σ G_i` from the identity.
pub const PARTITION_TOL: f64 = 1e-8;

/// Joint law of the cell counts, keyed by the count vector.
pub type CountLaw = BTreeMap<Vec<usize>, f64>;

#[derive(Clone, Debug)]
pub struct Discretization {
    pub kernel: ContractionKernel,
    /// Cell index of each ground element.
    pub cell_of: Vec<usize>,
    /// `G_i` for every cell.
    pub grams: Vec<CMatrix>,
    /// `n × |E|` matrix whose rows are the vectors `v_k`.
    pub vectors: CMatrix,
}

impl Discretization {
    pub fn cells(&self) -> usize {
        self.grams.len()
    }

    /// `⟨1_{B_i} v_j, v_k⟩` for the elements `B_i` of cell `i`.
    pub fn discrete_gram(&self, cell: usize) -> CMatrix {
        let n = self.vectors.nrows();
        CMatrix::from_fn(n, n, |j, k| {
            (0..self.cell_of.len())
                .filter(|&e| self.cell_of[e] == cell)
                .map(|e| self.vectors[(j, e)] * self.vectors[(k, e)].conj())
                .sum()
        })
    }

    /// Largest Frobenius gap between `G_i` and its discrete counterpart.
    pub fn gram_error(&self) -> f64 {
        (0..self.cells()).map(|i| frobenius(&(self.discrete_gram(i) - &self.grams[i]))).fold(0.0, f64::max)
    }

    /// Exact joint cell-count law of the discrete kernel by enumeration.
    pub fn count_law(&self, cap: usize) -> Result<CountLaw> {
        let dist = full_distribution_capped(&self.kernel, cap)?;
        let mut law = CountLaw::new();
        for (mask, &p) in dist.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut counts = vec![0; self.cells()];
            for e in mask_to_indices(mask as u32) {
                counts[self.cell_of[e]] += 1;
            }
            *law.entry(counts).or_insert(0.0) += p;
        }
        Ok(law)
    }
}

/// Checks that the cells tile the coordinate range without overlap.
fn check_partition(family: &OpeFamily, cells: &[Region]) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::InvalidInput("no cells".into()));
    }
    let mut sorted: Vec<&Region> = cells.iter().collect();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for w in sorted.windows(2) {
        if w[0].hi > w[1].lo {
            return Err(Error::OverlappingSets);
        }
        if w[0].hi < w[1].lo {
            return Err(Error::InvalidInput(format!("gap between {} and {}", w[0].hi, w[1].lo)));
        }
    }
    let (lo, hi) = family.coordinate_range();
    if sorted[0].lo > lo || sorted[sorted.len() - 1].hi < hi {
        return Err(Error::InvalidInput(format!("cells do not cover [{lo}, {hi})")));
    }
    Ok(())
}

pub fn discretize_counts(family: &OpeFamily, cells: &[Region]) -> Result<Discretization> {
    check_partition(family, cells)?;
    let n = family.n;
    let grams = cells.iter().map(|c| family.gram(c)).collect::<Result<Vec<_>>>()?;
    let total = grams.iter().fold(CMatrix::zeros(n, n), |acc, g| acc + g);
    let gap = frobenius(&(total - CMatrix::identity(n, n)));
    if gap > PARTITION_TOL {
        return Err(Error::QuadratureFailure(format!("cell Gram matrices sum to I only within {gap:e}")));
    }
    let mut columns = Vec::new();
    let mut labels = Vec::new();
    let mut cell_of = Vec::new();
    for (i, g) in grams.iter().enumerate() {
        let (vals, vecs) = hermitian_eigen(g)?;
        for (r, &l) in vals.iter().enumerate() {
            if l <= GRAM_DROP_TOL {
                continue;
            }
            columns.push(vecs.column(r) * crate::linalg::c(l.sqrt()));
            labels.push(format!("c{i}.{r}"));
            cell_of.push(i);
        }
    }
    let vectors = CMatrix::from_columns(&columns);
    let q = CMatrix::from_fn(columns.len(), columns.len(), |e, f| {
        (0..n).map(|k| vectors[(k, e)] * vectors[(k, f)].conj()).sum()
    });
    let ground = GroundSet::new(labels)?;
    let kernel = HermitianKernel::new(ground, (&q + q.adjoint()) * crate::linalg::c(0.5), DEFAULT_TOL)?;
    let kernel = ContractionKernel::new(kernel)?;
    Ok(Discretization { kernel, cell_of, grams, vectors })
}

/// Count vector `(𝔛(A_1), ..., 𝔛(A_m))` of one configuration.
pub fn continuous_cell_counts(family: &OpeFamily, cells: &[Region], config: &PointConfiguration) -> Vec<usize> {
    let mut counts = vec![0; cells.len()];
    for &z in &config.points {
        let t = family.coordinate(z);
        if let Some(i) = cells.iter().position(|c| c.contains(t)) {
            counts[i] += 1;
        }
    }
    counts
}

pub fn empirical_count_law(family: &OpeFamily, cells: &[Region], samples: &[PointConfiguration]) -> CountLaw {
    let mut law = CountLaw::new();
    let w = 1.0 / samples.len().max(1) as f64;
    for c in samples {
        *law.entry(continuous_cell_counts(family, cells, c)).or_insert(0.0) += w;
    }
    law
}

pub fn count_law_distance(a: &CountLaw, b: &CountLaw) -> f64 {
    let mut keys: Vec<&Vec<usize>> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys.iter().map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>()
}
