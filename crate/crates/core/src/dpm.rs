//! Discrete determinantal probability measures: cylinder probabilities,
//! exhaustive enumeration over `2^E`, the two exact samplers, entropy,
//! duality and completeness checks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{complement_kernel, ContractionKernel, GroundSet, ProjectionKernel};
use crate::linalg::{self, deflate, norm_sqr, CMatrix, C64, ONE, ZERO};

/// Largest ground set for exhaustive enumeration (subsets are `u32` masks).
pub const ENUMERATION_CAP: usize = 16;
/// Probabilities above this negative threshold are rounding and get clamped to 0.
pub const NEGATIVE_CLAMP: f64 = -1e-12;
/// Allowed deviation of a table's total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Per-entry agreement required between the cylinder and `J`-form tables.
pub const CROSS_CHECK_TOL: f64 = 1e-9;
/// The `J = Q (I - Q)^{-1}` cross-check only runs when `λ_max <= 1 - JFORM_GAP`.
pub const JFORM_GAP: f64 = 1e-6;
/// Residual mass below which the projection sampler gives up.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Relative singular-value threshold of the completeness rank test.
pub const COMPLETENESS_RANK_TOL: f64 = 1e-8;

pub fn mask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask >> i & 1 == 1).collect()
}

pub fn indices_to_mask(indices: &[usize]) -> u32 {
    indices.iter().fold(0, |m, &i| m | 1 << i)
}

pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::GroundSetTooLarge { size: n, cap })
    } else {
        Ok(())
    }
}

/// Exact law on `2^E`, indexed by bitmask (bit `i` is element `i`).
#[derive(Clone, Debug)]
pub struct SubsetDistribution {
    ground: GroundSet,
    probs: Vec<f64>,
}

impl SubsetDistribution {
    /// Validates and clamps a probability table of length `2^|E|`.
    pub fn new(ground: GroundSet, mut probs: Vec<f64>) -> Result<Self> {
        check_cap(ground.len(), ENUMERATION_CAP)?;
        if probs.len() != 1 << ground.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {} elements",
                probs.len(),
                ground.len()
            )));
        }
        for (mask, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < NEGATIVE_CLAMP {
                return Err(Error::NegativeProbability { mask: mask as u32, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::CrossCheck(format!("probabilities sum to {total}")));
        }
        Ok(SubsetDistribution { ground, probs })
    }

    /// Independent inclusions with the given marginals.
    pub fn product(ground: GroundSet, marginals: &[f64]) -> Result<Self> {
        let n = ground.len();
        if marginals.len() != n {
            return Err(Error::DimensionMismatch("one marginal per element".into()));
        }
        check_cap(n, ENUMERATION_CAP)?;
        let probs = (0..1u32 << n)
            .map(|mask| {
                (0..n).map(|i| if mask >> i & 1 == 1 { marginals[i] } else { 1.0 - marginals[i] }).product()
            })
            .collect();
        SubsetDistribution::new(ground, probs)
    }

    /// Empirical law of a batch of samples.
    pub fn empirical(ground: GroundSet, samples: &[u32]) -> Result<Self> {
        check_cap(ground.len(), ENUMERATION_CAP)?;
        let mut probs = vec![0.0; 1 << ground.len()];
        for &s in samples {
            probs[s as usize] += 1.0;
        }
        let total = samples.len().max(1) as f64;
        probs.iter_mut().for_each(|p| *p /= total);
        SubsetDistribution::new(ground, probs)
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, mask: u32) -> f64 {
        self.probs[mask as usize]
    }

    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.ground.len()) - 1) as u32
    }

    /// `P[B ⊆ 𝔄]` summed from the table.
    pub fn inclusion(&self, mask: u32) -> f64 {
        self.probs.iter().enumerate().filter(|(a, _)| *a as u32 & mask == mask).map(|(_, p)| p).sum()
    }

    /// Law of `|𝔄|`.
    pub fn size_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ground.len() + 1];
        for (mask, p) in self.probs.iter().enumerate() {
            out[(mask as u32).count_ones() as usize] += p;
        }
        out
    }

    /// Shannon entropy in nats with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    /// Law of `E \ 𝔄`.
    pub fn complement_law(&self) -> SubsetDistribution {
        let full = self.full_mask();
        let mut probs = vec![0.0; self.probs.len()];
        for (mask, p) in self.probs.iter().enumerate() {
            probs[(full ^ mask as u32) as usize] = *p;
        }
        SubsetDistribution { ground: self.ground.clone(), probs }
    }

    pub fn total_variation(&self, other: &SubsetDistribution) -> f64 {
        0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    pub fn max_abs_difference(&self, other: &SubsetDistribution) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Labels of a subset in ground-set order.
    pub fn labels_of(&self, mask: u32) -> Vec<&str> {
        mask_to_indices(mask).into_iter().map(|i| self.ground.label(i)).collect()
    }
}

/// `P[A ⊆ 𝔄] = det(Q restricted to A)`.
pub fn inclusion_probability(q: &ContractionKernel, subset: &[usize]) -> Result<f64> {
    q.principal_minor(subset)
}

/// `P[A1 ⊆ 𝔄, A2 ∩ 𝔄 = ∅]`: determinant over `A1 ∪ A2` of the matrix whose
/// rows are `Q e` for `e ∈ A1` and `(I - Q) e` for `e ∈ A2`.
pub fn cylinder_probability(q: &ContractionKernel, included: &[usize], excluded: &[usize]) -> Result<f64> {
    q.ground().check_indices(included)?;
    q.ground().check_indices(excluded)?;
    if included.iter().any(|e| excluded.contains(e)) {
        return Err(Error::OverlappingSets);
    }
    let mut union: Vec<(usize, bool)> =
        included.iter().map(|&e| (e, true)).chain(excluded.iter().map(|&e| (e, false))).collect();
    union.sort_unstable();
    union.dedup();
    let m = q.matrix();
    let k = union.len();
    let mat = CMatrix::from_fn(k, k, |i, j| {
        let (e, inc) = union[i];
        let f = union[j].0;
        if inc {
            m[(e, f)]
        } else if e == f {
            ONE - m[(e, f)]
        } else {
            -m[(e, f)]
        }
    });
    Ok(linalg::det(&mat).re)
}

/// Cylinder table: `P[𝔄 = A]` for every `A`, as the coefficient of `z^A` in
/// `det(I - Q + Q Z)`.
fn cylinder_table(q: &ContractionKernel) -> Vec<f64> {
    let n = q.dim();
    let m = q.matrix();
    let comp = CMatrix::identity(n, n) - m;
    (0..1u32 << n)
        .map(|mask| {
            let mat = CMatrix::from_fn(n, n, |i, j| if mask >> i & 1 == 1 { m[(i, j)] } else { comp[(i, j)] });
            linalg::det(&mat).re
        })
        .collect()
}

/// The table `det(I + J)^{-1} det(J restricted to A)` with `J = Q (I - Q)^{-1}`.
/// `None` when `λ_max > 1 - JFORM_GAP`.
pub fn jform_distribution(q: &ContractionKernel) -> Result<Option<SubsetDistribution>> {
    let n = q.dim();
    check_cap(n, ENUMERATION_CAP)?;
    if q.max_eigenvalue() > 1.0 - JFORM_GAP {
        return Ok(None);
    }
    let id = CMatrix::identity(n, n);
    let inv = (&id - q.matrix())
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy("I - Q is singular".into()))?;
    let j = q.matrix() * inv;
    let norm = linalg::det(&(&id + &j)).re;
    let probs = (0..1u32 << n)
        .map(|mask| linalg::det(&linalg::submatrix(&j, &mask_to_indices(mask))).re / norm)
        .collect();
    SubsetDistribution::new(q.ground().clone(), probs).map(Some)
}

/// Exact law of `𝔄` by enumerating every cylinder, cross-validated against
/// the `J`-form whenever `λ_max <= 1 - JFORM_GAP`.
pub fn full_distribution(q: &ContractionKernel) -> Result<SubsetDistribution> {
    full_distribution_capped(q, ENUMERATION_CAP)
}

pub fn full_distribution_capped(q: &ContractionKernel, cap: usize) -> Result<SubsetDistribution> {
    check_cap(q.dim(), cap.min(ENUMERATION_CAP))?;
    let dist = SubsetDistribution::new(q.ground().clone(), cylinder_table(q))?;
    if let Some(alt) = jform_distribution(q)? {
        let dev = dist.max_abs_difference(&alt);
        if dev > CROSS_CHECK_TOL {
            return Err(Error::CrossCheck(format!("J-form table deviates by {dev:e}")));
        }
    }
    Ok(dist)
}

/// Sequential exact sampler for a projection given by orthonormal columns
/// `basis` (`n x r`): each step draws a label with probability proportional
/// to the squared norm of its row's component orthogonal to the rows already
/// chosen, using cumulative-sum inversion over the ground-set order.
fn sample_rows<R: Rng + ?Sized>(basis: &CMatrix, rng: &mut R) -> Result<Vec<usize>> {
    let (n, r) = basis.shape();
    let mut residual: Vec<Vec<C64>> = (0..n).map(|x| basis.row(x).iter().copied().collect()).collect();
    let mut mass: Vec<f64> = residual.iter().map(|v| norm_sqr(v)).collect();
    let mut chosen = Vec::with_capacity(r);
    for step in 0..r {
        let total: f64 = mass.iter().sum();
        if !(total > DEGENERACY_TOL) {
            return Err(Error::NumericalDegeneracy(format!(
                "residual mass {total:e} after {step} of {r} draws"
            )));
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (x, &w) in mass.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(x);
            if target < acc {
                break;
            }
        }
        let x = pick.expect("positive total mass");
        let scale = mass[x].sqrt();
        let e: Vec<C64> = residual[x].iter().map(|z| z / scale).collect();
        chosen.push(x);
        for (y, v) in residual.iter_mut().enumerate() {
            if chosen.contains(&y) {
                v.iter_mut().for_each(|z| *z = ZERO);
                mass[y] = 0.0;
                continue;
            }
            deflate(v, std::slice::from_ref(&e));
            mass[y] = norm_sqr(v);
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Reusable sampler for `P^H`.
#[derive(Clone, Debug)]
pub struct ProjectionSampler {
    basis: CMatrix,
}

impl ProjectionSampler {
    pub fn new(p: &ProjectionKernel) -> Self {
        ProjectionSampler { basis: p.basis().clone() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        sample_rows(&self.basis, rng)
    }
}

/// One draw from `P^H`; always returns `rank(P)` distinct indices.
pub fn sample_projection<R: Rng + ?Sized>(p: &ProjectionKernel, rng: &mut R) -> Result<Vec<usize>> {
    ProjectionSampler::new(p).sample(rng)
}

/// Reusable sampler for `P^Q` through the spectral mixture: keep eigenvector
/// `v_k` with probability `λ_k`, then sample the projection onto the kept span.
#[derive(Clone, Debug)]
pub struct ContractionSampler {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl ContractionSampler {
    pub fn new(q: &ContractionKernel) -> Self {
        let s = q.spectrum();
        ContractionSampler { eigenvalues: s.eigenvalues.clone(), eigenvectors: s.eigenvectors.clone() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let kept: Vec<usize> =
            (0..self.eigenvalues.len()).filter(|&k| rng.random::<f64>() < self.eigenvalues[k]).collect();
        let n = self.eigenvectors.nrows();
        let basis = CMatrix::from_fn(n, kept.len(), |i, j| self.eigenvectors[(i, kept[j])]);
        sample_rows(&basis, rng)
    }
}

pub fn sample_contraction<R: Rng + ?Sized>(q: &ContractionKernel, rng: &mut R) -> Result<Vec<usize>> {
    ContractionSampler::new(q).sample(rng)
}

/// Law of `|𝔄|`, indexed `0..=|E|`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountDistribution {
    pub probs: Vec<f64>,
}

impl CountDistribution {
    /// Convolution of `Bern(p_k)` laws.
    pub fn bernoulli_convolution(ps: &[f64]) -> Self {
        let mut probs = vec![1.0];
        for &p in ps {
            let mut next = vec![0.0; probs.len() + 1];
            for (k, &w) in probs.iter().enumerate() {
                next[k] += w * (1.0 - p);
                next[k + 1] += w * p;
            }
            probs = next;
        }
        CountDistribution { probs }
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

pub fn count_distribution(q: &ContractionKernel) -> CountDistribution {
    CountDistribution::bernoulli_convolution(q.eigenvalues())
}

/// Entropy of `P^Q` in nats.
pub fn entropy(q: &ContractionKernel) -> Result<f64> {
    Ok(full_distribution(q)?.entropy())
}

#[derive(Clone, Debug)]
pub struct DualityReport {
    /// `max_B |P^{I-P}(E \ B) - P^P(B)|`.
    pub max_deviation: f64,
    pub passed: bool,
}

pub fn dual_distribution_check(p: &ProjectionKernel) -> Result<DualityReport> {
    let direct = full_distribution(p.contraction())?;
    let dual = full_distribution(complement_kernel(p)?.contraction())?;
    let max_deviation = direct.max_abs_difference(&dual.complement_law());
    Ok(DualityReport { max_deviation, passed: max_deviation <= CROSS_CHECK_TOL })
}

/// Whether `{P e : e ∈ B}` has numerical rank `rank(P)`.
pub fn completeness_check(p: &ProjectionKernel, subset: &[usize]) -> Result<bool> {
    p.ground().check_indices(subset)?;
    if subset.len() != p.rank() {
        return Err(Error::WrongCardinality { expected: p.rank(), got: subset.len() });
    }
    if subset.is_empty() {
        return Ok(true);
    }
    let m = p.matrix();
    let cols = CMatrix::from_fn(p.dim(), subset.len(), |i, j| m[(i, subset[j])]);
    let sv = cols.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(false);
    }
    Ok(sv.iter().filter(|&&s| s > COMPLETENESS_RANK_TOL * top).count() == p.rank())
}

/// Largest-magnitude covariance between `{e ∈ 𝔄}` and `{f ∈ 𝔄}` over
/// `e ∈ K`, `f ∉ K`. A finite diagnostic only.
#[derive(Clone, Debug)]
pub struct TailProbe {
    pub covariance: f64,
    pub pair: Option<(usize, usize)>,
}

pub fn tail_triviality_probe(q: &ContractionKernel, split: &[usize]) -> Result<TailProbe> {
    check_cap(q.dim(), ENUMERATION_CAP)?;
    q.ground().check_indices(split)?;
    let mut best = TailProbe { covariance: 0.0, pair: None };
    for &e in split {
        for f in (0..q.dim()).filter(|f| !split.contains(f)) {
            let joint = inclusion_probability(q, &[e, f])?;
            let cov = joint - inclusion_probability(q, &[e])? * inclusion_probability(q, &[f])?;
            if best.pair.is_none() || cov.abs() > best.covariance.abs() {
                best = TailProbe { covariance: cov, pair: Some((e, f)) };
            }
        }
    }
    Ok(best)
}
