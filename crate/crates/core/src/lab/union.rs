use num_rational::BigRational;

use super::monotone::CouplingTable;
use super::simplex::{dyadic, phase_one, Scalar};
use super::UNION_CAP;
use crate::dpm::{check_cap, full_distribution, SubsetDistribution};
use crate::error::{Error, Result};
use crate::kernel::{ContractionKernel, HermitianKernel, ProjectionKernel};

/// Operator-norm bound on `P1 P2` for the ranges to count as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
/// Probabilities at or below this are treated as zero.
pub const SNAP_TOL: f64 = 1e-13;
/// Phase-one objective tolerated by the floating path.
pub const LP_SLACK: f64 = 1e-9;
/// Inputs that are multiples of `2^-DYADIC_BITS` are solved exactly.
pub const DYADIC_BITS: i32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    /// `Σ_{A2} μ(A1, A2) = P^{H1}(A1)`.
    First,
    /// `Σ_{A1} μ(A1, A2) = P^{H2}(A2)`.
    Second,
    /// `Σ_{A1 ∪ A2 = B} μ(A1, A2) = P^{H1 ⊕ H2}(B)`.
    Union,
}

/// Dual vector `y` over the constraint rows with positive right-hand side.
/// Rows with zero right-hand side (and the variables they pin to zero) are
/// removed before solving; they carry weight `-∞` in the full certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct FarkasCertificate {
    pub rows: Vec<(Block, u32, f64)>,
    /// `b^T y > 0`.
    pub value: f64,
    /// `max_j (A^T y)_j`, which is `<= 0` for a valid certificate.
    pub max_column: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum UnionOutcome {
    Feasible { table: CouplingTable, union_residual: f64, exact: bool },
    Infeasible(FarkasCertificate),
}

impl UnionOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, UnionOutcome::Feasible { .. })
    }
}

fn snapped(d: &SubsetDistribution) -> Vec<f64> {
    d.probs().iter().map(|&p| if p <= SNAP_TOL { 0.0 } else { p }).collect()
}

/// Searches for a coupling of `P^{H1}` and `P^{H2}` whose union pushforward
/// is `P^{H1 ⊕ H2}`.
pub fn union_coupling_search(h1: &ProjectionKernel, h2: &ProjectionKernel) -> Result<UnionOutcome> {
    let n = h1.dim();
    if h1.ground() != h2.ground() {
        return Err(Error::DimensionMismatch("projections over different ground sets".into()));
    }
    check_cap(n, UNION_CAP)?;
    let overlap = (h1.matrix() * h2.matrix()).singular_values().max();
    if overlap > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(overlap));
    }
    let sum = h1.matrix() + h2.matrix();
    let sum = (&sum + sum.adjoint()) * crate::linalg::c(0.5);
    let h = ContractionKernel::new(HermitianKernel::new(h1.ground().clone(), sum, crate::kernel::DEFAULT_TOL)?)?;
    union_lp(
        &full_distribution(h1.as_ref())?,
        &full_distribution(h2.as_ref())?,
        &full_distribution(&h)?,
    )
}

/// The LP behind [`union_coupling_search`] for arbitrary laws.
pub fn union_lp(d1: &SubsetDistribution, d2: &SubsetDistribution, dh: &SubsetDistribution) -> Result<UnionOutcome> {
    let (p1, p2, ph) = (snapped(d1), snapped(d2), snapped(dh));
    let support = |p: &[f64]| -> Vec<u32> { (0..p.len() as u32).filter(|&m| p[m as usize] > 0.0).collect() };
    let (s1, s2) = (support(&p1), support(&p2));
    let vars: Vec<(u32, u32)> = s1
        .iter()
        .flat_map(|&a| s2.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| ph[(a | b) as usize] > 0.0)
        .collect();
    let mut rows: Vec<(Block, u32, f64)> = Vec::new();
    rows.extend(s1.iter().map(|&m| (Block::First, m, p1[m as usize])));
    rows.extend(s2.iter().map(|&m| (Block::Second, m, p2[m as usize])));
    rows.extend(support(&ph).into_iter().map(|m| (Block::Union, m, ph[m as usize])));
    let matrix: Vec<Vec<bool>> = rows
        .iter()
        .map(|&(block, m, _)| {
            vars.iter()
                .map(|&(a, b)| match block {
                    Block::First => a == m,
                    Block::Second => b == m,
                    Block::Union => a | b == m,
                })
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let exact_rhs: Option<Vec<BigRational>> = rhs.iter().map(|&x| dyadic(x, DYADIC_BITS)).collect();
    let (point, infeasibility, dual, exact) = match exact_rhs {
        Some(b) => {
            let a = lift::<BigRational>(&matrix);
            let r = phase_one(&a, &b);
            let feasible = r.infeasibility.is_exact_zero();
            let to = |v: &[BigRational]| v.iter().map(Scalar::to_f64).collect::<Vec<_>>();
            (to(&r.point), if feasible { 0.0 } else { r.infeasibility.to_f64() }, to(&r.dual), true)
        }
        None => {
            let r = phase_one(&lift::<f64>(&matrix), &rhs);
            let inf = if r.infeasibility <= LP_SLACK { 0.0 } else { r.infeasibility };
            (r.point, inf, r.dual, false)
        }
    };
    if infeasibility == 0.0 {
        let weights: Vec<(u32, u32, f64)> =
            vars.iter().zip(&point).filter(|(_, &w)| w > 0.0).map(|(&(a, b), &w)| (a, b, w.max(0.0))).collect();
        let mut pushed = vec![0.0; ph.len()];
        for &(a, b, w) in &weights {
            pushed[(a | b) as usize] += w;
        }
        let union_residual = pushed.iter().zip(&ph).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let table = CouplingTable::new(weights, &p1, &p2);
        return Ok(UnionOutcome::Feasible { table, union_residual, exact });
    }
    let max_column = (0..vars.len())
        .map(|j| (0..rows.len()).filter(|&i| matrix[i][j]).map(|i| dual[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let value = rows.iter().zip(&dual).map(|(r, y)| r.2 * y).sum();
    Ok(UnionOutcome::Infeasible(FarkasCertificate {
        rows: rows.iter().zip(&dual).map(|(r, &y)| (r.0, r.1, y)).collect(),
        value,
        max_column,
        exact,
    }))
}

fn lift<T: Scalar>(m: &[Vec<bool>]) -> Vec<Vec<T>> {
    m.iter().map(|row| row.iter().map(|&x| if x { T::one() } else { T::zero() }).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::GroundSet;
    use crate::random::{random_orthogonal_pair, random_projection};
    use crate::rng::rng_from_seed;

    fn point_mass(n: usize, mask: u32) -> SubsetDistribution {
        let mut p = vec![0.0; 1 << n];
        p[mask as usize] = 1.0;
        SubsetDistribution::new(GroundSet::numbered(n), p).unwrap()
    }

    #[test]
    fn complementary_pairs_are_feasible() {
        let mut rng = rng_from_seed(3);
        for r1 in 1..4 {
            let (h1, h2) = random_orthogonal_pair(4, r1, 4 - r1, &mut rng);
            let UnionOutcome::Feasible { table, union_residual, .. } = union_coupling_search(&h1, &h2).unwrap() else {
                panic!()
            };
            assert!(table.is_valid() && union_residual < 1e-8);
        }
    }

    #[test]
    fn trivial_second_space() {
        let h1 = random_projection(3, 2, &mut rng_from_seed(4));
        let zero = ProjectionKernel::from_real(3, &[0.0; 9]).unwrap();
        let UnionOutcome::Feasible { table, .. } = union_coupling_search(&h1, &zero).unwrap() else { panic!() };
        assert!(table.weights.iter().all(|w| w.1 == 0));
        let d1 = full_distribution(h1.as_ref()).unwrap();
        for &(a, _, w) in &table.weights {
            assert!((w - d1.prob(a)).abs() < 1e-9);
        }
    }

    #[test]
    fn coordinate_spaces_take_the_exact_path() {
        let h1 = ProjectionKernel::from_real(3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let h2 = ProjectionKernel::from_real(3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let UnionOutcome::Feasible { exact, table, .. } = union_coupling_search(&h1, &h2).unwrap() else { panic!() };
        assert!(exact);
        assert_eq!(table.weights, vec![(1, 2, 1.0)]);
    }

    #[test]
    fn inconsistent_laws_get_a_certificate() {
        let out = union_lp(&point_mass(3, 1), &point_mass(3, 2), &point_mass(3, 4)).unwrap();
        let UnionOutcome::Infeasible(c) = out else { panic!() };
        assert!(c.exact && c.value > 0.0 && c.max_column <= 0.0);
        let r = union_lp(&point_mass(3, 1), &point_mass(3, 2), &point_mass(3, 3)).unwrap();
        assert!(r.is_feasible());
    }

    #[test]
    fn overlapping_ranges_are_rejected() {
        let h = random_projection(3, 1, &mut rng_from_seed(1));
        assert!(matches!(union_coupling_search(&h, &h), Err(Error::NotOrthogonal(_))));
    }
}
