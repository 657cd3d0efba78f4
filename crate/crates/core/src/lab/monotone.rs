use super::flow::FlowNetwork;
use super::COUPLING_CAP;
use crate::dpm::{check_cap, SubsetDistribution};
use crate::error::{Error, Result};

/// Shortfall of the maximum flow below the total mass that still counts as
/// a coupling.
pub const FLOW_SLACK: f64 = 1e-9;
/// Tolerance on the marginals of a returned table.
pub const MARGINAL_TOL: f64 = 1e-8;

/// Joint law of `(A1, A2)`, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    pub weights: Vec<(u32, u32, f64)>,
    /// Max deviation of the row sums from the first marginal.
    pub row_residual: f64,
    /// Max deviation of the column sums from the second marginal.
    pub column_residual: f64,
}

impl CouplingTable {
    pub(crate) fn new(weights: Vec<(u32, u32, f64)>, first: &[f64], second: &[f64]) -> Self {
        let mut rows = vec![0.0; first.len()];
        let mut cols = vec![0.0; second.len()];
        for &(a, b, w) in &weights {
            rows[a as usize] += w;
            cols[b as usize] += w;
        }
        let gap = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        CouplingTable { row_residual: gap(&rows, first), column_residual: gap(&cols, second), weights }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().map(|w| w.2).sum()
    }

    pub fn is_valid(&self) -> bool {
        self.weights.iter().all(|w| w.2 >= 0.0)
            && self.row_residual <= MARGINAL_TOL
            && self.column_residual <= MARGINAL_TOL
    }

    /// Whether every pair with positive weight satisfies `A1 ⊆ A2`.
    pub fn is_monotone(&self) -> bool {
        self.weights.iter().all(|&(a, b, w)| w <= 0.0 || a & !b == 0)
    }
}

/// Up-closure of a set of generators.
#[derive(Clone, Debug, PartialEq)]
pub struct IncreasingEvent {
    /// Minimal elements.
    pub generators: Vec<u32>,
    pub first_mass: f64,
    pub second_mass: f64,
}

impl IncreasingEvent {
    pub fn contains(&self, mask: u32) -> bool {
        self.generators.iter().any(|&g| g & !mask == 0)
    }

    pub fn violation(&self) -> f64 {
        self.first_mass - self.second_mass
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CouplingOutcome {
    Feasible(CouplingTable),
    /// An increasing event with `P1(U) > P2(U)`.
    Infeasible(IncreasingEvent),
}

impl CouplingOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, CouplingOutcome::Feasible(_))
    }
}

fn minimal_elements(mut sets: Vec<u32>) -> Vec<u32> {
    sets.sort_by_key(|s| (s.count_ones(), *s));
    let mut out: Vec<u32> = Vec::new();
    for s in sets {
        if !out.iter().any(|&g| g & !s == 0) {
            out.push(s);
        }
    }
    out
}

/// Decides `P1 ≼ P2` by max flow from `P1` to `P2` through arcs `A1 -> A2`
/// for `A1 ⊆ A2`. On failure the residual-reachable sets of the first layer
/// generate an increasing event that `P1` charges more than `P2`.
pub fn monotone_coupling(p1: &SubsetDistribution, p2: &SubsetDistribution) -> Result<CouplingOutcome> {
    let n = p1.ground().len();
    if p1.ground() != p2.ground() {
        return Err(Error::DimensionMismatch("couplings need a common ground set".into()));
    }
    check_cap(n, COUPLING_CAP)?;
    let (a, b) = (p1.probs(), p2.probs());
    let left: Vec<u32> = (0..a.len() as u32).filter(|&m| a[m as usize] > 0.0).collect();
    let right: Vec<u32> = (0..b.len() as u32).filter(|&m| b[m as usize] > 0.0).collect();
    let (s, t) = (0, 1 + left.len() + right.len());
    let mut net = FlowNetwork::new(t + 1);
    let mut right_node = vec![usize::MAX; b.len()];
    for (j, &m) in right.iter().enumerate() {
        right_node[m as usize] = 1 + left.len() + j;
        net.add_arc(1 + left.len() + j, t, b[m as usize]);
    }
    let mut middle = Vec::new();
    for (i, &m) in left.iter().enumerate() {
        net.add_arc(s, 1 + i, a[m as usize]);
        // Supersets of m: iterate over subsets of the complement.
        let free = !m & p1.full_mask();
        let mut extra = free;
        loop {
            let sup = m | extra;
            let node = right_node[sup as usize];
            if node != usize::MAX {
                middle.push((m, sup, net.add_arc(1 + i, node, f64::INFINITY)));
            }
            if extra == 0 {
                break;
            }
            extra = (extra - 1) & free;
        }
    }
    let total: f64 = a.iter().sum();
    let flow = net.max_flow(s, t);
    if flow >= total - FLOW_SLACK {
        let weights = middle.iter().map(|&(x, y, arc)| (x, y, net.flow_on(arc))).filter(|w| w.2 > 0.0).collect();
        return Ok(CouplingOutcome::Feasible(CouplingTable::new(weights, a, b)));
    }
    let side = net.source_side(s);
    let reached: Vec<u32> = left.iter().enumerate().filter(|(i, _)| side[1 + i]).map(|(_, &m)| m).collect();
    let generators = minimal_elements(reached);
    let mut event = IncreasingEvent { generators, first_mass: 0.0, second_mass: 0.0 };
    for m in 0..a.len() as u32 {
        if event.contains(m) {
            event.first_mass += a[m as usize];
            event.second_mass += b[m as usize];
        }
    }
    Ok(CouplingOutcome::Infeasible(event))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpm::full_distribution;
    use crate::kernel::GroundSet;
    use crate::random::{random_contraction, random_nested_projections, random_ordered_pair};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn product(ps: &[f64]) -> SubsetDistribution {
        SubsetDistribution::product(GroundSet::numbered(ps.len()), ps).unwrap()
    }

    #[test]
    fn identical_laws_couple_on_the_diagonal() {
        let q = random_contraction(3, &mut rng_from_seed(1));
        let d = full_distribution(&q).unwrap();
        let CouplingOutcome::Feasible(t) = monotone_coupling(&d, &d).unwrap() else { panic!() };
        assert!(t.is_valid() && t.is_monotone());
    }

    #[test]
    fn one_bernoulli_pair() {
        let CouplingOutcome::Feasible(t) = monotone_coupling(&product(&[0.3]), &product(&[0.6])).unwrap() else {
            panic!()
        };
        let w = |a, b| t.weights.iter().find(|x| x.0 == a && x.1 == b).map_or(0.0, |x| x.2);
        assert!((w(1, 1) - 0.3).abs() < 1e-12);
        assert!((w(0, 1) - 0.3).abs() < 1e-12);
        assert!((w(0, 0) - 0.4).abs() < 1e-12);
        match monotone_coupling(&product(&[0.6]), &product(&[0.3])).unwrap() {
            CouplingOutcome::Infeasible(e) => {
                assert_eq!(e.generators, vec![1]);
                assert!((e.violation() - 0.3).abs() < 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn ordered_and_nested_pairs_are_feasible() {
        let mut rng = rng_from_seed(5);
        for _ in 0..50 {
            let (q1, q2) = random_ordered_pair(4, &mut rng);
            let o = monotone_coupling(&full_distribution(&q1).unwrap(), &full_distribution(&q2).unwrap()).unwrap();
            let CouplingOutcome::Feasible(t) = o else { panic!("{o:?}") };
            assert!(t.is_valid() && t.is_monotone());
            let (h1, h2) = random_nested_projections(4, 1, 3, &mut rng);
            let o = monotone_coupling(
                &full_distribution(h1.as_ref()).unwrap(),
                &full_distribution(h2.as_ref()).unwrap(),
            )
            .unwrap();
            assert!(o.is_feasible());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn duality_reverses_domination(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = rng_from_seed(seed);
            let d1 = full_distribution(&random_contraction(n, &mut rng)).unwrap();
            let d2 = full_distribution(&random_contraction(n, &mut rng)).unwrap();
            let forward = monotone_coupling(&d1, &d2).unwrap();
            let backward = monotone_coupling(&d2.complement_law(), &d1.complement_law()).unwrap();
            prop_assert_eq!(forward.is_feasible(), backward.is_feasible());
            match forward {
                CouplingOutcome::Feasible(t) => prop_assert!(t.is_valid() && t.is_monotone()),
                CouplingOutcome::Infeasible(e) => prop_assert!(e.violation() > 0.0),
            }
        }
    }
}
