use rand::Rng;
use rayon::prelude::*;

use super::SR_CAP;
use crate::dpm::{check_cap, full_distribution_capped, SubsetDistribution};
use crate::error::Result;
use crate::kernel::ContractionKernel;

/// Slack below this is a violation.
pub const SLACK_TOL: f64 = -1e-9;
const PROBE_RANGE: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SlackReport {
    /// Random probes plus the `2^|E|` corners.
    pub probes: usize,
    pub pairs: usize,
    pub min_slack: f64,
    /// Probe point and pair `(e, e')` attaining the minimum.
    pub argmin: Option<(Vec<f64>, usize, usize)>,
    pub passed: bool,
}

/// Minimum of `∂_e f ∂_{e'} f - f ∂_e ∂_{e'} f` over `e != e'` and the probes,
/// where `f(x) = Σ_A P(A) x^A` is the generating polynomial.
pub fn slack_of_distribution(dist: &SubsetDistribution, probes: &[Vec<f64>]) -> SlackReport {
    let n = dist.ground().len();
    let p = dist.probs();
    let pairs = n * n.saturating_sub(1) / 2;
    let best = probes
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let mut mono = vec![1.0; p.len()];
            for mask in 1..p.len() {
                let low = mask.trailing_zeros() as usize;
                mono[mask] = mono[mask & (mask - 1)] * x[low];
            }
            let f: f64 = p.iter().zip(&mono).map(|(a, b)| a * b).sum();
            let d1: Vec<f64> = (0..n)
                .map(|e| (0..p.len()).filter(|m| m >> e & 1 == 1).map(|m| p[m] * mono[m ^ (1 << e)]).sum())
                .collect();
            let mut local = (f64::INFINITY, idx, 0, 0);
            for e in 0..n {
                for g in e + 1..n {
                    let both = (1 << e) | (1 << g);
                    let d2: f64 = (0..p.len()).filter(|m| m & both == both).map(|m| p[m] * mono[m ^ both]).sum();
                    let s = d1[e] * d1[g] - f * d2;
                    if s < local.0 {
                        local = (s, idx, e, g);
                    }
                }
            }
            local
        })
        .reduce(|| (f64::INFINITY, usize::MAX, 0, 0), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let (min_slack, argmin) = if best.1 == usize::MAX {
        (0.0, None)
    } else {
        (best.0, Some((probes[best.1].clone(), best.2, best.3)))
    };
    SlackReport { probes: probes.len(), pairs, min_slack, argmin, passed: min_slack >= SLACK_TOL }
}

/// Scans `probes` uniform points of `[-3, 3]^E` and every `{0,1}^E` corner.
pub fn strongly_rayleigh_slack<R: Rng + ?Sized>(q: &ContractionKernel, probes: usize, rng: &mut R) -> Result<SlackReport> {
    let n = q.dim();
    check_cap(n, SR_CAP)?;
    let dist = full_distribution_capped(q, SR_CAP)?;
    let mut points: Vec<Vec<f64>> =
        (0..probes).map(|_| (0..n).map(|_| rng.random_range(-PROBE_RANGE..=PROBE_RANGE)).collect()).collect();
    points.extend((0..1u32 << n).map(|c| (0..n).map(|i| f64::from(c >> i & 1)).collect()));
    Ok(slack_of_distribution(&dist, &points))
}
