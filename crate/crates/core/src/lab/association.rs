use super::NA_CAP;
use crate::dpm::{check_cap, SubsetDistribution};
use crate::error::{Error, Result};

/// Largest coordinate block on which upsets are enumerated (168 upsets at 4).
pub const MAX_BLOCK: usize = 4;
pub const ASSOCIATION_TOL: f64 = 1e-10;

/// All upward-closed families of subsets of a `k`-element set, each encoded
/// as a bitmask over the `2^k` local subsets. Includes the empty family and
/// the full power set.
pub fn upsets(k: usize) -> Result<Vec<u32>> {
    if k > MAX_BLOCK {
        return Err(Error::GroundSetTooLarge { size: k, cap: MAX_BLOCK });
    }
    let full = (1usize << k) - 1;
    // Decide subsets from the top down: a set may join only when all of its
    // one-element extensions are already in.
    let mut order: Vec<usize> = (0..=full).collect();
    order.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    let mut out = Vec::new();
    extend(&order, 0, 0, full, &mut out);
    Ok(out)
}

fn extend(order: &[usize], pos: usize, family: u32, full: usize, out: &mut Vec<u32>) {
    if pos == order.len() {
        out.push(family);
        return;
    }
    let s = order[pos];
    extend(order, pos + 1, family, full, out);
    let closed = (0..usize::BITS).filter(|&i| (full >> i) & 1 == 1 && (s >> i) & 1 == 0).all(|i| family >> (s | 1 << i) & 1 == 1);
    if closed {
        extend(order, pos + 1, family | 1 << s, full, out);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationReport {
    pub pairs: usize,
    /// `max E[1_A 1_B] - E[1_A] E[1_B]` over the pairs.
    pub max_violation: f64,
    /// Upsets (local encodings) attaining the maximum.
    pub worst: (u32, u32),
    pub passed: bool,
}

fn local_index(mask: usize, coords: &[usize]) -> usize {
    coords.iter().enumerate().filter(|(_, &c)| mask >> c & 1 == 1).map(|(j, _)| 1 << j).sum()
}

/// Checks `E[1_A 1_B] <= E[1_A] E[1_B] + 1e-10` for every pair of increasing
/// events `A` depending on `split` and `B` depending on its complement.
pub fn negative_association_check(dist: &SubsetDistribution, split: &[usize]) -> Result<AssociationReport> {
    let n = dist.ground().len();
    check_cap(n, NA_CAP)?;
    dist.ground().check_indices(split)?;
    let mut left: Vec<usize> = split.to_vec();
    left.sort_unstable();
    left.dedup();
    if left.is_empty() || left.len() == n {
        return Err(Error::InvalidInput("split must be a nonempty proper subset".into()));
    }
    let right: Vec<usize> = (0..n).filter(|i| !left.contains(i)).collect();
    let (ul, ur) = (upsets(left.len())?, upsets(right.len())?);
    let (wl, wr) = (1 << left.len(), 1 << right.len());
    let mut joint = vec![0.0; wl * wr];
    for (mask, p) in dist.probs().iter().enumerate() {
        joint[local_index(mask, &left) * wr + local_index(mask, &right)] += p;
    }
    let event_mass = |family: u32, marginal: &dyn Fn(usize) -> f64, width: usize| -> f64 {
        (0..width).filter(|s| family >> s & 1 == 1).map(marginal).sum()
    };
    let ml = |s: usize| (0..wr).map(|t| joint[s * wr + t]).sum::<f64>();
    let mr = |t: usize| (0..wl).map(|s| joint[s * wr + t]).sum::<f64>();
    let pl: Vec<f64> = ul.iter().map(|&a| event_mass(a, &ml, wl)).collect();
    let pr: Vec<f64> = ur.iter().map(|&b| event_mass(b, &mr, wr)).collect();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst = (0, 0);
    for (i, &a) in ul.iter().enumerate() {
        // Row sums of the joint table restricted to the left event.
        let mut col = vec![0.0; wr];
        for s in (0..wl).filter(|s| a >> s & 1 == 1) {
            for t in 0..wr {
                col[t] += joint[s * wr + t];
            }
        }
        for (j, &b) in ur.iter().enumerate() {
            let both: f64 = (0..wr).filter(|t| b >> t & 1 == 1).map(|t| col[t]).sum();
            let v = both - pl[i] * pr[j];
            if v > max_violation {
                max_violation = v;
                worst = (a, b);
            }
        }
    }
    Ok(AssociationReport {
        pairs: ul.len() * ur.len(),
        max_violation,
        worst,
        passed: max_violation <= ASSOCIATION_TOL,
    })
}
