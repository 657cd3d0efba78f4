use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::SCAN_CAP;
use crate::dpm::{check_cap, entropy};
use crate::error::Result;
use crate::io::write_kernel;
use crate::kernel::ContractionKernel;
use crate::random::random_contraction;
use crate::rng::{task_rng, task_seed};

/// Margins below `-MARGIN_TOL` are counterexamples.
pub const MARGIN_TOL: f64 = 1e-9;

/// `ent((Q1 + Q2) / 2) - (ent Q1 + ent Q2) / 2`.
pub fn concavity_margin(q1: &ContractionKernel, q2: &ContractionKernel) -> Result<f64> {
    let mid = (q1.matrix() + q2.matrix()) * crate::linalg::c(0.5);
    let mid = ContractionKernel::from_matrix(mid)?;
    Ok(entropy(&mid)? - 0.5 * (entropy(q1)? + entropy(q2)?))
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub trial: u64,
    /// Seed of the trial's stream.
    pub trial_seed: u64,
    pub margin: f64,
    pub q1: ContractionKernel,
    pub q2: ContractionKernel,
}

#[derive(Serialize)]
struct CounterexampleManifest<'a> {
    seed: u64,
    trial: u64,
    trial_seed: u64,
    margin: f64,
    q1: &'a str,
    q2: &'a str,
    q1_fingerprint: String,
    q2_fingerprint: String,
}

impl Counterexample {
    /// Writes `q1.kernel`, `q2.kernel` and `counterexample.json` into `dir`;
    /// returns the paths written.
    pub fn persist(&self, dir: &Path, run_seed: u64) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let p1 = dir.join("q1.kernel");
        let p2 = dir.join("q2.kernel");
        write_kernel(&p1, self.q1.kernel())?;
        write_kernel(&p2, self.q2.kernel())?;
        let manifest = CounterexampleManifest {
            seed: run_seed,
            trial: self.trial,
            trial_seed: self.trial_seed,
            margin: self.margin,
            q1: "q1.kernel",
            q2: "q2.kernel",
            q1_fingerprint: self.q1.kernel().fingerprint(),
            q2_fingerprint: self.q2.kernel().fingerprint(),
        };
        let path = dir.join("counterexample.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| crate::error::Error::InvalidInput(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(vec![p1, p2, path])
    }
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub seed: u64,
    /// First trial index of the batch.
    pub first_trial: u64,
    pub trials: u64,
    pub min_margin: f64,
    /// The most negative trial, present iff `min_margin < -MARGIN_TOL`.
    pub counterexample: Option<Counterexample>,
}

/// Trials `first..first + trials` of a scan over random contraction pairs of
/// size `dim`. Trial `t` draws from the stream `task_seed(seed, t)`, so a
/// batch split is reproducible independent of threading.
pub fn entropy_concavity_scan(dim: usize, first: u64, trials: u64, seed: u64) -> Result<ScanReport> {
    check_cap(dim, SCAN_CAP)?;
    let results: Vec<(u64, f64)> = (first..first + trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = task_rng(seed, t);
            let q1 = random_contraction(dim, &mut rng);
            let q2 = random_contraction(dim, &mut rng);
            concavity_margin(&q1, &q2).map(|m| (t, m))
        })
        .collect::<Result<_>>()?;
    let (worst, min_margin) =
        results.iter().fold((first, f64::INFINITY), |acc, &(t, m)| if m < acc.1 { (t, m) } else { acc });
    let counterexample = if min_margin < -MARGIN_TOL {
        let mut rng = task_rng(seed, worst);
        let q1 = random_contraction(dim, &mut rng);
        let q2 = random_contraction(dim, &mut rng);
        Some(Counterexample { trial: worst, trial_seed: task_seed(seed, worst), margin: min_margin, q1, q2 })
    } else {
        None
    };
    Ok(ScanReport { seed, first_trial: first, trials, min_margin, counterexample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn deterministic_endpoints() {
        let q1 = ContractionKernel::diagonal(&[1.0, 0.0]).unwrap();
        let q2 = ContractionKernel::diagonal(&[0.0, 1.0]).unwrap();
        let m = concavity_margin(&q1, &q2).unwrap();
        assert!((m - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn equal_kernels_have_zero_margin() {
        let mut rng = rng_from_seed(8);
        for _ in 0..10 {
            let q = random_contraction(4, &mut rng);
            assert!(concavity_margin(&q, &q).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn batches_compose() {
        let whole = entropy_concavity_scan(3, 0, 200, 42).unwrap();
        let a = entropy_concavity_scan(3, 0, 120, 42).unwrap();
        let b = entropy_concavity_scan(3, 120, 80, 42).unwrap();
        assert_eq!(whole.min_margin, a.min_margin.min(b.min_margin));
        assert!(whole.counterexample.is_none() && whole.min_margin >= -MARGIN_TOL);
    }

    #[test]
    fn persistence_round_trips() {
        let mut rng = rng_from_seed(1);
        let c = Counterexample {
            trial: 3,
            trial_seed: 77,
            margin: -1.0,
            q1: random_contraction(3, &mut rng),
            q2: random_contraction(3, &mut rng),
        };
        let dir = tempfile::tempdir().unwrap();
        let paths = c.persist(dir.path(), 5).unwrap();
        assert_eq!(paths.len(), 3);
        let back = crate::io::parse_kernel(&paths[0], None, 1e-10).unwrap();
        assert_eq!(back.entries(), c.q1.kernel().entries());
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&paths[2]).unwrap()).unwrap();
        assert_eq!(json["trial"], 3);
    }
}
