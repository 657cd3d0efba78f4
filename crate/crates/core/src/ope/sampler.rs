//! Exact sequential sampling of a finite-rank ensemble by rejection.
//!
//! Step `k+1` draws a proposal from the normalized diagonal `K(x,x) dμ / n`
//! and accepts it with probability `|r(x)|^2 / K(x,x)`, where `r(x)` is the
//! feature vector `(φ_0(x), ..., φ_{n-1}(x))` with the directions of the
//! points already chosen removed.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use super::{circle_point, OpeFamily, OpeKind};
use crate::error::{Error, Result};
use crate::linalg::{deflate, norm_sqr, C64};
use crate::rng::{rng_from_seed, task_seed, DetRng};

/// Proposals allowed per point before giving up.
pub const REJECTION_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PointConfiguration {
    /// Points in the order they were selected.
    pub points: Vec<C64>,
    /// Seed of the generator that produced this configuration.
    pub seed: u64,
    pub proposals: u64,
    pub rejections: u64,
}

impl PointConfiguration {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            (self.proposals - self.rejections) as f64 / self.proposals as f64
        }
    }
}

/// Sampler for one family; precomputes the GUE envelope constants.
#[derive(Clone, Debug)]
pub struct OpeSampler {
    family: OpeFamily,
    /// Per-degree bound on `h_k^2 φ / N(0, 2k+2)` (GUE only).
    gue_bounds: Vec<f64>,
    budget: u64,
}

fn hermite(k: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

fn gue_envelope_variance(k: usize) -> f64 {
    2.0 * k as f64 + 2.0
}

/// `sup_x h_k(x)^2 e^{-x^2/2} / (e^{-x^2/2σ^2} / σ)` on a fine grid, plus 2%.
fn gue_envelope_bound(k: usize) -> f64 {
    let s2 = gue_envelope_variance(k);
    let reach = 2.0 * ((k + 1) as f64).sqrt() + 12.0;
    let steps = (reach / 1e-3) as usize;
    let mut best: f64 = 0.0;
    for i in 0..=steps {
        let x = i as f64 * 1e-3;
        let h = hermite(k, x);
        let r = s2.sqrt() * h * h * (-0.5 * x * x * (1.0 - 1.0 / s2)).exp();
        best = best.max(r);
    }
    best * 1.02
}

impl OpeSampler {
    pub fn new(family: OpeFamily) -> Self {
        let gue_bounds = if family.kind == OpeKind::Gue {
            (0..family.n).map(gue_envelope_bound).collect()
        } else {
            Vec::new()
        };
        OpeSampler { family, gue_bounds, budget: REJECTION_BUDGET }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget.max(1);
        self
    }

    pub fn family(&self) -> &OpeFamily {
        &self.family
    }

    fn uniform_angle(rng: &mut DetRng) -> f64 {
        2.0 * PI * rng.random::<f64>()
    }

    /// Draw from `|φ_k|^2 dμ`.
    fn draw_basis_mass(&self, k: usize, rng: &mut DetRng) -> C64 {
        let n = self.family.n;
        match self.family.kind {
            OpeKind::Gue => {
                let s = gue_envelope_variance(k).sqrt();
                let bound = self.gue_bounds[k];
                loop {
                    let z: f64 = rng.sample(StandardNormal);
                    let x = s * z;
                    let h = hermite(k, x);
                    let ratio = s * h * h * (-0.5 * x * x * (1.0 - 1.0 / (s * s))).exp() / bound;
                    if rng.random::<f64>() < ratio {
                        return C64::new(x, 0.0);
                    }
                }
            }
            OpeKind::Cue => circle_point(rng.random()),
            OpeKind::Ginibre => {
                let r2: f64 = Gamma::new((k + 1) as f64, 1.0).expect("valid shape").sample(rng);
                C64::from_polar(r2.sqrt(), Self::uniform_angle(rng))
            }
            OpeKind::Disk => {
                let u: f64 = rng.random();
                let r2 = u.powf(1.0 / (k + 1) as f64);
                C64::from_polar(r2.sqrt(), Self::uniform_angle(rng))
            }
            OpeKind::Sphere => {
                let t: f64 = Beta::new((k + 1) as f64, (n - k) as f64).expect("valid shape").sample(rng);
                let r2 = t / (1.0 - t);
                C64::from_polar(r2.sqrt(), Self::uniform_angle(rng))
            }
        }
    }

    pub fn sample(&self, rng: &mut DetRng) -> Result<PointConfiguration> {
        let n = self.family.n;
        let mut points = Vec::with_capacity(n);
        let mut directions: Vec<Vec<C64>> = Vec::with_capacity(n);
        let (mut proposals, mut rejections) = (0u64, 0u64);
        for _ in 0..n {
            let mut attempts = 0u64;
            loop {
                if attempts == self.budget {
                    return Err(Error::RejectionStall { attempts });
                }
                attempts += 1;
                proposals += 1;
                let k = rng.random_range(0..n);
                let x = self.draw_basis_mass(k, rng);
                let feature = self.family.basis_values(x);
                let diag = norm_sqr(&feature);
                let mut residual = feature;
                deflate(&mut residual, &directions);
                let mass = norm_sqr(&residual);
                if diag > 0.0 && mass > 0.0 && rng.random::<f64>() * diag < mass {
                    let scale = 1.0 / mass.sqrt();
                    residual.iter_mut().for_each(|v| *v *= scale);
                    directions.push(residual);
                    points.push(x);
                    break;
                }
                rejections += 1;
            }
        }
        Ok(PointConfiguration { points, seed: 0, proposals, rejections })
    }

    pub fn sample_seeded(&self, seed: u64) -> Result<PointConfiguration> {
        let mut rng = rng_from_seed(seed);
        let mut c = self.sample(&mut rng)?;
        c.seed = seed;
        Ok(c)
    }

    /// `count` configurations; configuration `i` uses the stream
    /// `task_seed(seed, i)` so the output does not depend on thread count.
    pub fn sample_many(&self, count: usize, seed: u64) -> Result<Vec<PointConfiguration>> {
        (0..count as u64).into_par_iter().map(|i| self.sample_seeded(task_seed(seed, i))).collect()
    }
}

pub fn sample_ope(family: &OpeFamily, rng: &mut DetRng) -> Result<PointConfiguration> {
    OpeSampler::new(*family).sample(rng)
}
