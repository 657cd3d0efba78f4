//! Finite-`n` orthogonal polynomial ensembles: the projection of `L^2(μ)`
//! onto polynomials of degree `< n` for five classical base measures `μ`.
//!
//! Points are complex positions. GUE points lie on the real axis and CUE
//! points on the unit circle (`z = e^{2πiθ}`, `θ ∈ [0, 1)`).
//!
//! Each family also has a scalar coordinate used for regions, histograms
//! and discretization cells: `x` for GUE, the angle `θ` for CUE, `|z|` for
//! Ginibre and Disk, and `|z|^2 / (1 + |z|^2)` for Sphere (the height on
//! the sphere, in which the one-point intensity is flat).

mod diagnostics;
mod discretize;
pub mod quadrature;
mod sampler;

pub use diagnostics::{
    count_clt_stat, count_stats, empirical_intensity, joint_density_check, region_eigenvalues, write_ope_samples,
    CountStats, DensityReport, IntensityBin, IntensityReport, MIN_INTENSITY_SAMPLES,
};
pub use discretize::{
    continuous_cell_counts, count_law_distance, discretize_counts, empirical_count_law, CountLaw, Discretization,
};
pub use sampler::{sample_ope, OpeSampler, PointConfiguration, REJECTION_BUDGET};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use quadrature::{integrate, integrate_complex};

const TAU: f64 = 2.0 * PI;
/// Relative tolerance of every Gram and intensity integral.
pub const QUADRATURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpeKind {
    /// Gaussian unitary ensemble: `μ` standard Gaussian on `R`, Hermite basis.
    Gue,
    /// Circular unitary ensemble: `μ` uniform on the unit circle, `φ_k = z^k`.
    Cue,
    /// Ginibre: `μ` standard complex Gaussian, `φ_k = z^k / sqrt(k!)`.
    Ginibre,
    /// `μ` uniform on the unit disk, `φ_k = sqrt(k+1) z^k`.
    Disk,
    /// Spherical ensemble: `μ` with density `n/π (1+|z|^2)^{-n-1}`,
    /// `φ_k = sqrt(C(n-1, k)) z^k`.
    Sphere,
}

impl OpeKind {
    pub const ALL: [OpeKind; 5] = [OpeKind::Gue, OpeKind::Cue, OpeKind::Ginibre, OpeKind::Disk, OpeKind::Sphere];

    pub fn name(self) -> &'static str {
        match self {
            OpeKind::Gue => "gue",
            OpeKind::Cue => "cue",
            OpeKind::Ginibre => "ginibre",
            OpeKind::Disk => "disk",
            OpeKind::Sphere => "sphere",
        }
    }
}

impl fmt::Display for OpeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown ensemble {s:?}")))
    }
}

/// Half-open interval `[lo, hi)` of a family's coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInput(format!("bad region [{lo}, {hi})")));
        }
        Ok(Region { lo, hi })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t < self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OpeFamily {
    pub kind: OpeKind,
    pub n: usize,
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

impl OpeFamily {
    pub fn new(kind: OpeKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("an ensemble needs n >= 1".into()));
        }
        Ok(OpeFamily { kind, n })
    }

    /// Values `φ_0(z), ..., φ_{n-1}(z)`.
    pub fn basis_values(&self, z: C64) -> Vec<C64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        match self.kind {
            OpeKind::Gue => {
                // Orthonormal Hermite: h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1).
                let x = z.re;
                let (mut prev, mut cur) = (0.0, 1.0);
                for k in 0..n {
                    out.push(C64::new(cur, 0.0));
                    let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
                    prev = cur;
                    cur = next;
                }
            }
            OpeKind::Cue => {
                let mut p = C64::new(1.0, 0.0);
                for _ in 0..n {
                    out.push(p);
                    p *= z;
                }
            }
            OpeKind::Ginibre => {
                let mut p = C64::new(1.0, 0.0);
                for k in 0..n {
                    out.push(p);
                    p *= z / ((k + 1) as f64).sqrt();
                }
            }
            OpeKind::Disk => {
                let mut p = C64::new(1.0, 0.0);
                for k in 0..n {
                    out.push(p * ((k + 1) as f64).sqrt());
                    p *= z;
                }
            }
            OpeKind::Sphere => {
                // sqrt(C(n-1, k)) z^k via C(n-1, k) / C(n-1, k-1) = (n-k) / k.
                let mut p = C64::new(1.0, 0.0);
                for k in 0..n {
                    out.push(p);
                    if k + 1 < n {
                        p *= z * (((n - 1 - k) as f64) / ((k + 1) as f64)).sqrt();
                    }
                }
            }
        }
        out
    }

    /// `φ_k(z)`.
    pub fn basis(&self, k: usize, z: C64) -> Result<C64> {
        if k >= self.n {
            return Err(Error::IndexOutOfRange { index: k, limit: self.n });
        }
        Ok(self.basis_values(z)[k])
    }

    /// `K_n(x, y) = Σ_k φ_k(x) conj(φ_k(y))`.
    pub fn kernel(&self, x: C64, y: C64) -> C64 {
        let a = self.basis_values(x);
        let b = self.basis_values(y);
        a.iter().zip(&b).map(|(p, q)| p * q.conj()).sum()
    }

    /// Kernel matrix `[K(z_i, z_j)]`.
    pub fn kernel_matrix(&self, points: &[C64]) -> CMatrix {
        let vals: Vec<Vec<C64>> = points.iter().map(|&z| self.basis_values(z)).collect();
        CMatrix::from_fn(points.len(), points.len(), |i, j| {
            vals[i].iter().zip(&vals[j]).map(|(p, q)| p * q.conj()).sum()
        })
    }

    /// `ln c_n` in `det K_n = c_n Π_{i<j} |z_i - z_j|^2`.
    pub fn ln_vandermonde_constant(&self) -> f64 {
        let n = self.n;
        match self.kind {
            OpeKind::Gue | OpeKind::Ginibre => -(1..n).map(ln_factorial).sum::<f64>(),
            OpeKind::Cue => 0.0,
            OpeKind::Disk => ln_factorial(n),
            OpeKind::Sphere => (1..n).map(|j| ln_binomial(n - 1, j)).sum(),
        }
    }

    /// Scalar coordinate of a point (see the module docs).
    pub fn coordinate(&self, z: C64) -> f64 {
        match self.kind {
            OpeKind::Gue => z.re,
            OpeKind::Cue => {
                let t = z.arg() / TAU;
                if t < 0.0 {
                    t + 1.0
                } else {
                    t
                }
            }
            OpeKind::Ginibre | OpeKind::Disk => z.norm(),
            OpeKind::Sphere => {
                let s = z.norm_sqr();
                s / (1.0 + s)
            }
        }
    }

    /// Range of the coordinate (possibly unbounded).
    pub fn coordinate_range(&self) -> (f64, f64) {
        match self.kind {
            OpeKind::Gue => (f64::NEG_INFINITY, f64::INFINITY),
            OpeKind::Ginibre => (0.0, f64::INFINITY),
            OpeKind::Cue | OpeKind::Disk | OpeKind::Sphere => (0.0, 1.0),
        }
    }

    /// Finite window outside of which the one-point intensity has mass
    /// below roughly `e^{-40}`.
    pub fn effective_range(&self) -> (f64, f64) {
        let n = self.n as f64;
        match self.kind {
            OpeKind::Gue => {
                let l = 2.0 * n.sqrt() + 12.0;
                (-l, l)
            }
            OpeKind::Ginibre => (0.0, (n + 12.0 * n.sqrt() + 60.0).sqrt()),
            _ => self.coordinate_range(),
        }
    }

    pub fn whole(&self) -> Region {
        let (lo, hi) = self.coordinate_range();
        Region { lo, hi }
    }

    fn clip(&self, r: &Region) -> (f64, f64) {
        let (lo, hi) = self.effective_range();
        (r.lo.max(lo), r.hi.min(hi).max(r.lo.max(lo)))
    }

    /// Density of `|φ_k|^2 dμ` pushed forward to the coordinate. Defined
    /// for every family; for GUE and CUE the coordinate is the full
    /// position so off-diagonal Gram entries need [`OpeFamily::gram`].
    pub fn basis_mass_density(&self, k: usize, t: f64) -> f64 {
        let n = self.n;
        match self.kind {
            OpeKind::Gue => {
                let h = self.basis_values(C64::new(t, 0.0))[k].re;
                h * h * (-t * t / 2.0).exp() / TAU.sqrt()
            }
            OpeKind::Cue => 1.0,
            OpeKind::Ginibre => {
                if t <= 0.0 {
                    return 0.0;
                }
                (2.0 * k as f64 * t.ln() - t * t - ln_factorial(k)).exp() * 2.0 * t
            }
            OpeKind::Disk => (k + 1) as f64 * t.powi(2 * k as i32) * 2.0 * t,
            OpeKind::Sphere => {
                // Beta(k+1, n-k) density.
                if t <= 0.0 || t >= 1.0 {
                    let edge = if t <= 0.0 { k == 0 } else { k == n - 1 };
                    return if edge { n as f64 } else { 0.0 };
                }
                let ln_norm = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k - 1);
                (ln_norm + k as f64 * t.ln() + (n - k - 1) as f64 * (1.0 - t).ln()).exp()
            }
        }
    }

    /// One-point intensity `K(z, z) dμ` pushed forward to the coordinate.
    pub fn coordinate_density(&self, t: f64) -> f64 {
        match self.kind {
            OpeKind::Cue | OpeKind::Sphere => self.n as f64,
            _ => (0..self.n).map(|k| self.basis_mass_density(k, t)).sum(),
        }
    }

    /// Expected number of points in a region.
    pub fn expected_count(&self, r: &Region) -> Result<f64> {
        let (lo, hi) = self.clip(r);
        integrate(|t| self.coordinate_density(t), lo, hi, QUADRATURE_TOL)
    }

    /// Gram matrix `G_jk = ∫_R φ_j conj(φ_k) dμ` of the basis restricted to a
    /// region. Planar families only have diagonal entries because regions are
    /// rotation-invariant annuli.
    pub fn gram(&self, r: &Region) -> Result<CMatrix> {
        let n = self.n;
        let (lo, hi) = self.clip(r);
        let mut g = CMatrix::zeros(n, n);
        match self.kind {
            OpeKind::Gue => {
                for j in 0..n {
                    for k in 0..=j {
                        let v = integrate(
                            |t| {
                                let b = self.basis_values(C64::new(t, 0.0));
                                b[j].re * b[k].re * (-t * t / 2.0).exp() / TAU.sqrt()
                            },
                            lo,
                            hi,
                            QUADRATURE_TOL,
                        )?;
                        g[(j, k)] = C64::new(v, 0.0);
                        g[(k, j)] = C64::new(v, 0.0);
                    }
                }
            }
            OpeKind::Cue => {
                for j in 0..n {
                    for k in 0..=j {
                        let d = (j as f64) - (k as f64);
                        let v = integrate_complex(|t| C64::new(0.0, TAU * d * t).exp(), lo, hi, QUADRATURE_TOL)?;
                        g[(j, k)] = v;
                        g[(k, j)] = v.conj();
                    }
                }
            }
            OpeKind::Ginibre | OpeKind::Disk | OpeKind::Sphere => {
                for k in 0..n {
                    let v = integrate(|t| self.basis_mass_density(k, t), lo, hi, QUADRATURE_TOL)?;
                    g[(k, k)] = C64::new(v, 0.0);
                }
            }
        }
        Ok(g)
    }

    /// Whether `z` lies in the support of `μ`.
    pub fn in_support(&self, z: C64) -> bool {
        match self.kind {
            OpeKind::Gue => z.im == 0.0 && z.re.is_finite(),
            OpeKind::Cue => (z.norm() - 1.0).abs() < 1e-12,
            OpeKind::Disk => z.norm() < 1.0,
            OpeKind::Ginibre | OpeKind::Sphere => z.re.is_finite() && z.im.is_finite(),
        }
    }
}

/// `φ_k` as a standalone callable, checked against `k < n`.
#[derive(Clone, Copy, Debug)]
pub struct BasisFunction {
    family: OpeFamily,
    k: usize,
}

impl BasisFunction {
    pub fn eval(&self, z: C64) -> C64 {
        self.family.basis_values(z)[self.k]
    }
}

pub fn orthonormal_basis(family: OpeFamily, k: usize) -> Result<BasisFunction> {
    if k >= family.n {
        return Err(Error::IndexOutOfRange { index: k, limit: family.n });
    }
    Ok(BasisFunction { family, k })
}

pub fn kernel_eval(family: &OpeFamily, x: C64, y: C64) -> C64 {
    family.kernel(x, y)
}

/// Point on the unit circle at angle `θ ∈ [0, 1)`.
pub fn circle_point(theta: f64) -> C64 {
    C64::from_polar(1.0, TAU * theta)
}

/// Inverse stereographic projection of `z` onto the unit sphere.
pub fn stereographic(z: C64) -> [f64; 3] {
    let s = z.norm_sqr();
    [2.0 * z.re / (1.0 + s), 2.0 * z.im / (1.0 + s), (s - 1.0) / (s + 1.0)]
}
