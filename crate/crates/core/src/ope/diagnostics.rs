//! Checks of sampled configurations against exact quantities.

use std::io::Write;

use super::{OpeFamily, PointConfiguration, Region};
use crate::error::{Error, Result};
use crate::linalg::{det, hermitian_eigen};

pub const DENSITY_TOL: f64 = 1e-8;
pub const MIN_INTENSITY_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    pub determinant: f64,
    /// `c_n Π_{i<j} |z_i - z_j|^2`.
    pub vandermonde: f64,
    pub relative_difference: f64,
    pub passed: bool,
}

/// Compares `det [K(z_i, z_j)]` with the Vandermonde form. The difference is
/// measured relative to the larger side, floored at `1e-6` times the Hadamard
/// bound `Π K(z_i, z_i)`: below that floor the determinant carries no
/// relative accuracy.
pub fn joint_density_check(family: &OpeFamily, points: &[super::C64]) -> Result<DensityReport> {
    if points.len() != family.n {
        return Err(Error::WrongCardinality { expected: family.n, got: points.len() });
    }
    let k = family.kernel_matrix(points);
    let determinant = det(&k).re;
    let mut ln_v = family.ln_vandermonde_constant();
    let mut zero = false;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm_sqr();
            if d == 0.0 {
                zero = true;
            } else {
                ln_v += d.ln();
            }
        }
    }
    let vandermonde = if zero { 0.0 } else { ln_v.exp() };
    let hadamard: f64 = (0..points.len()).map(|i| k[(i, i)].re).product();
    let scale = determinant.abs().max(vandermonde).max(1e-6 * hadamard);
    let relative_difference = if scale > 0.0 { (determinant - vandermonde).abs() / scale } else { 0.0 };
    Ok(DensityReport { determinant, vandermonde, relative_difference, passed: relative_difference < DENSITY_TOL })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntensityBin {
    pub lo: f64,
    pub hi: f64,
    pub observed: u64,
    pub expected: f64,
    /// `(observed - expected) / sqrt(expected)`.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntensityReport {
    pub samples: usize,
    pub bins: Vec<IntensityBin>,
    pub max_abs_z: f64,
}

impl IntensityReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,observed,expected,z")?;
        for b in &self.bins {
            writeln!(w, "{},{},{},{},{}", b.lo, b.hi, b.observed, b.expected, b.z)?;
        }
        Ok(())
    }
}

/// Histogram of the coordinate of all points against `S ∫_bin K(x,x) dμ`.
/// Bins split the family's effective range evenly; unbounded edge bins
/// absorb the tails.
pub fn empirical_intensity(
    family: &OpeFamily,
    samples: &[PointConfiguration],
    bins: usize,
) -> Result<IntensityReport> {
    if samples.len() < MIN_INTENSITY_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "intensity needs at least {MIN_INTENSITY_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if bins == 0 {
        return Err(Error::InvalidInput("need at least one bin".into()));
    }
    let (lo, hi) = family.effective_range();
    let (full_lo, full_hi) = family.coordinate_range();
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    edges[0] = full_lo;
    edges[bins] = full_hi;
    let mut observed = vec![0u64; bins];
    for c in samples {
        for &z in &c.points {
            let t = family.coordinate(z);
            let b = (((t - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            observed[b] += 1;
        }
    }
    let s = samples.len() as f64;
    let mut out = Vec::with_capacity(bins);
    let mut max_abs_z: f64 = 0.0;
    for b in 0..bins {
        let expected = s * family.expected_count(&Region { lo: edges[b], hi: edges[b + 1] })?;
        let diff = observed[b] as f64 - expected;
        let z = if expected > 0.0 {
            diff / expected.sqrt()
        } else if observed[b] == 0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_abs_z = max_abs_z.max(z.abs());
        out.push(IntensityBin { lo: edges[b], hi: edges[b + 1], observed: observed[b], expected, z });
    }
    Ok(IntensityReport { samples: samples.len(), bins: out, max_abs_z })
}

/// Sample moments of a region count next to the exact values. The count is
/// a sum of independent Bernoulli(λ_i) over the eigenvalues of the
/// compressed kernel, which gives every cumulant in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct CountStats {
    pub samples: usize,
    pub eigenvalues: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub exact_mean: f64,
    pub exact_variance: f64,
    pub exact_skewness: f64,
    pub exact_excess_kurtosis: f64,
    pub mean_z: f64,
    pub variance_z: f64,
    pub skewness_z: f64,
    pub kurtosis_z: f64,
}

impl CountStats {
    pub fn max_abs_z(&self) -> f64 {
        [self.mean_z, self.variance_z, self.skewness_z, self.kurtosis_z].iter().fold(0.0, |m, z| m.max(z.abs()))
    }
}

/// Degenerate variances (below this) make standardized moments meaningless.
const DEGENERATE_VARIANCE: f64 = 1e-12;

pub fn count_stats(counts: &[usize], eigenvalues: &[f64]) -> CountStats {
    let m = counts.len().max(1) as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / m;
    let central = |p: i32| counts.iter().map(|&c| (c as f64 - mean).powi(p)).sum::<f64>() / m;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let variance = if counts.len() > 1 { m2 * m / (m - 1.0) } else { 0.0 };

    let k1: f64 = eigenvalues.iter().sum();
    let k2: f64 = eigenvalues.iter().map(|l| l * (1.0 - l)).sum();
    let k3: f64 = eigenvalues.iter().map(|l| l * (1.0 - l) * (1.0 - 2.0 * l)).sum();
    let k4: f64 = eigenvalues.iter().map(|l| l * (1.0 - l) * (1.0 - 6.0 * l * (1.0 - l))).sum();

    let degenerate = k2 < DEGENERATE_VARIANCE;
    let (skewness, excess_kurtosis) =
        if m2 > DEGENERATE_VARIANCE { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    let (exact_skewness, exact_excess_kurtosis) =
        if degenerate { (0.0, 0.0) } else { (k3 / k2.powf(1.5), k4 / (k2 * k2)) };
    let z = |diff: f64, se: f64| if se > 0.0 { diff / se } else if diff.abs() < 1e-9 { 0.0 } else { f64::INFINITY };
    let se = |v: f64| if degenerate { 0.0 } else { (v / m).max(0.0).sqrt() };
    let mean_z = z(mean - k1, se(k2));
    // Var of the sample variance ≈ (μ4 - σ^4) / m with μ4 = κ4 + 3κ2^2.
    let variance_z = z(variance - k2, se(k4 + 2.0 * k2 * k2));
    let (skewness_z, kurtosis_z) = if degenerate {
        (0.0, 0.0)
    } else {
        ((skewness - exact_skewness) / (6.0 / m).sqrt(), (excess_kurtosis - exact_excess_kurtosis) / (24.0 / m).sqrt())
    };
    CountStats {
        samples: counts.len(),
        eigenvalues: eigenvalues.to_vec(),
        mean,
        variance,
        skewness,
        excess_kurtosis,
        exact_mean: k1,
        exact_variance: k2,
        exact_skewness,
        exact_excess_kurtosis,
        mean_z,
        variance_z,
        skewness_z,
        kurtosis_z,
    }
}

/// Eigenvalues of the compressed kernel on a region, clamped to `[0, 1]`.
pub fn region_eigenvalues(family: &OpeFamily, region: &Region) -> Result<Vec<f64>> {
    let (vals, _) = hermitian_eigen(&family.gram(region)?)?;
    Ok(vals.into_iter().map(|l| l.clamp(0.0, 1.0)).collect())
}

/// Count statistics of `𝔛(region)` over the samples.
pub fn count_clt_stat(family: &OpeFamily, samples: &[PointConfiguration], region: &Region) -> Result<CountStats> {
    let counts: Vec<usize> = samples
        .iter()
        .map(|c| c.points.iter().filter(|&&z| region.contains(family.coordinate(z))).count())
        .collect();
    Ok(count_stats(&counts, &region_eigenvalues(family, region)?))
}

/// CSV with one row per point: `seed,point_index,re,im`.
pub fn write_ope_samples<W: Write>(mut w: W, samples: &[PointConfiguration]) -> Result<()> {
    writeln!(w, "seed,point_index,re,im")?;
    for c in samples {
        for (i, z) in c.points.iter().enumerate() {
            writeln!(w, "{},{},{},{}", c.seed, i, z.re, z.im)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ope::{circle_point, OpeKind, OpeSampler};
    use crate::linalg::C64;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn fam(kind: OpeKind, n: usize) -> OpeFamily {
        OpeFamily::new(kind, n).unwrap()
    }

    #[test]
    fn density_examples() {
        let cue = fam(OpeKind::Cue, 2);
        let r = joint_density_check(&cue, &[circle_point(0.0), circle_point(0.5)]).unwrap();
        assert!((r.determinant - 4.0).abs() < 1e-12 && r.passed);
        let r = joint_density_check(&cue, &[circle_point(0.2), circle_point(0.2)]).unwrap();
        assert_eq!(r.vandermonde, 0.0);
        assert!(r.determinant.abs() < 1e-12 && r.passed);
        assert!(matches!(
            joint_density_check(&cue, &[circle_point(0.1)]),
            Err(Error::WrongCardinality { expected: 2, got: 1 })
        ));
        let disk = fam(OpeKind::Disk, 2);
        let mut rng = rng_from_seed(4);
        for _ in 0..100 {
            let mut p = || C64::from_polar(rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>());
            let pts = [p(), p()];
            assert!(joint_density_check(&disk, &pts).unwrap().relative_difference < 1e-10);
        }
    }

    #[test]
    fn density_holds_on_sampled_configurations() {
        for kind in OpeKind::ALL {
            let f = fam(kind, 6);
            for c in OpeSampler::new(f).sample_many(40, 2).unwrap() {
                let r = joint_density_check(&f, &c.points).unwrap();
                assert!(r.determinant >= -1e-12 * r.vandermonde.max(1.0));
                assert!(r.passed, "{kind}: {r:?}");
            }
        }
    }

    #[test]
    fn cue_intensity_is_flat() {
        let f = fam(OpeKind::Cue, 5);
        let samples = OpeSampler::new(f).sample_many(4000, 8).unwrap();
        let r = empirical_intensity(&f, &samples, 20).unwrap();
        assert!(r.max_abs_z < 4.0, "{}", r.max_abs_z);
        for b in &r.bins {
            assert!((b.expected - 4000.0 * 5.0 / 20.0).abs() < 1e-6);
        }
        assert!(empirical_intensity(&f, &samples[..10], 20).is_err());
    }

    #[test]
    fn gue_total_mass_and_ginibre_radial_profile() {
        let g = fam(OpeKind::Gue, 4);
        let samples = OpeSampler::new(g).sample_many(2000, 1).unwrap();
        let r = empirical_intensity(&g, &samples, 16).unwrap();
        assert_eq!(r.bins.iter().map(|b| b.observed).sum::<u64>(), 8000);
        assert!((r.bins.iter().map(|b| b.expected).sum::<f64>() - 8000.0).abs() < 1e-6);
        assert!(r.max_abs_z < 4.5);

        let gin = fam(OpeKind::Ginibre, 4);
        let samples = OpeSampler::new(gin).sample_many(3000, 1).unwrap();
        let r = empirical_intensity(&gin, &samples, 12).unwrap();
        // Independent radial oracle: Σ_{k<4} r^{2k} e^{-r^2} / k! against r dr dθ / π.
        for b in &r.bins {
            let hi = b.hi.min(12.0);
            let profile = |x: f64| {
                let s: f64 = (0..4).map(|k| x.powi(2 * k) / (1..=k).product::<i32>() as f64).sum();
                2.0 * x * s * (-x * x).exp()
            };
            let (xs, ws) = crate::ope::quadrature::gauss_legendre(40);
            let mass: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(x, w)| w * 0.5 * (hi - b.lo) * profile(b.lo + 0.5 * (hi - b.lo) * (x + 1.0)))
                .sum();
            assert!((b.expected - 3000.0 * mass).abs() < 1e-6 * 3000.0, "{b:?} vs {mass}");
        }
        assert!(r.max_abs_z < 4.5);
    }

    #[test]
    fn count_stat_examples() {
        let f = fam(OpeKind::Cue, 16);
        let samples = OpeSampler::new(f).sample_many(10_000, 3).unwrap();
        let half = Region::new(0.0, 0.5).unwrap();
        let s = count_clt_stat(&f, &samples, &half).unwrap();
        assert!((s.exact_mean - 8.0).abs() < 1e-9);
        assert!(s.skewness_z.abs() < 4.0, "{s:?}");
        assert!(s.mean_z.abs() < 4.0 && s.variance_z.abs() < 4.0 && s.kurtosis_z.abs() < 5.0);

        let all = count_clt_stat(&f, &samples, &f.whole()).unwrap();
        assert_eq!(all.variance, 0.0);
        assert!(all.exact_variance < 1e-9 && all.max_abs_z() == 0.0);
        let empty = count_clt_stat(&f, &samples, &Region::new(0.3, 0.3).unwrap()).unwrap();
        assert_eq!(empty.mean, 0.0);
        assert_eq!(empty.exact_mean, 0.0);
    }

    #[test]
    fn sample_csv_layout() {
        let c = PointConfiguration { points: vec![C64::new(0.5, -1.0)], seed: 9, proposals: 1, rejections: 0 };
        let mut buf = Vec::new();
        write_ope_samples(&mut buf, &[c]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "seed,point_index,re,im\n9,0,0.5,-1\n");
    }
}
