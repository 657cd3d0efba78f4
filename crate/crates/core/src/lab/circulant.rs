use std::f64::consts::PI;

use super::monotone::{monotone_coupling, CouplingOutcome};
use super::CIRCULANT_CAP;
use crate::dpm::{check_cap, full_distribution, SubsetDistribution};
use crate::error::{Error, Result};
use crate::kernel::ContractionKernel;
use crate::linalg::{CMatrix, C64};

/// Values `f(j/m)`, `j = 0..m`, of a symbol `T -> [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantSymbol {
    values: Vec<f64>,
}

impl CirculantSymbol {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty symbol".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("symbol value {v} outside [0, 1]")));
        }
        Ok(CirculantSymbol { values })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        CirculantSymbol::new((0..m).map(|j| f(j as f64 / m as f64)).collect())
    }

    pub fn group_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `K(a, b) = (1/m) Σ_j f(j/m) e^{2πi j (a - b) / m}` on `Z_m`; its
    /// eigenvalues are the symbol values.
    pub fn kernel(&self) -> Result<ContractionKernel> {
        let m = self.values.len();
        let k = CMatrix::from_fn(m, m, |a, b| {
            let d = a as f64 - b as f64;
            self.values
                .iter()
                .enumerate()
                .map(|(j, &f)| C64::from_polar(f, 2.0 * PI * j as f64 * d / m as f64))
                .sum::<C64>()
                / m as f64
        });
        ContractionKernel::from_matrix(k)
    }
}

/// `exp(mean log f)`, zero when any value is zero.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmReport {
    pub group_size: usize,
    pub lower: f64,
    pub upper: f64,
    /// Product Bern(lower) ≼ the determinantal law.
    pub dominates_lower: CouplingOutcome,
    /// The determinantal law ≼ product Bern(upper).
    pub dominated_by_upper: CouplingOutcome,
}

impl GmReport {
    pub fn both_feasible(&self) -> bool {
        self.dominates_lower.is_feasible() && self.dominated_by_upper.is_feasible()
    }
}

/// Sandwiches the circulant determinantal law between the product measures
/// with densities `GM(f)` and `1 - GM(1 - f)`. The cyclic group stands in
/// for the integers, so a failure is a finding about the surrogate rather
/// than a contradiction.
pub fn gm_domination_check(symbol: &CirculantSymbol) -> Result<GmReport> {
    let m = symbol.group_size();
    check_cap(m, CIRCULANT_CAP)?;
    let q = symbol.kernel()?;
    let law = full_distribution(&q)?;
    let lower = geometric_mean(symbol.values());
    let flipped: Vec<f64> = symbol.values().iter().map(|f| 1.0 - f).collect();
    let upper = 1.0 - geometric_mean(&flipped);
    let low = SubsetDistribution::product(law.ground().clone(), &vec![lower; m])?;
    let high = SubsetDistribution::product(law.ground().clone(), &vec![upper; m])?;
    Ok(GmReport {
        group_size: m,
        lower,
        upper,
        dominates_lower: monotone_coupling(&low, &law)?,
        dominated_by_upper: monotone_coupling(&law, &high)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_spectrum_is_the_symbol() {
        let s = CirculantSymbol::new(vec![0.1, 0.9, 0.4, 0.0, 0.7]).unwrap();
        let q = s.kernel().unwrap();
        let mut expected = s.values().to_vec();
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in q.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        // Translation invariance.
        let k = q.matrix();
        assert!((k[(0, 1)] - k[(2, 3)]).norm() < 1e-14);
    }

    #[test]
    fn constant_symbol() {
        let r = gm_domination_check(&CirculantSymbol::new(vec![0.3; 6]).unwrap()).unwrap();
        assert!((r.lower - 0.3).abs() < 1e-12 && (r.upper - 0.3).abs() < 1e-12);
        assert!(r.both_feasible());
    }

    #[test]
    fn symbol_with_a_zero() {
        let r = gm_domination_check(&CirculantSymbol::new(vec![0.0, 0.5, 0.8, 0.2]).unwrap()).unwrap();
        assert_eq!(r.lower, 0.0);
        assert!(r.dominates_lower.is_feasible());
    }

    #[test]
    fn half_indicator_on_six() {
        let s = CirculantSymbol::from_fn(6, |t| if t < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert!(gm_domination_check(&s).unwrap().both_feasible());
    }

    #[test]
    fn smooth_symbols() {
        for m in 2..=8 {
            let s = CirculantSymbol::from_fn(m, |t| 0.5 + 0.4 * (2.0 * PI * t).cos()).unwrap();
            let r = gm_domination_check(&s).unwrap();
            assert!(r.lower <= r.upper);
            assert!(r.both_feasible(), "m={m}");
        }
    }

    #[test]
    fn validation() {
        assert!(CirculantSymbol::new(vec![1.2]).is_err());
        assert!(gm_domination_check(&CirculantSymbol::new(vec![0.5; 11]).unwrap()).is_err());
    }
}
