//! One-dimensional quadrature: composite Gauss–Legendre with panel doubling.

use crate::error::{Error, Result};
use crate::linalg::C64;

const ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 14;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut slope = 1.0;
        for _ in 0..100 {
            // Legendre recurrence: p1 = P_n(x), p2 = P_{n-1}(x).
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * x * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            slope = n as f64 * (x * p1 - p2) / (x * x - 1.0);
            let dx = p1 / slope;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * slope * slope);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn composite<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> C64 {
    let h = (b - a) / panels as f64;
    let mut total = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            total += f(mid + 0.5 * h * x) * (w * 0.5 * h);
        }
    }
    total
}

/// `∫_a^b f` for a complex integrand, doubling the number of panels until two
/// successive estimates agree to `rel_tol` (relative to `max(1, |I|)`).
pub fn integrate_complex<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<C64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailure(format!("infinite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let rule = gauss_legendre(ORDER);
    let mut panels = 1;
    let mut prev = composite(&f, a, b, panels, &rule);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = composite(&f, a, b, panels, &rule);
        if (next - prev).norm() <= rel_tol * next.norm().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureFailure(format!("no convergence on [{a}, {b}] after {MAX_PANELS} panels")))
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    integrate_complex(|x| C64::new(f(x), 0.0), a, b, rel_tol).map(|z| z.re)
}
