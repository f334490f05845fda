//! Tensor Gauss–Legendre quadrature on boxes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_POINTS: usize = 5;
const MAX_POINTS: usize = 64;

/// Nodes and weights on `[−1, 1]`, nodes ascending. Exact for polynomials
/// of degree `≤ 2q − 1`.
pub fn gauss_legendre(q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if q == 0 || q > MAX_POINTS {
        return Err(Error::domain(format!(
            "quadrature order must lie in 1..={MAX_POINTS}, got {q}"
        )));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_q.
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=q {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, q as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Tensor rule on a box with the given edge lengths, in centered
/// coordinates: points `x̃` and weights summing to the box volume.
#[derive(Clone, Debug)]
pub struct TensorRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn centered(q: usize, widths: &[f64]) -> Result<Self> {
        let (x, w) = gauss_legendre(q)?;
        let n = widths.len();
        let count = q.pow(n as u32);
        let mut points = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rest = flat;
            let mut p = vec![0.0; n];
            let mut weight = 1.0;
            for axis in (0..n).rev() {
                let i = rest % q;
                rest /= q;
                let half = widths[axis] / 2.0;
                p[axis] = half * x[i];
                weight *= half * w[i];
            }
            points.push(p);
            weights.push(weight);
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, power_integral, to_f64};

    #[test]
    fn exact_on_monomials_up_to_degree_2q_minus_1() {
        for q in 1..=12 {
            let (x, w) = gauss_legendre(q).unwrap();
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for e in 0..2 * q as u32 {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(e as i32)).sum();
                let exact = to_f64(&power_integral(&int(-1), &int(1), e));
                assert!((approx - exact).abs() < 1e-13, "q={q} e={e}");
            }
        }
    }

    #[test]
    fn not_exact_one_degree_beyond() {
        let (x, w) = gauss_legendre(3).unwrap();
        let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(6)).sum();
        assert!((approx - 2.0 / 7.0).abs() > 1e-3);
    }

    #[test]
    fn tensor_rule_integrates_box_polynomials() {
        let rule = TensorRule::centered(2, &[2.0, 0.5, 1.0]).unwrap();
        assert_eq!(rule.len(), 8);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // ∫ x̃₁² x̃₂² = (2/3)(1/96)(1)
        let f = |p: &[f64]| p[0] * p[0] * p[1] * p[1];
        let v: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * f(p)).sum();
        assert!((v - (2.0 / 3.0) * (1.0 / 96.0)).abs() < 1e-15);
        assert!(gauss_legendre(0).is_err());
    }
}
