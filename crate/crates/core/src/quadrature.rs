//! Gauss–Legendre rules and adaptive integration.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1],
/// computed by Newton iteration on P_n from the Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn apply(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.nodes.iter().zip(&self.weights).map(|(t, w)| w * f(mid + half * t)).sum::<f64>()
    }
}

/// Adaptive bisection with a 15-point Gauss–Legendre panel rule until the
/// panel and its two halves agree to `tol` (absolute, split across panels)
/// or to rounding level. At most 4096 panels are split.
pub fn integrate_adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(15);
    let rule = Rule { nodes, weights };
    let whole = rule.apply(&mut f, a, b);
    let mut budget = 4096usize;
    refine(&rule, &mut f, a, b, whole, tol, &mut budget)
}

fn refine(
    rule: &Rule,
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    budget: &mut usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.apply(f, a, m);
    let right = rule.apply(f, m, b);
    let sum = left + right;
    if !sum.is_finite() || *budget == 0 || (sum - whole).abs() <= tol.max(64.0 * f64::EPSILON * sum.abs()) {
        return sum;
    }
    *budget -= 1;
    refine(rule, f, a, m, left, 0.5 * tol, budget) + refine(rule, f, m, b, right, 0.5 * tol, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        // Degree 9 is the exactness limit for 5 nodes.
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((integral - 2.0 / 9.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let (x, w) = gauss_legendre_on(40, 0.0, PI);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = integrate_adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-7, "{v} vs {exact}");
    }
}
