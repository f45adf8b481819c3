//! Bulk samples of sine_β (β ∈ {1, 2, 4}) from Gaussian β-ensembles.
//!
//! Matrices are drawn with weight exp(−(β/2) Σλ²) on the eigenvalues, whose
//! density is asymptotically a semicircle of radius √(2n). Eigenvalues are
//! unfolded with the semicircle counting function so the centre of the
//! spectrum has unit density, then restricted to the requested window.
//! The result is sine_β only in the n → ∞ limit.

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point};
use crate::rng::{Purpose, SeedSpec};
use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

fn normal(rng: &mut impl Rng, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sd
}

/// Semicircle counting function n·F(λ/√(2n)) − n/2.
pub fn unfold_semicircle(lambda: f64, n: usize) -> f64 {
    let u = (lambda / (2.0 * n as f64).sqrt()).clamp(-1.0, 1.0);
    n as f64 * (u * (1.0 - u * u).sqrt() + u.asin()) / PI
}

/// Eigenvalues of GOE (β = 1), GUE (β = 2) or GSE (β = 4) of size n.
pub fn gaussian_ensemble_eigenvalues(beta: u32, n: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    let mut rng = seed.rng(Purpose::Sampler);
    let numeric = |e: faer::linalg::evd::EvdError| Error::Numeric { message: format!("{e:?}"), seed };
    match beta {
        1 => {
            let mut h = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                h[(i, i)] = normal(&mut rng, 1.0);
                for j in i + 1..n {
                    let v = normal(&mut rng, std::f64::consts::FRAC_1_SQRT_2);
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            h.self_adjoint_eigenvalues(Side::Lower).map_err(numeric)
        }
        2 => {
            let mut h = Mat::<c64>::zeros(n, n);
            for i in 0..n {
                h[(i, i)] = c64::new(normal(&mut rng, std::f64::consts::FRAC_1_SQRT_2), 0.0);
                for j in i + 1..n {
                    let v = c64::new(normal(&mut rng, 0.5), normal(&mut rng, 0.5));
                    h[(i, j)] = v;
                    h[(j, i)] = v.conj();
                }
            }
            h.self_adjoint_eigenvalues(Side::Lower).map_err(numeric)
        }
        4 => {
            // Quaternion self-dual Hermitian matrix [[A, B], [−B̄, Ā]] with A
            // Hermitian and B antisymmetric; each eigenvalue appears twice.
            let sd = (0.125f64).sqrt();
            let mut h = Mat::<c64>::zeros(2 * n, 2 * n);
            for i in 0..n {
                let d = c64::new(normal(&mut rng, 0.5), 0.0);
                h[(i, i)] = d;
                h[(n + i, n + i)] = d;
                for j in i + 1..n {
                    let a = c64::new(normal(&mut rng, sd), normal(&mut rng, sd));
                    let b = c64::new(normal(&mut rng, sd), normal(&mut rng, sd));
                    h[(i, j)] = a;
                    h[(j, i)] = a.conj();
                    h[(n + i, n + j)] = a.conj();
                    h[(n + j, n + i)] = a;
                    h[(i, n + j)] = b;
                    h[(j, n + i)] = -b;
                    h[(n + j, i)] = b.conj();
                    h[(n + i, j)] = -b.conj();
                }
            }
            let ev = h.self_adjoint_eigenvalues(Side::Lower).map_err(numeric)?;
            Ok(ev.into_iter().step_by(2).collect())
        }
        _ => Err(Error::invalid("beta", format!("Gaussian ensembles support beta in {{1, 2, 4}}, got {beta}"))),
    }
}

/// Approximate sine_β sample on [−half_width, half_width] from the centre
/// of an n-dimensional Gaussian β-ensemble.
pub fn sample_sine_bulk(beta: u32, n: usize, half_width: f64, seed: SeedSpec) -> Result<Configuration> {
    if !(half_width > 0.0) || half_width > 0.1 * n as f64 {
        return Err(Error::invalid(
            "half_width",
            format!("{half_width} must lie in (0, 0.1·n] to stay in the bulk of an n={n} ensemble"),
        ));
    }
    let eig = gaussian_ensemble_eigenvalues(beta, n, seed)?;
    let points: Vec<Point> = eig
        .iter()
        .map(|&l| unfold_semicircle(l, n))
        .filter(|y| y.abs() <= half_width)
        .map(Point::d1)
        .collect();
    let n_pts = points.len();
    Configuration::from_parts(1, points, vec![false; n_pts], half_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_se;

    #[test]
    fn unfolded_density_is_one_in_the_bulk() {
        for beta in [1u32, 2, 4] {
            let counts: Vec<f64> = SeedSpec::new(5, 0)
                .replicas(40)
                .map(|s| sample_sine_bulk(beta, 200, 10.0, s).unwrap().len() as f64)
                .collect();
            let (m, se) = mean_se(&counts);
            assert!((m - 20.0).abs() < 3.0 * se.max(0.05), "beta={beta}: mean count {m} ± {se}");
        }
    }

    #[test]
    fn number_variance_shrinks_with_beta() {
        // Rigidity grows with β: count variance in a window ranks GOE > GSE.
        let var = |beta| {
            let counts: Vec<f64> = SeedSpec::new(9, 0)
                .replicas(60)
                .map(|s| sample_sine_bulk(beta, 150, 8.0, s).unwrap().len() as f64)
                .collect();
            let (m, _) = mean_se(&counts);
            counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (counts.len() - 1) as f64
        };
        assert!(var(1) > var(4));
    }

    #[test]
    fn rejects_beta_three() {
        assert!(gaussian_ensemble_eigenvalues(3, 10, SeedSpec::new(0, 0)).is_err());
    }
}
