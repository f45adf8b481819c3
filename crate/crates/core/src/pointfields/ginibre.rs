use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point};
use crate::rng::{Purpose, SeedSpec};
use faer::{c64, Mat};
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::FRAC_1_SQRT_2;

/// Eigenvalues of an n×n matrix with i.i.d. standard complex Gaussian
/// entries (E|z|² = 1), kept inside the centred disc of `window_radius`
/// (`f64::INFINITY` keeps all of them). The bulk intensity is 1/π.
pub fn sample_ginibre(n: usize, window_radius: f64, seed: SeedSpec) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::invalid("n", "matrix size must be positive"));
    }
    if !(window_radius > 0.0) {
        return Err(Error::invalid("window_radius", format!("must be positive, got {window_radius}")));
    }
    if window_radius.is_finite() && window_radius > 0.8 * (n as f64).sqrt() {
        return Err(Error::invalid(
            "window_radius",
            format!("{window_radius} exceeds the bulk radius 0.8·sqrt({n}) = {:.3}", 0.8 * (n as f64).sqrt()),
        ));
    }
    let mut rng = seed.rng(Purpose::Sampler);
    let mut entry = || {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        c64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
    };
    // Row-major fill so the draw order does not depend on faer's layout.
    let mut values = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        values.push(entry());
    }
    let m = Mat::<c64>::from_fn(n, n, |i, j| values[i * n + j]);
    let eig = m.eigenvalues().map_err(|e| Error::Numeric {
        message: format!("complex eigensolver failed: {e:?}"),
        seed,
    })?;
    let points: Vec<Point> = eig
        .iter()
        .map(|z| Point::d2(z.re, z.im))
        .filter(|p| !window_radius.is_finite() || p.norm() <= window_radius)
        .collect();
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numeric { message: "non-finite eigenvalue".into(), seed });
    }
    let radius = if window_radius.is_finite() { window_radius } else { 0.0 };
    let n_pts = points.len();
    Configuration::from_parts(2, points, vec![false; n_pts], radius)
}
