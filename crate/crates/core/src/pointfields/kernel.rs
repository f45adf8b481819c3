//! Correlation kernels of the determinantal fields.

use super::model::ModelSpec;
use crate::error::{Error, Result};
use crate::geometry::Point;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_PI, PI};

/// sin(πd)/(πd) with the analytic value 1 at d = 0.
#[inline]
pub fn sine_kernel(d: f64) -> f64 {
    let z = PI * d;
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// (1/π) e^{−(|x|² + |y|²)/2} e^{x ȳ}, written as
/// (1/π) e^{−|x−y|²/2} e^{i(x₂y₁ − x₁y₂)} to avoid overflow.
#[inline]
pub fn ginibre_kernel(x: &Point, y: &Point) -> Complex64 {
    let d2 = (*x - *y).norm_sq();
    let phase = x.y() * y.x() - x.x() * y.y();
    Complex64::from_polar(FRAC_1_PI * (-0.5 * d2).exp(), phase)
}

/// J_α(√x) and √x J′_α(√x), the two ingredients of the Bessel kernel.
#[derive(Clone, Copy, Debug)]
pub struct BesselPair {
    pub j: f64,
    pub sqrt_x_jp: f64,
}

impl BesselPair {
    pub fn at(alpha: f64, x: f64) -> Self {
        if x <= 0.0 {
            return Self { j: 0.0, sqrt_x_jp: 0.0 };
        }
        let z = x.sqrt();
        let (j, _, jp, _) = puruspe::besseljy(alpha, z);
        Self { j, sqrt_x_jp: z * jp }
    }
}

/// K_Be,α(x, x) = ¼ [J_α(√x)² − J_{α+1}(√x) J_{α−1}(√x)].
pub fn bessel_kernel_diagonal(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = x.sqrt();
    let j = puruspe::besseljy(alpha, z).0;
    let jp1 = puruspe::besseljy(alpha + 1.0, z).0;
    let jm1 = puruspe::besseljy(alpha - 1.0, z).0;
    0.25 * (j * j - jp1 * jm1)
}

/// Bessel kernel from precomputed pairs; falls back to the diagonal formula
/// at the midpoint when |x − y| is too small for the difference quotient.
pub fn bessel_kernel_from(alpha: f64, x: f64, bx: BesselPair, y: f64, by: BesselPair) -> f64 {
    let d = x - y;
    if d.abs() <= 1e-5 * x.max(y).max(1.0) {
        return bessel_kernel_diagonal(alpha, 0.5 * (x + y));
    }
    (bx.j * by.sqrt_x_jp - bx.sqrt_x_jp * by.j) / (2.0 * d)
}

pub fn bessel_kernel(alpha: f64, x: f64, y: f64) -> f64 {
    bessel_kernel_from(alpha, x, BesselPair::at(alpha, x), y, BesselPair::at(alpha, y))
}

/// Kernel value K(x, y); real kernels are returned with zero imaginary part.
pub fn kernel_eval(model: &ModelSpec, x: &Point, y: &Point) -> Result<Complex64> {
    match model {
        ModelSpec::Sine { beta: 2 } => {
            check_dim(x, y, 1)?;
            Ok(Complex64::new(sine_kernel(x.x() - y.x()), 0.0))
        }
        ModelSpec::Bessel { alpha } => {
            check_dim(x, y, 1)?;
            if x.x() < 0.0 || y.x() < 0.0 {
                return Err(Error::Domain(format!(
                    "Bessel kernel lives on [0, inf), got ({}, {})",
                    x.x(),
                    y.x()
                )));
            }
            Ok(Complex64::new(bessel_kernel(*alpha, x.x(), y.x()), 0.0))
        }
        ModelSpec::Ginibre => {
            check_dim(x, y, 2)?;
            Ok(ginibre_kernel(x, y))
        }
        ModelSpec::Sine { beta } => Err(Error::UnsupportedModel(format!(
            "sine_{beta} has a quaternion kernel; only sine_2 is evaluated as a scalar kernel"
        ))),
        ModelSpec::Ruelle { .. } => Err(Error::UnsupportedModel("Ruelle-class Gibbs fields have no kernel".into())),
    }
}

fn check_dim(x: &Point, y: &Point, dim: usize) -> Result<()> {
    if x.dim() != dim || y.dim() != dim {
        return Err(Error::invalid("point", format!("kernel expects {dim}-d points")));
    }
    Ok(())
}

/// g(x, y) = 1 − |K(x,y)|² / (K(x,x) K(y,y)).
pub fn pair_correlation(model: &ModelSpec, x: &Point, y: &Point) -> Result<f64> {
    let kxx = kernel_eval(model, x, x)?.re;
    let kyy = kernel_eval(model, y, y)?.re;
    for (p, k) in [(x, kxx), (y, kyy)] {
        if k <= 0.0 {
            return Err(Error::DegenerateIntensity(format!("{:?}", p.coords())));
        }
    }
    if x == y {
        return Ok(0.0);
    }
    let kxy = kernel_eval(model, x, y)?;
    Ok(1.0 - kxy.norm_sqr() / (kxx * kyy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_examples() {
        let m = ModelSpec::sine(2).unwrap();
        assert_eq!(kernel_eval(&m, &Point::d1(0.3), &Point::d1(0.3)).unwrap().re, 1.0);
        let v = kernel_eval(&m, &Point::d1(0.5), &Point::d1(0.0)).unwrap().re;
        assert!((v - 2.0 / PI).abs() < 1e-15);
        assert!((v - 0.6366198).abs() < 1e-7);
        // The series branch joins the direct formula smoothly.
        assert!((sine_kernel(0.99e-4 / PI) - (0.99e-4f64).sin() / 0.99e-4).abs() < 1e-15);
    }

    #[test]
    fn ginibre_examples() {
        let x = Point::d2(0.4, -1.2);
        let k = kernel_eval(&ModelSpec::Ginibre, &x, &x).unwrap();
        assert!((k.re - FRAC_1_PI).abs() < 1e-15 && k.im == 0.0);
        let y = Point::d2(1.0, 0.3);
        // Direct evaluation of the defining product agrees with the stable form.
        let zx = Complex64::new(x.x(), x.y());
        let zy = Complex64::new(y.x(), y.y());
        let direct = FRAC_1_PI * (-0.5 * (x.norm_sq() + y.norm_sq())).exp() * (zx * zy.conj()).exp();
        assert!((kernel_eval(&ModelSpec::Ginibre, &x, &y).unwrap() - direct).norm() < 1e-15);
    }

    #[test]
    fn pair_correlation_examples() {
        let sine = ModelSpec::sine(2).unwrap();
        assert_eq!(pair_correlation(&sine, &Point::d1(1.0), &Point::d1(1.0)).unwrap(), 0.0);
        let far = pair_correlation(&sine, &Point::d1(0.0), &Point::d1(1e6 + 0.5)).unwrap();
        assert!((far - 1.0).abs() < 1e-12);
        let g = pair_correlation(&ModelSpec::Ginibre, &Point::d2(0.3, 0.1), &Point::d2(1.3, 0.1)).unwrap();
        assert!((g - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((g - 0.6321206).abs() < 1e-7);
    }

    #[test]
    fn bessel_diagonal_is_the_limit() {
        for &alpha in &[1.0, 1.5, 3.0] {
            for &x in &[0.05, 0.7, 4.0, 30.0, 150.0] {
                let diag = bessel_kernel_diagonal(alpha, x);
                let h = 1e-4 * x.max(1.0);
                let near = 0.5 * (bessel_kernel(alpha, x + h, x - h) + bessel_kernel(alpha, x - h, x + h));
                assert!((near - diag).abs() < 1e-5 * diag.abs().max(1e-3), "alpha={alpha} x={x}");
                assert!(diag >= 0.0);
            }
        }
        // Large-x density approaches 1/(2π√x).
        let x = 400.0;
        assert!((bessel_kernel_diagonal(1.0, x) * 2.0 * PI * x.sqrt() - 1.0).abs() < 0.02);
        assert!(pair_correlation(&ModelSpec::Bessel { alpha: 1.0 }, &Point::d1(0.0), &Point::d1(1.0)).is_err());
    }

    #[test]
    fn unsupported_models() {
        assert!(kernel_eval(&ModelSpec::Sine { beta: 1 }, &Point::d1(0.0), &Point::d1(1.0)).is_err());
        assert!(kernel_eval(&ModelSpec::free(1), &Point::d1(0.0), &Point::d1(1.0)).is_err());
    }

    #[test]
    fn hermitian_symmetry() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let models = [ModelSpec::sine(2).unwrap(), ModelSpec::Bessel { alpha: 1.3 }, ModelSpec::Ginibre];
        for m in &models {
            for _ in 0..200 {
                let (x, y) = if m.dim() == 1 {
                    (Point::d1(rng.random_range(0.0..40.0)), Point::d1(rng.random_range(0.0..40.0)))
                } else {
                    (
                        Point::d2(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
                        Point::d2(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
                    )
                };
                let kxy = kernel_eval(m, &x, &y).unwrap();
                let kyx = kernel_eval(m, &y, &x).unwrap();
                assert!((kxy - kyx.conj()).norm() <= 1e-15 * (1.0 + kxy.norm()));
                assert!(kernel_eval(m, &x, &x).unwrap().re >= 0.0);
            }
        }
    }
}
