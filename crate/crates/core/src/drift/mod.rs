//! Drift fields b = ½ d^μ of the interacting Brownian motions: sharp
//! truncated sums used by the integrators, the smooth cut-off coefficients
//! b_{s,p} and b_{r,s,p}, and sample-based residuals between cut-offs.

mod neighbors;

pub use neighbors::CellGrid;

use crate::cutoff::{chi_radial, upsilon_radial, varpi_points, CutoffParams};
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point};
use crate::pointfields::{ModelSpec, PairPotential};
use crate::stats::mean_se;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which neighbours enter a truncated sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Neighbours with |x − y| < range.
    Relative,
    /// Neighbours with |y| < range, plus the confining term −x for Ginibre.
    Absolute,
}

/// The two forms of the Ginibre logarithmic derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GinibreForm {
    /// Σ_{|x−y|<r} (x − y)/|x − y|².
    Shifted,
    /// −x + Σ_{|y|<r} (x − y)/|x − y|².
    Confined,
}

impl GinibreForm {
    pub fn truncation(self) -> Truncation {
        match self {
            GinibreForm::Shifted => Truncation::Relative,
            GinibreForm::Confined => Truncation::Absolute,
        }
    }
}

#[inline]
fn log_force(d: Point) -> Result<Point> {
    let r2 = d.norm_sq();
    if r2 == 0.0 {
        return Err(Error::Collision { distance: 0.0 });
    }
    Ok(d * r2.recip())
}

/// Pair contribution of a neighbour at displacement d = x − y.
fn pair_term(model: &ModelSpec, d: Point) -> Result<Point> {
    match model {
        ModelSpec::Ruelle { beta, potential, .. } => {
            if potential.is_zero() {
                return Ok(Point::zero(d.dim()));
            }
            if d.norm_sq() == 0.0 {
                return Err(Error::Collision { distance: 0.0 });
            }
            Ok(potential.grad(&d) * (-0.5 * beta))
        }
        m => Ok(log_force(d)? * (0.5 * m.beta())),
    }
}

/// (β/2) Σ_{|x−y|<r} 1/(x − y).
pub fn drift_sine(beta: f64, x: &Point, neighbors: &[Point], r: f64) -> Result<Point> {
    let mut b = 0.0;
    for y in neighbors {
        let d = x.x() - y.x();
        if d.abs() < r {
            if d == 0.0 {
                return Err(Error::Collision { distance: 0.0 });
            }
            b += d.recip();
        }
    }
    Ok(Point::d1(0.5 * beta * b))
}

/// α/(2x) + Σ_{|x−y|<r} 1/(x − y) on (0, ∞).
pub fn drift_bessel(alpha: f64, x: f64, neighbors: &[Point], r: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Bessel drift needs x > 0, got {x}")));
    }
    Ok(alpha / (2.0 * x) + drift_sine(2.0, &Point::d1(x), neighbors, r)?.x())
}

pub fn drift_ginibre(x: &Point, neighbors: &[Point], r: f64, form: GinibreForm) -> Result<Point> {
    let mut b = match form {
        GinibreForm::Shifted => Point::zero(2),
        GinibreForm::Confined => -*x,
    };
    for y in neighbors {
        let inside = match form {
            GinibreForm::Shifted => x.dist(y) < r,
            GinibreForm::Confined => y.norm() < r,
        };
        if inside {
            b += log_force(*x - *y)?;
        }
    }
    Ok(b)
}

/// b_{s,p}(x, y) = −(β/2)(Σ χ_s υ_p ∇Ψ(x − y_i) + ϱ_s) for a pair potential.
pub fn drift_pair(
    potential: &PairPotential,
    beta: f64,
    x: &Point,
    neighbors: &[Point],
    s: f64,
    p: f64,
    rho_s: f64,
) -> Point {
    let mut b = Point::zero(x.dim());
    if !potential.is_zero() {
        for y in neighbors {
            let d = *x - *y;
            let w = weight(s, p, d.norm());
            if w > 0.0 {
                b += potential.grad(&d) * w;
            }
        }
    }
    let mut out = b * (-0.5 * beta);
    if rho_s != 0.0 && x.dim() == 1 {
        out += Point::d1(-0.5 * beta * rho_s);
    }
    out
}

#[inline]
fn weight(s: f64, p: f64, r: f64) -> f64 {
    chi_radial(s, r) * upsilon_radial(p, r)
}

/// The smooth truncated drift b_{s,p}(x, rest) of a model.
pub fn drift_sp(model: &ModelSpec, params: &CutoffParams, x: &Point, rest: &[Point]) -> Point {
    let (s, p) = (params.s, params.p);
    match model {
        ModelSpec::Ruelle { beta, potential, .. } => drift_pair(potential, *beta, x, rest, s, p, params.rho_s),
        m => {
            let mut b = Point::zero(x.dim());
            for y in rest {
                let d = *x - *y;
                let r = d.norm();
                let w = weight(s, p, r);
                if w > 0.0 {
                    b += d * (w / (r * r));
                }
            }
            let half_beta = 0.5 * m.beta();
            let mut out = b * half_beta;
            if let ModelSpec::Bessel { alpha } = m {
                let u = upsilon_radial(p, x.x().abs());
                if u > 0.0 {
                    out += Point::d1(alpha / (2.0 * x.x()) * u);
                }
            }
            if params.rho_s != 0.0 && x.dim() == 1 {
                out += Point::d1(-half_beta * params.rho_s);
            }
            out
        }
    }
}

/// b_{r,s,p}(x, rest) = χ_r(x) ϖ_{a₊[r]}(rest) b_{s,p}(x, rest).
pub fn cutoff_drift(params: &CutoffParams, model: &ModelSpec, x: &Point, rest: &[Point]) -> Result<Point> {
    params.validate_for_drift()?;
    Ok(cutoff_drift_unchecked(params, &params.a_seq.plus(), model, x, rest))
}

fn cutoff_drift_unchecked(
    params: &CutoffParams,
    a_plus: &crate::cutoff::ShellSequence,
    model: &ModelSpec,
    x: &Point,
    rest: &[Point],
) -> Point {
    let c = chi_radial(params.r, x.norm());
    if c == 0.0 {
        return Point::zero(x.dim());
    }
    let v = varpi_points(a_plus, rest, None);
    if v == 0.0 {
        return Point::zero(x.dim());
    }
    drift_sp(model, params, x, rest) * (c * v)
}

/// Monte Carlo estimate of E Σ_{x_i ∈ S_k} |b_{r,s,p}(x_i, rest) − b_big(x_i, rest)|
/// over equilibrium samples: (mean, standard error).
pub fn drift_residual(
    model: &ModelSpec,
    params: &CutoffParams,
    big: &CutoffParams,
    samples: &[Configuration],
    k: f64,
) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples; need at least 2", samples.len())));
    }
    params.validate_for_drift()?;
    big.validate_for_drift()?;
    let (ap, bp) = (params.a_seq.plus(), big.a_seq.plus());
    let per_sample: Vec<f64> = samples
        .par_iter()
        .map(|c| {
            let pts = c.points();
            let mut total = 0.0;
            let mut rest = Vec::with_capacity(pts.len());
            for (i, x) in pts.iter().enumerate() {
                if x.norm() > k {
                    continue;
                }
                rest.clear();
                rest.extend(pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, y)| *y));
                let a = cutoff_drift_unchecked(params, &ap, model, x, &rest);
                let b = cutoff_drift_unchecked(big, &bp, model, x, &rest);
                total += (a - b).norm();
            }
            total
        })
        .collect();
    Ok(mean_se(&per_sample))
}

/// Sharp truncated drift used by the integrators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftField {
    pub model: ModelSpec,
    pub truncation: Truncation,
    /// Truncation radius (relative distance or modulus of the neighbour).
    pub range: f64,
}

impl DriftField {
    pub fn new(model: ModelSpec, truncation: Truncation, range: f64) -> Result<Self> {
        model.validate()?;
        if !(range > 0.0) {
            return Err(Error::invalid("range", format!("must be positive, got {range}")));
        }
        if truncation == Truncation::Absolute && model != ModelSpec::Ginibre {
            return Err(Error::invalid("truncation", "absolute truncation is defined for the Ginibre field only"));
        }
        Ok(Self { model, truncation, range })
    }

    /// Drift at x from the neighbours (x itself must not be among them).
    pub fn at<'a>(&self, x: &Point, neighbors: impl IntoIterator<Item = &'a Point>) -> Result<Point> {
        let mut b = self.one_body(x)?;
        for y in neighbors {
            if self.includes(x, y) {
                b += pair_term(&self.model, *x - *y)?;
            }
        }
        Ok(b)
    }

    #[inline]
    fn includes(&self, x: &Point, y: &Point) -> bool {
        match self.truncation {
            Truncation::Relative => x.dist(y) < self.range,
            Truncation::Absolute => y.norm() < self.range,
        }
    }

    fn one_body(&self, x: &Point) -> Result<Point> {
        match (&self.model, self.truncation) {
            (ModelSpec::Bessel { alpha }, _) => {
                if !(x.x() > 0.0) {
                    return Err(Error::Domain(format!("Bessel drift needs x > 0, got {}", x.x())));
                }
                Ok(Point::d1(alpha / (2.0 * x.x())))
            }
            (ModelSpec::Ginibre, Truncation::Absolute) => Ok(-*x),
            _ => Ok(Point::zero(x.dim())),
        }
    }

    fn is_free(&self) -> bool {
        matches!(&self.model, ModelSpec::Ruelle { potential: PairPotential::Zero, .. })
    }

    /// Drifts of the particles `targets` against all other `points`,
    /// evaluated concurrently; output order follows `targets`.
    pub fn eval_many(&self, points: &[Point], targets: &[usize]) -> Result<Vec<Point>> {
        if self.is_free() {
            return Ok(targets.iter().map(|&i| Point::zero(points[i].dim())).collect());
        }
        let grid = match self.truncation {
            Truncation::Relative if self.range.is_finite() => Some(CellGrid::new(points, self.range)),
            _ => None,
        };
        targets
            .par_iter()
            .map(|&i| {
                let x = &points[i];
                match &grid {
                    Some(g) => self.at(x, g.candidates(x).filter(|&j| j != i).map(|j| &points[j])),
                    None => self.at(x, points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, y)| y)),
                }
            })
            .collect()
    }
}

/// Mean over samples of the average |b_shifted − b_confined| at truncation
/// radius r over the points with |x| ≤ `window`: (mean, standard error).
pub fn ginibre_representation_gap(samples: &[Configuration], r: f64, window: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples; need at least 2", samples.len())));
    }
    let per: Vec<f64> = samples
        .par_iter()
        .map(|c| -> Result<f64> {
            let pts = c.points();
            let mut sum = 0.0;
            let mut n = 0usize;
            let mut rest = Vec::with_capacity(pts.len());
            for (i, x) in pts.iter().enumerate().filter(|(_, x)| x.norm() <= window) {
                rest.clear();
                rest.extend(pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, y)| *y));
                let bc = drift_ginibre(x, &rest, r, GinibreForm::Shifted)?;
                let bd = drift_ginibre(x, &rest, r, GinibreForm::Confined)?;
                sum += (bc - bd).norm();
                n += 1;
            }
            Ok(if n > 0 { sum / n as f64 } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(mean_se(&per))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::ShellSequence;
    use proptest::prelude::*;

    fn d1(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::d1(x)).collect()
    }

    #[test]
    fn sine_examples() {
        let x = Point::d1(0.3);
        assert_eq!(drift_sine(2.0, &x, &d1(&[0.3 - 0.7, 0.3 + 0.7]), 2.0).unwrap().x(), 0.0);
        assert_eq!(drift_sine(2.0, &Point::d1(0.0), &d1(&[1.0]), 2.0).unwrap().x(), -1.0);
        assert_eq!(drift_sine(2.0, &Point::d1(0.0), &d1(&[1.0, 10.0]), 2.0).unwrap().x(), -1.0);
        assert!(matches!(drift_sine(2.0, &x, &d1(&[0.3]), 2.0), Err(Error::Collision { .. })));
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(drift_bessel(2.0, 1.0, &[], 3.0).unwrap(), 1.0);
        assert_eq!(drift_bessel(2.0, 1.0, &d1(&[1.5, 0.5]), 3.0).unwrap(), 1.0);
        let a = drift_bessel(2.0, 0.1, &[], 3.0).unwrap();
        let b = drift_bessel(2.0, 0.01, &[], 3.0).unwrap();
        assert!(b > a && a > 0.0);
        assert!(matches!(drift_bessel(2.0, 0.0, &[], 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ginibre_examples() {
        let x = Point::d2(0.4, -0.2);
        let v = Point::d2(0.3, 0.5);
        let b = drift_ginibre(&x, &[x + v, x - v], 2.0, GinibreForm::Shifted).unwrap();
        assert!(b.norm() < 1e-15);
        assert_eq!(drift_ginibre(&Point::zero(2), &[], 2.0, GinibreForm::Confined).unwrap(), Point::zero(2));
    }

    #[test]
    fn pair_examples() {
        let pot = PairPotential::InversePower { strength: 1.0, exponent: 4.0 };
        let x = Point::d2(0.1, 0.2);
        let v = Point::d2(1.0, -0.7);
        assert!(drift_pair(&pot, 2.0, &x, &[x + v, x - v], 5.0, 4.0, 0.0).norm() < 1e-15);
        // υ_p plateau: a neighbour closer than 1/p contributes nothing.
        let near = x + Point::d2(0.1, 0.0);
        assert_eq!(drift_pair(&pot, 2.0, &x, &[near], 5.0, 4.0, 0.0), Point::zero(2));
        // Both weights one between 2/p and s − 1.
        let y = x + Point::d2(1.5, 0.0);
        let want = pot.grad(&(x - y)) * -1.0;
        assert!((drift_pair(&pot, 2.0, &x, &[y], 5.0, 4.0, 0.0) - want).norm() < 1e-15);
    }

    fn params(r: f64, s: f64, p: f64, a: ShellSequence) -> CutoffParams {
        CutoffParams::new(r, s, p, a)
    }

    #[test]
    fn cutoff_drift_plateaus() {
        let m = ModelSpec::Sine { beta: 2 };
        let a = ShellSequence::affine(4, 3);
        let pr = params(3.0, 6.0, 4.0, a.clone());
        let rest = d1(&[-1.3, 0.9, 2.2, -3.7]);
        assert_eq!(cutoff_drift(&pr, &m, &Point::d1(3.0), &rest).unwrap(), Point::d1(0.0));
        assert_eq!(cutoff_drift(&pr, &m, &Point::d1(-3.5), &rest).unwrap(), Point::d1(0.0));
        let inner = Point::d1(0.2);
        assert_eq!(cutoff_drift(&pr, &m, &inner, &rest).unwrap(), drift_sp(&m, &pr, &inner, &rest));
        // Overfull shell: ϖ vanishes.
        let crowded: Vec<Point> = (0..40).map(|i| Point::d1(-0.95 + 0.045 * i as f64 + 0.001)).collect();
        assert_eq!(cutoff_drift(&pr, &m, &inner, &crowded).unwrap(), Point::d1(0.0));
        assert!(cutoff_drift(&params(3.0, 2.0, 4.0, a), &m, &inner, &rest).is_err());
    }

    #[test]
    fn field_matches_explicit_drifts() {
        let pts: Vec<Point> = d1(&[-2.1, -0.4, 0.35, 1.2, 2.9, 7.5]);
        let f = DriftField::new(ModelSpec::Sine { beta: 4 }, Truncation::Relative, 3.0).unwrap();
        let all: Vec<usize> = (0..pts.len()).collect();
        let many = f.eval_many(&pts, &all).unwrap();
        for i in 0..pts.len() {
            let rest: Vec<Point> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| *p).collect();
            let want = drift_sine(4.0, &pts[i], &rest, 3.0).unwrap();
            assert!((many[i] - want).norm() < 1e-13);
        }
        let g = DriftField::new(ModelSpec::Ginibre, Truncation::Absolute, 2.0).unwrap();
        let p2 = vec![Point::d2(0.1, 0.3), Point::d2(-0.5, 0.9), Point::d2(1.5, 1.5)];
        let b = g.eval_many(&p2, &[0]).unwrap()[0];
        let want = drift_ginibre(&p2[0], &p2[1..], 2.0, GinibreForm::Confined).unwrap();
        assert!((b - want).norm() < 1e-15);
        assert!(DriftField::new(ModelSpec::Sine { beta: 2 }, Truncation::Absolute, 2.0).is_err());
    }

    #[test]
    fn residual_trivial_cases() {
        let a = ShellSequence::affine(10, 4);
        let pr = params(3.0, 5.0, 4.0, a.clone());
        let samples: Vec<Configuration> = (0..4)
            .map(|k| Configuration::new(1, d1(&[-2.0 + 0.1 * k as f64, -0.7, 0.6, 1.9, 4.1])).unwrap())
            .collect();
        let m = ModelSpec::Sine { beta: 2 };
        assert_eq!(drift_residual(&m, &pr, &pr, &samples, 2.0).unwrap(), (0.0, 0.0));
        let big = params(6.0, 12.0, 8.0, a.shifted(5));
        assert_eq!(drift_residual(&ModelSpec::free(1), &pr, &big, &samples, 2.0).unwrap(), (0.0, 0.0));
        assert!(drift_residual(&m, &pr, &big, &samples[..1], 2.0).is_err());
    }

    proptest! {
        #[test]
        fn force_balance(xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..30), model_ix in 0usize..4) {
            let (model, dim) = match model_ix {
                0 => (ModelSpec::Sine { beta: 2 }, 1),
                1 => (ModelSpec::Sine { beta: 4 }, 1),
                2 => (ModelSpec::Ginibre, 2),
                _ => (ModelSpec::Ruelle { beta: 1.5, dim: 2,
                        potential: PairPotential::LennardJones { epsilon: 1.0, sigma: 0.3 } }, 2),
            };
            let pts: Vec<Point> = xs.iter().map(|&(a, b)| if dim == 1 { Point::d1(a) } else { Point::d2(a, b) }).collect();
            prop_assume!(pts.iter().enumerate().all(|(i, p)| pts[i + 1..].iter().all(|q| p.dist(q) > 1e-3)));
            let f = DriftField::new(model, Truncation::Relative, 100.0).unwrap();
            let all: Vec<usize> = (0..pts.len()).collect();
            let b = f.eval_many(&pts, &all).unwrap();
            let total = b.iter().fold(Point::zero(dim), |acc, v| acc + *v);
            let scale: f64 = b.iter().map(Point::norm).sum::<f64>().max(1.0);
            prop_assert!(total.norm() < 1e-12 * scale);
        }

        #[test]
        fn translation_equivariance(xs in prop::collection::vec(-5.0f64..5.0, 2..20), h in -3.0f64..3.0) {
            let pts: Vec<Point> = xs.iter().map(|&a| Point::d1(a)).collect();
            prop_assume!(pts.iter().enumerate().all(|(i, p)| pts[i + 1..].iter().all(|q| p.dist(q) > 1e-3)));
            let shifted: Vec<Point> = pts.iter().map(|p| *p + Point::d1(h)).collect();
            let f = DriftField::new(ModelSpec::Sine { beta: 2 }, Truncation::Relative, 100.0).unwrap();
            let all: Vec<usize> = (0..pts.len()).collect();
            let a = f.eval_many(&pts, &all).unwrap();
            let b = f.eval_many(&shifted, &all).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((*u - *v).norm() <= 1e-9 * (1.0 + u.norm()) * xs.len() as f64);
            }
        }
    }
}
