//! Metropolis–Hastings sampler for the canonical Gibbs field of a pair
//! potential in a ball, conditioned on a frozen exterior configuration.

use super::model::{ModelSpec, PairPotential};
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point};
use crate::rng::{Purpose, SeedSpec, SimRng};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const INIT_ATTEMPTS: usize = 100;

/// Tuning of the single-particle moves.
#[derive(Clone, Copy, Debug)]
pub struct GibbsOptions {
    /// Standard deviation of the random-walk proposal.
    pub step: f64,
    /// Probability of an independent uniform-in-ball proposal instead.
    pub uniform_fraction: f64,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        Self { step: 0.3, uniform_fraction: 0.2 }
    }
}

/// Energy of a finite configuration inside S_R against a fixed exterior:
/// Σ_{i<j} Ψ(x_i − x_j) + Σ_i Σ_k Ψ(x_i − s_k).
pub struct DlrEnergy<'a> {
    pub potential: &'a PairPotential,
    pub exterior: Vec<Point>,
}

impl<'a> DlrEnergy<'a> {
    /// Keeps the exterior points that can reach S_R within the tail range.
    pub fn new(potential: &'a PairPotential, radius: f64, exterior: &[Point]) -> Self {
        let reach = radius + potential.r0() + potential.tail_range(1e-10);
        let exterior = if potential.is_zero() {
            Vec::new()
        } else {
            exterior.iter().copied().filter(|p| p.norm() <= reach).collect()
        };
        Self { potential, exterior }
    }

    /// Interaction of particle `i` (at position `x`) with everything else.
    pub fn local(&self, points: &[Point], i: usize, x: &Point) -> f64 {
        if self.potential.is_zero() {
            return 0.0;
        }
        let inner: f64 =
            points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, y)| self.potential.value(&(*x - *y))).sum();
        inner + self.exterior.iter().map(|y| self.potential.value(&(*x - *y))).sum::<f64>()
    }

    pub fn total(&self, points: &[Point]) -> f64 {
        if self.potential.is_zero() {
            return 0.0;
        }
        let mut e = 0.0;
        for (i, x) in points.iter().enumerate() {
            for y in &points[i + 1..] {
                e += self.potential.value(&(*x - *y));
            }
            e += self.exterior.iter().map(|y| self.potential.value(&(*x - *y))).sum::<f64>();
        }
        e
    }
}

/// Metropolis acceptance probability min(1, π(y)/π(x)) for a symmetric
/// proposal, from log target values.
pub fn metropolis_acceptance(log_current: f64, log_proposed: f64) -> f64 {
    if log_proposed == f64::NEG_INFINITY {
        return 0.0;
    }
    let r = log_proposed - log_current;
    if r >= 0.0 {
        1.0
    } else {
        r.exp()
    }
}

/// Transition matrix of the Metropolis chain on a finite state space with
/// proposal matrix `proposal` (rows sum to one) and target ∝ exp(log_target).
pub fn finite_transition_matrix(log_target: &[f64], proposal: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = log_target.len();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut stay = 1.0;
        for j in 0..n {
            if i != j && proposal[i][j] > 0.0 {
                let a = proposal[i][j] * metropolis_acceptance(log_target[i], log_target[j]);
                p[i][j] = a;
                stay -= a;
            }
        }
        p[i][i] = stay;
    }
    p
}

fn uniform_in_ball(rng: &mut SimRng, dim: usize, radius: f64) -> Point {
    loop {
        let p = if dim == 1 {
            Point::d1(radius * (2.0 * rng.random::<f64>() - 1.0))
        } else {
            Point::d2(radius * (2.0 * rng.random::<f64>() - 1.0), radius * (2.0 * rng.random::<f64>() - 1.0))
        };
        if p.norm() <= radius {
            return p;
        }
    }
}

/// Draws `m` particles in the ball S_R from exp(−β(H + exterior energy))
/// after `mcmc_steps` single-particle updates. The frozen exterior is
/// attached to the returned configuration.
pub fn sample_gibbs(
    model: &ModelSpec,
    region_radius: f64,
    frozen_exterior: &Configuration,
    m: usize,
    mcmc_steps: usize,
    seed: SeedSpec,
) -> Result<Configuration> {
    sample_gibbs_with(model, region_radius, frozen_exterior, m, mcmc_steps, seed, GibbsOptions::default())
}

pub fn sample_gibbs_with(
    model: &ModelSpec,
    region_radius: f64,
    frozen_exterior: &Configuration,
    m: usize,
    mcmc_steps: usize,
    seed: SeedSpec,
    opts: GibbsOptions,
) -> Result<Configuration> {
    let ModelSpec::Ruelle { beta, dim, potential } = model else {
        return Err(Error::UnsupportedModel(format!("{} is not a pair-potential Gibbs field", model.name())));
    };
    model.validate()?;
    if !(region_radius > 0.0 && region_radius.is_finite()) {
        return Err(Error::invalid("region_radius", format!("must be positive and finite, got {region_radius}")));
    }
    if frozen_exterior.dim() != *dim && !frozen_exterior.is_empty() {
        return Err(Error::invalid("frozen_exterior", "dimension differs from the model"));
    }
    if let Some(p) = frozen_exterior.points().iter().find(|p| p.norm() <= region_radius) {
        return Err(Error::invalid("frozen_exterior", format!("point {:?} lies inside S_R", p.coords())));
    }
    let (dim, beta) = (*dim, *beta);
    let energy = DlrEnergy::new(potential, region_radius, frozen_exterior.points());
    let mut rng = seed.rng(Purpose::Mcmc);

    let mut points = Vec::new();
    let mut e_total = f64::INFINITY;
    for _ in 0..INIT_ATTEMPTS {
        points = (0..m).map(|_| uniform_in_ball(&mut rng, dim, region_radius)).collect::<Vec<_>>();
        e_total = energy.total(&points);
        if e_total.is_finite() {
            break;
        }
    }
    if !e_total.is_finite() {
        return Err(Error::InitFailure { attempts: INIT_ATTEMPTS });
    }

    if m > 0 {
        for _ in 0..mcmc_steps {
            let i = rng.random_range(0..m);
            let x = points[i];
            let y = if rng.random::<f64>() < opts.uniform_fraction {
                uniform_in_ball(&mut rng, dim, region_radius)
            } else {
                let mut c = [0.0; 2];
                for v in c.iter_mut().take(dim) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = z * opts.step;
                }
                x + Point::try_new(&c[..dim])?
            };
            let u: f64 = rng.random();
            if y.norm() > region_radius {
                continue;
            }
            let log_cur = -beta * energy.local(&points, i, &x);
            let log_new = -beta * energy.local(&points, i, &y);
            if !log_new.is_nan() && u < metropolis_acceptance(log_cur, log_new) {
                points[i] = y;
            }
        }
    }

    let n_int = points.len();
    let mut all = points;
    all.extend_from_slice(frozen_exterior.points());
    let mut frozen = vec![false; n_int];
    frozen.extend(std::iter::repeat_n(true, frozen_exterior.len()));
    Configuration::from_parts(dim, all, frozen, region_radius)
}
