//! Replica estimators of the intensity and the radial pair correlation.

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point, Window};
use crate::rng::{Purpose, SeedSpec};
use crate::stats::{jackknife, mean_se};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub g: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub intensity: f64,
    pub intensity_se: f64,
    pub n_samples: usize,
    pub bins: Vec<PairBin>,
}

fn shell_volume(dim: usize, lo: f64, hi: f64) -> f64 {
    if dim == 1 {
        2.0 * (hi - lo)
    } else {
        std::f64::consts::PI * (hi * hi - lo * lo)
    }
}

/// Intensity in `analysis` and ĝ on the bins delimited by `edges`.
///
/// Pairs are counted from every point of the analysis window to every other
/// point of the sample, so `sampling` must contain `analysis` dilated by the
/// largest edge. ĝ_b = mean(c_b)·|W| / (mean(n)²·|shell_b|) with jackknife
/// standard errors over replicas.
pub fn estimate_correlations(
    samples: &[Configuration],
    sampling: &Window,
    analysis: &Window,
    edges: &[f64],
) -> Result<CorrelationEstimate> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples; need at least 2", samples.len())));
    }
    sampling.validate()?;
    analysis.validate()?;
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges[0] < 0.0 {
        return Err(Error::invalid("bins", "edges must be nonnegative and strictly increasing"));
    }
    let r_max = *edges.last().unwrap();
    if !sampling.contains_dilated(analysis, r_max) {
        return Err(Error::invalid(
            "window",
            format!("analysis window {analysis:?} plus buffer {r_max} does not fit in {sampling:?}"),
        ));
    }
    let dim = analysis.dim();
    let nb = edges.len() - 1;
    let mut counts = Vec::with_capacity(samples.len());
    let mut ns = Vec::with_capacity(samples.len());
    for s in samples {
        let inside: Vec<&Point> = s.points().iter().filter(|p| analysis.contains(p)).collect();
        let mut c = vec![0.0; nb];
        for x in &inside {
            for y in s.points() {
                let d = x.dist(y);
                if d == 0.0 && std::ptr::eq(*x, y) {
                    continue;
                }
                if d >= edges[0] && d < r_max {
                    let b = edges.partition_point(|e| *e <= d) - 1;
                    c[b] += 1.0;
                }
            }
        }
        counts.push(c);
        ns.push(inside.len() as f64);
    }
    let vol = analysis.volume();
    let n = samples.len();
    let mean_over = |skip: Option<usize>, f: &dyn Fn(usize) -> f64| {
        let (s, k) = (0..n).filter(|&i| Some(i) != skip).fold((0.0, 0usize), |(s, k), i| (s + f(i), k + 1));
        s / k as f64
    };
    let (intensity, intensity_se) = {
        let (m, se) = mean_se(&ns);
        (m / vol, se / vol)
    };
    let bins = (0..nb)
        .map(|b| {
            let shell = shell_volume(dim, edges[b], edges[b + 1]);
            let (g, se) = jackknife(n, |skip| {
                let mc = mean_over(skip, &|i| counts[i][b]);
                let mn = mean_over(skip, &|i| ns[i]);
                if mn > 0.0 {
                    mc * vol / (mn * mn * shell)
                } else {
                    f64::NAN
                }
            });
            PairBin { r_lo: edges[b], r_hi: edges[b + 1], g, se }
        })
        .collect();
    Ok(CorrelationEstimate { intensity, intensity_se, n_samples: n, bins })
}

/// Homogeneous Poisson field of the given intensity on a window.
pub fn sample_poisson(intensity: f64, window: &Window, seed: SeedSpec) -> Result<Configuration> {
    window.validate()?;
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::invalid("intensity", format!("{intensity} is not a finite nonnegative number")));
    }
    let mut rng = seed.rng(Purpose::Sampler);
    let mean = intensity * window.volume();
    let count = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::invalid("intensity", e.to_string()))?.sample(&mut rng) as usize
    } else {
        0
    };
    let dim = window.dim();
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let p = match *window {
            Window::Interval { lo, hi } => Point::d1(lo + (hi - lo) * rng.random::<f64>()),
            Window::Ball { dim: 1, radius } => Point::d1(radius * (2.0 * rng.random::<f64>() - 1.0)),
            Window::Ball { radius, .. } => {
                Point::d2(radius * (2.0 * rng.random::<f64>() - 1.0), radius * (2.0 * rng.random::<f64>() - 1.0))
            }
        };
        if window.contains(&p) {
            pts.push(p);
        }
    }
    let radius = match *window {
        Window::Interval { lo, hi } => lo.abs().max(hi.abs()),
        Window::Ball { radius, .. } => radius,
    };
    Configuration::from_parts(dim, pts, vec![false; count], radius)
}
