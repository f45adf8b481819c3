//! Checks of the standing assumptions and of the scheme-convergence
//! statements on simulated data.

mod report;

pub use report::{DiagnosticsReport, Rule, Statistic, Verdict};

use crate::dynamics::PathRecord;
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Window};
use crate::pointfields::{estimate_correlations, ModelSpec};
use crate::quadrature::integrate_adaptive;
use crate::rng::{Purpose, SeedSpec};
use crate::stats::{linear_fit, mean_se};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Upper standard-normal tail ∫_t^∞ φ(x) dx.
pub fn erf_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t / SQRT_2)
}

/// ∫_{R^d} Erf((|x| − r)/T) ρ(|x|) dx for a radial intensity, summed shell
/// by shell until the partial sums settle. Non-settling sums are reported
/// as an A4 violation.
pub fn check_a4(intensity: impl Fn(f64) -> f64, r: f64, t: f64, dim: usize) -> Result<f64> {
    if !(t > 0.0) || !(r >= 0.0) {
        return Err(Error::invalid("T", format!("need T > 0 and r >= 0, got T={t} r={r}")));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::invalid("dim", format!("{dim} not in {{1, 2}}")));
    }
    let sphere = |u: f64| if dim == 1 { 2.0 } else { 2.0 * PI * u };
    let f = |u: f64| erf_tail((u - r) / t) * intensity(u) * sphere(u);
    let width = t.max(1.0);
    let max_shells = 100_000;
    let mut sum = 0.0f64;
    let mut quiet = 0;
    for k in 0..max_shells {
        let (a, b) = (k as f64 * width, (k + 1) as f64 * width);
        let term = integrate_adaptive(f, a, b, 1e-14 * (1.0 + sum.abs()));
        if !term.is_finite() {
            return Err(Error::A4Violation { partial_sum: sum, shells: k });
        }
        sum += term;
        let settled = term.abs() <= 1e-15 * sum.abs() || term == 0.0;
        if (a - r) / t > 8.0 && settled {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::A4Violation { partial_sum: sum, shells: max_shells })
}

/// Radial one-point density of a model, where closed-form.
pub fn model_intensity(model: &ModelSpec) -> Option<Box<dyn Fn(f64) -> f64>> {
    match model {
        ModelSpec::Sine { .. } => Some(Box::new(|_| 1.0)),
        ModelSpec::Ginibre => Some(Box::new(|_| 1.0 / PI)),
        ModelSpec::Bessel { alpha } => {
            let a = *alpha;
            // Supported on the half-line; the factor ½ undoes the two-sided sphere.
            Some(Box::new(move |u| 0.5 * crate::pointfields::kernel::bessel_kernel_diagonal(a, u)))
        }
        ModelSpec::Ruelle { .. } => None,
    }
}

/// Erf(r/√((r+R)T))·ρ|S_{r+R}| for constant intensity ρ, the sequence whose
/// liminf must vanish; returned along r = 1, 2, 4, … up to `r_max`.
pub fn a4_liminf_sequence(rho: f64, dim: usize, big_r: f64, t: f64, r_max: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut r = 1.0;
    while r <= r_max {
        let vol = if dim == 1 { 2.0 * (r + big_r) } else { PI * (r + big_r).powi(2) };
        out.push((r, erf_tail(r / ((r + big_r) * t).sqrt()) * rho * vol));
        r *= 2.0;
    }
    out
}

/// Largest label that visits the closed ball of radius r by time T (0 if none).
pub fn nbj_index(path: &PathRecord, r: f64, t: f64) -> u32 {
    path.frames
        .iter()
        .take_while(|f| f.time <= t + 1e-12)
        .flat_map(|f| f.particles.iter())
        .filter(|p| p.x.norm() <= r)
        .map(|p| p.label)
        .max()
        .unwrap_or(0)
}

/// Smallest pairwise distance over all recorded frames (∞ below two points);
/// with `half_line` the distance to the origin counts as well.
pub fn min_gap(path: &PathRecord, half_line: bool) -> f64 {
    path.frames.iter().map(|f| frame_min_gap(&f.configuration(path.dim), half_line)).fold(f64::INFINITY, f64::min)
}

pub fn frame_min_gap(c: &Configuration, half_line: bool) -> f64 {
    let pts = c.points();
    let mut best = if half_line { pts.iter().map(|p| p.x().abs()).fold(f64::INFINITY, f64::min) } else { f64::INFINITY };
    if c.dim() == 1 {
        let mut xs: Vec<f64> = pts.iter().map(|p| p.x()).collect();
        xs.sort_by(f64::total_cmp);
        for w in xs.windows(2) {
            best = best.min(w[1] - w[0]);
        }
    } else {
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                best = best.min(p.dist(q));
            }
        }
    }
    best
}

/// Windowed intensity and pair correlation at t = 0 versus each checkpoint,
/// bins compared at `k` combined standard errors.
pub fn invariance_test(
    paths: &[PathRecord],
    checkpoints: &[f64],
    sampling: &Window,
    analysis: &Window,
    edges: &[f64],
    k: f64,
) -> Result<DiagnosticsReport> {
    if paths.len() < 2 {
        return Err(Error::InsufficientData(format!("{} replicas; need at least 2", paths.len())));
    }
    let frames_at = |t: f64| -> Result<Vec<Configuration>> {
        paths
            .iter()
            .map(|p| {
                let f = p.frame_at(t).ok_or_else(|| Error::InsufficientData("empty path".into()))?;
                if (f.time - t).abs() > 1e-9 * (1.0 + t) {
                    return Err(Error::InsufficientData(format!("no frame recorded at t={t}")));
                }
                Ok(f.configuration(p.dim))
            })
            .collect()
    };
    let mut report = DiagnosticsReport::new(format!("invariance ({})", paths[0].model));
    let base = estimate_correlations(&frames_at(0.0)?, sampling, analysis, edges)?;
    let n = paths.len();
    report.stat("intensity@0", base.intensity, Some(base.intensity_se), n);
    for (b, bin) in base.bins.iter().enumerate() {
        report.stat(format!("g[{b}]@0"), bin.g, Some(bin.se), n);
    }
    for &t in checkpoints {
        let est = estimate_correlations(&frames_at(t)?, sampling, analysis, edges)?;
        report.stat(format!("intensity@{t}"), est.intensity, Some(est.intensity_se), n);
        report.verdict(
            format!("intensity stable at t={t}"),
            Rule::Agree { a: "intensity@0".into(), b: format!("intensity@{t}"), k },
        );
        for (b, bin) in est.bins.iter().enumerate() {
            report.stat(format!("g[{b}]@{t}"), bin.g, Some(bin.se), n);
            report.verdict(
                format!("g bin [{:.3}, {:.3}) stable at t={t}", bin.r_lo, bin.r_hi),
                Rule::Agree { a: format!("g[{b}]@0"), b: format!("g[{b}]@{t}"), k },
            );
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentFit {
    pub lags: Vec<f64>,
    /// E|ΔX|⁴ per lag and its standard error across replicas.
    pub moments: Vec<f64>,
    pub moment_se: Vec<f64>,
    pub slope: f64,
    pub slope_se: f64,
    /// exp(intercept): the constant C in E|ΔX|⁴ ≈ C |Δt|^slope.
    pub constant: f64,
    pub n_replicas: usize,
}

/// Fourth moments of increments of the non-frozen particles starting in the
/// ball of radius `tag_radius`, averaged over all time origins of each path,
/// and the log-log slope across `lags`.
pub fn moment4_check(paths: &[PathRecord], lags: &[f64], tag_radius: f64) -> Result<MomentFit> {
    if lags.len() < 3 {
        return Err(Error::Config(format!("moment fit needs at least 3 lags, got {}", lags.len())));
    }
    if paths.len() < 2 {
        return Err(Error::InsufficientData(format!("{} replicas; need at least 2", paths.len())));
    }
    let mut per_lag: Vec<Vec<f64>> = vec![Vec::with_capacity(paths.len()); lags.len()];
    for path in paths {
        let times = path.times();
        if times.len() < 2 {
            return Err(Error::InsufficientData("path with fewer than two frames".into()));
        }
        let spacing = times[1] - times[0];
        let first = &path.frames[0];
        let tagged: Vec<u32> =
            first.particles.iter().filter(|p| !p.frozen && p.x.norm() <= tag_radius).map(|p| p.label).collect();
        let tracks: Vec<Vec<_>> = tagged.iter().map(|&l| path.trajectory(l)).collect();
        for (li, &lag) in lags.iter().enumerate() {
            let k = (lag / spacing).round() as usize;
            if k == 0 || ((k as f64 * spacing) - lag).abs() > 1e-6 * lag {
                return Err(Error::Config(format!("lag {lag} is not a multiple of the frame spacing {spacing}")));
            }
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for tr in &tracks {
                for j in 0..tr.len().saturating_sub(k) {
                    sum += (tr[j + k].1 - tr[j].1).norm_sq().powi(2);
                    cnt += 1;
                }
            }
            if cnt > 0 {
                per_lag[li].push(sum / cnt as f64);
            }
        }
    }
    let mut moments = Vec::new();
    let mut moment_se = Vec::new();
    for v in &per_lag {
        if v.len() < 2 {
            return Err(Error::InsufficientData("too few tagged increments".into()));
        }
        let (m, se) = mean_se(v);
        moments.push(m);
        moment_se.push(se);
    }
    if moments.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InsufficientData("zero fourth moment (frozen tags?)".into()));
    }
    let x: Vec<f64> = lags.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
    let sig: Vec<f64> = moments.iter().zip(&moment_se).map(|(m, s)| (s / m).max(1e-12)).collect();
    let fit = linear_fit(&x, &y, Some(&sig));
    Ok(MomentFit {
        lags: lags.to_vec(),
        moments,
        moment_se,
        slope: fit.slope,
        slope_se: fit.slope_se,
        constant: fit.intercept.exp(),
        n_replicas: paths.len(),
    })
}

/// 1-Wasserstein distance between two empirical laws on the line.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut x = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            _ => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - x);
        x = next;
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
    }
    total
}

/// How replicas of two schemes relate for resampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Replica i of both sets shares its seed; resample pairs jointly.
    Paired,
    /// Resample each set on its own.
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeDistance {
    pub w1: f64,
    pub w1_se: f64,
    /// Max |ρ̂_A − ρ̂_B| over the bins of the intensity profile.
    pub intensity_gap: f64,
    pub intensity_gap_se: f64,
    pub n_a: usize,
    pub n_b: usize,
}

const PROFILE_BINS: usize = 8;
const BOOTSTRAP: usize = 200;

struct Summary {
    displacement: Vec<f64>,
    profile: Vec<Vec<f64>>,
}

fn summarise(paths: &[PathRecord], window: f64, t: f64) -> Result<Summary> {
    let mut displacement = Vec::with_capacity(paths.len());
    let mut profile = Vec::with_capacity(paths.len());
    for p in paths {
        let f0 = p.first().ok_or_else(|| Error::InsufficientData("empty path".into()))?;
        let ft = p.frame_at(t).ok_or_else(|| Error::InsufficientData("empty path".into()))?;
        if (ft.time - t).abs() > 1e-9 * (1.0 + t) {
            return Err(Error::InsufficientData(format!("no frame at t={t}")));
        }
        let tag = f0.particles.iter().filter(|q| !q.frozen).min_by(|a, b| a.x.label_cmp(&b.x));
        let tag = tag.ok_or_else(|| Error::InsufficientData("no movable particle to tag".into()))?;
        let end = ft.get(tag.label).map(|q| q.x).unwrap_or(tag.x);
        let d = end - tag.x;
        displacement.push(if p.dim == 1 { d.x() } else { d.norm() });
        let mut bins = vec![0.0; PROFILE_BINS];
        for q in &ft.particles {
            let u = if p.dim == 1 { (q.x.x() + window) / (2.0 * window) } else { (q.x.norm() / window).powi(2) };
            if (0.0..1.0).contains(&u) {
                bins[(u * PROFILE_BINS as f64) as usize] += 1.0;
            }
        }
        let vol = if p.dim == 1 { 2.0 * window } else { PI * window * window } / PROFILE_BINS as f64;
        profile.push(bins.into_iter().map(|c| c / vol).collect());
    }
    Ok(Summary { displacement, profile })
}

fn distance_of(a: &Summary, ia: &[usize], b: &Summary, ib: &[usize]) -> (f64, f64) {
    let da: Vec<f64> = ia.iter().map(|&i| a.displacement[i]).collect();
    let db: Vec<f64> = ib.iter().map(|&i| b.displacement[i]).collect();
    let w = wasserstein1(&da, &db);
    let mean_profile = |s: &Summary, idx: &[usize]| -> Vec<f64> {
        (0..PROFILE_BINS).map(|k| idx.iter().map(|&i| s.profile[i][k]).sum::<f64>() / idx.len() as f64).collect()
    };
    let pa = mean_profile(a, ia);
    let pb = mean_profile(b, ib);
    let gap = pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    (w, gap)
}

/// Distance between two replica sets at time t: W1 of the displacement law
/// of the tagged particle (smallest initial modulus; modulus of the
/// displacement in d = 2) and the max gap between windowed intensity
/// profiles on [−window, window] (equal-area rings in d = 2), with
/// bootstrap standard errors.
pub fn scheme_distance(
    a: &[PathRecord],
    b: &[PathRecord],
    window: f64,
    t: f64,
    pairing: Pairing,
    seed: SeedSpec,
) -> Result<SchemeDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty replica set".into()));
    }
    if a.iter().chain(b).any(|p| p.model != a[0].model || p.dim != a[0].dim) {
        return Err(Error::Config("scheme_distance needs replica sets of one model".into()));
    }
    if pairing == Pairing::Paired && a.len() != b.len() {
        return Err(Error::Config(format!("paired sets differ in size: {} vs {}", a.len(), b.len())));
    }
    let sa = summarise(a, window, t)?;
    let sb = summarise(b, window, t)?;
    // Resample in a canonical order so the result is symmetric in (a, b).
    let swap = {
        let mut x = sa.displacement.clone();
        let mut y = sb.displacement.clone();
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        x.iter().map(|v| v.to_bits()).cmp(y.iter().map(|v| v.to_bits())) == std::cmp::Ordering::Greater
    };
    let (s1, s2) = if swap { (&sb, &sa) } else { (&sa, &sb) };
    let (n1, n2) = (s1.displacement.len(), s2.displacement.len());
    let all1: Vec<usize> = (0..n1).collect();
    let all2: Vec<usize> = (0..n2).collect();
    let (w1, gap) = distance_of(s1, &all1, s2, &all2);
    let mut rng = seed.rng(Purpose::Bootstrap);
    let mut ws = Vec::with_capacity(BOOTSTRAP);
    let mut gs = Vec::with_capacity(BOOTSTRAP);
    for _ in 0..BOOTSTRAP {
        let i1: Vec<usize> = (0..n1).map(|_| rng.random_range(0..n1)).collect();
        let i2: Vec<usize> = match pairing {
            Pairing::Paired => i1.clone(),
            Pairing::Independent => (0..n2).map(|_| rng.random_range(0..n2)).collect(),
        };
        let (w, g) = distance_of(s1, &i1, s2, &i2);
        ws.push(w);
        gs.push(g);
    }
    let sd = |v: &[f64]| {
        let (m, _) = mean_se(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    Ok(SchemeDistance {
        w1,
        w1_se: sd(&ws),
        intensity_gap: gap,
        intensity_gap_se: sd(&gs),
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// Intercept of a weighted fit of values against r^{−exponent}: the r → ∞
/// extrapolation, with its standard error.
pub fn extrapolate(rs: &[f64], values: &[f64], ses: &[f64], exponent: f64) -> (f64, f64) {
    let x: Vec<f64> = rs.iter().map(|r| r.powf(-exponent)).collect();
    let sig: Vec<f64> = ses.iter().map(|s| s.max(1e-300)).collect();
    let fit = linear_fit(&x, values, Some(&sig));
    (fit.intercept, fit.intercept_se)
}

#[cfg(test)]
mod tests;
