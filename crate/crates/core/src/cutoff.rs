//! Cut-off functions on R^d and on configuration space.
//!
//! `chi` and `upsilon` interpolate their plateaus with the cubic smoothstep
//! `3u² − 2u³`. The configuration cut-off `varpi` composes the shell excess
//! distance `d_a(s)` with the quintic smoothstep `theta`, whose slope is
//! bounded by 30/16 = 1.875, so its carré du champ `½ θ′(d)²` never
//! exceeds 1.76.

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Point};
use serde::{Deserialize, Serialize};

/// Cubic smoothstep on [0, 1], clamped outside.
#[inline]
pub fn smoothstep3(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// θ: 1 on (−∞, 0], 0 on [1, ∞), quintic in between.
#[inline]
pub fn theta(t: f64) -> f64 {
    let u = t.clamp(0.0, 1.0);
    1.0 - u * u * u * (u * (6.0 * u - 15.0) + 10.0)
}

#[inline]
pub fn theta_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    -30.0 * t * t * (1.0 - t) * (1.0 - t)
}

/// Largest |θ′|.
pub const THETA_SLOPE_BOUND: f64 = 1.875;

/// χ_t as a function of the modulus.
#[inline]
pub fn chi_radial(t: f64, r: f64) -> f64 {
    1.0 - smoothstep3(r - (t - 1.0))
}

/// υ_p as a function of the modulus.
#[inline]
pub fn upsilon_radial(p: f64, r: f64) -> f64 {
    smoothstep3((r - 1.0 / p) * p)
}

/// χ_t(x): 1 for |x| ≤ t − 1, 0 for |x| ≥ t.
pub fn chi(t: f64, x: &Point) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::invalid("t", format!("chi requires t > 1, got {t}")));
    }
    Ok(chi_radial(t, x.norm()))
}

/// υ_p(x): 0 for |x| ≤ 1/p, 1 for |x| ≥ 2/p.
pub fn upsilon(p: f64, x: &Point) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::invalid("p", format!("upsilon requires p > 0, got {p}")));
    }
    Ok(upsilon_radial(p, x.norm()))
}

/// A nondecreasing sequence a(1), a(2), … of shell capacities. Values past
/// the explicit prefix continue arithmetically with `tail_step ≥ 1`, so
/// every finite configuration eventually fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSequence {
    values: Vec<u64>,
    tail_step: u64,
}

impl ShellSequence {
    pub fn new(values: Vec<u64>, tail_step: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a_seq", "empty shell sequence"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("a_seq", "shell sequence must be nondecreasing"));
        }
        if tail_step == 0 {
            return Err(Error::invalid("a_seq", "tail step must be at least 1"));
        }
        Ok(Self { values, tail_step })
    }

    /// a(k) = offset + slope·k.
    pub fn affine(offset: u64, slope: u64) -> Self {
        let slope = slope.max(1);
        Self { values: vec![offset + slope], tail_step: slope }
    }

    /// a(k) = ⌈intensity · |S_k|⌉ + margin on the first `shells` shells,
    /// where |S_k| is the volume of the ball of radius k in dimension `dim`.
    pub fn for_intensity(intensity: f64, dim: usize, margin: u64, shells: usize) -> Self {
        let vol = |k: f64| if dim == 1 { 2.0 * k } else { std::f64::consts::PI * k * k };
        let values: Vec<u64> = (1..=shells.max(2))
            .map(|k| (intensity * vol(k as f64)).ceil().max(0.0) as u64 + margin)
            .collect();
        let n = values.len();
        let tail_step = (values[n - 1] - values[n - 2]).max(1);
        Self { values, tail_step }
    }

    /// a(k) for k ≥ 1.
    pub fn value(&self, k: usize) -> u64 {
        assert!(k >= 1, "shells are indexed from 1");
        let n = self.values.len();
        if k <= n {
            self.values[k - 1]
        } else {
            self.values[n - 1] + self.tail_step * (k - n) as u64
        }
    }

    /// a₊(k) = 1 + a(k + 1).
    pub fn plus(&self) -> Self {
        let n = self.values.len();
        Self {
            values: (1..=n).map(|k| 1 + self.value(k + 1)).collect(),
            tail_step: self.tail_step,
        }
    }

    /// Pointwise shift a(k) + by, used to build nested families a[r].
    pub fn shifted(&self, by: u64) -> Self {
        Self { values: self.values.iter().map(|v| v + by).collect(), tail_step: self.tail_step }
    }
}

/// Truncation parameters of the cut-off coefficients b_{r,s,p}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    /// Spatial cut-off of the tagged particle.
    pub r: f64,
    /// Interaction range cut-off.
    pub s: f64,
    /// Short-distance regularisation 1/p.
    pub p: f64,
    /// Shell capacities a[r](k).
    pub a_seq: ShellSequence,
    /// Tail compensator ϱ_s (one-dimensional models only).
    #[serde(default)]
    pub rho_s: f64,
}

impl CutoffParams {
    pub fn new(r: f64, s: f64, p: f64, a_seq: ShellSequence) -> Self {
        Self { r, s, p, a_seq, rho_s: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("s", self.s), ("p", self.p)] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.rho_s.is_finite() {
            return Err(Error::invalid("rho_s", "must be finite"));
        }
        Ok(())
    }

    /// Additionally enforce r < s, as needed when both enter one drift.
    pub fn validate_for_drift(&self) -> Result<()> {
        self.validate()?;
        if !(self.r < self.s) {
            return Err(Error::invalid("r", format!("need r < s, got r={} s={}", self.r, self.s)));
        }
        if !(self.r > 1.0) {
            return Err(Error::invalid("r", format!("chi_r needs r > 1, got {}", self.r)));
        }
        Ok(())
    }
}

/// Shell excess distance d_a(s): with points labelled by increasing modulus
/// m_1 ≤ m_2 ≤ …, sums (k − m_i)² over shells k ≥ 1 and labels i > a(k)
/// with m_i ≤ k, and returns the square root. Zero exactly on K(a).
pub fn shell_excess_distance(a: &ShellSequence, config: &Configuration) -> f64 {
    let mut moduli: Vec<f64> = config.points().iter().map(Point::norm).collect();
    moduli.sort_by(f64::total_cmp);
    shell_excess_from_sorted(a, &moduli)
}

fn shell_excess_from_sorted(a: &ShellSequence, moduli: &[f64]) -> f64 {
    let n = moduli.len() as u64;
    let mut sum = 0.0;
    let mut inside = 0usize;
    let mut k = 1usize;
    loop {
        let cap = a.value(k);
        if cap >= n {
            break;
        }
        let kf = k as f64;
        while inside < moduli.len() && moduli[inside] <= kf {
            inside += 1;
        }
        for &m in moduli.iter().take(inside).skip(cap as usize) {
            sum += (kf - m) * (kf - m);
        }
        k += 1;
    }
    sum.sqrt()
}

/// ϖ_a(s) = θ(d_a(s)): 1 on K(a), 0 once some shell S_k holds more than
/// a₊(k) points.
pub fn varpi(a: &ShellSequence, config: &Configuration) -> f64 {
    theta(shell_excess_distance(a, config))
}

/// Same as [`varpi`] on a bare point slice, skipping index `skip`.
pub(crate) fn varpi_points(a: &ShellSequence, points: &[Point], skip: Option<usize>) -> f64 {
    let mut moduli: Vec<f64> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, p)| p.norm())
        .collect();
    moduli.sort_by(f64::total_cmp);
    theta(shell_excess_from_sorted(a, &moduli))
}

/// Analytic carré du champ ½ Σ_i |∇_{s_i} ϖ_a|² at a configuration where no
/// point sits at the origin.
pub fn varpi_carre_du_champ(a: &ShellSequence, config: &Configuration) -> f64 {
    let points = config.points();
    let order = crate::geometry::label_order(points);
    let moduli: Vec<f64> = order.iter().map(|&i| points[i].norm()).collect();
    let d = shell_excess_from_sorted(a, &moduli);
    if d <= 0.0 || d >= 1.0 {
        return 0.0;
    }
    // ∂d/∂s_i = −(1/d) Σ_{k : i ∈ J_k} (k − m_i) · x̂_i
    let n = moduli.len() as u64;
    let mut coeff = vec![0.0; moduli.len()];
    let mut k = 1usize;
    loop {
        let cap = a.value(k);
        if cap >= n {
            break;
        }
        let kf = k as f64;
        for (i, &m) in moduli.iter().enumerate().skip(cap as usize) {
            if m <= kf {
                coeff[i] += kf - m;
            }
        }
        k += 1;
    }
    let grad_sq: f64 = coeff.iter().map(|c| c * c).sum::<f64>() / (d * d);
    0.5 * theta_prime(d).powi(2) * grad_sq
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_examples() {
        assert_eq!(chi(3.0, &Point::d1(1.0)).unwrap(), 1.0);
        assert_eq!(chi(3.0, &Point::d1(3.5)).unwrap(), 0.0);
        assert!((chi(3.0, &Point::d1(2.5)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(chi(3.0, &Point::d2(0.0, 2.0)).unwrap(), 1.0);
        assert_eq!(chi(3.0, &Point::d2(3.0, 0.0)).unwrap(), 0.0);
        assert!(chi(1.0, &Point::d1(0.0)).is_err());
    }

    #[test]
    fn upsilon_examples() {
        assert_eq!(upsilon(2.0, &Point::d1(0.25)).unwrap(), 0.0);
        assert_eq!(upsilon(2.0, &Point::d1(1.5)).unwrap(), 1.0);
        assert!((upsilon(2.0, &Point::d1(0.75)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(upsilon(2.0, &Point::d1(0.5)).unwrap(), 0.0);
        assert_eq!(upsilon(2.0, &Point::d1(1.0)).unwrap(), 1.0);
        assert!(upsilon(0.0, &Point::d1(1.0)).is_err());
    }

    #[test]
    fn chi_and_upsilon_are_monotone() {
        let mut prev_c = 1.0;
        let mut prev_u = 0.0;
        for i in 0..=400 {
            let r = i as f64 * 0.01;
            let c = chi_radial(3.0, r);
            let u = upsilon_radial(1.0, r);
            assert!(c <= prev_c && u >= prev_u);
            prev_c = c;
            prev_u = u;
        }
    }

    #[test]
    fn theta_slope_bound() {
        let max = (0..=10_000).map(|i| theta_prime(i as f64 / 10_000.0).abs()).fold(0.0, f64::max);
        assert!((max - THETA_SLOPE_BOUND).abs() < 1e-9);
        assert_eq!(theta(-1.0), 1.0);
        assert_eq!(theta(0.0), 1.0);
        assert_eq!(theta(1.0), 0.0);
        assert!((theta(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shell_sequence_extension_and_plus() {
        let a = ShellSequence::new(vec![1, 3, 4], 2).unwrap();
        assert_eq!((1..=6).map(|k| a.value(k)).collect::<Vec<_>>(), vec![1, 3, 4, 6, 8, 10]);
        let plus = a.plus();
        assert_eq!((1..=4).map(|k| plus.value(k)).collect::<Vec<_>>(), vec![4, 5, 7, 9]);
        assert!(ShellSequence::new(vec![3, 2], 1).is_err());
        let aff = ShellSequence::affine(2, 3);
        assert_eq!(aff.value(1), 5);
        assert_eq!(aff.value(4), 14);
    }

    #[test]
    fn varpi_plateaus() {
        let a = ShellSequence::affine(0, 1); // a(k) = k
        // One point per unit shell: inside K(a).
        let inside = Configuration::new(1, vec![Point::d1(0.5), Point::d1(1.5), Point::d1(-2.5)]).unwrap();
        assert_eq!(shell_excess_distance(&a, &inside), 0.0);
        assert_eq!(varpi(&a, &inside), 1.0);
        // Four points within S_1 against a₊(1) = 1 + a(2) = 3: ϖ must vanish.
        let crowded = Configuration::new(
            1,
            vec![Point::d1(0.0), Point::d1(0.01), Point::d1(-0.02), Point::d1(0.03)],
        )
        .unwrap();
        assert!(shell_excess_distance(&a, &crowded) >= 1.0);
        assert_eq!(varpi(&a, &crowded), 0.0);
    }

    #[test]
    fn shell_excess_hand_computed() {
        // a(k) = k; points at moduli 0.2, 0.6, 1.5.
        // k = 1: labels > 1 inside S_1: m = 0.6 → 0.16.
        // k = 2: labels > 2 inside S_2: m = 1.5 → 0.25. k = 3: a(3) = 3 = n stops.
        let a = ShellSequence::affine(0, 1);
        let c = Configuration::new(1, vec![Point::d1(0.2), Point::d1(-0.6), Point::d1(1.5)]).unwrap();
        assert!((shell_excess_distance(&a, &c) - (0.16f64 + 0.25).sqrt()).abs() < 1e-15);
    }
}
