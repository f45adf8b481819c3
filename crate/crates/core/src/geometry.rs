//! Points, finite configurations with a frozen exterior, labels and windows.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A point of R^d for d ∈ {1, 2}. Unused coordinates are kept at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    c: [f64; 2],
    dim: u8,
}

impl Point {
    pub const fn d1(x: f64) -> Self {
        Self { c: [x, 0.0], dim: 1 }
    }

    pub const fn d2(x: f64, y: f64) -> Self {
        Self { c: [x, y], dim: 2 }
    }

    pub const fn zero(dim: usize) -> Self {
        Self { c: [0.0, 0.0], dim: dim as u8 }
    }

    /// Checked constructor: dimension 1 or 2, all coordinates finite.
    pub fn try_new(coords: &[f64]) -> Result<Self> {
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point", format!("non-finite coordinate in {coords:?}")));
        }
        match *coords {
            [x] => Ok(Self::d1(x)),
            [x, y] => Ok(Self::d2(x, y)),
            _ => Err(Error::invalid("point", format!("dimension {} not in {{1, 2}}", coords.len()))),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.c[1]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.c[0] * self.c[0] + self.c[1] * self.c[1]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dot(&self, other: &Point) -> f64 {
        self.c[0] * other.c[0] + self.c[1] * other.c[1]
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.c[0].is_finite() && self.c[1].is_finite()
    }

    /// Copy with coordinate `axis` shifted by `h`.
    pub fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut p = *self;
        p.c[axis] += h;
        p
    }

    /// Order by modulus, ties broken lexicographically by coordinates.
    pub fn label_cmp(&self, other: &Point) -> Ordering {
        self.norm_sq()
            .total_cmp(&other.norm_sq())
            .then_with(|| self.c[0].total_cmp(&other.c[0]))
            .then_with(|| self.c[1].total_cmp(&other.c[1]))
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point { c: [self.c[0] + o.c[0], self.c[1] + o.c[1]], dim: self.dim.max(o.dim) }
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point { c: [self.c[0] - o.c[0], self.c[1] - o.c[1]], dim: self.dim.max(o.dim) }
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, o: Point) {
        self.c[0] += o.c[0];
        self.c[1] += o.c[1];
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, k: f64) -> Point {
        Point { c: [self.c[0] * k, self.c[1] * k], dim: self.dim }
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        self * -1.0
    }
}

/// A finite window of a configuration: the points, which of them are
/// frozen exterior particles, and the radius R of the ball S_R the
/// non-frozen points live in (0 means unbounded).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    dim: usize,
    points: Vec<Point>,
    frozen: Vec<bool>,
    window_radius: f64,
}

impl Configuration {
    pub fn empty(dim: usize) -> Self {
        Self { dim, points: Vec::new(), frozen: Vec::new(), window_radius: 0.0 }
    }

    /// All points movable, unbounded window.
    pub fn new(dim: usize, points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::from_parts(dim, points, vec![false; n], 0.0)
    }

    pub fn from_parts(
        dim: usize,
        points: Vec<Point>,
        frozen: Vec<bool>,
        window_radius: f64,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid("dim", format!("{dim} not in {{1, 2}}")));
        }
        if points.len() != frozen.len() {
            return Err(Error::invalid("frozen", "mask length differs from point count"));
        }
        if !(window_radius >= 0.0) {
            return Err(Error::invalid("window_radius", format!("{window_radius} is negative or NaN")));
        }
        for p in &points {
            if p.dim() != dim || !p.is_finite() {
                return Err(Error::invalid("points", format!("{p:?} is not a finite {dim}-d point")));
            }
        }
        let c = Self { dim, points, frozen, window_radius };
        if let Some(p) = c.iter().find(|(p, f)| !f && !c.in_window(p)) {
            return Err(Error::invalid(
                "points",
                format!("movable point {:?} outside window radius {}", p.0.coords(), window_radius),
            ));
        }
        Ok(c)
    }

    /// Marks every point with |x| > `radius` as frozen and sets the window.
    pub fn with_frozen_exterior(dim: usize, points: Vec<Point>, radius: f64) -> Result<Self> {
        let frozen = points.iter().map(|p| p.norm() > radius).collect();
        Self::from_parts(dim, points, frozen, radius)
    }

    fn in_window(&self, p: &Point) -> bool {
        self.window_radius == 0.0 || p.norm() <= self.window_radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, bool)> + '_ {
        self.points.iter().copied().zip(self.frozen.iter().copied())
    }

    pub fn movable_count(&self) -> usize {
        self.frozen.iter().filter(|f| !**f).count()
    }

    /// Multiset equality of (point, frozen) pairs.
    pub fn same_multiset(&self, other: &Configuration) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        let key = |c: &Configuration| {
            let mut v: Vec<(Point, bool)> = c.iter().collect();
            v.sort_by(|a, b| a.0.label_cmp(&b.0).then(a.1.cmp(&b.1)));
            v
        };
        key(self) == key(other)
    }
}

/// Particles in label order; particle `i` (0-based) carries label `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledConfig {
    pub dim: usize,
    pub particles: Vec<Point>,
    pub frozen: Vec<bool>,
    pub window_radius: f64,
}

impl LabeledConfig {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = u32> {
        1..=self.particles.len() as u32
    }

    /// Forget the labels.
    pub fn unlabel(&self) -> Configuration {
        Configuration {
            dim: self.dim,
            points: self.particles.clone(),
            frozen: self.frozen.clone(),
            window_radius: self.window_radius,
        }
    }
}

/// Permutation sorting `points` by increasing modulus (lexicographic ties).
pub fn label_order(points: &[Point]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].label_cmp(&points[b]));
    order
}

/// Label a configuration by increasing modulus.
pub fn label(config: &Configuration) -> LabeledConfig {
    let order = label_order(&config.points);
    LabeledConfig {
        dim: config.dim,
        particles: order.iter().map(|&i| config.points[i]).collect(),
        frozen: order.iter().map(|&i| config.frozen[i]).collect(),
        window_radius: config.window_radius,
    }
}

/// π_r: the points with |x| ≤ radius, or with |x| > radius when `complement`.
pub fn restrict(config: &Configuration, radius: f64, complement: bool) -> Configuration {
    let keep = |p: &Point| (p.norm() <= radius) != complement;
    let (points, frozen): (Vec<Point>, Vec<bool>) = config.iter().filter(|(p, _)| keep(p)).unzip();
    let window_radius = if complement || radius <= 0.0 {
        config.window_radius
    } else if config.window_radius == 0.0 {
        radius
    } else {
        config.window_radius.min(radius)
    };
    Configuration { dim: config.dim, points, frozen, window_radius }
}

/// A bounded observation or sampling window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Window {
    /// `[lo, hi]` in d = 1.
    Interval { lo: f64, hi: f64 },
    /// Closed centred ball of the given radius.
    Ball { dim: usize, radius: f64 },
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Window::Interval { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            Window::Ball { dim, radius } if (1..=2).contains(&dim) && radius > 0.0 && radius.is_finite() => Ok(()),
            w => Err(Error::invalid("window", format!("{w:?} is not a bounded nonempty window"))),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Window::Interval { .. } => 1,
            Window::Ball { dim, .. } => dim,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Window::Interval { lo, hi } => hi - lo,
            Window::Ball { dim: 1, radius } => 2.0 * radius,
            Window::Ball { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Window::Interval { lo, hi } => p.x() >= lo && p.x() <= hi,
            Window::Ball { radius, .. } => p.norm() <= radius,
        }
    }

    /// Interval form of a one-dimensional window.
    pub fn as_interval(&self) -> Option<(f64, f64)> {
        match *self {
            Window::Interval { lo, hi } => Some((lo, hi)),
            Window::Ball { dim: 1, radius } => Some((-radius, radius)),
            Window::Ball { .. } => None,
        }
    }

    /// Whether `inner` dilated by `margin` fits inside `self`.
    pub fn contains_dilated(&self, inner: &Window, margin: f64) -> bool {
        match (self.as_interval(), inner.as_interval()) {
            (Some((lo, hi)), Some((a, b))) => a - margin >= lo && b + margin <= hi,
            _ => match (*self, *inner) {
                (Window::Ball { radius: r, .. }, Window::Ball { radius: q, .. }) => q + margin <= r,
                _ => false,
            },
        }
    }
}
