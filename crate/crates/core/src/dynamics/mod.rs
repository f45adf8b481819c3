//! Euler–Maruyama integrators for the finite-volume schemes: reflecting
//! walls with a frozen exterior (lower), absorbing walls with entering
//! particles (upper), and a large-domain reference run whose escaping
//! particles freeze.

mod record;

pub use record::{Event, EventKind, Frame, ParticleState, PathRecord};

use crate::cutoff::CutoffParams;
use crate::drift::{DriftField, Truncation};
use crate::error::{Error, Result};
use crate::geometry::{label, Configuration, Point};
use crate::pointfields::{pair_correlation, ModelSpec};
use crate::rng::{Purpose, SeedSpec, SimRng};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Lower,
    Upper,
    Reference,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lower => "lower",
            Scheme::Upper => "upper",
            Scheme::Reference => "reference",
        }
    }
}

fn default_record_every() -> u64 {
    1
}
fn default_max_drift_step() -> f64 {
    0.1
}
fn default_max_halvings() -> u32 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    pub scheme: Scheme,
    /// Radius R of S_R (R_big for the reference scheme).
    pub radius: f64,
    pub dt: f64,
    pub t_end: f64,
    /// The drift is truncated at `cutoff.s`.
    pub cutoff: CutoffParams,
    /// Neighbour selection of the truncated drift; relative by default.
    #[serde(default)]
    pub truncation: Option<Truncation>,
    /// Boundary-contact tolerance; defaults to R·1e−6.
    #[serde(default)]
    pub reflect_eps: Option<f64>,
    /// Width of the reservoir shell outside S_R (upper scheme); defaults to 8√dt.
    #[serde(default)]
    pub birth_shell: Option<f64>,
    /// Intensity of the reservoir (upper scheme); defaults to the model's
    /// one-point density at the boundary, or the initial density in S_R.
    #[serde(default)]
    pub boundary_intensity: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Steps with max |b|·dt above this are subdivided.
    #[serde(default = "default_max_drift_step")]
    pub max_drift_step: f64,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: u32,
}

impl SchemeParams {
    pub fn new(scheme: Scheme, radius: f64, dt: f64, t_end: f64, cutoff: CutoffParams) -> Self {
        Self {
            scheme,
            radius,
            dt,
            t_end,
            cutoff,
            truncation: None,
            reflect_eps: None,
            birth_shell: None,
            boundary_intensity: None,
            record_every: 1,
            max_drift_step: default_max_drift_step(),
            max_halvings: default_max_halvings(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("radius", self.radius), ("dt", self.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if !(self.cutoff.s > 0.0) {
            return Err(Error::invalid("cutoff.s", format!("must be positive, got {}", self.cutoff.s)));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be at least 1"));
        }
        if !(self.max_drift_step > 0.0) {
            return Err(Error::invalid("max_drift_step", "must be positive"));
        }
        if let Some(e) = self.reflect_eps {
            if !(e >= 0.0 && e < self.radius) {
                return Err(Error::invalid("reflect_eps", format!("{e} not in [0, R)")));
            }
        }
        if let Some(w) = self.birth_shell {
            if !(w > 0.0) {
                return Err(Error::invalid("birth_shell", format!("must be positive, got {w}")));
            }
        }
        Ok(())
    }

    pub fn reflect_eps(&self) -> f64 {
        self.reflect_eps.unwrap_or(self.radius * 1e-6)
    }

    pub fn birth_shell(&self) -> f64 {
        self.birth_shell.unwrap_or(8.0 * self.dt.sqrt())
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Whether R ≥ r + s + 1, the regime of the cut-off residual bounds.
    pub fn in_cutoff_regime(&self) -> bool {
        self.cutoff.r + self.cutoff.s + 1.0 <= self.radius
    }
}

/// Radial projection onto the closed ball of radius R with the pushed
/// distance as local-time increment.
pub fn reflect_project(x: &Point, radius: f64) -> (Point, f64) {
    let r = x.norm();
    if r <= radius {
        (*x, 0.0)
    } else {
        (*x * (radius / r), r - radius)
    }
}

fn gaussian_point(rng: &mut SimRng, dim: usize) -> Point {
    let a: f64 = StandardNormal.sample(rng);
    if dim == 1 {
        Point::d1(a)
    } else {
        let b: f64 = StandardNormal.sample(rng);
        Point::d2(a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Particle {
    label: u32,
    x: Point,
    frozen: bool,
    local_time: f64,
    rng: Option<SimRng>,
}

/// Counters of the numerical guards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GuardStats {
    /// Subdivided (sub)steps.
    pub halvings: u64,
    /// Bessel positions mirrored at the finest subdivision.
    pub mirrored: u64,
    /// Birth proposals and accepted births (upper scheme).
    pub proposals: u64,
    pub births: u64,
}

struct Work {
    x: Vec<Point>,
    alive: Vec<bool>,
    active: Vec<bool>,
    lt: Vec<f64>,
}

enum Outcome {
    Ok(Vec<Point>),
    Split,
    Fail(String),
}

/// Stateful integrator; serialisable as a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    model: ModelSpec,
    params: SchemeParams,
    field: DriftField,
    seed: SeedSpec,
    step: u64,
    particles: Vec<Particle>,
    scheme_rng: SimRng,
    next_label: u32,
    boundary_intensity: f64,
    guards: GuardStats,
    record: PathRecord,
}

impl Simulation {
    /// Labels `init` by increasing modulus; non-frozen points must lie in S_R.
    pub fn new(init: &Configuration, model: &ModelSpec, params: &SchemeParams, seed: SeedSpec) -> Result<Self> {
        model.validate()?;
        params.validate()?;
        let dim = model.dim();
        if !init.is_empty() && init.dim() != dim {
            return Err(Error::invalid("init", format!("{}-d configuration for a {dim}-d model", init.dim())));
        }
        let truncation = params.truncation.unwrap_or(Truncation::Relative);
        let field = DriftField::new(model.clone(), truncation, params.cutoff.s)?;
        let lab = label(init);
        let mut particles = Vec::with_capacity(lab.len());
        for (i, (&x, &frozen)) in lab.particles.iter().zip(&lab.frozen).enumerate() {
            if !frozen && x.norm() > params.radius {
                return Err(Error::invalid(
                    "init",
                    format!("movable point {:?} outside the domain radius {}", x.coords(), params.radius),
                ));
            }
            if matches!(model, ModelSpec::Bessel { .. }) && !(x.x() > 0.0) {
                return Err(Error::Domain(format!("Bessel particles must be positive, got {}", x.x())));
            }
            let label = i as u32 + 1;
            let rng = (!frozen).then(|| seed.rng(Purpose::Particle(label)));
            particles.push(Particle { label, x, frozen, local_time: 0.0, rng });
        }
        let boundary_intensity = match params.boundary_intensity {
            Some(v) => v,
            None => {
                let on_boundary = if dim == 1 { Point::d1(params.radius) } else { Point::d2(params.radius, 0.0) };
                match model.intensity(&on_boundary) {
                    Some(v) => v,
                    None => {
                        let movers = particles.iter().filter(|p| !p.frozen).count() as f64;
                        movers / domain_volume(model, params.radius)
                    }
                }
            }
        };
        let next_label = particles.len() as u32 + 1;
        let record = PathRecord::new(model.name(), dim, params.scheme, params.radius);
        let mut sim = Self {
            model: model.clone(),
            params: params.clone(),
            field,
            seed,
            step: 0,
            particles,
            scheme_rng: seed.rng(Purpose::Scheme),
            next_label,
            boundary_intensity,
            guards: GuardStats::default(),
            record,
        };
        sim.push_frame();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.params.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.params.n_steps()
    }

    pub fn guards(&self) -> GuardStats {
        self.guards
    }

    pub fn record(&self) -> &PathRecord {
        &self.record
    }

    pub fn into_record(self) -> PathRecord {
        self.record
    }

    /// Current configuration (frozen mask included).
    pub fn configuration(&self) -> Configuration {
        let pts = self.particles.iter().map(|p| p.x).collect();
        let frozen = self.particles.iter().map(|p| p.frozen).collect();
        Configuration::from_parts(self.model.dim(), pts, frozen, 0.0).expect("particles stay finite")
    }

    pub fn run(mut self) -> Result<PathRecord> {
        self.run_until(self.params.n_steps())?;
        Ok(self.record)
    }

    /// Advances until `step` (capped at the horizon).
    pub fn run_until(&mut self, step: u64) -> Result<()> {
        let target = step.min(self.params.n_steps());
        while self.step < target {
            self.step_once()?;
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_checkpoint(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    fn push_frame(&mut self) {
        let particles = self
            .particles
            .iter()
            .map(|p| ParticleState { label: p.label, frozen: p.frozen, x: p.x, local_time: p.local_time })
            .collect();
        self.record.frames.push(Frame { time: self.time(), particles });
    }

    pub fn step_once(&mut self) -> Result<()> {
        let dim = self.model.dim();
        let dt = self.params.dt;
        let sdt = dt.sqrt();
        let movers: Vec<usize> = (0..self.particles.len()).filter(|&i| !self.particles[i].frozen).collect();
        let dw: Vec<Point> = movers
            .iter()
            .map(|&i| gaussian_point(self.particles[i].rng.as_mut().expect("movers carry a stream"), dim) * sdt)
            .collect();
        let n = self.particles.len();
        let mut work = Work {
            x: self.particles.iter().map(|p| p.x).collect(),
            alive: vec![true; n],
            active: self.particles.iter().map(|p| !p.frozen).collect(),
            lt: vec![0.0; n],
        };
        self.advance(&mut work, &movers, &dw, dt, 1, 0)?;

        let t_new = (self.step + 1) as f64 * dt;
        let mut kept = Vec::with_capacity(n);
        for (i, mut p) in std::mem::take(&mut self.particles).into_iter().enumerate() {
            if !work.alive[i] {
                self.record.events.push(Event { time: t_new, kind: EventKind::Death, label: p.label });
                continue;
            }
            p.x = work.x[i];
            p.local_time += work.lt[i];
            if !p.frozen && !work.active[i] {
                p.frozen = true;
                p.rng = None;
                self.record.events.push(Event { time: t_new, kind: EventKind::Freeze, label: p.label });
            }
            kept.push(p);
        }
        self.particles = kept;
        if self.params.scheme == Scheme::Upper {
            self.births(t_new)?;
        }
        self.step += 1;
        if self.step % self.params.record_every == 0 || self.is_done() {
            self.push_frame();
        }
        Ok(())
    }

    fn is_bessel(&self) -> bool {
        matches!(self.model, ModelSpec::Bessel { .. })
    }

    /// One Euler–Maruyama (sub)step over `dt` with Brownian increments `dw`
    /// (indexed like `movers`); subdivides by Brownian bridges on trouble.
    fn advance(&mut self, w: &mut Work, movers: &[usize], dw: &[Point], dt: f64, node: u32, depth: u32) -> Result<()> {
        let at_floor = depth >= self.params.max_halvings;
        match self.propose(w, movers, dw, dt, at_floor) {
            Outcome::Ok(new_x) => {
                self.commit(w, movers, new_x);
                Ok(())
            }
            Outcome::Fail(reason) => Err(Error::StepAborted { time: self.time(), reason, seed: self.seed }),
            Outcome::Split => {
                self.guards.halvings += 1;
                let half_sd = 0.5 * dt.sqrt();
                let first: Vec<Point> = movers
                    .iter()
                    .zip(dw)
                    .map(|(&i, d)| {
                        let label = self.particles[i].label;
                        let mut rng = self.seed.rng(Purpose::Refine { label, step: self.step, node });
                        *d * 0.5 + gaussian_point(&mut rng, d.dim()) * half_sd
                    })
                    .collect();
                let second: Vec<Point> = dw.iter().zip(&first).map(|(d, a)| *d - *a).collect();
                self.advance(w, movers, &first, 0.5 * dt, 2 * node, depth + 1)?;
                self.advance(w, movers, &second, 0.5 * dt, 2 * node + 1, depth + 1)
            }
        }
    }

    fn propose(&mut self, w: &Work, movers: &[usize], dw: &[Point], dt: f64, at_floor: bool) -> Outcome {
        let live: Vec<usize> = (0..w.x.len()).filter(|&i| w.alive[i]).collect();
        let mut index = vec![usize::MAX; w.x.len()];
        for (k, &i) in live.iter().enumerate() {
            index[i] = k;
        }
        let pts: Vec<Point> = live.iter().map(|&i| w.x[i]).collect();
        let active: Vec<usize> = movers.iter().copied().filter(|&i| w.active[i] && w.alive[i]).collect();
        let targets: Vec<usize> = active.iter().map(|&i| index[i]).collect();
        let drifts = match self.field.eval_many(&pts, &targets) {
            Ok(b) => b,
            Err(e) if at_floor => return Outcome::Fail(e.to_string()),
            Err(_) => return Outcome::Split,
        };
        let max_move = drifts.iter().map(|b| b.norm() * dt).fold(0.0, f64::max);
        if !at_floor && max_move > self.params.max_drift_step {
            return Outcome::Split;
        }
        let mut slot = vec![usize::MAX; w.x.len()];
        for (k, &i) in movers.iter().enumerate() {
            slot[i] = k;
        }
        let mut out = Vec::with_capacity(active.len());
        for (b, &i) in drifts.iter().zip(&active) {
            let mut y = w.x[i] + *b * dt + dw[slot[i]];
            if !y.is_finite() {
                return if at_floor { Outcome::Fail(format!("non-finite position for label {}", self.particles[i].label)) } else { Outcome::Split };
            }
            if self.is_bessel() && !(y.x() > 0.0) {
                if !at_floor {
                    return Outcome::Split;
                }
                self.guards.mirrored += 1;
                y = Point::d1(y.x().abs().max(f64::MIN_POSITIVE));
            }
            out.push(y);
        }
        Outcome::Ok(out)
    }

    fn commit(&self, w: &mut Work, movers: &[usize], new_x: Vec<Point>) {
        let radius = self.params.radius;
        let active = movers.iter().copied().filter(|&i| w.active[i] && w.alive[i]);
        for (i, y) in active.collect::<Vec<_>>().into_iter().zip(new_x) {
            match self.params.scheme {
                Scheme::Lower => {
                    let (z, inc) = reflect_project(&y, radius);
                    w.x[i] = z;
                    w.lt[i] += inc;
                }
                Scheme::Upper => {
                    w.x[i] = y;
                    if y.norm() > radius {
                        w.alive[i] = false;
                    }
                }
                Scheme::Reference => {
                    w.x[i] = y;
                    if y.norm() > radius {
                        w.active[i] = false;
                    }
                }
            }
        }
    }

    /// Reservoir births for the upper scheme.
    fn births(&mut self, time: f64) -> Result<()> {
        let dim = self.model.dim();
        let r = self.params.radius;
        let width = self.params.birth_shell();
        let vol = shell_volume(&self.model, r, width);
        let mean = self.boundary_intensity * vol;
        if !(mean > 0.0) {
            return Ok(());
        }
        let count = Poisson::new(mean)
            .map_err(|e| Error::invalid("boundary_intensity", e.to_string()))?
            .sample(&mut self.scheme_rng) as u64;
        let sdt = self.params.dt.sqrt();
        for _ in 0..count {
            self.guards.proposals += 1;
            let y = self.uniform_in_shell(r, width);
            let accept = self.insertion_weight(&y);
            let u: f64 = self.scheme_rng.random();
            let step = gaussian_point(&mut self.scheme_rng, dim) * sdt;
            if u >= accept {
                continue;
            }
            let z = y + step;
            if z.norm() > r || (self.is_bessel() && !(z.x() > 0.0)) {
                continue;
            }
            let label = self.next_label;
            self.next_label += 1;
            self.guards.births += 1;
            self.particles.push(Particle {
                label,
                x: z,
                frozen: false,
                local_time: 0.0,
                rng: Some(self.seed.rng(Purpose::Particle(label))),
            });
            self.record.events.push(Event { time, kind: EventKind::Birth, label });
        }
        Ok(())
    }

    fn uniform_in_shell(&mut self, r: f64, width: f64) -> Point {
        let rng = &mut self.scheme_rng;
        match (&self.model, self.model.dim()) {
            (ModelSpec::Bessel { .. }, _) => Point::d1(r + width * rng.random::<f64>()),
            (_, 1) => {
                let m = r + width * rng.random::<f64>();
                if rng.random::<bool>() {
                    Point::d1(m)
                } else {
                    Point::d1(-m)
                }
            }
            _ => {
                let u: f64 = rng.random();
                let rho = (r * r + u * ((r + width).powi(2) - r * r)).sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                Point::d2(rho * phi.cos(), rho * phi.sin())
            }
        }
    }

    /// Acceptance weight of a reservoir proposal given the current particles:
    /// Π g(y − x_i) for determinantal fields, min(1, e^{−βΣΨ}) otherwise.
    fn insertion_weight(&self, y: &Point) -> f64 {
        match &self.model {
            ModelSpec::Ruelle { beta, potential, .. } => {
                if potential.is_zero() {
                    return 1.0;
                }
                let reach = potential.r0() + potential.tail_range(1e-10);
                let e: f64 =
                    self.particles.iter().filter(|p| p.x.dist(y) < reach).map(|p| potential.value(&(*y - p.x))).sum();
                (-beta * e).exp().min(1.0)
            }
            m => {
                let mut w = 1.0;
                for p in self.particles.iter().filter(|p| p.x.dist(y) < 4.0) {
                    w *= pair_correlation(m, y, &p.x).unwrap_or(0.0).clamp(0.0, 1.0);
                }
                w
            }
        }
    }
}

fn domain_volume(model: &ModelSpec, r: f64) -> f64 {
    match (model, model.dim()) {
        (ModelSpec::Bessel { .. }, _) => r,
        (_, 1) => 2.0 * r,
        _ => PI * r * r,
    }
}

fn shell_volume(model: &ModelSpec, r: f64, width: f64) -> f64 {
    domain_volume(model, r + width) - domain_volume(model, r)
}

/// Runs a scheme to its horizon.
pub fn simulate(init: &Configuration, model: &ModelSpec, params: &SchemeParams, seed: SeedSpec) -> Result<PathRecord> {
    Simulation::new(init, model, params, seed)?.run()
}

pub fn simulate_lower(init: &Configuration, model: &ModelSpec, params: &SchemeParams, seed: SeedSpec) -> Result<PathRecord> {
    let p = SchemeParams { scheme: Scheme::Lower, ..params.clone() };
    simulate(init, model, &p, seed)
}

pub fn simulate_upper(init: &Configuration, model: &ModelSpec, params: &SchemeParams, seed: SeedSpec) -> Result<PathRecord> {
    let p = SchemeParams { scheme: Scheme::Upper, ..params.clone() };
    simulate(init, model, &p, seed)
}

/// Reference run on the ball of radius `params.radius` (R_big) with the
/// cut-offs of `params.cutoff`.
pub fn simulate_reference(
    init: &Configuration,
    model: &ModelSpec,
    params: &SchemeParams,
    seed: SeedSpec,
) -> Result<PathRecord> {
    let p = SchemeParams { scheme: Scheme::Reference, ..params.clone() };
    simulate(init, model, &p, seed)
}

#[cfg(test)]
mod tests;
