use super::Scheme;
use crate::geometry::{Configuration, Point};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub label: u32,
    pub frozen: bool,
    pub x: Point,
    /// Accumulated boundary push (lower scheme).
    pub local_time: f64,
}

/// All particles at one recorded time, in increasing label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub time: f64,
    pub particles: Vec<ParticleState>,
}

impl Frame {
    pub fn get(&self, label: u32) -> Option<&ParticleState> {
        self.particles.binary_search_by_key(&label, |p| p.label).ok().map(|i| &self.particles[i])
    }

    pub fn configuration(&self, dim: usize) -> Configuration {
        let pts = self.particles.iter().map(|p| p.x).collect();
        let frozen = self.particles.iter().map(|p| p.frozen).collect();
        Configuration::from_parts(dim, pts, frozen, 0.0).expect("recorded points are finite")
    }

    pub fn movable_count(&self) -> usize {
        self.particles.iter().filter(|p| !p.frozen).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Birth,
    Death,
    /// A reference-run particle left R_big and stopped moving.
    Freeze,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub label: u32,
}

/// Recorded trajectories of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    /// Model identifier, as in [`crate::pointfields::ModelSpec::name`].
    pub model: String,
    pub dim: usize,
    pub scheme: Scheme,
    pub radius: f64,
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
}

impl PathRecord {
    pub fn new(model: String, dim: usize, scheme: Scheme, radius: f64) -> Self {
        Self { model, dim, scheme, radius, frames: Vec::new(), events: Vec::new() }
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time).collect()
    }

    /// (time, position) of a label over the frames where it exists.
    pub fn trajectory(&self, label: u32) -> Vec<(f64, Point)> {
        self.frames.iter().filter_map(|f| f.get(label).map(|p| (f.time, p.x))).collect()
    }

    /// Frame closest to time t.
    pub fn frame_at(&self, t: f64) -> Option<&Frame> {
        self.frames.iter().min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }

    pub fn first(&self) -> Option<&Frame> {
        self.frames.first()
    }

    pub fn last(&self) -> Option<&Frame> {
        self.frames.last()
    }

    /// Largest modulus reached by a label over the record.
    pub fn max_modulus(&self, label: u32) -> f64 {
        self.trajectory(label).iter().map(|(_, x)| x.norm()).fold(0.0, f64::max)
    }
}
