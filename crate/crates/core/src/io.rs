//! CSV and JSON artifact formats.
//!
//! Configuration CSV: `label,frozen,x1[,x2]`, labels by increasing modulus.
//! Path CSV: `time,label,frozen,x1[,x2],local_time`, one row per particle
//! per recorded frame. Frozen flags are written as 0/1.

use crate::dynamics::{Event, Frame, ParticleState, PathRecord, Scheme};
use crate::error::{Error, Result};
use crate::geometry::{label, Configuration, Point};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

fn coord_headers(dim: usize) -> Vec<String> {
    (1..=dim).map(|k| format!("x{k}")).collect()
}

fn fmt(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{v:?}")
}

pub fn write_configuration_csv<W: Write>(w: W, config: &Configuration) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let dim = config.dim();
    let mut header = vec!["label".to_string(), "frozen".to_string()];
    header.extend(coord_headers(dim));
    out.write_record(&header)?;
    let lab = label(config);
    for (i, (p, f)) in lab.particles.iter().zip(&lab.frozen).enumerate() {
        let mut row = vec![(i + 1).to_string(), u8::from(*f).to_string()];
        row.extend(p.coords().iter().map(|&c| fmt(c)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn dim_from_headers(h: &csv::StringRecord, fixed: &[&str], trailing: &[&str]) -> Result<usize> {
    let names: Vec<&str> = h.iter().collect();
    let n = names.len();
    let dim = n.checked_sub(fixed.len() + trailing.len()).filter(|d| (1..=2).contains(d));
    let dim = dim.ok_or_else(|| Error::Config(format!("unexpected CSV header {names:?}")))?;
    let mut expected: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    expected.extend(coord_headers(dim));
    expected.extend(trailing.iter().map(|s| s.to_string()));
    if names != expected {
        return Err(Error::Config(format!("CSV header {names:?}, expected {expected:?}")));
    }
    Ok(dim)
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("cannot parse {what} from {s:?}")))
}

fn parse_flag(s: &str) -> Result<bool> {
    match s.trim() {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(Error::Config(format!("frozen flag {other:?} is not 0/1"))),
    }
}

pub fn read_configuration_csv<R: Read>(r: R, window_radius: f64) -> Result<Configuration> {
    let mut rd = csv::Reader::from_reader(r);
    let dim = dim_from_headers(rd.headers()?, &["label", "frozen"], &[])?;
    let mut pts = Vec::new();
    let mut frozen = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        frozen.push(parse_flag(&rec[1])?);
        let c: Vec<f64> = (0..dim).map(|k| parse(&rec[2 + k], "coordinate")).collect::<Result<_>>()?;
        pts.push(Point::try_new(&c)?);
    }
    Configuration::from_parts(dim, pts, frozen, window_radius)
}

pub fn write_path_csv<W: Write>(w: W, path: &PathRecord) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["time".to_string(), "label".to_string(), "frozen".to_string()];
    header.extend(coord_headers(path.dim));
    header.push("local_time".into());
    out.write_record(&header)?;
    for f in &path.frames {
        for p in &f.particles {
            let mut row = vec![fmt(f.time), p.label.to_string(), u8::from(p.frozen).to_string()];
            row.extend(p.x.coords().iter().map(|&c| fmt(c)));
            row.push(fmt(p.local_time));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Frames of a path CSV; the model, scheme, radius and events come from
/// the run manifest.
pub fn read_path_csv<R: Read>(r: R) -> Result<(usize, Vec<Frame>)> {
    let mut rd = csv::Reader::from_reader(r);
    let dim = dim_from_headers(rd.headers()?, &["time", "label", "frozen"], &["local_time"])?;
    let mut frames: Vec<Frame> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let time: f64 = parse(&rec[0], "time")?;
        let c: Vec<f64> = (0..dim).map(|k| parse(&rec[3 + k], "coordinate")).collect::<Result<_>>()?;
        let state = ParticleState {
            label: parse(&rec[1], "label")?,
            frozen: parse_flag(&rec[2])?,
            x: Point::try_new(&c)?,
            local_time: parse(&rec[3 + dim], "local_time")?,
        };
        match frames.last_mut() {
            Some(f) if f.time == time => f.particles.push(state),
            _ => frames.push(Frame { time, particles: vec![state] }),
        }
    }
    Ok((dim, frames))
}

/// Per-replica entry of a run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaEntry {
    pub replica: u32,
    pub file: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guards: Option<serde_json::Value>,
}

/// `manifest.json` of a run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub run_id: String,
    pub code_version: String,
    pub generator: String,
    pub model: crate::pointfields::ModelSpec,
    pub master_seed: u64,
    pub replicas: u32,
    /// Resolved configuration, echoed verbatim.
    pub config: serde_json::Value,
    pub files: Vec<ReplicaEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_note: Option<String>,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(s)?;
        if m.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "manifest schema {} unsupported (expected {MANIFEST_SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        Ok(m)
    }
}

/// Rebuilds a path record from its CSV and manifest entry.
pub fn path_from_parts(model: &str, entry: &ReplicaEntry, dim: usize, frames: Vec<Frame>) -> Result<PathRecord> {
    let scheme = entry.scheme.ok_or_else(|| Error::Config(format!("{} has no scheme in the manifest", entry.file)))?;
    let radius = entry.radius.ok_or_else(|| Error::Config(format!("{} has no radius in the manifest", entry.file)))?;
    Ok(PathRecord { model: model.to_string(), dim, scheme, radius, frames, events: entry.events.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::{CutoffParams, ShellSequence};
    use crate::dynamics::{simulate, SchemeParams};
    use crate::pointfields::ModelSpec;
    use crate::rng::SeedSpec;

    #[test]
    fn configuration_roundtrip() {
        let c = Configuration::with_frozen_exterior(
            2,
            vec![Point::d2(0.1, -0.2), Point::d2(3.0, 0.5), Point::d2(-0.7, 1.0 / 3.0)],
            2.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_configuration_csv(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("label,frozen,x1,x2\n1,0,0.1,-0.2\n"));
        let back = read_configuration_csv(&buf[..], 2.0).unwrap();
        assert!(back.same_multiset(&c));
        assert_eq!(back.frozen(), &[false, false, true]);
        assert!(read_configuration_csv("id,frozen,x1\n".as_bytes(), 0.0).is_err());
    }

    #[test]
    fn path_roundtrip() {
        let init = Configuration::with_frozen_exterior(1, vec![Point::d1(0.3), Point::d1(-1.1), Point::d1(2.5)], 2.0).unwrap();
        let cut = CutoffParams::new(2.0, 4.0, 4.0, ShellSequence::affine(5, 2));
        let params = SchemeParams::new(Scheme::Lower, 2.0, 1e-2, 0.2, cut);
        let model = ModelSpec::Sine { beta: 2 };
        let rec = simulate(&init, &model, &params, SeedSpec::new(1, 0)).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &rec).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("time,label,frozen,x1,local_time\n"));
        let (dim, frames) = read_path_csv(&buf[..]).unwrap();
        let entry = ReplicaEntry {
            replica: 0,
            file: "p.csv".into(),
            events: rec.events.clone(),
            scheme: Some(Scheme::Lower),
            radius: Some(2.0),
            guards: None,
        };
        assert_eq!(path_from_parts(&model.name(), &entry, dim, frames).unwrap(), rec);
    }
}
