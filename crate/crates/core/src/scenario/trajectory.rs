//! Piecewise straight/arc trajectories and the trajectory CSV format
//! (`t,x,y,vx,vy[,omega]`, SI units, one row per sample).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{propagate, ModelKind, VehicleState};
use crate::sensing::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    Straight { duration: f64, speed: f64 },
    Arc { duration: f64, speed: f64, turn_rate: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Straight { duration, .. } | Segment::Arc { duration, .. } => duration,
        }
    }

    pub fn speed(&self) -> f64 {
        match *self {
            Segment::Straight { speed, .. } | Segment::Arc { speed, .. } => speed,
        }
    }

    pub fn turn_rate(&self) -> f64 {
        match *self {
            Segment::Straight { .. } => 0.0,
            Segment::Arc { turn_rate, .. } => turn_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub initial: Pose,
    pub segments: Vec<Segment>,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Config("trajectory needs at least one segment".into()));
        }
        for s in &self.segments {
            if !(s.duration() > 0.0) || !(s.speed() >= 0.0) || !s.turn_rate().is_finite() {
                return Err(Error::Config(
                    "segment durations must be positive and speeds non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn path_length(&self) -> f64 {
        self.segments.iter().map(|s| s.speed() * s.duration()).sum()
    }
}

/// Timestamped vehicle states.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<VehicleState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Linearly interpolated state, clamped to the ends.
    pub fn state_at(&self, t: f64) -> VehicleState {
        let i = self.times.partition_point(|s| *s <= t);
        if i == 0 {
            return self.states[0];
        }
        if i >= self.times.len() {
            return *self.states.last().expect("non-empty trajectory");
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        let a = self.states[i - 1].to_vector();
        let b = self.states[i].to_vector();
        VehicleState::from_vector(&(a + (b - a) * w))
    }
}

fn segment_state(start: Pose, seg: &Segment, elapsed: f64) -> VehicleState {
    let s0 = VehicleState::from_pose(start.x, start.y, seg.speed(), start.heading, seg.turn_rate());
    if elapsed <= 0.0 {
        return s0;
    }
    let model = match seg {
        Segment::Straight { .. } => ModelKind::Cv,
        Segment::Arc { .. } => ModelKind::Ct,
    };
    let mut s = propagate(&s0, model, elapsed);
    s.omega = seg.turn_rate();
    s
}

/// Exact samples at `k·dt` for every `k·dt` inside the spec's duration.
pub fn generate_trajectory(spec: &TrajectorySpec, dt: f64) -> Result<Trajectory> {
    spec.validate()?;
    if !(dt > 0.0) {
        return Err(Error::Config("sample interval must be positive".into()));
    }
    // start pose and start time of each segment
    let mut starts = Vec::with_capacity(spec.segments.len());
    let mut pose = spec.initial;
    let mut t0 = 0.0;
    for seg in &spec.segments {
        starts.push((t0, pose));
        let end = segment_state(pose, seg, seg.duration());
        pose = Pose {
            x: end.x,
            y: end.y,
            heading: pose.heading + seg.turn_rate() * seg.duration(),
        };
        t0 += seg.duration();
    }
    let total = spec.total_duration();
    let count = (total / dt + 1e-9).floor() as usize + 1;
    let mut traj = Trajectory::default();
    for k in 0..count {
        let t = k as f64 * dt;
        let idx = starts.partition_point(|(s, _)| *s <= t + 1e-12).saturating_sub(1);
        let (ts, pose) = starts[idx];
        traj.times.push(t);
        traj.states.push(segment_state(pose, &spec.segments[idx], t - ts));
    }
    Ok(traj)
}

pub fn save_trajectory<P: AsRef<Path>>(path: P, traj: &Trajectory) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    writeln!(f, "t,x,y,vx,vy,omega")?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        writeln!(f, "{},{},{},{},{},{}", t, s.x, s.y, s.vx, s.vy, s.omega)?;
    }
    f.flush()?;
    Ok(())
}

/// Central differences of `values` over `times`, one-sided at the ends.
fn differentiate(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

pub fn load_trajectory<P: AsRef<Path>>(path: P) -> Result<Trajectory> {
    let path = path.as_ref();
    let err = |line: u64, message: String| Error::Trajectory {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let expected = ["t", "x", "y", "vx", "vy", "omega"];
    if !matches!(header.len(), 3 | 5 | 6) || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(err(
            1,
            format!("header must be t,x,y[,vx,vy[,omega]], found {}", header.join(",")),
        ));
    }
    let cols = header.len();
    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != cols {
            return Err(err(line, format!("expected {cols} fields, found {}", record.len())));
        }
        let values = record
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| err(line, "non-numeric field".into()))?;
        if let Some((_, prev)) = rows.last() {
            if values[0] <= prev[0] {
                return Err(err(line, "timestamps must be strictly increasing".into()));
            }
        }
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(err(1, "trajectory has no samples".into()));
    }
    if cols < 6 && rows.len() < 2 {
        return Err(err(
            rows[0].0,
            "at least two samples are needed to reconstruct derivatives".into(),
        ));
    }
    let col = |c: usize| rows.iter().map(|(_, v)| v[c]).collect::<Vec<f64>>();
    let times = col(0);
    let (x, y) = (col(1), col(2));
    let (vx, vy) = if cols >= 5 {
        (col(3), col(4))
    } else {
        (differentiate(&times, &x), differentiate(&times, &y))
    };
    let omega = if cols == 6 {
        col(5)
    } else {
        // unwrap heading before differencing
        let mut heading: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| b.atan2(*a)).collect();
        for i in 1..heading.len() {
            heading[i] = heading[i - 1] + wrap_angle(heading[i] - heading[i - 1]);
        }
        differentiate(&times, &heading)
    };
    let states = (0..times.len())
        .map(|i| VehicleState::new(x[i], y[i], vx[i], vy[i], omega[i]))
        .collect();
    Ok(Trajectory { times, states })
}
