//! Non-cooperative vehicles that follow their user's motion pattern.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::motion::VehicleState;

/// How clutter vehicles are placed around their user.
///
/// Each clutter vehicle occupies the user's lane or an adjacent one
/// (`lane ∈ {-1, 0, 1}` times `lateral_offset`) at a longitudinal offset
/// drawn from `[-longitudinal_offset, longitudinal_offset]`. Same-lane
/// vehicles keep at least `min_gap` meters of headway. Speed jitter is a
/// sinusoidal speed deviation of amplitude up to `speed_jitter` and angular
/// rate `jitter_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterPlacement {
    pub lateral_offset: f64,
    pub longitudinal_offset: f64,
    pub speed_jitter: f64,
    pub jitter_rate: f64,
    pub min_gap: f64,
}

impl Default for ClutterPlacement {
    fn default() -> Self {
        Self {
            lateral_offset: 3.5,
            longitudinal_offset: 10.0,
            speed_jitter: 1.0,
            jitter_rate: 0.5,
            min_gap: 5.0,
        }
    }
}

impl ClutterPlacement {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lateral_offset,
            self.longitudinal_offset,
            self.speed_jitter,
            self.jitter_rate,
            self.min_gap,
        ];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("clutter placement values must be non-negative".into()));
        }
        if self.speed_jitter > 0.0 && self.jitter_rate == 0.0 {
            return Err(Error::Config("speed jitter needs a positive jitter rate".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Offset {
    lateral: f64,
    longitudinal: f64,
    amplitude: f64,
    phase: f64,
}

impl Offset {
    fn sample<R: Rng + ?Sized>(p: &ClutterPlacement, rng: &mut R) -> Self {
        let lane = rng.random_range(-1i32..=1);
        let u: f64 = rng.random_range(-1.0..=1.0);
        let longitudinal = if lane == 0 && p.longitudinal_offset > p.min_gap {
            u.signum() * (p.min_gap + u.abs() * (p.longitudinal_offset - p.min_gap))
        } else {
            u * p.longitudinal_offset
        };
        Self {
            lateral: lane as f64 * p.lateral_offset,
            longitudinal,
            amplitude: rng.random_range(-1.0..=1.0) * p.speed_jitter,
            phase: rng.random_range(0.0..2.0 * PI),
        }
    }

    /// Along-track offset and its rate at time `t`.
    fn along(&self, rate: f64, t: f64) -> (f64, f64) {
        if self.amplitude == 0.0 {
            return (self.longitudinal, 0.0);
        }
        let s = self.longitudinal + self.amplitude / rate * ((rate * t + self.phase).sin() - self.phase.sin());
        (s, self.amplitude * (rate * t + self.phase).cos())
    }
}

/// Offsets `user` by `(along, lateral)` in its body frame.
fn shifted(user: &VehicleState, along: f64, along_rate: f64, lateral: f64) -> VehicleState {
    let speed = user.speed();
    let (c, s) = if speed > 0.0 {
        (user.vx / speed, user.vy / speed)
    } else {
        (1.0, 0.0)
    };
    // world-frame offset R(h)·[along, lateral]
    let ox = c * along - s * lateral;
    let oy = s * along + c * lateral;
    VehicleState::new(
        user.x + ox,
        user.y + oy,
        user.vx - user.omega * oy + along_rate * c,
        user.vy + user.omega * ox + along_rate * s,
        user.omega,
    )
}

/// `count` clutter trajectories sampled at the user's sample times.
pub fn spawn_clutter<R: Rng + ?Sized>(
    user: &[VehicleState],
    times: &[f64],
    count: usize,
    placement: &ClutterPlacement,
    rng: &mut R,
) -> Vec<Vec<VehicleState>> {
    (0..count)
        .map(|_| {
            let off = Offset::sample(placement, rng);
            user.iter()
                .zip(times)
                .map(|(u, t)| {
                    let (along, rate) = off.along(placement.jitter_rate, *t);
                    shifted(u, along, rate, off.lateral)
                })
                .collect()
        })
        .collect()
}
