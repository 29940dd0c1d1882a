//! Spherical-wave response of a uniform linear array.
//!
//! Element `n` sits at `[n·d, 0]`; ranges and angles are measured from
//! element 0. Every element sees the same channel amplitude, only the phase
//! varies across the aperture.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation speed used for every wavelength and delay conversion.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub num_tx: usize,
    pub num_rx: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl ArrayConfig {
    /// Half-wavelength array for a carrier frequency in Hz.
    pub fn half_wavelength(num_tx: usize, num_rx: usize, carrier_hz: f64) -> Self {
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self {
            num_tx,
            num_rx,
            spacing: wavelength / 2.0,
            wavelength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_tx == 0 || self.num_rx == 0 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if !(self.spacing > 0.0) || !(self.wavelength > 0.0) {
            return Err(Error::Config("element spacing and wavelength must be positive".into()));
        }
        Ok(())
    }

    /// Transmit aperture `(N_t - 1)·d`.
    pub fn aperture(&self) -> f64 {
        (self.num_tx.saturating_sub(1)) as f64 * self.spacing
    }

    pub fn len(&self, side: ArraySide) -> usize {
        match side {
            ArraySide::Tx => self.num_tx,
            ArraySide::Rx => self.num_rx,
        }
    }
}

impl Default for ArrayConfig {
    /// 128 + 128 elements at 30 GHz.
    fn default() -> Self {
        Self::half_wavelength(128, 128, 30.0e9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArraySide {
    Tx,
    Rx,
}

/// A point in the array's polar frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub range: f64,
    pub angle: f64,
}

impl PolarPoint {
    pub fn new(range: f64, angle: f64) -> Self {
        Self { range, angle }
    }

    pub fn from_cartesian(x: f64, y: f64) -> Result<Self> {
        let range = x.hypot(y);
        if range == 0.0 {
            return Err(Error::OriginPosition);
        }
        Ok(Self {
            range,
            angle: y.atan2(x),
        })
    }

    pub fn to_cartesian(self) -> (f64, f64) {
        (self.range * self.angle.cos(), self.range * self.angle.sin())
    }
}

/// Per-element phase profile toward a point. Entries are unit modulus and
/// entry 0 is exactly `1 + 0j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(Vec<Complex64>);

impl SteeringVector {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Scales to unit norm, producing a beamforming vector.
    pub fn normalized(&self) -> Vec<Complex64> {
        let scale = 1.0 / (self.0.len() as f64).sqrt();
        self.0.iter().map(|e| e * scale).collect()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

/// Distance from element `n` to the point `p`.
pub fn element_distance(p: PolarPoint, n: usize, spacing: f64) -> f64 {
    let nd = n as f64 * spacing;
    (p.range * p.range + nd * nd - 2.0 * p.range * nd * p.angle.cos())
        .max(0.0)
        .sqrt()
}

pub fn steering_vector(cfg: &ArrayConfig, side: ArraySide, p: PolarPoint) -> SteeringVector {
    let k = 2.0 * PI / cfg.wavelength;
    let entries = (0..cfg.len(side))
        .map(|n| {
            if n == 0 {
                return Complex64::new(1.0, 0.0);
            }
            // r_n - r computed without cancellation: (r_n² - r²)/(r_n + r)
            let nd = n as f64 * cfg.spacing;
            let rn = element_distance(p, n, cfg.spacing);
            let delta = (nd * nd - 2.0 * p.range * nd * p.angle.cos()) / (rn + p.range);
            Complex64::from_polar(1.0, -k * delta)
        })
        .collect();
    SteeringVector(entries)
}

/// Planar-wavefront limit of [`steering_vector`] as the range grows without bound.
pub fn far_field_steering_vector(cfg: &ArrayConfig, side: ArraySide, angle: f64) -> SteeringVector {
    let k = 2.0 * PI / cfg.wavelength;
    let cos = angle.cos();
    let entries = (0..cfg.len(side))
        .map(|n| {
            if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, k * n as f64 * cfg.spacing * cos)
            }
        })
        .collect();
    SteeringVector(entries)
}

/// Free-space complex gain `sqrt(λ/(4πr))·exp(-j2πr/λ)`.
pub fn channel_gain(range: f64, wavelength: f64) -> Complex64 {
    let magnitude = (wavelength / (4.0 * PI * range)).sqrt();
    Complex64::from_polar(magnitude, -2.0 * PI * range / wavelength)
}

/// Near-field / far-field boundary `2D²/λ`.
pub fn rayleigh_distance(cfg: &ArrayConfig) -> f64 {
    let d = cfg.aperture();
    2.0 * d * d / cfg.wavelength
}

/// `vᴴ·w`.
pub fn beam_gain(v: &SteeringVector, w: &[Complex64]) -> Result<Complex64> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch {
            expected: v.len(),
            actual: w.len(),
        });
    }
    Ok(v.0.iter().zip(w).map(|(a, b)| a.conj() * b).sum())
}
