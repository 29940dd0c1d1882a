//! Echo statistics, CFAR detection and measurement synthesis.
//!
//! Waveforms are not sampled. A target's echo is summarized by its
//! matched-filter peak, and a detected target yields a noisy
//! `(range, radial speed, angle)` triple.

use nalgebra::{Matrix3, SMatrix, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beamforming::BeamPair;
use crate::error::{Error, Result};
use crate::geometry::{beam_gain, steering_vector, ArrayConfig, ArraySide, PolarPoint, SPEED_OF_LIGHT};
use crate::imm::Observation;
use crate::motion::VehicleState;

pub type MeasurementJacobian = SMatrix<f64, 3, 5>;

/// Index of the angle component in a measurement vector.
pub const ANGLE_INDEX: usize = 2;

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Round-trip delay of a range.
pub fn range_to_delay(range: f64) -> f64 {
    2.0 * range / SPEED_OF_LIGHT
}

pub fn delay_to_range(delay: f64) -> f64 {
    delay * SPEED_OF_LIGHT / 2.0
}

/// Monostatic Doppler shift of a radial speed.
pub fn radial_speed_to_doppler(radial_speed: f64, wavelength: f64) -> f64 {
    2.0 * radial_speed / wavelength
}

pub fn doppler_to_radial_speed(doppler: f64, wavelength: f64) -> f64 {
    doppler * wavelength / 2.0
}

/// `[range, radial speed, angle]` of a state as seen from the array.
///
/// The radial speed `v·cos(θ - h)` is evaluated as the projection of the
/// velocity on the line of sight, which stays smooth when `v = 0`.
pub fn measure_fn(s: &VehicleState) -> Result<Vector3<f64>> {
    let r = s.x.hypot(s.y);
    if r == 0.0 {
        return Err(Error::OriginPosition);
    }
    Ok(Vector3::new(r, (s.x * s.vx + s.y * s.vy) / r, s.y.atan2(s.x)))
}

pub fn measurement_jacobian(s: &VehicleState) -> Result<MeasurementJacobian> {
    let r2 = s.x * s.x + s.y * s.y;
    if r2 == 0.0 {
        return Err(Error::OriginPosition);
    }
    let r = r2.sqrt();
    let r3 = r2 * r;
    let proj = s.x * s.vx + s.y * s.vy;
    let mut h = MeasurementJacobian::zeros();
    h[(0, 0)] = s.x / r;
    h[(0, 1)] = s.y / r;
    h[(1, 0)] = s.vx / r - proj * s.x / r3;
    h[(1, 1)] = s.vy / r - proj * s.y / r3;
    h[(1, 2)] = s.x / r;
    h[(1, 3)] = s.y / r;
    h[(2, 0)] = -s.y / r2;
    h[(2, 1)] = s.x / r2;
    Ok(h)
}

/// The range / radial-speed / angle sensor with diagonal noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeRateAngle {
    pub noise_cov: Matrix3<f64>,
}

impl RangeRateAngle {
    pub fn new(sigmas: &MeasurementNoise) -> Self {
        Self {
            noise_cov: Matrix3::from_diagonal(&sigmas.variances()),
        }
    }
}

impl Observation for RangeRateAngle {
    fn measure(&self, s: &VehicleState) -> Result<Vector3<f64>> {
        measure_fn(s)
    }

    fn jacobian(&self, s: &VehicleState) -> Result<MeasurementJacobian> {
        measurement_jacobian(s)
    }

    fn noise_cov(&self) -> Matrix3<f64> {
        self.noise_cov
    }

    fn angle_index(&self) -> Option<usize> {
        Some(ANGLE_INDEX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoTarget {
    pub position: PolarPoint,
    pub speed: f64,
    pub heading: f64,
    pub reflect_coeff: Complex64,
}

impl EchoTarget {
    /// Echo source at a vehicle's true state with a free-space reflection coefficient.
    pub fn from_state(s: &VehicleState, wavelength: f64, rcs: f64) -> Result<Self> {
        let position = PolarPoint::from_cartesian(s.x, s.y)?;
        Ok(Self {
            position,
            speed: s.speed(),
            heading: s.heading(),
            reflect_coeff: Complex64::new(reflection_coefficient(position.range, wavelength, rcs), 0.0),
        })
    }

    /// Ground-truth measurement triple, `(r, v·cos(θ - h), θ)`.
    pub fn truth(&self) -> Vector3<f64> {
        Vector3::new(
            self.position.range,
            self.speed * (self.position.angle - self.heading).cos(),
            self.position.angle,
        )
    }
}

/// `|β| = sqrt(λ²·σ_rcs / ((4π)³·r⁴))`.
pub fn reflection_coefficient(range: f64, wavelength: f64, rcs: f64) -> f64 {
    (wavelength * wavelength * rcs / ((4.0 * PI).powi(3) * range.powi(4))).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// False-alarm probability in `(0, 1]`.
    pub p_fa: f64,
    /// Receiver noise power per real dimension, watts.
    pub noise_power: f64,
    /// Matched-filter power gain.
    pub mf_gain: f64,
    pub tx_power: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            p_fa: 1e-4,
            noise_power: dbm_to_watts(-57.0),
            mf_gain: db_to_linear(70.0),
            tx_power: dbm_to_watts(30.0),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_fa > 0.0 && self.p_fa <= 1.0) {
            return Err(Error::Config("p_fa must lie in (0, 1]".into()));
        }
        if !(self.noise_power > 0.0 && self.mf_gain > 0.0 && self.tx_power > 0.0) {
            return Err(Error::Config("detector powers and gain must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScaling {
    /// Configured standard deviations regardless of echo strength.
    Fixed,
    /// Variances scaled by the matched-beam SNR over the achieved SNR.
    SnrScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementNoise {
    pub sigma_range: f64,
    pub sigma_speed: f64,
    pub sigma_angle: f64,
    pub scaling: NoiseScaling,
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        Self {
            sigma_range: 0.02,
            sigma_speed: 0.01,
            sigma_angle: 0.005,
            scaling: NoiseScaling::Fixed,
        }
    }
}

impl MeasurementNoise {
    pub fn sigmas(&self) -> Vector3<f64> {
        Vector3::new(self.sigma_range, self.sigma_speed, self.sigma_angle)
    }

    pub fn variances(&self) -> Vector3<f64> {
        self.sigmas().component_mul(&self.sigmas())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas().iter().all(|s| *s >= 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("measurement noise sigmas must be non-negative".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub range: f64,
    pub radial_speed: f64,
    pub angle: f64,
    /// Diagonal of the noise covariance.
    pub noise_var: [f64; 3],
}

impl Measurement {
    pub fn from_vector(z: &Vector3<f64>, noise_var: [f64; 3]) -> Self {
        Self {
            range: z[0],
            radial_speed: z[1],
            angle: z[2],
            noise_var,
        }
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.range, self.radial_speed, self.angle)
    }

    pub fn noise_cov(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.noise_var))
    }

    pub fn delay(&self) -> f64 {
        range_to_delay(self.range)
    }

    pub fn doppler(&self, wavelength: f64) -> f64 {
        radial_speed_to_doppler(self.radial_speed, wavelength)
    }
}

/// Transmit and receive beamforming gains toward a target.
pub fn beam_gains(target: &EchoTarget, beams: &BeamPair, array: &ArrayConfig) -> Result<(Complex64, Complex64)> {
    let a = steering_vector(array, ArraySide::Tx, target.position);
    let kappa_t = beam_gain(&a, &beams.tx)?;
    // identical geometry on both sides: b = a
    let b = if array.num_rx == array.num_tx {
        a
    } else {
        steering_vector(array, ArraySide::Rx, target.position)
    };
    // wᴴb = conj(bᴴw)
    let kappa_r = beam_gain(&b, &beams.rx)?.conj();
    Ok((kappa_t, kappa_r))
}

/// Circular complex Gaussian receiver noise, `noise_power` per real dimension.
pub fn receiver_noise<R: Rng + ?Sized>(noise_power: f64, rng: &mut R) -> Complex64 {
    let sigma = noise_power.sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sigma * re, sigma * im)
}

/// Noise-free matched-filter peak `sqrt(p·G)·β·κ_T·κ_R`.
pub fn noise_free_peak(kappa: (Complex64, Complex64), target: &EchoTarget, det: &DetectorConfig) -> Complex64 {
    (det.tx_power * det.mf_gain).sqrt() * target.reflect_coeff * kappa.0 * kappa.1
}

/// Matched-filter peak including receiver noise. The noise has variance
/// `noise_power` on each of its real and imaginary parts.
pub fn matched_filter_peak<R: Rng + ?Sized>(
    target: &EchoTarget,
    beams: &BeamPair,
    array: &ArrayConfig,
    det: &DetectorConfig,
    rng: &mut R,
) -> Result<Complex64> {
    let kappa = beam_gains(target, beams, array)?;
    Ok(noise_free_peak(kappa, target, det) + receiver_noise(det.noise_power, rng))
}

/// Power threshold `η = -2σ_r²·ln(P_fa)`; a peak is detected when `|peak|² > η`.
pub fn cfar_threshold(det: &DetectorConfig) -> f64 {
    -2.0 * det.noise_power * det.p_fa.ln()
}

/// CFAR decision on a matched-filter peak.
pub fn detected(peak: Complex64, det: &DetectorConfig) -> bool {
    peak.norm_sqr() > cfar_threshold(det)
}

/// Detection and measurement for one target.
///
/// Always consumes the same number of draws from `rng` whether or not the
/// target is detected, so per-target streams stay aligned across schemes.
pub fn observe_target<R: Rng + ?Sized>(
    target: &EchoTarget,
    beams: &BeamPair,
    array: &ArrayConfig,
    det: &DetectorConfig,
    noise: &MeasurementNoise,
    rng: &mut R,
) -> Result<Option<Measurement>> {
    let kappa = beam_gains(target, beams, array)?;
    let peak = noise_free_peak(kappa, target, det) + receiver_noise(det.noise_power, rng);
    let draws: [f64; 3] = [
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    ];
    if !detected(peak, det) {
        return Ok(None);
    }
    let scale = match noise.scaling {
        NoiseScaling::Fixed => 1.0,
        NoiseScaling::SnrScaled => {
            let matched = (array.num_tx * array.num_rx) as f64;
            let achieved = (kappa.0 * kappa.1).norm_sqr();
            if achieved > 0.0 {
                (matched / achieved).max(1.0)
            } else {
                f64::INFINITY
            }
        }
    };
    let sigmas = noise.sigmas() * scale.sqrt();
    let truth = target.truth();
    let z = Vector3::new(
        (truth[0] + sigmas[0] * draws[0]).abs().max(1e-3),
        truth[1] + sigmas[1] * draws[1],
        wrap_angle(truth[2] + sigmas[2] * draws[2]),
    );
    let var = sigmas.component_mul(&sigmas);
    Ok(Some(Measurement::from_vector(&z, [var[0], var[1], var[2]])))
}

/// Detected measurements for all targets in one beam, in target order.
pub fn synthesize_measurements<R: Rng + ?Sized>(
    targets: &[EchoTarget],
    beams: &BeamPair,
    array: &ArrayConfig,
    det: &DetectorConfig,
    noise: &MeasurementNoise,
    rng: &mut R,
) -> Result<Vec<Measurement>> {
    let mut out = Vec::new();
    for t in targets {
        if let Some(z) = observe_target(t, beams, array, det, noise, rng)? {
            out.push(z);
        }
    }
    Ok(out)
}
