//! Target-to-user association inside one beam: probabilistic data
//! association over the detected measurements, and a nearest-neighbor baseline.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::imm::{gaussian_log_density, GaussianBelief, Observation};
use crate::sensing::{wrap_angle, Measurement, ANGLE_INDEX};

/// 99.9% quantile of the χ² distribution with three degrees of freedom.
pub const DEFAULT_GATE: f64 = 13.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedMeasurement {
    pub mean: Vector3<f64>,
    pub residual_cov: Matrix3<f64>,
    residual_inv: Matrix3<f64>,
    log_norm: f64,
}

impl PredictedMeasurement {
    pub fn new(mean: Vector3<f64>, residual_cov: Matrix3<f64>) -> Result<Self> {
        let (log_norm, residual_inv) = gaussian_log_density(&Vector3::zeros(), &residual_cov)?;
        Ok(Self {
            mean,
            residual_cov,
            residual_inv,
            log_norm,
        })
    }

    pub fn residual(&self, z: &Measurement) -> Vector3<f64> {
        let mut r = z.to_vector() - self.mean;
        r[ANGLE_INDEX] = wrap_angle(r[ANGLE_INDEX]);
        r
    }

    /// Squared Mahalanobis distance of `z` from the prediction.
    pub fn mahalanobis2(&self, z: &Measurement) -> f64 {
        let r = self.residual(z);
        (r.transpose() * self.residual_inv * r)[0]
    }

    pub fn log_likelihood(&self, z: &Measurement) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis2(z)
    }
}

/// `ẑ = h(x̄)` and `S = H·M̄·Hᵀ + Q_m`.
pub fn predicted_measurement<O: Observation>(belief: &GaussianBelief, obs: &O) -> Result<PredictedMeasurement> {
    let s = belief.state();
    let h = obs.jacobian(&s)?;
    let cov = h * belief.cov * h.transpose() + obs.noise_cov();
    PredictedMeasurement::new(obs.measure(&s)?, (cov + cov.transpose()) * 0.5)
}

/// Gaussian density `N(z; ẑ, S)` with the angle residual wrapped.
///
/// The clutter-density division is left out; it is a common factor of all
/// candidates and cancels in [`association_probabilities`].
pub fn measurement_likelihood(z: &Measurement, pm: &PredictedMeasurement) -> f64 {
    pm.log_likelihood(z).exp()
}

/// Normalized association weights `β_q = γ_q / Σ γ_j`.
pub fn association_probabilities(likelihoods: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = likelihoods.iter().sum();
    if likelihoods.is_empty() || !(total > 0.0) || !total.is_finite() {
        return Err(Error::NoUsableMeasurement);
    }
    Ok(likelihoods.iter().map(|l| l / total).collect())
}

/// [`association_probabilities`] from log-likelihoods, stable when every
/// density underflows.
pub fn association_probabilities_log(log_likelihoods: &[f64]) -> Result<Vec<f64>> {
    let top = log_likelihoods.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::NoUsableMeasurement);
    }
    let w: Vec<f64> = log_likelihoods.iter().map(|l| (l - top).exp()).collect();
    association_probabilities(&w)
}

/// β-weighted combination; angles use the weighted circular mean.
pub fn fuse_measurements(zs: &[Measurement], beta: &[f64]) -> Result<Measurement> {
    if zs.len() != beta.len() {
        return Err(Error::LengthMismatch {
            expected: zs.len(),
            actual: beta.len(),
        });
    }
    if zs.is_empty() {
        return Err(Error::NoUsableMeasurement);
    }
    // a one-hot β returns its measurement bit-for-bit
    if let Some(q) = beta.iter().position(|&w| w == 1.0) {
        return Ok(zs[q]);
    }
    let mut range = 0.0;
    let mut speed = 0.0;
    let (mut c, mut s) = (0.0, 0.0);
    let mut var = [0.0; 3];
    for (z, w) in zs.iter().zip(beta) {
        range += w * z.range;
        speed += w * z.radial_speed;
        c += w * z.angle.cos();
        s += w * z.angle.sin();
        for (acc, v) in var.iter_mut().zip(z.noise_var) {
            *acc += w * v;
        }
    }
    let angle = if c == 0.0 && s == 0.0 { 0.0 } else { s.atan2(c) };
    Ok(Measurement {
        range,
        radial_speed: speed,
        angle: if angle == -PI { PI } else { angle },
        noise_var: var,
    })
}

/// Index of the measurement closest to `ẑ` in noise-normalized Euclidean
/// distance. Ties go to the lowest index; zero sigmas count as unit scale.
pub fn nearest_neighbor(zs: &[Measurement], pm: &PredictedMeasurement, sigmas: &Vector3<f64>) -> Result<usize> {
    let sigmas = sigmas.map(|s| if s > 0.0 { s } else { 1.0 });
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in zs.iter().enumerate() {
        let d = pm.residual(z).component_div(&sigmas).norm_squared();
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoUsableMeasurement)
}

/// Indices of measurements inside the Mahalanobis gate.
pub fn gate(zs: &[Measurement], pm: &PredictedMeasurement, threshold: Option<f64>) -> Vec<usize> {
    (0..zs.len())
        .filter(|&i| threshold.is_none_or(|g| pm.mahalanobis2(&zs[i]) <= g))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationResult {
    pub probabilities: Vec<f64>,
    pub fused: Measurement,
}

/// Probabilistic association over all candidates.
pub fn associate_pda(zs: &[Measurement], pm: &PredictedMeasurement) -> Result<AssociationResult> {
    let logs: Vec<f64> = zs.iter().map(|z| pm.log_likelihood(z)).collect();
    let probabilities = association_probabilities_log(&logs)?;
    let fused = fuse_measurements(zs, &probabilities)?;
    Ok(AssociationResult { probabilities, fused })
}

/// Hard nearest-neighbor choice expressed as a one-hot association.
pub fn associate_nn(zs: &[Measurement], pm: &PredictedMeasurement, sigmas: &Vector3<f64>) -> Result<AssociationResult> {
    let best = nearest_neighbor(zs, pm, sigmas)?;
    let mut probabilities = vec![0.0; zs.len()];
    probabilities[best] = 1.0;
    Ok(AssociationResult {
        probabilities,
        fused: zs[best],
    })
}

/// Spatial Poisson clutter with `density` expected returns per unit volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterModel {
    pub density: f64,
}

impl ClutterModel {
    pub fn new(density: f64) -> Result<Self> {
        if density > 0.0 && density.is_finite() {
            Ok(Self { density })
        } else {
            Err(Error::Config("clutter density must be positive".into()))
        }
    }

    /// Density from an expected clutter count inside one gate.
    pub fn from_expected_count(count: f64, gate_volume: f64) -> Result<Self> {
        Self::new(count / gate_volume)
    }

    /// Target-versus-clutter likelihood ratio `γ = L / λ_c`.
    pub fn likelihood_ratio(&self, likelihood: f64) -> f64 {
        likelihood / self.density
    }
}

/// Volume of the three-dimensional gate ellipsoid `rᵀS⁻¹r ≤ g`.
pub fn gate_volume(pm: &PredictedMeasurement, threshold: f64) -> f64 {
    4.0 / 3.0 * PI * threshold.powf(1.5) * pm.residual_cov.determinant().sqrt()
}
