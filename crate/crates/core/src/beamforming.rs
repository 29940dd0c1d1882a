//! Predictive beams and communication metrics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    beam_gain, channel_gain, far_field_steering_vector, steering_vector, ArrayConfig, ArraySide, PolarPoint,
};
use crate::motion::VehicleState;
use crate::sensing::{dbm_to_watts, wrap_angle};

/// Unit-norm transmit and receive beamforming vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPair {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamMode {
    /// Spherical-wavefront focusing on range and angle.
    Near,
    /// Planar-wavefront steering on angle only.
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    pub tx_power: f64,
    pub comm_noise: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power: dbm_to_watts(30.0),
            comm_noise: dbm_to_watts(-57.0),
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if self.tx_power > 0.0 && self.comm_noise > 0.0 {
            Ok(())
        } else {
            Err(Error::Config("radio powers must be positive".into()))
        }
    }
}

pub fn beams_toward(p: PolarPoint, cfg: &ArrayConfig, mode: BeamMode) -> BeamPair {
    let steer = |side| match mode {
        BeamMode::Near => steering_vector(cfg, side, p),
        BeamMode::Far => far_field_steering_vector(cfg, side, p.angle),
    };
    BeamPair {
        tx: steer(ArraySide::Tx).normalized(),
        rx: steer(ArraySide::Rx).normalized(),
    }
}

/// Beams steered at the predicted position of a state.
pub fn predictive_beams(pred: &VehicleState, cfg: &ArrayConfig, mode: BeamMode) -> Result<BeamPair> {
    Ok(beams_toward(PolarPoint::from_cartesian(pred.x, pred.y)?, cfg, mode))
}

/// `p·|α·aᴴf|² / σ_c²` with the channel at the true location.
pub fn receive_snr(truth: PolarPoint, beams: &BeamPair, cfg: &ArrayConfig, rp: &RadioParams) -> Result<f64> {
    let a = steering_vector(cfg, ArraySide::Tx, truth);
    let g = channel_gain(truth.range, cfg.wavelength) * beam_gain(&a, &beams.tx)?;
    Ok(rp.tx_power * g.norm_sqr() / rp.comm_noise)
}

/// SNR of a perfectly matched beam, `p·|α|²·N_t / σ_c²`.
pub fn matched_snr_bound(truth: PolarPoint, cfg: &ArrayConfig, rp: &RadioParams) -> f64 {
    rp.tx_power * channel_gain(truth.range, cfg.wavelength).norm_sqr() * cfg.num_tx as f64 / rp.comm_noise
}

pub fn rate(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

pub fn sum_rate(snrs: &[f64]) -> f64 {
    snrs.iter().map(|s| rate(*s)).sum()
}

/// Angle error helper shared by the tracking metrics.
pub fn angle_error(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStatistics {
    pub mean: f64,
    sorted: Vec<f64>,
}

impl RateStatistics {
    /// Fraction of samples strictly below `threshold`.
    pub fn outage(&self, threshold: f64) -> f64 {
        self.sorted.partition_point(|r| *r < threshold) as f64 / self.sorted.len() as f64
    }

    /// Empirical CDF at `x`: fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|r| *r <= x) as f64 / self.sorted.len() as f64
    }

    /// Step points `(rate, F(rate))` of the empirical CDF.
    pub fn cdf_steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, r)| (*r, (i + 1) as f64 / n))
            .collect()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn rate_statistics(rates: &[f64]) -> Result<RateStatistics> {
    if rates.is_empty() {
        return Err(Error::Config("rate statistics need at least one sample".into()));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(RateStatistics {
        mean: rates.iter().sum::<f64>() / rates.len() as f64,
        sorted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rayleigh_distance;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn array() -> ArrayConfig {
        ArrayConfig {
            num_tx: 128,
            num_rx: 128,
            spacing: 0.005,
            wavelength: 0.01,
        }
    }

    fn tx_gain(truth: PolarPoint, beams: &BeamPair, cfg: &ArrayConfig) -> f64 {
        beam_gain(&steering_vector(cfg, ArraySide::Tx, truth), &beams.tx)
            .unwrap()
            .norm()
    }

    #[test]
    fn beams_are_unit_norm() {
        let b = beams_toward(PolarPoint::new(12.0, 0.7), &array(), BeamMode::Near);
        let n: f64 = b.tx.iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(n, 1.0, epsilon = 1e-12);
        assert!(predictive_beams(&VehicleState::default(), &array(), BeamMode::Near).is_err());
    }

    #[test]
    fn perfect_prediction_reaches_bound() {
        let cfg = array();
        let truth = PolarPoint::new(20.0, 1.1);
        let (x, y) = truth.to_cartesian();
        let beams = predictive_beams(&VehicleState::new(x, y, 5.0, 0.0, 0.0), &cfg, BeamMode::Near).unwrap();
        let rp = RadioParams {
            tx_power: 1.0,
            comm_noise: 1.9953e-9,
        };
        let snr = receive_snr(truth, &beams, &cfg, &rp).unwrap();
        assert_relative_eq!(snr, matched_snr_bound(truth, &cfg, &rp), max_relative = 1e-9);
        assert_relative_eq!(snr, 2.5525e6, max_relative = 1e-4);
        assert_relative_eq!(rate(snr), 21.2834, epsilon = 1e-3);
        let doubled = RadioParams { tx_power: 2.0, ..rp };
        assert_relative_eq!(
            receive_snr(truth, &beams, &cfg, &doubled).unwrap(),
            2.0 * snr,
            max_relative = 1e-12
        );
    }

    #[test]
    fn orthogonal_beam_has_zero_snr() {
        let cfg = ArrayConfig {
            num_tx: 2,
            num_rx: 2,
            spacing: 0.005,
            wavelength: 0.01,
        };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let beams = BeamPair {
            tx: vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
            rx: vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
        };
        let snr = receive_snr(PolarPoint::new(1e9, PI / 2.0), &beams, &cfg, &RadioParams::default()).unwrap();
        assert!(snr < 1e-6);
    }

    #[test]
    fn far_beam_defocuses_close_in() {
        let cfg = array();
        let truth = PolarPoint::new(5.0, PI / 3.0);
        let far = beams_toward(truth, &cfg, BeamMode::Far);
        let near = beams_toward(truth, &cfg, BeamMode::Near);
        let sqrt_n = (cfg.num_tx as f64).sqrt();
        assert!(tx_gain(truth, &far, &cfg) < 0.6 * sqrt_n);
        assert_relative_eq!(tx_gain(truth, &near, &cfg), sqrt_n, max_relative = 1e-12);
    }

    #[test]
    fn near_and_far_agree_far_away() {
        let cfg = array();
        let truth = PolarPoint::new(100.0 * rayleigh_distance(&cfg), 1.2);
        let far = tx_gain(truth, &beams_toward(truth, &cfg, BeamMode::Far), &cfg);
        let near = tx_gain(truth, &beams_toward(truth, &cfg, BeamMode::Near), &cfg);
        assert!((near - far).abs() / near < 0.01);
    }

    #[test]
    fn sum_rate_cases() {
        assert_eq!(sum_rate(&[1.0]), 1.0);
        assert_eq!(sum_rate(&[3.0, 1.0]), 3.0);
        assert_relative_eq!(sum_rate(&[2.55e6]), 21.28, epsilon = 0.01);
    }

    #[test]
    fn rate_statistics_cases() {
        let c = rate_statistics(&[5.0; 4]).unwrap();
        assert_eq!(c.outage(5.0 - 1e-9), 0.0);
        assert_eq!(c.outage(5.0 + 1e-9), 1.0);
        let s = rate_statistics(&[6.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(s.outage(4.0), 1.0 / 3.0);
        assert_eq!(s.mean, 4.0);
        let steps = s.cdf_steps();
        assert!(steps.windows(2).all(|w| w[0].1 <= w[1].1 && w[0].0 <= w[1].0));
        assert_eq!(steps.last().unwrap().1, 1.0);
        assert_eq!(s.cdf(100.0), 1.0);
        assert!(rate_statistics(&[]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn snr_never_exceeds_matched_bound(
            r in 3.0..200.0f64, th in 0.2..2.9f64, dr in -5.0..5.0f64, dth in -0.1..0.1f64
        ) {
            let cfg = array();
            let truth = PolarPoint::new(r, th);
            let beams = beams_toward(PolarPoint::new((r + dr).max(1.0), th + dth), &cfg, BeamMode::Near);
            let rp = RadioParams::default();
            let snr = receive_snr(truth, &beams, &cfg, &rp).unwrap();
            proptest::prop_assert!(snr <= matched_snr_bound(truth, &cfg, &rp) * (1.0 + 1e-12));
        }
    }
}
