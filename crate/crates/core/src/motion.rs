//! Coordinated-turn and constant-velocity kinematics on the shared
//! five-dimensional state `[x, y, vx, vy, ω]`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

pub type StateVector = SVector<f64, 5>;
pub type StateMatrix = SMatrix<f64, 5, 5>;

/// Below this `|ω·dt|` the turn terms switch to their Taylor expansion.
pub const TURN_TAYLOR_THRESHOLD: f64 = 1e-6;

/// Variance that pins the CV hypothesis' turn rate near zero.
pub const CV_OMEGA_VARIANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64, omega: f64) -> Self {
        Self { x, y, vx, vy, omega }
    }

    /// Builds a state from position, speed, heading and turn rate.
    pub fn from_pose(x: f64, y: f64, speed: f64, heading: f64, omega: f64) -> Self {
        Self::new(x, y, speed * heading.cos(), speed * heading.sin(), omega)
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn heading(&self) -> f64 {
        self.vy.atan2(self.vx)
    }

    pub fn to_vector(self) -> StateVector {
        StateVector::new(self.x, self.y, self.vx, self.vy, self.omega)
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Constant velocity.
    #[serde(rename = "CV")]
    Cv,
    /// Coordinated turn.
    #[serde(rename = "CT")]
    Ct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessNoiseConfig {
    pub sigma_ax: f64,
    pub sigma_ay: f64,
    pub sigma_aw: f64,
}

impl Default for ProcessNoiseConfig {
    fn default() -> Self {
        Self {
            sigma_ax: 2.0,
            sigma_ay: 2.0,
            sigma_aw: 3.0,
        }
    }
}

/// `sin(ωT)/ω`, `(1 - cos(ωT))/ω` and their ω-derivatives.
struct TurnTerms {
    sin: f64,
    cos: f64,
    a: f64,
    b: f64,
    da: f64,
    db: f64,
}

impl TurnTerms {
    fn new(omega: f64, dt: f64) -> Self {
        let wt = omega * dt;
        let (sin, cos) = wt.sin_cos();
        if wt.abs() < TURN_TAYLOR_THRESHOLD {
            let dt2 = dt * dt;
            let dt3 = dt2 * dt;
            Self {
                sin,
                cos,
                a: dt - omega * omega * dt3 / 6.0,
                b: omega * dt2 / 2.0,
                da: -omega * dt3 / 3.0,
                db: dt2 / 2.0 - omega * omega * dt2 * dt2 / 8.0,
            }
        } else {
            let w2 = omega * omega;
            Self {
                sin,
                cos,
                a: sin / omega,
                b: (1.0 - cos) / omega,
                da: (dt * cos * omega - sin) / w2,
                db: (dt * sin * omega - (1.0 - cos)) / w2,
            }
        }
    }
}

/// Noise-free state evolution over `dt`.
pub fn propagate(s: &VehicleState, model: ModelKind, dt: f64) -> VehicleState {
    match model {
        ModelKind::Cv => VehicleState::new(s.x + s.vx * dt, s.y + s.vy * dt, s.vx, s.vy, 0.0),
        ModelKind::Ct => {
            let t = TurnTerms::new(s.omega, dt);
            VehicleState::new(
                s.x + t.a * s.vx - t.b * s.vy,
                s.y + t.b * s.vx + t.a * s.vy,
                s.vx * t.cos - s.vy * t.sin,
                s.vx * t.sin + s.vy * t.cos,
                s.omega,
            )
        }
    }
}

/// Partial derivatives of [`propagate`] with respect to the input state.
///
/// The CV map discards the incoming turn rate, so its ω row and column are zero.
pub fn transition_jacobian(s: &VehicleState, model: ModelKind, dt: f64) -> StateMatrix {
    let mut f = StateMatrix::identity();
    match model {
        ModelKind::Cv => {
            f[(0, 2)] = dt;
            f[(1, 3)] = dt;
            f[(4, 4)] = 0.0;
        }
        ModelKind::Ct => {
            let t = TurnTerms::new(s.omega, dt);
            f[(0, 2)] = t.a;
            f[(0, 3)] = -t.b;
            f[(1, 2)] = t.b;
            f[(1, 3)] = t.a;
            f[(2, 2)] = t.cos;
            f[(2, 3)] = -t.sin;
            f[(3, 2)] = t.sin;
            f[(3, 3)] = t.cos;
            f[(0, 4)] = t.da * s.vx - t.db * s.vy;
            f[(1, 4)] = t.db * s.vx + t.da * s.vy;
            f[(2, 4)] = -dt * (s.vx * t.sin + s.vy * t.cos);
            f[(3, 4)] = dt * (s.vx * t.cos - s.vy * t.sin);
        }
    }
    f
}

/// Discretized white-acceleration covariance.
pub fn process_noise_cov(cfg: &ProcessNoiseConfig, dt: f64) -> StateMatrix {
    let dt2 = dt * dt;
    let (p, pv, v) = (dt2 * dt2 / 4.0, dt2 * dt / 2.0, dt2);
    let mut q = StateMatrix::zeros();
    for (pos, vel, sigma) in [(0, 2, cfg.sigma_ax), (1, 3, cfg.sigma_ay)] {
        let s2 = sigma * sigma;
        q[(pos, pos)] = p * s2;
        q[(pos, vel)] = pv * s2;
        q[(vel, pos)] = pv * s2;
        q[(vel, vel)] = v * s2;
    }
    q[(4, 4)] = dt2 * cfg.sigma_aw * cfg.sigma_aw;
    q
}

/// Process noise for one hypothesis: the CV model replaces the turn-rate
/// entry with [`CV_OMEGA_VARIANCE`].
pub fn model_process_noise(model: ModelKind, cfg: &ProcessNoiseConfig, dt: f64) -> StateMatrix {
    let mut q = process_noise_cov(cfg, dt);
    if model == ModelKind::Cv {
        q[(4, 4)] = CV_OMEGA_VARIANCE;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fd_jacobian(s: &VehicleState, model: ModelKind, dt: f64, h: f64) -> StateMatrix {
        let base = s.to_vector();
        let mut j = StateMatrix::zeros();
        for c in 0..5 {
            let mut plus = base;
            let mut minus = base;
            plus[c] += h;
            minus[c] -= h;
            let fp = propagate(&VehicleState::from_vector(&plus), model, dt).to_vector();
            let fm = propagate(&VehicleState::from_vector(&minus), model, dt).to_vector();
            j.set_column(c, &((fp - fm) / (2.0 * h)));
        }
        j
    }

    #[test]
    fn quarter_turn_closed_form() {
        let s = VehicleState::new(0.0, 0.0, 1.0, 0.0, PI / 2.0);
        let out = propagate(&s, ModelKind::Ct, 1.0);
        assert_relative_eq!(out.x, 2.0 / PI, epsilon = 1e-12);
        assert_relative_eq!(out.y, 2.0 / PI, epsilon = 1e-12);
        assert_relative_eq!(out.vx, 0.0, epsilon = 1e-12);
        assert_relative_eq!(out.vy, 1.0, epsilon = 1e-12);
        assert_eq!(out.omega, PI / 2.0);
    }

    #[test]
    fn tiny_turn_rate_matches_cv() {
        let s = VehicleState::new(0.0, 0.0, 1.0, 0.0, 1e-12);
        let ct = propagate(&s, ModelKind::Ct, 1.0);
        let cv = propagate(&s, ModelKind::Cv, 1.0);
        assert!((ct.to_vector() - cv.to_vector()).amax() < 1e-6);
        assert_relative_eq!(ct.y, 5e-13, epsilon = 1e-20);
        assert_eq!(cv.omega, 0.0);
    }

    #[test]
    fn zero_turn_rate_ct_equals_cv_exactly() {
        let s = VehicleState::new(3.0, -2.0, 4.0, 1.5, 0.0);
        assert_eq!(propagate(&s, ModelKind::Ct, 0.75), propagate(&s, ModelKind::Cv, 0.75));
    }

    #[test]
    fn cv_jacobian_is_linear_block() {
        let f = transition_jacobian(&VehicleState::new(1.0, 2.0, 3.0, 4.0, 0.2), ModelKind::Cv, 1.0);
        let expected = StateMatrix::from_row_slice(&[
            1., 0., 1., 0., 0., //
            0., 1., 0., 1., 0., //
            0., 0., 1., 0., 0., //
            0., 0., 0., 1., 0., //
            0., 0., 0., 0., 0.,
        ]);
        assert_eq!(f, expected);
        let s = VehicleState::new(1.0, 2.0, 3.0, 4.0, 0.2);
        assert!((fd_jacobian(&s, ModelKind::Cv, 1.0, 1e-6) - f).amax() < 1e-8);
    }

    #[test]
    fn ct_jacobian_tiny_rate_matches_cv_off_omega_column() {
        let s = VehicleState::new(1.0, 2.0, 3.0, 4.0, 1e-12);
        let ct = transition_jacobian(&s, ModelKind::Ct, 1.0);
        let cv = transition_jacobian(&s, ModelKind::Cv, 1.0);
        assert!((ct.columns(0, 4) - cv.columns(0, 4)).amax() < 1e-6);
    }

    #[test]
    fn ct_jacobian_quarter_turn_finite_differences() {
        let s = VehicleState::new(0.0, 0.0, 1.0, 0.0, PI / 2.0);
        let f = transition_jacobian(&s, ModelKind::Ct, 1.0);
        let fd = fd_jacobian(&s, ModelKind::Ct, 1.0, 1e-6);
        for (a, b) in f.iter().zip(fd.iter()) {
            assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn ct_jacobian_across_taylor_switch() {
        for &w in &[0.0, 5e-7, 9.9e-7, 1.01e-6, 1e-5, 1e-3] {
            let s = VehicleState::new(5.0, 5.0, 10.0, -3.0, w);
            let f = transition_jacobian(&s, ModelKind::Ct, 1.0);
            let fd = fd_jacobian(&s, ModelKind::Ct, 1.0, 1e-4);
            for (a, b) in f.iter().zip(fd.iter()) {
                assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "w={w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn process_noise_closed_form() {
        let zero = ProcessNoiseConfig {
            sigma_ax: 0.0,
            sigma_ay: 0.0,
            sigma_aw: 0.0,
        };
        assert_eq!(process_noise_cov(&zero, 0.75), StateMatrix::zeros());
        let q = process_noise_cov(
            &ProcessNoiseConfig {
                sigma_ax: 2.0,
                sigma_ay: 0.0,
                sigma_aw: 0.0,
            },
            1.0,
        );
        assert_eq!(q[(0, 0)], 1.0);
        assert_eq!(q[(0, 2)], 2.0);
        assert_eq!(q[(2, 0)], 2.0);
        assert_eq!(q[(2, 2)], 4.0);
        assert_eq!(
            model_process_noise(ModelKind::Cv, &ProcessNoiseConfig::default(), 1.0)[(4, 4)],
            CV_OMEGA_VARIANCE
        );
    }

    proptest! {
        #[test]
        fn ct_preserves_speed_and_turns_heading(
            vx in -20.0..20.0f64, vy in -20.0..20.0f64, w in -1.0..1.0f64, dt in 0.01..2.0f64
        ) {
            prop_assume!(vx.hypot(vy) > 0.1);
            let s = VehicleState::new(1.0, -4.0, vx, vy, w);
            let out = propagate(&s, ModelKind::Ct, dt);
            prop_assert!((out.speed() - s.speed()).abs() < 1e-10);
            let turned = (out.heading() - s.heading() - w * dt + PI).rem_euclid(2.0 * PI) - PI;
            prop_assert!(turned.abs() < 1e-10);
        }

        #[test]
        fn ct_split_step_composition(
            vx in -20.0..20.0f64, vy in -20.0..20.0f64, w in -1.0..1.0f64, dt in 0.01..2.0f64
        ) {
            let s = VehicleState::new(10.0, 3.0, vx, vy, w);
            let once = propagate(&s, ModelKind::Ct, dt);
            let half = propagate(&s, ModelKind::Ct, dt / 2.0);
            let twice = propagate(&half, ModelKind::Ct, dt / 2.0);
            prop_assert!((once.to_vector() - twice.to_vector()).amax() < 1e-10);
        }

        #[test]
        fn process_noise_is_psd(
            ax in 0.0..5.0f64, ay in 0.0..5.0f64, aw in 0.0..5.0f64, dt in 0.01..3.0f64
        ) {
            let q = process_noise_cov(&ProcessNoiseConfig { sigma_ax: ax, sigma_ay: ay, sigma_aw: aw }, dt);
            prop_assert!(q.symmetric_eigenvalues().min() >= -1e-12);
        }
    }
}
