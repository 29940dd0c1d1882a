//! Two-model interacting multiple-model filter with EKF elementary filters.
//!
//! Model 0 is always CV and model 1 is CT. A bank whose prior and predicted
//! mass for a model is exactly zero carries that model untouched, which is
//! how single-model (CV-only) trackers are expressed.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::motion::{propagate, transition_jacobian, ModelKind, StateMatrix, StateVector, VehicleState};
use crate::sensing::{wrap_angle, MeasurementJacobian};

pub const MODELS: [ModelKind; 2] = [ModelKind::Cv, ModelKind::Ct];

/// Measurement function, its Jacobian and noise covariance.
pub trait Observation {
    fn measure(&self, s: &VehicleState) -> Result<Vector3<f64>>;
    fn jacobian(&self, s: &VehicleState) -> Result<MeasurementJacobian>;
    fn noise_cov(&self) -> Matrix3<f64>;
    /// Component that must be wrapped to `(-π, π]` when forming residuals.
    fn angle_index(&self) -> Option<usize> {
        None
    }

    fn residual(&self, z: &Vector3<f64>, predicted: &Vector3<f64>) -> Vector3<f64> {
        let mut r = z - predicted;
        if let Some(i) = self.angle_index() {
            r[i] = wrap_angle(r[i]);
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: StateVector,
    pub cov: StateMatrix,
}

impl GaussianBelief {
    pub fn new(mean: StateVector, cov: StateMatrix) -> Self {
        Self { mean, cov }
    }

    pub fn state(&self) -> VehicleState {
        VehicleState::from_vector(&self.mean)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.cov.symmetric_eigenvalues().min()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.cov - self.cov.transpose()).amax()
    }

    fn symmetrized(mut self) -> Self {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
        self
    }
}

/// Moment-matched single Gaussian of a weighted two-component mixture.
pub fn moment_match(weights: &Vector2<f64>, parts: &[GaussianBelief; 2]) -> GaussianBelief {
    let mean = parts[0].mean * weights[0] + parts[1].mean * weights[1];
    let mut cov = StateMatrix::zeros();
    for (w, p) in weights.iter().zip(parts) {
        let d = p.mean - mean;
        cov += (p.cov + d * d.transpose()) * *w;
    }
    GaussianBelief::new(mean, cov).symmetrized()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix(pub [[f64; 2]; 2]);

impl TransitionMatrix {
    pub fn identity() -> Self {
        Self([[1.0, 0.0], [0.0, 1.0]])
    }

    /// `Π[(j, i)]` = probability of switching from model `j` to model `i`.
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1])
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.0 {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-9 {
                return Err(Error::Config(
                    "transition matrix rows must be probability vectors".into(),
                ));
            }
        }
        Ok(())
    }
}

impl Default for TransitionMatrix {
    fn default() -> Self {
        Self([[0.95, 0.05], [0.05, 0.95]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmBank {
    pub beliefs: [GaussianBelief; 2],
    pub probs: Vector2<f64>,
    pub transition: Matrix2<f64>,
}

impl ImmBank {
    pub fn new(initial: GaussianBelief, probs: Vector2<f64>, transition: &TransitionMatrix) -> Self {
        Self {
            beliefs: [initial; 2],
            probs,
            transition: transition.matrix(),
        }
    }

    /// A bank that behaves as a plain EKF over one model.
    pub fn single(model: ModelKind, initial: GaussianBelief) -> Self {
        let probs = match model {
            ModelKind::Cv => Vector2::new(1.0, 0.0),
            ModelKind::Ct => Vector2::new(0.0, 1.0),
        };
        Self::new(initial, probs, &TransitionMatrix::identity())
    }

    /// `Σ_j π_{j,i}·ρ_j` for each target model `i`.
    pub fn predicted_probs(&self) -> Vector2<f64> {
        self.transition.transpose() * self.probs
    }

    /// Moment-matched posterior over both models.
    pub fn estimate(&self) -> GaussianBelief {
        moment_match(&self.probs, &self.beliefs)
    }

    /// Mixing, then per-model prediction.
    pub fn predict(&self, dt: f64, process_noise: &[StateMatrix; 2]) -> Result<ImmPrediction> {
        let predicted = self.predicted_probs();
        let alive = [predicted[0] > 0.0, predicted[1] > 0.0];
        if !alive[0] && !alive[1] {
            return Err(Error::Divergence("all model probabilities vanished".into()));
        }
        let weights = mixing_weights_lenient(self, &predicted);
        let mixed = mix_inputs(self, &weights);
        let mut beliefs = self.beliefs;
        for i in 0..2 {
            if alive[i] {
                beliefs[i] = ekf_predict(&mixed[i], MODELS[i], dt, &process_noise[i]);
            }
        }
        Ok(ImmPrediction {
            beliefs,
            prior_probs: self.probs,
            predicted_probs: predicted,
            alive,
            transition: self.transition,
        })
    }
}

/// Per-model predictions for one epoch, before a measurement arrives.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmPrediction {
    pub beliefs: [GaussianBelief; 2],
    /// Model probabilities of the previous epoch.
    pub prior_probs: Vector2<f64>,
    pub predicted_probs: Vector2<f64>,
    pub alive: [bool; 2],
    transition: Matrix2<f64>,
}

impl ImmPrediction {
    /// Combined state prediction weighted by the previous model probabilities.
    pub fn combined_state(&self) -> VehicleState {
        combined_prediction(&self.prior_probs, &self.beliefs)
    }

    /// Combined prediction with its moment-matched covariance.
    pub fn combined(&self) -> GaussianBelief {
        moment_match(&self.prior_probs, &self.beliefs)
    }

    /// Measurement update of every live model and of the model probabilities.
    pub fn update<O: Observation>(&self, z: &Vector3<f64>, obs: &O) -> Result<(ImmBank, Vector2<f64>)> {
        let mut beliefs = self.beliefs;
        let mut log_lik = [f64::NEG_INFINITY; 2];
        for i in 0..2 {
            if self.alive[i] {
                let up = ekf_update(&self.beliefs[i], z, obs)?;
                beliefs[i] = up.belief;
                log_lik[i] = up.log_likelihood;
            }
        }
        let probs = update_model_probs_log(&log_lik, &self.predicted_probs)?;
        let lik = Vector2::new(log_lik[0].exp(), log_lik[1].exp());
        Ok((
            ImmBank {
                beliefs,
                probs,
                transition: self.transition,
            },
            lik,
        ))
    }

    /// Prediction-only step when no measurement is usable.
    pub fn coast(&self) -> ImmBank {
        ImmBank {
            beliefs: self.beliefs,
            probs: self.predicted_probs,
            transition: self.transition,
        }
    }
}

/// Mixing weights as a matrix `W[(j, i)] = c(i|j)`; each column sums to 1.
pub fn mixing_weights(bank: &ImmBank) -> Result<Matrix2<f64>> {
    let predicted = bank.predicted_probs();
    if let Some(i) = (0..2).find(|i| predicted[*i] <= 0.0) {
        return Err(Error::UnreachableModel(i));
    }
    Ok(mixing_weights_lenient(bank, &predicted))
}

fn mixing_weights_lenient(bank: &ImmBank, predicted: &Vector2<f64>) -> Matrix2<f64> {
    let mut w = Matrix2::zeros();
    for i in 0..2 {
        if predicted[i] > 0.0 {
            for j in 0..2 {
                w[(j, i)] = bank.transition[(j, i)] * bank.probs[j] / predicted[i];
            }
        } else {
            w[(i, i)] = 1.0;
        }
    }
    w
}

/// Mixed initial conditions for each model filter.
pub fn mix_inputs(bank: &ImmBank, weights: &Matrix2<f64>) -> [GaussianBelief; 2] {
    let mix = |i: usize| moment_match(&Vector2::new(weights[(0, i)], weights[(1, i)]), &bank.beliefs);
    [mix(0), mix(1)]
}

pub fn ekf_predict(b: &GaussianBelief, model: ModelKind, dt: f64, q: &StateMatrix) -> GaussianBelief {
    let s = b.state();
    let f = transition_jacobian(&s, model, dt);
    GaussianBelief::new(propagate(&s, model, dt).to_vector(), f * b.cov * f.transpose() + q).symmetrized()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfUpdate {
    pub belief: GaussianBelief,
    pub log_likelihood: f64,
    pub gain: nalgebra::SMatrix<f64, 5, 3>,
}

impl EkfUpdate {
    pub fn likelihood(&self) -> f64 {
        self.log_likelihood.exp()
    }
}

/// Log density of a residual under `N(0, S)` together with `S⁻¹`.
pub(crate) fn gaussian_log_density(residual: &Vector3<f64>, s: &Matrix3<f64>) -> Result<(f64, Matrix3<f64>)> {
    let chol = s.cholesky().ok_or(Error::Singular("residual covariance"))?;
    let det = chol.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Singular("residual covariance"));
    }
    let inv = chol.inverse();
    let maha = (residual.transpose() * inv * residual)[0];
    Ok((-0.5 * (maha + det.ln() + 3.0 * (2.0 * PI).ln()), inv))
}

/// EKF measurement update with a Joseph-form covariance.
pub fn ekf_update<O: Observation>(b: &GaussianBelief, z: &Vector3<f64>, obs: &O) -> Result<EkfUpdate> {
    let s = b.state();
    let h = obs.jacobian(&s)?;
    let r = obs.noise_cov();
    let innovation = obs.residual(z, &obs.measure(&s)?);
    let s_cov = h * b.cov * h.transpose() + r;
    let s_cov = (s_cov + s_cov.transpose()) * 0.5;
    let (log_likelihood, s_inv) = gaussian_log_density(&innovation, &s_cov)?;
    let gain = b.cov * h.transpose() * s_inv;
    let i_kh = StateMatrix::identity() - gain * h;
    let cov = i_kh * b.cov * i_kh.transpose() + gain * r * gain.transpose();
    Ok(EkfUpdate {
        belief: GaussianBelief::new(b.mean + gain * innovation, cov).symmetrized(),
        log_likelihood,
        gain,
    })
}

/// Posterior model probabilities from per-model likelihoods.
pub fn update_model_probs(likelihoods: &Vector2<f64>, bank: &ImmBank) -> Result<Vector2<f64>> {
    let numer = likelihoods.component_mul(&bank.predicted_probs());
    let total = numer.sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Divergence("every model likelihood vanished".into()));
    }
    Ok(numer / total)
}

/// [`update_model_probs`] in the log domain, so tiny likelihoods do not underflow.
pub fn update_model_probs_log(log_likelihoods: &[f64; 2], predicted: &Vector2<f64>) -> Result<Vector2<f64>> {
    let logs: Vec<f64> = (0..2)
        .map(|i| {
            if predicted[i] > 0.0 {
                log_likelihoods[i] + predicted[i].ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Divergence("every model likelihood vanished".into()));
    }
    let w = Vector2::new((logs[0] - top).exp(), (logs[1] - top).exp());
    Ok(w / w.sum())
}

/// `Σ_i x_i·ρ_i` over the per-model predictions.
pub fn combined_prediction(probs: &Vector2<f64>, predictions: &[GaussianBelief; 2]) -> VehicleState {
    VehicleState::from_vector(&(predictions[0].mean * probs[0] + predictions[1].mean * probs[1]))
}

/// One full filter cycle with a known measurement. Returns the updated bank
/// and the combined prediction that was used to steer the beam.
pub fn imm_step<O: Observation>(
    bank: &ImmBank,
    z: &Vector3<f64>,
    obs: &O,
    dt: f64,
    process_noise: &[StateMatrix; 2],
) -> Result<(ImmBank, VehicleState)> {
    let prediction = bank.predict(dt, process_noise)?;
    let combined = prediction.combined_state();
    let (next, _) = prediction.update(z, obs)?;
    Ok((next, combined))
}
