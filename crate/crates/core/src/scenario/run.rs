//! The per-epoch predict → beam → sense → associate → update loop.

use nalgebra::{Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::clutter::spawn_clutter;
use super::config::{Association, ScenarioConfig, Scheme, Tracker, TrajectorySource};
use super::trajectory::{generate_trajectory, load_trajectory};
use crate::association::{
    associate_nn, association_probabilities_log, fuse_measurements, predicted_measurement, AssociationResult,
    PredictedMeasurement,
};
use crate::beamforming::{predictive_beams, rate, receive_snr, BeamMode, BeamPair};
use crate::error::{Error, Result};
use crate::geometry::PolarPoint;
use crate::imm::{GaussianBelief, ImmBank};
use crate::motion::{model_process_noise, ModelKind, StateMatrix, StateVector, VehicleState};
use crate::sensing::{observe_target, wrap_angle, EchoTarget, Measurement, RangeRateAngle};

/// One record per (trial, epoch, user).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub scheme: Scheme,
    pub trial: usize,
    pub epoch: usize,
    pub time: f64,
    pub user: usize,
    pub truth: VehicleState,
    /// State the beam was steered at.
    pub predicted: VehicleState,
    /// Posterior estimate after the epoch's update.
    pub estimate: VehicleState,
    pub num_measurements: usize,
    pub beta: Vec<f64>,
    pub snr: f64,
    pub rate: f64,
    /// (CV, CT) model probabilities; `None` without a filter.
    pub model_probs: Option<[f64; 2]>,
    /// No measurement survived gating; the filter only predicted.
    pub coasted: bool,
    /// The user is on a turning segment.
    pub on_arc: bool,
}

impl EpochLog {
    /// Range and angle errors of the prediction the beam used.
    pub fn prediction_error(&self) -> (f64, f64) {
        let r_true = self.truth.x.hypot(self.truth.y);
        let r_pred = self.predicted.x.hypot(self.predicted.y);
        let a_true = self.truth.y.atan2(self.truth.x);
        let a_pred = self.predicted.y.atan2(self.predicted.x);
        (r_pred - r_true, wrap_angle(a_pred - a_true))
    }
}

/// Deterministic state shared by every trial and scheme: the users' true
/// trajectories sampled at the epoch times.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub times: Vec<f64>,
    /// `users[k][l]` is user `k` at epoch `l`.
    pub users: Vec<Vec<VehicleState>>,
    /// Bounding box `[x_min, x_max, y_min, y_max]` of all user positions.
    pub bounds: [f64; 4],
}

impl Scene {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self> {
        let dt = cfg.epoch_interval;
        let trajectories = cfg
            .trajectory_sources()
            .iter()
            .map(|src| match src {
                TrajectorySource::Generate(spec) => generate_trajectory(spec, dt),
                TrajectorySource::File(path) => load_trajectory(path),
            })
            .collect::<Result<Vec<_>>>()?;
        let span = trajectories
            .iter()
            .map(|t| t.times[0]..=*t.times.last().unwrap())
            .reduce(|a, b| a.start().max(*b.start())..=a.end().min(*b.end()))
            .expect("at least one user");
        let count = if span.end() >= span.start() {
            ((span.end() - span.start()) / dt + 1e-9).floor() as usize + 1
        } else {
            0
        };
        if count < 3 {
            return Err(Error::Config(
                "trajectories must overlap for at least three epochs".into(),
            ));
        }
        let times: Vec<f64> = (0..count).map(|l| span.start() + l as f64 * dt).collect();
        let users: Vec<Vec<VehicleState>> = trajectories
            .iter()
            .map(|traj| times.iter().map(|t| traj.state_at(*t)).collect())
            .collect();
        let mut bounds = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for s in users.iter().flatten() {
            if s.x.hypot(s.y) < 1e-6 {
                return Err(Error::Config("a user passes through the array origin".into()));
            }
            bounds = [
                bounds[0].min(s.x),
                bounds[1].max(s.x),
                bounds[2].min(s.y),
                bounds[3].max(s.y),
            ];
        }
        Ok(Self { times, users, bounds })
    }

    pub fn num_epochs(&self) -> usize {
        self.times.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}

/// Epoch at which logging starts; the first two epochs initialize tracks.
pub const FIRST_LOGGED_EPOCH: usize = 2;

#[derive(Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Clutter = 1,
    Init = 2,
    Echo = 3,
    RandomBeam = 4,
}

/// Independent generator for one (trial, epoch, user, target, purpose) key.
///
/// Every random quantity draws from its own keyed stream, so schemes that
/// see the same physical event see the same noise realization.
fn stream(seed: u64, trial: usize, epoch: usize, user: usize, target: usize, purpose: Purpose) -> ChaCha8Rng {
    let key = ((trial as u64) << 40)
        | ((epoch as u64 & 0xffff) << 24)
        | ((user as u64 & 0xff) << 16)
        | ((target as u64 & 0xff) << 8)
        | purpose as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// Clutter trajectories for one trial: `clutter[k][m][l]`.
pub fn trial_clutter(cfg: &ScenarioConfig, scene: &Scene, trial: usize) -> Vec<Vec<Vec<VehicleState>>> {
    scene
        .users
        .iter()
        .enumerate()
        .map(|(k, user)| {
            let mut rng = stream(cfg.seed, trial, 0, k, 0, Purpose::Clutter);
            spawn_clutter(user, &scene.times, cfg.clutter_per_user, &cfg.clutter, &mut rng)
        })
        .collect()
}

/// Noisy position fix used to start a track.
fn init_fix(cfg: &ScenarioConfig, truth: &VehicleState, trial: usize, epoch: usize, user: usize) -> Result<(f64, f64)> {
    let mut rng = stream(cfg.seed, trial, epoch, user, 0, Purpose::Init);
    let p = PolarPoint::from_cartesian(truth.x, truth.y)?;
    let n = &cfg.measurement_noise;
    let dr: f64 = rng.sample(StandardNormal);
    let da: f64 = rng.sample(StandardNormal);
    let r = (p.range + n.sigma_range * dr).abs().max(1e-3);
    Ok(PolarPoint::new(r, p.angle + n.sigma_angle * da).to_cartesian())
}

struct Track {
    bank: ImmBank,
}

impl Track {
    fn start(cfg: &ScenarioConfig, scene: &Scene, tracker: Tracker, trial: usize, user: usize) -> Result<Self> {
        let (x0, y0) = init_fix(cfg, &scene.users[user][0], trial, 0, user)?;
        let (x1, y1) = init_fix(cfg, &scene.users[user][1], trial, 1, user)?;
        let dt = scene.times[1] - scene.times[0];
        let mean = StateVector::from([x1, y1, (x1 - x0) / dt, (y1 - y0) / dt, 0.0]);
        let belief = GaussianBelief::new(mean, StateMatrix::from_diagonal(&cfg.initial_cov.into()));
        let bank = match tracker {
            Tracker::Imm => ImmBank::new(belief, Vector2::from(cfg.initial_probs), &cfg.transition),
            Tracker::Cv => ImmBank::single(ModelKind::Cv, belief),
        };
        Ok(Self { bank })
    }
}

fn divergence(trial: usize, epoch: usize, user: usize, e: Error) -> Error {
    match e {
        Error::Divergence(_) => e,
        other => Error::Divergence(format!("trial {trial}, epoch {epoch}, user {user}: {other}")),
    }
}

/// Runs one Monte Carlo trial of one scheme.
pub fn run_trial(cfg: &ScenarioConfig, scene: &Scene, scheme: Scheme, trial: usize) -> Result<Vec<EpochLog>> {
    let k_users = scene.num_users();
    let m = cfg.clutter_per_user;
    let clutter = trial_clutter(cfg, scene, trial);
    let pipeline = scheme.pipeline();
    let mode = scheme.beam_mode();
    let mut tracks = match pipeline {
        Some((tracker, _)) => (0..k_users)
            .map(|k| Track::start(cfg, scene, tracker, trial, k))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let dt = cfg.epoch_interval;
    let qs = [
        model_process_noise(ModelKind::Cv, &cfg.process_noise, dt),
        model_process_noise(ModelKind::Ct, &cfg.process_noise, dt),
    ];
    let base_obs = RangeRateAngle::new(&cfg.measurement_noise);
    let sigmas = cfg.measurement_noise.sigmas();

    let mut logs = Vec::with_capacity((scene.num_epochs() - FIRST_LOGGED_EPOCH) * k_users);
    for l in FIRST_LOGGED_EPOCH..scene.num_epochs() {
        // beam k covers user k and its own clutter vehicles, user first
        let echoes = (0..k_users)
            .map(|k| {
                std::iter::once(scene.users[k][l])
                    .chain(clutter[k].iter().map(|traj| traj[l]))
                    .map(|v| EchoTarget::from_state(&v, cfg.array.wavelength, cfg.rcs))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        debug_assert!(echoes.iter().all(|e| e.len() == 1 + m));

        for k in 0..k_users {
            let truth = scene.users[k][l];
            let truth_polar = PolarPoint::from_cartesian(truth.x, truth.y)?;
            let mut log = EpochLog {
                scheme,
                trial,
                epoch: l,
                time: scene.times[l],
                user: k,
                truth,
                predicted: truth,
                estimate: truth,
                num_measurements: 0,
                beta: Vec::new(),
                snr: 0.0,
                rate: 0.0,
                model_probs: None,
                coasted: false,
                on_arc: truth.omega.abs() > 1e-9,
            };
            let beams: BeamPair = match pipeline {
                None => {
                    let target = if scheme == Scheme::Random {
                        let mut rng = stream(cfg.seed, trial, l, k, 0, Purpose::RandomBeam);
                        let b = scene.bounds;
                        let x = if b[1] > b[0] {
                            rng.random_range(b[0]..=b[1])
                        } else {
                            b[0]
                        };
                        let y = if b[3] > b[2] {
                            rng.random_range(b[2]..=b[3])
                        } else {
                            b[2]
                        };
                        VehicleState::new(x, y, 0.0, 0.0, 0.0)
                    } else {
                        truth
                    };
                    log.predicted = target;
                    log.estimate = target;
                    predictive_beams(&target, &cfg.array, BeamMode::Near).map_err(|e| divergence(trial, l, k, e))?
                }
                Some((_, association)) => {
                    let track = &mut tracks[k];
                    let prediction = track.bank.predict(dt, &qs).map_err(|e| divergence(trial, l, k, e))?;
                    let predicted = prediction.combined();
                    log.predicted = predicted.state();
                    if !log.predicted.is_finite() {
                        return Err(Error::Divergence(format!(
                            "trial {trial}, epoch {l}, user {k}: non-finite prediction"
                        )));
                    }
                    let beams =
                        predictive_beams(&log.predicted, &cfg.array, mode).map_err(|e| divergence(trial, l, k, e))?;

                    let mut zs: Vec<Measurement> = Vec::new();
                    for (j, echo) in echoes[k].iter().enumerate() {
                        let mut rng = stream(cfg.seed, trial, l, k, j, Purpose::Echo);
                        if let Some(z) = observe_target(
                            echo,
                            &beams,
                            &cfg.array,
                            &cfg.detector,
                            &cfg.measurement_noise,
                            &mut rng,
                        )? {
                            zs.push(z);
                        }
                    }
                    log.num_measurements = zs.len();
                    // each echo reports its own noise level, so S_q = H·M·Hᵀ + R_q
                    let scored = zs
                        .iter()
                        .map(|z| {
                            let obs = RangeRateAngle {
                                noise_cov: Matrix3::from_diagonal(&z.noise_var.into()),
                            };
                            predicted_measurement(&predicted, &obs).map(|pm| (*z, pm))
                        })
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| divergence(trial, l, k, e))?;
                    let candidates: Vec<(Measurement, PredictedMeasurement)> = scored
                        .into_iter()
                        .filter(|(z, pm)| cfg.gate.is_none_or(|g| pm.mahalanobis2(z) <= g))
                        .collect();
                    let zs: Vec<Measurement> = candidates.iter().map(|(z, _)| *z).collect();
                    let associated = match association {
                        Association::Pda => {
                            let logs: Vec<f64> = candidates.iter().map(|(z, pm)| pm.log_likelihood(z)).collect();
                            association_probabilities_log(&logs).and_then(|probabilities| {
                                fuse_measurements(&zs, &probabilities)
                                    .map(|fused| AssociationResult { probabilities, fused })
                            })
                        }
                        Association::Nn => {
                            let pm =
                                predicted_measurement(&predicted, &base_obs).map_err(|e| divergence(trial, l, k, e))?;
                            associate_nn(&zs, &pm, &sigmas)
                        }
                    };
                    track.bank = match associated {
                        Ok(result) => {
                            let obs = RangeRateAngle {
                                noise_cov: Matrix3::from_diagonal(&result.fused.noise_var.into()),
                            };
                            let (bank, _) = prediction
                                .update(&result.fused.to_vector(), &obs)
                                .map_err(|e| divergence(trial, l, k, e))?;
                            log.beta = result.probabilities;
                            bank
                        }
                        Err(Error::NoUsableMeasurement) => {
                            log.coasted = true;
                            prediction.coast()
                        }
                        Err(e) => return Err(divergence(trial, l, k, e)),
                    };
                    let est = track.bank.estimate().state();
                    if !est.is_finite() {
                        return Err(Error::Divergence(format!(
                            "trial {trial}, epoch {l}, user {k}: non-finite estimate"
                        )));
                    }
                    log.estimate = est;
                    log.model_probs = Some([track.bank.probs[0], track.bank.probs[1]]);
                    beams
                }
            };
            log.snr = receive_snr(truth_polar, &beams, &cfg.array, &cfg.radio)?;
            log.rate = rate(log.snr);
            logs.push(log);
        }
    }
    Ok(logs)
}

/// All trials of one scheme, ordered by (trial, epoch, user).
pub fn run_scheme(cfg: &ScenarioConfig, scene: &Scene, scheme: Scheme, parallel: bool) -> Result<Vec<EpochLog>> {
    let per_trial: Vec<Result<Vec<EpochLog>>> = if parallel {
        (0..cfg.num_trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, scene, scheme, t))
            .collect()
    } else {
        (0..cfg.num_trials).map(|t| run_trial(cfg, scene, scheme, t)).collect()
    };
    let mut logs = Vec::new();
    for trial in per_trial {
        logs.extend(trial?);
    }
    Ok(logs)
}

/// Runs `cfg.scheme` over `cfg.num_trials` trials in parallel.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    let scene = Scene::build(cfg)?;
    run_scheme(cfg, &scene, cfg.scheme, true)
}
