//! Predictive target-to-user association for hybrid-field ISAC links:
//! spherical-wave array geometry, an IMM (CV + CT) tracker, radar echo
//! synthesis with CFAR detection, probabilistic data association, and a
//! Monte Carlo scenario harness.

// `!(x > 0.0)` is the intended spelling: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod beamforming;
pub mod error;
pub mod geometry;
pub mod imm;
pub mod motion;
pub mod scenario;
pub mod sensing;

pub use association::{associate_nn, associate_pda, AssociationResult, PredictedMeasurement, DEFAULT_GATE};
pub use beamforming::{BeamMode, BeamPair, RadioParams, RateStatistics};
pub use error::{Error, Result};
pub use geometry::{ArrayConfig, ArraySide, PolarPoint, SteeringVector};
pub use imm::{GaussianBelief, ImmBank, ImmPrediction, TransitionMatrix};
pub use motion::{ModelKind, ProcessNoiseConfig, StateMatrix, StateVector, VehicleState};
pub use scenario::{EpochLog, MetricsReport, ScenarioConfig, Scheme, TrajectorySpec};
pub use sensing::{DetectorConfig, Measurement, MeasurementNoise, NoiseScaling, RangeRateAngle};
