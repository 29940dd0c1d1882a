//! Scenario configuration and scheme selection.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::clutter::ClutterPlacement;
use super::trajectory::{Pose, Segment, TrajectorySpec};
use crate::association::DEFAULT_GATE;
use crate::beamforming::{BeamMode, RadioParams};
use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;
use crate::imm::TransitionMatrix;
use crate::motion::ProcessNoiseConfig;
use crate::sensing::{DetectorConfig, MeasurementNoise};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "IMM-PDA")]
    ImmPda,
    #[serde(rename = "IMM-NN")]
    ImmNn,
    #[serde(rename = "CV-PDA")]
    CvPda,
    #[serde(rename = "CV-NN")]
    CvNn,
    #[serde(rename = "GENIE")]
    Genie,
    #[serde(rename = "RANDOM")]
    Random,
    #[serde(rename = "IMM-PDA-FF")]
    ImmPdaFf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tracker {
    Imm,
    Cv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Association {
    Pda,
    Nn,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::ImmPda,
        Scheme::ImmNn,
        Scheme::CvPda,
        Scheme::CvNn,
        Scheme::Genie,
        Scheme::Random,
        Scheme::ImmPdaFf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImmPda => "IMM-PDA",
            Scheme::ImmNn => "IMM-NN",
            Scheme::CvPda => "CV-PDA",
            Scheme::CvNn => "CV-NN",
            Scheme::Genie => "GENIE",
            Scheme::Random => "RANDOM",
            Scheme::ImmPdaFf => "IMM-PDA-FF",
        }
    }

    /// Filter and association used by a tracking scheme; `None` for the
    /// baselines that bypass tracking.
    pub fn pipeline(self) -> Option<(Tracker, Association)> {
        match self {
            Scheme::ImmPda | Scheme::ImmPdaFf => Some((Tracker::Imm, Association::Pda)),
            Scheme::ImmNn => Some((Tracker::Imm, Association::Nn)),
            Scheme::CvPda => Some((Tracker::Cv, Association::Pda)),
            Scheme::CvNn => Some((Tracker::Cv, Association::Nn)),
            Scheme::Genie | Scheme::Random => None,
        }
    }

    pub fn beam_mode(self) -> BeamMode {
        match self {
            Scheme::ImmPdaFf => BeamMode::Far,
            _ => BeamMode::Near,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('_', "-");
        Scheme::ALL.into_iter().find(|k| k.name() == wanted).ok_or_else(|| {
            let names: Vec<_> = Scheme::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown scheme {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Parses a comma-separated scheme list.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    let schemes = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Scheme::from_str)
        .collect::<Result<Vec<_>>>()?;
    if schemes.is_empty() {
        return Err(Error::Config("at least one scheme is required".into()));
    }
    Ok(schemes)
}

/// Where a user's trajectory comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySource {
    Generate(TrajectorySpec),
    /// Trajectory CSV; relative paths resolve against the config file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub clutter_per_user: usize,
    /// Seconds between tracking epochs.
    pub epoch_interval: f64,
    pub array: ArrayConfig,
    pub radio: RadioParams,
    pub detector: DetectorConfig,
    pub measurement_noise: MeasurementNoise,
    /// Radar cross-section of every vehicle, m².
    pub rcs: f64,
    pub process_noise: ProcessNoiseConfig,
    pub transition: TransitionMatrix,
    /// Initial (CV, CT) model probabilities.
    pub initial_probs: [f64; 2],
    /// Diagonal of the initial state covariance.
    pub initial_cov: [f64; 5],
    /// Mahalanobis gate; `null` disables gating.
    pub gate: Option<f64>,
    pub clutter: ClutterPlacement,
    /// One entry per user; empty selects the built-in turning scenario.
    pub trajectories: Vec<TrajectorySource>,
    pub scheme: Scheme,
    pub seed: u64,
    pub num_trials: usize,
    /// Outage rate threshold, bps/Hz.
    pub outage_threshold: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_users: 3,
            clutter_per_user: 3,
            epoch_interval: 0.75,
            array: ArrayConfig::default(),
            radio: RadioParams::default(),
            detector: DetectorConfig::default(),
            measurement_noise: MeasurementNoise::default(),
            rcs: 10.0,
            process_noise: ProcessNoiseConfig::default(),
            transition: TransitionMatrix::default(),
            initial_probs: [0.5, 0.5],
            initial_cov: [1.0, 1.0, 1.0, 1.0, 0.1],
            gate: Some(DEFAULT_GATE),
            clutter: ClutterPlacement::default(),
            trajectories: Vec::new(),
            scheme: Scheme::ImmPda,
            seed: 0,
            num_trials: 1,
            outage_threshold: 4.0,
        }
    }
}

/// The three built-in users: straight 8 s, a 0.15 rad/s arc for 7 s,
/// straight 8 s.
pub fn default_trajectories() -> Vec<TrajectorySpec> {
    let user = |x: f64, y: f64, heading: f64, speed: f64, turn_rate: f64| TrajectorySpec {
        initial: Pose { x, y, heading },
        segments: vec![
            Segment::Straight { duration: 8.0, speed },
            Segment::Arc {
                duration: 7.0,
                speed,
                turn_rate,
            },
            Segment::Straight { duration: 8.0, speed },
        ],
    };
    vec![
        user(-56.4, 20.5, 350f64.to_radians(), 8.0, 0.15),
        user(51.7, 18.8, 185f64.to_radians(), 8.0, -0.15),
        user(-58.0, 15.5, 355f64.to_radians(), 9.0, 0.15),
    ]
}

impl ScenarioConfig {
    /// Reads a JSON config, rejecting unknown keys. Relative trajectory
    /// paths are resolved against the file's directory.
    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for src in &mut cfg.trajectories {
            if let TrajectorySource::File(p) = src {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Trajectory sources, falling back to the built-in scenario.
    pub fn trajectory_sources(&self) -> Vec<TrajectorySource> {
        if self.trajectories.is_empty() {
            default_trajectories()
                .into_iter()
                .take(self.num_users)
                .map(TrajectorySource::Generate)
                .collect()
        } else {
            self.trajectories.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.num_users == 0 {
            return bad("num_users must be at least 1");
        }
        if !(self.epoch_interval > 0.0 && self.epoch_interval.is_finite()) {
            return bad("epoch_interval must be positive");
        }
        if self.num_trials == 0 {
            return bad("num_trials must be at least 1");
        }
        if self.trajectories.is_empty() {
            let available = default_trajectories().len();
            if self.num_users > available {
                return Err(Error::Config(format!(
                    "the built-in scenario has {available} users; give trajectories for {}",
                    self.num_users
                )));
            }
        } else if self.trajectories.len() != self.num_users {
            return Err(Error::Config(format!(
                "{} trajectories given for {} users",
                self.trajectories.len(),
                self.num_users
            )));
        }
        for src in &self.trajectories {
            if let TrajectorySource::Generate(spec) = src {
                spec.validate()?;
            }
        }
        if self.num_users > 255 || self.clutter_per_user > 255 {
            return bad("at most 255 users and 255 clutter vehicles per user");
        }
        if !(self.rcs > 0.0) {
            return bad("rcs must be positive");
        }
        if !(self.outage_threshold.is_finite()) {
            return bad("outage_threshold must be finite");
        }
        if let Some(g) = self.gate {
            if !(g > 0.0) {
                return bad("gate must be positive");
            }
        }
        if self.initial_cov.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return bad("initial_cov entries must be positive");
        }
        let p = self.initial_probs;
        if p.iter().any(|v| !(*v >= 0.0)) || ((p[0] + p[1]) - 1.0).abs() > 1e-9 {
            return bad("initial_probs must be non-negative and sum to 1");
        }
        let pn = &self.process_noise;
        if [pn.sigma_ax, pn.sigma_ay, pn.sigma_aw].iter().any(|v| !(*v >= 0.0)) {
            return bad("process noise deviations must be non-negative");
        }
        self.array.validate()?;
        self.radio.validate()?;
        self.detector.validate()?;
        self.measurement_noise.validate()?;
        self.transition.validate()?;
        self.clutter.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert_eq!("imm_pda".parse::<Scheme>().unwrap(), Scheme::ImmPda);
        assert!("KALMAN".parse::<Scheme>().is_err());
        assert_eq!(
            parse_schemes("GENIE, CV-NN").unwrap(),
            vec![Scheme::Genie, Scheme::CvNn]
        );
        assert!(parse_schemes(" , ").is_err());
    }

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let back: ScenarioConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.trajectory_sources().len(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"num_users": 1, "colour": 3}"#).is_err());
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"array": {"num_tx": 4, "extra": 1}}"#).is_err());
        let partial: ScenarioConfig = serde_json::from_str(r#"{"num_users": 2, "gate": null}"#).unwrap();
        assert_eq!(partial.num_users, 2);
        assert_eq!(partial.gate, None);
    }

    type Mutation = Box<dyn Fn(&mut ScenarioConfig)>;

    #[test]
    fn invalid_values_are_config_errors() {
        let cases: Vec<Mutation> = vec![
            Box::new(|c| c.num_users = 0),
            Box::new(|c| c.num_users = 4),
            Box::new(|c| c.epoch_interval = 0.0),
            Box::new(|c| c.num_trials = 0),
            Box::new(|c| c.initial_probs = [0.7, 0.7]),
            Box::new(|c| c.gate = Some(-1.0)),
            Box::new(|c| c.array.num_tx = 0),
            Box::new(|c| c.detector.p_fa = 0.0),
            Box::new(|c| c.transition = TransitionMatrix([[0.5, 0.4], [0.5, 0.5]])),
        ];
        for mutate in cases {
            let mut cfg = ScenarioConfig::default();
            mutate(&mut cfg);
            assert!(cfg.validate().unwrap_err().is_config());
        }
    }

    #[test]
    fn relative_trajectory_paths_follow_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"num_users": 1, "trajectories": [{"file": "u.csv"}]}"#).unwrap();
        let cfg = ScenarioConfig::from_file(&path).unwrap();
        assert_eq!(cfg.trajectories[0], TrajectorySource::File(dir.path().join("u.csv")));
    }
}
