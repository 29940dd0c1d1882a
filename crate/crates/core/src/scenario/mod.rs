//! Scenario construction, the Monte Carlo tracking loop, and reporting.

pub mod clutter;
pub mod config;
pub mod report;
pub mod run;
pub mod trajectory;

pub use clutter::{spawn_clutter, ClutterPlacement};
pub use config::{default_trajectories, parse_schemes, ScenarioConfig, Scheme, TrajectorySource};
pub use report::{compare_schemes, summarize, write_epochs_csv, Comparison, MetricsReport, SchemeSummary};
pub use run::{run_scenario, run_scheme, run_trial, EpochLog, Scene};
pub use trajectory::{
    generate_trajectory, load_trajectory, save_trajectory, Pose, Segment, Trajectory, TrajectorySpec,
};
