use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use t2u_core::association::{association_probabilities_log, fuse_measurements};
use t2u_core::beamforming::{beams_toward, matched_snr_bound, receive_snr};
use t2u_core::imm::imm_step;
use t2u_core::motion::{model_process_noise, propagate};
use t2u_core::scenario::{
    generate_trajectory, load_trajectory, save_trajectory, spawn_clutter, ClutterPlacement, Pose, Segment,
};
use t2u_core::sensing::measure_fn;
use t2u_core::{
    ArrayConfig, BeamMode, GaussianBelief, ImmBank, Measurement, MeasurementNoise, ModelKind, PolarPoint,
    ProcessNoiseConfig, RadioParams, RangeRateAngle, Scheme, StateMatrix, StateVector, TrajectorySpec,
    TransitionMatrix, VehicleState,
};

fn segment() -> impl Strategy<Value = Segment> {
    prop_oneof![
        (0.5..5.0f64, 1.0..15.0f64).prop_map(|(duration, speed)| Segment::Straight { duration, speed }),
        (0.5..5.0f64, 1.0..15.0f64, -0.4..0.4f64).prop_map(|(duration, speed, turn_rate)| Segment::Arc {
            duration,
            speed,
            turn_rate
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn imm_steps_stay_normalized(
        r in 20.0..120.0f64, a in 0.3..2.8f64, speed in 2.0..15.0f64, heading in -PI..PI,
        omega in -0.3..0.3f64, p in 0.01..0.99f64, seed in any::<u64>(),
    ) {
        let mut truth = VehicleState::from_pose(r * a.cos(), r * a.sin(), speed, heading, omega);
        let cov = StateMatrix::from_diagonal(&StateVector::from([1.0, 1.0, 1.0, 1.0, 0.1]));
        let mut bank = ImmBank::new(
            GaussianBelief::new(truth.to_vector(), cov),
            Vector2::new(p, 1.0 - p),
            &TransitionMatrix::default(),
        );
        let noise = ProcessNoiseConfig::default();
        let dt = 0.75;
        let qs = [model_process_noise(ModelKind::Cv, &noise, dt), model_process_noise(ModelKind::Ct, &noise, dt)];
        let obs = RangeRateAngle::new(&MeasurementNoise::default());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            truth = propagate(&truth, ModelKind::Ct, dt);
            if truth.x.hypot(truth.y) < 5.0 {
                break;
            }
            let z = measure_fn(&truth).unwrap()
                + Vector3::new(0.02, 0.01, 0.005).component_mul(&Vector3::from_fn(|_, _| {
                    rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng)
                }));
            let (next, _) = imm_step(&bank, &z, &obs, dt, &qs).unwrap();
            bank = next;
            prop_assert!((bank.probs.sum() - 1.0).abs() < 1e-12);
            prop_assert!(bank.probs.iter().all(|p| (0.0..=1.0).contains(p)));
            for b in &bank.beliefs {
                prop_assert!(b.min_eigenvalue() > -1e-9);
                prop_assert!(b.asymmetry() < 1e-9);
            }
        }
    }

    #[test]
    fn fused_measurement_is_a_convex_combination(
        zs in prop::collection::vec((1.0..100.0f64, -10.0..10.0f64, 0.2..2.9f64), 1..6),
        logs in prop::collection::vec(-50.0..0.0f64, 6),
    ) {
        let ms: Vec<Measurement> = zs
            .iter()
            .map(|&(r, v, a)| Measurement::from_vector(&Vector3::new(r, v, a), [1.0, 1.0, 1.0]))
            .collect();
        let beta = association_probabilities_log(&logs[..ms.len()]).unwrap();
        let fused = fuse_measurements(&ms, &beta).unwrap();
        let lo = |f: fn(&Measurement) -> f64| ms.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = |f: fn(&Measurement) -> f64| ms.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(fused.range >= lo(|m| m.range) - 1e-9 && fused.range <= hi(|m| m.range) + 1e-9);
        prop_assert!(
            fused.radial_speed >= lo(|m| m.radial_speed) - 1e-9 && fused.radial_speed <= hi(|m| m.radial_speed) + 1e-9
        );
        // angles inside (0, π) never wrap, so the circular mean stays in the hull
        prop_assert!(fused.angle >= lo(|m| m.angle) - 1e-9 && fused.angle <= hi(|m| m.angle) + 1e-9);
    }

    #[test]
    fn no_beam_beats_the_matched_bound(
        r in 3.0..300.0f64, a in 0.05..3.09f64, br in 3.0..300.0f64, ba in 0.05..3.09f64, far in any::<bool>(),
    ) {
        let cfg = ArrayConfig::default();
        let rp = RadioParams::default();
        let truth = PolarPoint::new(r, a);
        let mode = if far { BeamMode::Far } else { BeamMode::Near };
        let beams = beams_toward(PolarPoint::new(br, ba), &cfg, mode);
        let snr = receive_snr(truth, &beams, &cfg, &rp).unwrap();
        let bound = matched_snr_bound(truth, &cfg, &rp);
        prop_assert!(snr <= bound * (1.0 + 1e-12));
        let matched = receive_snr(truth, &beams_toward(truth, &cfg, BeamMode::Near), &cfg, &rp).unwrap();
        prop_assert!((matched - bound).abs() <= 1e-9 * bound);
    }

    #[test]
    fn trajectory_csv_round_trips(
        x in -60.0..60.0f64, y in 10.0..60.0f64, heading in -PI..PI,
        segments in prop::collection::vec(segment(), 1..4),
    ) {
        let spec = TrajectorySpec { initial: Pose { x, y, heading }, segments };
        let traj = generate_trajectory(&spec, 0.25).unwrap();
        prop_assert!((traj.duration() - spec.total_duration()).abs() < 0.25 + 1e-9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        save_trajectory(&path, &traj).unwrap();
        let back = load_trajectory(&path).unwrap();
        prop_assert_eq!(back, traj);
    }

    #[test]
    fn clutter_is_deterministic_and_sized(count in 0usize..5, seed in any::<u64>()) {
        let user: Vec<VehicleState> = (0..10)
            .map(|l| VehicleState::new(-20.0 + 7.5 * l as f64, 15.0, 10.0, 0.0, 0.0))
            .collect();
        let times: Vec<f64> = (0..10).map(|l| 0.75 * l as f64).collect();
        let placement = ClutterPlacement::default();
        let a = spawn_clutter(&user, &times, count, &placement, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = spawn_clutter(&user, &times, count, &placement, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a.len(), count);
        prop_assert!(a.iter().all(|c| c.len() == user.len()));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn scheme_names_parse_back() {
    for s in Scheme::ALL {
        assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        assert_eq!(s.name().to_lowercase().replace('-', "_").parse::<Scheme>().unwrap(), s);
    }
}
