use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{Vector2, Vector3};

use t2u_core::beamforming::{beams_toward, receive_snr};
use t2u_core::geometry::steering_vector;
use t2u_core::imm::imm_step;
use t2u_core::motion::model_process_noise;
use t2u_core::scenario::{run_trial, Scene};
use t2u_core::sensing::measure_fn;
use t2u_core::{
    ArrayConfig, ArraySide, BeamMode, GaussianBelief, ImmBank, MeasurementNoise, ModelKind, PolarPoint,
    ProcessNoiseConfig, RadioParams, RangeRateAngle, ScenarioConfig, Scheme, StateMatrix, StateVector,
    TransitionMatrix, VehicleState,
};

fn geometry(c: &mut Criterion) {
    let cfg = ArrayConfig::default();
    let p = PolarPoint::new(35.0, 1.2);
    c.bench_function("steering_vector_128", |b| {
        b.iter(|| steering_vector(black_box(&cfg), ArraySide::Tx, black_box(p)))
    });
    let beams = beams_toward(PolarPoint::new(35.5, 1.21), &cfg, BeamMode::Near);
    let rp = RadioParams::default();
    c.bench_function("receive_snr_128", |b| {
        b.iter(|| receive_snr(black_box(p), &beams, &cfg, &rp).unwrap())
    });
}

fn filter(c: &mut Criterion) {
    let truth = VehicleState::from_pose(-20.0, 25.0, 10.0, 0.2, 0.1);
    let cov = StateMatrix::from_diagonal(&StateVector::from([1.0, 1.0, 1.0, 1.0, 0.1]));
    let bank = ImmBank::new(
        GaussianBelief::new(truth.to_vector(), cov),
        Vector2::new(0.5, 0.5),
        &TransitionMatrix::default(),
    );
    let noise = ProcessNoiseConfig::default();
    let qs = [
        model_process_noise(ModelKind::Cv, &noise, 0.75),
        model_process_noise(ModelKind::Ct, &noise, 0.75),
    ];
    let obs = RangeRateAngle::new(&MeasurementNoise::default());
    let z = measure_fn(&truth).unwrap() + Vector3::new(0.01, -0.005, 0.002);
    c.bench_function("imm_step", |b| {
        b.iter(|| imm_step(black_box(&bank), black_box(&z), &obs, 0.75, &qs).unwrap())
    });
}

fn scenario(c: &mut Criterion) {
    let cfg = ScenarioConfig::default();
    let scene = Scene::build(&cfg).unwrap();
    let mut group = c.benchmark_group("trial");
    group.sample_size(20);
    for scheme in [Scheme::ImmPda, Scheme::CvNn, Scheme::Genie] {
        group.bench_function(scheme.name(), |b| {
            b.iter(|| run_trial(&cfg, &scene, scheme, black_box(0)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, geometry, filter, scenario);
criterion_main!(benches);
