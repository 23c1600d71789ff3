use std::hint::black_box;

use coverage_core::geometry::{AngularProfile, Domain, Weight, TAU};
use coverage_core::partition::{workloads, xi_solve, PartitionState};
use coverage_core::sim::{CoupledSystem, Scenario, SystemState};
use coverage_core::{run_scenario, CostModel, Vec2};
use criterion::{criterion_group, criterion_main, Criterion};

const CASE_STUDY: &str = r#"{
    "region": {"inner": {"mean": 1.0, "sin": [0.0, 0.5]}, "outer": {"mean": 3.0, "cos": [0.0, 0.5]}},
    "density": {"kind": "case_study"},
    "agents": {"count": 8, "seed": 1},
    "gains": {"kappa_phi": 0.03, "kappa_p": 0.1},
    "integrator": {"dt": 0.01, "t_end": 10.0, "log_stride": 10}
}"#;

fn state(n: usize) -> SystemState {
    let phases: Vec<f64> = (0..n).map(|i| 0.3 + TAU * i as f64 / n as f64 + 0.1 * (i as f64).sin()).collect();
    let positions = phases.iter().map(|&th| Vec2::from_polar(2.0, th + 0.2)).collect();
    SystemState { phases, positions }
}

fn geometry(c: &mut Criterion) {
    let domain = Domain::case_study();
    c.bench_function("profile_build", |b| {
        b.iter(|| AngularProfile::build(black_box(domain.region()), black_box(domain.density())).unwrap())
    });
    c.bench_function("region_integral_gl", |b| {
        b.iter(|| domain.region_integral(black_box(0.3), black_box(1.1), Weight::R2).unwrap())
    });
    c.bench_function("xi_solve", |b| b.iter(|| xi_solve(&domain, 8, black_box(0.7)).unwrap()));
}

fn dynamics(c: &mut Criterion) {
    let domain = Domain::case_study();
    let partition = PartitionState::new(state(8).phases, 0.03).unwrap();
    c.bench_function("workloads_n8", |b| b.iter(|| workloads(black_box(&partition), &domain)));

    let sys = CoupledSystem {
        domain: &domain,
        cost: CostModel::default(),
        kappa_phi: 0.03,
        kappa_p: 0.1,
        pinned: None,
    };
    let s = state(8);
    c.bench_function("rk4_step_n8", |b| b.iter(|| sys.advance(black_box(&s), 0.0, 0.01).unwrap()));

    let scenario = Scenario::from_json(CASE_STUDY).unwrap();
    let mut group = c.benchmark_group("scenario");
    group.sample_size(10);
    group.bench_function("case_study_t10", |b| b.iter(|| run_scenario(black_box(&scenario)).unwrap()));
    group.finish();
}

criterion_group!(benches, geometry, dynamics);
criterion_main!(benches);
