use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use gibbs_certify::bounds::{prop4_v_with, uniform_u_with, DriftCertificate, ThetaFamily};
use gibbs_certify::model::{FiniteModel, ThreeComponentModel, TwoComponentModel};
use gibbs_certify::oracle::simulate_chain_with;
use gibbs_certify::tuner::{optimize_rosenthal, Objective, RosenthalSearch};
use gibbs_certify::Execution;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_chain");
    let pg = TwoComponentModel::poisson_gamma();
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::new(name, "poisson-gamma/20k x 10"), &exec, |b, &exec| {
            b.iter(|| simulate_chain_with(&pg, black_box(9.0), 10, 20_000, 42, exec).unwrap())
        });
    }
    g.finish();
}

fn tuner(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimize_rosenthal");
    g.sample_size(10);
    let pg = TwoComponentModel::poisson_gamma();
    let drift = DriftCertificate::for_model(&pg).unwrap();
    let search = RosenthalSearch::default_for(&pg, &drift);
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::new(name, "poisson-gamma"), &exec, |b, &exec| {
            b.iter(|| optimize_rosenthal(&pg, &drift, &search, 0.0, Objective::MinMixingTime(0.01), exec).unwrap())
        });
    }
    g.finish();
}

fn subset_search(c: &mut Criterion) {
    let mut g = c.benchmark_group("subset_search");
    // 4 data points x 12 parameter points: 4095 candidate sets
    let nx = 4;
    let nt = 12;
    let raw: Vec<Vec<f64>> = (0..nx)
        .map(|i| (0..nt).map(|k| 1.0 + ((i * 7 + k * 3) % 5) as f64).collect())
        .collect();
    let total: f64 = raw.iter().flatten().sum();
    let p: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|v| v / total).collect()).collect();
    let fm = FiniteModel::from_joint((0..nx).map(|i| i as f64).collect(), (0..nt).map(|k| k as f64).collect(), &p)
        .unwrap();
    let model = TwoComponentModel::finite("bench", fm);
    let cube: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|i| (0..3).map(|j| (0..nt).map(|k| (1 + (i + 2 * j + k) % 4) as f64).collect()).collect())
        .collect();
    let mass: f64 = cube.iter().flatten().flatten().sum();
    let cube: Vec<Vec<Vec<f64>>> = cube
        .iter()
        .map(|a| a.iter().map(|r| r.iter().map(|v| v / mass).collect()).collect())
        .collect();
    let three = ThreeComponentModel::from_joint(&cube).unwrap();
    for (name, exec) in STRATEGIES {
        g.bench_with_input(BenchmarkId::new(name, "uniform/4x12"), &exec, |b, &exec| {
            b.iter(|| uniform_u_with(&model, &ThetaFamily::FiniteSubsets, exec).unwrap())
        });
        g.bench_with_input(BenchmarkId::new(name, "three-component/3x3x12"), &exec, |b, &exec| {
            b.iter(|| prop4_v_with(&three, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, simulation, tuner, subset_search);
criterion_main!(benches);
