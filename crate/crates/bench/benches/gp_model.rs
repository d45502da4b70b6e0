use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;

use rhucrl_core::gp::{GpDynamicsModel, GpModelConfig, Kernel};
use rhucrl_core::types::{AdversaryAction, AgentAction, State, Transition};

fn fitted_model(n: usize) -> GpDynamicsModel {
    let kernel = Kernel::squared_exponential(4, 1.0, 1.0).unwrap();
    let config = GpModelConfig {
        max_active_points: n,
        ..GpModelConfig::plain(kernel, 0.1, 2)
    };
    let mut model = GpDynamicsModel::new(config, 2, 1, 1).unwrap();
    let batch: Vec<Transition> = (0..n)
        .map(|i| {
            let x = i as f64 * 0.01;
            Transition {
                state: State(vec![x.sin(), x.cos()]),
                agent_action: AgentAction(vec![(3.0 * x).sin()]),
                adversary_action: AdversaryAction(vec![(5.0 * x).cos()]),
                next_state: State(vec![(x + 0.01).sin(), (x + 0.01).cos()]),
                step_index: 0,
                episode_index: 1,
            }
        })
        .collect();
    model.fit(&batch).unwrap();
    model
}

fn bench_predict_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("gp_predict_batch");
    for &(n, b) in &[(200usize, 128usize), (400, 128), (400, 512)] {
        let model = fitted_model(n);
        let states = Array2::from_shape_fn((b, 2), |(i, j)| ((i + j) as f64 * 0.01).sin());
        let actions = Array2::from_shape_fn((b, 1), |(i, _)| (i as f64 * 0.02).cos());
        let adv = Array2::from_shape_fn((b, 1), |(i, _)| (i as f64 * 0.03).sin());
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_b{b}")),
            &(),
            |bench, _| {
                bench.iter(|| model.predict_batch(&states, &actions, &adv).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("gp_fit_refactorization");
    group.sample_size(10);
    for &n in &[200usize, 400] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, &n| {
            bench.iter(|| fitted_model(n));
        });
    }
    group.finish();
}

criterion_group!(benches, bench_predict_batch, bench_fit);
criterion_main!(benches);
