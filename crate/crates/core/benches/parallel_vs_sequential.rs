use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fedkan::data::{partition_iid, synth_dataset};
use fedkan::fed::{build_clients, run_round, RoundConfig};
use fedkan::layer::{layer_backward_exec, layer_forward_exec, layer_predict};
use fedkan::model::evaluate;
use fedkan::optim::AdamWConfig;
use fedkan::{Exec, Matrix, ModelState, MotherWavelet};

const MODES: [Exec; 2] = [Exec::Sequential, Exec::Parallel];

fn input(batch: usize, dim: usize) -> Matrix {
    Matrix::from_vec(batch, dim, (0..batch * dim).map(|i| ((i * 37) % 255) as f64 / 255.0).collect()).unwrap()
}

fn layer_kernels(c: &mut Criterion) {
    let model = ModelState::new(&[784, 64, 10], MotherWavelet::mexican_hat(1.0).unwrap(), 0).unwrap();
    let layer = &model.layers()[0];
    let x = input(64, 784);
    let grad_y = Matrix::filled(64, 64, 0.01);
    let mut group = c.benchmark_group("layer_784x64_batch64");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::new("predict", format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| layer_predict(layer, black_box(&x), e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("forward_backward", format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| {
                let (_, cache) = layer_forward_exec(layer, black_box(&x), e).unwrap();
                layer_backward_exec(layer, cache, &grad_y, true, e).unwrap()
            })
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let data = synth_dataset(512, 64, 10, 1).unwrap();
    let model = ModelState::new(&[64, 32, 10], MotherWavelet::morlet(5.0).unwrap(), 0).unwrap();
    let mut group = c.benchmark_group("evaluate_512");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| evaluate(&model, data.features(), data.labels(), e).unwrap())
        });
    }
    group.finish();
}

fn federated_round(c: &mut Criterion) {
    let train = synth_dataset(800, 16, 4, 2).unwrap();
    let test = synth_dataset(200, 16, 4, 2).unwrap();
    let initial = ModelState::new(&[16, 16, 4], MotherWavelet::dog(), 0).unwrap();
    let plan = partition_iid(train.len(), 8, 0).unwrap();
    let cfg = RoundConfig {
        batch_size: 32,
        eval_train: false,
        ..Default::default()
    };
    let global = initial.flatten();
    let mut group = c.benchmark_group("federated_round_8_clients");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| {
                let mut clients = build_clients(&plan, &train, &initial, AdamWConfig::default()).unwrap();
                run_round(&mut clients, &train, &test, &global, &cfg, 0, e).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, layer_kernels, evaluation, federated_round);
criterion_main!(benches);
