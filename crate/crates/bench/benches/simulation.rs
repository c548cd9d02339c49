use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mintt::{builtin_model, simulate, true_effect, Query};

fn bench_simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_n1000");
    for id in [1u32, 4, 6] {
        let model = builtin_model(id).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(id), &model, |b, model| {
            b.iter(|| simulate(model, 1000, 7, 500).unwrap());
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let model = builtin_model(3).unwrap();
    let query = Query::new(0, 0, 2, vec![-0.5, 0.0, 0.5]);
    let mut group = c.benchmark_group("true_effect");
    group.sample_size(10);
    group.bench_function("model3 reps=5000", |b| {
        b.iter(|| true_effect(&model, &query, 5000, 11).unwrap());
    });
    group.finish();
}

criterion_group!(benches, bench_simulate, bench_oracle);
criterion_main!(benches);
