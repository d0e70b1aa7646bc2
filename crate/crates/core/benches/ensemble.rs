use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use memlang_core::ensemble::{run_ensemble_with, EnsembleConfig};
use memlang_core::integrators::{Integrator, IntegratorConfig, IntegratorKind, Potential};
use memlang_core::{CutoffKind, Execution, KernelSpec};

fn spec() -> KernelSpec {
    KernelSpec::new(CutoffKind::Lorentzian, 1.0, 5.0, 1.0, 1.0).unwrap()
}

fn sequential_vs_parallel(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    let config = EnsembleConfig::new(
        IntegratorConfig::new(spec(), Potential::harmonic(1.0), IntegratorKind::OuEmbedding, 0.01, 1000),
        512,
        1,
    );
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| b.iter(|| run_ensemble_with(&config, exec).unwrap()));
    }
    group.finish();
}

fn memory_cost(c: &mut Criterion) {
    let mut group = c.benchmark_group("single_trajectory");
    group.sample_size(10);
    for n_steps in [500usize, 1000, 2000] {
        for kind in [IntegratorKind::FullMemory, IntegratorKind::OuEmbedding] {
            let it = Integrator::new(IntegratorConfig::new(spec(), Potential::free(), kind, 0.01, n_steps)).unwrap();
            let noise = it.noise_generator().unwrap().sample(7, 0);
            group.bench_with_input(BenchmarkId::new(kind.to_string(), n_steps), &noise, |b, noise| {
                b.iter(|| it.run(0.0, 0.0, &noise.values, |_| {}).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sequential_vs_parallel, memory_cost);
criterion_main!(benches);
