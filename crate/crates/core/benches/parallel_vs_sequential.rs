use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use defosc::cli::{run, RunConfig};
use defosc::fock::{monomial_norms, FockBasis, FockMeasure, MeasureMode};
use defosc::geometry::KahlerStructure;
use defosc::observables::verify_algebra;
use defosc::quantize::verify_homomorphism;
use defosc::ModelParams;
use rayon::{ThreadPool, ThreadPoolBuilder};

fn params(n: usize, k: i64, h: (i64, i64)) -> Arc<ModelParams> {
    ModelParams::from_ints(n, k, 1, h.0, h.1).unwrap().shared()
}

fn pools() -> Vec<(&'static str, ThreadPool)> {
    vec![
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn bench_with_pools(c: &mut Criterion, name: &str, work: &(dyn Fn() + Sync)) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    for (label, pool) in pools() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &pool, |b, pool| b.iter(|| pool.install(work)));
    }
    group.finish();
}

fn fock(c: &mut Criterion) {
    let m = FockMeasure::new(&params(2, -4, (1, 3)), MeasureMode::AdjointCorrected);
    let basis = FockBasis::new(2, 6);
    bench_with_pools(c, "monomial_norms n=2 L=6", &|| {
        black_box(monomial_norms(&basis, &m, 1e-10).unwrap());
    });
}

fn homomorphism(c: &mut Criterion) {
    let ks = KahlerStructure::new(&params(2, -4, (1, 1)));
    bench_with_pools(c, "verify_homomorphism n=2", &|| {
        black_box(verify_homomorphism(&ks));
    });
}

fn algebra(c: &mut Criterion) {
    let p = params(2, 4, (1, 1));
    bench_with_pools(c, "verify_algebra n=2", &|| {
        black_box(verify_algebra(&p));
    });
}

fn all_suites(c: &mut Criterion) {
    let m = [("n", "2"), ("k", "-4"), ("hbar", "1/3"), ("cutoff", "4"), ("suites", "all")]
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let cfg = RunConfig::from_map(&m).unwrap();
    bench_with_pools(c, "cli all suites n=2", &|| {
        black_box(run(&cfg));
    });
}

criterion_group!(benches, fock, homomorphism, algebra, all_suites);
criterion_main!(benches);
