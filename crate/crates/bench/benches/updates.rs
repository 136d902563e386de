use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use vos_bench::workload;
use vos_core::method::{build_method, MethodParams};
use vos_core::{HashConfig, MethodKind, VosState};

const M: u64 = 1 << 22;

fn update_cost(c: &mut Criterion) {
    let (stream, sizes) = workload(20_000, 1);
    let mut group = c.benchmark_group("update");
    group.throughput(Throughput::Elements(stream.len() as u64));
    group.sample_size(10);
    for kind in MethodKind::ALL {
        for k in [16, 256, 4096] {
            let params = MethodParams {
                k,
                k_vos: k,
                m: M,
                seed: 7,
            };
            group.bench_with_input(BenchmarkId::new(kind.name(), k), &k, |b, _| {
                b.iter(|| {
                    let mut method = build_method(kind, &params).unwrap();
                    for (e, &n) in stream.iter().zip(&sizes) {
                        method.update(black_box(e), n).unwrap();
                    }
                    method
                })
            });
        }
    }
    group.finish();
}

fn estimate_cost(c: &mut Criterion) {
    let (stream, _) = workload(20_000, 2);
    let mut group = c.benchmark_group("estimate_pair");
    for k in [256, 4096, 32_768] {
        let mut state = VosState::new(HashConfig::new(3, k, M, 1 << 32).unwrap());
        for e in &stream {
            state.update(e).unwrap();
        }
        let (u, v) = (
            stream[0].user,
            stream.iter().find(|e| e.user != stream[0].user).unwrap().user,
        );
        group.bench_with_input(BenchmarkId::new("vos", k), &k, |b, _| {
            b.iter(|| state.estimate_pair(black_box(u), black_box(v)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, update_cost, estimate_cost);
criterion_main!(benches);
