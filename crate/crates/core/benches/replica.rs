use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mps_magic::mps::random_mps;
use mps_magic::oracle::statevector_sre;
use mps_magic::par;
use mps_magic::replica::{sre, ReplicaVariant};

fn replica(c: &mut Criterion) {
    let mut g = c.benchmark_group("replica_n2");
    g.sample_size(10);
    for &chi in &[4usize, 6] {
        let psi = random_mps(24, chi, 1).unwrap();
        for variant in [ReplicaVariant::Conjugated, ReplicaVariant::SymmetricCompressed] {
            let id = format!("{}/chi{chi}", variant.name());
            g.bench_with_input(BenchmarkId::new("pool", &id), &psi, |b, psi| {
                b.iter(|| sre(psi, 2, variant).unwrap())
            });
            g.bench_with_input(BenchmarkId::new("sequential", &id), &psi, |b, psi| {
                b.iter(|| par::sequential(|| sre(psi, 2, variant).unwrap()))
            });
        }
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("statevector_sre");
    g.sample_size(10);
    for &sites in &[8usize, 10] {
        let sv = random_mps(sites, 4, 2).unwrap().to_statevector().unwrap();
        g.bench_with_input(BenchmarkId::new("pool", sites), &sv, |b, sv| {
            b.iter(|| statevector_sre(sv, 2).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sequential", sites), &sv, |b, sv| {
            b.iter(|| par::sequential(|| statevector_sre(sv, 2).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, replica, oracle);
criterion_main!(benches);
