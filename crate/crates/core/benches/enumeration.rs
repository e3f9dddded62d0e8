use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use modlie::cli::semidirect_mixed;
use modlie::maybe_rayon::{map_indices, map_indices_seq};
use modlie::rng::SplitMix64;
use modlie::semidirect::{semi_is_nilpotent, SemidirectAlgebra};
use modlie::zassenhaus::{e_filtration, separation_on, zass_e_algebra};
use modlie::FieldSpec;

fn separation(c: &mut Criterion) {
    let z = zass_e_algebra(5, 2, 2).unwrap();
    let filt = e_filtration(&z).unwrap();
    let mut g = c.benchmark_group("separation_f25");
    for (name, seq) in [("parallel", false), ("sequential", true)] {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| separation_on(&z, &filt, seq).unwrap())
        });
    }
    g.finish();
}

fn semidirect_batch(c: &mut Criterion) {
    let l = SemidirectAlgebra::sl2_o1(&FieldSpec::new(5, 1).unwrap()).unwrap();
    let elems: Vec<_> = (0..256)
        .map(|k| semidirect_mixed(&l, &mut SplitMix64::substream(7, k)).unwrap())
        .collect();
    let mut g = c.benchmark_group("semidirect_nilpotency_256");
    g.bench_function("parallel", |b| {
        b.iter(|| map_indices(elems.len(), |i| semi_is_nilpotent(&l, &elems[i]).unwrap().direct))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| map_indices_seq(elems.len(), |i| semi_is_nilpotent(&l, &elems[i]).unwrap().direct))
    });
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(10));
    targets = separation, semidirect_batch
}
criterion_main!(benches);
