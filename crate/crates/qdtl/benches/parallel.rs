//! Sequential vs. parallel falsification over the bundled braking example.

use criterion::{criterion_group, criterion_main, Criterion};
use qdtl::parser::parse_theory;
use qdtl::sim::falsify::{falsify, FalsifyCfg};

fn bench_falsify(c: &mut Criterion) {
    let dir = qdtl::corpus::corpus_dir();
    let src = std::fs::read_to_string(dir.join("example1.qdtl")).unwrap();
    let theory = parse_theory(&src).unwrap();
    let phi = theory.conjecture("example1").unwrap();

    let mut group = c.benchmark_group("falsify-example1");
    group.sample_size(10);
    for jobs in [1usize, 4] {
        let cfg = FalsifyCfg { samples: 40, seed: 0, jobs, ..FalsifyCfg::default() };
        group.bench_function(format!("jobs-{jobs}"), |b| {
            b.iter(|| falsify(&theory.sig, phi, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_falsify);
criterion_main!(benches);
