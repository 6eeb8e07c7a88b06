use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_rational::Rational64;

use coind_bench::relators;
use coind_core::groups::{FreeProduct, Instance, WreathInstance, ZOrder};
use coind_core::irs::{coinduce_value, ratio, theta_lambda, AtomicIrs};
use coind_core::smallcanc::SymmetrizedSet;

fn small_cancellation(c: &mut Criterion) {
    let (words, _) = relators(102, 1);
    let set = SymmetrizedSet::new(&words).unwrap();
    let mut g = c.benchmark_group("small cancellation");
    g.sample_size(10);
    g.bench_function("check n=102 L=1", |b| b.iter(|| set.check(black_box(Rational64::new(1, 6)))));
    g.finish();
}

fn coinduce(c: &mut Criterion) {
    let w = WreathInstance::new(2, ZOrder::PositiveFirst).unwrap();
    let chain = AtomicIrs::chain(w.default_gamma0());
    let f = vec![w.default_gamma0()];
    c.bench_function("coinduce wreath chain", |b| b.iter(|| coinduce_value(&w, black_box(&chain), &f).unwrap()));

    let fp = FreeProduct::parse_factors("Z2,Z").unwrap();
    let target = fp.commutator(1, 1).unwrap();
    let theta = theta_lambda(target, &ratio(1, 3)).unwrap();
    let f = vec![fp.default_gamma0()];
    c.bench_function("coinduce free product lambda", |b| {
        b.iter(|| coinduce_value(&fp, black_box(&theta), &f).unwrap())
    });
}

criterion_group!(benches, small_cancellation, coinduce);
criterion_main!(benches);
