use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use hexmix::{cftp, extreme_tilings, make_domain, Chain, ChainConfig, LimitShape};

fn heat_bath(c: &mut Criterion) {
    let d = make_domain(32, 32, 32).unwrap();
    let cfg = ChainConfig::new(&d, 1).with_q(0.5);
    let (min, _) = extreme_tilings(&d);
    c.bench_function("chain advance N=32, t=1", |b| {
        b.iter_batched(
            || Chain::new(&cfg, &min).unwrap(),
            |mut chain| {
                chain.advance_to(1.0);
                black_box(chain.events())
            },
            BatchSize::LargeInput,
        )
    });
}

fn exact_sample(c: &mut Criterion) {
    let d = make_domain(8, 8, 8).unwrap();
    let mut seed = 0u64;
    c.bench_function("cftp N=8", |b| {
        b.iter(|| {
            seed += 1;
            black_box(cftp(&ChainConfig::new(&d, seed), 40).unwrap().epochs)
        })
    });
}

fn limit_height(c: &mut Criterion) {
    let shape = LimitShape::unit(0.3).unwrap();
    let pts: Vec<(f64, f64)> = (1..20).flat_map(|i| (1..20).map(move |j| (i as f64 / 10.0, j as f64 / 10.0))).collect();
    let inside: Vec<_> = pts.into_iter().filter(|&(x, y)| shape.params.contains(x, y)).collect();
    c.bench_function("limit-shape height, grid of points", |b| {
        b.iter(|| inside.iter().map(|&(x, y)| shape.height(x, y).unwrap()).sum::<f64>())
    });
}

criterion_group!(benches, heat_bath, exact_sample, limit_height);
criterion_main!(benches);
