use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use endowlab::cohen::CohenPoset;
use endowlab::endowment::{dow_construct, verify_weak_endowment, DowFamily};
use endowlab::fixtures;
use endowlab::generate::generate_loaded;
use endowlab::topology::SelectionMode;
use endowlab::{run_preservation, Antichain, Bounds, Scenario};

fn dow(c: &mut Criterion) {
    let bounds = Bounds::default();
    let mut group = c.benchmark_group("dow_construct");
    for d in 1..=3 {
        let cohen = CohenPoset::new(d, &bounds).unwrap();
        let a = Antichain::from_labels(cohen.poset(), &["0:0", "0:1"]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| dow_construct(&cohen, black_box(&a), 3).unwrap())
        });
    }
    group.finish();
}

fn antichains(c: &mut Criterion) {
    let bounds = Bounds::default();
    let cohen = CohenPoset::new(2, &bounds).unwrap();
    c.bench_function("maximal_antichains/cohen_2", |b| {
        b.iter(|| cohen.poset().maximal_antichains(black_box(cohen.poset().len())).unwrap())
    });
    let all = cohen.poset().maximal_antichains(cohen.poset().len()).unwrap();
    c.bench_function("verify_weak_endowment/cohen_2_n2", |b| {
        b.iter(|| verify_weak_endowment(cohen.poset(), cohen.stratification(), &DowFamily(&cohen), 2, black_box(&all)))
    });
}

fn preservation(c: &mut Criterion) {
    let bounds = Bounds::default();
    let split = Scenario::load(&fixtures::cohen_split_scenario(SelectionMode::Rothberger), &bounds).unwrap();
    c.bench_function("run_preservation/cohen_split", |b| {
        b.iter(|| run_preservation(black_box(&split), SelectionMode::Rothberger).unwrap())
    });
    let mut group = c.benchmark_group("run_preservation/generated");
    for mode in [SelectionMode::Rothberger, SelectionMode::Menger, SelectionMode::SelectiveScreenability] {
        let s = generate_loaded(11, &bounds, mode).unwrap();
        group.bench_function(mode.as_str(), |b| b.iter(|| run_preservation(black_box(&s), mode)));
    }
    group.finish();
}

criterion_group!(benches, dow, antichains, preservation);
criterion_main!(benches);
