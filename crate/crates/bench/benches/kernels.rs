use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use folnerlab_core::density::{build_partition, verify_partition};
use folnerlab_core::dynamics::{sample_point, test_eps_independence, ConditioningSpec, Observable, SystemDescriptor};
use folnerlab_core::folner::{temperedness_ratios, FolnerSequence};
use folnerlab_core::hash::coordinate_hash;
use folnerlab_core::martingale::{azuma_harness, ergodic_average, WalkSpec};
use folnerlab_core::{FiniteSubset, GroupDescriptor, GroupElement};

fn hashing(c: &mut Criterion) {
    let g = GroupElement::new(&[3, -7]).unwrap();
    c.bench_function("coordinate_hash", |b| b.iter(|| coordinate_hash(black_box(42), black_box(&g))));
}

fn averages(c: &mut Criterion) {
    let z = GroupDescriptor::integer_line();
    let sys = SystemDescriptor::fair_coin(z);
    let f = Observable::coordinate_value(&sys).unwrap();
    let h = FiniteSubset::interval(z, 0, 4096).unwrap();
    c.bench_function("ergodic_average_4096", |b| {
        b.iter(|| ergodic_average(&sample_point(&sys, black_box(9)), &f, &h).unwrap())
    });
}

fn temperedness(c: &mut Criterion) {
    let seq = FolnerSequence::default_jump();
    c.bench_function("temperedness_jump_8", |b| b.iter(|| temperedness_ratios(&seq, black_box(8)).unwrap()));
}

fn partition(c: &mut Criterion) {
    let g2 = GroupDescriptor::lattice(2).unwrap();
    let k = FiniteSubset::cube(g2, 0, 3).unwrap();
    let p = build_partition(&k, 0.01, g2).unwrap();
    let seq = FolnerSequence::boxes(2).unwrap();
    c.bench_function("verify_partition_z2_r20", |b| {
        b.iter(|| verify_partition(&p, &k, &seq, 0.01, black_box(20), 12).unwrap())
    });
}

fn independence(c: &mut Criterion) {
    let z = GroupDescriptor::integer_line();
    let sys = SystemDescriptor::fair_coin(z);
    let w = FiniteSubset::from_scalars(z, &[0, 1, 3]).unwrap();
    let f = Observable::all_equal(&sys, w, 1).unwrap();
    let k = FiniteSubset::from_scalars(z, &[0]).unwrap();
    let spec = ConditioningSpec::default();
    c.bench_function("eps_independence_w3", |b| {
        b.iter(|| test_eps_independence(&f, &k, 0.1, &spec).unwrap())
    });
}

fn azuma(c: &mut Criterion) {
    c.bench_function("azuma_400x10000", |b| {
        b.iter(|| azuma_harness(WalkSpec { steps: 400 }, 10_000, &[40.0], black_box(1)).unwrap())
    });
}

criterion_group!(benches, hashing, averages, temperedness, partition, independence, azuma);
criterion_main!(benches);
