//! Throughput of the data-parallel sections against the sequential
//! fallback.
//!
//! The two hot paths that fan out over `par::map_indexed` — pair synthesis
//! and per-example gradients — are driven here through both `map_indexed`
//! (rayon when the `parallel` feature is on, plain loop otherwise) and
//! `map_indexed_seq`. On a multi-core machine with the default features the
//! first should scale with cores while the second stays flat; outputs are
//! bit-identical either way, which `identical_outputs` spot-checks.

use criterion::{criterion_group, criterion_main, Criterion};

use apde::dataset::generate_pair;
use apde::flow::assemble_input;
use apde::mask::{apply_mask, make_mask, Mask, MaskPolicy};
use apde::model::{
    init_network, loss_and_grad, ModelDescriptor, NetworkParams, PaddingMode, TrainExample,
};
use apde::oracle::{build_prior, default_jitter};
use apde::pde::PdeSpec;
use apde::Field;

const PAIR_COUNT: usize = 8;
const GRAD_BATCH: usize = 16;

fn pair_workload(seq: bool) -> Vec<f64> {
    let spec = PdeSpec::poisson(32);
    let run = |i: usize| {
        let pair = generate_pair(&spec, 42, i as u64).unwrap();
        pair.solution.as_slice().iter().sum::<f64>()
    };
    if seq {
        apde::par::map_indexed_seq(PAIR_COUNT, run)
    } else {
        apde::par::map_indexed(PAIR_COUNT, run)
    }
}

struct GradCase {
    coeff: Field,
    sol: Field,
    mask: Mask,
}

fn gradient_fixture() -> (NetworkParams, Vec<GradCase>) {
    let n = 16;
    let prior = build_prior(n, 0.3, 1.0, default_jitter(1.0)).unwrap();
    let descriptor = ModelDescriptor::conv(8, 1, 2, PaddingMode::Reflect);
    let params = init_network(&descriptor, 7).unwrap();
    let cases = (0..GRAD_BATCH)
        .map(|i| GradCase {
            coeff: prior.sample(2 * i as u64),
            sol: prior.sample(2 * i as u64 + 1),
            mask: make_mask(n, &MaskPolicy::Random { keep_fraction: 0.3 }, i as u64).unwrap(),
        })
        .collect();
    (params, cases)
}

fn examples(cases: &[GradCase]) -> Vec<TrainExample<'_>> {
    cases
        .iter()
        .map(|case| {
            let cond_a = apply_mask(&case.coeff, &case.mask);
            let cond_u = apply_mask(&case.sol, &case.mask);
            TrainExample {
                input: assemble_input(&case.coeff, &case.sol, &cond_a, &cond_u, 0.5, true, false)
                    .unwrap(),
                target_coeff: &case.coeff,
                target_sol: &case.sol,
                observe_coeff: &case.mask,
                observe_sol: &case.mask,
            }
        })
        .collect()
}

fn gradient_workload(params: &NetworkParams, batch: &[TrainExample<'_>], seq: bool) -> Vec<f64> {
    let run = |i: usize| loss_and_grad(params, &batch[i..i + 1]).unwrap().0;
    if seq {
        apde::par::map_indexed_seq(batch.len(), run)
    } else {
        apde::par::map_indexed(batch.len(), run)
    }
}

fn bench_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("pair_synthesis");
    group.sample_size(10);
    group.bench_function("map_indexed", |b| b.iter(|| pair_workload(false)));
    group.bench_function("map_indexed_seq", |b| b.iter(|| pair_workload(true)));
    group.finish();
}

fn bench_gradients(c: &mut Criterion) {
    let (params, cases) = gradient_fixture();
    let batch = examples(&cases);
    let mut group = c.benchmark_group("batch_gradients");
    group.sample_size(10);
    group.bench_function("map_indexed", |b| {
        b.iter(|| gradient_workload(&params, &batch, false))
    });
    group.bench_function("map_indexed_seq", |b| {
        b.iter(|| gradient_workload(&params, &batch, true))
    });
    group.finish();
}

fn identical_outputs(c: &mut Criterion) {
    assert_eq!(pair_workload(false), pair_workload(true));
    let (params, cases) = gradient_fixture();
    let batch = examples(&cases);
    assert_eq!(
        gradient_workload(&params, &batch, false),
        gradient_workload(&params, &batch, true)
    );
    // Not a measurement; keeps the determinism check inside the bench build.
    let _ = c;
}

criterion_group!(benches, bench_pairs, bench_gradients, identical_outputs);
criterion_main!(benches);
