//! Sequential against data-parallel evaluation of the EEP battery and of
//! a batch of independent right-hand-side evaluations.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eerds_core::exec::Execution;
use eerds_core::scenario::{reference_scenarios, Setup};
use eerds_core::simulator::rhs;
use eerds_core::verifier::{eep_battery, random_admissible_state, DEFAULT_MARGIN};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn setups(cells: usize) -> Vec<Setup> {
    reference_scenarios().iter().map(|s| s.setup(cells).unwrap()).collect()
}

fn battery(c: &mut Criterion) {
    let mut group = c.benchmark_group("eep_battery");
    group.sample_size(10);
    for cells in [64, 256] {
        let su = setups(cells);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, cells), &su, |b, su| {
                b.iter(|| eep_battery(black_box(su), 200, 0, 0.5, DEFAULT_MARGIN, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn rhs_batch(c: &mut Criterion) {
    let su = &setups(512)[0];
    let states: Vec<_> = (0..64)
        .map(|k| random_admissible_state(k, &su.grid, &su.model, &su.bounds, &su.equilibrium, 0.5).unwrap())
        .collect();
    let mut group = c.benchmark_group("rhs_batch");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| exec.map(states.len(), |i| rhs(black_box(&states[i]), &su.model, &su.grid).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, battery, rhs_batch);
criterion_main!(benches);
