//! Parallel-vs-sequential throughput on the two data-parallel kernels:
//! edge tabulation over a full excitation graph and row-parallel H psi.
//!
//! With `--no-default-features` the parallel entry points degrade to the
//! sequential ones, so both groups still compile and the two curves
//! coincide; the interesting numbers come from the default build.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ccgraph::graph::{ExcitationGraph, GraphSpec};
use ccgraph::ham::Hamiltonian;
use ccgraph::integrals::hubbard_chain;
use ccgraph::wavefn::Wavefn;
use ccgraph::{subsets, Det};

/// K = 14 spin orbitals, 4 electrons: 1001 vertices, ~1M candidate edges.
fn edge_tabulation(c: &mut Criterion) {
    let g = ExcitationGraph::build(14, &[Det(0b1111)], GraphSpec::Full).unwrap();

    let mut group = c.benchmark_group("edge_rank_table");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(g.edge_rank_table(0)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(g.edge_rank_table_seq(0)))
    });
    group.finish();
}

/// Half-filled 6-site chain, psi spread over every 6-electron determinant.
fn hamiltonian_apply(c: &mut Criterion) {
    let h = Hamiltonian::new(hubbard_chain(6, 1.0, 2.0));
    let psi: Wavefn = subsets(12, 6)
        .enumerate()
        .map(|(i, d)| (d, 1.0 / (1.0 + i as f64)))
        .collect();

    let mut group = c.benchmark_group("hamiltonian_apply");
    group.bench_function("parallel", |b| b.iter(|| black_box(h.apply(&psi))));
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(h.apply_seq(&psi)))
    });
    group.finish();
}

criterion_group!(benches, edge_tabulation, hamiltonian_apply);
criterion_main!(benches);
