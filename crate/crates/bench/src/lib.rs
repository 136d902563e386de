//! Shared workloads for the benchmarks in `benches/`.

use vos_core::experiment::{ExperimentConfig, Input};
use vos_core::{ExactState, MethodKind, StreamElement};

/// A synthetic stream with one deletion event halfway, and the exact set
/// size of each element's user after it.
pub fn workload(edges: usize, seed: u64) -> (Vec<StreamElement>, Vec<u64>) {
    let cfg = ExperimentConfig {
        input: Input::Synthetic {
            users: 500,
            items: 20_000,
            edges,
        },
        methods: vec![MethodKind::Vos],
        q: 0.0,
        d: 0.5,
        delete_after: vec![edges / 2],
        seed,
        ..ExperimentConfig::default()
    };
    let stream = cfg.build_stream().expect("valid workload");
    let mut oracle = ExactState::default();
    let sizes = stream
        .iter()
        .map(|e| oracle.apply(e).expect("feasible stream") as u64)
        .collect();
    (stream, sizes)
}
