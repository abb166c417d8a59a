//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use btpredict::{
    apply_noise, bundled_dag, generate_synthetic_replays, BuildTree, Model, ModelConfig, NoiseSpec, ObservationVector,
    Race, Replay,
};

/// Every no-duplicate Protoss tree, each expected one building per 40 s.
pub fn full_domain_model() -> Model {
    let dag = Arc::new(bundled_dag(Race::Protoss));
    let trees = dag.enumerate_build_trees(false).unwrap();
    let rows = trees.into_iter().map(|bt| {
        let size = bt.size() as f64;
        (bt, 20.0 + 40.0 * size, 15.0 + 3.0 * size, 0)
    });
    Model::from_parameters(dag, ModelConfig::default(), rows).unwrap()
}

pub fn synthetic_replays(model: &Model, n: usize) -> Vec<Replay> {
    generate_synthetic_replays(model, n, 0xbe7c).unwrap()
}

/// `(time, observation)` pairs: model trees with half the instances hidden.
pub fn queries(model: &Model, n: usize) -> Vec<(u32, ObservationVector)> {
    let trees: Vec<&BuildTree> = model.trees().collect();
    (0..n)
        .map(|i| {
            let bt = trees[(i * 7919) % trees.len()];
            let noise = NoiseSpec::new(0.5, i as u64).unwrap();
            (20 + 40 * bt.size(), apply_noise(bt, &noise))
        })
        .collect()
}
