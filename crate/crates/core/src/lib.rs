//! Bayesian build-tree prediction for real-time strategy games.
//!
//! The model learns, from replay logs, when each build tree (a
//! prerequisite-closed multiset of buildings) tends to be reached, then
//! answers `P(build tree | game time, partial observations)` exactly by
//! enumerating the learned tree domain.
//!
//! ```
//! use std::sync::Arc;
//! use btpredict::{fit_model, load_tech_dag, parse_replay_log, posterior, most_probable, ModelConfig};
//!
//! let dag = Arc::new(load_tech_dag("race protoss\nbuilding pylon\nbuilding gate requires pylon\n").unwrap());
//! let replays = parse_replay_log("g1,1,30,pylon\ng1,1,75,gate\n", &dag).unwrap();
//! let model = fit_model(&replays, dag.clone(), ModelConfig::default()).unwrap();
//! let obs = dag.parse_observation("pylon").unwrap();
//! let post = posterior(&model, 200, &obs).unwrap();
//! assert_eq!(dag.format_tree(most_probable(&post)), "pylon+gate");
//! ```

pub mod evaluation;
pub mod inference;
pub mod learning;
pub mod replay_io;
pub mod seed;
pub mod techtree;

pub use evaluation::{
    cross_validate, noise_sweep, predictive_power, reconstruction_metrics, EvalError, EvalOptions, Fold, MetricsReport,
    ReportRow, Stratum, Summary,
};
pub use inference::{expected_distance, most_probable, posterior, reconstruct, InferenceError, Posterior};
pub use learning::{
    fit_model, load_model, load_model_embedded, save_model, GaussianPrior, GaussianStats, LearnError, Model, ModelConfig,
    ModelFileError, PriorMode,
};
pub use replay_io::{
    apply_noise, generate_synthetic_replays, observation_at, parse_replay_log, prefix_sequence, write_replay_log,
    BuildEvent, NoiseSpec, Replay, ReplayError,
};
pub use techtree::{
    bundled_dag, compatible, distance, load_tech_dag, BuildTree, BuildingId, BuildingType, DagError, ObservationVector,
    Race, TechDag,
};
