//! Parameter learning: one discretized-Gaussian time distribution per build
//! tree, fitted from replay prefixes through order-independent sufficient
//! statistics, plus the model file format.

mod io;
mod model;
mod stats;

pub use io::{load_model, load_model_embedded, save_model, ModelFileError, MODEL_MAGIC, MODEL_VERSION};
pub use model::{fit_model, Model, ModelConfig, ModelEntry, PriorMode, TimeParams, TreeStatistics};
pub use stats::{GaussianPrior, GaussianStats, TimeGaussian};

use thiserror::Error;

use crate::techtree::{DagError, Race};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no samples: cannot estimate a time distribution")]
    NoEstimate,
    #[error("statistics were accumulated under different prior settings")]
    PriorMismatch,
    #[error("no replays to learn from")]
    EmptyInput,
    #[error("replay race {found} does not match dag race {expected}")]
    RaceMismatch { expected: Race, found: Race },
    #[error("build tree `{0}` is not in the model")]
    UnknownTree(String),
    #[error("`{0}` is not a valid build tree for this dag")]
    InvalidTree(String),
    #[error("build tree `{0}` appears twice")]
    DuplicateTree(String),
    #[error("time {t} outside the model horizon 1..={t_max}")]
    TimeOutOfHorizon { t: u32, t_max: u32 },
    #[error("inconsistent sufficient statistics (n={n}, sum={sum_t}, sum2={sum_t2})")]
    InconsistentStats { n: u64, sum_t: u64, sum_t2: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dag(#[from] DagError),
}
