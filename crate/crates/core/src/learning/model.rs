use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::stats::{GaussianPrior, GaussianStats, TimeGaussian};
use super::LearnError;
use crate::replay_io::{prefix_sequence, Replay};
use crate::techtree::{BuildTree, TechDag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorMode {
    #[default]
    Uniform,
    /// Proportional to `1 + ` the number of training games that ended on the
    /// tree.
    Histogram,
}

impl PriorMode {
    pub fn name(self) -> &'static str {
        match self {
            PriorMode::Uniform => "uniform",
            PriorMode::Histogram => "histogram",
        }
    }
}

impl fmt::Display for PriorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PriorMode {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(PriorMode::Uniform),
            "histogram" => Ok(PriorMode::Histogram),
            other => Err(LearnError::Config(format!("unknown prior mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Time horizon `P`: times live in `1..=t_max_s`.
    pub t_max_s: u32,
    pub sigma_min_s: f64,
    pub prior: GaussianPrior,
    pub prior_mode: PriorMode,
}

impl ModelConfig {
    pub const DEFAULT_T_MAX_S: u32 = 3600;
    pub const DEFAULT_SIGMA_MIN_S: f64 = 5.0;

    pub fn validate(&self) -> Result<(), LearnError> {
        if self.t_max_s < 1 {
            return Err(LearnError::Config("t_max must be at least 1".into()));
        }
        if !(self.sigma_min_s.is_finite() && self.sigma_min_s > 0.0) {
            return Err(LearnError::Config("sigma_min must be positive".into()));
        }
        if !(self.prior.n0.is_finite() && self.prior.n0 >= 0.0) {
            return Err(LearnError::Config("n0 must be non-negative".into()));
        }
        if !(self.prior.sigma0_s.is_finite() && self.prior.sigma0_s >= 0.0) {
            return Err(LearnError::Config("sigma0 must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            t_max_s: Self::DEFAULT_T_MAX_S,
            sigma_min_s: Self::DEFAULT_SIGMA_MIN_S,
            prior: GaussianPrior::default(),
            prior_mode: PriorMode::Uniform,
        }
    }
}

/// Where a tree's time distribution comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeParams {
    Learned(GaussianStats),
    /// Hand-specified parameters, used for synthetic generators and toy
    /// models. The variance floor still applies.
    Fixed(TimeGaussian),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelEntry {
    pub time: TimeParams,
    /// Training games that ended on this tree (histogram prior only).
    pub prior_count: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct ScoredTree {
    pub tree: BuildTree,
    pub gaussian: TimeGaussian,
    pub log_normalizer: f64,
    pub log_prior: f64,
}

/// The fitted build-tree model: one discretized Gaussian over game time per
/// tree in the learned domain, plus the tree prior.
///
/// Immutable once built. Per-tree normalizers are computed at construction
/// so queries never sum over the horizon.
#[derive(Debug, Clone)]
pub struct Model {
    dag: Arc<TechDag>,
    config: ModelConfig,
    entries: BTreeMap<BuildTree, ModelEntry>,
    scored: Vec<ScoredTree>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.dag == other.dag && self.config == other.config && self.entries == other.entries
    }
}

impl Model {
    pub fn new(
        dag: Arc<TechDag>,
        config: ModelConfig,
        entries: BTreeMap<BuildTree, ModelEntry>,
    ) -> Result<Model, LearnError> {
        config.validate()?;
        let mut scored = Vec::with_capacity(entries.len());
        for (tree, entry) in &entries {
            if !dag.is_valid_build_tree(tree)? {
                return Err(LearnError::InvalidTree(dag.format_tree(tree)));
            }
            let gaussian = match entry.time {
                TimeParams::Learned(stats) => {
                    if stats.prior() != config.prior {
                        return Err(LearnError::PriorMismatch);
                    }
                    let (mu, sigma) = stats.mean_and_sigma(config.sigma_min_s)?;
                    TimeGaussian { mu, sigma }
                }
                TimeParams::Fixed(g) => {
                    if !(g.mu.is_finite() && g.sigma.is_finite() && g.sigma > 0.0) {
                        return Err(LearnError::Config(format!(
                            "bad time parameters for {}",
                            dag.format_tree(tree)
                        )));
                    }
                    TimeGaussian {
                        mu: g.mu,
                        sigma: g.sigma.max(config.sigma_min_s),
                    }
                }
            };
            let log_prior = match config.prior_mode {
                PriorMode::Uniform => 0.0,
                PriorMode::Histogram => ((entry.prior_count + 1) as f64).ln(),
            };
            scored.push(ScoredTree {
                tree: tree.clone(),
                gaussian,
                log_normalizer: gaussian.log_normalizer(config.t_max_s),
                log_prior,
            });
        }
        Ok(Model {
            dag,
            config,
            entries,
            scored,
        })
    }

    /// Builds a model from hand-specified `(tree, μ, σ, prior_count)` rows.
    pub fn from_parameters<I>(dag: Arc<TechDag>, config: ModelConfig, rows: I) -> Result<Model, LearnError>
    where
        I: IntoIterator<Item = (BuildTree, f64, f64, u64)>,
    {
        let mut entries = BTreeMap::new();
        for (tree, mu, sigma, prior_count) in rows {
            let entry = ModelEntry {
                time: TimeParams::Fixed(TimeGaussian { mu, sigma }),
                prior_count,
            };
            if entries.insert(tree.clone(), entry).is_some() {
                return Err(LearnError::DuplicateTree(dag.format_tree(&tree)));
            }
        }
        Model::new(dag, config, entries)
    }

    pub fn dag(&self) -> &Arc<TechDag> {
        &self.dag
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn entries(&self) -> &BTreeMap<BuildTree, ModelEntry> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, bt: &BuildTree) -> bool {
        self.entries.contains_key(bt)
    }

    /// Trees in canonical order.
    pub fn trees(&self) -> impl Iterator<Item = &BuildTree> {
        self.scored.iter().map(|s| &s.tree)
    }

    pub(crate) fn scored(&self) -> &[ScoredTree] {
        &self.scored
    }

    fn scored_for(&self, bt: &BuildTree) -> Result<&ScoredTree, LearnError> {
        self.scored
            .binary_search_by(|s| s.tree.cmp(bt))
            .map(|i| &self.scored[i])
            .map_err(|_| LearnError::UnknownTree(self.dag.format_tree(bt)))
    }

    /// The (floored) time distribution of `bt`.
    pub fn time_distribution(&self, bt: &BuildTree) -> Result<TimeGaussian, LearnError> {
        self.scored_for(bt).map(|s| s.gaussian)
    }

    /// Unnormalized prior weight of `bt` (1 under the uniform prior).
    pub fn prior_weight(&self, bt: &BuildTree) -> Result<f64, LearnError> {
        self.scored_for(bt).map(|s| s.log_prior.exp())
    }

    /// `P(T = t | bt)`: the Gaussian kernel at `t` divided by its sum over
    /// `1..=t_max`.
    pub fn likelihood(&self, bt: &BuildTree, t_s: u32) -> Result<f64, LearnError> {
        self.log_likelihood(bt, t_s).map(f64::exp)
    }

    pub fn log_likelihood(&self, bt: &BuildTree, t_s: u32) -> Result<f64, LearnError> {
        if t_s < 1 || t_s > self.config.t_max_s {
            return Err(LearnError::TimeOutOfHorizon {
                t: t_s,
                t_max: self.config.t_max_s,
            });
        }
        let s = self.scored_for(bt)?;
        Ok(s.gaussian.log_kernel(t_s as f64) - s.log_normalizer)
    }

    /// Rough resident size of the model, excluding the shared dag.
    pub fn approx_heap_bytes(&self) -> usize {
        // BTreeMap nodes carry some slack beyond key + value; 1.5x covers it.
        let entry = std::mem::size_of::<BuildTree>() + std::mem::size_of::<ModelEntry>();
        let map = self.entries.len() * entry * 3 / 2;
        let scored = self.scored.capacity() * std::mem::size_of::<ScoredTree>();
        let trees: usize = self.scored.iter().map(|s| 2 * s.tree.approx_heap_bytes()).sum();
        map + scored + trees
    }
}

/// Per-tree accumulators over a shard of replays. Shards merge by key, which
/// is how fitting can be split across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStatistics {
    config: ModelConfig,
    race: crate::techtree::Race,
    entries: BTreeMap<BuildTree, (GaussianStats, u64)>,
    clamped: u64,
}

impl TreeStatistics {
    pub fn new(dag: &TechDag, config: ModelConfig) -> Result<Self, LearnError> {
        config.validate()?;
        Ok(TreeStatistics {
            config,
            race: dag.race(),
            entries: BTreeMap::new(),
            clamped: 0,
        })
    }

    /// Times outside `1..=t_max` clamped so far.
    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, bt: &BuildTree) -> Option<&GaussianStats> {
        self.entries.get(bt).map(|(s, _)| s)
    }

    pub fn accumulate(&mut self, replay: &Replay) -> Result<(), LearnError> {
        if replay.race() != self.race {
            return Err(LearnError::RaceMismatch {
                expected: self.race,
                found: replay.race(),
            });
        }
        let prefixes = prefix_sequence(replay);
        let track_terminal = self.config.prior_mode == PriorMode::Histogram;
        let last = prefixes.len().saturating_sub(1);
        for (i, (t, bt)) in prefixes.into_iter().enumerate() {
            let clamped = t.clamp(1, self.config.t_max_s);
            if clamped != t {
                self.clamped += 1;
            }
            let slot = self
                .entries
                .entry(bt)
                .or_insert_with(|| (GaussianStats::new(self.config.prior), 0));
            slot.0.observe(clamped);
            if track_terminal && i == last {
                slot.1 += 1;
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: TreeStatistics) -> Result<TreeStatistics, LearnError> {
        if self.config != other.config {
            return Err(LearnError::PriorMismatch);
        }
        if self.race != other.race {
            return Err(LearnError::RaceMismatch {
                expected: self.race,
                found: other.race,
            });
        }
        for (bt, (stats, terminal)) in other.entries {
            match self.entries.get_mut(&bt) {
                Some(slot) => {
                    slot.0 = slot.0.merge(&stats)?;
                    slot.1 += terminal;
                }
                None => {
                    self.entries.insert(bt, (stats, terminal));
                }
            }
        }
        self.clamped += other.clamped;
        Ok(self)
    }

    pub fn into_model(self, dag: Arc<TechDag>) -> Result<Model, LearnError> {
        if dag.race() != self.race {
            return Err(LearnError::RaceMismatch {
                expected: dag.race(),
                found: self.race,
            });
        }
        let entries = self
            .entries
            .into_iter()
            .map(|(bt, (stats, prior_count))| {
                (
                    bt,
                    ModelEntry {
                        time: TimeParams::Learned(stats),
                        prior_count,
                    },
                )
            })
            .collect();
        Model::new(dag, self.config, entries)
    }
}

/// Learns one time distribution per build tree reached in `replays`: every
/// prefix `(tᵢ, btᵢ)` of every replay is one sample of `T | btᵢ`.
pub fn fit_model(replays: &[Replay], dag: Arc<TechDag>, config: ModelConfig) -> Result<Model, LearnError> {
    if replays.is_empty() {
        return Err(LearnError::EmptyInput);
    }
    let mut stats = TreeStatistics::new(&dag, config)?;
    for r in replays {
        stats.accumulate(r)?;
    }
    stats.into_model(dag)
}
