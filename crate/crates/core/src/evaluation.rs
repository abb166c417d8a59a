//! Measurement harness: reconstruction distance at k = 0, k-buildings-ahead
//! predictive power at distance thresholds, noise sweeps and k-fold
//! cross-validation, reported as CSV.
//!
//! Query points start at the fifth building of a replay (event index 4), so
//! the opening buildings do not weigh on the metrics. At event `n` the query
//! time is that event's time, the observation is the noisy multiset of the
//! first `n + 1` buildings, and the prediction is compared with the true
//! tree after `n + 1 + k` buildings for every `k` the replay still allows.
//! Scores are averaged over the points of a replay, then over replays.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::inference::{posterior, InferenceError, Posterior};
use crate::learning::{fit_model, LearnError, Model, ModelConfig};
use crate::replay_io::{apply_noise, NoiseSpec, Replay, ReplayError};
use crate::seed;
use crate::techtree::{distance, BuildTree, BuildingId, ObservationVector, TechDag};

pub const DISTANCE_THRESHOLDS: [u32; 3] = [1, 2, 3];

/// Index of the first queried event (the fifth building).
pub const FIRST_QUERY_EVENT: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("cross-validation needs at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("match-up {matchup}: {replays} replays cannot fill {folds} folds")]
    CorpusTooSmall { matchup: String, replays: usize, folds: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Noise(#[from] ReplayError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { seed: 0, jobs: 1 }
    }
}

/// One evaluated prefix of one replay.
#[derive(Debug, Clone)]
pub struct QueryPoint {
    pub event_index: usize,
    pub time_s: u32,
    pub observation: ObservationVector,
    /// `None` when no model tree was compatible with the observation.
    pub posterior: Option<Posterior>,
}

/// Seed for the noise at one query point, from (global seed, noise level,
/// replay, event index).
pub fn point_seed(global: u64, p_missing: f64, replay: &Replay, event_index: usize) -> u64 {
    seed::derive(&[global, p_missing.to_bits(), replay.fingerprint(), event_index as u64])
}

/// Query points of `replay`, or an empty list if it has fewer than
/// `FIRST_QUERY_EVENT + 1` events.
pub fn query_points(model: &Model, replay: &Replay, noise: &NoiseSpec) -> Result<Vec<QueryPoint>, EvalError> {
    let t_max = model.config().t_max_s;
    let mut points = Vec::new();
    for n in FIRST_QUERY_EVENT..replay.len() {
        let truth = replay.tree_after(n + 1);
        let point_noise = NoiseSpec::new(noise.p_missing(), point_seed(noise.seed, noise.p_missing(), replay, n))?;
        let observation = apply_noise(&truth, &point_noise);
        let time_s = replay.events()[n].time_s.clamp(1, t_max);
        let posterior = match posterior(model, time_s, &observation) {
            Ok(p) => Some(p),
            Err(InferenceError::NoCompatibleTree(_)) => None,
            Err(e) => return Err(e.into()),
        };
        points.push(QueryPoint {
            event_index: n,
            time_s,
            observation,
            posterior,
        });
    }
    Ok(points)
}

/// Scores at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointScore {
    pub d_best: f64,
    pub d_mean: f64,
    pub k_best: Vec<u32>,
    pub k_mean: Vec<u32>,
    pub no_compatible: bool,
}

/// Largest `k` (0 if none) with `distances[k] <= threshold`.
fn horizon(distances: &[f64], threshold: u32) -> u32 {
    distances
        .iter()
        .rposition(|&d| d <= threshold as f64 + 1e-9)
        .unwrap_or(0) as u32
}

/// Scores a query point against every remaining horizon of `replay`.
///
/// Distances to successive true trees are updated one building at a time:
/// adding an instance of `b` to the truth moves `d(bt, truth)` by −1 when
/// `bt` already has more `b` than the truth and by +1 otherwise.
pub fn score_point(point: &QueryPoint, replay: &Replay, thresholds: &[u32]) -> PointScore {
    let n = point.event_index;
    let mut truth = replay.tree_after(n + 1);
    let upcoming: Vec<BuildingId> = replay.events()[n + 1..].iter().map(|e| e.building).collect();
    let (best_d, mean_d) = match &point.posterior {
        Some(p) => {
            let best = &p.entries()[0].0;
            let mut d_best = distance(best, &truth) as f64;
            let mut d_mean: f64 = p.entries().iter().map(|(bt, pr)| pr * distance(bt, &truth) as f64).sum();
            let mut best_d = vec![d_best];
            let mut mean_d = vec![d_mean];
            for &b in &upcoming {
                let have = truth.count(b);
                d_best += if best.count(b) > have { -1.0 } else { 1.0 };
                let ahead: f64 = p.entries().iter().filter(|(bt, _)| bt.count(b) > have).map(|(_, pr)| pr).sum();
                d_mean += 1.0 - 2.0 * ahead;
                truth.insert(b);
                best_d.push(d_best);
                mean_d.push(d_mean);
            }
            (best_d, mean_d)
        }
        None => {
            let d0 = truth.size() as f64;
            (vec![d0], vec![d0])
        }
    };
    let no_compatible = point.posterior.is_none();
    let ks = |ds: &[f64]| -> Vec<u32> {
        thresholds
            .iter()
            .map(|&thr| if no_compatible { 0 } else { horizon(ds, thr) })
            .collect()
    };
    PointScore {
        d_best: best_d[0],
        d_mean: mean_d[0],
        k_best: ks(&best_d),
        k_mean: ks(&mean_d),
        no_compatible,
    }
}

/// Averages over the query points of one replay.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayScore {
    pub d_best: f64,
    pub d_mean: f64,
    pub k_best: Vec<f64>,
    pub k_mean: Vec<f64>,
    pub n_points: usize,
    pub n_nocompat: usize,
}

pub fn score_replay(
    model: &Model,
    replay: &Replay,
    noise: &NoiseSpec,
    thresholds: &[u32],
) -> Result<Option<ReplayScore>, EvalError> {
    let points = query_points(model, replay, noise)?;
    if points.is_empty() {
        return Ok(None);
    }
    let scores: Vec<PointScore> = points.iter().map(|p| score_point(p, replay, thresholds)).collect();
    let m = scores.len() as f64;
    let mean_of = |f: &dyn Fn(&PointScore) -> f64| scores.iter().map(f).sum::<f64>() / m;
    Ok(Some(ReplayScore {
        d_best: mean_of(&|s| s.d_best),
        d_mean: mean_of(&|s| s.d_mean),
        k_best: (0..thresholds.len()).map(|i| mean_of(&|s| s.k_best[i] as f64)).collect(),
        k_mean: (0..thresholds.len()).map(|i| mean_of(&|s| s.k_mean[i] as f64)).collect(),
        n_points: scores.len(),
        n_nocompat: scores.iter().filter(|s| s.no_compatible).count(),
    }))
}

/// Metrics averaged over replays.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub d_best_k0: f64,
    pub d_mean_k0: f64,
    /// Indexed like [`DISTANCE_THRESHOLDS`].
    pub k_best: [f64; 3],
    pub k_mean: [f64; 3],
    pub n_points: usize,
    pub n_nocompat: usize,
    pub n_replays: usize,
    /// Replays too short to contain a query point.
    pub n_skipped: usize,
}

impl Summary {
    fn from_scores(scores: &[Option<ReplayScore>]) -> Summary {
        let scored: Vec<&ReplayScore> = scores.iter().flatten().collect();
        let r = scored.len() as f64;
        let mean_of = |f: &dyn Fn(&ReplayScore) -> f64| {
            if scored.is_empty() {
                f64::NAN
            } else {
                scored.iter().map(|s| f(s)).sum::<f64>() / r
            }
        };
        Summary {
            d_best_k0: mean_of(&|s| s.d_best),
            d_mean_k0: mean_of(&|s| s.d_mean),
            k_best: [0, 1, 2].map(|i| mean_of(&|s| s.k_best[i])),
            k_mean: [0, 1, 2].map(|i| mean_of(&|s| s.k_mean[i])),
            n_points: scored.iter().map(|s| s.n_points).sum(),
            n_nocompat: scored.iter().map(|s| s.n_nocompat).sum(),
            n_replays: scored.len(),
            n_skipped: scores.len() - scored.len(),
        }
    }

    fn columns(&self) -> [f64; 8] {
        [
            self.d_best_k0,
            self.d_mean_k0,
            self.k_best[0],
            self.k_mean[0],
            self.k_best[1],
            self.k_mean[1],
            self.k_best[2],
            self.k_mean[2],
        ]
    }
}

fn par_map<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    if jobs <= 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        // Indexed collect keeps input order whatever the scheduling.
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

fn score_replays(
    model: &Model,
    replays: &[Replay],
    noise: &NoiseSpec,
    jobs: usize,
) -> Result<Vec<Option<ReplayScore>>, EvalError> {
    par_map(jobs, replays, |r| score_replay(model, r, noise, &DISTANCE_THRESHOLDS))
        .into_iter()
        .collect()
}

pub fn summarize(model: &Model, replays: &[Replay], noise: &NoiseSpec, jobs: usize) -> Result<Summary, EvalError> {
    Ok(Summary::from_scores(&score_replays(model, replays, noise, jobs)?))
}

/// `(d_best, d_mean)` at k = 0.
pub fn reconstruction_metrics(model: &Model, replays: &[Replay], noise: &NoiseSpec) -> Result<(f64, f64), EvalError> {
    let s = summarize(model, replays, noise, 1)?;
    Ok((s.d_best_k0, s.d_mean_k0))
}

/// `(k_best, k_mean)` for one distance threshold.
pub fn predictive_power(
    model: &Model,
    replays: &[Replay],
    d_threshold: u32,
    noise: &NoiseSpec,
) -> Result<(f64, f64), EvalError> {
    let scores: Vec<Option<ReplayScore>> = replays
        .iter()
        .map(|r| score_replay(model, r, noise, &[d_threshold]))
        .collect::<Result<_, _>>()?;
    let scored: Vec<&ReplayScore> = scores.iter().flatten().collect();
    if scored.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let r = scored.len() as f64;
    Ok((
        scored.iter().map(|s| s.k_best[0]).sum::<f64>() / r,
        scored.iter().map(|s| s.k_mean[0]).sum::<f64>() / r,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fold {
    /// Not a cross-validation run.
    None,
    Index(usize),
    /// All held-out replays across folds.
    All,
}

impl std::fmt::Display for Fold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fold::None => f.write_str("-"),
            Fold::Index(i) => write!(f, "{i}"),
            Fold::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub matchup: String,
    pub noise: f64,
    pub fold: Fold,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_COLUMNS: &str = "matchup,noise,fold,d_best_k0,d_mean_k0,k_best_d1,k_mean_d1,k_best_d2,k_mean_d2,k_best_d3,k_mean_d3,n_points,n_nocompat";
pub const SUMMARY_COLUMNS: &str =
    "noise,measure,d_best_k0,d_mean_k0,k_best_d1,k_mean_d1,k_best_d2,k_mean_d2,k_best_d3,k_mean_d3";

const REPORT_NOTES: &str = "\
# k-ahead: query at event n (from the 5th building), compare with the true tree after n+k more buildings, k capped by replay length
# averaging: mean over query points of a replay, then mean over replays
# no-compatible query points score d(empty, truth) and k = 0 (counted in n_nocompat)
";

impl MetricsReport {
    pub fn extend(&mut self, other: MetricsReport) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_NOTES);
        out.push_str(REPORT_COLUMNS);
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{},{}", row.matchup, row.noise, row.fold);
            for v in row.summary.columns() {
                let _ = write!(out, ",{v:.6}");
            }
            let _ = writeln!(out, ",{},{}", row.summary.n_points, row.summary.n_nocompat);
        }
        out
    }

    /// Per noise level: one row per match-up (fold `all` rows when present),
    /// then the average, min and max over match-ups.
    pub fn to_summary_csv(&self) -> String {
        let mut out = String::from(REPORT_NOTES);
        out.push_str(SUMMARY_COLUMNS);
        out.push('\n');
        let mut levels: Vec<f64> = Vec::new();
        for row in &self.rows {
            if !levels.contains(&row.noise) {
                levels.push(row.noise);
            }
        }
        for level in levels {
            let rows: Vec<&ReportRow> = self
                .rows
                .iter()
                .filter(|r| r.noise == level && matches!(r.fold, Fold::All | Fold::None))
                .collect();
            let mut cols: Vec<[f64; 8]> = Vec::new();
            for r in &rows {
                let c = r.summary.columns();
                push_row(&mut out, level, &r.matchup, &c);
                cols.push(c);
            }
            if cols.is_empty() {
                continue;
            }
            let reduce = |f: &dyn Fn(&mut dyn Iterator<Item = f64>) -> f64| -> [f64; 8] {
                std::array::from_fn(|i| f(&mut cols.iter().map(|c| c[i])))
            };
            let n = cols.len() as f64;
            push_row(&mut out, level, "average", &reduce(&|it| it.sum::<f64>() / n));
            push_row(&mut out, level, "min", &reduce(&|it| it.fold(f64::INFINITY, f64::min)));
            push_row(&mut out, level, "max", &reduce(&|it| it.fold(f64::NEG_INFINITY, f64::max)));
        }
        out
    }
}

fn push_row(out: &mut String, noise: f64, label: &str, cols: &[f64; 8]) {
    let _ = write!(out, "{noise},{label}");
    for v in cols {
        let _ = write!(out, ",{v:.3}");
    }
    out.push('\n');
}

/// Evaluates one fitted model at each noise level. Each level draws its own
/// noise, since the level is part of every point seed.
pub fn noise_sweep(
    model: &Model,
    replays: &[Replay],
    levels: &[f64],
    options: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    let matchup = model.dag().race().to_string();
    let mut report = MetricsReport::default();
    for &p in levels {
        let noise = NoiseSpec::new(p, options.seed)?;
        report.rows.push(ReportRow {
            matchup: matchup.clone(),
            noise: p,
            fold: Fold::None,
            summary: summarize(model, replays, &noise, options.jobs)?,
        });
    }
    Ok(report)
}

/// One match-up's replays and the dag they are played on.
#[derive(Debug, Clone)]
pub struct Stratum {
    pub matchup: String,
    pub dag: Arc<TechDag>,
    pub replays: Vec<Replay>,
}

/// Fold of each replay after a seeded shuffle; fold sizes differ by at most
/// one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    fold_of
}

/// K-fold cross-validation per match-up: fit on every fold but one,
/// evaluate on the held-out fold. Emits a row per fold and an `all` row
/// over every held-out replay.
pub fn cross_validate(
    corpus: &[Stratum],
    folds: usize,
    noise_p: f64,
    fit_config: ModelConfig,
    options: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    if folds < 2 {
        return Err(EvalError::TooFewFolds(folds));
    }
    let noise = NoiseSpec::new(noise_p, options.seed)?;
    let mut report = MetricsReport::default();
    for stratum in corpus {
        let n = stratum.replays.len();
        if n < folds {
            return Err(EvalError::CorpusTooSmall {
                matchup: stratum.matchup.clone(),
                replays: n,
                folds,
            });
        }
        let fold_of = fold_assignment(n, folds, seed::derive(&[options.seed, seed::fingerprint(stratum.matchup.as_bytes())]));
        let mut held_out_scores = Vec::with_capacity(n);
        for f in 0..folds {
            let (train, test) = split_fold(&stratum.replays, &fold_of, f);
            let model = fit_model(&train, stratum.dag.clone(), fit_config)?;
            let scores = score_replays(&model, &test, &noise, options.jobs)?;
            report.rows.push(ReportRow {
                matchup: stratum.matchup.clone(),
                noise: noise_p,
                fold: Fold::Index(f),
                summary: Summary::from_scores(&scores),
            });
            held_out_scores.extend(scores);
        }
        report.rows.push(ReportRow {
            matchup: stratum.matchup.clone(),
            noise: noise_p,
            fold: Fold::All,
            summary: Summary::from_scores(&held_out_scores),
        });
    }
    Ok(report)
}

/// `(train, test)` for fold `f`; disjoint by construction.
pub fn split_fold(replays: &[Replay], fold_of: &[usize], f: usize) -> (Vec<Replay>, Vec<Replay>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (r, &fold) in replays.iter().zip(fold_of) {
        if fold == f { &mut test } else { &mut train }.push(r.clone());
    }
    (train, test)
}

/// Observation for a hypothetical query at event `n` without noise, handy
/// for reproducing a point by hand.
pub fn true_tree_at(replay: &Replay, n: usize) -> BuildTree {
    replay.tree_after(n + 1)
}
