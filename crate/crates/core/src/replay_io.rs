//! Replay event logs: parsing, prefix extraction, missing-observation noise,
//! and synthetic replay generation from a model.
//!
//! Log format (UTF-8 CSV, one event per line):
//!
//! ```text
//! # optional comments
//! game_id,player_id,time_s,building_name
//! g001,1,30,pylon
//! g001,1,75,gateway
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::learning::{Model, TimeGaussian};
use crate::seed;
use crate::techtree::{BuildTree, BuildingId, ObservationVector, Race, TechDag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown building `{name}`")]
    UnknownBuilding { line: usize, name: String },
    #[error("noise probability {0} is outside [0, 1]")]
    NoiseRange(String),
    #[error("cannot generate from an empty model")]
    EmptyModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildEvent {
    pub player: u8,
    pub time_s: u32,
    pub building: BuildingId,
}

/// One player's building events in one game, time-ordered, with every
/// running prefix prerequisite-closed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    game_id: String,
    player: u8,
    race: Race,
    events: Vec<BuildEvent>,
    repairs: u32,
    reordered: u32,
    dropped_over_cap: u32,
}

impl Replay {
    /// Sorts `(time, building)` events stably by time, then walks them in
    /// order: a building whose prerequisites are missing gets the missing
    /// chain inserted at its own timestamp (each insertion is one repair),
    /// and an instance beyond the building's cap is dropped.
    pub fn new(game_id: impl Into<String>, player: u8, dag: &TechDag, raw: Vec<(u32, BuildingId)>) -> Replay {
        let reordered = raw.windows(2).filter(|w| w[1].0 < w[0].0).count() as u32;
        let mut raw = raw;
        raw.sort_by_key(|&(t, _)| t);
        let mut counts = vec![0u8; dag.len()];
        let mut events = Vec::with_capacity(raw.len());
        let mut repairs = 0;
        let mut dropped_over_cap = 0;
        for (t, b) in raw {
            if counts[b.index()] >= dag.buildings()[b.index()].max_count {
                dropped_over_cap += 1;
                continue;
            }
            repairs += insert_missing_prerequisites(dag, b, t, player, &mut counts, &mut events);
            counts[b.index()] += 1;
            events.push(BuildEvent {
                player,
                time_s: t,
                building: b,
            });
        }
        Replay {
            game_id: game_id.into(),
            player,
            race: dag.race(),
            events,
            repairs,
            reordered,
            dropped_over_cap,
        }
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn player(&self) -> u8 {
        self.player
    }

    pub fn race(&self) -> Race {
        self.race
    }

    pub fn events(&self) -> &[BuildEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Buildings inserted to restore prerequisite closure.
    pub fn repairs(&self) -> u32 {
        self.repairs
    }

    /// Input events that appeared earlier than their predecessor.
    pub fn reordered(&self) -> u32 {
        self.reordered
    }

    pub fn dropped_over_cap(&self) -> u32 {
        self.dropped_over_cap
    }

    /// Stable across runs and platforms; used to derive per-replay seeds.
    pub fn fingerprint(&self) -> u64 {
        let mut key = self.game_id.as_bytes().to_vec();
        key.push(0);
        key.push(self.player);
        seed::fingerprint(&key)
    }

    /// The multiset of the first `n` buildings.
    pub fn tree_after(&self, n: usize) -> BuildTree {
        BuildTree::from_ids(self.events[..n.min(self.events.len())].iter().map(|e| e.building))
    }
}

fn insert_missing_prerequisites(
    dag: &TechDag,
    b: BuildingId,
    t: u32,
    player: u8,
    counts: &mut [u8],
    events: &mut Vec<BuildEvent>,
) -> u32 {
    let mut inserted = 0;
    for &p in &dag.buildings()[b.index()].prerequisites {
        if counts[p.index()] == 0 {
            inserted += insert_missing_prerequisites(dag, p, t, player, counts, events);
            counts[p.index()] = 1;
            events.push(BuildEvent {
                player,
                time_s: t,
                building: p,
            });
            inserted += 1;
        }
    }
    inserted
}

/// Noise level and seed for missing-observation injection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    p_missing: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(p_missing: f64, seed: u64) -> Result<Self, ReplayError> {
        if !(0.0..=1.0).contains(&p_missing) {
            return Err(ReplayError::NoiseRange(p_missing.to_string()));
        }
        Ok(NoiseSpec { p_missing, seed })
    }

    pub fn none() -> Self {
        NoiseSpec {
            p_missing: 0.0,
            seed: 0,
        }
    }

    pub fn p_missing(&self) -> f64 {
        self.p_missing
    }
}

/// Parses a replay log into one [`Replay`] per `(game, player)`, in order of
/// first appearance.
pub fn parse_replay_log(source: &str, dag: &TechDag) -> Result<Vec<Replay>, ReplayError> {
    let mut order: Vec<(String, u8)> = Vec::new();
    let mut groups: HashMap<(String, u8), Vec<(u32, BuildingId)>> = HashMap::new();
    let mut first_data_line = true;
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if std::mem::take(&mut first_data_line) && text.starts_with("game_id") {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        let [game, player, time, name] = fields[..] else {
            return Err(ReplayError::Parse {
                line,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        };
        if game.is_empty() {
            return Err(ReplayError::Parse {
                line,
                message: "empty game id".into(),
            });
        }
        let player: u8 = player.parse().map_err(|_| ReplayError::Parse {
            line,
            message: format!("bad player id `{player}`"),
        })?;
        let time: u32 = time.parse().map_err(|_| ReplayError::Parse {
            line,
            message: format!("bad time `{time}` (expected non-negative integer seconds)"),
        })?;
        let building = dag.id_of(name).ok_or_else(|| ReplayError::UnknownBuilding {
            line,
            name: name.to_string(),
        })?;
        let key = (game.to_string(), player);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push((time, building));
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let events = groups.remove(&key).unwrap_or_default();
            Replay::new(key.0, key.1, dag, events)
        })
        .collect())
}

/// Renders replays in the log format [`parse_replay_log`] reads back.
pub fn write_replay_log(replays: &[Replay], dag: &TechDag) -> String {
    let mut out = String::from("game_id,player_id,time_s,building_name\n");
    for r in replays {
        for e in r.events() {
            let _ = writeln!(out, "{},{},{},{}", r.game_id, r.player, e.time_s, dag.name_of(e.building));
        }
    }
    out
}

/// `(time of event i, multiset of the first i+1 buildings)` for every event.
pub fn prefix_sequence(r: &Replay) -> Vec<(u32, BuildTree)> {
    let mut tree = BuildTree::empty();
    r.events
        .iter()
        .map(|e| {
            tree.insert(e.building);
            (e.time_s, tree.clone())
        })
        .collect()
}

/// Deletes each building instance independently with probability
/// `p_missing`. Instances are visited in canonical order, so the result
/// depends only on `(tree, noise)`.
pub fn apply_noise(truth: &BuildTree, noise: &NoiseSpec) -> ObservationVector {
    if noise.p_missing == 0.0 {
        return ObservationVector::from(truth);
    }
    let mut rng = seed::rng(noise.seed);
    ObservationVector::from_counts(truth.iter().map(|(id, c)| {
        let kept = (0..c).filter(|_| !rng.random_bool(noise.p_missing)).count();
        (id, kept as u32)
    }))
}

/// What an observer has seen of `r` by time `t`: every building with event
/// time ≤ `t`, thinned by `noise`.
pub fn observation_at(r: &Replay, t_s: u32, noise: &NoiseSpec) -> ObservationVector {
    let n = r.events.partition_point(|e| e.time_s <= t_s);
    apply_noise(&r.tree_after(n), noise)
}

/// Samples `n` replays from `model`.
///
/// For each replay: draw a terminal tree from the model prior, pick a
/// prerequisite-respecting build order (preferring steps whose prefix is in
/// the model), draw each prefix's time from its distribution, then sort the
/// times so events are non-decreasing. A prefix absent from the model gets
/// its mean interpolated linearly (by position) between the nearest
/// modelled prefixes on either side, and the mean of their sigmas.
pub fn generate_synthetic_replays(model: &Model, n: usize, seed: u64) -> Result<Vec<Replay>, ReplayError> {
    if model.is_empty() {
        return Err(ReplayError::EmptyModel);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let dag = model.dag();
    let t_max = model.config().t_max_s;
    let scored = model.scored();
    let mut cumulative = Vec::with_capacity(scored.len());
    let max_log_prior = scored.iter().map(|s| s.log_prior).fold(f64::MIN, f64::max);
    let mut total = 0.0;
    for s in scored {
        total += (s.log_prior - max_log_prior).exp();
        cumulative.push(total);
    }
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let u = rng.random::<f64>() * total;
        let pick = cumulative.partition_point(|&c| c <= u).min(scored.len() - 1);
        let terminal = &scored[pick].tree;
        let order = build_order(model, terminal, &mut rng);

        let mut prefix = BuildTree::empty();
        let known: Vec<Option<TimeGaussian>> = order
            .iter()
            .map(|&b| {
                prefix.insert(b);
                model.time_distribution(&prefix).ok()
            })
            .collect();
        let mut times: Vec<u32> = interpolate(&known)
            .into_iter()
            .map(|g| sample_time(g, t_max, &mut rng))
            .collect();
        times.sort_unstable();
        let events = times.into_iter().zip(order).collect();
        out.push(Replay::new(format!("syn{i:06}"), 1, dag, events));
    }
    Ok(out)
}

fn build_order(model: &Model, terminal: &BuildTree, rng: &mut seed::Rng) -> Vec<BuildingId> {
    let dag = model.dag();
    let mut current = BuildTree::empty();
    let mut order = Vec::with_capacity(terminal.size() as usize);
    let mut preferred = Vec::new();
    let mut fallback = Vec::new();
    while current != *terminal {
        preferred.clear();
        fallback.clear();
        for (b, want) in terminal.iter() {
            if current.count(b) >= want {
                continue;
            }
            let ready = dag.buildings()[b.index()]
                .prerequisites
                .iter()
                .all(|&p| current.count(p) > 0);
            if ready {
                if model.contains(&current.with(b)) {
                    preferred.push(b);
                } else {
                    fallback.push(b);
                }
            }
        }
        let pool = if preferred.is_empty() { &fallback } else { &preferred };
        // The terminal tree is closed, so some building is always ready.
        let b = pool[rng.random_range(0..pool.len())];
        current.insert(b);
        order.push(b);
    }
    order
}

fn interpolate(known: &[Option<TimeGaussian>]) -> Vec<TimeGaussian> {
    (0..known.len())
        .map(|k| {
            if let Some(g) = known[k] {
                return g;
            }
            let before = (0..k).rev().find_map(|i| known[i].map(|g| (i, g)));
            let after = (k + 1..known.len()).find_map(|j| known[j].map(|g| (j, g)));
            match (before, after) {
                (Some((i, a)), Some((j, b))) => {
                    let w = (k - i) as f64 / (j - i) as f64;
                    TimeGaussian {
                        mu: a.mu + w * (b.mu - a.mu),
                        sigma: 0.5 * (a.sigma + b.sigma),
                    }
                }
                (Some((_, g)), None) | (None, Some((_, g))) => g,
                // The terminal prefix is always modelled.
                (None, None) => unreachable!("no modelled prefix"),
            }
        })
        .collect()
}

fn sample_time(g: TimeGaussian, t_max: u32, rng: &mut seed::Rng) -> u32 {
    let normal = Normal::new(g.mu, g.sigma).expect("sigma is positive and finite");
    for _ in 0..64 {
        let t = normal.sample(rng).round();
        if t >= 1.0 && t <= t_max as f64 {
            return t as u32;
        }
    }
    g.mu.round().clamp(1.0, t_max as f64) as u32
}
