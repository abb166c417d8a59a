//! Toy-model generators, a brute-force posterior oracle, and the invariant
//! suite shared by the property tests and the acceptance harness.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, RngSeed, TestCaseError, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use btpredict::evaluation::{fold_assignment, query_points, score_point, split_fold, DISTANCE_THRESHOLDS};
use btpredict::learning::{GaussianPrior, GaussianStats, TimeParams, TreeStatistics};
use btpredict::techtree::BuildingSpec;
use btpredict::{
    apply_noise, compatible, distance, fit_model, load_model, load_model_embedded, posterior, prefix_sequence,
    save_model, BuildTree, BuildingId, InferenceError, Model, ModelConfig, NoiseSpec, ObservationVector, PriorMode,
    Race, Replay, TechDag,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dag of `2..=max_buildings` types named `b0..`, each depending on
/// up to two earlier types.
pub fn toy_dag(rng: &mut impl Rng, max_buildings: usize, allow_dup: bool) -> Arc<TechDag> {
    let n = rng.random_range(2..=max_buildings);
    let specs = (0..n)
        .map(|i| {
            let mut prerequisites = Vec::new();
            if i > 0 && rng.random_bool(0.7) {
                let k = rng.random_range(1..=i.min(2));
                for j in rand::seq::index::sample(rng, i, k) {
                    prerequisites.push(format!("b{j}"));
                }
            }
            let max_count = if allow_dup && rng.random_bool(0.25) { 2 } else { 1 };
            BuildingSpec {
                name: format!("b{i}"),
                prerequisites,
                max_count,
            }
        })
        .collect();
    Arc::new(TechDag::new(Race::ALL[rng.random_range(0..3)], specs).unwrap())
}

fn available(dag: &TechDag, tree: &BuildTree) -> Vec<BuildingId> {
    dag.buildings()
        .iter()
        .filter(|b| tree.count(b.id) < b.max_count && b.prerequisites.iter().all(|&p| tree.count(p) > 0))
        .map(|b| b.id)
        .collect()
}

/// A random legal build order with increasing times.
pub fn random_replay(rng: &mut impl Rng, dag: &TechDag, id: &str, max_len: usize) -> Replay {
    let len = rng.random_range(1..=max_len);
    let mut tree = BuildTree::empty();
    let mut t = rng.random_range(1..40u32);
    let mut events = Vec::new();
    for _ in 0..len {
        let options = available(dag, &tree);
        if options.is_empty() {
            break;
        }
        let b = options[rng.random_range(0..options.len())];
        tree.insert(b);
        events.push((t, b));
        t += rng.random_range(3..70);
    }
    Replay::new(id, 1, dag, events)
}

pub fn random_tree(rng: &mut impl Rng, dag: &TechDag) -> BuildTree {
    let mut tree = BuildTree::empty();
    let steps = rng.random_range(0..=dag.len() + 2);
    for _ in 0..steps {
        let options = available(dag, &tree);
        if options.is_empty() {
            break;
        }
        tree.insert(options[rng.random_range(0..options.len())]);
    }
    tree
}

/// Deletes each instance of `bt` with probability `p`.
pub fn delete_instances(rng: &mut impl Rng, bt: &BuildTree, p: f64) -> ObservationVector {
    ObservationVector::from_counts(bt.iter().map(|(id, c)| (id, (0..c).filter(|_| !rng.random_bool(p)).count() as u32)))
}

pub fn random_config(rng: &mut impl Rng) -> ModelConfig {
    ModelConfig {
        t_max_s: [300, 600, 1200][rng.random_range(0..3)],
        sigma_min_s: [1.0, 5.0, 20.0][rng.random_range(0..3)],
        prior: GaussianPrior {
            n0: [0.5, 1.0, 3.0][rng.random_range(0..3)],
            sigma0_s: [30.0, 120.0][rng.random_range(0..2)],
        },
        prior_mode: if rng.random_bool(0.5) { PriorMode::Uniform } else { PriorMode::Histogram },
    }
}

pub struct Toy {
    pub dag: Arc<TechDag>,
    pub replays: Vec<Replay>,
    pub model: Model,
}

/// ≤ 12 buildings, ≤ 300 trees.
pub fn toy_model(seed: u64) -> Toy {
    let mut rng = rng(seed);
    let dag = toy_dag(&mut rng, 12, true);
    let n = rng.random_range(2..=20);
    let replays: Vec<Replay> = (0..n).map(|i| random_replay(&mut rng, &dag, &format!("r{i}"), 14)).collect();
    let config = random_config(&mut rng);
    let model = fit_model(&replays, dag.clone(), config).unwrap();
    assert!(model.len() <= 300);
    Toy { dag, replays, model }
}

/// A query time and an observation: usually a thinned model tree, sometimes
/// arbitrary counts that may match nothing.
pub fn random_query(rng: &mut impl Rng, toy: &Toy) -> (u32, ObservationVector) {
    let t = rng.random_range(1..=toy.model.config().t_max_s);
    if rng.random_bool(0.75) {
        let trees: Vec<&BuildTree> = toy.model.trees().collect();
        let bt = trees[rng.random_range(0..trees.len())];
        let p = rng.random_range(0.0..1.0);
        (t, delete_instances(rng, bt, p))
    } else {
        let mut counts: Vec<(BuildingId, u32)> = Vec::new();
        for b in toy.dag.buildings() {
            if rng.random_bool(0.3) {
                counts.push((b.id, rng.random_range(1..=b.max_count as u32)));
            }
        }
        (t, ObservationVector::from_counts(counts))
    }
}

/// Brute-force joint `P(bt) P(t | bt) [obs ⊆ bt]` with the Gaussian
/// normalizer summed over the whole horizon.
pub struct Oracle {
    config: ModelConfig,
    trees: Vec<(BuildTree, f64, f64, f64, f64)>,
}

fn oracle_params(time: &TimeParams, config: &ModelConfig) -> (f64, f64) {
    let (mu, sigma) = match time {
        TimeParams::Learned(s) => {
            let n = s.n() as f64;
            let mu = s.sum_t() as f64 / n;
            let scatter = s.sum_t2() as f64 - s.sum_t() as f64 * s.sum_t() as f64 / n;
            let p = s.prior();
            (mu, ((p.n0 * p.sigma0_s * p.sigma0_s + scatter) / (p.n0 + n)).sqrt())
        }
        TimeParams::Fixed(g) => (g.mu, g.sigma),
    };
    (mu, sigma.max(config.sigma_min_s))
}

impl Oracle {
    pub fn new(model: &Model) -> Oracle {
        let config = *model.config();
        let trees = model
            .entries()
            .iter()
            .map(|(bt, entry)| {
                let (mu, sigma) = oracle_params(&entry.time, &config);
                let exponent = |u: f64| -0.5 * ((u - mu) / sigma) * ((u - mu) / sigma);
                let peak = (1..=config.t_max_s).map(|u| exponent(u as f64)).fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = (1..=config.t_max_s).map(|u| (exponent(u as f64) - peak).exp()).sum();
                let prior = match config.prior_mode {
                    PriorMode::Uniform => 1.0,
                    PriorMode::Histogram => (entry.prior_count + 1) as f64,
                };
                (bt.clone(), mu, sigma, peak + z.ln(), prior)
            })
            .collect();
        Oracle { config, trees }
    }

    pub fn posterior(&self, t: u32, obs: &ObservationVector) -> Option<Vec<(BuildTree, f64)>> {
        let t = t as f64;
        let logs: Vec<(BuildTree, f64)> = self
            .trees
            .iter()
            .filter(|(bt, ..)| obs.iter().all(|(id, c)| bt.count(id) >= c))
            .map(|(bt, mu, sigma, log_z, prior)| {
                let e = -0.5 * ((t - mu) / sigma) * ((t - mu) / sigma);
                (bt.clone(), prior.ln() + e - log_z)
            })
            .collect();
        if logs.is_empty() {
            return None;
        }
        let top = logs.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logs.iter().map(|l| (l.1 - top).exp()).sum();
        Some(logs.into_iter().map(|(bt, l)| (bt, (l - top).exp() / total)).collect())
    }

    pub fn t_max(&self) -> u32 {
        self.config.t_max_s
    }
}

/// Max absolute probability error against the oracle over `queries`
/// random queries on toy model `seed`; errors if the two disagree on
/// whether any tree is compatible.
pub fn oracle_error(seed: u64, queries: usize) -> Result<f64, String> {
    let toy = toy_model(seed);
    let oracle = Oracle::new(&toy.model);
    let mut rng = rng(seed ^ 0x9e37_79b9);
    let mut worst: f64 = 0.0;
    for _ in 0..queries {
        let (t, obs) = random_query(&mut rng, &toy);
        match (posterior(&toy.model, t, &obs), oracle.posterior(t, &obs)) {
            (Ok(p), Some(expected)) => {
                for (bt, q) in &expected {
                    worst = worst.max((p.probability_of(bt) - q).abs());
                }
            }
            (Err(InferenceError::NoCompatibleTree(_)), None) => {}
            (got, want) => return Err(format!("seed {seed}: engine {got:?} vs oracle {want:?}")),
        }
    }
    Ok(worst)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub fn prop_oracle(seed: u64) -> Result<(), TestCaseError> {
    let err = oracle_error(seed, 4).map_err(TestCaseError::fail)?;
    check(err <= 1e-12, || format!("max error {err:e}"))
}

/// Posterior for a random query on toy `seed`, skipping incompatible ones.
fn toy_posterior(seed: u64) -> Option<(Toy, btpredict::Posterior)> {
    let toy = toy_model(seed);
    let mut rng = rng(seed.rotate_left(17));
    let (t, obs) = random_query(&mut rng, &toy);
    let p = posterior(&toy.model, t, &obs).ok()?;
    Some((toy, p))
}

pub fn prop_normalization(seed: u64) -> Result<(), TestCaseError> {
    let Some((_, p)) = toy_posterior(seed) else { return Ok(()) };
    let total: f64 = p.entries().iter().map(|e| e.1).sum();
    check((total - 1.0).abs() <= 1e-9, || format!("sum {total}"))?;
    check(p.entries().windows(2).all(|w| w[0].1 >= w[1].1), || "not sorted".into())
}

pub fn prop_hard_filter(seed: u64) -> Result<(), TestCaseError> {
    let Some((toy, p)) = toy_posterior(seed) else { return Ok(()) };
    for bt in toy.model.trees() {
        let covers = p.observation().iter().all(|(id, c)| bt.count(id) >= c);
        if !covers {
            check(p.probability_of(bt) == 0.0, || format!("incompatible {:?} has mass", bt))?;
        }
    }
    check(p.entries().iter().all(|(bt, _)| toy.model.contains(bt)), || "tree outside the model".into())
}

pub fn prop_superset(seed: u64) -> Result<(), TestCaseError> {
    let toy = toy_model(seed);
    let mut rng = rng(seed.rotate_left(23));
    // A thinned model tree always leaves at least that tree compatible.
    let trees: Vec<&BuildTree> = toy.model.trees().collect();
    let truth = trees[rng.random_range(0..trees.len())];
    let obs = apply_noise(truth, &NoiseSpec::new(rng.random_range(0.0..1.0), rng.random()).unwrap());
    let t = rng.random_range(1..=toy.model.config().t_max_s);
    let p = posterior(&toy.model, t, &obs).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for (bt, _) in p.entries() {
        check(compatible(bt, &obs), || "posterior tree does not contain the observation".into())?;
        for (id, c) in obs.iter() {
            check(bt.count(id) >= c, || "count below observed".into())?;
        }
    }
    Ok(())
}

pub fn prop_monotone_evidence(seed: u64) -> Result<(), TestCaseError> {
    let toy = toy_model(seed);
    let mut rng = rng(seed.rotate_left(29));
    let trees: Vec<&BuildTree> = toy.model.trees().collect();
    let x = trees[rng.random_range(0..trees.len())];
    let before = delete_instances(&mut rng, x, 0.6);
    let missing: Vec<BuildingId> = x.iter().filter(|&(id, c)| before.count(id) < c).map(|(id, _)| id).collect();
    let Some(&extra) = missing.first() else { return Ok(()) };
    let after = ObservationVector::from_counts(
        before
            .iter()
            .map(|(id, c)| (id, c as u32))
            .chain(std::iter::once((extra, 1))),
    );
    let t = rng.random_range(1..=toy.model.config().t_max_s);
    let p0 = posterior(&toy.model, t, &before).unwrap().probability_of(x);
    let p1 = posterior(&toy.model, t, &after).unwrap().probability_of(x);
    check(p1 >= p0 - 1e-12, || format!("P(x) fell from {p0} to {p1}"))
}

pub fn prop_distance_axioms(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let dag = toy_dag(&mut rng, 12, true);
    let [a, b, c] = [0; 3].map(|_| random_tree(&mut rng, &dag));
    check(distance(&a, &b) == distance(&b, &a), || "asymmetric".into())?;
    check((distance(&a, &b) == 0) == (a == b), || "identity of indiscernibles".into())?;
    check(distance(&a, &a) == 0, || "d(a,a) != 0".into())?;
    check(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c), || "triangle".into())
}

pub fn prop_deletion_closure(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let dag = toy_dag(&mut rng, 12, true);
    let bt = random_tree(&mut rng, &dag);
    let p = rng.random_range(0.0..=1.0);
    let obs = delete_instances(&mut rng, &bt, p);
    check(compatible(&bt, &obs), || "thinned observation incompatible".into())
}

pub fn prop_canonical_form(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let dag = toy_dag(&mut rng, 12, true);
    let bt = random_tree(&mut rng, &dag);
    check(dag.is_valid_build_tree(&bt).unwrap(), || "random tree invalid".into())?;
    let s = dag.format_tree(&bt);
    let back = dag.parse_tree(&s).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(back == bt && dag.format_tree(&back) == s, || format!("{s} did not round-trip"))?;
    // Listing the same instances in another order gives the same tree.
    let mut items: Vec<String> = bt.iter().flat_map(|(id, c)| (0..c).map(move |_| id)).map(|id| dag.name_of(id).to_string()).collect();
    items.shuffle(&mut rng);
    let shuffled = dag.parse_tree(&items.join(",")).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(dag.format_tree(&shuffled) == s, || "order-dependent form".into())
}

pub fn prop_model_round_trip(seed: u64) -> Result<(), TestCaseError> {
    let toy = toy_model(seed);
    let text = save_model(&toy.model);
    let embedded = load_model_embedded(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let retargeted = load_model(&text, &toy.dag).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(embedded == toy.model && retargeted == toy.model, || "model changed".into())?;
    check(save_model(&embedded) == text, || "file changed".into())
}

pub fn prop_order_independence(seed: u64) -> Result<(), TestCaseError> {
    let mut toy = toy_model(seed);
    let before = save_model(&toy.model);
    toy.replays.shuffle(&mut rng(seed.wrapping_add(1)));
    let after = save_model(&fit_model(&toy.replays, toy.dag.clone(), *toy.model.config()).unwrap());
    check(before == after, || "permutation changed the model".into())
}

pub fn prop_merge_homomorphism(seed: u64) -> Result<(), TestCaseError> {
    let toy = toy_model(seed);
    let cut = rng(seed).random_range(0..=toy.replays.len());
    let config = *toy.model.config();
    let part = |rs: &[Replay]| {
        let mut s = TreeStatistics::new(&toy.dag, config).unwrap();
        for r in rs {
            s.accumulate(r).unwrap();
        }
        s
    };
    let merged = part(&toy.replays[..cut]).merge(part(&toy.replays[cut..])).unwrap();
    let model = merged.into_model(toy.dag.clone()).unwrap();
    check(model == toy.model, || "merge differs from the joint fit".into())
}

/// With the sample spread held fixed, σ(n) approaches the sample σ as n grows.
pub fn prop_prior_decay(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let prior = GaussianPrior {
        n0: rng.random_range(0.5..5.0),
        sigma0_s: rng.random_range(1.0..300.0),
    };
    let half = rng.random_range(1..80u32);
    let centre = rng.random_range(100..2000u32);
    // Samples alternate centre ± half: sample σ is exactly `half` at every even n.
    let mut stats = GaussianStats::new(prior);
    let mut last = f64::INFINITY;
    for k in 1..=40u32 {
        stats.observe(centre - half);
        stats.observe(centre + half);
        let (_, sigma) = stats.mean_and_sigma(0.0).unwrap();
        let gap = (sigma - half as f64).abs();
        check(gap <= last + 1e-9, || format!("gap grew at n={}", 2 * k))?;
        last = gap;
    }
    Ok(())
}

pub fn prop_enumeration_brute_force(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let dag = toy_dag(&mut rng, 10, false);
    let n = dag.len();
    let mut expected = BTreeSet::new();
    for mask in 0u32..1 << n {
        let ids: Vec<BuildingId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| BuildingId(i as u16)).collect();
        let closed = ids.iter().all(|&id| dag.building(id).unwrap().prerequisites.iter().all(|p| ids.contains(p)));
        if closed {
            expected.insert(BuildTree::from_ids(ids));
        }
    }
    let got: BTreeSet<BuildTree> = dag.enumerate_build_trees(false).unwrap().into_iter().collect();
    check(got == expected, || format!("{} trees, brute force {}", got.len(), expected.len()))
}

pub fn prop_prefix_monotone(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let dag = toy_dag(&mut rng, 12, true);
    let r = random_replay(&mut rng, &dag, "g", 16);
    let mut prev = BuildTree::empty();
    let mut prev_t = 0;
    for (t, bt) in prefix_sequence(&r) {
        check(distance(&prev, &bt) == 1, || "step is not one building".into())?;
        check(compatible(&bt, &ObservationVector::from(&prev)), || "prefix shrank".into())?;
        check(t >= prev_t, || "time went backwards".into())?;
        prev = bt;
        prev_t = t;
    }
    Ok(())
}

pub fn prop_noise_removes_only(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng(seed);
    let dag = toy_dag(&mut rng, 12, true);
    let bt = random_tree(&mut rng, &dag);
    let noise = NoiseSpec::new(rng.random_range(0.0..=1.0), rng.random()).unwrap();
    let obs = apply_noise(&bt, &noise);
    check(compatible(&bt, &obs), || "noise added a building".into())?;
    check(apply_noise(&bt, &noise) == obs, || "noise not reproducible".into())?;
    check(apply_noise(&bt, &NoiseSpec::none()) == ObservationVector::from(&bt), || "p=0 changed the tree".into())
}

pub fn prop_k_best_monotone(seed: u64) -> Result<(), TestCaseError> {
    let toy = toy_model(seed);
    let mut rng = rng(seed.rotate_left(5));
    let r = &toy.replays[rng.random_range(0..toy.replays.len())];
    let noise = NoiseSpec::new(rng.random_range(0.0..0.9), rng.random()).unwrap();
    for point in query_points(&toy.model, r, &noise).unwrap() {
        let s = score_point(&point, r, &DISTANCE_THRESHOLDS);
        check(s.k_best.windows(2).all(|w| w[0] <= w[1]), || format!("k_best {:?}", s.k_best))?;
        check(s.k_mean.windows(2).all(|w| w[0] <= w[1]), || format!("k_mean {:?}", s.k_mean))?;
    }
    Ok(())
}

pub fn prop_disjoint_folds(seed: u64) -> Result<(), TestCaseError> {
    let toy = toy_model(seed);
    let mut rng = rng(seed);
    let folds = rng.random_range(2..=toy.replays.len().max(2));
    let fold_of = fold_assignment(toy.replays.len(), folds, rng.random());
    let all: BTreeMap<u64, usize> = toy.replays.iter().map(|r| (r.fingerprint(), 0)).collect();
    for f in 0..folds {
        let (train, test) = split_fold(&toy.replays, &fold_of, f);
        let train_ids: BTreeSet<&str> = train.iter().map(|r| r.game_id()).collect();
        check(test.iter().all(|r| !train_ids.contains(r.game_id())), || "held-out replay in training".into())?;
        check(train.len() + test.len() == toy.replays.len(), || "replays lost".into())?;
        check(test.iter().chain(&train).all(|r| all.contains_key(&r.fingerprint())), || "foreign replay".into())?;
    }
    Ok(())
}

pub type Property = fn(u64) -> Result<(), TestCaseError>;

/// Every invariant with its case count; 10⁴ cases in total.
pub const SUITE: &[(&str, u32, Property)] = &[
    ("posterior matches brute force", 500, prop_oracle),
    ("normalization", 1000, prop_normalization),
    ("hard filter", 1000, prop_hard_filter),
    ("superset guarantee", 1000, prop_superset),
    ("monotone evidence", 1000, prop_monotone_evidence),
    ("distance metric axioms", 1500, prop_distance_axioms),
    ("deletion closure", 600, prop_deletion_closure),
    ("canonical form", 600, prop_canonical_form),
    ("model file round trip", 300, prop_model_round_trip),
    ("order independence", 300, prop_order_independence),
    ("merge homomorphism", 300, prop_merge_homomorphism),
    ("prior dominance decay", 400, prop_prior_decay),
    ("enumeration vs brute force", 300, prop_enumeration_brute_force),
    ("prefix monotonicity", 400, prop_prefix_monotone),
    ("noise removes only", 400, prop_noise_removes_only),
    ("k_best monotone in threshold", 200, prop_k_best_monotone),
    ("disjoint folds", 200, prop_disjoint_folds),
];

pub fn runner(cases: u32, seed: u64) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        rng_algorithm: RngAlgorithm::ChaCha,
        rng_seed: RngSeed::Fixed(seed),
        ..Config::default()
    })
}

/// Runs one property over `cases` random seeds.
pub fn run_property(prop: Property, cases: u32, seed: u64) -> Result<(), String> {
    runner(cases, seed).run(&any::<u64>(), prop).map_err(|e| e.to_string())
}
