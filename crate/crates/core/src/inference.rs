//! Exact posterior over the model's build trees given the game time and a
//! partial observation:
//!
//! `P(bt | t, obs, λ=1) ∝ P(t | bt) · P(bt) · [bt covers obs]`
//!
//! The observation prior is uniform and cancels in the normalization.

use thiserror::Error;

use crate::learning::Model;
use crate::techtree::{compatible, distance, BuildTree, DagError, ObservationVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("no build tree in the model is compatible with the observation `{0}`")]
    NoCompatibleTree(String),
    #[error("query time {t} outside the model horizon 1..={t_max}")]
    TimeOutOfRange { t: u32, t_max: u32 },
    #[error(transparent)]
    Observation(#[from] DagError),
}

/// A normalized distribution over compatible build trees, sorted by
/// descending probability with ties in canonical tree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    entries: Vec<(BuildTree, f64)>,
    query_time_s: u32,
    observation: ObservationVector,
    compatible_count: usize,
}

impl Posterior {
    pub fn entries(&self) -> &[(BuildTree, f64)] {
        &self.entries
    }

    pub fn query_time_s(&self) -> u32 {
        self.query_time_s
    }

    pub fn observation(&self) -> &ObservationVector {
        &self.observation
    }

    /// Model trees that passed the coherence filter, including any whose
    /// probability underflowed to zero and was left out of `entries`.
    pub fn compatible_count(&self) -> usize {
        self.compatible_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability_of(&self, bt: &BuildTree) -> f64 {
        self.entries
            .iter()
            .find(|(t, _)| t == bt)
            .map_or(0.0, |&(_, p)| p)
    }

    pub fn top(&self, k: usize) -> &[(BuildTree, f64)] {
        &self.entries[..k.min(self.entries.len())]
    }
}

pub fn posterior(model: &Model, t_s: u32, obs: &ObservationVector) -> Result<Posterior, InferenceError> {
    let t_max = model.config().t_max_s;
    if t_s < 1 || t_s > t_max {
        return Err(InferenceError::TimeOutOfRange { t: t_s, t_max });
    }
    model.dag().check_observation(obs)?;
    let t = t_s as f64;
    // Log weights keep far-from-mean trees from all underflowing together.
    let logw: Vec<(usize, f64)> = model
        .scored()
        .iter()
        .enumerate()
        .filter(|(_, s)| compatible(&s.tree, obs))
        .map(|(i, s)| (i, s.gaussian.log_kernel(t) - s.log_normalizer + s.log_prior))
        .collect();
    if logw.is_empty() {
        return Err(InferenceError::NoCompatibleTree(model.dag().format_observation(obs)));
    }
    let max = logw.iter().map(|&(_, w)| w).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<(usize, f64)> = logw.iter().map(|&(i, w)| (i, (w - max).exp())).collect();
    let z: f64 = weights.iter().map(|&(_, w)| w).sum();
    let mut ranked: Vec<(usize, f64)> = weights
        .into_iter()
        .map(|(i, w)| (i, w / z))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    // `scored` is in canonical order, so the index is the tie-break.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let scored = model.scored();
    Ok(Posterior {
        entries: ranked
            .into_iter()
            .map(|(i, p)| (scored[i].tree.clone(), p))
            .collect(),
        query_time_s: t_s,
        observation: obs.clone(),
        compatible_count: logw.len(),
    })
}

/// The argmax tree. Posteriors are never empty: the largest weight always
/// normalizes to a positive probability.
pub fn most_probable(p: &Posterior) -> &BuildTree {
    &p.entries[0].0
}

/// `Σ_bt P(bt) · d(bt, real)`
pub fn expected_distance(p: &Posterior, real: &BuildTree) -> f64 {
    p.entries.iter().map(|(bt, prob)| prob * distance(bt, real) as f64).sum()
}

/// The most probable current tree: what has been built, including what was
/// not seen.
pub fn reconstruct(model: &Model, t_s: u32, obs: &ObservationVector) -> Result<BuildTree, InferenceError> {
    posterior(model, t_s, obs).map(|p| most_probable(&p).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::ModelConfig;
    use crate::techtree::load_tech_dag;
    use std::sync::Arc;

    fn chain_model() -> Model {
        let dag = Arc::new(load_tech_dag("race zerg\nbuilding a\nbuilding b requires a\nbuilding c requires b\n").unwrap());
        let rows = [("{}", 1.0, 20.0), ("a", 60.0, 20.0), ("a+b", 150.0, 30.0), ("a+b+c", 260.0, 40.0)];
        Model::from_parameters(
            dag.clone(),
            ModelConfig {
                t_max_s: 600,
                ..ModelConfig::default()
            },
            rows.map(|(s, mu, sigma)| (dag.parse_tree(s).unwrap(), mu, sigma, 0)),
        )
        .unwrap()
    }

    #[test]
    fn single_compatible_tree_gets_everything() {
        let m = chain_model();
        let obs = m.dag().parse_observation("c").unwrap();
        let p = posterior(&m, 100, &obs).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.entries()[0].1, 1.0);
        assert_eq!(m.dag().format_tree(most_probable(&p)), "a+b+c");
    }

    #[test]
    fn hand_computed_chain_posterior() {
        // obs {a} rules out ∅; the remaining weights are normalized Gaussians
        // at t = 120.
        let m = chain_model();
        let obs = m.dag().parse_observation("a").unwrap();
        let p = posterior(&m, 120, &obs).unwrap();
        assert_eq!(p.compatible_count(), 3);
        let w = |mu: f64, sigma: f64| {
            let z: f64 = (1..=600).map(|u| (-((u as f64 - mu) / sigma).powi(2) / 2.0).exp()).sum();
            (-((120.0 - mu) / sigma).powi(2) / 2.0).exp() / z
        };
        let ws = [w(60.0, 20.0), w(150.0, 30.0), w(260.0, 40.0)];
        let total: f64 = ws.iter().sum();
        for (s, wi) in ["a", "a+b", "a+b+c"].iter().zip(ws) {
            let bt = m.dag().parse_tree(s).unwrap();
            assert!((p.probability_of(&bt) - wi / total).abs() < 1e-12, "{s}");
        }
        assert_eq!(p.probability_of(&BuildTree::empty()), 0.0);
    }

    #[test]
    fn ties_break_canonically() {
        let dag = Arc::new(load_tech_dag("race zerg\nbuilding a\nbuilding b\n").unwrap());
        let rows = ["b", "a"].map(|s| (dag.parse_tree(s).unwrap(), 100.0, 10.0, 0));
        let m = Model::from_parameters(dag.clone(), ModelConfig::default(), rows).unwrap();
        let p = posterior(&m, 100, &ObservationVector::empty()).unwrap();
        assert_eq!(p.entries()[0].1, p.entries()[1].1);
        assert_eq!(dag.format_tree(most_probable(&p)), "a");
    }

    #[test]
    fn expected_distance_examples() {
        let m = chain_model();
        let p = posterior(&m, 100, &m.dag().parse_observation("a+b+c").unwrap()).unwrap();
        assert_eq!(expected_distance(&p, most_probable(&p)), 0.0);
        let two = Posterior {
            entries: vec![(m.dag().parse_tree("a").unwrap(), 0.5), (m.dag().parse_tree("a+b+c").unwrap(), 0.5)],
            query_time_s: 1,
            observation: ObservationVector::empty(),
            compatible_count: 2,
        };
        // distances to {a,b}: 1 and 1; to ∅: 1 and 3
        assert_eq!(expected_distance(&two, &BuildTree::empty()), 2.0);
    }

    #[test]
    fn no_compatible_tree() {
        let dag = Arc::new(load_tech_dag("race zerg\nbuilding a\nbuilding b\n").unwrap());
        let m = Model::from_parameters(dag.clone(), ModelConfig::default(), [(dag.parse_tree("a").unwrap(), 100.0, 10.0, 0)])
            .unwrap();
        let err = posterior(&m, 50, &dag.parse_observation("b").unwrap()).unwrap_err();
        assert_eq!(err, InferenceError::NoCompatibleTree("b".into()));
        assert!(reconstruct(&m, 50, &dag.parse_observation("b").unwrap()).is_err());
    }

    #[test]
    fn time_outside_horizon() {
        let m = chain_model();
        assert!(matches!(posterior(&m, 0, &ObservationVector::empty()), Err(InferenceError::TimeOutOfRange { .. })));
        assert!(matches!(posterior(&m, 601, &ObservationVector::empty()), Err(InferenceError::TimeOutOfRange { .. })));
    }

    #[test]
    fn reconstruct_fills_in_unseen_buildings() {
        let m = chain_model();
        let obs = m.dag().parse_observation("a+b").unwrap();
        assert_eq!(m.dag().format_tree(&reconstruct(&m, 260, &obs).unwrap()), "a+b+c");
        assert_eq!(reconstruct(&m, 1, &ObservationVector::empty()).unwrap(), BuildTree::empty());
    }

    #[test]
    fn far_from_every_mean_still_normalizes() {
        let dag = Arc::new(load_tech_dag("race zerg\nbuilding a\nbuilding b requires a\n").unwrap());
        let rows = [("a", 10.0, 5.0), ("a+b", 20.0, 5.0)].map(|(s, mu, sg)| (dag.parse_tree(s).unwrap(), mu, sg, 0));
        let m = Model::from_parameters(dag.clone(), ModelConfig::default(), rows).unwrap();
        let p = posterior(&m, 3000, &ObservationVector::empty()).unwrap();
        let total: f64 = p.entries().iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(dag.format_tree(most_probable(&p)), "a+b");
    }
}
