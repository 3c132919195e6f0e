use std::collections::{BTreeMap, BTreeSet};

use super::ContextError;
use crate::graph::{StateVector, TasteGraph, TransitionOperator, VertexId};

const ZERO_INDEX: usize = TasteGraph::ZERO_INDEX;

/// Where the filter is applied: to preferences before a walk, or to its
/// output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    #[default]
    PreFilter,
    PostFilter,
}

/// Thresholds on the linkage between a context and a candidate. A candidate
/// passes when any set threshold is met.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextFilterParams {
    /// Longest path considered.
    pub path_length: usize,
    pub min_path_count: Option<usize>,
    pub min_weight_sum: Option<f64>,
    pub min_best_path: Option<f64>,
    pub mode: FilterMode,
}

impl Default for ContextFilterParams {
    fn default() -> Self {
        Self {
            path_length: 2,
            min_path_count: None,
            min_weight_sum: Some(0.01),
            min_best_path: None,
            mode: FilterMode::PreFilter,
        }
    }
}

impl ContextFilterParams {
    pub fn validate(&self) -> Result<(), ContextError> {
        let bad = |m: &str| Err(ContextError::InvalidConfig(m.into()));
        if self.path_length == 0 {
            return bad("path_length must be at least 1");
        }
        if self.min_path_count.is_none()
            && self.min_weight_sum.is_none()
            && self.min_best_path.is_none()
        {
            return bad("at least one filter threshold must be set");
        }
        if self.min_path_count == Some(0)
            || self.min_weight_sum.is_some_and(|w| !(w > 0.0))
            || self.min_best_path.is_some_and(|w| !(w > 0.0))
        {
            return bad("filter thresholds must be positive");
        }
        Ok(())
    }

    fn passes(&self, m: &PathMeasures) -> bool {
        self.min_path_count.is_some_and(|c| m.count >= c)
            || self.min_weight_sum.is_some_and(|w| m.weight_sum >= w)
            || self.min_best_path.is_some_and(|w| m.best_path >= w)
    }
}

/// Linkage of one vertex to a context over simple paths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathMeasures {
    pub count: usize,
    /// Sum over paths of the product of balanced weights along each.
    pub weight_sum: f64,
    pub best_path: f64,
}

/// Measures for every vertex reached from `context` by a simple directed
/// path of 1 to `max_len` steps. θ is never entered.
pub fn path_measures(
    op: &TransitionOperator,
    context: &BTreeSet<VertexId>,
    max_len: usize,
) -> BTreeMap<VertexId, PathMeasures> {
    fn walk(
        op: &TransitionOperator,
        at: usize,
        weight: f64,
        depth: usize,
        max_len: usize,
        on_path: &mut Vec<usize>,
        acc: &mut BTreeMap<usize, PathMeasures>,
    ) {
        if depth == max_len {
            return;
        }
        for &(next, w) in op.next_of(at) {
            if next == ZERO_INDEX || w <= 0.0 || on_path.contains(&next) {
                continue;
            }
            let product = weight * w;
            let m = acc.entry(next).or_default();
            m.count += 1;
            m.weight_sum += product;
            m.best_path = m.best_path.max(product);
            on_path.push(next);
            walk(op, next, product, depth + 1, max_len, on_path, acc);
            on_path.pop();
        }
    }

    let graph = op.graph();
    let mut acc = BTreeMap::new();
    for c in context {
        if let Some(start) = graph.index_of(c) {
            let mut on_path = vec![start];
            walk(op, start, 1.0, 0, max_len, &mut on_path, &mut acc);
        }
    }
    acc.into_iter()
        .map(|(i, m)| (graph.id(i).clone(), m))
        .collect()
}

/// Candidates linked strongly enough to the context. Context members are
/// always kept.
pub fn contextual_filter(
    op: &TransitionOperator,
    context: &BTreeSet<VertexId>,
    candidates: &BTreeSet<VertexId>,
    params: &ContextFilterParams,
) -> Result<BTreeSet<VertexId>, ContextError> {
    params.validate()?;
    if context.is_empty() {
        return Err(ContextError::InvalidConfig("context is empty".into()));
    }
    let measures = path_measures(op, context, params.path_length);
    Ok(candidates
        .iter()
        .filter(|v| context.contains(*v) || measures.get(*v).is_some_and(|m| params.passes(m)))
        .cloned()
        .collect())
}

impl ContextFilterParams {
    /// Keeps the preference entries that pass the filter.
    pub fn restrict(
        &self,
        op: &TransitionOperator,
        context: &BTreeSet<VertexId>,
        prefs: &StateVector,
    ) -> Result<StateVector, ContextError> {
        let candidates: BTreeSet<VertexId> = prefs.support().cloned().collect();
        let kept = contextual_filter(op, context, &candidates, self)?;
        Ok(prefs
            .iter()
            .filter(|(v, _)| kept.contains(*v))
            .map(|(v, w)| (v.clone(), w))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BalancingConfig, EdgeType, TasteGraph};

    fn t(k: &str) -> VertexId {
        VertexId::track(k)
    }

    fn chain() -> TasteGraph {
        let mut g = TasteGraph::new();
        g.insert_row(
            &t("a"),
            EdgeType::SimilarTrack,
            &[(t("b"), 0.8), (t("c"), 0.2)],
        )
        .unwrap();
        g.insert_row(
            &t("b"),
            EdgeType::SimilarTrack,
            &[(t("c"), 0.5), (t("a"), 0.5)],
        )
        .unwrap();
        g.insert_row(&t("c"), EdgeType::SimilarTrack, &[(t("d"), 1.0)])
            .unwrap();
        g
    }

    #[test]
    fn hand_enumerated_paths() {
        let g = chain();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let m = path_measures(&op, &[t("a")].into(), 2);
        // a→c (0.2) and a→b→c (0.4)
        let c = m[&t("c")];
        assert_eq!(c.count, 2);
        assert!((c.weight_sum - 0.6).abs() < 1e-15);
        assert_eq!(c.best_path, 0.4);
        // a→c→d
        assert!((m[&t("d")].weight_sum - 0.2).abs() < 1e-15);
        // simple paths never return to the start
        assert!(!m.contains_key(&t("a")));
    }

    #[test]
    fn keeps_context_drops_unreachable() {
        let g = chain();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let params = ContextFilterParams {
            path_length: 1,
            min_weight_sum: Some(0.5),
            ..Default::default()
        };
        let candidates = [t("a"), t("b"), t("c"), t("d"), t("ghost")].into();
        let kept = contextual_filter(&op, &[t("a")].into(), &candidates, &params).unwrap();
        assert_eq!(kept, [t("a"), t("b")].into());
    }

    #[test]
    fn invalid_params() {
        let g = chain();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let none = ContextFilterParams {
            min_weight_sum: None,
            ..Default::default()
        };
        assert!(contextual_filter(&op, &[t("a")].into(), &BTreeSet::new(), &none).is_err());
        assert!(
            contextual_filter(&op, &BTreeSet::new(), &BTreeSet::new(), &Default::default())
                .is_err()
        );
    }
}
