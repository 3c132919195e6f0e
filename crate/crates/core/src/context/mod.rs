//! Context sets: clusters of a user's preferences, and filtering of items
//! by their linkage to a chosen context.

mod affinity;
mod components;
mod filter;
mod sets;
mod similarity;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{GraphError, TransitionOperator, VertexId};

pub use affinity::{
    affinity_propagation, cluster_affinity_propagation, discount_diagonal, relink_small_clusters,
    ApOutcome, ApVariant, CenteredClusters,
};
pub use components::{
    cluster_commons_bound, cluster_hierarchical, cluster_hierarchical_traced, cluster_weight_bound,
    components,
};
pub use filter::{contextual_filter, path_measures, ContextFilterParams, FilterMode, PathMeasures};
pub use sets::{generate_context_sets, ContextSet, ENRICH_BELOW};
pub use similarity::{similarity_cnd, similarity_matrix, SimilarityCache};

#[derive(Debug, Error, PartialEq)]
pub enum ContextError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid clustering config: {0}")]
    InvalidConfig(String),
    #[error("similarity matrix must be square, got {rows} rows and a row of {cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Clusters plus the items that ended up in none.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterSet {
    pub clusters: Vec<BTreeSet<VertexId>>,
    pub unclustered: BTreeSet<VertexId>,
}

impl ClusterSet {
    /// Orders clusters by their smallest member so equal partitions compare
    /// equal.
    pub fn canonical(mut self) -> Self {
        self.clusters.sort_by(|a, b| a.first().cmp(&b.first()));
        self
    }

    /// Every item covered, clusters non-empty and pairwise disjoint.
    pub fn is_partition_of(&self, items: &BTreeSet<VertexId>) -> bool {
        let mut seen = BTreeSet::new();
        for c in &self.clusters {
            if c.is_empty() {
                return false;
            }
            for v in c {
                if !seen.insert(v) {
                    return false;
                }
            }
        }
        for v in &self.unclustered {
            if !seen.insert(v) {
                return false;
            }
        }
        seen.len() == items.len() && items.iter().all(|v| seen.contains(v))
    }
}

/// One pass of link-based clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterStage {
    /// Link `v → v'` when `v'` gets at least `tau` of `v`'s mass.
    WeightBound { tau: f64 },
    /// Link two items sharing at least `nc` neighbors above `tau`.
    CommonsBound { tau: f64, nc: usize },
}

impl ClusterStage {
    fn validate(&self) -> Result<(), ContextError> {
        let (tau, nc) = match *self {
            ClusterStage::WeightBound { tau } => (tau, 1),
            ClusterStage::CommonsBound { tau, nc } => (tau, nc),
        };
        if !(tau > 0.0 && tau < 1.0) || nc == 0 {
            return Err(ContextError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    /// Weight limit for single-stage clustering.
    pub tau: f64,
    /// Common-neighbor limit for single-stage commons-bound clustering.
    pub nc: usize,
    /// Stages of hierarchical clustering, from relaxed to tight.
    pub chain: Vec<ClusterStage>,
    /// Clusters above this size go to the next stage.
    pub size_limit: usize,
    /// Items weighing less than this percentage of the mean preference
    /// weight sit out the first pass.
    pub relative_rating_pct: f64,
    /// Discount applied to self-similarity before affinity propagation.
    pub delta: f64,
    /// Damping of the message updates.
    pub lambda: f64,
    /// Stop once exemplars have not changed for this many iterations.
    pub convince_limit: usize,
    pub max_ap_iterations: usize,
    /// Smaller components or clusters count as unclustered or get relinked.
    pub min_cluster_size: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            tau: 0.01,
            nc: 2,
            chain: vec![
                ClusterStage::CommonsBound { tau: 0.01, nc: 2 },
                ClusterStage::CommonsBound { tau: 0.02, nc: 3 },
                ClusterStage::CommonsBound { tau: 0.05, nc: 4 },
            ],
            size_limit: 50,
            relative_rating_pct: 30.0,
            delta: 0.5,
            lambda: 0.8,
            convince_limit: 10,
            max_ap_iterations: 500,
            min_cluster_size: 2,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), ContextError> {
        let bad = |m: &str| Err(ContextError::InvalidConfig(m.into()));
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0,1)");
        }
        if self.nc == 0 {
            return bad("nc must be at least 1");
        }
        if self.chain.is_empty() {
            return bad("chain must have at least one stage");
        }
        for stage in &self.chain {
            stage.validate()?;
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return bad("delta must lie in [0,1]");
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0,1)");
        }
        if self.convince_limit == 0 || self.max_ap_iterations == 0 {
            return bad("convince_limit and max_ap_iterations must be at least 1");
        }
        if !(self.relative_rating_pct >= 0.0) {
            return bad("relative_rating_pct must be non-negative");
        }
        Ok(())
    }
}

/// Vertices receiving at least `tau` of `v`'s balanced one-step mass. With
/// `tau = 0` every direct out-neighbor. θ is never a neighbor.
pub fn neighbors(
    op: &TransitionOperator,
    v: &VertexId,
    tau: f64,
) -> Result<BTreeSet<VertexId>, ContextError> {
    let graph = op.graph();
    let i = graph.require(v)?;
    if tau <= 0.0 {
        return Ok(raw_neighbors(graph, i)
            .into_iter()
            .map(|j| graph.id(j).clone())
            .collect());
    }
    Ok(op
        .next_of(i)
        .iter()
        .filter(|&&(j, w)| j != crate::graph::TasteGraph::ZERO_INDEX && w >= tau)
        .map(|&(j, _)| graph.id(j).clone())
        .collect())
}

/// Targets of all rows of vertex `i`, θ excluded.
pub(crate) fn raw_neighbors(graph: &crate::graph::TasteGraph, i: usize) -> BTreeSet<usize> {
    graph
        .rows_at(i)
        .values()
        .flatten()
        .map(|&(j, _)| j)
        .filter(|&j| j != crate::graph::TasteGraph::ZERO_INDEX)
        .collect()
}
