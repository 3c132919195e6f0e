use std::collections::{BTreeMap, BTreeSet};

use petgraph::unionfind::UnionFind;

use super::{neighbors, ClusterConfig, ClusterSet, ClusterStage, ContextError};
use crate::graph::{StateVector, TransitionOperator, VertexId};

/// Connected components of the undirected graph on `items` with the given
/// links. Components smaller than `min_size` are unclustered.
pub fn components(
    items: &BTreeSet<VertexId>,
    links: impl IntoIterator<Item = (VertexId, VertexId)>,
    min_size: usize,
) -> ClusterSet {
    let list: Vec<&VertexId> = items.iter().collect();
    let pos: BTreeMap<&VertexId, usize> = list.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut uf = UnionFind::<usize>::new(list.len());
    for (a, b) in links {
        if let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) {
            uf.union(i, j);
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<VertexId>> = BTreeMap::new();
    for (i, v) in list.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().insert((*v).clone());
    }
    let mut out = ClusterSet::default();
    for (_, g) in groups {
        if g.len() >= min_size.max(1) {
            out.clusters.push(g);
        } else {
            out.unclustered.extend(g);
        }
    }
    out.canonical()
}

fn neighborhoods(
    op: &TransitionOperator,
    items: &BTreeSet<VertexId>,
    tau: f64,
) -> Result<Vec<(VertexId, BTreeSet<VertexId>)>, ContextError> {
    items
        .iter()
        .map(|v| {
            let n = if op.graph().contains(v) {
                neighbors(op, v, tau)?
            } else {
                BTreeSet::new()
            };
            Ok((v.clone(), n))
        })
        .collect()
}

fn support(prefs: &StateVector) -> BTreeSet<VertexId> {
    prefs
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(v, _)| v.clone())
        .collect()
}

fn run_stage(
    op: &TransitionOperator,
    items: &BTreeSet<VertexId>,
    stage: ClusterStage,
    min_size: usize,
) -> Result<ClusterSet, ContextError> {
    let mut links = Vec::new();
    match stage {
        ClusterStage::WeightBound { tau } => {
            for (v, nbr) in neighborhoods(op, items, tau)? {
                for w in nbr.intersection(items) {
                    if *w != v {
                        links.push((v.clone(), w.clone()));
                    }
                }
            }
        }
        ClusterStage::CommonsBound { tau, nc } => {
            let nbrs = neighborhoods(op, items, tau)?;
            for (i, (v, nv)) in nbrs.iter().enumerate() {
                for (w, nw) in &nbrs[i + 1..] {
                    if nv.intersection(nw).count() >= nc {
                        links.push((v.clone(), w.clone()));
                    }
                }
            }
        }
    }
    Ok(components(items, links, min_size))
}

/// Components of the preference graph linking `v → v'` for every
/// `v' ∈ nbr_τ(v)`, taken as undirected.
pub fn cluster_weight_bound(
    op: &TransitionOperator,
    prefs: &StateVector,
    tau: f64,
    min_size: usize,
) -> Result<ClusterSet, ContextError> {
    run_stage(
        op,
        &support(prefs),
        ClusterStage::WeightBound { tau },
        min_size,
    )
}

/// Components of the preference graph linking two items with at least `nc`
/// common neighbors in `nbr_τ`.
pub fn cluster_commons_bound(
    op: &TransitionOperator,
    prefs: &StateVector,
    tau: f64,
    nc: usize,
    min_size: usize,
) -> Result<ClusterSet, ContextError> {
    if nc == 0 {
        return Err(ContextError::InvalidConfig("nc must be at least 1".into()));
    }
    run_stage(
        op,
        &support(prefs),
        ClusterStage::CommonsBound { tau, nc },
        min_size,
    )
}

struct Hierarchy<'a, 'o, 'g> {
    op: &'o TransitionOperator<'g>,
    cfg: &'a ClusterConfig,
    runs: Vec<usize>,
}

impl Hierarchy<'_, '_, '_> {
    fn cluster(
        &mut self,
        items: &BTreeSet<VertexId>,
        stage: usize,
    ) -> Result<ClusterSet, ContextError> {
        self.runs[stage] += 1;
        let first = run_stage(
            self.op,
            items,
            self.cfg.chain[stage],
            self.cfg.min_cluster_size,
        )?;
        let mut out = ClusterSet {
            clusters: Vec::new(),
            unclustered: first.unclustered,
        };
        for c in first.clusters {
            if c.len() > self.cfg.size_limit && stage + 1 < self.cfg.chain.len() {
                let sub = self.cluster(&c, stage + 1)?;
                out.clusters.extend(sub.clusters);
                out.unclustered.extend(sub.unclustered);
            } else {
                out.clusters.push(c);
            }
        }
        Ok(out)
    }
}

/// Hierarchical clustering through `cfg.chain`, also returning how many
/// times each stage ran.
///
/// Items below the relative rating limit sit out the first pass. Clusters
/// above `size_limit` are re-clustered by the next stage. Everything left
/// unclustered, together with the items that sat out, then gets one
/// fallback pass starting again from the first stage.
pub fn cluster_hierarchical_traced(
    op: &TransitionOperator,
    prefs: &StateVector,
    cfg: &ClusterConfig,
) -> Result<(ClusterSet, Vec<usize>), ContextError> {
    cfg.validate()?;
    let all = support(prefs);
    let mut h = Hierarchy {
        op,
        cfg,
        runs: vec![0; cfg.chain.len()],
    };
    if all.is_empty() {
        return Ok((ClusterSet::default(), h.runs));
    }
    let mean = prefs.total() / all.len() as f64;
    let limit = cfg.relative_rating_pct / 100.0 * mean;
    let (kept, rejected): (BTreeSet<VertexId>, BTreeSet<VertexId>) =
        all.into_iter().partition(|v| prefs.get(v) >= limit);

    let first = h.cluster(&kept, 0)?;
    let mut rest = first.unclustered;
    rest.extend(rejected);
    let mut clusters = first.clusters;
    let unclustered = if rest.is_empty() {
        rest
    } else {
        let fallback = h.cluster(&rest, 0)?;
        clusters.extend(fallback.clusters);
        fallback.unclustered
    };
    let set = ClusterSet {
        clusters,
        unclustered,
    };
    Ok((set.canonical(), h.runs))
}

pub fn cluster_hierarchical(
    op: &TransitionOperator,
    prefs: &StateVector,
    cfg: &ClusterConfig,
) -> Result<ClusterSet, ContextError> {
    cluster_hierarchical_traced(op, prefs, cfg).map(|(set, _)| set)
}
