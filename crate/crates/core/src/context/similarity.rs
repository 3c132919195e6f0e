use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use super::{raw_neighbors, ContextError};
use crate::graph::{TasteGraph, VertexId};

/// Number of edges with both ends in the common direct neighborhood of `v`
/// and `v2`. Raw edges of every type count; θ is not part of any
/// neighborhood.
pub fn similarity_cnd(
    graph: &TasteGraph,
    v: &VertexId,
    v2: &VertexId,
) -> Result<usize, ContextError> {
    let a = raw_neighbors(graph, graph.require(v)?);
    let common = if v == v2 {
        a
    } else {
        let b = raw_neighbors(graph, graph.require(v2)?);
        a.intersection(&b).copied().collect()
    };
    Ok(common
        .iter()
        .map(|&u| {
            graph
                .rows_at(u)
                .values()
                .flatten()
                .filter(|(t, _)| common.contains(t))
                .count()
        })
        .sum())
}

#[derive(Debug, Default)]
struct CacheInner {
    snapshot: Option<u64>,
    values: HashMap<(VertexId, VertexId), usize>,
}

/// Pairwise similarities of one snapshot, shared between queries. Values
/// are pure functions of the snapshot, so concurrent inserts of the same
/// pair agree. Switching to another snapshot id drops all entries.
#[derive(Debug, Default)]
pub struct SimilarityCache {
    inner: RwLock<CacheInner>,
    computations: AtomicUsize,
}

impl SimilarityCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Similarity computations performed so far.
    pub fn computations(&self) -> usize {
        self.computations.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_compute(
        &self,
        snapshot_id: u64,
        graph: &TasteGraph,
        v: &VertexId,
        v2: &VertexId,
    ) -> Result<usize, ContextError> {
        let key = if v <= v2 {
            (v.clone(), v2.clone())
        } else {
            (v2.clone(), v.clone())
        };
        {
            let inner = self.inner.read().expect("cache lock");
            if inner.snapshot == Some(snapshot_id) {
                if let Some(&s) = inner.values.get(&key) {
                    return Ok(s);
                }
            }
        }
        let s = similarity_cnd(graph, &key.0, &key.1)?;
        self.computations.fetch_add(1, Ordering::Relaxed);
        let mut inner = self.inner.write().expect("cache lock");
        if inner.snapshot != Some(snapshot_id) {
            inner.values.clear();
            inner.snapshot = Some(snapshot_id);
        }
        inner.values.insert(key, s);
        Ok(s)
    }
}

/// Square similarity matrix over `items`, in their given order.
pub fn similarity_matrix(
    cache: &SimilarityCache,
    snapshot_id: u64,
    graph: &TasteGraph,
    items: &[VertexId],
) -> Result<Vec<Vec<f64>>, ContextError> {
    let n = items.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let s = cache.get_or_compute(snapshot_id, graph, &items[i], &items[j])? as f64;
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    Ok(sim)
}
