use std::collections::{BTreeMap, BTreeSet};

use super::{
    cluster_affinity_propagation, similarity_matrix, ClusterConfig, ContextError, SimilarityCache,
};
use crate::coldstart::mix_preferences;
use crate::graph::{EdgeType, StateVector, TransitionOperator, VertexId, VertexType};

/// Preferences with fewer items are enriched from a profile first.
pub const ENRICH_BELOW: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSet {
    pub label: String,
    pub members: BTreeSet<VertexId>,
}

fn enrich(prefs: &StateVector, profile: Option<&StateVector>) -> StateVector {
    let Some(profile) = profile else {
        return prefs.clone();
    };
    if prefs.len() >= ENRICH_BELOW || profile.is_empty() {
        return prefs.clone();
    }
    let mixed = mix_preferences(prefs, profile, ENRICH_BELOW);
    let extra = ENRICH_BELOW - prefs.len();
    let added: Vec<VertexId> = mixed
        .ranked()
        .into_iter()
        .map(|(v, _)| v)
        .filter(|v| !prefs.contains(v))
        .take(extra)
        .collect();
    mixed
        .iter()
        .filter(|(v, _)| prefs.contains(v) || added.contains(v))
        .map(|(v, w)| (v.clone(), w))
        .collect()
}

fn label(
    members: &BTreeSet<VertexId>,
    weights: &StateVector,
    artist_of: &BTreeMap<VertexId, VertexId>,
) -> String {
    let mut by_artist: BTreeMap<&VertexId, f64> = BTreeMap::new();
    for m in members {
        let artist = if m.vtype() == VertexType::Artist {
            Some(m)
        } else {
            artist_of.get(m)
        };
        if let Some(a) = artist {
            *by_artist.entry(a).or_default() += weights.get(m);
        }
    }
    let mut ranked: Vec<(&VertexId, f64)> = if by_artist.is_empty() {
        members.iter().map(|m| (m, weights.get(m))).collect()
    } else {
        by_artist.into_iter().collect()
    };
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .iter()
        .take(2)
        .map(|(v, _)| v.key())
        .collect::<Vec<_>>()
        .join(" / ")
}

/// Context sets for a user: preferences (enriched from `profile` when thin)
/// are clustered by affinity propagation over common-neighborhood
/// similarity, small clusters relinked, and each set labelled with its two
/// heaviest artists. Sets are ordered by total preference weight.
pub fn generate_context_sets(
    op: &TransitionOperator,
    snapshot_id: u64,
    cache: &SimilarityCache,
    prefs: &StateVector,
    profile: Option<&StateVector>,
    cfg: &ClusterConfig,
) -> Result<Vec<ContextSet>, ContextError> {
    cfg.validate()?;
    if prefs.is_empty() {
        return Ok(Vec::new());
    }
    let graph = op.graph();
    let weights = enrich(prefs, profile);
    let items: Vec<VertexId> = weights
        .support()
        .filter(|v| graph.contains(v))
        .cloned()
        .collect();
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let sim = similarity_matrix(cache, snapshot_id, graph, &items)?;
    let (clusters, _) = cluster_affinity_propagation(&items, &sim, cfg)?;

    let mut artist_of = BTreeMap::new();
    for e in graph.edges() {
        if e.etype == EdgeType::ArtistTrack && !e.to.is_zero() {
            artist_of.entry(e.to).or_insert(e.from);
        }
    }
    let mut sets: Vec<(f64, ContextSet)> = clusters
        .clusters
        .into_iter()
        .map(|members| {
            let total: f64 = members.iter().map(|m| weights.get(m)).sum();
            let label = label(&members, &weights, &artist_of);
            (total, ContextSet { label, members })
        })
        .collect();
    sets.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.members.first().cmp(&b.1.members.first()))
    });
    Ok(sets.into_iter().map(|(_, s)| s).collect())
}
