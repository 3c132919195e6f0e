//! Artist-artist similarity mined from co-listening.
//!
//! Pipeline: pick each artist's representative tracks, collect the users who
//! played them, score pairs by binary cosine, then refine surviving pairs with
//! a cosine in which every user is weighted by the inverse of the number of
//! artists they listen to. Outliers are filtered after each pass.

use std::collections::{BTreeMap, BTreeSet};

use super::{filter_outliers, finish_row, BuildError, BuilderConfig, Catalog, PlaybackEvent};
use crate::graph::{EdgeType, TasteGraph, VertexId};

type Listeners<'a> = BTreeMap<&'a VertexId, BTreeSet<&'a VertexId>>;

/// Top half (rounded up, at least one) of each artist's tracks by distinct
/// listener count; ties by track key.
pub fn representative_tracks<'a>(
    log: &'a [PlaybackEvent],
    catalog: &'a Catalog,
) -> BTreeMap<&'a VertexId, Vec<&'a VertexId>> {
    let mut listeners: Listeners<'a> = BTreeMap::new();
    for e in log {
        listeners.entry(&e.track).or_default().insert(&e.user);
    }
    catalog
        .tracks_by_artist()
        .into_iter()
        .map(|(artist, mut tracks)| {
            let count = |t: &VertexId| listeners.get(t).map_or(0, |s| s.len());
            tracks.sort_by(|a, b| count(b).cmp(&count(a)).then_with(|| a.cmp(b)));
            let keep = tracks.len().div_ceil(2).max(1);
            tracks.truncate(keep);
            (artist, tracks)
        })
        .collect()
}

/// `|A ∩ B| / sqrt(|A| |B|)` over listener sets.
pub fn binary_cosine(a: &BTreeSet<&VertexId>, b: &BTreeSet<&VertexId>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let common = a.intersection(b).count() as f64;
    common / ((a.len() * b.len()) as f64).sqrt()
}

/// Cosine over listener sets with per-user weights.
pub fn weighted_cosine(
    a: &BTreeSet<&VertexId>,
    b: &BTreeSet<&VertexId>,
    weight: &BTreeMap<&VertexId, f64>,
) -> f64 {
    let w = |u: &&VertexId| weight.get(u).copied().unwrap_or(0.0);
    let na: f64 = a.iter().map(w).sum();
    let nb: f64 = b.iter().map(w).sum();
    if na <= 0.0 || nb <= 0.0 {
        return 0.0;
    }
    let common: f64 = a.intersection(b).map(w).sum();
    common / (na * nb).sqrt()
}

pub fn build_artist_similarity(
    log: &[PlaybackEvent],
    catalog: &Catalog,
    cfg: &BuilderConfig,
) -> Result<TasteGraph, BuildError> {
    cfg.validate()?;
    let reps = representative_tracks(log, catalog);
    let rep_artist: BTreeMap<&VertexId, &VertexId> = reps
        .iter()
        .flat_map(|(a, ts)| ts.iter().map(move |t| (*t, *a)))
        .collect();

    let mut fans: Listeners = BTreeMap::new();
    for e in log {
        if let Some(artist) = rep_artist.get(&e.track) {
            fans.entry(artist).or_default().insert(&e.user);
        }
    }
    let mut artists_per_user: BTreeMap<&VertexId, f64> = BTreeMap::new();
    for users in fans.values() {
        for u in users {
            *artists_per_user.entry(u).or_default() += 1.0;
        }
    }
    let inverse: BTreeMap<&VertexId, f64> = artists_per_user
        .iter()
        .map(|(u, n)| (*u, 1.0 / n))
        .collect();

    let artists: Vec<&VertexId> = fans.keys().copied().collect();
    let mut rows: BTreeMap<&VertexId, Vec<(VertexId, f64)>> = BTreeMap::new();
    for a in &artists {
        let row = artists
            .iter()
            .filter(|b| *b != a)
            .map(|b| ((*b).clone(), binary_cosine(&fans[a], &fans[b])))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        rows.insert(a, row);
    }

    for _ in 0..cfg.refine_iterations {
        for (a, row) in rows.iter_mut() {
            let survivors = filter_outliers(
                std::mem::take(row),
                cfg.outlier_zscore,
                cfg.similarity_floor,
            );
            *row = survivors
                .into_iter()
                .map(|(b, _)| {
                    let s = weighted_cosine(&fans[a], &fans[&b], &inverse);
                    (b, s)
                })
                .collect();
        }
    }

    let decay = cfg.linear_decay();
    let mut graph = TasteGraph::new();
    for (a, row) in rows {
        let filtered = filter_outliers(row, cfg.outlier_zscore, cfg.similarity_floor);
        if let Some(row) = finish_row(filtered, cfg.top_k, &decay)? {
            graph.insert_row(a, EdgeType::SimilarArtist, &row)?;
        }
    }
    Ok(graph)
}
