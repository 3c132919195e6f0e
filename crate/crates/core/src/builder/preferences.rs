use std::collections::BTreeMap;

use super::{
    finish_row, plays_by_user, BuildError, BuilderConfig, Catalog, PlaybackEvent, PlaylistStore,
};
use crate::graph::{EdgeType, TasteGraph, VertexId};

fn shares<'a>(items: impl IntoIterator<Item = &'a VertexId>) -> BTreeMap<&'a VertexId, f64> {
    let mut counts: BTreeMap<&VertexId, f64> = BTreeMap::new();
    let mut total = 0.0;
    for v in items {
        *counts.entry(v).or_default() += 1.0;
        total += 1.0;
    }
    counts.values_mut().for_each(|c| *c /= total);
    counts
}

/// Mixed per-track preference scores of one user, before truncation and
/// zero-balancing. Each source (full history, recent window, playlists) is
/// normalized on its own; sources the user has no data for drop out of the
/// mix and the remaining mixing weights are renormalized.
pub fn preference_scores(
    plays: &[&PlaybackEvent],
    playlist: &[VertexId],
    cfg: &BuilderConfig,
) -> BTreeMap<VertexId, f64> {
    let history = shares(plays.iter().map(|e| &e.track));
    let tail = &plays[plays.len().saturating_sub(cfg.window_size)..];
    let window = shares(tail.iter().map(|e| &e.track));
    let listed = shares(playlist);

    let sources = [
        (cfg.mix_history, history),
        (cfg.mix_window, window),
        (cfg.mix_playlist, listed),
    ];
    let active: f64 = sources
        .iter()
        .filter(|(_, s)| !s.is_empty())
        .map(|(a, _)| a)
        .sum();
    let mut scores: BTreeMap<VertexId, f64> = BTreeMap::new();
    if active <= 0.0 {
        return scores;
    }
    for (alpha, source) in &sources {
        for (track, share) in source {
            *scores.entry((*track).clone()).or_default() += alpha / active * share;
        }
    }
    scores
}

/// Likes (user -> track) and Prefers (user -> artist) rows for every user
/// with plays or playlists. Rows are zero-balanced with linear decay.
pub fn build_user_preferences(
    log: &[PlaybackEvent],
    playlists: &PlaylistStore,
    catalog: &Catalog,
    cfg: &BuilderConfig,
) -> Result<TasteGraph, BuildError> {
    cfg.validate()?;
    let decay = cfg.linear_decay();
    let by_user = plays_by_user(log);
    let mut users: Vec<&VertexId> = by_user.keys().copied().collect();
    users.extend(playlists.users());
    users.sort();
    users.dedup();

    let mut graph = TasteGraph::new();
    for user in users {
        let plays = by_user.get(user).map(Vec::as_slice).unwrap_or(&[]);
        let scores = preference_scores(plays, playlists.get(user), cfg);

        let mut artists: BTreeMap<VertexId, f64> = BTreeMap::new();
        for (track, s) in &scores {
            if let Some(artist) = catalog.artist_of(track) {
                *artists.entry(artist.clone()).or_default() += s;
            }
        }
        if let Some(row) = finish_row(scores.into_iter().collect(), cfg.top_k, &decay)? {
            graph.insert_row(user, EdgeType::Likes, &row)?;
        }
        if let Some(row) = finish_row(artists.into_iter().collect(), cfg.top_k, &decay)? {
            graph.insert_row(user, EdgeType::Prefers, &row)?;
        }
    }
    Ok(graph)
}
