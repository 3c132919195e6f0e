use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};

use super::{finish_row, BuildError, BuilderConfig, Catalog, TrackInfo};
use crate::graph::{DecayModel, EdgeType, TasteGraph, VertexId};

fn days_before(today: NaiveDate, n: i64) -> NaiveDate {
    today
        .checked_sub_days(Days::new(n.max(0) as u64))
        .unwrap_or(NaiveDate::MIN)
}

/// Overall rating adjusted for recent growth and recency of the track.
///
/// `growth = (last window - prior window) / (prior window + 1)`, and the
/// rating is scaled by `1 + momentum * max(0, growth)`. Tracks added within
/// `recency_days` are further multiplied by `recent_boost`.
pub fn momentum_rating(info: &TrackInfo, today: NaiveDate, cfg: &BuilderConfig) -> f64 {
    let total = info.total_rating(today);
    let w = cfg.growth_window_days;
    let recent = info.rating_between(days_before(today, w), today);
    let prior = info.rating_between(days_before(today, 2 * w), days_before(today, w));
    let growth = (recent - prior) / (prior + 1.0);
    let mut rating = total * (1.0 + cfg.momentum * growth.max(0.0));
    if info.added <= today && (today - info.added).num_days() <= cfg.recency_days {
        rating *= cfg.recent_boost;
    }
    rating
}

/// System-wide rating of every track (total rating up to `today`).
pub fn track_ratings(catalog: &Catalog, today: NaiveDate) -> BTreeMap<VertexId, f64> {
    catalog
        .iter()
        .map(|(t, info)| (t.clone(), info.total_rating(today)))
        .collect()
}

/// ArtistTrack rows weighted by momentum-adjusted rating, zero-balanced with
/// exponential decay.
pub fn build_artist_tracks(
    catalog: &Catalog,
    today: NaiveDate,
    cfg: &BuilderConfig,
) -> Result<TasteGraph, BuildError> {
    cfg.validate()?;
    if catalog.is_empty() {
        return Err(BuildError::EmptyCatalog);
    }
    let decay = DecayModel::exponential(cfg.expected_count, cfg.artist_track_rho)?;
    let mut graph = TasteGraph::new();
    for (artist, tracks) in catalog.tracks_by_artist() {
        let scores = tracks
            .into_iter()
            .filter_map(|t| {
                catalog
                    .get(t)
                    .map(|info| (t.clone(), momentum_rating(info, today, cfg)))
            })
            .collect();
        if let Some(row) = finish_row(scores, cfg.top_k, &decay)? {
            graph.insert_row(artist, EdgeType::ArtistTrack, &row)?;
        }
    }
    Ok(graph)
}
