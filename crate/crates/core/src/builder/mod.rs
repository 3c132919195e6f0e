//! Batch builders for the four parts of the taste graph: user preferences,
//! artist similarity, track similarity and artist tracks.
//!
//! Every builder sorts its input first, so output depends only on the set of
//! events and never on their order in the log.

mod artist_similarity;
mod artist_tracks;
mod input;
mod preferences;
mod track_similarity;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use thiserror::Error;

use crate::graph::{
    merge_parts, normalize_row, zero_balance_row, DecayModel, GraphError, TasteGraph, VertexId,
};

pub use artist_similarity::{
    binary_cosine, build_artist_similarity, representative_tracks, weighted_cosine,
};
pub use artist_tracks::{build_artist_tracks, momentum_rating, track_ratings};
pub use input::{
    interested_users, read_catalog, read_playback_log, read_playlists, Catalog, PlaybackEvent,
    PlaylistStore, TrackInfo,
};
pub use preferences::{build_user_preferences, preference_scores};
pub use track_similarity::{build_track_similarity, co_play_counts};

pub(crate) use input::{parse_field, records};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid builder config: {0}")]
    InvalidConfig(String),
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rating for unknown track `{0}`")]
    UnknownTrack(String),
}

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuilderConfig {
    /// Length of the per-user running window of recent plays.
    pub window_size: usize,
    /// Two plays by one user this close in time count as a co-play.
    pub cowindow_seconds: i64,
    /// Maximum edges kept per row.
    pub top_k: usize,
    /// Row length a fully supported row is expected to have.
    pub expected_count: usize,
    pub outlier_zscore: f64,
    /// Similarity scores below this are dropped.
    pub similarity_floor: f64,
    /// Multiplier for tracks added within `recency_days`.
    pub recent_boost: f64,
    pub refine_iterations: usize,
    pub mix_history: f64,
    pub mix_window: f64,
    pub mix_playlist: f64,
    /// Weight of positive rating growth in the artist-track row.
    pub momentum: f64,
    pub growth_window_days: i64,
    pub recency_days: i64,
    /// Exponential decay speed used to zero-balance artist-track rows.
    pub artist_track_rho: f64,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        Self {
            window_size: 1000,
            cowindow_seconds: 1800,
            top_k: 100,
            expected_count: 100,
            outlier_zscore: 2.0,
            similarity_floor: 0.01,
            recent_boost: 1.5,
            refine_iterations: 1,
            mix_history: 0.5,
            mix_window: 0.3,
            mix_playlist: 0.2,
            momentum: 0.5,
            growth_window_days: 7,
            recency_days: 30,
            artist_track_rho: 0.9,
        }
    }
}

impl BuilderConfig {
    pub fn validate(&self) -> Result<(), BuildError> {
        let bad = |m: &str| Err(BuildError::InvalidConfig(m.to_string()));
        if self.window_size == 0 || self.top_k == 0 || self.expected_count == 0 {
            return bad("window_size, top_k and expected_count must be positive");
        }
        if self.top_k > self.expected_count {
            return bad("top_k must not exceed expected_count");
        }
        if self.cowindow_seconds <= 0 || self.growth_window_days <= 0 || self.recency_days < 0 {
            return bad("time windows must be positive");
        }
        if !(self.outlier_zscore > 0.0) || !(self.similarity_floor >= 0.0) {
            return bad("outlier_zscore must be positive and similarity_floor non-negative");
        }
        if !(self.recent_boost >= 1.0) || !(self.momentum >= 0.0) {
            return bad("recent_boost must be >= 1 and momentum >= 0");
        }
        let mix = [self.mix_history, self.mix_window, self.mix_playlist];
        if mix.iter().any(|m| !(*m >= 0.0)) || mix.iter().sum::<f64>() <= 0.0 {
            return bad("mixing weights must be non-negative and not all zero");
        }
        DecayModel::exponential(self.expected_count, self.artist_track_rho)?;
        Ok(())
    }

    pub(crate) fn linear_decay(&self) -> DecayModel {
        DecayModel::Linear {
            expected_count: self.expected_count,
        }
    }
}

/// Drops entries that are outliers within their row: below the absolute
/// floor, or with a z-score below `-zscore`.
pub fn filter_outliers(
    scores: Vec<(VertexId, f64)>,
    zscore: f64,
    floor: f64,
) -> Vec<(VertexId, f64)> {
    let positive: Vec<(VertexId, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
    if positive.is_empty() {
        return positive;
    }
    let n = positive.len() as f64;
    let mean = positive.iter().map(|(_, s)| s).sum::<f64>() / n;
    let var = positive
        .iter()
        .map(|(_, s)| (s - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    positive
        .into_iter()
        .filter(|(_, s)| *s >= floor && (std <= 0.0 || (s - mean) / std >= -zscore))
        .collect()
}

/// Sorts descending (ties by key), keeps `top_k`, normalizes and
/// zero-balances. `None` for rows with no positive mass.
pub(crate) fn finish_row(
    mut scores: Vec<(VertexId, f64)>,
    top_k: usize,
    decay: &DecayModel,
) -> Result<Option<Vec<(VertexId, f64)>>, BuildError> {
    scores.retain(|(_, s)| *s > 0.0);
    if scores.is_empty() {
        return Ok(None);
    }
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scores.truncate(top_k);
    let weights: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
    let normalized = normalize_row(&weights)?;
    let row: Vec<(VertexId, f64)> = scores
        .into_iter()
        .zip(normalized)
        .map(|((v, _), w)| (v, w))
        .collect();
    Ok(Some(zero_balance_row(&row, decay)?))
}

pub(crate) fn sorted_log(log: &[PlaybackEvent]) -> Vec<&PlaybackEvent> {
    let mut sorted: Vec<&PlaybackEvent> = log.iter().collect();
    sorted.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.user.cmp(&b.user))
            .then_with(|| a.track.cmp(&b.track))
    });
    sorted
}

pub(crate) fn plays_by_user(log: &[PlaybackEvent]) -> BTreeMap<&VertexId, Vec<&PlaybackEvent>> {
    let mut by_user: BTreeMap<&VertexId, Vec<&PlaybackEvent>> = BTreeMap::new();
    for e in sorted_log(log) {
        by_user.entry(&e.user).or_default().push(e);
    }
    by_user
}

/// Builds all four parts and merges them into one graph.
pub fn build_taste_graph(
    log: &[PlaybackEvent],
    catalog: &Catalog,
    playlists: &PlaylistStore,
    today: NaiveDate,
    cfg: &BuilderConfig,
) -> Result<TasteGraph, BuildError> {
    let mut parts = vec![build_user_preferences(log, playlists, catalog, cfg)?];
    if !log.is_empty() {
        parts.push(build_artist_similarity(log, catalog, cfg)?);
        parts.push(build_track_similarity(log, cfg)?);
    }
    if !catalog.is_empty() {
        parts.push(build_artist_tracks(catalog, today, cfg)?);
    }
    Ok(merge_parts(&parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        BuilderConfig::default().validate().unwrap();
        let cfg = BuilderConfig {
            top_k: 200,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn outlier_filter_drops_low_tail_and_floor() {
        let row: Vec<_> = [0.9, 0.85, 0.8, 0.82, 0.88, 0.05, 0.005]
            .iter()
            .enumerate()
            .map(|(i, s)| (VertexId::artist(format!("a{i}")), *s))
            .collect();
        let kept = filter_outliers(row, 1.5, 0.01);
        let keys: Vec<_> = kept.iter().map(|(v, _)| v.key().to_string()).collect();
        assert_eq!(keys, ["a0", "a1", "a2", "a3", "a4"]);
    }

    #[test]
    fn flat_row_survives_filter() {
        let row = vec![(VertexId::artist("a"), 0.5), (VertexId::artist("b"), 0.5)];
        assert_eq!(filter_outliers(row.clone(), 1.0, 0.01), row);
    }
}
