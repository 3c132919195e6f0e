use std::collections::{BTreeMap, BTreeSet};

use super::{filter_outliers, finish_row, plays_by_user, BuildError, BuilderConfig, PlaybackEvent};
use crate::graph::{EdgeType, TasteGraph, VertexId};

/// Co-play counts keyed by unordered track pair `(lo, hi)`.
///
/// For every play, each distinct other track the same user played within the
/// preceding `window` seconds adds one to the pair. Repeats of a track inside
/// one window therefore count once per play rather than once per
/// combination.
pub fn co_play_counts(log: &[PlaybackEvent], window: i64) -> BTreeMap<(VertexId, VertexId), u64> {
    let mut co: BTreeMap<(VertexId, VertexId), u64> = BTreeMap::new();
    for plays in plays_by_user(log).values() {
        for (j, current) in plays.iter().enumerate() {
            let mut seen: BTreeSet<&VertexId> = BTreeSet::new();
            for earlier in plays[..j].iter().rev() {
                if current.timestamp - earlier.timestamp > window {
                    break;
                }
                if earlier.track != current.track {
                    seen.insert(&earlier.track);
                }
            }
            for other in seen {
                let key = if *other < current.track {
                    (other.clone(), current.track.clone())
                } else {
                    (current.track.clone(), other.clone())
                };
                *co.entry(key).or_default() += 1;
            }
        }
    }
    co
}

/// SimilarTrack rows scored `co(A,B) / sqrt(pop(A) pop(B))`, where `pop` is
/// the total play count.
pub fn build_track_similarity(
    log: &[PlaybackEvent],
    cfg: &BuilderConfig,
) -> Result<TasteGraph, BuildError> {
    cfg.validate()?;
    let mut pop: BTreeMap<&VertexId, f64> = BTreeMap::new();
    for e in log {
        *pop.entry(&e.track).or_default() += 1.0;
    }
    let mut rows: BTreeMap<VertexId, Vec<(VertexId, f64)>> = BTreeMap::new();
    for ((a, b), count) in co_play_counts(log, cfg.cowindow_seconds) {
        let score = count as f64 / (pop[&a] * pop[&b]).sqrt();
        rows.entry(a.clone()).or_default().push((b.clone(), score));
        rows.entry(b).or_default().push((a, score));
    }

    let decay = cfg.linear_decay();
    let mut graph = TasteGraph::new();
    for (track, row) in rows {
        let filtered = filter_outliers(row, cfg.outlier_zscore, cfg.similarity_floor);
        if let Some(row) = finish_row(filtered, cfg.top_k, &decay)? {
            graph.insert_row(&track, EdgeType::SimilarTrack, &row)?;
        }
    }
    Ok(graph)
}
