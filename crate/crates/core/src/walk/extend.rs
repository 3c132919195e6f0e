use std::collections::BTreeSet;

use super::rwr::top_tracks;
use super::{
    coupling_scores, rank, rwr_steady_state, PersonalizationWeights, StateVector,
    TransitionOperator, WalkError, WalkParams,
};
use crate::graph::VertexId;

/// Extends a list with similar tracks, tuned by the user's preferences.
///
/// A seed shorter than `min_seed` is first enriched with the user's
/// preference items most strongly coupled to it. The enriched seed drives a
/// random walk; each candidate's walk score `s` is then combined with the
/// user's coupling `c` to it as `s · (1 + c)`. Seed items are never
/// returned.
pub fn extend_list(
    op: &TransitionOperator,
    items: &[VertexId],
    user_prefs: &StateVector,
    params: &WalkParams,
    weights: &PersonalizationWeights,
    min_seed: usize,
) -> Result<Vec<(VertexId, f64)>, WalkError> {
    if items.is_empty() {
        return Err(WalkError::EmptySeed);
    }
    let mut seed: Vec<VertexId> = Vec::new();
    for item in items {
        if !seed.contains(item) {
            seed.push(item.clone());
        }
    }

    if seed.len() < min_seed && !user_prefs.is_empty() {
        let source = StateVector::uniform(&seed);
        let pool: Vec<VertexId> = user_prefs
            .support()
            .filter(|v| !seed.contains(v))
            .cloned()
            .collect();
        let mut coupled: Vec<(VertexId, f64)> =
            coupling_scores(op, &source, pool, weights.steps())?
                .into_iter()
                .filter(|(_, c)| *c > 0.0)
                .collect();
        rank(&mut coupled);
        let missing = min_seed - seed.len();
        seed.extend(coupled.into_iter().take(missing).map(|(v, _)| v));
    }

    let state = rwr_steady_state(op, &StateVector::uniform(&seed), params)?;
    let exclude: BTreeSet<VertexId> = seed.iter().cloned().collect();
    let everything = WalkParams {
        suppression: -1.0,
        top_n: usize::MAX,
        ..*params
    };
    let candidates = top_tracks(&state.pre_restart, &everything, &exclude);

    let coupling = if user_prefs.is_empty() {
        Default::default()
    } else {
        coupling_scores(
            op,
            user_prefs,
            candidates.iter().map(|(v, _)| v.clone()),
            weights.steps(),
        )?
    };
    let mut out: Vec<(VertexId, f64)> = candidates
        .into_iter()
        .map(|(v, s)| {
            let c = coupling.get(&v).copied().unwrap_or(0.0);
            (v, s * (1.0 + c))
        })
        .collect();
    rank(&mut out);
    out.truncate(params.top_n);
    Ok(out)
}
