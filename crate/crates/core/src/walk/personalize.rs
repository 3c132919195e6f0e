use std::collections::BTreeMap;

use super::{rank, PersonalizationWeights, StateVector, TransitionOperator, WalkError};
use crate::graph::VertexId;

/// `Σ_{i<n} w_i · x_i[v]` for every target vertex, where `x_0 = P·source` and
/// `x_i = P·x_{i-1}`. Targets absent from the graph score zero.
pub fn coupling_scores(
    op: &TransitionOperator,
    source: &StateVector,
    targets: impl IntoIterator<Item = VertexId>,
    steps: &[f64],
) -> Result<BTreeMap<VertexId, f64>, WalkError> {
    let indexed: Vec<(VertexId, Option<usize>)> = targets
        .into_iter()
        .map(|v| {
            let i = op.graph().index_of(&v);
            (v, i)
        })
        .collect();
    let mut scores: BTreeMap<VertexId, f64> =
        indexed.iter().map(|(v, _)| (v.clone(), 0.0)).collect();
    if source.is_empty() || steps.is_empty() {
        return Ok(scores);
    }

    let s = op.to_dense(source)?;
    let mut x = vec![0.0; op.len()];
    let mut next = vec![0.0; op.len()];
    op.apply(&s, &mut x);
    for (step, w) in steps.iter().enumerate() {
        if step > 0 {
            op.apply(&x, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
        for (v, i) in &indexed {
            if let Some(i) = i {
                *scores.get_mut(v).expect("every target is scored") += w * x[*i];
            }
        }
    }
    Ok(scores)
}

/// Ranks the target's vertices by
/// `rel = w_n · target + Σ_{i<n} w_i · x_i` projected on the target's support.
/// The target is normalized to unit mass first.
pub fn personalize(
    op: &TransitionOperator,
    source: &StateVector,
    target: &StateVector,
    weights: &PersonalizationWeights,
) -> Result<Vec<(VertexId, f64)>, WalkError> {
    if target.is_empty() || !(target.total() > 0.0) {
        return Err(WalkError::EmptyTarget);
    }
    let target = target.normalized();
    let coupling = coupling_scores(op, source, target.support().cloned(), weights.steps())?;
    let wn = weights.target_weight();
    let mut out: Vec<(VertexId, f64)> = coupling
        .into_iter()
        .map(|(v, c)| {
            let own = target.get(&v);
            (v, wn * own + c)
        })
        .collect();
    rank(&mut out);
    Ok(out)
}
