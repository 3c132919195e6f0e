use std::collections::BTreeMap;

use crate::graph::{StateVector, TransitionOperator, VertexId, VertexType};
use crate::walk::{personalize, PersonalizationWeights, WalkError};

/// The `size` best-rated tracks, ties broken by ascending id.
pub fn top_pool(ratings: &BTreeMap<VertexId, f64>, size: usize) -> Vec<(VertexId, f64)> {
    let mut pool: Vec<(VertexId, f64)> = ratings
        .iter()
        .filter(|(v, r)| v.vtype() == VertexType::Track && **r > 0.0)
        .map(|(v, r)| (v.clone(), *r))
        .collect();
    pool.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    pool.truncate(size);
    pool
}

/// Ranks the global pool for `user` with the pool's normalized ratings as
/// the personalization target, and keeps the best `top`. A user without
/// out-edges gets the pool in rating order.
pub fn mainpage(
    op: &TransitionOperator,
    user: &VertexId,
    pool: &[(VertexId, f64)],
    weights: &PersonalizationWeights,
    top: usize,
) -> Result<Vec<(VertexId, f64)>, WalkError> {
    if pool.is_empty() {
        return Ok(Vec::new());
    }
    let target = StateVector::from_weights(pool.iter().cloned()).normalized();
    let source = if op.graph().has_out_edges(user) {
        StateVector::unit(user.clone())
    } else {
        StateVector::new()
    };
    let mut out = personalize(op, &source, &target, weights)?;
    out.truncate(top);
    Ok(out)
}
