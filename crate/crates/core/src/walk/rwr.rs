use std::collections::BTreeSet;

use super::{rank, StateVector, TransitionOperator, WalkError, WalkParams};
use crate::graph::{VertexId, VertexType};

/// Where the walk restarts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartTarget {
    /// Restart at `next(seed)`: seed vertices get no restart mass, so items
    /// the user already has do not dominate.
    #[default]
    Transitioned,
    /// Classic restart at the seed itself.
    Seed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    Converged,
    /// Iteration budget exhausted with the residual within `100 * epsilon`.
    WithinTolerance,
    NoConvergence,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// State right before the last restart; used for recommendations.
    pub pre_restart: StateVector,
    pub post_restart: StateVector,
    pub iterations: usize,
    /// L1 change per iteration.
    pub residuals: Vec<f64>,
    pub status: Convergence,
}

impl SteadyState {
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Iterates `y = P x; x = α r + (1 - α) y` until the L1 change drops below
/// `epsilon`, where `r` is the restart vector chosen by `params.restart`.
pub fn rwr_steady_state(
    op: &TransitionOperator,
    seed: &StateVector,
    params: &WalkParams,
) -> Result<SteadyState, WalkError> {
    params.validate()?;
    let mass = seed.total();
    if seed.is_empty() || (mass - 1.0).abs() > 1e-9 {
        return Err(WalkError::InvalidSeed(mass));
    }
    let s = op.to_dense(seed)?;
    let restart = match params.restart {
        RestartTarget::Seed => s.clone(),
        RestartTarget::Transitioned => {
            let mut r = vec![0.0; op.len()];
            op.apply(&s, &mut r);
            r
        }
    };

    let alpha = params.alpha;
    let mut x = s;
    let mut y = vec![0.0; op.len()];
    let mut residuals = Vec::new();
    for _ in 0..params.max_iterations {
        op.apply(&x, &mut y);
        let mut residual = 0.0;
        for ((xi, &yi), &ri) in x.iter_mut().zip(&y).zip(&restart) {
            let next = alpha * ri + (1.0 - alpha) * yi;
            residual += (next - *xi).abs();
            *xi = next;
        }
        residuals.push(residual);
        if residual < params.epsilon {
            break;
        }
    }
    let last = residuals.last().copied().unwrap_or(0.0);
    let status = if last < params.epsilon {
        Convergence::Converged
    } else if last <= 100.0 * params.epsilon {
        Convergence::WithinTolerance
    } else {
        Convergence::NoConvergence
    };
    Ok(SteadyState {
        pre_restart: op.to_sparse(&y),
        post_restart: op.to_sparse(&x),
        iterations: residuals.len(),
        residuals,
        status,
    })
}

/// Top tracks for `user` from the pre-restart steady state, with known items
/// suppressed per `params.suppression`.
pub fn recommend(
    op: &TransitionOperator,
    user: &VertexId,
    params: &WalkParams,
    known: &BTreeSet<VertexId>,
) -> Result<Vec<(VertexId, f64)>, WalkError> {
    if !op.graph().has_out_edges(user) {
        return Err(WalkError::ColdUser(user.clone()));
    }
    let state = rwr_steady_state(op, &StateVector::unit(user.clone()), params)?;
    Ok(top_tracks(&state.pre_restart, params, known))
}

pub(crate) fn top_tracks(
    scores: &StateVector,
    params: &WalkParams,
    known: &BTreeSet<VertexId>,
) -> Vec<(VertexId, f64)> {
    let remove = params.suppression <= -1.0;
    let factor = 1.0 - params.suppression.abs();
    let mut out: Vec<(VertexId, f64)> = scores
        .restrict_type(VertexType::Track)
        .iter()
        .filter_map(|(v, s)| match known.contains(v) {
            true if remove => None,
            true => Some((v.clone(), s * factor)),
            false => Some((v.clone(), s)),
        })
        .filter(|(_, s)| *s > 0.0)
        .collect();
    rank(&mut out);
    out.truncate(params.top_n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BalancingConfig, EdgeType, TasteGraph};

    fn pair_graph() -> TasteGraph {
        let mut g = TasteGraph::new();
        let u = VertexId::track("u");
        let i = VertexId::track("i");
        g.insert_row(&u, EdgeType::SimilarTrack, &[(i.clone(), 1.0)])
            .unwrap();
        g.insert_row(&i, EdgeType::SimilarTrack, &[(u, 1.0)])
            .unwrap();
        g
    }

    #[test]
    fn classic_form_two_vertex_fixed_point() {
        let g = pair_graph();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let params = WalkParams {
            restart: RestartTarget::Seed,
            epsilon: 1e-15,
            ..Default::default()
        };
        let st = rwr_steady_state(&op, &StateVector::unit(VertexId::track("u")), &params).unwrap();
        assert_eq!(st.status, Convergence::Converged);
        assert!((st.post_restart.get(&VertexId::track("u")) - 2.0 / 3.0).abs() < 1e-12);
        assert!((st.post_restart.get(&VertexId::track("i")) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_stage_two_vertex_fixed_point() {
        // restart target P s = {i: 1}; x = 0.5 e_i + 0.5 P x gives x_i = 2/3
        let g = pair_graph();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let params = WalkParams {
            epsilon: 1e-15,
            ..Default::default()
        };
        let st = rwr_steady_state(&op, &StateVector::unit(VertexId::track("u")), &params).unwrap();
        assert!((st.post_restart.get(&VertexId::track("i")) - 2.0 / 3.0).abs() < 1e-12);
        assert!((st.post_restart.get(&VertexId::track("u")) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absorbing_seed() {
        let g = pair_graph();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let st = rwr_steady_state(
            &op,
            &StateVector::unit(VertexId::zero()),
            &WalkParams::default(),
        )
        .unwrap();
        assert_eq!(st.pre_restart, StateVector::unit(VertexId::zero()));
        assert_eq!(st.post_restart, StateVector::unit(VertexId::zero()));
    }

    #[test]
    fn rejects_bad_input() {
        let g = pair_graph();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let half = StateVector::from_weights([(VertexId::track("u"), 0.5)]);
        assert!(matches!(
            rwr_steady_state(&op, &half, &WalkParams::default()),
            Err(WalkError::InvalidSeed(_))
        ));
        let bad = WalkParams {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(rwr_steady_state(&op, &StateVector::unit(VertexId::track("u")), &bad).is_err());
        assert!(matches!(
            recommend(
                &op,
                &VertexId::user("ghost"),
                &WalkParams::default(),
                &BTreeSet::new()
            ),
            Err(WalkError::ColdUser(_))
        ));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let g = pair_graph();
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let params = WalkParams {
            max_iterations: 2,
            ..Default::default()
        };
        let st = rwr_steady_state(&op, &StateVector::unit(VertexId::track("u")), &params).unwrap();
        assert_eq!(st.status, Convergence::NoConvergence);
        assert_eq!(st.iterations, 2);
    }
}
