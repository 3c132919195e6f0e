//! Random-walk queries over a balanced taste graph: recommendation by random
//! walk with restart, personalization of a fixed candidate list, and list
//! extension.
//!
//! All functions take a [`TransitionOperator`], which is the balanced graph
//! flattened once for repeated walks.

mod extend;
mod personalize;
mod rwr;

use thiserror::Error;

use crate::graph::GraphError;
pub use crate::graph::{StateVector, TransitionOperator};

pub use extend::extend_list;
pub use personalize::{coupling_scores, personalize};
pub use rwr::{recommend, rwr_steady_state, Convergence, RestartTarget, SteadyState};

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),
    #[error("seed must be a probability distribution, total mass is {0}")]
    InvalidSeed(f64),
    #[error("user {0} has no out-edges; fall back to a cold-start seed")]
    ColdUser(crate::graph::VertexId),
    #[error("personalization target is empty")]
    EmptyTarget,
    #[error("seed list is empty")]
    EmptySeed,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkParams {
    /// Restart probability.
    pub alpha: f64,
    pub max_iterations: usize,
    /// Stop once the L1 change between iterations falls below this.
    pub epsilon: f64,
    /// Applied to already known items: `s >= 0` multiplies their score by
    /// `1 - |s|`, `s = -1` removes them. Values in `(-1, 0)` act like `|s|`.
    pub suppression: f64,
    pub top_n: usize,
    pub restart: RestartTarget,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            max_iterations: 200,
            epsilon: 1e-10,
            suppression: 0.0,
            top_n: 10,
            restart: RestartTarget::Transitioned,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(WalkError::InvalidParams(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.epsilon > 0.0) || self.max_iterations == 0 {
            return Err(WalkError::InvalidParams(
                "epsilon must be positive and max_iterations at least 1".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.suppression) {
            return Err(WalkError::InvalidParams(format!(
                "suppression must be in [-1,1], got {}",
                self.suppression
            )));
        }
        Ok(())
    }
}

/// Step weights `(w_0, ..., w_n)`: `w_i` weighs the walk state after `i + 1`
/// steps and `w_n` the target's own weights. `w_0` may be negative to
/// suppress items the source already points at.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalizationWeights(Vec<f64>);

impl PersonalizationWeights {
    pub fn new(w: Vec<f64>) -> Result<Self, WalkError> {
        if w.len() < 2 || w.iter().any(|x| !x.is_finite()) {
            return Err(WalkError::InvalidParams(
                "personalization needs at least two finite weights".into(),
            ));
        }
        Ok(Self(w))
    }

    /// Walk depth `n`.
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn steps(&self) -> &[f64] {
        &self.0[..self.depth()]
    }

    pub fn target_weight(&self) -> f64 {
        self.0[self.depth()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Default for PersonalizationWeights {
    fn default() -> Self {
        Self(vec![0.5, 0.3, 0.2, 0.1])
    }
}

/// Sorts by descending score, ties by ascending vertex.
pub(crate) fn rank(scores: &mut [(crate::graph::VertexId, f64)]) {
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}
