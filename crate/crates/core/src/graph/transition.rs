use std::collections::BTreeMap;

use super::balance::balanced_out;
use super::{BalancingConfig, GraphError, StateVector, TasteGraph, VertexId};

/// Balanced one-step transition of a graph, flattened for repeated use.
///
/// `out[v]` lists the balanced mass `next(v)` sends to each target, with
/// parallel edges of different types merged. Every list sums to one.
#[derive(Debug, Clone)]
pub struct TransitionOperator<'g> {
    graph: &'g TasteGraph,
    out: Vec<Vec<(usize, f64)>>,
}

impl<'g> TransitionOperator<'g> {
    pub fn new(graph: &'g TasteGraph, cfg: &BalancingConfig) -> Result<Self, GraphError> {
        let out = (0..graph.vertex_count())
            .map(|i| {
                let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
                for (t, w) in balanced_out(graph, cfg, i)? {
                    *merged.entry(t).or_default() += w;
                }
                Ok(merged.into_iter().collect())
            })
            .collect::<Result<Vec<Vec<(usize, f64)>>, GraphError>>()?;
        Ok(Self { graph, out })
    }

    pub fn graph(&self) -> &'g TasteGraph {
        self.graph
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out.is_empty()
    }

    /// `next(v)` as (target index, mass) pairs.
    pub fn next_of(&self, index: usize) -> &[(usize, f64)] {
        &self.out[index]
    }

    /// `out = Pᵀ x` over dense vectors indexed like the graph.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (v, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(t, w) in &self.out[v] {
                out[t] += mass * w;
            }
        }
    }

    pub fn to_dense(&self, x: &StateVector) -> Result<Vec<f64>, GraphError> {
        let mut dense = vec![0.0; self.len()];
        for (v, w) in x.iter() {
            dense[self.graph.require(v)?] += w;
        }
        Ok(dense)
    }

    pub fn to_sparse(&self, dense: &[f64]) -> StateVector {
        dense
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| (self.graph.id(i).clone(), *w))
            .collect()
    }

    pub fn step(&self, x: &StateVector) -> Result<StateVector, GraphError> {
        let dense = self.to_dense(x)?;
        let mut out = vec![0.0; self.len()];
        self.apply(&dense, &mut out);
        Ok(self.to_sparse(&out))
    }

    /// Balanced one-step mass from `v` to each neighbor.
    pub fn next_vector(&self, v: &VertexId) -> Result<StateVector, GraphError> {
        let i = self.graph.require(v)?;
        Ok(self.out[i]
            .iter()
            .map(|&(t, w)| (self.graph.id(t).clone(), w))
            .collect())
    }
}

/// One balanced random-walk step: `Σ_v x[v] · next(v)`.
pub fn transition(
    graph: &TasteGraph,
    cfg: &BalancingConfig,
    x: &StateVector,
) -> Result<StateVector, GraphError> {
    let total = x.total();
    if total > 1.0 + 1e-9 {
        return Err(GraphError::ExcessMass(total));
    }
    TransitionOperator::new(graph, cfg)?.step(x)
}
