//! The taste graph: typed vertices, typed weighted edges grouped into
//! per-(vertex, edge type) rows that each sum to one, plus the absorbing
//! zero-balancing vertex.

mod balance;
mod decay;
mod state;
mod transition;
mod vertex;

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

pub use balance::{balanced_weight, BalancingConfig};
pub use decay::{normalize_row, zero_balance_row, DecayModel};
pub use state::StateVector;
pub use transition::{transition, TransitionOperator};
pub use vertex::{EdgeRecord, EdgeType, VertexId, VertexType, ZERO_KEY};

/// Row sums must match one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("row has only zero weights")]
    AllZeroRow,
    #[error("row of {len} edges exceeds the expected count {limit}")]
    RowTooLong { len: usize, limit: usize },
    #[error("invalid decay model: {0}")]
    InvalidDecay(String),
    #[error("invalid edge weight {0}")]
    InvalidWeight(f64),
    #[error("row ({vertex}, {etype}) sums to {sum}, not 1")]
    NotStochastic {
        vertex: VertexId,
        etype: EdgeType,
        sum: f64,
    },
    #[error("duplicate edge {from} -{etype}-> {to}")]
    DuplicateEdge {
        from: VertexId,
        etype: EdgeType,
        to: VertexId,
    },
    #[error("row ({vertex}, {etype}) is defined more than once")]
    RowConflict { vertex: VertexId, etype: EdgeType },
    #[error("the zero-balancing vertex only owns its absorbing self-loop")]
    ZeroVertexRow,
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("no edge {from} -{etype}-> {to}")]
    UnknownEdge {
        from: VertexId,
        etype: EdgeType,
        to: VertexId,
    },
    #[error("balancing table has no entry for ({0}, {1})")]
    MissingBalanceEntry(VertexType, EdgeType),
    #[error("balancing weights for {vtype} sum to {sum}, not 1")]
    BalanceNotNormalized { vtype: VertexType, sum: f64 },
    #[error("state vector mass {0} exceeds 1")]
    ExcessMass(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

type Row = Vec<(usize, f64)>;

/// A partly stochastic taste graph.
///
/// Vertices are interned; index 0 is always the zero-balancing vertex with its
/// weight-1 self-loop. Rows are keyed by (vertex, edge type) and each sums to
/// one.
#[derive(Debug, Clone)]
pub struct TasteGraph {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    rows: Vec<BTreeMap<EdgeType, Row>>,
}

impl Default for TasteGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl TasteGraph {
    pub const ZERO_INDEX: usize = 0;

    pub fn new() -> Self {
        let zero = VertexId::zero();
        let mut rows = vec![BTreeMap::new()];
        rows[0].insert(EdgeType::Absorb, vec![(Self::ZERO_INDEX, 1.0)]);
        Self {
            index: HashMap::from([(zero.clone(), Self::ZERO_INDEX)]),
            ids: vec![zero],
            rows,
        }
    }

    /// Number of vertices, the zero-balancing vertex included.
    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &VertexId> {
        self.ids.iter()
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        self.index.contains_key(v)
    }

    pub fn index_of(&self, v: &VertexId) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn id(&self, index: usize) -> &VertexId {
        &self.ids[index]
    }

    pub(crate) fn require(&self, v: &VertexId) -> Result<usize, GraphError> {
        self.index_of(v)
            .ok_or_else(|| GraphError::UnknownVertex(v.clone()))
    }

    pub fn add_vertex(&mut self, v: VertexId) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.ids.len();
        self.index.insert(v.clone(), i);
        self.ids.push(v);
        self.rows.push(BTreeMap::new());
        i
    }

    /// Adds a new row. Fails on conflicts, duplicates or a row that does not
    /// sum to one.
    pub fn insert_row(
        &mut self,
        from: &VertexId,
        etype: EdgeType,
        row: &[(VertexId, f64)],
    ) -> Result<(), GraphError> {
        self.insert_row_with_tolerance(from, etype, row, ROW_SUM_TOLERANCE)
    }

    pub(crate) fn insert_row_with_tolerance(
        &mut self,
        from: &VertexId,
        etype: EdgeType,
        row: &[(VertexId, f64)],
        tolerance: f64,
    ) -> Result<(), GraphError> {
        if from.is_zero() || etype == EdgeType::Absorb {
            return Err(GraphError::ZeroVertexRow);
        }
        if let Some(&i) = self.index.get(from) {
            if self.rows[i].contains_key(&etype) {
                return Err(GraphError::RowConflict {
                    vertex: from.clone(),
                    etype,
                });
            }
        }
        check_row(from, etype, row, tolerance)?;
        let fi = self.add_vertex(from.clone());
        let interned: Row = row
            .iter()
            .map(|(to, w)| (self.add_vertex(to.clone()), *w))
            .collect();
        self.rows[fi].insert(etype, interned);
        Ok(())
    }

    /// Replaces an existing row (or adds it), used when producing a modified
    /// copy of a published snapshot.
    pub fn replace_row(
        &mut self,
        from: &VertexId,
        etype: EdgeType,
        row: &[(VertexId, f64)],
    ) -> Result<(), GraphError> {
        if let Some(&i) = self.index.get(from) {
            if from.is_zero() {
                return Err(GraphError::ZeroVertexRow);
            }
            check_row(from, etype, row, ROW_SUM_TOLERANCE)?;
            self.rows[i].remove(&etype);
        }
        self.insert_row(from, etype, row)
    }

    pub fn row(&self, from: &VertexId, etype: EdgeType) -> Option<Vec<(&VertexId, f64)>> {
        let i = self.index_of(from)?;
        self.rows[i]
            .get(&etype)
            .map(|r| r.iter().map(|&(t, w)| (&self.ids[t], w)).collect())
    }

    pub(crate) fn rows_at(&self, index: usize) -> &BTreeMap<EdgeType, Row> {
        &self.rows[index]
    }

    /// Edge types with a non-empty row at `v`.
    pub fn row_types(&self, v: &VertexId) -> Vec<EdgeType> {
        self.index_of(v)
            .map(|i| self.rows[i].keys().copied().collect())
            .unwrap_or_default()
    }

    pub fn has_out_edges(&self, v: &VertexId) -> bool {
        self.index_of(v).is_some_and(|i| !self.rows[i].is_empty())
    }

    pub fn edge_weight(&self, from: &VertexId, etype: EdgeType, to: &VertexId) -> Option<f64> {
        let (fi, ti) = (self.index_of(from)?, self.index_of(to)?);
        self.rows[fi]
            .get(&etype)?
            .iter()
            .find(|(t, _)| *t == ti)
            .map(|(_, w)| *w)
    }

    pub fn edge_count(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.values())
            .map(|r| r.len())
            .sum()
    }

    /// Every edge, sorted by (from, edge type, to).
    pub fn edges(&self) -> Vec<EdgeRecord> {
        let mut out: Vec<EdgeRecord> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(fi, rows)| {
                rows.iter().flat_map(move |(etype, row)| {
                    row.iter().map(move |&(ti, w)| EdgeRecord {
                        from: self.ids[fi].clone(),
                        to: self.ids[ti].clone(),
                        etype: *etype,
                        weight: w,
                    })
                })
            })
            .collect();
        out.sort_by(|a, b| {
            a.from
                .cmp(&b.from)
                .then(a.etype.cmp(&b.etype))
                .then_with(|| a.to.cmp(&b.to))
        });
        out
    }

    /// Checks every row invariant.
    pub fn validate(&self, tolerance: f64) -> Result<(), GraphError> {
        for (fi, rows) in self.rows.iter().enumerate() {
            for (etype, row) in rows {
                let resolved: Vec<(VertexId, f64)> =
                    row.iter().map(|&(t, w)| (self.ids[t].clone(), w)).collect();
                check_row(&self.ids[fi], *etype, &resolved, tolerance)?;
            }
        }
        let zero_rows = &self.rows[Self::ZERO_INDEX];
        if zero_rows.len() != 1 || zero_rows.get(&EdgeType::Absorb) != Some(&vec![(0, 1.0)]) {
            return Err(GraphError::ZeroVertexRow);
        }
        Ok(())
    }
}

impl PartialEq for TasteGraph {
    fn eq(&self, other: &Self) -> bool {
        let mut a: Vec<_> = self.ids.iter().collect();
        let mut b: Vec<_> = other.ids.iter().collect();
        a.sort();
        b.sort();
        a == b && self.edges() == other.edges()
    }
}

fn check_row(
    from: &VertexId,
    etype: EdgeType,
    row: &[(VertexId, f64)],
    tolerance: f64,
) -> Result<(), GraphError> {
    let mut seen = HashSet::with_capacity(row.len());
    for (to, w) in row {
        if !(0.0..=1.0).contains(w) {
            return Err(GraphError::InvalidWeight(*w));
        }
        if !seen.insert(to) {
            return Err(GraphError::DuplicateEdge {
                from: from.clone(),
                etype,
                to: to.clone(),
            });
        }
    }
    let sum: f64 = row.iter().map(|(_, w)| w).sum();
    if row.is_empty() || (sum - 1.0).abs() > tolerance {
        return Err(GraphError::NotStochastic {
            vertex: from.clone(),
            etype,
            sum,
        });
    }
    Ok(())
}

/// Combines independently built graph parts. Each (vertex, edge type) row
/// must come from exactly one part.
pub fn merge_parts(parts: &[TasteGraph]) -> Result<TasteGraph, GraphError> {
    let mut merged = TasteGraph::new();
    for part in parts {
        for v in part.vertices() {
            merged.add_vertex(v.clone());
        }
        for (fi, rows) in part.rows.iter().enumerate() {
            for (etype, row) in rows {
                if *etype == EdgeType::Absorb {
                    continue;
                }
                let resolved: Vec<(VertexId, f64)> =
                    row.iter().map(|&(t, w)| (part.ids[t].clone(), w)).collect();
                merged.insert_row(&part.ids[fi], *etype, &resolved)?;
            }
        }
    }
    Ok(merged)
}
