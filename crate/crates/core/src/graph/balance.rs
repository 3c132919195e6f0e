use std::collections::BTreeMap;

use super::{EdgeRecord, EdgeType, GraphError, TasteGraph, VertexId, VertexType};

/// Per-(vertex type, edge type) mixing weights that turn a partly stochastic
/// graph into a stochastic one. Each vertex type's weights sum to one.
///
/// The zero-balancing vertex is implicitly `(Zero, Absorb) = 1` and needs no
/// entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancingConfig {
    table: BTreeMap<(VertexType, EdgeType), f64>,
}

impl Default for BalancingConfig {
    fn default() -> Self {
        Self::new([
            ((VertexType::User, EdgeType::Likes), 0.6),
            ((VertexType::User, EdgeType::Prefers), 0.4),
            ((VertexType::Artist, EdgeType::SimilarArtist), 0.3),
            ((VertexType::Artist, EdgeType::ArtistTrack), 0.7),
            ((VertexType::Track, EdgeType::SimilarTrack), 1.0),
        ])
        .expect("default balancing table is normalized")
    }
}

impl BalancingConfig {
    pub fn new(
        entries: impl IntoIterator<Item = ((VertexType, EdgeType), f64)>,
    ) -> Result<Self, GraphError> {
        let table: BTreeMap<_, _> = entries.into_iter().collect();
        let cfg = Self { table };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let mut sums: BTreeMap<VertexType, f64> = BTreeMap::new();
        for (&(vt, _), &w) in &self.table {
            if !(0.0..=1.0).contains(&w) {
                return Err(GraphError::InvalidWeight(w));
            }
            *sums.entry(vt).or_default() += w;
        }
        for (vtype, sum) in sums {
            if (sum - 1.0).abs() > 1e-9 {
                return Err(GraphError::BalanceNotNormalized { vtype, sum });
            }
        }
        Ok(())
    }

    pub fn get(&self, vtype: VertexType, etype: EdgeType) -> Option<f64> {
        if vtype == VertexType::Zero && etype == EdgeType::Absorb {
            return Some(1.0);
        }
        self.table.get(&(vtype, etype)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((VertexType, EdgeType), f64)> + '_ {
        self.table.iter().map(|(k, v)| (*k, *v))
    }

    /// Effective multiplier of each non-empty row of `v`.
    ///
    /// Balance mass assigned to edge types for which `v` has no row is
    /// redistributed proportionally over the rows it does have. An empty map
    /// means all of the vertex's mass goes to the zero-balancing vertex.
    pub fn row_factors(
        &self,
        vtype: VertexType,
        present: impl IntoIterator<Item = EdgeType>,
    ) -> Result<Vec<(EdgeType, f64)>, GraphError> {
        let mut raw = Vec::new();
        for etype in present {
            let beta = self
                .get(vtype, etype)
                .ok_or(GraphError::MissingBalanceEntry(vtype, etype))?;
            raw.push((etype, beta));
        }
        let covered: f64 = raw.iter().map(|(_, b)| b).sum();
        if covered <= 0.0 {
            return Ok(Vec::new());
        }
        Ok(raw.into_iter().map(|(e, b)| (e, b / covered)).collect())
    }
}

/// Weight of `edge` after balancing, including the redistribution of mass
/// from empty rows.
pub fn balanced_weight(
    graph: &TasteGraph,
    cfg: &BalancingConfig,
    edge: &EdgeRecord,
) -> Result<f64, GraphError> {
    let omega = graph
        .edge_weight(&edge.from, edge.etype, &edge.to)
        .ok_or_else(|| GraphError::UnknownEdge {
            from: edge.from.clone(),
            etype: edge.etype,
            to: edge.to.clone(),
        })?;
    let vtype = edge.from.vtype();
    cfg.get(vtype, edge.etype)
        .ok_or(GraphError::MissingBalanceEntry(vtype, edge.etype))?;
    let factors = cfg.row_factors(vtype, graph.row_types(&edge.from))?;
    let factor = factors
        .iter()
        .find(|(e, _)| *e == edge.etype)
        .map(|(_, f)| *f)
        .unwrap_or(0.0);
    Ok(omega * factor)
}

/// Balanced out-distribution of a vertex, including the share routed to the
/// zero-balancing vertex when no row carries positive balance.
pub(crate) fn balanced_out(
    graph: &TasteGraph,
    cfg: &BalancingConfig,
    index: usize,
) -> Result<Vec<(usize, f64)>, GraphError> {
    let vertex: &VertexId = graph.id(index);
    let rows = graph.rows_at(index);
    let factors = cfg.row_factors(vertex.vtype(), rows.keys().copied())?;
    if factors.is_empty() {
        return Ok(vec![(TasteGraph::ZERO_INDEX, 1.0)]);
    }
    let mut out = Vec::new();
    for (etype, factor) in factors {
        for &(to, w) in &rows[&etype] {
            out.push((to, w * factor));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user_graph(with_prefers: bool) -> TasteGraph {
        let mut g = TasteGraph::new();
        let u = VertexId::user("u");
        g.insert_row(
            &u,
            EdgeType::Likes,
            &[(VertexId::track("a"), 0.5), (VertexId::track("b"), 0.5)],
        )
        .unwrap();
        if with_prefers {
            g.insert_row(&u, EdgeType::Prefers, &[(VertexId::artist("x"), 1.0)])
                .unwrap();
        }
        g
    }

    fn user_cfg() -> BalancingConfig {
        BalancingConfig::new([
            ((VertexType::User, EdgeType::Likes), 0.6),
            ((VertexType::User, EdgeType::Prefers), 0.4),
        ])
        .unwrap()
    }

    fn likes_edge() -> EdgeRecord {
        EdgeRecord {
            from: VertexId::user("u"),
            to: VertexId::track("a"),
            etype: EdgeType::Likes,
            weight: 0.5,
        }
    }

    #[test]
    fn plain_product() {
        let g = user_graph(true);
        let w = balanced_weight(&g, &user_cfg(), &likes_edge()).unwrap();
        assert!((w - 0.3).abs() < 1e-15);
    }

    #[test]
    fn orphaned_mass_is_redistributed() {
        let g = user_graph(false);
        let cfg = user_cfg();
        let w = balanced_weight(&g, &cfg, &likes_edge()).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
        let total: f64 = g
            .edges()
            .iter()
            .filter(|e| e.from == VertexId::user("u"))
            .map(|e| balanced_weight(&g, &cfg, e).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_entry_and_bad_table() {
        let g = user_graph(true);
        let cfg = BalancingConfig::new([((VertexType::User, EdgeType::Likes), 1.0)]).unwrap();
        assert_eq!(
            balanced_weight(&g, &cfg, &likes_edge()),
            Err(GraphError::MissingBalanceEntry(
                VertexType::User,
                EdgeType::Prefers
            ))
        );
        assert!(matches!(
            BalancingConfig::new([((VertexType::User, EdgeType::Likes), 0.5)]),
            Err(GraphError::BalanceNotNormalized { .. })
        ));
    }

    #[test]
    fn identity_weight() {
        let mut g = TasteGraph::new();
        g.insert_row(
            &VertexId::track("a"),
            EdgeType::SimilarTrack,
            &[(VertexId::track("b"), 1.0)],
        )
        .unwrap();
        let e = EdgeRecord {
            from: VertexId::track("a"),
            to: VertexId::track("b"),
            etype: EdgeType::SimilarTrack,
            weight: 1.0,
        };
        assert_eq!(
            balanced_weight(&g, &BalancingConfig::default(), &e).unwrap(),
            1.0
        );
    }
}
