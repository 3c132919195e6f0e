use std::collections::BTreeMap;

use super::{VertexId, VertexType};

/// Sparse probability mass over vertices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateVector {
    entries: BTreeMap<VertexId, f64>,
}

impl StateVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// All mass on one vertex.
    pub fn unit(v: VertexId) -> Self {
        Self {
            entries: BTreeMap::from([(v, 1.0)]),
        }
    }

    /// Equal mass on every given vertex. Empty input gives an empty vector.
    pub fn uniform<'a>(vs: impl IntoIterator<Item = &'a VertexId>) -> Self {
        let mut entries: BTreeMap<VertexId, f64> =
            vs.into_iter().map(|v| (v.clone(), 1.0)).collect();
        let n = entries.len() as f64;
        entries.values_mut().for_each(|w| *w /= n);
        Self { entries }
    }

    /// Positive entries are kept, the rest dropped.
    pub fn from_weights(weights: impl IntoIterator<Item = (VertexId, f64)>) -> Self {
        let mut sv = Self::new();
        for (v, w) in weights {
            sv.add(v, w);
        }
        sv
    }

    pub fn add(&mut self, v: VertexId, w: f64) {
        if w > 0.0 {
            *self.entries.entry(v).or_insert(0.0) += w;
        }
    }

    pub fn set(&mut self, v: VertexId, w: f64) {
        if w > 0.0 {
            self.entries.insert(v, w);
        } else {
            self.entries.remove(&v);
        }
    }

    pub fn get(&self, v: &VertexId) -> f64 {
        self.entries.get(v).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        self.entries.contains_key(v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Entries in ascending vertex order.
    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, f64)> {
        self.entries.iter().map(|(v, w)| (v, *w))
    }

    pub fn support(&self) -> impl Iterator<Item = &VertexId> {
        self.entries.keys()
    }

    /// Scaled copy summing to one; an empty or massless vector stays empty.
    pub fn normalized(&self) -> Self {
        let total = self.total();
        if total <= 0.0 {
            return Self::new();
        }
        Self {
            entries: self
                .entries
                .iter()
                .map(|(v, w)| (v.clone(), w / total))
                .collect(),
        }
    }

    /// Components on the support of `onto`.
    pub fn project(&self, onto: &StateVector) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(v, _)| onto.contains(v))
                .map(|(v, w)| (v.clone(), *w))
                .collect(),
        }
    }

    pub fn restrict_type(&self, vtype: VertexType) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(v, _)| v.vtype() == vtype)
                .map(|(v, w)| (v.clone(), *w))
                .collect(),
        }
    }

    pub fn l1_distance(&self, other: &StateVector) -> f64 {
        let mut d: f64 = self
            .entries
            .iter()
            .map(|(v, w)| (w - other.get(v)).abs())
            .sum();
        d += other
            .entries
            .iter()
            .filter(|(v, _)| !self.contains(v))
            .map(|(_, w)| w.abs())
            .sum::<f64>();
        d
    }

    /// Entries sorted by descending weight, ties by ascending vertex.
    pub fn ranked(&self) -> Vec<(VertexId, f64)> {
        let mut out: Vec<(VertexId, f64)> =
            self.entries.iter().map(|(v, w)| (v.clone(), *w)).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

impl FromIterator<(VertexId, f64)> for StateVector {
    fn from_iter<T: IntoIterator<Item = (VertexId, f64)>>(iter: T) -> Self {
        Self::from_weights(iter)
    }
}
