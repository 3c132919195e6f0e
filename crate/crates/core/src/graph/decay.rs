//! Row normalization and zero-balancing.
//!
//! A row with fewer than the expected number of edges gets an extra edge to
//! the zero-balancing vertex carrying the mass that the missing edges would
//! have had under an assumed rank-decay of weights.

use super::{GraphError, VertexId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayModel {
    /// Weight of rank `r` (1-based) is proportional to `K - r + 1`.
    Linear { expected_count: usize },
    /// Weight of rank `r` is proportional to `rho^r`.
    Exponential { expected_count: usize, rho: f64 },
}

impl DecayModel {
    pub fn linear(expected_count: usize) -> Result<Self, GraphError> {
        let model = DecayModel::Linear { expected_count };
        model.validate()?;
        Ok(model)
    }

    pub fn exponential(expected_count: usize, rho: f64) -> Result<Self, GraphError> {
        let model = DecayModel::Exponential {
            expected_count,
            rho,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.expected_count() < 1 {
            return Err(GraphError::InvalidDecay(
                "expected_count must be >= 1".into(),
            ));
        }
        if let DecayModel::Exponential { rho, .. } = *self {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(GraphError::InvalidDecay(format!(
                    "rho must be in (0,1), got {rho}"
                )));
            }
        }
        Ok(())
    }

    pub fn expected_count(&self) -> usize {
        match *self {
            DecayModel::Linear { expected_count } => expected_count,
            DecayModel::Exponential { expected_count, .. } => expected_count,
        }
    }

    fn rank_mass(&self, rank: usize) -> f64 {
        match *self {
            DecayModel::Linear { expected_count } => (expected_count - rank + 1) as f64,
            DecayModel::Exponential { rho, .. } => rho.powi(rank as i32),
        }
    }

    /// Fraction of the total mass missing from a row that has `present` edges.
    pub fn missing_fraction(&self, present: usize) -> Result<f64, GraphError> {
        let k_max = self.expected_count();
        if present > k_max {
            return Err(GraphError::RowTooLong {
                len: present,
                limit: k_max,
            });
        }
        let all: f64 = (1..=k_max).map(|r| self.rank_mass(r)).sum();
        let missing: f64 = (present + 1..=k_max).map(|r| self.rank_mass(r)).sum();
        Ok(missing / all)
    }
}

/// Scales non-negative weights so they sum to one.
pub fn normalize_row(weights: &[f64]) -> Result<Vec<f64>, GraphError> {
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(GraphError::InvalidWeight(*w));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(GraphError::AllZeroRow);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Normalizes the row, sorts it descending (ties by key) and appends a
/// zero-balancing edge when it holds fewer than `expected_count` edges.
///
/// A row that already carries the correct zero-balancing edge is returned
/// as is, which makes the operation idempotent.
pub fn zero_balance_row(
    row: &[(VertexId, f64)],
    decay: &DecayModel,
) -> Result<Vec<(VertexId, f64)>, GraphError> {
    decay.validate()?;
    let (zero, mut real): (Vec<_>, Vec<_>) = row.iter().cloned().partition(|(v, _)| v.is_zero());
    if real.is_empty() {
        return Ok(Vec::new());
    }
    let fraction = decay.missing_fraction(real.len())?;

    if zero.len() == 1 && (zero[0].1 - fraction).abs() <= 1e-12 {
        let total: f64 = row.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() <= 1e-9 {
            return Ok(row.to_vec());
        }
    }

    let weights: Vec<f64> = real.iter().map(|(_, w)| *w).collect();
    let sum: f64 = weights.iter().sum();
    if !zero.is_empty() || (sum - 1.0).abs() > 1e-12 {
        let normalized = normalize_row(&weights)?;
        for ((_, w), n) in real.iter_mut().zip(normalized) {
            *w = n;
        }
    }
    real.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if fraction == 0.0 {
        return Ok(real);
    }
    for (_, w) in real.iter_mut() {
        *w *= 1.0 - fraction;
    }
    real.push((VertexId::zero(), fraction));
    Ok(real)
}
