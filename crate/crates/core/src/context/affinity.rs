use std::collections::BTreeSet;

use super::{ClusterConfig, ClusterSet, ContextError};
use crate::graph::VertexId;

/// L∞ change of responsibilities and availabilities treated as converged.
const MESSAGE_TOLERANCE: f64 = 1e-9;

/// Relative gap under which two exemplar candidates count as tied; ties go
/// to the lowest index.
const TIE_TOLERANCE: f64 = 1e-6;

/// Diagonal responsibility update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApVariant {
    /// `p(i,i) = s(i,i) - max_{k≠i} s(i,k)`, availabilities left out.
    #[default]
    Printed,
    /// `p(i,i) = s(i,i) - max_{k≠i}(a(i,k) + s(i,k))`, as off the diagonal.
    Standard,
}

/// Clusters as index sets, each with its center.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CenteredClusters {
    pub clusters: Vec<(usize, Vec<usize>)>,
    pub unclustered: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApOutcome {
    pub clusters: CenteredClusters,
    /// `ex(i)` after the last iteration.
    pub exemplars: Vec<usize>,
    pub iterations: usize,
    /// Messages settled below tolerance.
    pub converged: bool,
    /// Exemplars were stable for the convince limit.
    pub stable: bool,
    /// No item chose itself; everything is unclustered.
    pub no_exemplar: bool,
}

/// Multiplies the diagonal by `delta`.
pub fn discount_diagonal(sim: &mut [Vec<f64>], delta: f64) {
    for (i, row) in sim.iter_mut().enumerate() {
        row[i] *= delta;
    }
}

fn check_square(sim: &[Vec<f64>]) -> Result<(), ContextError> {
    match sim.iter().find(|r| r.len() != sim.len()) {
        Some(r) => Err(ContextError::NotSquare {
            rows: sim.len(),
            cols: r.len(),
        }),
        None => Ok(()),
    }
}

/// Largest and second largest value with the position of the largest.
fn top_two(values: impl Iterator<Item = f64>) -> (f64, usize, f64) {
    let (mut best, mut at, mut second) = (f64::NEG_INFINITY, usize::MAX, f64::NEG_INFINITY);
    for (k, v) in values.enumerate() {
        if v > best {
            second = best;
            best = v;
            at = k;
        } else if v > second {
            second = v;
        }
    }
    (best, at, second)
}

fn exemplars(r: &[Vec<f64>], a: &[Vec<f64>]) -> Vec<usize> {
    r.iter()
        .zip(a)
        .map(|(ri, ai)| {
            let max = ri
                .iter()
                .zip(ai)
                .map(|(r, a)| r + a)
                .fold(f64::NEG_INFINITY, f64::max);
            let floor = max - TIE_TOLERANCE * max.abs().max(1.0);
            (0..ri.len()).find(|&j| ri[j] + ai[j] >= floor).unwrap_or(0)
        })
        .collect()
}

/// Follows `ex` from each item; items whose chain ends at a center join
/// that center's cluster, the rest (chains caught in a cycle) are
/// unclustered.
fn clusters_from_exemplars(ex: &[usize]) -> CenteredClusters {
    let n = ex.len();
    let mut out = CenteredClusters::default();
    let centers: Vec<usize> = (0..n).filter(|&i| ex[i] == i).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while ex[cur] != cur && steps <= n {
            cur = ex[cur];
            steps += 1;
        }
        match centers.binary_search(&cur) {
            Ok(c) if ex[cur] == cur => members[c].push(start),
            _ => out.unclustered.push(start),
        }
    }
    out.clusters = centers.into_iter().zip(members).collect();
    out
}

/// Affinity propagation on a square similarity matrix whose diagonal holds
/// the (already discounted) self-similarities.
///
/// Responsibilities and availabilities start at zero and are updated with
/// damping `lambda`:
///
/// * `p(i,j) = s(i,j) - max_{k≠j}(a(i,k) + s(i,k))` for `i ≠ j`, and
///   `s(i,i) - max_{k≠i} s(i,k)` on the diagonal;
/// * `α(i,j) = min(0, r(j,j) + Σ_{k∉{i,j}} max(0, r(k,j)))` for `i ≠ j`, and
///   `Σ_{k≠j} max(0, r(k,j))` on the diagonal.
///
/// Stops when messages settle, when exemplars stay unchanged for
/// `convince_limit` iterations while every item's exemplar chain ends at a
/// center, or after `max_iterations`.
pub fn affinity_propagation(
    sim: &[Vec<f64>],
    variant: ApVariant,
    lambda: f64,
    convince_limit: usize,
    max_iterations: usize,
) -> Result<ApOutcome, ContextError> {
    check_square(sim)?;
    if !(0.0..1.0).contains(&lambda) || convince_limit == 0 || max_iterations == 0 {
        return Err(ContextError::InvalidConfig(
            "lambda in [0,1), convince_limit and max_iterations at least 1".into(),
        ));
    }
    let n = sim.len();
    if n <= 1 {
        let ex: Vec<usize> = (0..n).collect();
        return Ok(ApOutcome {
            clusters: clusters_from_exemplars(&ex),
            exemplars: ex,
            iterations: 0,
            converged: true,
            stable: true,
            no_exemplar: false,
        });
    }

    let mut r = vec![vec![0.0; n]; n];
    let mut a = vec![vec![0.0; n]; n];
    // max_{k≠i} s(i,k) never changes
    let off_diag_max: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&k| k != i)
                .map(|k| sim[i][k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let mut ex = exemplars(&r, &a);
    let mut unchanged = 0;
    let mut converged = false;
    let mut stable = false;
    let mut iterations = 0;
    let mut positive_col = vec![0.0; n];
    while iterations < max_iterations {
        iterations += 1;
        let mut change: f64 = 0.0;

        for i in 0..n {
            let (best, at, second) = top_two((0..n).map(|k| a[i][k] + sim[i][k]));
            for j in 0..n {
                let p = if i == j && variant == ApVariant::Printed {
                    sim[i][i] - off_diag_max[i]
                } else {
                    sim[i][j] - if j == at { second } else { best }
                };
                let next = (1.0 - lambda) * p + lambda * r[i][j];
                change = change.max((next - r[i][j]).abs());
                r[i][j] = next;
            }
        }

        for (j, col) in positive_col.iter_mut().enumerate() {
            *col = (0..n).map(|k| r[k][j].max(0.0)).sum();
        }
        for i in 0..n {
            for j in 0..n {
                let others = positive_col[j] - r[j][j].max(0.0);
                let alpha = if i == j {
                    others
                } else {
                    (r[j][j] + others - r[i][j].max(0.0)).min(0.0)
                };
                let next = (1.0 - lambda) * alpha + lambda * a[i][j];
                change = change.max((next - a[i][j]).abs());
                a[i][j] = next;
            }
        }

        let next_ex = exemplars(&r, &a);
        if next_ex == ex {
            unchanged += 1;
        } else {
            unchanged = 0;
            ex = next_ex;
        }
        if change < MESSAGE_TOLERANCE {
            converged = true;
            break;
        }
        if unchanged >= convince_limit && clusters_from_exemplars(&ex).unclustered.is_empty() {
            stable = true;
            break;
        }
    }

    let clusters = clusters_from_exemplars(&ex);
    let no_exemplar = clusters.clusters.is_empty();
    Ok(ApOutcome {
        clusters,
        exemplars: ex,
        iterations,
        converged,
        stable,
        no_exemplar,
    })
}

/// Merges each cluster smaller than `min_size`, smallest first, into the
/// other cluster whose center has the highest total similarity to its
/// members. Without any positive similarity the members become unclustered.
pub fn relink_small_clusters(
    clusters: CenteredClusters,
    sim: &[Vec<f64>],
    min_size: usize,
) -> CenteredClusters {
    let mut live: Vec<Option<(usize, Vec<usize>)>> =
        clusters.clusters.into_iter().map(Some).collect();
    let mut unclustered = clusters.unclustered;
    let mut small: Vec<usize> = live
        .iter()
        .enumerate()
        .filter(|(_, c)| c.as_ref().is_some_and(|(_, m)| m.len() < min_size))
        .map(|(i, _)| i)
        .collect();
    small.sort_by_key(|&i| {
        let (center, m) = live[i].as_ref().expect("live cluster");
        (m.len(), *center)
    });

    for i in small {
        // a cluster that already absorbed others may have reached the limit
        if live[i].as_ref().is_none_or(|(_, m)| m.len() >= min_size) {
            continue;
        }
        let (_, members) = live[i].take().expect("live cluster");
        let mut best: Option<(f64, usize)> = None;
        for (k, c) in live.iter().enumerate() {
            let Some((center, _)) = c else { continue };
            let total: f64 = members.iter().map(|&m| sim[m][*center]).sum();
            if total > 0.0 && best.is_none_or(|(b, _)| total > b) {
                best = Some((total, k));
            }
        }
        match best {
            Some((_, k)) => live[k].as_mut().expect("live cluster").1.extend(members),
            None => unclustered.extend(members),
        }
    }

    let mut out: Vec<(usize, Vec<usize>)> = live.into_iter().flatten().collect();
    for (_, m) in &mut out {
        m.sort_unstable();
    }
    unclustered.sort_unstable();
    CenteredClusters {
        clusters: out,
        unclustered,
    }
}

/// Affinity propagation over labelled items: discounts the diagonal by
/// `cfg.delta`, clusters, then relinks clusters below
/// `cfg.min_cluster_size`.
pub fn cluster_affinity_propagation(
    items: &[VertexId],
    sim: &[Vec<f64>],
    cfg: &ClusterConfig,
) -> Result<(ClusterSet, ApOutcome), ContextError> {
    check_square(sim)?;
    if sim.len() != items.len() {
        return Err(ContextError::NotSquare {
            rows: items.len(),
            cols: sim.len(),
        });
    }
    let mut discounted = sim.to_vec();
    discount_diagonal(&mut discounted, cfg.delta);
    let outcome = affinity_propagation(
        &discounted,
        ApVariant::Printed,
        cfg.lambda,
        cfg.convince_limit,
        cfg.max_ap_iterations,
    )?;
    let relinked =
        relink_small_clusters(outcome.clusters.clone(), &discounted, cfg.min_cluster_size);
    let label = |ix: &[usize]| {
        ix.iter()
            .map(|&i| items[i].clone())
            .collect::<BTreeSet<_>>()
    };
    let set = ClusterSet {
        clusters: relinked.clusters.iter().map(|(_, m)| label(m)).collect(),
        unclustered: label(&relinked.unclustered),
    };
    Ok((set, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(groups: &[usize], within: f64, self_sim: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let label: Vec<usize> = groups
            .iter()
            .enumerate()
            .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
            .collect();
        let n = label.len();
        let sim = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| match (i == j, label[i] == label[j]) {
                        (true, _) => self_sim,
                        (false, true) => within,
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect();
        (sim, label)
    }

    #[test]
    fn single_point() {
        let out = affinity_propagation(&[vec![3.0]], ApVariant::Printed, 0.8, 10, 100).unwrap();
        assert_eq!(out.clusters.clusters, vec![(0, vec![0])]);
    }

    #[test]
    fn two_separated_groups() {
        let (sim, _) = planted(&[3, 3], 10.0, 5.0);
        let out = affinity_propagation(&sim, ApVariant::Printed, 0.8, 10, 500).unwrap();
        let mut groups: Vec<Vec<usize>> = out
            .clusters
            .clusters
            .iter()
            .map(|(_, m)| m.clone())
            .collect();
        groups.sort();
        assert_eq!(groups, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(out.clusters.unclustered.is_empty());
    }

    #[test]
    fn dominant_diagonal_gives_singletons() {
        let (sim, _) = planted(&[2, 2], 1.0, 10.0);
        let out = affinity_propagation(&sim, ApVariant::Printed, 0.5, 10, 500).unwrap();
        assert_eq!(out.clusters.clusters.len(), 4);
    }

    #[test]
    fn relink_rules() {
        let sim = vec![
            vec![0.0, 5.0, 5.0, 0.0],
            vec![5.0, 0.0, 5.0, 0.0],
            vec![4.0, 5.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ];
        let input = CenteredClusters {
            clusters: vec![(0, vec![0, 1]), (2, vec![2]), (3, vec![3])],
            unclustered: vec![],
        };
        let out = relink_small_clusters(input.clone(), &sim, 1);
        assert_eq!(out, input);
        let out = relink_small_clusters(input, &sim, 2);
        assert_eq!(out.clusters, vec![(0, vec![0, 1, 2])]);
        assert_eq!(out.unclustered, vec![3]);
    }

    #[test]
    fn rejects_non_square() {
        assert!(affinity_propagation(&[vec![1.0, 2.0]], ApVariant::Printed, 0.5, 1, 1).is_err());
    }
}
