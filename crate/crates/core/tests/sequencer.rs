mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::Rng;

use tastegraph::graph::{
    BalancingConfig, EdgeType, StateVector, TasteGraph, TransitionOperator, VertexId,
};
use tastegraph::sequencer::{
    build_cumulative, distance_factor, presence_factor, RejectionConfig, RepeatWindow, Sequencer,
};

use common::{rng, t};

fn catalog(artists: usize, per_artist: usize) -> (TasteGraph, StateVector) {
    let mut g = TasteGraph::new();
    let mut items = Vec::new();
    for a in 0..artists {
        let tracks: Vec<VertexId> = (0..per_artist).map(|k| t(&format!("a{a}t{k}"))).collect();
        let w = 1.0 / per_artist as f64;
        let row: Vec<(VertexId, f64)> = tracks.iter().map(|v| (v.clone(), w)).collect();
        g.insert_row(
            &VertexId::artist(format!("a{a}")),
            EdgeType::ArtistTrack,
            &row,
        )
        .unwrap();
        items.extend(tracks);
    }
    (g, StateVector::uniform(&items))
}

proptest! {
    #[test]
    fn pick_matches_linear_scan(weights in prop::collection::vec(0.001f64..1.0, 1..40), probes in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let x: StateVector = weights.iter().enumerate().map(|(i, w)| (t(&format!("{i:03}")), *w)).collect();
        let cv = build_cumulative(&x).unwrap();
        let order: Vec<(VertexId, f64)> = x.iter().map(|(v, w)| (v.clone(), w)).collect();
        for p in probes {
            let r = p * cv.total();
            let mut acc = 0.0;
            let mut expected = None;
            for (v, w) in &order {
                if r >= acc && r < acc + w {
                    expected = Some(v.clone());
                    break;
                }
                acc += w;
            }
            if let Some(e) = expected {
                prop_assert_eq!(cv.pick(r).unwrap(), &e);
            }
        }
    }

    #[test]
    fn factors_are_monotone(decay in 0.0f64..=1.0, a in 0usize..20, b in 0usize..20) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(presence_factor(decay, hi) <= presence_factor(decay, lo));
        prop_assert!(distance_factor(decay, Some(hi.max(1))) >= distance_factor(decay, Some(lo.max(1))));
    }

    #[test]
    fn whole_window_never_repeats(seed in any::<u64>(), length in 1usize..20) {
        let (g, x) = catalog(4, 5);
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let cfg = RejectionConfig { repeat_window: RepeatWindow::Whole, max_attempts: 500, ..Default::default() };
        let seq = Sequencer::new(&op, &x, cfg).unwrap();
        let radio = seq.generate(length, seed).unwrap();
        let distinct: BTreeSet<&VertexId> = radio.items.iter().collect();
        prop_assert_eq!(distinct.len(), radio.items.len());
    }
}

#[test]
fn same_seed_same_radio() {
    let (g, x) = catalog(3, 6);
    let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
    let seq = Sequencer::new(&op, &x, RejectionConfig::default()).unwrap();
    assert_eq!(seq.generate(12, 9).unwrap(), seq.generate(12, 9).unwrap());
    assert_ne!(
        seq.generate(12, 9).unwrap().items,
        seq.generate(12, 10).unwrap().items
    );
}

#[test]
fn neutral_frequencies_within_three_sigma() {
    let mut r = rng(3);
    let x: StateVector = (0..50)
        .map(|i| (t(&format!("{i:02}")), r.random_range(0.1..1.0)))
        .collect();
    let x = x.normalized();
    let g = TasteGraph::new();
    let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
    let seq = Sequencer::new(&op, &x, RejectionConfig::neutral()).unwrap();
    let n = 100_000;
    let radio = seq.generate(n, 1).unwrap();
    assert!(radio.complete);
    assert_eq!(radio.draws, n);
    let mut counts: BTreeMap<&VertexId, usize> = BTreeMap::new();
    for v in &radio.items {
        *counts.entry(v).or_default() += 1;
    }
    for (v, p) in x.iter() {
        let expected = p * n as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let got = counts.get(v).copied().unwrap_or(0) as f64;
        assert!(
            (got - expected).abs() < 3.0 * sd + 1.0,
            "{v}: {got} vs {expected}"
        );
    }
}

#[test]
fn too_few_candidates_is_an_error() {
    let (g, x) = catalog(1, 3);
    let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
    let seq = Sequencer::new(&op, &x, RejectionConfig::default()).unwrap();
    assert!(seq.generate(4, 0).is_err());
}

#[test]
fn exhausted_budget_returns_partial() {
    let (g, x) = catalog(1, 10);
    let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
    // one artist, presence 0: only the first item can ever be accepted
    let cfg = RejectionConfig {
        presence_decay: 0.0,
        distance_decay: 0.0,
        coherence_lookback: 0,
        max_attempts: 3,
        ..Default::default()
    };
    let radio = Sequencer::new(&op, &x, cfg)
        .unwrap()
        .generate(5, 2)
        .unwrap();
    assert_eq!(radio.items.len(), 1);
    assert!(!radio.complete);
    assert_eq!(radio.draws, 15);
}
