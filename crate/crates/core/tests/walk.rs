mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

use tastegraph::graph::{
    BalancingConfig, EdgeType, StateVector, TasteGraph, TransitionOperator, VertexId, VertexType,
};
use tastegraph::walk::{
    extend_list, personalize, recommend, rwr_steady_state, PersonalizationWeights, RestartTarget,
    WalkParams,
};

use common::{dense_transition, dense_vector, keys, random_graph, rng, rwr_oracle, t};

fn tight(restart: RestartTarget, alpha: f64) -> WalkParams {
    WalkParams {
        alpha,
        epsilon: 1e-14,
        max_iterations: 20_000,
        restart,
        ..Default::default()
    }
}

fn l1(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).abs().sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn steady_state_matches_linear_solve(seed in any::<u64>(), n in 6usize..60, alpha in 0.1f64..0.9) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let cfg = BalancingConfig::default();
        let op = TransitionOperator::new(&g, &cfg).unwrap();
        let p = dense_transition(&g, &cfg);
        let start = g.id(r.random_range(1..g.vertex_count())).clone();
        let s = dense_vector(&g, [(start.clone(), 1.0)]);
        for restart in [RestartTarget::Transitioned, RestartTarget::Seed] {
            let target = match restart {
                RestartTarget::Seed => s.clone(),
                RestartTarget::Transitioned => p.transpose() * &s,
            };
            let oracle = rwr_oracle(&p, &target, alpha);
            let st = rwr_steady_state(&op, &StateVector::unit(start.clone()), &tight(restart, alpha)).unwrap();
            let got = dense_vector(&g, st.post_restart.iter().map(|(v, w)| (v.clone(), w)));
            prop_assert!(l1(&got, &oracle) < 1e-8, "L1 {}", l1(&got, &oracle));
            // pre-restart is one transition of the previous iterate
            let pre = dense_vector(&g, st.pre_restart.iter().map(|(v, w)| (v.clone(), w)));
            prop_assert!(l1(&pre, &(p.transpose() * &oracle)) < 1e-8);
        }
    }

    #[test]
    fn residuals_contract(seed in any::<u64>(), n in 6usize..60) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let st = rwr_steady_state(&op, &StateVector::unit(g.id(1).clone()), &tight(RestartTarget::Transitioned, 0.5)).unwrap();
        for w in st.residuals.windows(2).skip(3) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn full_suppression_never_emits_known(seed in any::<u64>(), n in 12usize..60) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let user = VertexId::user("u0");
        let known: BTreeSet<VertexId> = g
            .vertices()
            .filter(|v| v.vtype() == VertexType::Track && r.random_bool(0.5))
            .cloned()
            .collect();
        let params = WalkParams { suppression: -1.0, top_n: 1000, ..Default::default() };
        let out = recommend(&op, &user, &params, &known).unwrap();
        prop_assert!(out.iter().all(|(v, _)| !known.contains(v) && v.vtype() == VertexType::Track));
    }

    #[test]
    fn target_only_weights_keep_target_order(seed in any::<u64>(), n in 8usize..60, depth in 1usize..4) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let target = random_target(&mut r, &g);
        let mut w = vec![0.0; depth];
        w.push(1.0);
        let out = personalize(&op, &StateVector::unit(VertexId::user("u0")), &target, &PersonalizationWeights::new(w).unwrap()).unwrap();
        prop_assert_eq!(keys(&out), keys(&target.ranked()));
    }

    #[test]
    fn scaling_target_keeps_order(seed in any::<u64>(), n in 8usize..60, c in 0.01f64..100.0) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n);
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let target = random_target(&mut r, &g);
        let scaled: StateVector = target.iter().map(|(v, w)| (v.clone(), w * c)).collect();
        let w = PersonalizationWeights::default();
        let source = StateVector::unit(VertexId::user("u0"));
        let a = personalize(&op, &source, &target, &w).unwrap();
        let b = personalize(&op, &source, &scaled, &w).unwrap();
        prop_assert_eq!(keys(&a), keys(&b));
    }
}

fn random_target(r: &mut impl Rng, g: &TasteGraph) -> StateVector {
    let tracks: Vec<VertexId> = g
        .vertices()
        .filter(|v| v.vtype() == VertexType::Track)
        .cloned()
        .collect();
    let mut target: StateVector = tracks
        .iter()
        .filter_map(|v| {
            r.random_bool(0.5)
                .then(|| (v.clone(), r.random_range(0.01..1.0)))
        })
        .collect();
    if target.is_empty() {
        target.add(tracks[0].clone(), 1.0);
    }
    target.normalized()
}

#[test]
fn personalize_matches_matrix_power_oracle() {
    let mut r = rng(11);
    for _ in 0..20 {
        let g = random_graph(&mut r, 12);
        let cfg = BalancingConfig::default();
        let op = TransitionOperator::new(&g, &cfg).unwrap();
        let p = dense_transition(&g, &cfg);
        let target = random_target(&mut r, &g);
        let w = PersonalizationWeights::new(vec![0.5, 0.3, 0.2, 0.1]).unwrap();
        let source = VertexId::user("u0");
        let out = personalize(&op, &StateVector::unit(source.clone()), &target, &w).unwrap();

        let mut x = p.transpose() * dense_vector(&g, [(source, 1.0)]);
        let mut expected: BTreeMap<VertexId, f64> =
            target.iter().map(|(v, tw)| (v.clone(), 0.1 * tw)).collect();
        for wi in [0.5, 0.3, 0.2] {
            for (v, score) in expected.iter_mut() {
                *score += wi * x[g.index_of(v).unwrap()];
            }
            x = p.transpose() * x;
        }
        for (v, s) in &out {
            assert!(
                (expected[v] - s).abs() < 1e-12,
                "{v}: {s} vs {}",
                expected[v]
            );
        }
    }
}

#[test]
fn hand_solved_two_vertex_cases() {
    let mut g = TasteGraph::new();
    g.insert_row(&t("u"), EdgeType::SimilarTrack, &[(t("i"), 1.0)])
        .unwrap();
    g.insert_row(&t("i"), EdgeType::SimilarTrack, &[(t("u"), 1.0)])
        .unwrap();
    let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
    let seed = StateVector::unit(t("u"));
    let classic = rwr_steady_state(&op, &seed, &tight(RestartTarget::Seed, 0.5)).unwrap();
    assert!((classic.post_restart.get(&t("u")) - 2.0 / 3.0).abs() < 1e-12);
    assert!((classic.post_restart.get(&t("i")) - 1.0 / 3.0).abs() < 1e-12);
    let two_stage = rwr_steady_state(&op, &seed, &tight(RestartTarget::Transitioned, 0.5)).unwrap();
    assert!((two_stage.post_restart.get(&t("i")) - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn seed_without_in_edges_gets_no_restart_mass() {
    let mut r = rng(5);
    for _ in 0..20 {
        let g = random_graph(&mut r, 30);
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        // users never receive edges in the generator
        let st = rwr_steady_state(
            &op,
            &StateVector::unit(VertexId::user("u0")),
            &WalkParams::default(),
        )
        .unwrap();
        assert_eq!(st.post_restart.get(&VertexId::user("u0")), 0.0);
    }
}

fn reachable(g: &TasteGraph, from: &[VertexId]) -> BTreeSet<VertexId> {
    let edges = g.edges();
    let mut seen: BTreeSet<VertexId> = from.iter().cloned().collect();
    let mut queue: VecDeque<VertexId> = from.iter().cloned().collect();
    while let Some(v) = queue.pop_front() {
        for e in edges.iter().filter(|e| e.from == v) {
            if seen.insert(e.to.clone()) {
                queue.push_back(e.to.clone());
            }
        }
    }
    seen
}

#[test]
fn extension_stays_within_reach_of_seed() {
    let mut r = rng(21);
    for _ in 0..20 {
        let g = common::random_track_graph(&mut r, 25, 2);
        let op = TransitionOperator::new(&g, &BalancingConfig::default()).unwrap();
        let seed = vec![t(&format!("t{:02}", r.random_range(0..25)))];
        let params = WalkParams {
            top_n: 100,
            ..Default::default()
        };
        let out = extend_list(
            &op,
            &seed,
            &StateVector::new(),
            &params,
            &PersonalizationWeights::default(),
            1,
        )
        .unwrap();
        let reach = reachable(&g, &seed);
        assert!(out
            .iter()
            .all(|(v, _)| reach.contains(v) && !seed.contains(v)));
    }
}
