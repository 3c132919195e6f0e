//! Generators and brute-force oracles shared by the integration tests and
//! the acceptance suite. The oracles are written from the definitions and
//! only use the public graph accessors.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tastegraph::builder::{Catalog, PlaybackEvent, PlaylistStore, TrackInfo};
use tastegraph::context::ClusterSet;
use tastegraph::graph::{BalancingConfig, EdgeType, TasteGraph, VertexId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn t(k: &str) -> VertexId {
    VertexId::track(k)
}

/// Normalized random weights over `targets`, optionally leaving a share for θ.
fn random_row(
    rng: &mut ChaCha8Rng,
    targets: Vec<VertexId>,
    zero_share: f64,
) -> Vec<(VertexId, f64)> {
    let raw: Vec<f64> = targets
        .iter()
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    let total: f64 = raw.iter().sum();
    let mut row: Vec<(VertexId, f64)> = targets
        .into_iter()
        .zip(raw)
        .map(|(v, w)| (v, (1.0 - zero_share) * w / total))
        .collect();
    if zero_share > 0.0 {
        row.push((VertexId::zero(), zero_share));
    }
    row
}

fn row_to(
    rng: &mut ChaCha8Rng,
    pool: &[VertexId],
    k: usize,
    exclude: &VertexId,
    zero_share: f64,
) -> Vec<(VertexId, f64)> {
    let targets = pick_distinct(rng, pool, k, exclude);
    random_row(rng, targets, zero_share)
}

fn pick_distinct(
    rng: &mut ChaCha8Rng,
    pool: &[VertexId],
    k: usize,
    exclude: &VertexId,
) -> Vec<VertexId> {
    let candidates: Vec<VertexId> = pool.iter().filter(|v| *v != exclude).cloned().collect();
    candidates
        .choose_multiple(rng, k.min(candidates.len()))
        .cloned()
        .collect()
}

/// A random partly stochastic graph with users, tracks and artists, about
/// `n` vertices in total. Some rows leave mass to θ; some vertices get no
/// rows at all.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> TasteGraph {
    let n = n.max(6);
    let n_users = (n / 6).max(1);
    let n_artists = (n / 6).max(1);
    let n_tracks = n - n_users - n_artists;
    let users: Vec<VertexId> = (0..n_users)
        .map(|i| VertexId::user(format!("u{i}")))
        .collect();
    let artists: Vec<VertexId> = (0..n_artists)
        .map(|i| VertexId::artist(format!("a{i}")))
        .collect();
    let tracks: Vec<VertexId> = (0..n_tracks).map(|i| t(&format!("t{i}"))).collect();
    let mut g = TasteGraph::new();
    for v in users.iter().chain(&artists).chain(&tracks) {
        g.add_vertex(v.clone());
    }
    let zero = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.3) {
            rng.random_range(0.05..0.5)
        } else {
            0.0
        }
    };
    for u in &users {
        let k = rng.random_range(1..=6);
        let z = zero(rng);
        g.insert_row(u, EdgeType::Likes, &row_to(rng, &tracks, k, u, z))
            .unwrap();
        if rng.random_bool(0.6) {
            let k = rng.random_range(1..=3);
            g.insert_row(u, EdgeType::Prefers, &row_to(rng, &artists, k, u, 0.0))
                .unwrap();
        }
    }
    for a in &artists {
        if rng.random_bool(0.8) {
            let k = rng.random_range(1..=5);
            let z = zero(rng);
            g.insert_row(a, EdgeType::ArtistTrack, &row_to(rng, &tracks, k, a, z))
                .unwrap();
        }
        if n_artists > 1 && rng.random_bool(0.5) {
            let k = rng.random_range(1..=2);
            g.insert_row(
                a,
                EdgeType::SimilarArtist,
                &row_to(rng, &artists, k, a, 0.0),
            )
            .unwrap();
        }
    }
    for tr in &tracks {
        if rng.random_bool(0.8) {
            let k = rng.random_range(1..=5);
            let z = zero(rng);
            g.insert_row(tr, EdgeType::SimilarTrack, &row_to(rng, &tracks, k, tr, z))
                .unwrap();
        }
    }
    g
}

/// A graph over tracks only, with a SimilarTrack row on every vertex.
pub fn random_track_graph(rng: &mut ChaCha8Rng, n: usize, max_degree: usize) -> TasteGraph {
    let tracks: Vec<VertexId> = (0..n).map(|i| t(&format!("t{i:02}"))).collect();
    let mut g = TasteGraph::new();
    for v in &tracks {
        g.add_vertex(v.clone());
    }
    for v in &tracks {
        let k = rng.random_range(1..=max_degree);
        let row = row_to(rng, &tracks, k, v, 0.0);
        g.insert_row(v, EdgeType::SimilarTrack, &row).unwrap();
    }
    g
}

/// Raw edges grouped as vertex -> edge type -> [(target, weight)].
pub fn rows_of(g: &TasteGraph) -> BTreeMap<VertexId, BTreeMap<EdgeType, Vec<(VertexId, f64)>>> {
    let mut rows: BTreeMap<VertexId, BTreeMap<EdgeType, Vec<(VertexId, f64)>>> = BTreeMap::new();
    for e in g.edges() {
        rows.entry(e.from)
            .or_default()
            .entry(e.etype)
            .or_default()
            .push((e.to, e.weight));
    }
    rows
}

/// Dense row-stochastic transition matrix, `p[(i, j)]` = mass from vertex
/// index `i` to `j`, built directly from the balancing definition: present
/// rows share the vertex's unit mass in proportion to their β; a vertex
/// with no β-covered row sends everything to θ.
pub fn dense_transition(g: &TasteGraph, cfg: &BalancingConfig) -> DMatrix<f64> {
    let n = g.vertex_count();
    let rows = rows_of(g);
    let zero = g.index_of(&VertexId::zero()).expect("θ is always present");
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let v = g.id(i);
        let empty = BTreeMap::new();
        let my_rows = rows.get(v).unwrap_or(&empty);
        let betas: Vec<(EdgeType, f64)> = my_rows
            .keys()
            .map(|&e| (e, cfg.get(v.vtype(), e).expect("balance entry")))
            .collect();
        let covered: f64 = betas.iter().map(|(_, b)| b).sum();
        if covered <= 0.0 {
            p[(i, zero)] += 1.0;
            continue;
        }
        for (e, b) in betas {
            for (to, w) in &my_rows[&e] {
                p[(i, g.index_of(to).unwrap())] += b / covered * w;
            }
        }
    }
    p
}

pub fn dense_vector(
    g: &TasteGraph,
    entries: impl IntoIterator<Item = (VertexId, f64)>,
) -> DVector<f64> {
    let mut x = DVector::zeros(g.vertex_count());
    for (v, w) in entries {
        x[g.index_of(&v).unwrap()] += w;
    }
    x
}

/// Solves `(I - (1-α) Pᵀ) x = α r`.
pub fn rwr_oracle(p: &DMatrix<f64>, restart: &DVector<f64>, alpha: f64) -> DVector<f64> {
    let n = p.nrows();
    let a = DMatrix::identity(n, n) - p.transpose() * (1.0 - alpha);
    a.lu()
        .solve(&(restart * alpha))
        .expect("non-singular for α > 0")
}

/// Connected components of an undirected graph given by `linked`, via BFS.
pub fn brute_components(
    items: &[VertexId],
    linked: impl Fn(&VertexId, &VertexId) -> bool,
    min_size: usize,
) -> ClusterSet {
    let n = items.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && (linked(&items[i], &items[j]) || linked(&items[j], &items[i])) {
                adj[i][j] = true;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut out = ClusterSet::default();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(i) = queue.pop_front() {
            comp.insert(items[i].clone());
            for j in 0..n {
                if adj[i][j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if comp.len() >= min_size.max(1) {
            out.clusters.push(comp);
        } else {
            out.unclustered.extend(comp);
        }
    }
    out.canonical()
}

/// `nbr_τ(v)` from a dense transition matrix; `tau = 0` means every raw
/// out-neighbor. θ never counts.
pub fn oracle_neighbors(
    g: &TasteGraph,
    p: &DMatrix<f64>,
    v: &VertexId,
    tau: f64,
) -> BTreeSet<VertexId> {
    if tau <= 0.0 {
        return g
            .edges()
            .into_iter()
            .filter(|e| &e.from == v && !e.to.is_zero())
            .map(|e| e.to)
            .collect();
    }
    let i = g.index_of(v).unwrap();
    (0..g.vertex_count())
        .filter(|&j| !g.id(j).is_zero() && p[(i, j)] >= tau)
        .map(|j| g.id(j).clone())
        .collect()
}

/// Double loop over every raw edge: counts those with both endpoints in the
/// common direct neighborhood.
pub fn oracle_cnd(g: &TasteGraph, v: &VertexId, v2: &VertexId) -> usize {
    let edges = g.edges();
    let nbr = |x: &VertexId| -> BTreeSet<VertexId> {
        edges
            .iter()
            .filter(|e| &e.from == x && !e.to.is_zero())
            .map(|e| e.to.clone())
            .collect()
    };
    let (a, b) = (nbr(v), nbr(v2));
    let mut count = 0;
    for e in &edges {
        let from_in = a.contains(&e.from) && b.contains(&e.from);
        let to_in = a.contains(&e.to) && b.contains(&e.to);
        if from_in && to_in {
            count += 1;
        }
    }
    count
}

/// Synthetic builder inputs.
pub struct World {
    pub log: Vec<PlaybackEvent>,
    pub catalog: Catalog,
    pub playlists: PlaylistStore,
    pub today: NaiveDate,
}

/// Random users, artists and plays. Every user favours a random subset of
/// artists; play times spread over the 60 days before `today`.
pub fn random_world(
    rng: &mut ChaCha8Rng,
    users: usize,
    artists: usize,
    tracks_per_artist: usize,
    plays: usize,
) -> World {
    let today = NaiveDate::from_ymd_opt(2024, 6, 1).unwrap();
    let day0 = today - chrono::Duration::days(60);
    let mut catalog = Catalog::new();
    let mut all_tracks = Vec::new();
    for a in 0..artists {
        let n = rng.random_range(1..=tracks_per_artist);
        for k in 0..n {
            let track = t(&format!("t{a}_{k}"));
            let added = day0 + chrono::Duration::days(rng.random_range(0..60));
            let ratings = (0..rng.random_range(0..4))
                .map(|_| {
                    (
                        added + chrono::Duration::days(rng.random_range(0..10)),
                        rng.random_range(0.0..50.0),
                    )
                })
                .collect::<Vec<_>>();
            catalog.insert(
                track.clone(),
                TrackInfo {
                    artist: VertexId::artist(format!("a{a}")),
                    ratings,
                    added,
                },
            );
            all_tracks.push(track);
        }
    }
    let start = day0.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp();
    let mut log = Vec::new();
    let mut playlists = PlaylistStore::new();
    for u in 0..users {
        let favourite: Vec<&VertexId> =
            all_tracks.iter().filter(|_| rng.random_bool(0.3)).collect();
        let pool: Vec<&VertexId> = if favourite.is_empty() {
            all_tracks.iter().collect()
        } else {
            favourite
        };
        let mut ts = start + rng.random_range(0..86_400);
        for _ in 0..rng.random_range(1..=plays) {
            ts += rng.random_range(30..3_600);
            let track = *pool.choose(rng).unwrap();
            log.push(PlaybackEvent {
                user: VertexId::user(format!("u{u}")),
                track: track.clone(),
                timestamp: ts,
            });
        }
        if rng.random_bool(0.3) {
            for _ in 0..rng.random_range(1..4) {
                playlists.add(
                    VertexId::user(format!("u{u}")),
                    (*pool.choose(rng).unwrap()).clone(),
                );
            }
        }
    }
    log.shuffle(rng);
    World {
        log,
        catalog,
        playlists,
        today,
    }
}

/// Order of keys in a ranked list.
pub fn keys(rows: &[(VertexId, f64)]) -> Vec<VertexId> {
    rows.iter().map(|(v, _)| v.clone()).collect()
}

/// A planted affinity-propagation instance: 2 to 4 groups of 2 to 6 items,
/// within-group similarity in [8, 10], cross-group 0, undiscounted
/// self-similarity above the row maximum. Items are shuffled.
pub struct Planted {
    pub items: Vec<VertexId>,
    pub sim: Vec<Vec<f64>>,
    pub groups: BTreeSet<BTreeSet<VertexId>>,
    pub lambda: f64,
}

pub fn planted_instance(rng: &mut ChaCha8Rng) -> Planted {
    let groups = rng.random_range(2..=4);
    let mut label = Vec::new();
    for g in 0..groups {
        for _ in 0..rng.random_range(2..=6) {
            label.push(g);
        }
    }
    label.shuffle(rng);
    let n = label.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if label[i] == label[j] {
                let s = rng.random_range(8.0..10.0);
                sim[i][j] = s;
                sim[j][i] = s;
            }
        }
    }
    for i in 0..n {
        let row_max = sim[i].iter().cloned().fold(0.0, f64::max);
        sim[i][i] = row_max + rng.random_range(0.0..2.0);
    }
    let items: Vec<VertexId> = (0..n).map(|i| t(&format!("p{i:02}"))).collect();
    let mut planted: BTreeMap<usize, BTreeSet<VertexId>> = BTreeMap::new();
    for (i, g) in label.iter().enumerate() {
        planted.entry(*g).or_default().insert(items[i].clone());
    }
    Planted {
        items,
        sim,
        groups: planted.into_values().collect(),
        lambda: rng.random_range(0.5..0.9),
    }
}

pub struct BoostToy {
    pub graph: TasteGraph,
    pub catalog: Catalog,
    pub fan: VertexId,
    pub novel: VertexId,
    pub siblings: Vec<(VertexId, f64)>,
    pub interested: BTreeMap<VertexId, usize>,
    pub today: NaiveDate,
}

/// One artist with two established tracks and a day-old track that ten
/// users picked up. A single fan prefers the artist.
pub fn boost_toy() -> BoostToy {
    let today = NaiveDate::from_ymd_opt(2024, 6, 1).unwrap();
    let artist = VertexId::artist("A");
    let fan = VertexId::user("fan");
    let novel = t("n");
    let siblings = vec![(t("s1"), 0.6), (t("s2"), 0.4)];
    let mut graph = TasteGraph::new();
    graph
        .insert_row(&artist, EdgeType::ArtistTrack, &siblings)
        .unwrap();
    graph
        .insert_row(&fan, EdgeType::Prefers, &[(artist.clone(), 1.0)])
        .unwrap();
    graph.add_vertex(novel.clone());
    let mut catalog = Catalog::new();
    for (track, added) in [
        (t("s1"), today - chrono::Duration::days(400)),
        (t("s2"), today - chrono::Duration::days(300)),
        (novel.clone(), today - chrono::Duration::days(1)),
    ] {
        catalog.insert(
            track,
            TrackInfo {
                artist: artist.clone(),
                ratings: vec![],
                added,
            },
        );
    }
    let interested = [(novel.clone(), 10)].into_iter().collect();
    BoostToy {
        graph,
        catalog,
        fan,
        novel,
        siblings,
        interested,
        today,
    }
}

/// A random graph with a few isolated vertices, a random balancing table,
/// ratings and header fields.
pub fn random_snapshot(rng: &mut ChaCha8Rng) -> tastegraph::store::Snapshot {
    use tastegraph::graph::VertexType;
    let n = rng.random_range(6..120);
    let mut graph = random_graph(rng, n);
    for i in 0..rng.random_range(0..4) {
        graph.add_vertex(t(&format!("lonely{i}")));
    }
    let a: f64 = rng.random_range(0.05..0.95);
    let b: f64 = rng.random_range(0.05..0.95);
    let balancing = BalancingConfig::new([
        ((VertexType::User, EdgeType::Likes), a),
        ((VertexType::User, EdgeType::Prefers), 1.0 - a),
        ((VertexType::Artist, EdgeType::SimilarArtist), b),
        ((VertexType::Artist, EdgeType::ArtistTrack), 1.0 - b),
        ((VertexType::Track, EdgeType::SimilarTrack), 1.0),
    ])
    .unwrap();
    let ratings = graph
        .vertices()
        .filter(|v| v.vtype() == VertexType::Track)
        .filter_map(|v| {
            rng.random_bool(0.5)
                .then(|| (v.clone(), rng.random_range(0.0..500.0)))
        })
        .collect();
    tastegraph::store::Snapshot {
        graph,
        balancing,
        build_timestamp: rng.random_range(1_500_000_000..1_800_000_000),
        snapshot_id: rng.random_range(0..1_000),
        ratings,
    }
}
