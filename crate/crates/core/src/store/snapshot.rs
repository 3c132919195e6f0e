use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::StoreError;
use crate::graph::{BalancingConfig, EdgeType, GraphError, TasteGraph, VertexId, VertexType};

const HEADER: &str = "#taste-graph v1";
const CHECKSUM_PREFIX: &str = "#checksum ";
/// Row-sum slack accepted on load, covering the 12-digit weight rounding.
pub const LOAD_TOLERANCE: f64 = 1e-6;

/// An immutable, published taste graph together with what queries need
/// alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub graph: TasteGraph,
    pub balancing: BalancingConfig,
    /// Unix seconds.
    pub build_timestamp: i64,
    pub snapshot_id: u64,
    /// System-wide track ratings used to build top lists.
    pub ratings: BTreeMap<VertexId, f64>,
}

impl Snapshot {
    pub fn new(graph: TasteGraph, balancing: BalancingConfig) -> Self {
        Self {
            graph,
            balancing,
            build_timestamp: 0,
            snapshot_id: 0,
            ratings: BTreeMap::new(),
        }
    }
}

/// First 8 bytes of the SHA-256 digest, as 16 hex digits.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8]
        .iter()
        .fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Canonical text form: edges sorted by (from, edge type, to) with weights
/// at 12 significant digits, then balancing and ratings sections, then a
/// checksum line over everything before it.
pub fn serialize_snapshot(s: &Snapshot) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "#snapshot\t{}\t{}", s.snapshot_id, s.build_timestamp);
    let mut linked = std::collections::BTreeSet::new();
    for e in s.graph.edges() {
        linked.insert(e.from.clone());
        linked.insert(e.to.clone());
        if e.etype == EdgeType::Absorb {
            continue;
        }
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.11e}",
            e.from.vtype(),
            e.from.key(),
            e.etype,
            e.to.vtype(),
            e.to.key(),
            e.weight
        );
    }
    let mut isolated: Vec<&VertexId> = s
        .graph
        .vertices()
        .filter(|v| !linked.contains(*v))
        .collect();
    if !isolated.is_empty() {
        isolated.sort();
        out.push_str("#isolated\n");
        for v in isolated {
            let _ = writeln!(out, "{}\t{}", v.vtype(), v.key());
        }
    }
    out.push_str("#balancing\n");
    for ((vt, et), w) in s.balancing.entries() {
        let _ = writeln!(out, "{vt}\t{et}\t{w}");
    }
    out.push_str("#ratings\n");
    for (v, r) in &s.ratings {
        let _ = writeln!(out, "{}\t{}\t{r}", v.vtype(), v.key());
    }
    let hash = content_hash(out.as_bytes());
    let _ = writeln!(out, "{CHECKSUM_PREFIX}{hash}");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Edges,
    Isolated,
    Balancing,
    Ratings,
}

fn corrupt(line: usize, msg: impl std::fmt::Display) -> StoreError {
    StoreError::CorruptSnapshot(format!("line {line}: {msg}"))
}

fn field<T: std::str::FromStr>(line: usize, f: &str, what: &str) -> Result<T, StoreError> {
    f.parse()
        .map_err(|_| corrupt(line, format!("invalid {what} `{f}`")))
}

fn vertex(line: usize, vtype: &str, key: &str) -> Result<VertexId, StoreError> {
    let vtype: VertexType = field(line, vtype, "vertex type")?;
    Ok(VertexId::new(vtype, key))
}

/// Parses and validates the canonical text form.
pub fn parse_snapshot(text: &str) -> Result<Snapshot, StoreError> {
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or_else(|| StoreError::CorruptSnapshot("file too short".into()))?;
    let (body, trailer) = text.split_at(body_end);
    let expected = trailer
        .trim_end_matches('\n')
        .strip_prefix(CHECKSUM_PREFIX)
        .ok_or_else(|| StoreError::CorruptSnapshot("missing checksum line".into()))?;
    if content_hash(body.as_bytes()) != expected {
        return Err(StoreError::CorruptSnapshot("checksum mismatch".into()));
    }

    let mut lines = body.lines().enumerate().map(|(i, l)| (i + 1, l));
    if lines.next().map(|(_, l)| l) != Some(HEADER) {
        return Err(StoreError::CorruptSnapshot(format!(
            "missing `{HEADER}` header"
        )));
    }
    let (n, meta) = lines
        .next()
        .ok_or_else(|| StoreError::CorruptSnapshot("missing snapshot line".into()))?;
    let meta: Vec<&str> = meta.split('\t').collect();
    if meta.len() != 3 || meta[0] != "#snapshot" {
        return Err(corrupt(n, "expected `#snapshot <id> <timestamp>`"));
    }
    let snapshot_id: u64 = field(n, meta[1], "snapshot id")?;
    let build_timestamp: i64 = field(n, meta[2], "timestamp")?;

    let mut rows: BTreeMap<(VertexId, EdgeType), Vec<(VertexId, f64)>> = BTreeMap::new();
    let mut isolated = Vec::new();
    let mut balancing = Vec::new();
    let mut ratings = BTreeMap::new();
    let mut section = Section::Edges;
    for (n, line) in lines {
        match line {
            "#isolated" => section = Section::Isolated,
            "#balancing" => section = Section::Balancing,
            "#ratings" => section = Section::Ratings,
            _ => {
                let f: Vec<&str> = line.split('\t').collect();
                match section {
                    Section::Edges if f.len() == 6 => {
                        let from = vertex(n, f[0], f[1])?;
                        let etype: EdgeType = field(n, f[2], "edge type")?;
                        let to = vertex(n, f[3], f[4])?;
                        let w: f64 = field(n, f[5], "weight")?;
                        rows.entry((from, etype)).or_default().push((to, w));
                    }
                    Section::Isolated if f.len() == 2 => isolated.push(vertex(n, f[0], f[1])?),
                    Section::Balancing if f.len() == 3 => {
                        let vt: VertexType = field(n, f[0], "vertex type")?;
                        let et: EdgeType = field(n, f[1], "edge type")?;
                        balancing.push(((vt, et), field(n, f[2], "balance weight")?));
                    }
                    Section::Ratings if f.len() == 3 => {
                        ratings.insert(vertex(n, f[0], f[1])?, field(n, f[2], "rating")?);
                    }
                    _ => return Err(corrupt(n, "unexpected field count")),
                }
            }
        }
    }

    let mut graph = TasteGraph::new();
    for v in isolated {
        graph.add_vertex(v);
    }
    for ((from, etype), row) in rows {
        graph
            .insert_row_with_tolerance(&from, etype, &row, LOAD_TOLERANCE)
            .map_err(|e| match e {
                GraphError::NotStochastic { .. } | GraphError::InvalidWeight(_) => {
                    StoreError::InvariantViolation(e.to_string())
                }
                other => StoreError::CorruptSnapshot(other.to_string()),
            })?;
    }
    let balancing = BalancingConfig::new(balancing)
        .map_err(|e| StoreError::InvariantViolation(e.to_string()))?;
    Ok(Snapshot {
        graph,
        balancing,
        build_timestamp,
        snapshot_id,
        ratings,
    })
}

pub fn save_snapshot(s: &Snapshot, path: &Path) -> Result<(), StoreError> {
    std::fs::write(path, serialize_snapshot(s)).map_err(|e| StoreError::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_snapshot(&text)
}
