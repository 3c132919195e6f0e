use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::GraphError;

/// Key of the zero-balancing vertex.
pub const ZERO_KEY: &str = "θ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexType {
    User,
    Track,
    Artist,
    /// Reserved, no builder populates it yet.
    Genre,
    /// Reserved, no builder populates it yet.
    Interest,
    Zero,
}

impl VertexType {
    pub const ALL: [VertexType; 6] = [
        VertexType::User,
        VertexType::Track,
        VertexType::Artist,
        VertexType::Genre,
        VertexType::Interest,
        VertexType::Zero,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VertexType::User => "user",
            VertexType::Track => "track",
            VertexType::Artist => "artist",
            VertexType::Genre => "genre",
            VertexType::Interest => "interest",
            VertexType::Zero => "zero",
        }
    }
}

impl fmt::Display for VertexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VertexType {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VertexType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GraphError::Parse(format!("unknown vertex type `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeType {
    /// user -> track
    Likes,
    /// user -> artist
    Prefers,
    SimilarArtist,
    SimilarTrack,
    ArtistTrack,
    /// The self-loop that makes the zero-balancing vertex absorbing.
    Absorb,
}

impl EdgeType {
    pub const ALL: [EdgeType; 6] = [
        EdgeType::Likes,
        EdgeType::Prefers,
        EdgeType::SimilarArtist,
        EdgeType::SimilarTrack,
        EdgeType::ArtistTrack,
        EdgeType::Absorb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Likes => "likes",
            EdgeType::Prefers => "prefers",
            EdgeType::SimilarArtist => "similar_artist",
            EdgeType::SimilarTrack => "similar_track",
            EdgeType::ArtistTrack => "artist_track",
            EdgeType::Absorb => "absorb",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GraphError::Parse(format!("unknown edge type `{s}`")))
    }
}

/// A typed vertex identifier. Keys are unique within a type.
///
/// Ordering is by key first and type second, so every ranking that breaks
/// ties "by vertex key" can simply compare ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexId {
    vtype: VertexType,
    key: String,
}

impl VertexId {
    pub fn new(vtype: VertexType, key: impl Into<String>) -> Self {
        Self {
            vtype,
            key: key.into(),
        }
    }

    pub fn user(key: impl Into<String>) -> Self {
        Self::new(VertexType::User, key)
    }

    pub fn track(key: impl Into<String>) -> Self {
        Self::new(VertexType::Track, key)
    }

    pub fn artist(key: impl Into<String>) -> Self {
        Self::new(VertexType::Artist, key)
    }

    pub fn zero() -> Self {
        Self::new(VertexType::Zero, ZERO_KEY)
    }

    pub fn vtype(&self) -> VertexType {
        self.vtype
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn is_zero(&self) -> bool {
        self.vtype == VertexType::Zero
    }
}

impl Ord for VertexId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then_with(|| self.vtype.cmp(&other.vtype))
    }
}

impl PartialOrd for VertexId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.vtype, self.key)
    }
}

/// One weighted, typed edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub from: VertexId,
    pub to: VertexId,
    pub etype: EdgeType,
    pub weight: f64,
}
