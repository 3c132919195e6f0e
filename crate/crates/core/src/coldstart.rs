//! New users and new items.
//!
//! Users without history get the preferences of their demography segment,
//! mixed with whatever little history they have. New tracks get a novelty
//! relevance score; the most relevant ones have their artist link boosted so
//! they surface before regular statistics accumulate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use chrono::NaiveDate;
use thiserror::Error;

use crate::builder::{parse_field, records, BuildError, Catalog, PlaybackEvent};
use crate::graph::{EdgeType, GraphError, StateVector, TasteGraph, VertexId, VertexType};

#[derive(Debug, Error, PartialEq)]
pub enum ColdStartError {
    #[error("added date {added} is after {today}")]
    FutureDate { added: NaiveDate, today: NaiveDate },
    #[error("invalid novelty config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgeBand {
    UpTo17,
    From18To24,
    From25To34,
    From35To44,
    From45,
}

impl AgeBand {
    pub fn from_age(age: u32) -> Self {
        match age {
            0..=17 => AgeBand::UpTo17,
            18..=24 => AgeBand::From18To24,
            25..=34 => AgeBand::From25To34,
            35..=44 => AgeBand::From35To44,
            _ => AgeBand::From45,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgeBand::UpTo17 => "<=17",
            AgeBand::From18To24 => "18-24",
            AgeBand::From25To34 => "25-34",
            AgeBand::From35To44 => "35-44",
            AgeBand::From45 => "45+",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sex {
    M,
    F,
}

/// `None` in any field is the wildcard: unknown for a user, "any" for a
/// profile.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DemographySegment {
    pub age: Option<AgeBand>,
    pub sex: Option<Sex>,
    pub region: Option<String>,
}

impl DemographySegment {
    pub fn global() -> Self {
        Self::default()
    }

    /// The segment itself, then with region, sex and age wildcarded in turn.
    /// Always ends with the global segment.
    pub fn fallback_chain(&self) -> Vec<DemographySegment> {
        let mut chain = vec![self.clone()];
        let mut cur = self.clone();
        for step in 0..3 {
            match step {
                0 => cur.region = None,
                1 => cur.sex = None,
                _ => cur.age = None,
            }
            if chain.last() != Some(&cur) {
                chain.push(cur.clone());
            }
        }
        chain
    }
}

impl fmt::Display for DemographySegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let age = self.age.map(AgeBand::as_str).unwrap_or("*");
        let sex = match self.sex {
            Some(Sex::M) => "M",
            Some(Sex::F) => "F",
            None => "*",
        };
        write!(f, "{age}\t{sex}\t{}", self.region.as_deref().unwrap_or("*"))
    }
}

fn is_unknown(field: &str) -> bool {
    matches!(field, "" | "*" | "?" | "-" | "unknown")
}

/// Reads `user \t age \t sex \t region` lines. Unknown values (`*`, `?`,
/// `-`, `unknown` or empty) become wildcards.
pub fn read_demography<R: Read>(
    reader: R,
) -> Result<BTreeMap<VertexId, DemographySegment>, BuildError> {
    let mut out = BTreeMap::new();
    for (line, f) in records(reader, 4)? {
        let age = if is_unknown(&f[1]) {
            None
        } else {
            Some(AgeBand::from_age(parse_field(line, &f[1], "age")?))
        };
        let sex = match f[2].as_str() {
            "M" | "m" => Some(Sex::M),
            "F" | "f" => Some(Sex::F),
            s if is_unknown(s) => None,
            s => {
                return Err(BuildError::Parse {
                    line,
                    message: format!("invalid sex `{s}`"),
                })
            }
        };
        let region = (!is_unknown(&f[3])).then(|| f[3].clone());
        out.insert(
            VertexId::user(&f[0]),
            DemographySegment { age, sex, region },
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemographyProfile {
    pub segment: DemographySegment,
    /// Distribution over tracks, proportional to distinct listeners.
    pub prefs: StateVector,
    /// Number of users aggregated.
    pub support: usize,
}

impl DemographyProfile {
    pub fn top(&self, n: usize) -> Vec<(VertexId, f64)> {
        let mut ranked = self.prefs.ranked();
        ranked.truncate(n);
        ranked
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSet {
    profiles: BTreeMap<DemographySegment, DemographyProfile>,
}

impl ProfileSet {
    pub fn get(&self, segment: &DemographySegment) -> Option<&DemographyProfile> {
        self.profiles.get(segment)
    }

    /// Most specific profile along the segment's fallback chain.
    pub fn resolve(&self, segment: &DemographySegment) -> Option<&DemographyProfile> {
        segment
            .fallback_chain()
            .iter()
            .find_map(|s| self.profiles.get(s))
    }

    pub fn iter(&self) -> impl Iterator<Item = &DemographyProfile> {
        self.profiles.values()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Aggregates distinct listeners per track for every segment along each
/// user's fallback chain. Users missing from `users` count toward the global
/// profile only. Segments with fewer than `min_support` users are dropped,
/// except the global one.
pub fn build_demography_profiles(
    log: &[PlaybackEvent],
    users: &BTreeMap<VertexId, DemographySegment>,
    min_support: usize,
) -> ProfileSet {
    let mut listeners: BTreeMap<&VertexId, BTreeSet<&VertexId>> = BTreeMap::new();
    for e in log {
        listeners.entry(&e.user).or_default().insert(&e.track);
    }
    let global = DemographySegment::global();
    let mut members: BTreeMap<DemographySegment, usize> = BTreeMap::new();
    let mut counts: BTreeMap<DemographySegment, BTreeMap<VertexId, usize>> = BTreeMap::new();
    for (user, tracks) in &listeners {
        let segment = users.get(*user).unwrap_or(&global);
        for s in segment.fallback_chain() {
            *members.entry(s.clone()).or_default() += 1;
            let c = counts.entry(s).or_default();
            for &t in tracks {
                *c.entry(t.clone()).or_default() += 1;
            }
        }
    }
    let profiles = counts
        .into_iter()
        .filter_map(|(segment, c)| {
            let support = members[&segment];
            if support < min_support && segment != global {
                return None;
            }
            let total: usize = c.values().sum();
            let prefs =
                StateVector::from_weights(c.into_iter().map(|(t, n)| (t, n as f64 / total as f64)));
            Some((
                segment.clone(),
                DemographyProfile {
                    segment,
                    prefs,
                    support,
                },
            ))
        })
        .collect();
    ProfileSet { profiles }
}

/// `μ · own + (1 - μ) · profile` with `μ = min(1, |own| / full_strength)`.
/// Both inputs are normalized first, so the result is a distribution.
pub fn mix_preferences(
    own: &StateVector,
    profile: &StateVector,
    full_strength: usize,
) -> StateVector {
    let mu = (own.len() as f64 / full_strength.max(1) as f64).min(1.0);
    if mu >= 1.0 || profile.is_empty() {
        return own.normalized();
    }
    if mu <= 0.0 {
        return profile.normalized();
    }
    let mut out = StateVector::new();
    for (v, w) in own.normalized().iter() {
        out.add(v.clone(), mu * w);
    }
    for (v, w) in profile.normalized().iter() {
        out.add(v.clone(), (1.0 - mu) * w);
    }
    out.normalized()
}

/// Top `n` tracks for a user from their (possibly empty) own preferences
/// mixed with a demography profile.
pub fn cold_recommend(
    own: &StateVector,
    profile: &DemographyProfile,
    full_strength: usize,
    n: usize,
) -> Vec<(VertexId, f64)> {
    let mut ranked = mix_preferences(own, &profile.prefs, full_strength)
        .restrict_type(VertexType::Track)
        .ranked();
    ranked.truncate(n);
    ranked
}

/// `interested_users / days^ti`, where `days` counts calendar days since
/// `added`, the day of addition being day 1.
pub fn novelty_relevance(
    interested_users: usize,
    added: NaiveDate,
    today: NaiveDate,
    ti: f64,
) -> Result<f64, ColdStartError> {
    if added > today {
        return Err(ColdStartError::FutureDate { added, today });
    }
    let days = (today - added).num_days() + 1;
    Ok(interested_users as f64 / (days as f64).powf(ti))
}

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoveltyConfig {
    /// Time impact factor.
    pub ti: f64,
    /// Minimum novelty relevance for a boost.
    pub novelty_limit: f64,
    /// Only tracks added at most this many days ago are boosted.
    pub recency_horizon_days: i64,
    pub boost_link_weight: f64,
    pub rating_boost: f64,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        Self {
            ti: 1.0,
            novelty_limit: 1.0,
            recency_horizon_days: 14,
            boost_link_weight: 0.5,
            rating_boost: 2.0,
        }
    }
}

impl NoveltyConfig {
    pub fn validate(&self) -> Result<(), ColdStartError> {
        let ok = self.ti > 0.0
            && self.novelty_limit > 0.0
            && self.recency_horizon_days >= 0
            && self.boost_link_weight > 0.0
            && self.boost_link_weight < 1.0
            && self.rating_boost >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(ColdStartError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Combined boosted weight allowed in one artist row.
pub const MAX_BOOSTED_SHARE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct BoostResult {
    pub graph: TasteGraph,
    pub ratings: BTreeMap<VertexId, f64>,
    /// Tracks that were boosted, in ascending order.
    pub boosted: Vec<VertexId>,
    /// Artists whose boosted tracks had to be scaled down to fit
    /// [`MAX_BOOSTED_SHARE`].
    pub overflowed: Vec<VertexId>,
}

/// Boosts recent tracks whose novelty relevance reaches the limit: their
/// artist link gets `boost_link_weight`, siblings (θ included) are rescaled
/// to fill the rest of the row, and their rating is multiplied by
/// `rating_boost`. The input graph is left untouched.
pub fn boost_new_items(
    graph: &TasteGraph,
    catalog: &Catalog,
    ratings: &BTreeMap<VertexId, f64>,
    cfg: &NoveltyConfig,
    today: NaiveDate,
    interested: &BTreeMap<VertexId, usize>,
) -> Result<BoostResult, ColdStartError> {
    cfg.validate()?;
    let mut by_artist: BTreeMap<&VertexId, Vec<&VertexId>> = BTreeMap::new();
    for (track, info) in catalog.iter() {
        let age = (today - info.added).num_days();
        if age < 0 || age > cfg.recency_horizon_days {
            continue;
        }
        let users = interested.get(track).copied().unwrap_or(0);
        if novelty_relevance(users, info.added, today, cfg.ti)? >= cfg.novelty_limit {
            by_artist.entry(&info.artist).or_default().push(track);
        }
    }

    let mut out = graph.clone();
    let mut new_ratings = ratings.clone();
    let mut boosted = Vec::new();
    let mut overflowed = Vec::new();
    for (artist, tracks) in by_artist {
        let Some(row) = graph.row(artist, EdgeType::ArtistTrack) else {
            continue;
        };
        let mut weight = cfg.boost_link_weight;
        if weight * tracks.len() as f64 > MAX_BOOSTED_SHARE {
            weight = MAX_BOOSTED_SHARE / tracks.len() as f64;
            overflowed.push(artist.clone());
        }
        let siblings: Vec<(VertexId, f64)> = row
            .iter()
            .filter(|(v, _)| !tracks.contains(v))
            .map(|(v, w)| ((*v).clone(), *w))
            .collect();
        let sibling_mass: f64 = siblings.iter().map(|(_, w)| w).sum();
        if sibling_mass <= 0.0 {
            weight = 1.0 / tracks.len() as f64;
        }
        let scale = if sibling_mass > 0.0 {
            (1.0 - weight * tracks.len() as f64) / sibling_mass
        } else {
            0.0
        };
        let mut new_row: Vec<(VertexId, f64)> = tracks
            .iter()
            .map(|&t| (t.clone(), weight))
            .chain(
                siblings
                    .into_iter()
                    .filter(|(_, w)| *w * scale > 0.0)
                    .map(|(v, w)| (v, w * scale)),
            )
            .collect();
        new_row.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.replace_row(artist, EdgeType::ArtistTrack, &new_row)?;
        for &t in &tracks {
            if let Some(r) = new_ratings.get_mut(t) {
                *r *= cfg.rating_boost;
            }
            boosted.push(t.clone());
        }
    }
    boosted.sort();
    Ok(BoostResult {
        graph: out,
        ratings: new_ratings,
        boosted,
        overflowed,
    })
}
