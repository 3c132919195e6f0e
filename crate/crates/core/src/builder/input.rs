//! Raw builder inputs and their tab-separated file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::NaiveDate;

use super::BuildError;
use crate::graph::VertexId;

/// One playback: a user played a track at a unix timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaybackEvent {
    pub user: VertexId,
    pub track: VertexId,
    pub timestamp: i64,
}

impl PlaybackEvent {
    pub fn new(user: &str, track: &str, timestamp: i64) -> Self {
        Self {
            user: VertexId::user(user),
            track: VertexId::track(track),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackInfo {
    pub artist: VertexId,
    /// Rating increments per date, ascending by date.
    pub ratings: Vec<(NaiveDate, f64)>,
    pub added: NaiveDate,
}

impl TrackInfo {
    /// Sum of rating increments dated on or before `today`.
    pub fn total_rating(&self, today: NaiveDate) -> f64 {
        self.ratings
            .iter()
            .filter(|(d, _)| *d <= today)
            .map(|(_, r)| r)
            .sum()
    }

    /// Sum of rating increments with `from < date <= to`.
    pub fn rating_between(&self, from: NaiveDate, to: NaiveDate) -> f64 {
        self.ratings
            .iter()
            .filter(|(d, _)| *d > from && *d <= to)
            .map(|(_, r)| r)
            .sum()
    }
}

/// Track metadata: main artist, rating history and the date it was added.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    tracks: BTreeMap<VertexId, TrackInfo>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, track: VertexId, mut info: TrackInfo) {
        info.ratings.sort_by_key(|(d, _)| *d);
        self.tracks.insert(track, info);
    }

    pub fn get(&self, track: &VertexId) -> Option<&TrackInfo> {
        self.tracks.get(track)
    }

    pub fn artist_of(&self, track: &VertexId) -> Option<&VertexId> {
        self.tracks.get(track).map(|t| &t.artist)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, &TrackInfo)> {
        self.tracks.iter()
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Tracks grouped by artist, both in ascending key order.
    pub fn tracks_by_artist(&self) -> BTreeMap<&VertexId, Vec<&VertexId>> {
        let mut out: BTreeMap<&VertexId, Vec<&VertexId>> = BTreeMap::new();
        for (track, info) in &self.tracks {
            out.entry(&info.artist).or_default().push(track);
        }
        out
    }
}

/// Users' custom playlists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaylistStore {
    lists: BTreeMap<VertexId, Vec<VertexId>>,
}

impl PlaylistStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a track, ignoring duplicates.
    pub fn add(&mut self, user: VertexId, track: VertexId) {
        let list = self.lists.entry(user).or_default();
        if !list.contains(&track) {
            list.push(track);
        }
    }

    pub fn get(&self, user: &VertexId) -> &[VertexId] {
        self.lists.get(user).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn users(&self) -> impl Iterator<Item = &VertexId> {
        self.lists.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, &[VertexId])> {
        self.lists.iter().map(|(u, l)| (u, l.as_slice()))
    }
}

/// Distinct users that played a track or put it on a playlist.
pub fn interested_users(
    log: &[PlaybackEvent],
    playlists: &PlaylistStore,
) -> BTreeMap<VertexId, usize> {
    let mut users: BTreeMap<&VertexId, BTreeSet<&VertexId>> = BTreeMap::new();
    for e in log {
        users.entry(&e.track).or_default().insert(&e.user);
    }
    for (user, list) in playlists.iter() {
        for track in list {
            users.entry(track).or_default().insert(user);
        }
    }
    users
        .into_iter()
        .map(|(t, us)| (t.clone(), us.len()))
        .collect()
}

pub(crate) fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .quoting(false)
        .from_reader(reader)
}

pub(crate) fn records<R: Read>(
    reader: R,
    columns: usize,
) -> Result<Vec<(usize, Vec<String>)>, BuildError> {
    let mut out = Vec::new();
    for (i, rec) in tsv_reader(reader).records().enumerate() {
        let rec = rec.map_err(|e| BuildError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() < columns {
            return Err(BuildError::Parse {
                line,
                message: format!("expected {columns} tab-separated fields, got {}", rec.len()),
            });
        }
        out.push((line, rec.iter().map(|f| f.trim().to_string()).collect()));
    }
    Ok(out)
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    line: usize,
    field: &str,
    what: &str,
) -> Result<T, BuildError> {
    field.parse().map_err(|_| BuildError::Parse {
        line,
        message: format!("invalid {what} `{field}`"),
    })
}

pub(crate) fn parse_date(line: usize, field: &str) -> Result<NaiveDate, BuildError> {
    NaiveDate::parse_from_str(field, "%Y-%m-%d").map_err(|_| BuildError::Parse {
        line,
        message: format!("invalid date `{field}`, expected YYYY-MM-DD"),
    })
}

/// Reads `user \t track \t unix_timestamp` lines.
pub fn read_playback_log<R: Read>(reader: R) -> Result<Vec<PlaybackEvent>, BuildError> {
    records(reader, 3)?
        .into_iter()
        .map(|(line, f)| {
            let timestamp: i64 = parse_field(line, &f[2], "timestamp")?;
            if timestamp <= 0 {
                return Err(BuildError::Parse {
                    line,
                    message: format!("timestamp must be positive, got {timestamp}"),
                });
            }
            Ok(PlaybackEvent::new(&f[0], &f[1], timestamp))
        })
        .collect()
}

/// Reads `track \t artist \t added_date` lines plus `track \t date \t rating`
/// lines. Tracks without any rating line get an empty history.
pub fn read_catalog<R1: Read, R2: Read>(tracks: R1, ratings: R2) -> Result<Catalog, BuildError> {
    let mut history: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for (line, f) in records(ratings, 3)? {
        let date = parse_date(line, &f[1])?;
        let rating: f64 = parse_field(line, &f[2], "rating")?;
        if !(rating >= 0.0) {
            return Err(BuildError::Parse {
                line,
                message: format!("rating must be non-negative, got {rating}"),
            });
        }
        history
            .entry(f[0].clone())
            .or_default()
            .push((date, rating));
    }
    let mut catalog = Catalog::new();
    for (line, f) in records(tracks, 3)? {
        let added = parse_date(line, &f[2])?;
        catalog.insert(
            VertexId::track(&f[0]),
            TrackInfo {
                artist: VertexId::artist(&f[1]),
                ratings: history.remove(&f[0]).unwrap_or_default(),
                added,
            },
        );
    }
    if let Some(track) = history.keys().next() {
        return Err(BuildError::UnknownTrack(track.clone()));
    }
    Ok(catalog)
}

/// Reads `user \t track` lines.
pub fn read_playlists<R: Read>(reader: R) -> Result<PlaylistStore, BuildError> {
    let mut store = PlaylistStore::new();
    for (_, f) in records(reader, 2)? {
        store.add(VertexId::user(&f[0]), VertexId::track(&f[1]));
    }
    Ok(store)
}
