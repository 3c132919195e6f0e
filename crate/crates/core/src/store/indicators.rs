use std::fmt;
use std::io::Read;
use std::str::FromStr;

use crate::builder::{parse_field, records, BuildError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    MainPage,
    MyMusic,
}

impl FromStr for Source {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "main_page" => Ok(Source::MainPage),
            "my_music" => Ok(Source::MyMusic),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Playback,
    Like,
    Click,
}

impl FromStr for Kind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "playback" => Ok(Kind::Playback),
            "like" => Ok(Kind::Like),
            "click" => Ok(Kind::Click),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedEvent {
    pub user: String,
    pub track: String,
    pub source: Source,
    pub kind: Kind,
}

impl TaggedEvent {
    pub fn new(user: &str, track: &str, source: Source, kind: Kind) -> Self {
        Self {
            user: user.into(),
            track: track.into(),
            source,
            kind,
        }
    }
}

/// Reads `user \t track \t source \t kind` lines, where source is
/// `main_page` or `my_music` and kind is `playback`, `like` or `click`.
pub fn read_tagged_events<R: Read>(reader: R) -> Result<Vec<TaggedEvent>, BuildError> {
    records(reader, 4)?
        .into_iter()
        .map(|(line, f)| {
            Ok(TaggedEvent {
                source: parse_field(line, &f[2], "source")?,
                kind: parse_field(line, &f[3], "event kind")?,
                user: f[0].clone(),
                track: f[1].clone(),
            })
        })
        .collect()
}

/// Activity ratios of the main page. `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorReport {
    /// Main-page playbacks per "My music" playback.
    pub playbacks_main_vs_mymusic: Option<f64>,
    /// Main-page likes per "My music" playback.
    pub likes_main_vs_mymusic: Option<f64>,
    /// Main-page playbacks per main-page click.
    pub playbacks_per_click: Option<f64>,
}

impl fmt::Display for IndicatorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show =
            |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"));
        writeln!(
            f,
            "playbacks_main_vs_mymusic\t{}",
            show(self.playbacks_main_vs_mymusic)
        )?;
        writeln!(
            f,
            "likes_main_vs_mymusic\t{}",
            show(self.likes_main_vs_mymusic)
        )?;
        write!(f, "playbacks_per_click\t{}", show(self.playbacks_per_click))
    }
}

pub fn compute_indicators(events: &[TaggedEvent]) -> IndicatorReport {
    let count = |source, kind| {
        events
            .iter()
            .filter(|e| e.source == source && e.kind == kind)
            .count() as f64
    };
    let ratio = |num: f64, den: f64| (den > 0.0).then(|| num / den);
    let main_plays = count(Source::MainPage, Kind::Playback);
    let main_likes = count(Source::MainPage, Kind::Like);
    let main_clicks = count(Source::MainPage, Kind::Click);
    let my_plays = count(Source::MyMusic, Kind::Playback);
    IndicatorReport {
        playbacks_main_vs_mymusic: ratio(main_plays, my_plays),
        likes_main_vs_mymusic: ratio(main_likes, my_plays),
        playbacks_per_click: ratio(main_plays, main_clicks),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(counts: &[(Source, Kind, usize)]) -> Vec<TaggedEvent> {
        counts
            .iter()
            .flat_map(|&(s, k, n)| (0..n).map(move |i| TaggedEvent::new("u", &i.to_string(), s, k)))
            .collect()
    }

    #[test]
    fn ratio_arithmetic() {
        let r = compute_indicators(&events(&[
            (Source::MainPage, Kind::Playback, 50),
            (Source::MyMusic, Kind::Playback, 100),
            (Source::MainPage, Kind::Click, 25),
        ]));
        assert_eq!(r.playbacks_main_vs_mymusic, Some(0.5));
        assert_eq!(r.likes_main_vs_mymusic, Some(0.0));
        assert_eq!(r.playbacks_per_click, Some(2.0));
    }

    #[test]
    fn undefined_ratios() {
        let r = compute_indicators(&events(&[(Source::MainPage, Kind::Playback, 3)]));
        assert_eq!(r.playbacks_main_vs_mymusic, None);
        assert_eq!(r.likes_main_vs_mymusic, None);
        assert_eq!(r.playbacks_per_click, None);
        let eq = compute_indicators(&events(&[
            (Source::MainPage, Kind::Playback, 7),
            (Source::MyMusic, Kind::Playback, 7),
        ]));
        assert_eq!(eq.playbacks_main_vs_mymusic, Some(1.0));
    }

    #[test]
    fn parses_tagged_log() {
        let text = "u1\tt1\tmain_page\tplayback\nu1\t-\tmain_page\tclick\n";
        let ev = read_tagged_events(text.as_bytes()).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[1].kind, Kind::Click);
        assert!(read_tagged_events("u\tt\tsidebar\tplayback\n".as_bytes()).is_err());
    }
}
