//! Snapshot persistence, configuration, main-page ranking and the offline
//! activity indicators.

mod config;
mod indicators;
mod mainpage;
mod snapshot;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    ColdStartSection, Config, ContextSection, MainpageSection, PersonalizeSection, RadioSection,
    StageSection, CONFIG_ENV,
};
pub use indicators::{
    compute_indicators, read_tagged_events, IndicatorReport, Kind, Source, TaggedEvent,
};
pub use mainpage::{mainpage, top_pool};
pub use snapshot::{
    content_hash, load_snapshot, parse_snapshot, save_snapshot, serialize_snapshot, Snapshot,
    LOAD_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("snapshot violates graph invariants: {0}")]
    InvariantViolation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
}

impl StoreError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
