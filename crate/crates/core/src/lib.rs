//! A graph-based music recommendation engine.
//!
//! Playback logs and catalog metadata are compiled into a typed, stochastic
//! taste graph ([`graph`]). Queries run random walks over it ([`walk`]),
//! randomize radio sequences ([`sequencer`]), cluster preferences into
//! context sets ([`context`]) and handle cold starts ([`coldstart`]).
//! Snapshots, configuration and the command line live in [`store`] and
//! [`cli`].

pub mod builder;
pub mod cli;
pub mod coldstart;
pub mod context;
pub mod graph;
pub mod sequencer;
pub mod store;
pub mod walk;
