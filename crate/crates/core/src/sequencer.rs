//! Radio sequences by random pick with rejection.
//!
//! Items are drawn from a preference vector through its cumulative form.
//! Each drawn item survives with probability equal to the product of the
//! rejection factors (repeat, artist presence, artist distance, coherence
//! with the previous items); survivors are appended to the sequence.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{EdgeType, StateVector, TransitionOperator, VertexId};
use crate::walk::{PersonalizationWeights, WalkError};

/// Lower bound of the coherence factor, so weakly coupled items stay
/// reachable.
pub const MIN_COHERENCE: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum SequenceError {
    #[error("distribution has no positive mass")]
    EmptyDistribution,
    #[error("pick value {0} outside [0, total mass)")]
    OutOfRange(f64),
    #[error("need {needed} distinct candidates, only {available} available")]
    InsufficientCandidates { needed: usize, available: usize },
    #[error("invalid rejection config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// Running sums of a distribution in ascending vertex order. Item `i` owns
/// the half-open interval `[cum[i-1], cum[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeVector {
    order: Vec<VertexId>,
    cum: Vec<f64>,
}

impl CumulativeVector {
    pub fn order(&self) -> &[VertexId] {
        &self.order
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn total(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The item whose interval contains `r`, found by binary search.
    pub fn pick(&self, r: f64) -> Result<&VertexId, SequenceError> {
        self.pick_index(r).map(|i| &self.order[i])
    }

    /// Position in [`order`](Self::order) of the item picked by `r`.
    pub fn pick_index(&self, r: f64) -> Result<usize, SequenceError> {
        if !(r >= 0.0 && r < self.total()) {
            return Err(SequenceError::OutOfRange(r));
        }
        Ok(self.cum.partition_point(|&c| c <= r))
    }
}

/// Zero-weight entries are skipped, so every interval is non-empty.
pub fn build_cumulative(x: &StateVector) -> Result<CumulativeVector, SequenceError> {
    let mut order = Vec::new();
    let mut cum = Vec::new();
    let mut running = 0.0;
    for (v, w) in x.iter().filter(|(_, w)| *w > 0.0) {
        running += w;
        order.push(v.clone());
        cum.push(running);
    }
    if order.is_empty() {
        return Err(SequenceError::EmptyDistribution);
    }
    Ok(CumulativeVector { order, cum })
}

/// Which part of the sequence the repeat factor looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepeatWindow {
    /// Repeats allowed.
    Off,
    /// No item appears twice in the whole sequence.
    Whole,
    /// No item appears twice within the last `n` items.
    Tail(usize),
}

impl RepeatWindow {
    /// `-1` disables the factor, `0` covers the whole sequence, `n > 0` the
    /// last `n` items.
    pub fn from_setting(n: i64) -> Result<Self, SequenceError> {
        match n {
            -1 => Ok(RepeatWindow::Off),
            0 => Ok(RepeatWindow::Whole),
            n if n > 0 => Ok(RepeatWindow::Tail(n as usize)),
            n => Err(SequenceError::InvalidConfig(format!("repeat window {n}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionConfig {
    /// Per same-artist item already in the sequence, the item is kept with
    /// this factor.
    pub presence_decay: f64,
    /// Kept with `1 - distance_decay^d`, `d` being the distance from the tail
    /// to the artist's latest item.
    pub distance_decay: f64,
    pub repeat_window: RepeatWindow,
    pub coherence_weights: PersonalizationWeights,
    /// Number of latest items the coherence factor compares against; 0
    /// disables it.
    pub coherence_lookback: usize,
    /// Draw budget per requested slot.
    pub max_attempts: usize,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            presence_decay: 0.7,
            distance_decay: 0.5,
            repeat_window: RepeatWindow::Whole,
            coherence_weights: PersonalizationWeights::default(),
            coherence_lookback: 2,
            max_attempts: 50,
        }
    }
}

impl RejectionConfig {
    /// Every factor is 1: plain weighted sampling with replacement.
    pub fn neutral() -> Self {
        Self {
            presence_decay: 1.0,
            distance_decay: 0.0,
            repeat_window: RepeatWindow::Off,
            coherence_lookback: 0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SequenceError> {
        if !(0.0..=1.0).contains(&self.presence_decay)
            || !(0.0..=1.0).contains(&self.distance_decay)
        {
            return Err(SequenceError::InvalidConfig(
                "decays must lie in [0,1]".into(),
            ));
        }
        if self.max_attempts == 0 {
            return Err(SequenceError::InvalidConfig(
                "max_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `presence_decay^count`.
pub fn presence_factor(presence_decay: f64, count: usize) -> f64 {
    presence_decay.powi(count as i32)
}

/// `1 - distance_decay^position`, or 1 when the artist is absent.
pub fn distance_factor(distance_decay: f64, tail_position: Option<usize>) -> f64 {
    match tail_position {
        Some(p) => 1.0 - distance_decay.powi(p as i32),
        None => 1.0,
    }
}

/// Counters over a sequence, updated as items are appended.
#[derive(Debug, Default)]
struct Tally {
    len: usize,
    last_item: HashMap<VertexId, usize>,
    artist_count: HashMap<VertexId, usize>,
    last_artist: HashMap<VertexId, usize>,
}

impl Tally {
    fn push(&mut self, item: &VertexId, artist: &VertexId) {
        self.last_item.insert(item.clone(), self.len);
        *self.artist_count.entry(artist.clone()).or_default() += 1;
        self.last_artist.insert(artist.clone(), self.len);
        self.len += 1;
    }

    fn repeated(&self, item: &VertexId, window: RepeatWindow) -> bool {
        match (window, self.last_item.get(item)) {
            (RepeatWindow::Off, _) | (_, None) => false,
            (RepeatWindow::Whole, Some(_)) => true,
            (RepeatWindow::Tail(n), Some(&at)) => self.len - at <= n,
        }
    }

    fn tail_position(&self, artist: &VertexId) -> Option<usize> {
        self.last_artist.get(artist).map(|&at| self.len - at)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Radio {
    pub items: Vec<VertexId>,
    /// False when the draw budget ran out before the requested length.
    pub complete: bool,
    pub draws: usize,
}

/// Radio generator over one preference vector.
pub struct Sequencer<'a, 'g> {
    op: &'a TransitionOperator<'g>,
    cumulative: CumulativeVector,
    cfg: RejectionConfig,
    artists: HashMap<VertexId, VertexId>,
    /// Graph index and normalized weight of every entry of the preference
    /// vector, in vertex order.
    targets: Vec<(Option<usize>, f64)>,
    /// Entry of `targets` behind each cumulative slot.
    slot_target: Vec<usize>,
}

impl<'a, 'g> Sequencer<'a, 'g> {
    pub fn new(
        op: &'a TransitionOperator<'g>,
        x: &StateVector,
        cfg: RejectionConfig,
    ) -> Result<Self, SequenceError> {
        cfg.validate()?;
        let cumulative = build_cumulative(x)?;
        let graph = op.graph();
        let mut artists = HashMap::new();
        for edge in graph.edges() {
            if edge.etype == EdgeType::ArtistTrack && !edge.to.is_zero() {
                artists.entry(edge.to).or_insert(edge.from);
            }
        }
        let normalized = x.normalized();
        let mut targets = Vec::with_capacity(normalized.len());
        let mut slot_target = Vec::with_capacity(cumulative.len());
        for (v, w) in normalized.iter() {
            if cumulative.order().get(slot_target.len()) == Some(v) {
                slot_target.push(targets.len());
            }
            targets.push((graph.index_of(v), w));
        }
        Ok(Self {
            op,
            cumulative,
            cfg,
            artists,
            targets,
            slot_target,
        })
    }

    pub fn cumulative(&self) -> &CumulativeVector {
        &self.cumulative
    }

    /// Main artist of a track; a track without one is its own artist.
    pub fn artist_of<'v>(&'v self, track: &'v VertexId) -> &'v VertexId {
        self.artists.get(track).unwrap_or(track)
    }

    /// Personalization scores of every candidate slot against the latest
    /// items of `sequence`, scaled so the best preference entry scores 1.
    fn coherence_scores(&self, sequence: &[VertexId]) -> Result<Option<Vec<f64>>, SequenceError> {
        let lookback = self.cfg.coherence_lookback;
        if lookback == 0 || sequence.is_empty() {
            return Ok(None);
        }
        let tail = &sequence[sequence.len().saturating_sub(lookback)..];
        let source = self
            .op
            .to_dense(&StateVector::uniform(tail))
            .map_err(WalkError::from)?;
        let weights = &self.cfg.coherence_weights;
        let mut scores = vec![0.0; self.targets.len()];
        let mut x = vec![0.0; self.op.len()];
        let mut next = vec![0.0; self.op.len()];
        self.op.apply(&source, &mut x);
        for (step, w) in weights.steps().iter().enumerate() {
            if step > 0 {
                self.op.apply(&x, &mut next);
                std::mem::swap(&mut x, &mut next);
            }
            for (score, (index, _)) in scores.iter_mut().zip(&self.targets) {
                if let Some(i) = index {
                    *score += w * x[*i];
                }
            }
        }
        let wn = weights.target_weight();
        for (score, (_, own)) in scores.iter_mut().zip(&self.targets) {
            *score = wn * own + *score;
        }
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Ok(None);
        }
        Ok(Some(
            self.slot_target
                .iter()
                .map(|&k| (scores[k] / max).clamp(MIN_COHERENCE, 1.0))
                .collect(),
        ))
    }

    fn acceptance(
        &self,
        v: &VertexId,
        slot: Option<usize>,
        tally: &Tally,
        coherence: Option<&Vec<f64>>,
    ) -> f64 {
        if tally.repeated(v, self.cfg.repeat_window) {
            return 0.0;
        }
        let artist = self.artist_of(v);
        let count = tally.artist_count.get(artist).copied().unwrap_or(0);
        let presence = presence_factor(self.cfg.presence_decay, count);
        let distance = distance_factor(self.cfg.distance_decay, tally.tail_position(artist));
        let coherent = match (coherence, slot) {
            (Some(c), Some(i)) => c[i],
            (Some(_), None) => MIN_COHERENCE,
            (None, _) => 1.0,
        };
        presence * distance * coherent
    }

    /// Probability that `v` is kept when drawn after `sequence`.
    pub fn rejection_probability(
        &self,
        v: &VertexId,
        sequence: &[VertexId],
    ) -> Result<f64, SequenceError> {
        let mut tally = Tally::default();
        for item in sequence {
            tally.push(item, self.artist_of(item));
        }
        let coherence = self.coherence_scores(sequence)?;
        let slot = self.cumulative.order().binary_search(v).ok();
        Ok(self.acceptance(v, slot, &tally, coherence.as_ref()))
    }

    /// Draws until `length` items are accepted or `max_attempts * length`
    /// draws are spent. Identical seeds give identical sequences.
    pub fn generate(&self, length: usize, rng_seed: u64) -> Result<Radio, SequenceError> {
        if self.cfg.repeat_window == RepeatWindow::Whole && self.cumulative.len() < length {
            return Err(SequenceError::InsufficientCandidates {
                needed: length,
                available: self.cumulative.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let total = self.cumulative.total();
        let budget = self.cfg.max_attempts.saturating_mul(length);
        let mut items: Vec<VertexId> = Vec::with_capacity(length);
        let mut tally = Tally::default();
        let mut coherence = None;
        let mut draws = 0;
        while items.len() < length && draws < budget {
            draws += 1;
            let r = (rng.random::<f64>() * total).min(total * (1.0 - f64::EPSILON));
            let slot = self.cumulative.pick_index(r)?;
            let v = &self.cumulative.order()[slot];
            let p = self.acceptance(v, Some(slot), &tally, coherence.as_ref());
            if rng.random::<f64>() < p {
                tally.push(v, self.artist_of(v));
                items.push(v.clone());
                if self.cfg.coherence_lookback > 0 {
                    coherence = self.coherence_scores(&items)?;
                }
            }
        }
        Ok(Radio {
            complete: items.len() == length,
            items,
            draws,
        })
    }
}
