use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::StoreError;
use crate::builder::BuilderConfig;
use crate::coldstart::NoveltyConfig;
use crate::context::{ClusterConfig, ClusterStage, ContextFilterParams};
use crate::graph::{BalancingConfig, EdgeType, VertexType};
use crate::sequencer::{RejectionConfig, RepeatWindow};
use crate::walk::{PersonalizationWeights, WalkParams};

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "TASTE_CONFIG";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonalizeSection {
    /// `w_0 ... w_n`; the last one weighs the target itself.
    pub weights: Vec<f64>,
    /// Seeds shorter than this are enriched before list extension.
    pub min_seed: usize,
}

impl Default for PersonalizeSection {
    fn default() -> Self {
        Self {
            weights: PersonalizationWeights::default().as_slice().to_vec(),
            min_seed: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub presence_decay: f64,
    pub distance_decay: f64,
    /// `-1` allows repeats, `0` forbids them anywhere, `n` within the last `n`.
    pub repeat_window: i64,
    pub coherence_lookback: usize,
    pub max_attempts: usize,
    pub length: usize,
}

impl Default for RadioSection {
    fn default() -> Self {
        let d = RejectionConfig::default();
        Self {
            presence_decay: d.presence_decay,
            distance_decay: d.distance_decay,
            repeat_window: 0,
            coherence_lookback: d.coherence_lookback,
            max_attempts: d.max_attempts,
            length: 20,
        }
    }
}

/// One clustering stage; without `nc` it is weight-bound.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSection {
    pub tau: f64,
    pub nc: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextSection {
    pub tau: f64,
    pub nc: usize,
    pub chain: Vec<StageSection>,
    pub size_limit: usize,
    pub relative_rating_pct: f64,
    pub delta: f64,
    pub lambda: f64,
    pub convince_limit: usize,
    pub max_ap_iterations: usize,
    pub min_cluster_size: usize,
}

impl Default for ContextSection {
    fn default() -> Self {
        let d = ClusterConfig::default();
        Self {
            tau: d.tau,
            nc: d.nc,
            chain: d
                .chain
                .iter()
                .map(|s| match *s {
                    ClusterStage::WeightBound { tau } => StageSection { tau, nc: None },
                    ClusterStage::CommonsBound { tau, nc } => StageSection { tau, nc: Some(nc) },
                })
                .collect(),
            size_limit: d.size_limit,
            relative_rating_pct: d.relative_rating_pct,
            delta: d.delta,
            lambda: d.lambda,
            convince_limit: d.convince_limit,
            max_ap_iterations: d.max_ap_iterations,
            min_cluster_size: d.min_cluster_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColdStartSection {
    /// Segments with fewer users fall back to coarser ones.
    pub min_support: usize,
    /// Users with this many items need no profile mixing.
    pub full_strength: usize,
}

impl Default for ColdStartSection {
    fn default() -> Self {
        Self {
            min_support: 5,
            full_strength: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MainpageSection {
    pub pool: usize,
    pub top: usize,
}

impl Default for MainpageSection {
    fn default() -> Self {
        Self {
            pool: 1000,
            top: 100,
        }
    }
}

/// Every tunable, read from `section.key = value` lines. Missing keys keep
/// their defaults; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub builder: BuilderConfig,
    pub walk: WalkParams,
    pub personalize: PersonalizeSection,
    pub radio: RadioSection,
    pub context: ContextSection,
    pub filter: ContextFilterParams,
    pub coldstart: ColdStartSection,
    pub novelty: NoveltyConfig,
    /// `balancing.<vertex type>.<edge type> = weight`; replaces the default
    /// table entirely when present.
    pub balancing: Option<BTreeMap<String, BTreeMap<String, f64>>>,
    pub mainpage: MainpageSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let cfg: Config = toml::from_str(text).map_err(|e| StoreError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
        Self::parse(&text)
    }

    /// Loads `path`, else the file named by `TASTE_CONFIG`, else defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self, StoreError> {
        match path {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        let err = |e: &dyn std::fmt::Display| StoreError::Config(e.to_string());
        self.builder.validate().map_err(|e| err(&e))?;
        self.walk.validate().map_err(|e| err(&e))?;
        self.personalization_weights()?;
        self.rejection_config()?.validate().map_err(|e| err(&e))?;
        self.cluster_config().validate().map_err(|e| err(&e))?;
        self.filter.validate().map_err(|e| err(&e))?;
        self.novelty.validate().map_err(|e| err(&e))?;
        self.balancing_config()?;
        if self.coldstart.full_strength == 0 {
            return Err(StoreError::Config(
                "coldstart.full_strength must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn personalization_weights(&self) -> Result<PersonalizationWeights, StoreError> {
        PersonalizationWeights::new(self.personalize.weights.clone())
            .map_err(|e| StoreError::Config(e.to_string()))
    }

    pub fn rejection_config(&self) -> Result<RejectionConfig, StoreError> {
        let r = &self.radio;
        Ok(RejectionConfig {
            presence_decay: r.presence_decay,
            distance_decay: r.distance_decay,
            repeat_window: RepeatWindow::from_setting(r.repeat_window)
                .map_err(|e| StoreError::Config(e.to_string()))?,
            coherence_weights: self.personalization_weights()?,
            coherence_lookback: r.coherence_lookback,
            max_attempts: r.max_attempts,
        })
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        let c = &self.context;
        ClusterConfig {
            tau: c.tau,
            nc: c.nc,
            chain: c
                .chain
                .iter()
                .map(|s| match s.nc {
                    Some(nc) => ClusterStage::CommonsBound { tau: s.tau, nc },
                    None => ClusterStage::WeightBound { tau: s.tau },
                })
                .collect(),
            size_limit: c.size_limit,
            relative_rating_pct: c.relative_rating_pct,
            delta: c.delta,
            lambda: c.lambda,
            convince_limit: c.convince_limit,
            max_ap_iterations: c.max_ap_iterations,
            min_cluster_size: c.min_cluster_size,
        }
    }

    pub fn balancing_config(&self) -> Result<BalancingConfig, StoreError> {
        let Some(table) = &self.balancing else {
            return Ok(BalancingConfig::default());
        };
        let mut entries = Vec::new();
        for (vt, row) in table {
            let vt: VertexType = vt
                .parse()
                .map_err(|_| StoreError::Config(format!("unknown vertex type `{vt}`")))?;
            for (et, w) in row {
                let et: EdgeType = et
                    .parse()
                    .map_err(|_| StoreError::Config(format!("unknown edge type `{et}`")))?;
                entries.push(((vt, et), *w));
            }
        }
        BalancingConfig::new(entries).map_err(|e| StoreError::Config(e.to_string()))
    }
}
