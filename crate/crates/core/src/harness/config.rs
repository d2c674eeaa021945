//! TOML experiment configuration.
//!
//! ```toml
//! seeds = [0, 1, 2, 3, 4]
//! score_scale = 1.0            # returns are divided by this for metrics
//!
//! [env]                        # see env::EnvConfig
//! name = "sparse-goal-grid"
//! episode_length = 200
//!
//! [agent]                      # see agents::AgentConfig; unset keys use defaults
//! kind = "q-table"
//!
//! [persistence]                # see persistence::PersistenceStrategy
//! strategy = "snap"
//! alpha = 1.0
//!
//! [novelty]                    # see novelty::NoveltyConfig
//! counter = "simhash"
//!
//! [train]                      # see agents::TrainOptions
//! total_steps = 20000
//!
//! [[ablate]]                   # optional variants for `snap ablate`
//! label = "snap-tabular"
//! novelty = { counter = "tabular" }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::coverage::{CoverageOptions, CoverageStrategy};
use super::metrics::DEFAULT_SCORE_SCALE;
use crate::agents::{AgentConfig, TrainOptions};
use crate::env::EnvConfig;
use crate::novelty::{CounterKind, NoveltyConfig};
use crate::persistence::{PersistenceStrategy, Schedule};
use crate::{Error, Result};

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_scale() -> f64 {
    DEFAULT_SCORE_SCALE
}

fn default_strategy() -> PersistenceStrategy {
    PersistenceStrategy::snap(1.0)
}

/// One run variant of an ablation; unset parts fall back to the base config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationVariant {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persistence: Option<PersistenceStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novelty: Option<NoveltyConfig>,
}

/// Coverage sweep settings for `snap coverage`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageConfig {
    /// `random`, `zeta` or `count`.
    pub strategies: Vec<String>,
    pub alpha: f64,
    pub mu: f64,
    pub episode_length: usize,
    pub total_steps: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub grid_size: usize,
    /// Counter used by count-repeat.
    pub novelty: NoveltyConfig,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        let o = CoverageOptions::default();
        CoverageConfig {
            strategies: vec!["random".into(), "zeta".into(), "count".into()],
            alpha: 1.0,
            mu: crate::persistence::DEFAULT_ZETA_MU,
            episode_length: o.episode_length,
            total_steps: o.total_steps,
            runs: o.runs,
            base_seed: o.base_seed,
            grid_size: o.grid_size,
            novelty: o.novelty,
        }
    }
}

impl CoverageConfig {
    pub fn options(&self) -> CoverageOptions {
        CoverageOptions {
            episode_length: self.episode_length,
            total_steps: self.total_steps,
            runs: self.runs,
            base_seed: self.base_seed,
            grid_size: self.grid_size,
            novelty: self.novelty.clone(),
        }
    }

    /// Parsed strategies with this config's `alpha` and `mu`.
    pub fn parsed_strategies(&self) -> Result<Vec<CoverageStrategy>> {
        self.strategies
            .iter()
            .map(|s| {
                Ok(match s.parse::<CoverageStrategy>()? {
                    CoverageStrategy::RandomZeta { .. } => CoverageStrategy::RandomZeta { mu: self.mu },
                    CoverageStrategy::CountRepeat { .. } => CoverageStrategy::CountRepeat { alpha: self.alpha },
                    other => other,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Output root; the command line and `SNAP_OUT_DIR` take precedence
    /// in that order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Normalizer for final returns in metrics (1000 for 1000-max tasks).
    #[serde(default = "default_scale")]
    pub score_scale: f64,
    pub env: EnvConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default = "default_strategy")]
    pub persistence: PersistenceStrategy,
    #[serde(default)]
    pub novelty: NoveltyConfig,
    #[serde(default)]
    pub train: TrainOptions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ablate: Vec<AblationVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageConfig>,
}

impl ExperimentConfig {
    pub fn new(env: EnvConfig) -> Self {
        ExperimentConfig {
            seeds: default_seeds(),
            out_dir: None,
            score_scale: DEFAULT_SCORE_SCALE,
            env,
            agent: AgentConfig::default(),
            persistence: default_strategy(),
            novelty: NoveltyConfig::default(),
            train: TrainOptions::default(),
            ablate: Vec::new(),
            coverage: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must not be empty"));
        }
        if self.train.eval_every == 0 {
            return Err(Error::config("train.eval_every must be positive"));
        }
        if !(self.score_scale > 0.0 && self.score_scale.is_finite()) {
            return Err(Error::config("score_scale must be positive"));
        }
        self.env.validate()?;
        self.agent.validate()?;
        self.train.validate()?;
        self.persistence.validate()?;
        self.agent.check_env(self.env.build()?.as_ref())?;
        for v in &self.ablate {
            if v.label.is_empty() || v.label.contains(['/', '\\']) {
                return Err(Error::config(format!("ablation label {:?} is not a plain name", v.label)));
            }
            if let Some(p) = &v.persistence {
                p.validate()?;
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; every failure names `path`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    /// Directory label of the base strategy.
    pub fn label(&self) -> String {
        self.persistence.name().to_string()
    }

    /// Variants run by `snap ablate`: the configured list, or the standard
    /// counter and scheduler ablations when none is given.
    pub fn ablation_variants(&self) -> Vec<AblationVariant> {
        if !self.ablate.is_empty() {
            return self.ablate.clone();
        }
        let snap = PersistenceStrategy::snap(1.0);
        let counter = |label: &str, kind: CounterKind| AblationVariant {
            label: label.into(),
            persistence: Some(snap.clone()),
            novelty: Some(NoveltyConfig::with_counter(kind)),
        };
        let horizon = self.train.total_steps as f64;
        vec![
            counter("snap-simhash", CounterKind::Simhash),
            counter("snap-tabular", CounterKind::Tabular),
            counter("snap-quantized", CounterKind::Quantized),
            counter("snap-kmeans", CounterKind::Kmeans),
            AblationVariant {
                label: "linear".into(),
                persistence: Some(PersistenceStrategy::Linear {
                    schedule: Schedule::linear(1.0, 0.0, horizon),
                }),
                novelty: None,
            },
            AblationVariant {
                label: "sigmoid".into(),
                persistence: Some(PersistenceStrategy::Sigmoid {
                    schedule: Schedule::sigmoid(1.0, 0.0, horizon),
                }),
                novelty: None,
            },
            AblationVariant {
                label: "none".into(),
                persistence: Some(PersistenceStrategy::None),
                novelty: None,
            },
        ]
    }

    /// Copy with one variant applied.
    pub fn with_variant(&self, v: &AblationVariant) -> Self {
        let mut c = self.clone();
        if let Some(p) = &v.persistence {
            c.persistence = p.clone();
        }
        if let Some(n) = &v.novelty {
            c.novelty = n.clone();
        }
        c.ablate.clear();
        c
    }
}
