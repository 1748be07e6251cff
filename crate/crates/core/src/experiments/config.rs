//! TOML run configuration.
//!
//! Every key is optional; omitted keys take the defaults below. Unknown
//! keys are rejected.
//!
//! ```toml
//! layout = "BasicHumanVatGoalEnv"
//! episodes = 10000
//! max_steps = 100
//! batch_size = 100
//! buffer_capacity = 100000
//! target_sync_interval = 1000
//! lr = 0.0001
//! gamma = 0.99
//! n_imaginary = 30
//! alpha = 10.0
//! beta = 10.0
//! use_nse = true
//! use_emp = true
//! seeds = [0, 1, 2, 3, 4, 5]
//! neuron_mode = "relu"          # or "lif"
//! output_dir = "runs"
//! workers = 1                   # concurrent runs; 0 = one per CPU
//!
//! [epsilon]                     # default: 5% warm / 5% final plateaus
//! start = 1.0
//! end = 0.01
//! warm_episodes = 500
//! final_episodes = 500
//!
//! [lif]
//! tau = 2.0
//! v_rest = 0.0
//! v_threshold = 0.5
//! reset = "soft"                # or "hard"
//! timesteps = 4
//! surrogate_width = 2.0
//!
//! [imagination]
//! scope = "self_centric"        # or "full"
//! empathy = "inaction_baseline" # or "action_at_swapped"
//! value_scale = 0.01            # default 1 - gamma
//! penalize_goal_step = false
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smashvat_neural::{LifParams, NeuronMode, ResetMode};

use crate::error::{Error, Result};
use crate::imagination::{EmpathyMode, IntrinsicWeights, KeyScope};
use crate::learner::{EpsilonSchedule, ImaginationSettings, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NeuronKind {
    #[default]
    Relu,
    Lif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResetKind {
    #[default]
    Soft,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifSection {
    pub tau: f64,
    pub v_rest: f64,
    pub v_threshold: f64,
    pub reset: ResetKind,
    pub timesteps: usize,
    pub surrogate_width: f64,
}

impl Default for LifSection {
    fn default() -> Self {
        let p = LifParams::default();
        LifSection {
            tau: p.tau,
            v_rest: p.v_rest,
            v_threshold: p.v_threshold,
            reset: ResetKind::Soft,
            timesteps: p.timesteps,
            surrogate_width: p.surrogate_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSection {
    #[serde(default = "one")]
    pub start: f64,
    #[serde(default = "eps_end")]
    pub end: f64,
    pub warm_episodes: Option<u32>,
    pub final_episodes: Option<u32>,
}

fn one() -> f64 {
    1.0
}

fn eps_end() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ImaginationSection {
    pub scope: KeyScope,
    pub empathy: EmpathyMode,
    pub value_scale: Option<f64>,
    pub penalize_goal_step: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub layout: String,
    pub episodes: u32,
    pub max_steps: u32,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_sync_interval: u64,
    pub lr: f64,
    pub gamma: f64,
    pub n_imaginary: usize,
    pub alpha: f64,
    pub beta: f64,
    pub use_nse: bool,
    pub use_emp: bool,
    pub seeds: Vec<u64>,
    pub neuron_mode: NeuronKind,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub epsilon: Option<EpsilonSection>,
    pub lif: LifSection,
    pub imagination: ImaginationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            layout: t.layout,
            episodes: t.episodes,
            max_steps: t.max_steps,
            batch_size: t.batch_size,
            buffer_capacity: t.buffer_capacity,
            target_sync_interval: t.target_sync_interval,
            lr: t.lr,
            gamma: t.gamma,
            n_imaginary: t.n_imaginary,
            alpha: t.weights.alpha,
            beta: t.weights.beta,
            use_nse: t.use_nse,
            use_emp: t.use_emp,
            seeds: (0..6).collect(),
            neuron_mode: NeuronKind::Relu,
            output_dir: PathBuf::from("runs"),
            workers: 1,
            epsilon: None,
            lif: LifSection::default(),
            imagination: ImaginationSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must list at least one seed".into()));
        }
        for seed in &self.seeds {
            self.train_config(*seed)?.validate()?;
        }
        Ok(())
    }

    pub fn neuron_mode(&self) -> NeuronMode {
        match self.neuron_mode {
            NeuronKind::Relu => NeuronMode::Relu,
            NeuronKind::Lif => NeuronMode::Lif(LifParams {
                tau: self.lif.tau,
                v_rest: self.lif.v_rest,
                v_threshold: self.lif.v_threshold,
                reset_mode: match self.lif.reset {
                    ResetKind::Soft => ResetMode::SoftSubtract,
                    ResetKind::Hard => ResetMode::HardToRest,
                },
                timesteps: self.lif.timesteps,
                surrogate_width: self.lif.surrogate_width,
            }),
        }
    }

    pub fn epsilon_schedule(&self) -> EpsilonSchedule {
        let base = EpsilonSchedule::new(self.episodes);
        match &self.epsilon {
            None => base,
            Some(e) => EpsilonSchedule {
                start: e.start,
                end: e.end,
                warm_episodes: e.warm_episodes.unwrap_or(base.warm_episodes),
                final_episodes: e.final_episodes.unwrap_or(base.final_episodes),
                total_episodes: self.episodes,
            },
        }
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            layout: self.layout.clone(),
            episodes: self.episodes,
            max_steps: self.max_steps,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            target_sync_interval: self.target_sync_interval,
            lr: self.lr,
            gamma: self.gamma,
            n_imaginary: self.n_imaginary,
            weights: IntrinsicWeights::new(self.alpha, self.beta)?,
            use_nse: self.use_nse,
            use_emp: self.use_emp,
            seed,
            neuron_mode: self.neuron_mode(),
            epsilon: self.epsilon_schedule(),
            imagination: ImaginationSettings {
                scope: self.imagination.scope,
                empathy: self.imagination.empathy,
                value_scale: self.imagination.value_scale,
                penalize_goal_step: self.imagination.penalize_goal_step,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
