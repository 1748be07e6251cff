//! ε-greedy deep Q-learning on the composite reward, with experience replay
//! and a periodically synchronized target network.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smashvat_neural::network::{ParamSet, N_OUTPUTS};
use smashvat_neural::{Adam, Network, NeuronMode, Tape};

use crate::error::{Error, Result};
use crate::gridworld::{self, Action, EnvState, EpisodeStats, GridLayout, Observation, OBS_LEN};
use crate::imagination::{self, splitmix64, EmpathyMode, Imagination, IntrinsicWeights, KeyScope};
use crate::layouts;

/// Exploration rate per episode: `start` through `warm_episodes`, then a
/// straight line down to `end` at episode `total_episodes − final_episodes`,
/// then `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub warm_episodes: u32,
    pub final_episodes: u32,
    pub total_episodes: u32,
}

impl EpsilonSchedule {
    /// 1.0 → 0.01 with warm and final plateaus of 5% of the run each
    /// (500 episodes of a 10000-episode run).
    pub fn new(total_episodes: u32) -> Self {
        let edge = total_episodes / 20;
        EpsilonSchedule {
            start: 1.0,
            end: 0.01,
            warm_episodes: edge,
            final_episodes: edge,
            total_episodes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.end)
            && (self.end..=1.0).contains(&self.start)
            && self.total_episodes >= 1
            && self.warm_episodes as u64 + self.final_episodes as u64 <= self.total_episodes as u64;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid epsilon schedule {self:?}")))
        }
    }

    /// `episode` counts from 1.
    pub fn epsilon_at(&self, episode: u32) -> Result<f64> {
        if episode == 0 || episode > self.total_episodes {
            return Err(Error::Usage(format!(
                "episode {episode} outside 1..={}",
                self.total_episodes
            )));
        }
        let decay_end = self.total_episodes - self.final_episodes;
        Ok(if episode <= self.warm_episodes {
            self.start
        } else if episode >= decay_end {
            self.end
        } else {
            let frac = (episode - self.warm_episodes) as f64 / (decay_end - self.warm_episodes) as f64;
            self.start - (self.start - self.end) * frac
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: Action,
    pub r_total: f64,
    pub next_obs: Observation,
    pub done: bool,
    pub r_env: f64,
    pub nse: f64,
    pub emp: f64,
}

/// Fixed-capacity FIFO of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts `t`, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `batch` distinct transitions drawn uniformly.
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if batch > self.items.len() {
            return Err(Error::Usage(format!(
                "cannot sample {batch} transitions from {}",
                self.items.len()
            )));
        }
        Ok(index::sample(rng, self.items.len(), batch)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub layout: String,
    pub episodes: u32,
    pub max_steps: u32,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_sync_interval: u64,
    pub lr: f64,
    pub gamma: f64,
    pub n_imaginary: usize,
    pub weights: IntrinsicWeights,
    pub use_nse: bool,
    pub use_emp: bool,
    pub seed: u64,
    pub neuron_mode: NeuronMode,
    pub epsilon: EpsilonSchedule,
    pub imagination: ImaginationSettings,
}

/// How the ensemble keys states and feeds the composite reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImaginationSettings {
    pub scope: KeyScope,
    pub empathy: EmpathyMode,
    /// Multiplier on ensemble value differences; `None` means `1 − γ`.
    pub value_scale: Option<f64>,
    pub penalize_goal_step: bool,
}

impl Default for ImaginationSettings {
    fn default() -> Self {
        ImaginationSettings {
            scope: KeyScope::default(),
            empathy: EmpathyMode::default(),
            value_scale: None,
            penalize_goal_step: false,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layout: "BasicHumanVatGoalEnv".into(),
            episodes: 10_000,
            max_steps: gridworld::DEFAULT_MAX_STEPS,
            batch_size: 100,
            buffer_capacity: 100_000,
            target_sync_interval: 1000,
            lr: 1e-4,
            gamma: 0.99,
            n_imaginary: 30,
            weights: IntrinsicWeights::default(),
            use_nse: true,
            use_emp: true,
            seed: 0,
            neuron_mode: NeuronMode::Relu,
            epsilon: EpsilonSchedule::new(10_000),
            imagination: ImaginationSettings::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.episodes > 0
            && self.max_steps > 0
            && self.batch_size > 0
            && self.buffer_capacity >= self.batch_size
            && self.target_sync_interval > 0
            && self.lr > 0.0
            && self.lr.is_finite()
            && self.n_imaginary > 0;
        if !positive {
            return Err(Error::Config(
                "episodes, max_steps, batch_size, target_sync_interval, lr and n_imaginary must be positive, \
                 and buffer_capacity at least batch_size"
                    .into(),
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if self.epsilon.total_episodes != self.episodes {
            return Err(Error::Config(format!(
                "epsilon schedule covers {} episodes but the run has {}",
                self.epsilon.total_episodes, self.episodes
            )));
        }
        self.epsilon.validate()?;
        self.weights.validate()?;
        if let Some(v) = self.imagination.value_scale {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("value_scale must be positive, got {v}")));
            }
        }
        self.neuron_mode.validate()?;
        Ok(())
    }
}

/// One row of the per-episode training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub episode: u32,
    /// Undiscounted sum of environment rewards.
    pub env_return: f64,
    pub steps: u32,
    pub reached_goal: bool,
    pub vat_remain_rate: Option<f64>,
    pub rescue_rate: Option<f64>,
    pub epsilon: f64,
    /// Mean optimization loss over the episode; `None` before the first
    /// optimization step.
    pub loss_mean: Option<f64>,
}

/// ε-greedy choice; greedy ties go to the lowest action index.
pub fn select_action<R: Rng>(
    net: &Network<f32>,
    obs: &Observation,
    epsilon: f64,
    rng: &mut R,
) -> Result<Action> {
    if rng.gen::<f64>() < epsilon {
        let i = rng.gen_range(0..Action::COUNT);
        return Ok(Action::ALL[i]);
    }
    let q = net.forward(obs.as_slice(), 1)?;
    Ok(Action::ALL[argmax(&q)])
}

pub(crate) fn argmax(q: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

type ObsKey = [u8; OBS_LEN];

fn obs_key(obs: &Observation) -> ObsKey {
    let mut k = [0u8; OBS_LEN];
    for (b, &v) in k.iter_mut().zip(obs.as_slice()) {
        *b = v as u8;
    }
    k
}

/// Applies mean-squared Bellman-error steps to a policy network.
///
/// Identical observations within a batch share one forward/backward
/// evaluation with their upstream gradients summed, and target-network
/// values are memoized until [`Optimizer::sync_target`]; both are exact
/// regroupings of the per-sample computation.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub gamma: f64,
    adam: Adam<f32>,
    tape: Tape<f32>,
    grads: ParamSet<f32>,
    target_values: HashMap<ObsKey, [f32; N_OUTPUTS]>,
}

impl Optimizer {
    pub fn new(lr: f64, gamma: f64) -> Self {
        Optimizer {
            gamma,
            adam: Adam::new(lr),
            tape: Tape::new(),
            grads: ParamSet::zeros(),
            target_values: HashMap::new(),
        }
    }

    /// Copies `policy` into `target` and forgets memoized target values.
    pub fn sync_target(&mut self, policy: &Network<f32>, target: &mut Network<f32>) {
        *target = policy.copy_params();
        self.target_values.clear();
    }

    /// One optimizer update on `batch`; returns the loss before the update.
    pub fn step(&mut self, policy: &mut Network<f32>, target: &Network<f32>, batch: &[&Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Usage("empty batch".into()));
        }
        let b = batch.len();

        let missing: Vec<ObsKey> = {
            let mut seen = Vec::new();
            for t in batch.iter().filter(|t| !t.done) {
                let k = obs_key(&t.next_obs);
                if !self.target_values.contains_key(&k) && !seen.contains(&k) {
                    seen.push(k);
                }
            }
            seen
        };
        if !missing.is_empty() {
            let input: Vec<f32> = missing.iter().flat_map(|k| k.iter().map(|&v| v as f32)).collect();
            let q = target.forward(&input, missing.len())?;
            for (k, row) in missing.into_iter().zip(q.chunks_exact(N_OUTPUTS)) {
                let mut v = [0.0; N_OUTPUTS];
                v.copy_from_slice(row);
                self.target_values.insert(k, v);
            }
        }
        let targets: Vec<f64> = batch
            .iter()
            .map(|t| {
                if t.done {
                    t.r_total
                } else {
                    let q = &self.target_values[&obs_key(&t.next_obs)];
                    let best = q.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                    t.r_total + self.gamma * best as f64
                }
            })
            .collect();

        let mut slot: HashMap<ObsKey, usize> = HashMap::new();
        let mut input = Vec::with_capacity(b * OBS_LEN);
        let rows: Vec<usize> = batch
            .iter()
            .map(|t| {
                let k = obs_key(&t.obs);
                *slot.entry(k).or_insert_with(|| {
                    input.extend_from_slice(t.obs.as_slice());
                    input.len() / OBS_LEN - 1
                })
            })
            .collect();
        let unique = input.len() / OBS_LEN;
        let mut q = Vec::new();
        policy.forward_into(&input, unique, &mut self.tape, &mut q)?;

        let mut loss = 0.0;
        let mut upstream = vec![0.0f32; unique * N_OUTPUTS];
        for ((t, &row), &y) in batch.iter().zip(&rows).zip(&targets) {
            let cell = row * N_OUTPUTS + t.action.index();
            let delta = q[cell] as f64 - y;
            loss += delta * delta;
            upstream[cell] += (2.0 * delta / b as f64) as f32;
        }
        loss /= b as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("loss is {loss}")));
        }
        policy.backward_into(&mut self.tape, &upstream, &mut self.grads)?;
        self.adam.step(&mut policy.params, &self.grads)?;
        Ok(loss)
    }
}

/// Greedy (ε = 0) episode with the full state sequence.
#[derive(Debug, Clone)]
pub struct Rollout {
    /// Initial state followed by the state after each action.
    pub states: Vec<EnvState>,
    pub actions: Vec<Action>,
    pub stats: EpisodeStats,
}

pub fn greedy_rollout(policy: &Network<f32>, layout: &Arc<GridLayout>, max_steps: u32) -> Result<Rollout> {
    let mut state = gridworld::reset_with_max_steps(layout, max_steps);
    let mut states = vec![state.clone()];
    let mut actions = Vec::new();
    while !state.done {
        let q = policy.forward(gridworld::observe(&state).as_slice(), 1)?;
        let a = Action::ALL[argmax(&q)];
        state = gridworld::step(&state, a)?.next_state;
        actions.push(a);
        states.push(state.clone());
    }
    let stats = gridworld::episode_stats(&state, layout)?;
    Ok(Rollout { states, actions, stats })
}

/// Everything one training run owns.
#[derive(Debug, Clone)]
pub struct Learner {
    pub config: TrainConfig,
    pub layout: Arc<GridLayout>,
    pub policy: Network<f32>,
    pub target: Network<f32>,
    pub imagination: Imagination,
    pub buffer: ReplayBuffer,
    optimizer: Optimizer,
    act_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    optimize_steps: u64,
    episodes_done: u32,
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

impl Learner {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let layout = layouts::layout(&config.layout)?;
        let policy = Network::init(config.neuron_mode, derive_seed(config.seed, 1))?;
        let target = policy.copy_params();
        let mut imagination = Imagination::new(config.n_imaginary, derive_seed(config.seed, 2), config.gamma);
        let settings = config.imagination;
        imagination.scope = settings.scope;
        imagination.empathy = settings.empathy;
        imagination.value_scale = settings.value_scale.unwrap_or(1.0 - config.gamma);
        imagination.penalize_goal_step = settings.penalize_goal_step;
        Ok(Learner {
            layout,
            policy,
            target,
            imagination,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            optimizer: Optimizer::new(config.lr, config.gamma),
            act_rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 3)),
            replay_rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 4)),
            optimize_steps: 0,
            episodes_done: 0,
            config,
        })
    }

    pub fn optimize_steps(&self) -> u64 {
        self.optimize_steps
    }

    pub fn episodes_done(&self) -> u32 {
        self.episodes_done
    }

    pub fn is_finished(&self) -> bool {
        self.episodes_done >= self.config.episodes
    }

    /// Runs the next episode and returns its log row.
    pub fn run_episode(&mut self) -> Result<RunRecord> {
        if self.is_finished() {
            return Err(Error::Usage("all configured episodes have run".into()));
        }
        let episode = self.episodes_done + 1;
        let epsilon = self.config.epsilon.epsilon_at(episode)?;
        let mut state = gridworld::reset_with_max_steps(&self.layout, self.config.max_steps);
        let mut obs = gridworld::observe(&state);
        let mut env_return = 0.0;
        let (mut loss_sum, mut loss_n) = (0.0, 0u32);
        while !state.done {
            let action = select_action(&self.policy, &obs, epsilon, &mut self.act_rng)?;
            let res = gridworld::step(&state, action)?;
            self.imagination.update(&state, action, &res.next_state);
            let intr =
                self.imagination
                    .intrinsic(&state, action, &res.next_state, self.config.use_nse, self.config.use_emp)?;
            let r_total = imagination::r_total(res.r_env, intr.nse, intr.emp, self.config.weights)?;
            let next_obs = gridworld::observe(&res.next_state);
            self.buffer.push(Transition {
                obs,
                action,
                r_total,
                next_obs,
                done: res.terminal,
                r_env: res.r_env,
                nse: intr.nse,
                emp: intr.emp,
            });
            env_return += res.r_env;
            if self.buffer.len() >= self.config.batch_size {
                let batch = self.buffer.sample(self.config.batch_size, &mut self.replay_rng)?;
                let loss = self.optimizer.step(&mut self.policy, &self.target, &batch)?;
                loss_sum += loss;
                loss_n += 1;
                self.optimize_steps += 1;
                if self.optimize_steps % self.config.target_sync_interval == 0 {
                    self.optimizer.sync_target(&self.policy, &mut self.target);
                }
            }
            state = res.next_state;
            obs = next_obs;
        }
        self.episodes_done = episode;
        let stats = gridworld::episode_stats(&state, &self.layout)?;
        Ok(RunRecord {
            episode,
            env_return,
            steps: stats.steps,
            reached_goal: stats.reached_goal,
            vat_remain_rate: stats.vat_remain_rate,
            rescue_rate: stats.rescue_rate,
            epsilon,
            loss_mean: (loss_n > 0).then(|| loss_sum / loss_n as f64),
        })
    }

    pub fn greedy_rollout(&self) -> Result<Rollout> {
        greedy_rollout(&self.policy, &self.layout, self.config.max_steps)
    }
}

/// Result of a complete run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub records: Vec<RunRecord>,
    pub learner: Learner,
}

/// Runs every configured episode, handing each log row to `on_record`.
pub fn run_training_with(config: TrainConfig, mut on_record: impl FnMut(&RunRecord)) -> Result<TrainOutcome> {
    let mut learner = Learner::new(config)?;
    let mut records = Vec::with_capacity(learner.config.episodes as usize);
    while !learner.is_finished() {
        let rec = learner.run_episode()?;
        on_record(&rec);
        records.push(rec);
    }
    Ok(TrainOutcome { records, learner })
}

pub fn run_training(config: TrainConfig) -> Result<TrainOutcome> {
    run_training_with(config, |_| {})
}
