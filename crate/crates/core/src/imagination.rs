//! Self-imagination: an ensemble of value tables learned from real
//! transitions under independent random reward functions.
//!
//! Each imaginary environment `i` shares the real transition structure but
//! pays a pseudo-random reward `R_i(s, a) ∈ [0, 1)`. Its table `Q_i` is
//! raised with an optimistic max-backup on every real transition. Two
//! intrinsic signals are read off the ensemble:
//!
//! * the side-effect penalty, the mean drop of `Q_i(s, a)` below the
//!   inaction value `Q_i(s, Noop)`;
//! * the empathy incentive, the mean change in value of every human's
//!   perspective caused by the executed action relative to the
//!   stepwise-inaction baseline.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::gridworld::{self, Action, EnvState, N_CELLS};

const N_ACTIONS: usize = Action::COUNT;

/// Canonical byte encoding of a state as seen by the ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Box<[u8]>);

/// Which parts of a state enter the ensemble key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyScope {
    /// Cells and the position of the perspective holder. Other agents are
    /// left out so a perspective-swapped state maps onto the agent's own
    /// experience of standing there.
    #[default]
    SelfCentric,
    /// Cells, agent, and every human as `(row, col, trapped)`.
    Full,
}

impl StateKey {
    pub fn from_bytes(bytes: &[u8]) -> Self {
        StateKey(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn of(state: &EnvState, scope: KeyScope) -> Self {
        let mut bytes = Vec::with_capacity(4 + N_CELLS + 3 + 3 * state.humans.len());
        bytes.push(N_CELLS as u8);
        bytes.extend(state.cells.iter().map(|c| c.code()));
        bytes.push(2);
        bytes.push(state.agent_pos.row);
        bytes.push(state.agent_pos.col);
        if scope == KeyScope::Full {
            let mut humans: Vec<_> = state
                .humans
                .iter()
                .map(|h| (h.pos.row, h.pos.col, h.trapped as u8))
                .collect();
            humans.sort_unstable();
            bytes.push(humans.len() as u8);
            for (r, c, t) in humans {
                bytes.extend([r, c, t]);
            }
        }
        StateKey(bytes.into())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The `n` random reward functions, defined implicitly by a keyed hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewardEnsemble {
    pub n: usize,
    pub master_seed: u64,
}

impl RewardEnsemble {
    pub fn new(n: usize, master_seed: u64) -> Self {
        assert!(n > 0, "ensemble needs at least one member");
        RewardEnsemble { n, master_seed }
    }

    fn key_hash(&self, key: &StateKey) -> u64 {
        let mut h = FNV_OFFSET ^ splitmix64(self.master_seed);
        for &b in key.as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        splitmix64(h)
    }

    fn reward_from_hash(key_hash: u64, i: usize, a: usize) -> f64 {
        let x = splitmix64(
            key_hash
                ^ ((i as u64 + 1).wrapping_mul(0xd6e8_feb8_6659_fd93))
                ^ ((a as u64 + 1).wrapping_mul(0xa076_1d64_78bd_642f)),
        );
        (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `R_i(s, a)`, uniform on `[0, 1)` with 53-bit resolution.
    pub fn sample_reward(&self, i: usize, key: &StateKey, a: Action) -> Result<f64> {
        if i >= self.n {
            return Err(Error::Usage(format!(
                "reward index {i} out of range (n = {})",
                self.n
            )));
        }
        Ok(Self::reward_from_hash(self.key_hash(key), i, a.index()))
    }
}

/// `n` tabular Q-functions. Unseen entries read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QEnsemble {
    rewards: RewardEnsemble,
    gamma: f64,
    // one row of n * 6 values per key, member-major
    tables: HashMap<StateKey, Box<[f64]>>,
}

impl QEnsemble {
    pub fn new(n: usize, master_seed: u64, gamma: f64) -> Self {
        assert!((0.0..1.0).contains(&gamma), "gamma must lie in [0, 1)");
        QEnsemble {
            rewards: RewardEnsemble::new(n, master_seed),
            gamma,
            tables: HashMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.rewards.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rewards(&self) -> &RewardEnsemble {
        &self.rewards
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn row(&self, key: &StateKey) -> Option<&[f64]> {
        self.tables.get(key).map(|r| &r[..])
    }

    pub fn q(&self, i: usize, key: &StateKey, a: Action) -> f64 {
        self.row(key)
            .map_or(0.0, |r| r[i * N_ACTIONS + a.index()])
    }

    /// `max_a Q_i(key, a)`.
    pub fn value(&self, i: usize, key: &StateKey) -> f64 {
        self.row(key).map_or(0.0, |r| max6(&r[i * N_ACTIONS..(i + 1) * N_ACTIONS]))
    }

    /// Optimistic backup of every member on one real transition:
    /// `Q_i(s,a) ← max(Q_i(s,a), R_i(s,a) + γ max_a' Q_i(s',a'))`.
    pub fn update(&mut self, s: &StateKey, a: Action, s_next: &StateKey) {
        let n = self.n();
        let next_values: Vec<f64> = (0..n).map(|i| self.value(i, s_next)).collect();
        let kh = self.rewards.key_hash(s);
        let gamma = self.gamma;
        let row = self
            .tables
            .entry(s.clone())
            .or_insert_with(|| vec![0.0; n * N_ACTIONS].into_boxed_slice());
        for (i, v_next) in next_values.into_iter().enumerate() {
            let r = RewardEnsemble::reward_from_hash(kh, i, a.index());
            let slot = &mut row[i * N_ACTIONS + a.index()];
            let candidate = r + gamma * v_next;
            if candidate > *slot {
                *slot = candidate;
            }
        }
    }

    /// Mean over members of `|min(0, Q_i(s,a) − Q_i(s,Noop))|`.
    pub fn r_nse(&self, s: &StateKey, a: Action) -> f64 {
        if a == Action::Noop {
            return 0.0;
        }
        let Some(row) = self.row(s) else {
            return 0.0;
        };
        let n = self.n();
        let total: f64 = (0..n)
            .map(|i| {
                let base = i * N_ACTIONS;
                (row[base + a.index()] - row[base + Action::Noop.index()]).min(0.0)
            })
            .map(f64::abs)
            .sum();
        total / n as f64
    }

    /// Mean over members of `max_a Q_i(a) − max_a Q_i(b)`.
    pub fn mean_value_gap(&self, a: &StateKey, b: &StateKey) -> f64 {
        if a == b {
            return 0.0;
        }
        let n = self.n();
        let total: f64 = (0..n).map(|i| self.value(i, a) - self.value(i, b)).sum();
        total / n as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, &[f64])> {
        self.tables.iter().map(|(k, v)| (k, &v[..]))
    }

    const MAGIC: &'static [u8; 4] = b"SVQE";
    const VERSION: u32 = 1;

    /// Versioned little-endian dump. Entries are written in key order so
    /// identical tables produce identical bytes.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&self.rewards.master_seed.to_le_bytes())?;
        w.write_all(&(self.n() as u32).to_le_bytes())?;
        w.write_all(&self.gamma.to_le_bytes())?;
        w.write_all(&(self.tables.len() as u64).to_le_bytes())?;
        let mut keys: Vec<&StateKey> = self.tables.keys().collect();
        keys.sort();
        for k in keys {
            w.write_all(&(k.0.len() as u16).to_le_bytes())?;
            w.write_all(&k.0)?;
            for v in self.tables[k].iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Checkpoint("not an ensemble checkpoint".into()));
        }
        let version = read_u32(&mut r)?;
        if version != Self::VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported ensemble version {version}"
            )));
        }
        let seed = read_u64(&mut r)?;
        let n = read_u32(&mut r)? as usize;
        let gamma = f64::from_bits(read_u64(&mut r)?);
        if n == 0 || !(0.0..1.0).contains(&gamma) {
            return Err(Error::Checkpoint("corrupt ensemble header".into()));
        }
        let count = read_u64(&mut r)? as usize;
        let mut ens = QEnsemble::new(n, seed, gamma);
        ens.tables.reserve(count);
        for _ in 0..count {
            let mut len = [0u8; 2];
            r.read_exact(&mut len)?;
            let mut key = vec![0u8; u16::from_le_bytes(len) as usize];
            r.read_exact(&mut key)?;
            let mut row = vec![0.0; n * N_ACTIONS];
            for v in row.iter_mut() {
                *v = f64::from_bits(read_u64(&mut r)?);
            }
            ens.tables.insert(StateKey(key.into()), row.into_boxed_slice());
        }
        Ok(ens)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn max6(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// How the empathy term compares outcomes for the other agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpathyMode {
    /// Value of each human's perspective after the executed action minus
    /// its value after `Noop` from the same state.
    #[default]
    InactionBaseline,
    /// `Q_i(s_other, a) − Q_i(s_other, Noop)` at the current swapped state.
    ActionAtSwapped,
}

/// Gated, scaled intrinsic terms of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Intrinsic {
    pub nse: f64,
    pub emp: f64,
}

/// The ensemble together with the way states are keyed and compared.
///
/// `value_scale` converts ensemble values (discounted sums, up to
/// `1/(1−γ)`) into per-step reward units before they enter the composite
/// reward; it defaults to `1 − γ`. With `penalize_goal_step` false the
/// transition that reaches the goal carries no side-effect penalty: the
/// goal ends the episode, so its ensemble values never grow and every
/// goal-reaching move would otherwise look like a total loss of
/// attainable utility.
#[derive(Debug, Clone, PartialEq)]
pub struct Imagination {
    pub ensemble: QEnsemble,
    pub scope: KeyScope,
    pub empathy: EmpathyMode,
    pub value_scale: f64,
    pub penalize_goal_step: bool,
}

impl Imagination {
    pub fn new(n: usize, master_seed: u64, gamma: f64) -> Self {
        Imagination {
            ensemble: QEnsemble::new(n, master_seed, gamma),
            scope: KeyScope::default(),
            empathy: EmpathyMode::default(),
            value_scale: 1.0 - gamma,
            penalize_goal_step: false,
        }
    }

    /// The terms that enter the composite reward for `state --action--> next`.
    /// Disabled terms are exactly zero.
    pub fn intrinsic(
        &self,
        state: &EnvState,
        action: Action,
        next: &EnvState,
        use_nse: bool,
        use_emp: bool,
    ) -> Result<Intrinsic> {
        let nse = if use_nse && (self.penalize_goal_step || !next.reached_goal()) {
            self.value_scale * self.r_nse(state, action)
        } else {
            0.0
        };
        let emp = if use_emp {
            self.value_scale * self.r_emp(state, action, next)?
        } else {
            0.0
        };
        Ok(Intrinsic { nse, emp })
    }

    pub fn key(&self, state: &EnvState) -> StateKey {
        StateKey::of(state, self.scope)
    }

    /// Feeds one real transition to every member.
    pub fn update(&mut self, state: &EnvState, action: Action, next: &EnvState) {
        let (s, s2) = (self.key(state), self.key(next));
        self.ensemble.update(&s, action, &s2);
    }

    pub fn r_nse(&self, state: &EnvState, action: Action) -> f64 {
        self.ensemble.r_nse(&self.key(state), action)
    }

    /// Empathy incentive for `state --action--> next`, summed over humans.
    /// Zero when the layout has no humans.
    pub fn r_emp(&self, state: &EnvState, action: Action, next: &EnvState) -> Result<f64> {
        if state.humans.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        match self.empathy {
            EmpathyMode::InactionBaseline => {
                let baseline = gridworld::simulate_inaction(state)?;
                for h in 0..state.humans.len() {
                    let after = self.key(&gridworld::perspective_swap(next, h)?);
                    let base = self.key(&gridworld::perspective_swap(&baseline, h)?);
                    total += self.ensemble.mean_value_gap(&after, &base);
                }
            }
            EmpathyMode::ActionAtSwapped => {
                if action == Action::Noop {
                    return Ok(0.0);
                }
                let n = self.ensemble.n();
                for h in 0..state.humans.len() {
                    let k = self.key(&gridworld::perspective_swap(state, h)?);
                    let sum: f64 = (0..n)
                        .map(|i| {
                            self.ensemble.q(i, &k, action) - self.ensemble.q(i, &k, Action::Noop)
                        })
                        .sum();
                    total += sum / n as f64;
                }
            }
        }
        Ok(total)
    }
}

/// Weights of the side-effect penalty and the empathy incentive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntrinsicWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl IntrinsicWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = IntrinsicWeights { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha.is_finite()
            && self.beta.is_finite()
            && self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.beta > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "intrinsic weights need alpha, beta >= 0 and alpha + beta > 0 (got {}, {})",
                self.alpha, self.beta
            )))
        }
    }
}

impl Default for IntrinsicWeights {
    fn default() -> Self {
        IntrinsicWeights {
            alpha: 10.0,
            beta: 10.0,
        }
    }
}

/// `(r_env − α·nse + β·emp) / ((α + β) / 2)`.
pub fn r_total(r_env: f64, nse: f64, emp: f64, w: IntrinsicWeights) -> Result<f64> {
    w.validate()?;
    Ok((r_env - w.alpha * nse + w.beta * emp) / ((w.alpha + w.beta) / 2.0))
}
