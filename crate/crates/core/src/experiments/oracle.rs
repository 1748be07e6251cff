//! Exact solution of a layout's deterministic MDP by enumeration and value
//! iteration. Used to check the environment and the learned policies.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gridworld::{self, Action, EnvState, GridLayout};
use crate::imagination::{r_total, Imagination, IntrinsicWeights, KeyScope, StateKey};

pub const DEFAULT_STATE_LIMIT: usize = 1_000_000;

/// Reward the oracle optimizes.
#[derive(Clone, Copy)]
pub enum RewardSpec<'a> {
    EnvOnly,
    /// Composite reward with intrinsic terms read from a frozen ensemble.
    Composite {
        imagination: &'a Imagination,
        weights: IntrinsicWeights,
        use_nse: bool,
        use_emp: bool,
    },
}

/// Reachable states of a layout with their transitions.
#[derive(Debug, Clone)]
pub struct StateGraph {
    pub states: Vec<EnvState>,
    /// `next[s][a]`: successor index, or `None` when the action ends the
    /// episode at the goal.
    pub next: Vec<[Option<usize>; Action::COUNT]>,
    pub r_env: Vec<[f64; Action::COUNT]>,
}

impl StateGraph {
    pub fn index_of(&self, state: &EnvState) -> Option<usize> {
        let k = canonical_key(state);
        self.states.iter().position(|s| canonical_key(s) == k)
    }
}

fn canonical(state: &EnvState) -> EnvState {
    let mut s = state.clone();
    s.step_count = 0;
    s.done = false;
    s.just_smashed = false;
    // keep the clock from ever expiring while enumerating
    s.max_steps = u32::MAX;
    s
}

fn canonical_key(state: &EnvState) -> StateKey {
    StateKey::of(state, KeyScope::Full)
}

/// Breadth-first enumeration of every state reachable from the reset state,
/// ignoring the step limit.
pub fn enumerate(layout: &Arc<GridLayout>, limit: usize) -> Result<StateGraph> {
    let start = canonical(&gridworld::reset(layout));
    let mut index: HashMap<StateKey, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    index.insert(canonical_key(&start), 0);
    let mut next = Vec::new();
    let mut r_env = Vec::new();
    let mut head = 0;
    while head < states.len() {
        let s = states[head].clone();
        let mut row = [None; Action::COUNT];
        let mut rew = [0.0; Action::COUNT];
        for a in Action::ALL {
            let res = gridworld::step(&s, a)?;
            rew[a.index()] = res.r_env;
            if res.next_state.reached_goal() {
                continue;
            }
            let n = canonical(&res.next_state);
            let k = canonical_key(&n);
            let idx = match index.get(&k) {
                Some(&i) => i,
                None => {
                    if states.len() >= limit {
                        return Err(Error::StateSpaceOverflow { limit });
                    }
                    states.push(n);
                    index.insert(k, states.len() - 1);
                    states.len() - 1
                }
            };
            row[a.index()] = Some(idx);
        }
        next.push(row);
        r_env.push(rew);
        head += 1;
    }
    Ok(StateGraph { states, next, r_env })
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub graph: StateGraph,
    pub q: Vec<[f64; Action::COUNT]>,
    pub values: Vec<f64>,
    /// Greedy action per state, ties broken by lowest action index.
    pub policy: Vec<Action>,
    pub residual: f64,
    pub iterations: usize,
}

impl OracleSolution {
    pub fn start_value(&self) -> f64 {
        self.values[0]
    }

    /// Follows the greedy policy from the reset state for at most
    /// `max_steps` steps.
    pub fn rollout(&self, layout: &Arc<GridLayout>, max_steps: u32) -> Result<(Vec<Action>, EnvState)> {
        let mut state = gridworld::reset_with_max_steps(layout, max_steps);
        let mut actions = Vec::new();
        while !state.done {
            let idx = self
                .graph
                .index_of(&state)
                .ok_or_else(|| Error::Usage("rollout left the enumerated graph".into()))?;
            let a = self.policy[idx];
            actions.push(a);
            state = gridworld::step(&state, a)?.next_state;
        }
        Ok((actions, state))
    }
}

fn rewards_for(graph: &StateGraph, spec: RewardSpec<'_>) -> Result<Vec<[f64; Action::COUNT]>> {
    match spec {
        RewardSpec::EnvOnly => Ok(graph.r_env.clone()),
        RewardSpec::Composite {
            imagination,
            weights,
            use_nse,
            use_emp,
        } => {
            let mut out = Vec::with_capacity(graph.states.len());
            for (s, r_env) in graph.states.iter().zip(&graph.r_env) {
                let mut row = [0.0; Action::COUNT];
                for a in Action::ALL {
                    let next = gridworld::step(s, a)?.next_state;
                    let t = imagination.intrinsic(s, a, &next, use_nse, use_emp)?;
                    row[a.index()] = r_total(r_env[a.index()], t.nse, t.emp, weights)?;
                }
                out.push(row);
            }
            Ok(out)
        }
    }
}

/// Value iteration to a sup-norm residual below `tol`.
pub fn solve(graph: StateGraph, spec: RewardSpec<'_>, gamma: f64, tol: f64) -> Result<OracleSolution> {
    let rewards = rewards_for(&graph, spec)?;
    let n = graph.states.len();
    let mut values = vec![0.0f64; n];
    let mut q = vec![[0.0f64; Action::COUNT]; n];
    let mut iterations = 0;
    let residual = loop {
        iterations += 1;
        let mut delta: f64 = 0.0;
        let mut new_values = vec![0.0f64; n];
        for s in 0..n {
            for a in 0..Action::COUNT {
                let cont = graph.next[s][a].map_or(0.0, |t| values[t]);
                q[s][a] = rewards[s][a] + gamma * cont;
            }
            new_values[s] = q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((new_values[s] - values[s]).abs());
        }
        values = new_values;
        if delta < tol || iterations >= 1_000_000 {
            break delta;
        }
    };
    let policy = q
        .iter()
        .map(|row| {
            let mut best = 0;
            for a in 1..Action::COUNT {
                if row[a] > row[best] {
                    best = a;
                }
            }
            Action::ALL[best]
        })
        .collect();
    Ok(OracleSolution {
        graph,
        q,
        values,
        policy,
        residual,
        iterations,
    })
}

pub fn solve_layout(layout: &Arc<GridLayout>, spec: RewardSpec<'_>, gamma: f64) -> Result<OracleSolution> {
    let graph = enumerate(layout, DEFAULT_STATE_LIMIT)?;
    solve(graph, spec, gamma, 1e-10)
}
