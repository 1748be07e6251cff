//! Hand-built deterministic MDPs and an independent value-iteration oracle
//! for the ensemble update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smashvat::gridworld::Action;
use smashvat::imagination::{QEnsemble, StateKey};

pub const GAMMA: f64 = 0.99;
pub const N: usize = 30;

/// Deterministic MDP: `next[s][a]` is the successor of `(s, a)`, `None`
/// marks a state with no outgoing transitions (its values stay 0).
pub struct Mdp {
    pub next: Vec<Option<[usize; 6]>>,
}

pub fn key(s: usize) -> StateKey {
    StateKey::from_bytes(&(s as u32).to_le_bytes())
}

pub fn chain(len: usize) -> Mdp {
    let next = (0..len)
        .map(|s| {
            if s + 1 == len {
                None
            } else {
                let left = s.saturating_sub(1);
                Some([s, s, left, s + 1, s, s])
            }
        })
        .collect();
    Mdp { next }
}

pub fn random_graph(len: usize, seed: u64) -> Mdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let next = (0..len)
        .map(|_| {
            let mut row = [0; 6];
            for slot in row.iter_mut() {
                *slot = rng.gen_range(0..len);
            }
            Some(row)
        })
        .collect();
    Mdp { next }
}

/// A ring of `len` states with a one-way trap: action `Smash` from any
/// state drops into a sink whose only move loops on itself.
pub fn ring_with_sink(len: usize) -> Mdp {
    let sink = len;
    let mut next: Vec<Option<[usize; 6]>> = (0..len)
        .map(|s| Some([(s + 1) % len, (s + len - 1) % len, s, s, sink, s]))
        .collect();
    next.push(Some([sink; 6]));
    Mdp { next }
}

/// Repeats exhaustive passes of the ensemble update until nothing moves.
pub fn sweep_to_fixed_point(mdp: &Mdp, seed: u64) -> QEnsemble {
    let mut q = QEnsemble::new(N, seed, GAMMA);
    for _ in 0..20_000 {
        let before = q.clone();
        for (s, row) in mdp.next.iter().enumerate() {
            if let Some(row) = row {
                for a in Action::ALL {
                    q.update(&key(s), a, &key(row[a.index()]));
                }
            }
        }
        if q == before {
            return q;
        }
    }
    panic!("sweeps did not reach a fixed point");
}

/// Jacobi value iteration on the same rewards, kept separate from the
/// ensemble code.
pub fn oracle(mdp: &Mdp, q: &QEnsemble, i: usize) -> Vec<[f64; 6]> {
    let n = mdp.next.len();
    let mut table = vec![[0.0f64; 6]; n];
    for _ in 0..100_000 {
        let v: Vec<f64> = table.iter().map(|r| r.iter().copied().fold(f64::MIN, f64::max)).collect();
        let mut delta = 0.0f64;
        let mut fresh = vec![[0.0f64; 6]; n];
        for (s, row) in mdp.next.iter().enumerate() {
            if let Some(row) = row {
                for a in Action::ALL {
                    let r = q.rewards().sample_reward(i, &key(s), a).unwrap();
                    let target = r + GAMMA * v[row[a.index()]];
                    delta = delta.max((target - table[s][a.index()]).abs());
                    fresh[s][a.index()] = target;
                }
            }
        }
        table = fresh;
        if delta < 1e-13 {
            break;
        }
    }
    table
}

pub fn check_against_oracle(mdp: &Mdp, seed: u64) -> f64 {
    assert!(mdp.next.len() <= 50);
    let q = sweep_to_fixed_point(mdp, seed);
    let mut worst = 0.0f64;
    for i in 0..N {
        let want = oracle(mdp, &q, i);
        for (s, row) in want.iter().enumerate() {
            for a in Action::ALL {
                worst = worst.max((q.q(i, &key(s), a) - row[a.index()]).abs());
            }
        }
    }
    worst
}

