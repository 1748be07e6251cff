//! Safe and altruistic reinforcement learning in the Smash-Vat gridworld.
//!
//! * [`gridworld`]: the deterministic environment engine.
//! * [`imagination`]: the random-reward self-imagination ensemble and the
//!   side-effect penalty, empathy incentive and composite reward built on it.
//! * [`neuralcore`]: a from-scratch conv Q-network with ReLU or LIF neurons.
//! * [`learner`]: ε-greedy DQN with replay and a target network.
//! * [`experiments`]: configs, multi-seed orchestration, reports, oracle.

pub mod error;
pub mod experiments;
pub mod gridworld;
pub mod imagination;
pub mod layouts;
pub mod learner;

pub use error::{Error, Result};
pub use smashvat_neural as neuralcore;
