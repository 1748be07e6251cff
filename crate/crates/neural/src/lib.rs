//! Numeric core for the Q-network: a fixed conv/fc stack evaluated either
//! with ReLU units or with leaky integrate-and-fire neurons, exact
//! reverse-mode gradients (surrogate gradients for spikes), and Adam.
//!
//! Everything is generic over [`Scalar`] so the same code runs in `f32` for
//! training and in `f64` for finite-difference checks.

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod lif;
pub mod network;
pub mod scalar;

pub use adam::Adam;
pub use error::{NeuralError, Result};
pub use lif::{LifParams, ResetMode};
pub use network::{GradientBundle, Network, NetworkParams, NeuronMode, Tape};
pub use scalar::Scalar;
