//! Leaky integrate-and-fire neurons with a piecewise-quadratic surrogate
//! for the spike derivative.
//!
//! Discretized membrane update (unit resistance, unit time step):
//! `u[t] = v[t−1] + (−(v[t−1] − u_rest) + I[t]) / τ`, spike
//! `s[t] = 1{u[t] ≥ θ}`, then reset to `v[t]`.

use crate::error::{NeuralError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetMode {
    /// Subtract the threshold from the membrane after a spike.
    SoftSubtract,
    /// Set the membrane back to `v_rest` after a spike.
    HardToRest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    pub tau: f64,
    pub v_rest: f64,
    pub v_threshold: f64,
    pub reset_mode: ResetMode,
    pub timesteps: usize,
    pub surrogate_width: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams {
            tau: 2.0,
            v_rest: 0.0,
            v_threshold: 0.5,
            reset_mode: ResetMode::SoftSubtract,
            timesteps: 4,
            surrogate_width: 2.0,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NeuralError::Config(m.to_string()));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive and finite");
        }
        if self.timesteps == 0 {
            return bad("timesteps must be at least 1");
        }
        if !(self.surrogate_width > 0.0 && self.surrogate_width.is_finite()) {
            return bad("surrogate_width must be positive and finite");
        }
        if !self.v_rest.is_finite() || self.v_threshold.is_nan() {
            return bad("v_rest must be finite and v_threshold a number");
        }
        Ok(())
    }
}

/// Smooth stand-in for the Heaviside step, centred on 0.
pub fn surrogate(x: f64, alpha: f64) -> f64 {
    if x < -1.0 / alpha {
        0.0
    } else if x > 1.0 / alpha {
        1.0
    } else {
        -0.5 * alpha * alpha * x.abs() * x + alpha * x + 0.5
    }
}

/// Derivative of [`surrogate`]: `α − α²|x|` inside the window, else 0.
pub fn surrogate_grad(x: f64, alpha: f64) -> f64 {
    if x.abs() <= 1.0 / alpha {
        alpha - alpha * alpha * x.abs()
    } else {
        0.0
    }
}

/// Runs a population of `c·m` neurons for `steps` time steps.
///
/// `current` is laid out `[c][t][m]`, or `[c][m]` when `constant` (the same
/// current at every step). Fills spikes and the pre-reset membrane values,
/// both `[c][t][m]`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn forward<T: Scalar>(
    p: &LifParams,
    current: &[T],
    c: usize,
    m: usize,
    steps: usize,
    constant: bool,
    spikes: &mut Vec<T>,
    membrane: &mut Vec<T>,
) {
    let len = c * steps * m;
    spikes.clear();
    spikes.resize(len, T::zero());
    membrane.clear();
    membrane.resize(len, T::zero());
    let inv_tau = T::of(1.0 / p.tau);
    let rest = T::of(p.v_rest);
    let th = T::of(p.v_threshold);
    let mut v = vec![rest; m];
    for ch in 0..c {
        v.iter_mut().for_each(|x| *x = rest);
        for t in 0..steps {
            let base = (ch * steps + t) * m;
            let ibase = if constant { ch * m } else { base };
            let input = &current[ibase..][..m];
            let u_out = &mut membrane[base..][..m];
            let s_out = &mut spikes[base..][..m];
            for j in 0..m {
                let u = v[j] + (rest - v[j] + input[j]) * inv_tau;
                u_out[j] = u;
                if u >= th {
                    s_out[j] = T::one();
                    v[j] = match p.reset_mode {
                        ResetMode::SoftSubtract => u - th,
                        ResetMode::HardToRest => rest,
                    };
                } else {
                    v[j] = u;
                }
            }
        }
    }
}

/// Backpropagation through time for [`forward`]. `d_spikes` and
/// `d_current` are `[c][t][m]`; the spike derivative is replaced by
/// [`surrogate_grad`].
pub(crate) fn backward<T: Scalar>(
    p: &LifParams,
    membrane: &[T],
    d_spikes: &[T],
    c: usize,
    m: usize,
    steps: usize,
    d_current: &mut Vec<T>,
) {
    d_current.clear();
    d_current.resize(c * steps * m, T::zero());
    let inv_tau = T::of(1.0 / p.tau);
    let leak = T::one() - inv_tau;
    let th = T::of(p.v_threshold);
    let rest = T::of(p.v_rest);
    let alpha = T::of(p.surrogate_width);
    let window = T::of(1.0 / p.surrogate_width);
    let mut dv = vec![T::zero(); m];
    for ch in 0..c {
        dv.iter_mut().for_each(|x| *x = T::zero());
        for t in (0..steps).rev() {
            let base = (ch * steps + t) * m;
            for j in 0..m {
                let u = membrane[base + j];
                let x = (u - th).abs();
                let g = if x <= window { alpha - alpha * alpha * x } else { T::zero() };
                let dv_du = match p.reset_mode {
                    ResetMode::SoftSubtract if g == T::zero() => T::one(),
                    ResetMode::SoftSubtract => T::one() - th * g,
                    ResetMode::HardToRest => {
                        let s = if u >= th { T::one() } else { T::zero() };
                        (T::one() - s) + (rest - u) * g
                    }
                };
                let du = d_spikes[base + j] * g + dv[j] * dv_du;
                d_current[base + j] = du * inv_tau;
                dv[j] = du * leak;
            }
        }
    }
}
