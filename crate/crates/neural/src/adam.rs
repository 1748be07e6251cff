use crate::error::{NeuralError, Result};
use crate::network::ParamSet;
use crate::scalar::Scalar;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: Vec::new(), v: Vec::new(), t: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update of `params` against `grads`. Refuses (leaving all state
    /// untouched) when any gradient is non-finite.
    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &ParamSet<T>) -> Result<()> {
        if !grads.all_finite() {
            return Err(NeuralError::NonFinite("gradient contains NaN or infinity".into()));
        }
        if self.m.is_empty() {
            self.m = vec![T::zero(); params.len()];
            self.v = vec![T::zero(); params.len()];
        }
        if self.m.len() != params.len() || grads.len() != params.len() {
            return Err(NeuralError::Shape("optimizer state does not match parameters".into()));
        }
        self.t += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let one = T::one();
        let c1 = T::of(1.0 - self.beta1.powi(self.t as i32));
        let c2 = T::of(1.0 - self.beta2.powi(self.t as i32));
        let lr = T::of(self.lr);
        let eps = T::of(self.eps);
        let p = params.as_mut_slice();
        for (i, &g) in grads.as_slice().iter().enumerate() {
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
