//! Central finite-difference comparison of [`Network::backward`].

use crate::error::Result;
use crate::network::{Network, PARAM_NAMES};

/// Worst relative error found in one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: &'static str,
    pub checked: usize,
    pub max_rel_error: f64,
}

/// Compares analytic gradients of `L = Σ weights ⊙ forward(input)` against
/// `(L(p + h) − L(p − h)) / 2h` for every parameter.
///
/// Relative error is `|a − n| / max(|a|, |n|)`; pairs where both are below
/// `1e-9` in magnitude count as agreeing.
pub fn check(net: &Network<f64>, input: &[f64], batch: usize, weights: &[f64], h: f64) -> Result<Vec<TensorCheck>> {
    let (_, tape) = net.forward_train(input, batch)?;
    let analytic = net.backward(&tape, weights)?;
    let loss = |n: &Network<f64>| -> Result<f64> {
        Ok(n.forward(input, batch)?.iter().zip(weights).map(|(o, w)| o * w).sum())
    };
    let mut probe = net.clone();
    let mut out = Vec::new();
    for (ti, &name) in PARAM_NAMES.iter().enumerate() {
        let len = net.params.tensor(ti).len();
        let mut worst: f64 = 0.0;
        for j in 0..len {
            let orig = probe.params.tensor(ti)[j];
            probe.params.tensor_mut(ti)[j] = orig + h;
            let up = loss(&probe)?;
            probe.params.tensor_mut(ti)[j] = orig - h;
            let down = loss(&probe)?;
            probe.params.tensor_mut(ti)[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.tensor(ti)[j];
            let scale = a.abs().max(numeric.abs());
            if scale > 1e-9 {
                worst = worst.max((a - numeric).abs() / scale);
            }
        }
        out.push(TensorCheck { name, checked: len, max_rel_error: worst });
    }
    Ok(out)
}
