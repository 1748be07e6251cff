//! The Q-network: input 3×7×5 → conv(16, pad 1) → conv(32) → conv(64) →
//! global average pool → fc(128) → fc(6).
//!
//! Internally activations are channel-major (`[channel][sample][position]`)
//! so every layer is a single matrix product over the whole batch.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NeuralError, Result};
use crate::lif::{self, LifParams};
use crate::scalar::{gemm, Mat, Scalar};

pub const IN_CHANNELS: usize = 3;
pub const IN_ROWS: usize = 7;
pub const IN_COLS: usize = 5;
pub const INPUT_LEN: usize = IN_CHANNELS * IN_ROWS * IN_COLS;
pub const N_OUTPUTS: usize = 6;

pub const PARAM_NAMES: [&str; 10] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "conv3.weight",
    "conv3.bias",
    "fc1.weight",
    "fc1.bias",
    "fc2.weight",
    "fc2.bias",
];

pub const PARAM_SHAPES: [&[usize]; 10] = [
    &[16, 3, 3, 3],
    &[16],
    &[32, 16, 3, 3],
    &[32],
    &[64, 32, 3, 3],
    &[64],
    &[128, 64],
    &[128],
    &[6, 128],
    &[6],
];

#[derive(Debug, Clone, Copy)]
struct Conv {
    cin: usize,
    cout: usize,
    h: usize,
    w: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl Conv {
    const fn new(cin: usize, cout: usize, h: usize, w: usize, pad: usize) -> Conv {
        Conv { cin, cout, h, w, pad, ho: h + 2 * pad - 2, wo: w + 2 * pad - 2 }
    }

    fn patch(&self) -> usize {
        self.cin * 9
    }

    fn out_hw(&self) -> usize {
        self.ho * self.wo
    }
}

const CONV1: Conv = Conv::new(3, 16, 7, 5, 1);
const CONV2: Conv = Conv::new(16, 32, 7, 5, 0);
const CONV3: Conv = Conv::new(32, 64, 5, 3, 0);
const FC1: (usize, usize) = (64, 128);
const FC2: (usize, usize) = (128, 6);

/// Per-sample activation shapes after each layer, in order:
/// conv1, conv2, conv3, pool, fc1, fc2.
pub const ACTIVATION_SHAPES: [&[usize]; 6] =
    [&[16, 7, 5], &[32, 5, 3], &[64, 3, 1], &[64], &[128], &[6]];

/// Flat storage for one value per network parameter, grouped by tensor in
/// [`PARAM_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    data: Vec<T>,
}

pub type NetworkParams<T> = ParamSet<T>;
pub type GradientBundle<T> = ParamSet<T>;

fn tensor_len(i: usize) -> usize {
    PARAM_SHAPES[i].iter().product()
}

fn offsets() -> [usize; 11] {
    let mut o = [0; 11];
    for i in 0..10 {
        o[i + 1] = o[i] + tensor_len(i);
    }
    o
}

impl<T: Scalar> ParamSet<T> {
    pub const TENSORS: usize = 10;

    pub fn zeros() -> Self {
        ParamSet { data: vec![T::zero(); offsets()[10]] }
    }

    pub fn from_vec(data: Vec<T>) -> Result<Self> {
        let want = offsets()[10];
        if data.len() != want {
            return Err(NeuralError::Shape(format!(
                "parameter vector has {} values, network needs {want}",
                data.len()
            )));
        }
        Ok(ParamSet { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn tensor(&self, i: usize) -> &[T] {
        let o = offsets();
        &self.data[o[i]..o[i + 1]]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut [T] {
        let o = offsets();
        &mut self.data[o[i]..o[i + 1]]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scale(&mut self, k: T) {
        self.data.iter_mut().for_each(|x| *x *= k);
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet { data: self.data.iter().map(|x| U::of(x.f64())).collect() }
    }

    /// FNV-1a over the bit patterns (as `f64`), for cheap equality tracking.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.data {
            for byte in x.f64().to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeuronMode {
    Relu,
    Lif(LifParams),
}

impl NeuronMode {
    pub fn timesteps(&self) -> usize {
        match self {
            NeuronMode::Relu => 1,
            NeuronMode::Lif(p) => p.timesteps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NeuronMode::Relu => Ok(()),
            NeuronMode::Lif(p) => p.validate(),
        }
    }
}

/// Parameters plus the neuron model they are evaluated with.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub mode: NeuronMode,
    pub params: ParamSet<T>,
}

/// Activations cached by a forward pass for the backward pass, plus
/// scratch space. Reusing one tape across calls avoids reallocating.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    batch: usize,
    steps: usize,
    x: Vec<T>,
    cols: [Vec<T>; 3],
    z: Vec<T>,
    /// Outputs of the four activation sites (ReLU output or spikes).
    act: [Vec<T>; 4],
    /// Pre-reset membranes of the four sites in LIF mode.
    membrane: [Vec<T>; 4],
    pooled: Vec<T>,
    z5: Vec<T>,
    g_a: Vec<T>,
    g_b: Vec<T>,
    dcols: Vec<T>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            batch: 0,
            steps: 0,
            x: Vec::new(),
            cols: Default::default(),
            z: Vec::new(),
            act: Default::default(),
            membrane: Default::default(),
            pooled: Vec::new(),
            z5: Vec::new(),
            g_a: Vec::new(),
            g_b: Vec::new(),
            dcols: Vec::new(),
        }
    }
}

/// Resizes `buf` to `len` zeros, keeping its allocation.
fn reuse<T: Scalar>(buf: &mut Vec<T>, len: usize) {
    buf.clear();
    buf.resize(len, T::zero());
}

/// Resizes `buf` to `len` without clearing; for buffers that are about to
/// be overwritten entirely.
fn sized<T: Scalar>(buf: &mut Vec<T>, len: usize) {
    buf.resize(len, T::zero());
}

impl<T: Scalar> Network<T> {
    /// Kaiming-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
    pub fn init(mode: NeuronMode, seed: u64) -> Result<Self> {
        mode.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::zeros();
        for i in (0..10).step_by(2) {
            let fan_in: usize = PARAM_SHAPES[i][1..].iter().product();
            let bound = (6.0 / fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for w in params.tensor_mut(i) {
                *w = T::of(dist.sample(&mut rng));
            }
        }
        Ok(Network { mode, params })
    }

    pub fn zeros(mode: NeuronMode) -> Result<Self> {
        mode.validate()?;
        Ok(Network { mode, params: ParamSet::zeros() })
    }

    pub fn copy_params(&self) -> Self {
        self.clone()
    }

    /// Q-values for a batch of `batch` inputs laid out sample-major
    /// (`batch × 3 × 7 × 5`). Returns `batch × 6`.
    pub fn forward(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        self.forward_train(input, batch).map(|(out, _)| out)
    }

    /// As [`Network::forward`], also returning the activations needed by
    /// [`Network::backward`].
    pub fn forward_train(&self, input: &[T], batch: usize) -> Result<(Vec<T>, Tape<T>)> {
        let mut tape = Tape::new();
        let mut out = Vec::new();
        self.forward_into(input, batch, &mut tape, &mut out)?;
        Ok((out, tape))
    }

    /// Forward pass recording into a reusable `tape`; writes `batch × 6`
    /// Q-values to `out`.
    pub fn forward_into(&self, input: &[T], batch: usize, tape: &mut Tape<T>, out: &mut Vec<T>) -> Result<()> {
        if input.len() != batch * INPUT_LEN {
            return Err(NeuralError::Shape(format!(
                "input has {} values, expected {batch}×{INPUT_LEN}",
                input.len()
            )));
        }
        let steps = self.mode.timesteps();
        let n = steps * batch;
        tape.batch = batch;
        tape.steps = steps;
        let hw = IN_ROWS * IN_COLS;
        sized(&mut tape.x, input.len());
        for b in 0..batch {
            for c in 0..IN_CHANNELS {
                let src = &input[(b * IN_CHANNELS + c) * hw..][..hw];
                tape.x[(c * batch + b) * hw..][..hw].copy_from_slice(src);
            }
        }

        im2col(&tape.x, CONV1, batch, &mut tape.cols[0]);
        conv_forward(&self.params, 0, CONV1, &tape.cols[0], batch, &mut tape.z);
        self.activate(tape, 0, CONV1.cout, batch * CONV1.out_hw(), true);

        im2col(&tape.act[0], CONV2, n, &mut tape.cols[1]);
        conv_forward(&self.params, 2, CONV2, &tape.cols[1], n, &mut tape.z);
        self.activate(tape, 1, CONV2.cout, batch * CONV2.out_hw(), false);

        im2col(&tape.act[1], CONV3, n, &mut tape.cols[2]);
        conv_forward(&self.params, 4, CONV3, &tape.cols[2], n, &mut tape.z);
        self.activate(tape, 2, CONV3.cout, batch * CONV3.out_hw(), false);

        avg_pool(&tape.act[2], CONV3.cout, n, CONV3.out_hw(), &mut tape.pooled);
        fc_forward(&self.params, 6, FC1, &tape.pooled, n, &mut tape.z);
        self.activate(tape, 3, FC1.1, batch, false);
        fc_forward(&self.params, 8, FC2, &tape.act[3], n, &mut tape.z5);

        let inv_steps = T::of(1.0 / steps as f64);
        reuse(out, batch * N_OUTPUTS);
        for o in 0..N_OUTPUTS {
            for t in 0..steps {
                for b in 0..batch {
                    out[b * N_OUTPUTS + o] += tape.z5[o * n + t * batch + b];
                }
            }
        }
        out.iter_mut().for_each(|v| *v *= inv_steps);
        Ok(())
    }

    /// Gradient of `Σ upstream ⊙ output` with respect to every parameter.
    pub fn backward(&self, tape: &Tape<T>, upstream: &[T]) -> Result<GradientBundle<T>> {
        let mut scratch = tape.clone();
        let mut grads = ParamSet::zeros();
        self.backward_into(&mut scratch, upstream, &mut grads)?;
        Ok(grads)
    }

    /// As [`Network::backward`], overwriting `grads` and using the tape's
    /// scratch space.
    pub fn backward_into(&self, tape: &mut Tape<T>, upstream: &[T], grads: &mut GradientBundle<T>) -> Result<()> {
        let batch = tape.batch;
        let steps = tape.steps;
        let lif_tape = !tape.membrane[0].is_empty();
        let lif_mode = matches!(self.mode, NeuronMode::Lif(_));
        if steps != self.mode.timesteps() || batch == 0 || lif_tape != lif_mode {
            return Err(NeuralError::Shape("tape does not match this network's neuron mode".into()));
        }
        if upstream.len() != batch * N_OUTPUTS {
            return Err(NeuralError::Shape(format!(
                "upstream gradient has {} values, expected {batch}×{N_OUTPUTS}",
                upstream.len()
            )));
        }
        let n = steps * batch;
        let t = tape;

        let inv_steps = T::of(1.0 / steps as f64);
        sized(&mut t.g_a, N_OUTPUTS * n);
        for o in 0..N_OUTPUTS {
            for s in 0..steps {
                for b in 0..batch {
                    t.g_a[o * n + s * batch + b] = upstream[b * N_OUTPUTS + o] * inv_steps;
                }
            }
        }
        fc_backward(&self.params, grads, 8, FC2, &t.act[3], &t.g_a, n, &mut t.g_b);
        self.site_backward(t, 3, FC1.1, batch);
        fc_backward(&self.params, grads, 6, FC1, &t.pooled, &t.g_a, n, &mut t.g_b);
        avg_pool_backward(&t.g_b, CONV3.out_hw(), &mut t.g_a);
        std::mem::swap(&mut t.g_a, &mut t.g_b);
        self.site_backward(t, 2, CONV3.cout, batch * CONV3.out_hw());
        conv_backward(&self.params, grads, 4, CONV3, &t.cols[2], &t.g_a, n, Some((&mut t.dcols, &mut t.g_b)));
        self.site_backward(t, 1, CONV2.cout, batch * CONV2.out_hw());
        conv_backward(&self.params, grads, 2, CONV2, &t.cols[1], &t.g_a, n, Some((&mut t.dcols, &mut t.g_b)));
        self.site_backward(t, 0, CONV1.cout, batch * CONV1.out_hw());
        if steps > 1 {
            let m1 = batch * CONV1.out_hw();
            reuse(&mut t.g_b, CONV1.cout * m1);
            for c in 0..CONV1.cout {
                for s in 0..steps {
                    let src = &t.g_a[(c * steps + s) * m1..][..m1];
                    for (a, &d) in t.g_b[c * m1..][..m1].iter_mut().zip(src) {
                        *a += d;
                    }
                }
            }
            std::mem::swap(&mut t.g_a, &mut t.g_b);
        }
        conv_backward(&self.params, grads, 0, CONV1, &t.cols[0], &t.g_a, batch, None);
        Ok(())
    }

    /// Applies site `k`'s nonlinearity to `tape.z` (`[c][t][m]`, or `[c][m]`
    /// when `constant`), writing `[c][t][m]` activations to `tape.act[k]`.
    fn activate(&self, tape: &mut Tape<T>, k: usize, c: usize, m: usize, constant: bool) {
        match &self.mode {
            NeuronMode::Relu => {
                let a = &mut tape.act[k];
                a.clear();
                a.extend(tape.z.iter().map(|&v| if v > T::zero() { v } else { T::zero() }));
                tape.membrane[k].clear();
            }
            NeuronMode::Lif(p) => {
                lif::forward(p, &tape.z, c, m, tape.steps, constant, &mut tape.act[k], &mut tape.membrane[k]);
            }
        }
    }

    /// Maps the gradient w.r.t. site `k`'s output (in `g_b`) to the
    /// gradient w.r.t. its input (in `g_a`).
    fn site_backward(&self, tape: &mut Tape<T>, k: usize, c: usize, m: usize) {
        match &self.mode {
            NeuronMode::Relu => {
                for (g, &v) in tape.g_b.iter_mut().zip(&tape.act[k]) {
                    if !(v > T::zero()) {
                        *g = T::zero();
                    }
                }
                std::mem::swap(&mut tape.g_a, &mut tape.g_b);
            }
            NeuronMode::Lif(p) => {
                lif::backward(p, &tape.membrane[k], &tape.g_b, c, m, tape.steps, &mut tape.g_a);
            }
        }
    }
}

/// For each of the 9 kernel taps and each output position, the input
/// offset within one `h×w` plane, or `u32::MAX` when it falls in padding.
fn taps(g: Conv) -> Vec<u32> {
    let mut t = Vec::with_capacity(9 * g.out_hw());
    for ky in 0..3 {
        for kx in 0..3 {
            for oy in 0..g.ho {
                for ox in 0..g.wo {
                    let iy = (oy + ky) as isize - g.pad as isize;
                    let ix = (ox + kx) as isize - g.pad as isize;
                    let inside = (0..g.h as isize).contains(&iy) && (0..g.w as isize).contains(&ix);
                    t.push(if inside { (iy as usize * g.w + ix as usize) as u32 } else { u32::MAX });
                }
            }
        }
    }
    t
}

/// `x` is `[cin][n][h·w]`; fills `cols` as `[cin·9][n·ho·wo]`.
fn im2col<T: Scalar>(x: &[T], g: Conv, n: usize, cols: &mut Vec<T>) {
    let ohw = g.out_hw();
    let width = n * ohw;
    let ihw = g.h * g.w;
    let taps = taps(g);
    cols.clear();
    cols.reserve(g.patch() * width);
    for ci in 0..g.cin {
        let plane = &x[ci * n * ihw..][..n * ihw];
        for k in 0..9 {
            let tap = &taps[k * ohw..][..ohw];
            for src in plane.chunks_exact(ihw) {
                cols.extend(tap.iter().map(|&i| if i == u32::MAX { T::zero() } else { src[i as usize] }));
            }
        }
    }
}

/// Adjoint of [`im2col`]: fills `x` as `[cin][n][h·w]`.
fn col2im<T: Scalar>(cols: &[T], g: Conv, n: usize, x: &mut Vec<T>) {
    let ohw = g.out_hw();
    let width = n * ohw;
    let ihw = g.h * g.w;
    let taps = taps(g);
    reuse(x, g.cin * n * ihw);
    for ci in 0..g.cin {
        let plane = &mut x[ci * n * ihw..][..n * ihw];
        for k in 0..9 {
            let tap = &taps[k * ohw..][..ohw];
            let row = &cols[(ci * 9 + k) * width..][..width];
            for (dst, src) in plane.chunks_exact_mut(ihw).zip(row.chunks_exact(ohw)) {
                for (&v, &i) in src.iter().zip(tap) {
                    if i != u32::MAX {
                        dst[i as usize] += v;
                    }
                }
            }
        }
    }
}

fn add_bias<T: Scalar>(z: &mut [T], bias: &[T], width: usize) {
    for (row, &b) in z.chunks_exact_mut(width).zip(bias) {
        row.iter_mut().for_each(|v| *v += b);
    }
}

fn bias_grad<T: Scalar>(dz: &[T], db: &mut [T], width: usize) {
    for (row, g) in dz.chunks_exact(width).zip(db.iter_mut()) {
        *g = row.iter().fold(T::zero(), |s, &v| s + v);
    }
}

fn conv_forward<T: Scalar>(p: &ParamSet<T>, wi: usize, g: Conv, cols: &[T], n: usize, z: &mut Vec<T>) {
    let width = n * g.out_hw();
    sized(z, g.cout * width);
    gemm(Mat::new(p.tensor(wi), g.cout, g.patch()), Mat::new(cols, g.patch(), width), z, false);
    add_bias(z, p.tensor(wi + 1), width);
}

/// Fills the weight and bias gradients of one conv layer and, when given
/// scratch and output buffers, the gradient with respect to its input.
#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Scalar>(
    p: &ParamSet<T>,
    grads: &mut ParamSet<T>,
    wi: usize,
    g: Conv,
    cols: &[T],
    dz: &[T],
    n: usize,
    input_grad: Option<(&mut Vec<T>, &mut Vec<T>)>,
) {
    let width = n * g.out_hw();
    gemm(
        Mat::new(dz, g.cout, width),
        Mat::new(cols, g.patch(), width).t(),
        grads.tensor_mut(wi),
        false,
    );
    bias_grad(dz, grads.tensor_mut(wi + 1), width);
    if let Some((dcols, dx)) = input_grad {
        sized(dcols, g.patch() * width);
        gemm(Mat::new(p.tensor(wi), g.cout, g.patch()).t(), Mat::new(dz, g.cout, width), dcols, false);
        col2im(dcols, g, n, dx);
    }
}

fn fc_forward<T: Scalar>(p: &ParamSet<T>, wi: usize, (fin, fout): (usize, usize), x: &[T], n: usize, z: &mut Vec<T>) {
    sized(z, fout * n);
    gemm(Mat::new(p.tensor(wi), fout, fin), Mat::new(x, fin, n), z, false);
    add_bias(z, p.tensor(wi + 1), n);
}

#[allow(clippy::too_many_arguments)]
fn fc_backward<T: Scalar>(
    p: &ParamSet<T>,
    grads: &mut ParamSet<T>,
    wi: usize,
    (fin, fout): (usize, usize),
    x: &[T],
    dz: &[T],
    n: usize,
    dx: &mut Vec<T>,
) {
    gemm(Mat::new(dz, fout, n), Mat::new(x, fin, n).t(), grads.tensor_mut(wi), false);
    bias_grad(dz, grads.tensor_mut(wi + 1), n);
    sized(dx, fin * n);
    gemm(Mat::new(p.tensor(wi), fout, fin).t(), Mat::new(dz, fout, n), dx, false);
}

fn avg_pool<T: Scalar>(a: &[T], c: usize, n: usize, hw: usize, out: &mut Vec<T>) {
    debug_assert_eq!(a.len(), c * n * hw);
    let inv = T::of(1.0 / hw as f64);
    out.clear();
    out.extend(a.chunks_exact(hw).map(|chunk| chunk.iter().fold(T::zero(), |s, &v| s + v) * inv));
}

fn avg_pool_backward<T: Scalar>(d: &[T], hw: usize, out: &mut Vec<T>) {
    let inv = T::of(1.0 / hw as f64);
    sized(out, d.len() * hw);
    for (chunk, &g) in out.chunks_exact_mut(hw).zip(d) {
        chunk.iter_mut().for_each(|v| *v = g * inv);
    }
}
