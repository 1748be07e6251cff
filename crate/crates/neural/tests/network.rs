use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smashvat_neural::lif::surrogate_grad;
use smashvat_neural::network::{ParamSet, INPUT_LEN, N_OUTPUTS};
use smashvat_neural::{Adam, LifParams, Network, NeuralError, NeuronMode, ResetMode};

fn random_input(rng: &mut ChaCha8Rng, batch: usize) -> Vec<f32> {
    (0..batch * INPUT_LEN).map(|_| rng.gen_range(0..4) as f32).collect()
}

fn lif() -> NeuronMode {
    NeuronMode::Lif(LifParams::default())
}

#[test]
fn zero_network_outputs_zero() {
    let net = Network::<f32>::zeros(NeuronMode::Relu).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = net.forward(&random_input(&mut rng, 4), 4).unwrap();
    assert_eq!(out, vec![0.0; 4 * N_OUTPUTS]);
}

#[test]
fn batch_of_one_hundred_gives_one_hundred_rows_in_both_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_input(&mut rng, 100);
    for mode in [NeuronMode::Relu, lif()] {
        let net = Network::<f32>::init(mode, 2).unwrap();
        let out = net.forward(&x, 100).unwrap();
        assert_eq!(out.len(), 100 * N_OUTPUTS);
        assert!(out.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn batched_forward_equals_per_sample_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<f64> = (0..5 * INPUT_LEN).map(|_| rng.gen_range(0.0..3.0)).collect();
    for mode in [NeuronMode::Relu, lif()] {
        let net = Network::<f64>::init(mode, 9).unwrap();
        let all = net.forward(&x, 5).unwrap();
        for b in 0..5 {
            let one = net.forward(&x[b * INPUT_LEN..(b + 1) * INPUT_LEN], 1).unwrap();
            for o in 0..N_OUTPUTS {
                assert!((one[o] - all[b * N_OUTPUTS + o]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn wrong_input_length_is_a_shape_error() {
    let net = Network::<f32>::zeros(NeuronMode::Relu).unwrap();
    assert!(matches!(net.forward(&[0.0; 10], 1), Err(NeuralError::Shape(_))));
    let (_, tape) = net.forward_train(&[0.0; INPUT_LEN], 1).unwrap();
    assert!(matches!(net.backward(&tape, &[0.0; 5]), Err(NeuralError::Shape(_))));
}

#[test]
fn tape_from_other_mode_is_rejected() {
    let relu = Network::<f32>::init(NeuronMode::Relu, 1).unwrap();
    let spiking = Network { mode: lif(), params: relu.params.clone() };
    let (_, tape) = relu.forward_train(&[1.0; INPUT_LEN], 1).unwrap();
    assert!(spiking.backward(&tape, &[1.0; N_OUTPUTS]).is_err());
}

#[test]
fn silent_lif_network_outputs_the_last_bias() {
    let p = LifParams { v_threshold: f64::INFINITY, timesteps: 1, ..LifParams::default() };
    let mut net = Network::<f64>::init(NeuronMode::Lif(p), 4).unwrap();
    for t in [1, 3, 5, 7, 9] {
        for (i, b) in net.params.tensor_mut(t).iter_mut().enumerate() {
            *b = 0.1 * i as f64 - 0.2;
        }
    }
    let bias: Vec<f64> = net.params.tensor(9).to_vec();
    let out = net.forward(&[2.0; 2 * INPUT_LEN], 2).unwrap();
    assert_eq!(&out[..6], &bias[..]);
    assert_eq!(&out[6..], &bias[..]);
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_input(&mut rng, 3);
    for mode in [NeuronMode::Relu, lif()] {
        let net = Network::<f32>::init(mode, 3).unwrap();
        let (_, tape) = net.forward_train(&x, 3).unwrap();
        let g = net.backward(&tape, &[0.0; 3 * N_OUTPUTS]).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn lif_gradients_reach_every_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_input(&mut rng, 8);
    let net = Network::<f32>::init(lif(), 6).unwrap();
    let (_, tape) = net.forward_train(&x, 8).unwrap();
    let up: Vec<f32> = (0..8 * N_OUTPUTS).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = net.backward(&tape, &up).unwrap();
    for t in 0..ParamSet::<f32>::TENSORS {
        assert!(g.tensor(t).iter().all(|v| v.is_finite()));
        assert!(g.tensor(t).iter().any(|&v| v != 0.0), "tensor {t} got no gradient");
    }
}

#[test]
fn surrogate_slope_at_threshold_is_the_width() {
    // d/dx of (−½α²|x|x + αx + ½) at 0 is α.
    for a in [0.5, 1.0, 2.0, 3.0] {
        assert_eq!(surrogate_grad(0.0, a), a);
    }
}

#[test]
fn hard_reset_mode_runs() {
    let p = LifParams { reset_mode: ResetMode::HardToRest, ..LifParams::default() };
    let net = Network::<f32>::init(NeuronMode::Lif(p), 1).unwrap();
    let out = net.forward(&[1.0; INPUT_LEN], 1).unwrap();
    assert!(out.iter().all(|v| v.is_finite()));
}

#[test]
fn invalid_lif_params_are_rejected() {
    for p in [
        LifParams { tau: 0.0, ..LifParams::default() },
        LifParams { timesteps: 0, ..LifParams::default() },
        LifParams { surrogate_width: -1.0, ..LifParams::default() },
    ] {
        assert!(Network::<f32>::init(NeuronMode::Lif(p), 0).is_err());
    }
}

#[test]
fn initialization_forward_and_backward_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_input(&mut rng, 4);
    let up: Vec<f32> = (0..4 * N_OUTPUTS).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for mode in [NeuronMode::Relu, lif()] {
        let run = || {
            let net = Network::<f32>::init(mode, 77).unwrap();
            let (out, tape) = net.forward_train(&x, 4).unwrap();
            let g = net.backward(&tape, &up).unwrap();
            (net.params.fingerprint(), out, g.fingerprint())
        };
        assert_eq!(run(), run());
    }
    let a = Network::<f32>::init(NeuronMode::Relu, 1).unwrap();
    let b = Network::<f32>::init(NeuronMode::Relu, 2).unwrap();
    assert_ne!(a.params, b.params);
}

#[test]
fn kaiming_bounds_and_zero_biases() {
    let net = Network::<f64>::init(NeuronMode::Relu, 8).unwrap();
    let fan_in = [27.0, 144.0, 288.0, 64.0, 128.0];
    for (k, f) in fan_in.iter().enumerate() {
        let bound = (6.0f64 / f).sqrt();
        assert!(net.params.tensor(2 * k).iter().all(|w| w.abs() <= bound));
        assert!(net.params.tensor(2 * k + 1).iter().all(|&b| b == 0.0));
    }
}

#[test]
fn copies_are_independent_and_keep_the_mode() {
    let src = Network::<f32>::init(lif(), 3).unwrap();
    let mut perturbed = src.clone();
    let dst = perturbed.copy_params();
    perturbed.params.as_mut_slice()[0] += 1.0;
    assert_eq!(dst.params, src.params);
    assert_ne!(dst.params, perturbed.params);
    assert_eq!(dst.copy_params(), src);
    assert_eq!(dst.mode, lif());
}

#[test]
fn adam_first_step_moves_by_the_learning_rate() {
    let mut net = Network::<f64>::zeros(NeuronMode::Relu).unwrap();
    let mut g = ParamSet::<f64>::zeros();
    g.as_mut_slice()[0] = 1.0;
    g.as_mut_slice()[1] = -3.0;
    let mut adam = Adam::new(1e-4);
    adam.step(&mut net.params, &g).unwrap();
    assert!((net.params.as_slice()[0] + 1e-4).abs() < 1e-10);
    assert!((net.params.as_slice()[1] - 1e-4).abs() < 1e-10);
    assert!(net.params.as_slice()[2..].iter().all(|&v| v == 0.0));
}

#[test]
fn adam_ignores_zero_gradients_and_refuses_nan() {
    let mut net = Network::<f32>::init(NeuronMode::Relu, 1).unwrap();
    let before = net.params.clone();
    let mut adam = Adam::new(1e-4);
    adam.step(&mut net.params, &ParamSet::zeros()).unwrap();
    assert_eq!(net.params, before);
    let mut g = ParamSet::<f32>::zeros();
    g.as_mut_slice()[10] = f32::NAN;
    assert!(matches!(adam.step(&mut net.params, &g), Err(NeuralError::NonFinite(_))));
    assert_eq!(net.params, before);
    assert_eq!(adam.steps_taken(), 1);
}

#[test]
fn checkpoint_round_trips_losslessly() {
    for mode in [NeuronMode::Relu, lif()] {
        let net = Network::<f32>::init(mode, 21).unwrap();
        let mut buf = Vec::new();
        net.write_to(&mut buf).unwrap();
        let back = Network::<f32>::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, net);
    }
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let net = Network::<f32>::init(NeuronMode::Relu, 21).unwrap();
    let mut buf = Vec::new();
    net.write_to(&mut buf).unwrap();
    let mut bad_magic = buf.clone();
    bad_magic[0] = b'X';
    assert!(Network::<f32>::read_from(&mut bad_magic.as_slice()).is_err());
    let mut bad_version = buf.clone();
    bad_version[4] = 9;
    assert!(Network::<f32>::read_from(&mut bad_version.as_slice()).is_err());
    let truncated = &buf[..buf.len() - 3];
    assert!(Network::<f32>::read_from(&mut &truncated[..]).is_err());
}
