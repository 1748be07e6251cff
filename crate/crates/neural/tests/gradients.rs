use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smashvat_neural::gradcheck;
use smashvat_neural::network::{INPUT_LEN, N_OUTPUTS};
use smashvat_neural::{Network, NeuronMode};

#[test]
fn relu_gradients_match_central_differences_for_every_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut net = Network::<f64>::init(NeuronMode::Relu, 5).unwrap();
    // non-zero biases so the check also exercises their paths
    for t in [1, 3, 5, 7, 9] {
        for b in net.params.tensor_mut(t) {
            *b = rng.gen_range(-0.1..0.1);
        }
    }
    let batch = 2;
    let input: Vec<f64> = (0..batch * INPUT_LEN).map(|_| rng.gen_range(0.0..3.0)).collect();
    let weights: Vec<f64> = (0..batch * N_OUTPUTS).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let report = gradcheck::check(&net, &input, batch, &weights, 1e-4).unwrap();
    assert_eq!(report.len(), 10);
    for t in &report {
        assert!(t.max_rel_error < 1e-4, "{} max relative error {}", t.name, t.max_rel_error);
    }
}
