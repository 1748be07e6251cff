//! Learner behavior: exploration schedule, replay buffer, action selection,
//! the Bellman update, target-network staleness, reward plumbing and
//! determinism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smashvat::experiments::records::to_csv_string;
use smashvat::gridworld::{self, observe, Action};
use smashvat::imagination::{r_total, IntrinsicWeights};
use smashvat::layouts;
use smashvat::learner::{
    greedy_rollout, run_training, select_action, EpsilonSchedule, Learner, Optimizer, ReplayBuffer, TrainConfig,
    Transition,
};
use smashvat::neuralcore::{Network, NeuronMode};

fn tiny(layout: &str, episodes: u32, seed: u64) -> TrainConfig {
    TrainConfig {
        layout: layout.into(),
        episodes,
        max_steps: 30,
        batch_size: 16,
        buffer_capacity: 500,
        target_sync_interval: 7,
        n_imaginary: 4,
        epsilon: EpsilonSchedule::new(episodes),
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn epsilon_schedule_landmarks() {
    let s = EpsilonSchedule::new(10_000);
    assert_eq!(s.epsilon_at(1).unwrap(), 1.0);
    assert_eq!(s.epsilon_at(500).unwrap(), 1.0);
    assert!((s.epsilon_at(5000).unwrap() - 0.505).abs() < 1e-12);
    assert_eq!(s.epsilon_at(9500).unwrap(), 0.01);
    assert_eq!(s.epsilon_at(10_000).unwrap(), 0.01);
    assert!(s.epsilon_at(0).is_err());
    assert!(s.epsilon_at(10_001).is_err());
    let mut last = 1.0;
    for e in 1..=10_000 {
        let v = s.epsilon_at(e).unwrap();
        assert!(v <= last);
        last = v;
    }
}

fn transition(tag: f64) -> Transition {
    let l = layouts::layout("BasicVatGoalEnv").unwrap();
    let obs = observe(&gridworld::reset(&l));
    Transition {
        obs,
        action: Action::Noop,
        r_total: tag,
        next_obs: obs,
        done: false,
        r_env: tag,
        nse: 0.0,
        emp: 0.0,
    }
}

#[test]
fn buffer_is_fifo() {
    let mut buf = ReplayBuffer::new(10);
    for i in 0..13 {
        buf.push(transition(i as f64));
    }
    assert_eq!(buf.len(), 10);
    let tags: Vec<f64> = buf.iter().map(|t| t.r_total).collect();
    assert_eq!(tags, (3..13).map(f64::from).collect::<Vec<_>>());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batch = buf.sample(10, &mut rng).unwrap();
    let mut seen: Vec<f64> = batch.iter().map(|t| t.r_total).collect();
    seen.sort_by(f64::total_cmp);
    assert_eq!(seen, tags);
    assert!(buf.sample(11, &mut rng).is_err());
}

/// Pearson statistic of observed counts against expected probabilities.
fn chi_square(counts: &[u64; 6], probs: &[f64; 6]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn action_selection_distribution() {
    // 99.9% quantile of chi-square with 5 degrees of freedom
    const CRITICAL: f64 = 20.515;
    let net = Network::<f32>::zeros(NeuronMode::Relu).unwrap();
    let l = layouts::layout("BasicVatGoalEnv").unwrap();
    let obs = observe(&gridworld::reset(&l));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (eps, probs) in [
        (1.0, [1.0 / 6.0; 6]),
        (0.5, [0.5 + 0.5 / 6.0, 0.5 / 6.0, 0.5 / 6.0, 0.5 / 6.0, 0.5 / 6.0, 0.5 / 6.0]),
    ] {
        let mut counts = [0u64; 6];
        for _ in 0..60_000 {
            counts[select_action(&net, &obs, eps, &mut rng).unwrap().index()] += 1;
        }
        let stat = chi_square(&counts, &probs);
        assert!(stat < CRITICAL, "epsilon {eps}: chi-square {stat} for {counts:?}");
    }
    // all-equal outputs: greedy choice is the lowest index
    for _ in 0..100 {
        assert_eq!(select_action(&net, &obs, 0.0, &mut rng).unwrap(), Action::Up);
    }
}

fn biased_zero_net(bias: [f32; 6]) -> Network<f32> {
    let mut net = Network::<f32>::zeros(NeuronMode::Relu).unwrap();
    net.params.tensor_mut(9).copy_from_slice(&bias);
    net
}

#[test]
fn all_terminal_batch_regresses_onto_rewards() {
    let mut policy = Network::<f32>::zeros(NeuronMode::Relu).unwrap();
    let target = policy.copy_params();
    let mut batch: Vec<Transition> = (0..4).map(|i| transition(0.25 * i as f64)).collect();
    for t in &mut batch {
        t.done = true;
    }
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut opt = Optimizer::new(1e-4, 0.99);
    let loss = opt.step(&mut policy, &target, &refs).unwrap();
    let want = (0.0 + 0.0625 + 0.25 + 0.5625) / 4.0;
    assert!((loss - want).abs() < 1e-12, "{loss} vs {want}");

    let mut zero = Network::<f32>::zeros(NeuronMode::Relu).unwrap();
    let zero_target = zero.copy_params();
    let mut quiet = transition(0.0);
    quiet.r_total = 0.0;
    let loss = Optimizer::new(1e-4, 0.99).step(&mut zero, &zero_target, &[&quiet, &quiet]).unwrap();
    assert_eq!(loss, 0.0);
}

#[test]
fn two_transition_loss_matches_hand_computation() {
    // Zero weights make every output equal to the fc2 bias:
    // Q = [0.1, 0.2, -0.3, 0.4, 0.0, 0.5] for any observation.
    // t1: Right, r = 0.5, continuing: y = 0.5 + 0.99 * 0.5 = 0.995, Q = 0.4
    // t2: Up, r = -1, terminal:       y = -1,                    Q = 0.1
    // loss = ((0.4 - 0.995)^2 + (0.1 + 1)^2) / 2 = (0.354025 + 1.21) / 2
    let bias = [0.1, 0.2, -0.3, 0.4, 0.0, 0.5];
    let mut policy = biased_zero_net(bias);
    let target = policy.copy_params();
    let mut t1 = transition(0.5);
    t1.action = Action::Right;
    let mut t2 = transition(-1.0);
    t2.action = Action::Up;
    t2.done = true;
    let lr = 1e-3;
    let mut opt = Optimizer::new(lr, 0.99);
    let loss = opt.step(&mut policy, &target, &[&t1, &t2]).unwrap();
    assert!((loss - 0.7820125).abs() < 1e-6, "loss {loss}");

    // Only the bias entries of the two taken actions receive gradient; the
    // first Adam step moves each by lr against the gradient sign.
    let after = policy.params.tensor(9);
    assert!((after[3] - (0.4 + lr as f32)).abs() < 1e-6);
    assert!((after[0] - (0.1 - lr as f32)).abs() < 1e-6);
    for a in [1, 2, 4, 5] {
        assert_eq!(after[a], bias[a]);
    }
    for i in 0..9 {
        assert!(policy.params.tensor(i).iter().all(|&v| v == 0.0), "tensor {i} moved");
    }
}

#[test]
fn target_changes_only_at_sync() {
    let mut policy = Network::<f32>::init(NeuronMode::Relu, 3).unwrap();
    let mut target = policy.copy_params();
    let mut opt = Optimizer::new(1e-3, 0.99);
    let batch: Vec<Transition> = (0..8).map(|i| transition(i as f64 / 8.0)).collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let frozen = target.params.fingerprint();
    for _ in 0..5 {
        opt.step(&mut policy, &target, &refs).unwrap();
        assert_eq!(target.params.fingerprint(), frozen);
    }
    assert_ne!(policy.params.fingerprint(), frozen);
    opt.sync_target(&policy, &mut target);
    assert_eq!(target.params.fingerprint(), policy.params.fingerprint());

    let mut learner = Learner::new(tiny("BasicVatGoalEnv", 12, 5)).unwrap();
    let interval = learner.config.target_sync_interval;
    let mut last = (0, learner.target.params.fingerprint());
    let mut syncs_seen = 0;
    while !learner.is_finished() {
        learner.run_episode().unwrap();
        let now = (learner.optimize_steps() / interval, learner.target.params.fingerprint());
        if now.0 == last.0 {
            assert_eq!(now.1, last.1, "target moved between syncs");
        } else {
            syncs_seen += 1;
        }
        last = now;
    }
    assert!(syncs_seen > 0);
}

#[test]
fn stored_rewards_recompose_exactly() {
    for (layout, use_nse, use_emp) in [
        ("BasicHumanVatGoalEnv", true, true),
        ("SideHumanVatGoalEnv", true, false),
        ("SmashAndDetourEnv", false, true),
    ] {
        let cfg = TrainConfig {
            use_nse,
            use_emp,
            weights: IntrinsicWeights::new(3.0, 7.0).unwrap(),
            ..tiny(layout, 6, 2)
        };
        let learner = run_training(cfg).unwrap().learner;
        assert!(!learner.buffer.is_empty());
        for t in learner.buffer.iter() {
            assert_eq!(t.r_total, r_total(t.r_env, t.nse, t.emp, learner.config.weights).unwrap());
            if !use_nse {
                assert_eq!(t.nse, 0.0);
            }
            if !use_emp {
                assert_eq!(t.emp, 0.0);
            }
        }
    }
}

#[test]
fn ablated_rewards_are_scaled_environment_rewards() {
    let (alpha, beta) = (3.0, 5.0);
    let cfg = TrainConfig {
        use_nse: false,
        use_emp: false,
        weights: IntrinsicWeights::new(alpha, beta).unwrap(),
        ..tiny("BasicHumanVatGoalEnv", 6, 8)
    };
    let learner = run_training(cfg).unwrap().learner;
    for t in learner.buffer.iter() {
        assert_eq!((t.nse, t.emp), (0.0, 0.0));
        assert_eq!(t.r_total, t.r_env / ((alpha + beta) / 2.0));
    }
}

#[test]
fn identical_configs_give_identical_logs() {
    for mode in [NeuronMode::Relu, NeuronMode::Lif(Default::default())] {
        let cfg = TrainConfig { neuron_mode: mode, ..tiny("SmashAndDetourEnv", 8, 13) };
        let a = run_training(cfg.clone()).unwrap();
        let b = run_training(cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(to_csv_string(&a.records), to_csv_string(&b.records));
        assert_eq!(a.learner.policy.params.fingerprint(), b.learner.policy.params.fingerprint());
    }
    let c = run_training(tiny("SmashAndDetourEnv", 8, 14)).unwrap();
    let d = run_training(tiny("SmashAndDetourEnv", 8, 13)).unwrap();
    assert_ne!(c.records, d.records);
}

#[test]
fn records_follow_the_schedule_and_the_episode() {
    let cfg = tiny("CShapeVatGoalEnv", 20, 1);
    let schedule = cfg.epsilon;
    let out = run_training(cfg).unwrap();
    assert_eq!(out.records.len(), 20);
    for (i, r) in out.records.iter().enumerate() {
        assert_eq!(r.episode, i as u32 + 1);
        assert_eq!(r.epsilon, schedule.epsilon_at(r.episode).unwrap());
        assert!(r.steps >= 1 && r.steps <= 30);
        let expected = -0.01 * r.steps as f64 + if r.reached_goal { 1.0 } else { 0.0 };
        assert!((r.env_return - expected).abs() < 1e-9);
        assert!(r.rescue_rate.is_none());
        assert!(r.vat_remain_rate.is_some());
    }
    assert!(out.records.iter().any(|r| r.loss_mean.is_some()));
}

#[test]
fn untrained_greedy_rollout_is_legal() {
    for name in layouts::LAYOUT_NAMES {
        let l = layouts::layout(name).unwrap();
        let net = Network::<f32>::init(NeuronMode::Relu, 99).unwrap();
        let r = greedy_rollout(&net, &l, 100).unwrap();
        assert_eq!(r.actions.len(), r.states.len() - 1);
        assert_eq!(r.stats.steps as usize, r.actions.len());
        assert!(r.stats.steps <= 100);
        assert!(r.stats.reached_goal || r.stats.steps == 100);
        for (w, &a) in r.states.windows(2).zip(&r.actions) {
            let mut prev = w[0].clone();
            prev.done = false;
            assert_eq!(gridworld::step(&prev, a).unwrap().next_state.agent_pos, w[1].agent_pos);
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let base = tiny("BasicVatGoalEnv", 10, 0);
    assert!(Learner::new(TrainConfig { layout: "Nope".into(), ..base.clone() }).is_err());
    assert!(Learner::new(TrainConfig { buffer_capacity: 4, ..base.clone() }).is_err());
    assert!(Learner::new(TrainConfig { epsilon: EpsilonSchedule::new(11), ..base.clone() }).is_err());
    assert!(Learner::new(TrainConfig { gamma: 1.0, ..base }).is_err());
}
