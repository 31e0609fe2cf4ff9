use std::sync::Arc;

use super::*;
use crate::adversaries::RandomPolicy;
use crate::battlemap::bundled_map;
use crate::env::{default_env, encode_observation, ClassMode, Env, EpisodeConfig};
use crate::fixtures::{random_state, rogue_vs_wizard};

fn probe_observation(seed: u64) -> Observation {
    let s = random_state(seed, 40);
    encode_observation(&s, s.active().unwrap())
}

fn rollout(seed: u64, steps: usize) -> ReplayBuffer {
    let mut env = default_env(seed);
    let mut rng = RngStream::new(seed);
    let mut buffer = ReplayBuffer::new(DEFAULT_CAPACITY);
    let mut obs = Arc::new(env.reset(seed));
    let mut episode = 0;
    for _ in 0..steps {
        let i = rng.index(obs.legal.len());
        let r = env.step(i).unwrap();
        let next = Arc::new(r.observation);
        buffer.push(Transition {
            observation: obs.clone(),
            action: obs.legal[i],
            reward: r.reward,
            next: next.clone(),
            done: r.done,
        });
        obs = next;
        if r.done {
            episode += 1;
            obs = Arc::new(env.reset(seed + episode));
        }
    }
    buffer
}

#[test]
fn head_width_and_size() {
    assert_eq!(CONCAT, 269);
    let n = QNetwork::new(0).parameter_count();
    assert_eq!(n, QNetwork::layout().total);
    assert!(n < 100_000, "{n} parameters");
}

#[test]
fn zero_weights_give_zero_q() {
    let net = QNetwork::zeros();
    for seed in 0..5 {
        let obs = probe_observation(seed);
        for e in &obs.legal {
            assert_eq!(net.q_value(&obs, e), 0.0);
        }
    }
}

#[test]
fn q_is_deterministic() {
    let a = QNetwork::new(11);
    let b = QNetwork::new(11);
    assert_eq!(a, b);
    let obs = probe_observation(3);
    assert_eq!(a.q_values(&obs), b.q_values(&obs));
    assert_eq!(a.q_values(&obs), a.q_values(&obs));
    assert_ne!(QNetwork::new(12), a);
}

#[test]
#[should_panic(expected = "outside vocabulary")]
fn vocabulary_overflow_panics() {
    let net = QNetwork::new(0);
    let obs = probe_observation(0);
    let mut e = obs.legal[0];
    e.weapon_type = 6;
    net.q_value(&obs, &e);
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

fn numeric_gradient(net: &QNetwork, obs: &Observation, enc: &ActionEncoding, i: usize) -> f64 {
    let h = 1e-6;
    let mut plus = net.clone();
    plus.params[i] += h;
    let mut minus = net.clone();
    minus.params[i] -= h;
    (plus.q_value(obs, enc) - minus.q_value(obs, enc)) / (2.0 * h)
}

use crate::env::ActionEncoding;

#[test]
fn gradients_match_finite_differences_on_random_coordinates() {
    let net = QNetwork::new(5);
    let obs = probe_observation(8);
    let enc = obs.legal[obs.legal.len() / 2];
    let mut grad = vec![0.0; net.parameter_count()];
    net.accumulate_gradient(&obs, &enc, 1.0, &mut grad);
    let mut rng = RngStream::new(99);
    for _ in 0..20 {
        let i = rng.index(grad.len());
        let num = numeric_gradient(&net, &obs, &enc, i);
        assert!(relative_error(grad[i], num) < 1e-4, "coord {i}: analytic {} numeric {num}", grad[i]);
    }
}

#[test]
fn gradients_match_finite_differences_on_every_layer() {
    let net = QNetwork::new(21);
    let layout = QNetwork::layout();
    let mut rng = RngStream::new(4);
    for seed in 0..3 {
        let obs = probe_observation(seed);
        let enc = obs.legal[rng.index(obs.legal.len())];
        let mut grad = vec![0.0; net.parameter_count()];
        net.accumulate_gradient(&obs, &enc, 1.0, &mut grad);
        for (name, block) in layout.named_blocks() {
            // Prefer coordinates with a nonzero gradient so each check has teeth.
            let live: Vec<usize> = (block.offset..block.offset + block.len).filter(|&i| grad[i] != 0.0).collect();
            assert!(!live.is_empty() || name.starts_with("embed"), "{name} has no live gradient");
            for _ in 0..3 {
                let i = if live.is_empty() {
                    block.offset + rng.index(block.len)
                } else {
                    live[rng.index(live.len())]
                };
                let num = numeric_gradient(&net, &obs, &enc, i);
                assert!(relative_error(grad[i], num) < 1e-4, "{name}[{}]: {} vs {num}", i - block.offset, grad[i]);
            }
        }
    }
}

#[test]
fn epsilon_schedule_points() {
    assert_eq!(epsilon_at(0), 1.0);
    assert!((epsilon_at(500) - 0.505).abs() < 1e-12);
    assert_eq!(epsilon_at(1000), 0.01);
    assert_eq!(epsilon_at(5000), 0.01);
    for f in 0..1100 {
        assert!(epsilon_at(f + 1) <= epsilon_at(f));
    }
}

#[test]
fn full_exploration_is_uniform() {
    let net = QNetwork::new(0);
    let obs = encode_observation(&rogue_vs_wizard(), rogue_vs_wizard().active().unwrap());
    let n = obs.legal.len();
    let mut counts = vec![0u32; n];
    let mut rng = RngStream::new(3);
    let draws = 10_000;
    for _ in 0..draws {
        counts[select_action(&net, &obs, 1.0, &mut rng)] += 1;
    }
    let expected = draws as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert_eq!(n, 16);
    // 15 degrees of freedom, p = 0.01
    assert!(chi2 < 30.58, "chi2 {chi2}");
}

#[test]
fn greedy_picks_the_strict_maximum() {
    let obs = encode_observation(&rogue_vs_wizard(), rogue_vs_wizard().active().unwrap());
    let chosen = obs.legal[3];
    let layout = QNetwork::layout();
    let mut net = QNetwork::zeros();
    // Hidden unit 0 counts how many fields match action 3; every other
    // action differs in at least one field.
    let fields = [
        chosen.action_type,
        chosen.binary_action,
        chosen.binary_subtype,
        chosen.weapon_type,
        chosen.entity_type,
        chosen.terrain_type,
    ];
    let mut column = CONV_OUT;
    for (i, &id) in fields.iter().enumerate() {
        net.params[layout.embed[i].offset + id as usize * EMBED_DIMS[i]] = 1.0;
        net.params[layout.fc_w[0].offset + column] = 1.0;
        column += EMBED_DIMS[i];
    }
    net.params[layout.fc_w[1].offset] = 1.0;
    net.params[layout.fc_w[2].offset] = 1.0;
    net.params[layout.fc_w[3].offset] = 1.0;
    let q = net.q_values(&obs);
    assert_eq!(q[3], 6.0);
    assert!(q.iter().enumerate().all(|(i, v)| i == 3 || *v < 6.0), "{q:?}");
    let mut rng = RngStream::new(0);
    for _ in 0..100 {
        assert_eq!(select_action(&net, &obs, 0.0, &mut rng), 3);
    }
}

#[test]
fn ties_go_to_the_lowest_index() {
    let obs = probe_observation(2);
    let mut rng = RngStream::new(0);
    assert_eq!(select_action(&QNetwork::zeros(), &obs, 0.0, &mut rng), 0);
    assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
}

fn constant_network(q: f64) -> QNetwork {
    let mut net = QNetwork::zeros();
    net.params[QNetwork::layout().fc_b[3].offset] = q;
    net
}

fn transition(obs: &Arc<Observation>, reward: f64, done: bool) -> Transition {
    Transition {
        observation: obs.clone(),
        action: obs.legal[0],
        reward,
        next: obs.clone(),
        done,
    }
}

#[test]
fn td_target_examples() {
    let obs = Arc::new(probe_observation(1));
    let terminal = transition(&obs, 10.0, true);
    let step = transition(&obs, 0.0, false);
    let t = td_target(&[&terminal, &step], &constant_network(2.0), 0.99);
    assert_eq!(t[0], 10.0);
    assert!((t[1] - 1.98).abs() < 1e-12);
}

#[test]
fn td_target_matches_scalar_oracle() {
    let target = QNetwork::new(77);
    let a = Arc::new(probe_observation(10));
    let b = Arc::new(probe_observation(11));
    let c = Arc::new(probe_observation(12));
    let batch = [
        Transition {
            observation: a.clone(),
            action: a.legal[0],
            reward: 0.0,
            next: b.clone(),
            done: false,
        },
        Transition {
            observation: b.clone(),
            action: b.legal[1],
            reward: -3.5,
            next: c.clone(),
            done: false,
        },
        Transition {
            observation: c.clone(),
            action: c.legal[0],
            reward: 10.0,
            next: a.clone(),
            done: true,
        },
    ];
    let refs: Vec<&Transition> = batch.iter().collect();
    let got = td_target(&refs, &target, 0.99);
    let oracle = |t: &Transition| {
        if t.done {
            return t.reward;
        }
        let mut best = f64::NEG_INFINITY;
        for e in &t.next.legal {
            best = best.max(target.q_value(&t.next, e));
        }
        t.reward + 0.99 * best
    };
    for (g, t) in got.iter().zip(&batch) {
        assert!((g - oracle(t)).abs() < 1e-6);
    }
    assert_eq!(got[2], 10.0);
}

#[test]
fn fixed_point_leaves_weights_alone() {
    let net = QNetwork::new(3);
    let obs = Arc::new(probe_observation(4));
    let q = net.q_value(&obs, &obs.legal[0]);
    let t = transition(&obs, q, true);
    let batch: Vec<&Transition> = (0..64).map(|_| &t).collect();
    let mut learner = Learner::new(net.clone(), 1e-3, 0.99);
    let loss = learner.train_step(&batch);
    assert!(loss < 1e-20, "{loss}");
    for (a, b) in learner.online.params.iter().zip(&net.params) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn single_transition_overfits() {
    let obs = Arc::new(probe_observation(6));
    let t = transition(&obs, 5.0, true);
    let batch = [&t];
    let mut learner = Learner::new(QNetwork::new(8), 1e-3, 0.99);
    let mut loss = f64::INFINITY;
    for _ in 0..500 {
        loss = learner.train_step(&batch);
    }
    let after = td_loss(&learner.online, &batch, &[5.0]);
    assert!(loss < 1e-3 && after < 1e-3, "loss {loss} after {after}");
}

#[test]
fn loss_falls_on_a_frozen_buffer() {
    let mut deltas = Vec::new();
    for seed in 0..5 {
        let buffer = rollout(seed, 600);
        let mut learner = Learner::new(QNetwork::new(seed), 1e-3, 0.99);
        let mut rng = RngStream::new(seed);
        let losses: Vec<f64> = (0..100)
            .map(|_| learner.train_step(&buffer.sample(64, &mut rng).unwrap()))
            .collect();
        let head: f64 = losses[..10].iter().sum::<f64>() / 10.0;
        let tail: f64 = losses[90..].iter().sum::<f64>() / 10.0;
        deltas.push(tail - head);
    }
    deltas.sort_by(f64::total_cmp);
    assert!(deltas[2] <= 0.0, "{deltas:?}");
}

#[test]
fn sync_copies_online_into_target() {
    let buffer = rollout(1, 200);
    let mut learner = Learner::new(QNetwork::new(1), 1e-3, 0.99);
    let mut rng = RngStream::new(0);
    learner.train_step(&buffer.sample(64, &mut rng).unwrap());
    assert_ne!(learner.online, learner.target);
    learner.sync_target();
    assert_eq!(learner.online, learner.target);
}

fn short_config(iterations: usize) -> TrainConfig {
    TrainConfig {
        iterations,
        maps: vec!["plain".into()],
        max_rounds: 30,
        ..TrainConfig::default()
    }
}

#[test]
fn dry_run_writes_checkpoint_and_curve() {
    let config = short_config(10);
    let mut seen = 0;
    let mut random = |e: u64| -> Box<dyn crate::adversaries::Policy> { Box::new(RandomPolicy::new(e)) };
    let c = train(&config, &mut random, &mut |ev| {
        if let TrainEvent::Iteration(r) = ev {
            assert_eq!(r.iteration, seen);
            seen += 1;
        }
    })
    .unwrap();
    assert_eq!(seen, 10);
    assert_eq!(c.reward_curve.len(), 10);
    assert_eq!(c.frame, 10);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    c.save(&path).unwrap();
    assert!(path.exists());
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, c);
    assert_eq!(c.reward_csv().lines().count(), 11);
}

#[test]
fn training_is_deterministic() {
    let config = short_config(6);
    let run = || train(&config, &mut rules_only, &mut |_| {}).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn checkpoint_round_trip_preserves_q() {
    let mut c = train(&short_config(3), &mut rules_only, &mut |_| {}).unwrap();
    c.network = QNetwork::new(41);
    let back = Checkpoint::from_json(&c.to_json()).unwrap();
    let mut probes = 0;
    let mut seed = 0;
    while probes < 64 {
        let obs = probe_observation(seed);
        seed += 1;
        for e in obs.legal.iter().take(64 - probes) {
            assert_eq!(c.network.q_value(&obs, e).to_bits(), back.network.q_value(&obs, e).to_bits());
            probes += 1;
        }
    }
}

#[test]
fn checkpoint_rejects_other_versions_and_shapes() {
    let mut c = train(&short_config(1), &mut rules_only, &mut |_| {}).unwrap();
    c.version = 99;
    assert!(matches!(Checkpoint::from_json(&c.to_json()), Err(CheckpointError::Version { found: 99 })));
    c.version = CHECKPOINT_VERSION;
    c.network.params.pop();
    assert!(matches!(Checkpoint::from_json(&c.to_json()), Err(CheckpointError::Shape { .. })));
    assert!(Checkpoint::from_json("{").is_err());
}

#[test]
fn dqn_policy_picks_legal_moves() {
    let mut p = DqnPolicy::new(Arc::new(QNetwork::new(2)), "dqn");
    let config = EpisodeConfig {
        class_mode: ClassMode::FourClasses,
        maps: vec![bundled_map("plain").unwrap()],
        max_rounds: 10,
        ..EpisodeConfig::default()
    };
    let mut env = Env::new(config, Box::new(RandomPolicy::new(0)));
    env.reset(4);
    let actions = env.legal_actions();
    let i = p.choose(env.state(), &actions).unwrap();
    assert!(i < actions.len());
}
