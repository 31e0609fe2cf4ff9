//! Deep Q-learning over the environment's legal-action menu.

mod network;
mod replay;
mod train;

pub use network::{Adam, Block, Layout, QNetwork, StateActs, CONCAT, CONV_OUT, EMBED_DIMS, EMBED_VOCAB, HIDDEN};
pub use replay::{ReplayBuffer, Transition, DEFAULT_CAPACITY};
pub use train::{
    evaluate, rules_only, train, AdversarySchedule, CollectMode, EpsilonClock, Checkpoint, CheckpointError, IterationReport, TrainConfig, TrainEvent,
    CHECKPOINT_VERSION,
};

use std::sync::Arc;

use crate::adversaries::{Policy, PolicyError};
use crate::engine::{Action, GameState};
use crate::env::{encode_action, encode_observation, Observation};
use crate::rng::RngStream;

pub const EPSILON_START: f64 = 1.0;
pub const EPSILON_FINAL: f64 = 0.01;
pub const EPSILON_DECAY_FRAMES: u64 = 1000;

/// Linear decay from 1.0 to 0.01 over 1000 frames, flat afterwards.
pub fn epsilon_at(frame: u64) -> f64 {
    epsilon_schedule(EPSILON_START, EPSILON_FINAL, EPSILON_DECAY_FRAMES, frame)
}

pub fn epsilon_schedule(start: f64, end: f64, frames: u64, frame: u64) -> f64 {
    if frame >= frames {
        return end;
    }
    let t = (frame.min(frames)) as f64 / frames as f64;
    (start - (start - end) * t).max(end.min(start))
}

/// Lowest index among the maxima.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy over `obs.legal`, which must be nonempty.
pub fn select_action(network: &QNetwork, obs: &Observation, epsilon: f64, rng: &mut RngStream) -> usize {
    assert!(!obs.legal.is_empty(), "select_action needs at least one legal action");
    if rng.unit() < epsilon {
        return rng.index(obs.legal.len());
    }
    argmax(&network.q_values(obs))
}

/// Bellman targets: `r` for terminal transitions, otherwise
/// `r + gamma * max_a' Q_target(s', a')`.
pub fn td_target(batch: &[&Transition], target: &QNetwork, gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                t.reward
            } else {
                t.reward + gamma * target.max_q(&t.next).unwrap_or(0.0)
            }
        })
        .collect()
}

/// Mean squared TD error of `network` against fixed targets.
pub fn td_loss(network: &QNetwork, batch: &[&Transition], targets: &[f64]) -> f64 {
    let sum: f64 = batch
        .iter()
        .zip(targets)
        .map(|(t, y)| (network.q_value(&t.observation, &t.action) - y).powi(2))
        .sum();
    sum / batch.len() as f64
}

/// One optimizer step on the mean squared TD error. Returns the loss before
/// the step.
pub fn train_step(
    network: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
    optimizer: &mut Adam,
) -> f64 {
    let targets = td_target(batch, target, gamma);
    let mut grad = vec![0.0; network.parameter_count()];
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(&targets) {
        // The forward pass is repeated inside the gradient call; only the
        // residual sign and size are needed up front.
        let q = network.q_value(&t.observation, &t.action);
        let err = q - y;
        loss += err * err;
        network.accumulate_gradient(&t.observation, &t.action, 2.0 * err / n, &mut grad);
    }
    optimizer.step(&mut network.params, &grad);
    loss / n
}

/// Online and target networks with their optimizer.
#[derive(Debug, Clone)]
pub struct Learner {
    pub online: QNetwork,
    pub target: QNetwork,
    pub optimizer: Adam,
    pub gamma: f64,
}

impl Learner {
    pub fn new(network: QNetwork, learning_rate: f64, gamma: f64) -> Learner {
        Learner {
            optimizer: Adam::new(network.parameter_count(), learning_rate),
            target: network.clone(),
            online: network,
            gamma,
        }
    }

    pub fn train_step(&mut self, batch: &[&Transition]) -> f64 {
        train_step(&mut self.online, &self.target, batch, self.gamma, &mut self.optimizer)
    }

    pub fn sync_target(&mut self) {
        self.target.params.clone_from(&self.online.params);
    }
}

/// Greedy (or epsilon-greedy) play from a fixed network.
#[derive(Debug, Clone)]
pub struct DqnPolicy {
    network: Arc<QNetwork>,
    epsilon: f64,
    rng: RngStream,
    label: String,
}

impl DqnPolicy {
    pub fn new(network: Arc<QNetwork>, label: impl Into<String>) -> DqnPolicy {
        DqnPolicy {
            network,
            epsilon: 0.0,
            rng: RngStream::new(0),
            label: label.into(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> DqnPolicy {
        self.epsilon = epsilon;
        self
    }

    pub fn network(&self) -> &QNetwork {
        &self.network
    }
}

impl Policy for DqnPolicy {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn choose(&mut self, state: &GameState, actions: &[Action]) -> Result<usize, PolicyError> {
        let me = state
            .active()
            .ok_or_else(|| PolicyError("no active entity".into()))?;
        let mut obs = encode_observation(state, me);
        obs.legal = actions.iter().map(|a| encode_action(state, a)).collect();
        Ok(select_action(&self.network, &obs, self.epsilon, &mut self.rng))
    }

    fn reset(&mut self, seed: u64) {
        self.rng = RngStream::new(seed);
    }
}

#[cfg(test)]
mod tests;
