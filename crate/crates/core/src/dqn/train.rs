use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{epsilon_schedule, select_action, DqnPolicy, Learner, QNetwork, ReplayBuffer, Transition};
use crate::adversaries::{choose_action, Policy, RulesPolicy};
use crate::battlemap::{bundled_map, bundled_maps, BattleMap};
use crate::characters::SheetOverrides;
use crate::engine::{apply_action, is_terminal, GameState, Outcome, Team};
use crate::env::{sample_episode, ClassMode, Env, EpisodeConfig};
use crate::rng::{derive_seed, RngStream};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub iterations: usize,
    /// Most env steps collected in one iteration.
    pub horizon: usize,
    pub train_steps_per_iteration: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_final: f64,
    pub epsilon_decay_frames: u64,
    /// Copy online weights to the target network every this many iterations.
    pub target_update_every: usize,
    pub class_mode: ClassMode,
    /// Bundled map names; empty means all of them.
    pub maps: Vec<String>,
    pub max_rounds: u32,
    pub collect: CollectMode,
    pub epsilon_clock: EpsilonClock,
    /// Emit a checkpoint event every this many iterations (0: only at the end).
    pub checkpoint_every: usize,
    /// Replacement sheets for either side.
    pub sheets: SheetOverrides,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            iterations: 1000,
            horizon: 1024,
            train_steps_per_iteration: 2,
            batch_size: 64,
            buffer_capacity: super::DEFAULT_CAPACITY,
            learning_rate: 1e-3,
            gamma: 0.99,
            epsilon_start: super::EPSILON_START,
            epsilon_final: super::EPSILON_FINAL,
            epsilon_decay_frames: super::EPSILON_DECAY_FRAMES,
            target_update_every: 1,
            class_mode: ClassMode::FighterOnly,
            maps: Vec::new(),
            max_rounds: crate::engine::DEFAULT_MAX_ROUNDS,
            checkpoint_every: 0,
            sheets: SheetOverrides::default(),
            collect: CollectMode::Episode,
            epsilon_clock: EpsilonClock::EnvStep,
        }
    }
}

impl TrainConfig {
    /// Exploration rate at a training frame, counted per `epsilon_clock`.
    pub fn epsilon(&self, frame: u64) -> f64 {
        epsilon_schedule(self.epsilon_start, self.epsilon_final, self.epsilon_decay_frames, frame)
    }

    pub fn resolve_maps(&self) -> Result<Vec<Arc<BattleMap>>, String> {
        if self.maps.is_empty() {
            return Ok(bundled_maps());
        }
        self.maps
            .iter()
            .map(|m| bundled_map(m).ok_or_else(|| format!("unknown map {m:?}")))
            .collect()
    }

    pub fn episode_config(&self) -> Result<EpisodeConfig, String> {
        Ok(EpisodeConfig {
            class_mode: self.class_mode,
            maps: self.resolve_maps()?,
            max_rounds: self.max_rounds,
            sheets: self.sheets.clone(),
        })
    }
}

/// How much experience one iteration gathers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CollectMode {
    /// Until the running episode ends, at most `horizon` steps.
    #[default]
    Episode,
    /// Exactly `horizon` steps, across as many episodes as that takes.
    Horizon,
}

/// What counts as one frame of the epsilon schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonClock {
    #[default]
    Iteration,
    EnvStep,
}

/// Chooses the adversary for each training episode.
pub trait AdversarySchedule {
    fn adversary(&mut self, episode: u64) -> Box<dyn Policy>;
}

impl<F: FnMut(u64) -> Box<dyn Policy>> AdversarySchedule for F {
    fn adversary(&mut self, episode: u64) -> Box<dyn Policy> {
        self(episode)
    }
}

/// The rules AI for every episode.
pub fn rules_only(_episode: u64) -> Box<dyn Policy> {
    Box::new(RulesPolicy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub epsilon: f64,
    pub env_steps: usize,
    pub episodes_finished: usize,
    /// Mean reward of the episodes finished this iteration; carries the
    /// previous value forward when none finished.
    pub mean_reward: f64,
    /// Mean pre-step loss of this iteration's train steps.
    pub loss: Option<f64>,
    pub buffer_len: usize,
    pub adversary_errors: u64,
}

pub enum TrainEvent<'a> {
    Iteration(&'a IterationReport),
    Checkpoint(&'a Checkpoint),
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint version {found} is not supported (expected {CHECKPOINT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint has {found} parameters, network needs {expected}")]
    Shape { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// Completed training iterations.
    pub frame: u64,
    pub episodes: u64,
    pub env_steps: u64,
    pub config: TrainConfig,
    pub reward_curve: Vec<f64>,
    pub network: QNetwork,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, CheckpointError> {
        #[derive(Deserialize)]
        struct Probe {
            version: u32,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version { found: probe.version });
        }
        let c: Checkpoint = serde_json::from_str(text)?;
        let expected = QNetwork::layout().total;
        if c.network.params.len() != expected {
            return Err(CheckpointError::Shape {
                found: c.network.params.len(),
                expected,
            });
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        Checkpoint::from_json(&std::fs::read_to_string(path)?)
    }

    /// Greedy policy from these weights.
    pub fn policy(&self, label: impl Into<String>) -> DqnPolicy {
        DqnPolicy::new(Arc::new(self.network.clone()), label)
    }

    /// `iteration,mean_reward` lines with a header.
    pub fn reward_csv(&self) -> String {
        let mut out = String::from("iteration,mean_reward\n");
        for (i, r) in self.reward_curve.iter().enumerate() {
            out.push_str(&format!("{i},{r}\n"));
        }
        out
    }
}

/// Train from fresh weights. Each iteration plays until the current episode
/// ends or `horizon` steps have been collected (an unfinished episode
/// continues in the next iteration), then runs the gradient steps and syncs
/// the target network.
pub fn train(
    config: &TrainConfig,
    schedule: &mut dyn AdversarySchedule,
    on_event: &mut dyn FnMut(TrainEvent<'_>),
) -> Result<Checkpoint, String> {
    let episode_config = config.episode_config()?;
    let mut learner = Learner::new(QNetwork::new(derive_seed(config.seed, 0)), config.learning_rate, config.gamma);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut explore = RngStream::new(derive_seed(config.seed, 1));
    let mut sampler = RngStream::new(derive_seed(config.seed, 2));
    let episode_seeds = derive_seed(config.seed, 3);

    let mut env = Env::new(episode_config, schedule.adversary(0));
    let mut episodes = 0u64;
    let mut env_steps = 0u64;
    let mut episode_reward = 0.0;
    let mut curve = Vec::with_capacity(config.iterations);
    let mut last_mean = 0.0;
    let mut obs = Arc::new(env.observe());
    let mut need_reset = true;

    let checkpoint = |network: &QNetwork, frame: usize, episodes: u64, env_steps: u64, curve: &[f64]| Checkpoint {
        version: CHECKPOINT_VERSION,
        frame: frame as u64,
        episodes,
        env_steps,
        config: config.clone(),
        reward_curve: curve.to_vec(),
        network: network.clone(),
    };

    for iteration in 0..config.iterations {
        let frame = |env_steps: u64| match config.epsilon_clock {
            EpsilonClock::Iteration => iteration as u64,
            EpsilonClock::EnvStep => env_steps,
        };
        let mut epsilon = config.epsilon(frame(env_steps));
        let mut finished = Vec::new();
        let mut steps = 0;
        while steps < config.horizon {
            if need_reset {
                env.set_adversary(schedule.adversary(episodes));
                obs = Arc::new(env.reset(derive_seed(episode_seeds, episodes)));
                episode_reward = 0.0;
                need_reset = false;
                if env.is_done() {
                    // The adversary won before the hero ever acted.
                    finished.push(crate::env::compute_reward(is_terminal(env.state()), env.state().entity(
                        adversary_of(env.state(), env.hero()),
                    )));
                    episodes += 1;
                    need_reset = true;
                    if config.collect == CollectMode::Episode {
                        break;
                    }
                    continue;
                }
            }
            epsilon = config.epsilon(frame(env_steps));
            let index = select_action(&learner.online, &obs, epsilon, &mut explore);
            let action = obs.legal[index];
            let result = env.step(index).expect("selected index is legal");
            steps += 1;
            env_steps += 1;
            episode_reward += result.reward;
            let next = Arc::new(result.observation);
            buffer.push(Transition {
                observation: obs.clone(),
                action,
                reward: result.reward,
                next: next.clone(),
                done: result.done,
            });
            obs = next;
            if result.done {
                finished.push(episode_reward);
                episodes += 1;
                need_reset = true;
                if config.collect == CollectMode::Episode {
                    break;
                }
            }
        }

        let mut losses = Vec::new();
        for _ in 0..config.train_steps_per_iteration {
            if let Some(batch) = buffer.sample(config.batch_size, &mut sampler) {
                losses.push(learner.train_step(&batch));
            }
        }
        if config.target_update_every > 0 && (iteration + 1) % config.target_update_every == 0 {
            learner.sync_target();
        }

        if !finished.is_empty() {
            last_mean = finished.iter().sum::<f64>() / finished.len() as f64;
        }
        curve.push(last_mean);
        let report = IterationReport {
            iteration,
            epsilon,
            env_steps: steps,
            episodes_finished: finished.len(),
            mean_reward: last_mean,
            loss: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
            buffer_len: buffer.len(),
            adversary_errors: env.adversary_errors(),
        };
        on_event(TrainEvent::Iteration(&report));
        if config.checkpoint_every > 0
            && (iteration + 1) % config.checkpoint_every == 0
            && iteration + 1 < config.iterations
        {
            let c = checkpoint(&learner.online, iteration + 1, episodes, env_steps, &curve);
            on_event(TrainEvent::Checkpoint(&c));
        }
    }
    let c = checkpoint(&learner.online, config.iterations, episodes, env_steps, &curve);
    on_event(TrainEvent::Checkpoint(&c));
    Ok(c)
}

fn adversary_of(state: &GameState, hero: crate::engine::EntityId) -> crate::engine::EntityId {
    let team = state.entity(hero).team;
    state
        .entities
        .iter()
        .find(|e| e.team != team)
        .map(|e| e.id)
        .expect("adversary exists")
}

/// Play `fights` duels of `hero` against `enemy` with episodes drawn like
/// training resets. Returns (wins, losses, ties) from the hero's side.
pub fn evaluate(
    hero: &mut dyn Policy,
    enemy: &mut dyn Policy,
    config: &EpisodeConfig,
    fights: u64,
    seed: u64,
) -> (u32, u32, u32) {
    let mut tally = (0, 0, 0);
    for k in 0..fights {
        let fight_seed = derive_seed(seed, k);
        let (map, h, e) = sample_episode(config, fight_seed);
        let mut state = GameState::duel(
            map,
            h,
            e,
            RngStream::new(derive_seed(fight_seed, 1)),
            config.max_rounds,
        );
        hero.reset(derive_seed(fight_seed, 2));
        enemy.reset(derive_seed(fight_seed, 3));
        let mut fallback = RngStream::new(derive_seed(fight_seed, 4));
        while !is_terminal(&state).is_over() {
            let heroes_turn = state.active_entity().map(|e| e.team) == Some(Team::Heroes);
            let policy: &mut dyn Policy = if heroes_turn { &mut *hero } else { &mut *enemy };
            let action = match choose_action(policy, &state) {
                Ok(a) => a,
                Err(_) => {
                    let actions = crate::engine::enumerate_actions(&state);
                    actions[fallback.index(actions.len())]
                }
            };
            apply_action(&mut state, action).expect("enumerated action applies");
        }
        match is_terminal(&state) {
            Outcome::HeroWon => tally.0 += 1,
            Outcome::HeroLost => tally.1 += 1,
            _ => tally.2 += 1,
        }
    }
    tally
}
