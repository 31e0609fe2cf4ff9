use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, ValueEnum};
use skirmish_core::adversaries::{InertPolicy, Policy, RandomPolicy, RulesPolicy};
use skirmish_core::characters::{load_sheet, CharacterSheet, SheetOverrides};
use skirmish_core::dqn::{train, CollectMode, EpsilonClock, TrainConfig, TrainEvent};
use skirmish_core::env::ClassMode;
use skirmish_core::llm::{assign_adversary, AdversaryKind, MixSchedule};
use skirmish_core::rng::derive_seed;
use skirmish_llm::{ChatClient, LlmConfig, LlmPolicy, Telemetry};

use crate::run::{create_dir, usage, write_file, CmdResult, Failure, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Classes {
    /// Fighter against fighter.
    Fighter,
    /// Fighter, rogue, wizard and cleric drawn per fight.
    Four,
}

impl From<Classes> for ClassMode {
    fn from(c: Classes) -> Self {
        match c {
            Classes::Fighter => ClassMode::FighterOnly,
            Classes::Four => ClassMode::FourClasses,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Adversary {
    /// Rules AI every episode.
    Rules,
    /// Rules AI, with a language model in --llm-fraction of episodes.
    Mixed,
    Random,
    Inert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Clock {
    EnvStep,
    Iteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Collect {
    Episode,
    Horizon,
}

/// Flags override values from --config, which override the defaults shown.
#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML file with training config fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "runs/train")]
    pub out: PathBuf,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training iterations [default: 1000]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Most env steps collected per iteration [default: 1024]
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Gradient steps per iteration [default: 2]
    #[arg(long)]
    pub train_steps: Option<usize>,
    /// Training batch size [default: 64]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Replay buffer capacity [default: 3000]
    #[arg(long)]
    pub buffer: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Discount factor [default: 0.99]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// [default: 1.0]
    #[arg(long)]
    pub epsilon_start: Option<f64>,
    /// [default: 0.01]
    #[arg(long)]
    pub epsilon_final: Option<f64>,
    /// Frames for the linear epsilon decay [default: 1000]
    #[arg(long)]
    pub epsilon_decay_frames: Option<u64>,
    /// What counts as an epsilon frame [default: env-step]
    #[arg(long)]
    pub epsilon_clock: Option<Clock>,
    /// Target network copy every N iterations [default: 1]
    #[arg(long)]
    pub target_update: Option<usize>,
    /// Stop collecting at episode ends, or always fill the horizon [default: episode]
    #[arg(long)]
    pub collect: Option<Collect>,
    /// [default: fighter]
    #[arg(long)]
    pub classes: Option<Classes>,
    /// Comma-separated bundled map names [default: all four]
    #[arg(long, value_delimiter = ',')]
    pub maps: Vec<String>,
    /// Round cap per episode [default: 500]
    #[arg(long)]
    pub max_rounds: Option<u32>,
    /// Also write a checkpoint every N iterations [default: 0, off]
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Character sheet for the learning side
    #[arg(long)]
    pub party: Option<PathBuf>,
    /// Character sheet for the adversary side
    #[arg(long)]
    pub enemy: Option<PathBuf>,
    /// Trajectory generation
    #[arg(long, value_enum, default_value = "rules")]
    pub adversary: Adversary,
    /// Share of mixed-mode episodes played by the language model
    #[arg(long, default_value_t = 0.2)]
    pub llm_fraction: f64,
    /// Chat-completions base URL for mixed mode
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    /// TOML file with endpoint, models, timeout and retries
    #[arg(long)]
    pub llm_config: Option<PathBuf>,
    /// Progress line every N iterations (0: silent)
    #[arg(long, default_value_t = 50)]
    pub progress: usize,
}

pub fn load_sheet_file(path: &Path) -> anyhow::Result<Arc<CharacterSheet>> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    load_sheet(&text)
        .map(Arc::new)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

pub fn sheet_overrides(party: &Option<PathBuf>, enemy: &Option<PathBuf>) -> Result<SheetOverrides, Failure> {
    let load = |p: &Option<PathBuf>| p.as_deref().map(load_sheet_file).transpose().map_err(|e| usage(format!("{e:#}")));
    Ok(SheetOverrides { hero: load(party)?, enemy: load(enemy)? })
}

pub fn llm_config(file: &Option<PathBuf>, endpoint: &Option<String>) -> Result<Option<LlmConfig>, Failure> {
    let base = match file {
        Some(p) => Some(LlmConfig::load(p).map_err(usage)?),
        None => None,
    };
    Ok(match (base, endpoint) {
        (b, Some(url)) => Some(b.unwrap_or_default().with_endpoint(url.clone())),
        (b, None) => b,
    })
}

fn resolve(args: &TrainArgs) -> Result<TrainConfig, Failure> {
    let mut c = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => TrainConfig::default(),
    };
    macro_rules! set {
        ($($flag:ident => $field:ident),* $(,)?) => {
            $(if let Some(v) = args.$flag { c.$field = v.into(); })*
        };
    }
    set!(
        seed => seed,
        iterations => iterations,
        horizon => horizon,
        train_steps => train_steps_per_iteration,
        batch_size => batch_size,
        buffer => buffer_capacity,
        lr => learning_rate,
        gamma => gamma,
        epsilon_start => epsilon_start,
        epsilon_final => epsilon_final,
        epsilon_decay_frames => epsilon_decay_frames,
        target_update => target_update_every,
        max_rounds => max_rounds,
        checkpoint_every => checkpoint_every,
        classes => class_mode,
    );
    if let Some(clock) = args.epsilon_clock {
        c.epsilon_clock = match clock {
            Clock::EnvStep => EpsilonClock::EnvStep,
            Clock::Iteration => EpsilonClock::Iteration,
        };
    }
    if let Some(collect) = args.collect {
        c.collect = match collect {
            Collect::Episode => CollectMode::Episode,
            Collect::Horizon => CollectMode::Horizon,
        };
    }
    if !args.maps.is_empty() {
        c.maps = args.maps.clone();
    }
    let sheets = sheet_overrides(&args.party, &args.enemy)?;
    if sheets.hero.is_some() {
        c.sheets.hero = sheets.hero;
    }
    if sheets.enemy.is_some() {
        c.sheets.enemy = sheets.enemy;
    }
    c.resolve_maps().map_err(usage)?;
    if c.iterations == 0 || c.batch_size == 0 || c.horizon == 0 || c.buffer_capacity < c.batch_size {
        return Err(usage("iterations, horizon and batch size must be positive and the buffer at least one batch"));
    }
    if !(0.0..=1.0).contains(&args.llm_fraction) {
        return Err(usage("--llm-fraction must lie in [0, 1]"));
    }
    Ok(c)
}

pub fn run(args: TrainArgs) -> CmdResult {
    let config = resolve(&args)?;
    let llm = llm_config(&args.llm_config, &args.llm_endpoint)?;
    if args.adversary == Adversary::Mixed && llm.is_none() {
        return Err(usage("--adversary mixed needs --llm-endpoint or --llm-config"));
    }
    create_dir(&args.out)?;
    let telemetry = Telemetry::new();
    let client = llm.map(|c| Arc::new(ChatClient::new(c)));
    let mix = MixSchedule { llm_fraction: args.llm_fraction, seed: derive_seed(config.seed, 7) };
    let adversary = args.adversary;
    let mut schedule = |episode: u64| -> Box<dyn Policy> {
        match adversary {
            Adversary::Rules => Box::new(RulesPolicy),
            Adversary::Random => Box::new(RandomPolicy::new(0)),
            Adversary::Inert => Box::new(InertPolicy),
            Adversary::Mixed => match assign_adversary(episode, &mix) {
                AdversaryKind::Rules => Box::new(RulesPolicy),
                AdversaryKind::Llm => Box::new(LlmPolicy::new(
                    client.clone().expect("checked above"),
                    telemetry.clone(),
                    "llm",
                )),
            },
        }
    };
    let mut manifest_config = serde_json::to_value(&config).map_err(anyhow::Error::from)?;
    manifest_config["adversary"] = format!("{adversary:?}").to_lowercase().into();
    manifest_config["llm_fraction"] = args.llm_fraction.into();
    RunManifest::new("train", config.seed, &manifest_config, &args.out).write()?;

    let ckpt_dir = args.out.join("checkpoints");
    let mut io_error = None;
    let progress = args.progress;
    let mut on_event = |event: TrainEvent| match event {
        TrainEvent::Iteration(r) => {
            if progress > 0 && (r.iteration + 1) % progress == 0 {
                eprintln!(
                    "iteration {:>5}  epsilon {:.3}  reward {:>7.3}  loss {}  buffer {}",
                    r.iteration + 1,
                    r.epsilon,
                    r.mean_reward,
                    r.loss.map_or("-".into(), |l| format!("{l:.4}")),
                    r.buffer_len
                );
            }
        }
        TrainEvent::Checkpoint(c) => {
            let path = ckpt_dir.join(format!("iter-{:05}.json", c.reward_curve.len()));
            if let Err(e) = std::fs::create_dir_all(&ckpt_dir).and_then(|_| c.save(&path).map_err(std::io::Error::other)) {
                io_error.get_or_insert(format!("{}: {e}", path.display()));
            }
        }
    };
    let checkpoint = train(&config, &mut schedule, &mut on_event).map_err(|e| Failure::Runtime(anyhow::anyhow!(e)))?;
    if let Some(e) = io_error {
        return Err(Failure::Runtime(anyhow::anyhow!(e)));
    }
    let path = args.out.join("checkpoint.json");
    checkpoint.save(&path).with_context(|| path.display().to_string())?;
    write_file(&args.out.join("rewards.csv"), &checkpoint.reward_csv())?;
    if !telemetry.is_empty() {
        let path = args.out.join("telemetry.jsonl");
        telemetry.write_jsonl(&path).with_context(|| path.display().to_string())?;
        eprintln!(
            "llm decisions {}  valid replies {:.1}%",
            telemetry.len(),
            100.0 * telemetry.validity_rate().unwrap_or(0.0)
        );
    }
    let n = checkpoint.reward_curve.len();
    let tail = &checkpoint.reward_curve[n.saturating_sub(100)..];
    println!(
        "trained {} iterations, {} env steps, {} episodes; mean reward of last {} iterations {:.3}",
        n,
        checkpoint.env_steps,
        checkpoint.episodes,
        tail.len(),
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    );
    println!("wrote {}", args.out.display());
    Ok(())
}
