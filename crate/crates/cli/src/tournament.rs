use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use skirmish_core::tournament::{
    leaderboard, leaderboard_csv, leaderboard_text, round_robin, FightResult, PolicyKind, PolicyRef, TournamentConfig,
};
use skirmish_llm::LlmFactory;

use crate::run::{create_dir, usage, write_file, CmdResult, Failure, RunManifest};
use crate::train::{llm_config, sheet_overrides, Classes};

#[derive(Debug, Args)]
pub struct TournamentArgs {
    /// TOML roster: [[agent]] tables with id, kind and optional params
    #[arg(long)]
    pub roster: Option<PathBuf>,
    /// Inline roster entry: KIND, ID=KIND or ID=KIND:key=value,...
    #[arg(long = "agent")]
    pub agents: Vec<String>,
    /// Fights per ordered pairing
    #[arg(long, default_value_t = 30)]
    pub fights: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "fighter")]
    pub classes: Classes,
    /// Round cap per fight
    #[arg(long, default_value_t = skirmish_core::engine::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: u32,
    /// Mirrored pairings replay the same fights (exact antisymmetry)
    #[arg(long)]
    pub shared_seeds: bool,
    /// Write one combat log per fight under OUT/logs
    #[arg(long)]
    pub logs: bool,
    /// Character sheet for the hero seat (replaces the class draw)
    #[arg(long)]
    pub party: Option<PathBuf>,
    /// Character sheet for the enemy seat
    #[arg(long)]
    pub enemy: Option<PathBuf>,
    /// Default endpoint for llm agents
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    /// TOML file with endpoint, models, timeout and retries
    #[arg(long)]
    pub llm_config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "runs/tournament")]
    pub out: PathBuf,
}

#[derive(Debug, Deserialize)]
struct RosterFile {
    agent: Vec<PolicyRef>,
}

fn parse_kind(s: &str) -> Result<PolicyKind, Failure> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| usage(format!("unknown agent kind {s:?} (rules, random, inert, dqn_checkpoint, llm)")))
}

/// `rules`, `me=random` or `dqn=dqn_checkpoint:path=ck.json,other=1`.
pub fn parse_agent(spec: &str) -> Result<PolicyRef, Failure> {
    let (head, params) = spec.split_once(':').unwrap_or((spec, ""));
    let (id, kind) = head.split_once('=').unwrap_or((head, head));
    if id.is_empty() {
        return Err(usage(format!("agent {spec:?} has an empty id")));
    }
    let mut p = PolicyRef::new(id, parse_kind(kind)?);
    for kv in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("agent parameter {kv:?} is not key=value")))?;
        p = p.with_param(k, v);
    }
    Ok(p)
}

fn load_roster(path: &Path) -> Result<Vec<PolicyRef>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let file: RosterFile = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(file
        .agent
        .into_iter()
        .map(|mut a| {
            if let Some(p) = a.params.get_mut("path") {
                if Path::new(p.as_str()).is_relative() {
                    *p = base.join(&*p).to_string_lossy().into_owned();
                }
            }
            a
        })
        .collect())
}

#[derive(Serialize)]
struct ManifestConfig<'a> {
    roster: &'a [PolicyRef],
    tournament: &'a TournamentConfig,
}

fn file_safe(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn run(args: TournamentArgs) -> CmdResult {
    let mut roster = match &args.roster {
        Some(p) => load_roster(p)?,
        None => Vec::new(),
    };
    for a in &args.agents {
        roster.push(parse_agent(a)?);
    }
    if roster.len() < 2 {
        return Err(usage("a tournament needs at least two agents (--roster or --agent)"));
    }
    let config = TournamentConfig {
        fights_per_pair: args.fights,
        seed: args.seed,
        class_mode: args.classes.into(),
        max_rounds: args.max_rounds,
        shared_seeds: args.shared_seeds,
        keep_logs: args.logs,
        sheets: sheet_overrides(&args.party, &args.enemy)?,
    };
    let factory = LlmFactory::new(llm_config(&args.llm_config, &args.llm_endpoint)?);
    let matrix = round_robin(&factory, &roster, &config).map_err(|e| usage(e.to_string()))?;

    create_dir(&args.out)?;
    RunManifest::new("tournament", config.seed, &ManifestConfig { roster: &roster, tournament: &config }, &args.out)
        .write()?;
    let rows = leaderboard(&matrix);
    write_file(&args.out.join("matrix.csv"), &matrix.to_csv())?;
    write_file(&args.out.join("matrix.txt"), &matrix.to_text())?;
    write_file(&args.out.join("leaderboard.csv"), &leaderboard_csv(&rows))?;
    write_file(&args.out.join("leaderboard.txt"), &leaderboard_text(&rows))?;

    let mut fights = csv::Writer::from_path(args.out.join("fights.csv")).context("fights.csv")?;
    fights
        .write_record(["agent_a", "agent_b", "fight", "seed", "map", "result", "rounds", "error"])
        .context("fights.csv")?;
    let mut errors = 0;
    for m in &matrix.matches {
        for f in &m.fights {
            let result = match f.result {
                FightResult::Win => "win",
                FightResult::Loss => "loss",
                FightResult::Tie => "tie",
            };
            if let Some(e) = &f.error {
                errors += 1;
                eprintln!("forfeit in {} vs {} fight {}: {e}", m.agent_a, m.agent_b, f.index);
            }
            fights
                .write_record([
                    m.agent_a.as_str(),
                    m.agent_b.as_str(),
                    &f.index.to_string(),
                    &f.seed.to_string(),
                    &f.map,
                    result,
                    &f.rounds.to_string(),
                    f.error.as_deref().unwrap_or(""),
                ])
                .context("fights.csv")?;
        }
        if args.logs {
            let dir = args.out.join("logs");
            create_dir(&dir)?;
            for (f, log) in m.fights.iter().zip(&m.logs) {
                if let Some(log) = log {
                    let name = format!("{}-vs-{}-{:03}.jsonl", file_safe(&m.agent_a), file_safe(&m.agent_b), f.index);
                    write_file(&dir.join(name), &log.to_jsonl())?;
                }
            }
        }
    }
    fights.flush().context("fights.csv")?;
    let telemetry = factory.telemetry();
    if !telemetry.is_empty() {
        let path = args.out.join("telemetry.jsonl");
        telemetry.write_jsonl(&path).with_context(|| path.display().to_string())?;
    }
    print!("{}\n{}", matrix.to_text(), leaderboard_text(&rows));
    if errors > 0 {
        eprintln!("{errors} fights ended by forfeit");
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agent_specs() {
        let a = parse_agent("rules").unwrap();
        assert_eq!((a.id.as_str(), a.kind), ("rules", PolicyKind::Rules));
        let a = parse_agent("me=dqn-checkpoint:path=a.json,x=1").unwrap();
        assert_eq!(a.kind, PolicyKind::DqnCheckpoint);
        assert_eq!(a.params["path"], "a.json");
        assert_eq!(a.params["x"], "1");
        assert!(parse_agent("x=wizard").is_err());
        assert!(parse_agent("x=llm:model").is_err());
    }
}
