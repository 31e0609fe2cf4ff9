use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use skirmish_core::engine::log::{render_omniscient, replay, CombatLog};

use crate::run::{CmdResult, Failure};

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Combat log (.jsonl) written by `tournament --logs`
    pub log: PathBuf,
    /// Render only the state at the end of this turn
    #[arg(long)]
    pub turn: Option<u64>,
    /// Verify without printing frames
    #[arg(long)]
    pub quiet: bool,
}

pub fn run(args: ReplayArgs) -> CmdResult {
    let runtime = |e: String| Failure::Runtime(anyhow::anyhow!("{}: {e}", args.log.display()));
    let file = std::fs::File::open(&args.log).map_err(|e| runtime(e.to_string()))?;
    let log = CombatLog::read_jsonl(BufReader::new(file)).map_err(|e| runtime(e.to_string()))?;
    let frames = replay(&log).map_err(|e| runtime(format!("corrupt log: {e}")))?;
    if let Some(turn) = args.turn {
        let frame = frames
            .iter()
            .rev()
            .find(|f| f.turn == turn)
            .ok_or_else(|| runtime(format!("no turn {turn}; the fight has {} turns", frames.last().map_or(0, |f| f.turn))))?;
        println!("turn {} (round {}): {}", frame.turn, frame.round, frame.action_text);
        print!("{}", render_omniscient(&frame.state));
        return Ok(());
    }
    if !args.quiet {
        println!("{} (P) vs {} (E)", log.hero_policy, log.enemy_policy);
        print!("{}", render_omniscient(&log.initial));
        for f in &frames {
            println!("\nturn {} (round {}): {}", f.turn, f.round, f.action_text);
            print!("{}", render_omniscient(&f.state));
        }
        println!();
    }
    println!(
        "{:?} after {} rounds, {} actions; final hash {} verified",
        log.outcome,
        log.rounds,
        frames.len(),
        log.state_hash
    );
    Ok(())
}
