//! Line-delimited combat logs and replay.
//!
//! A log is a header record holding the initial state, one record per
//! event, and a final record with the outcome and the final state hash.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{apply_action, is_terminal, CombatEvent, EventKind, GameState, Outcome};
use crate::battlemap::Position;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        version: u32,
        hero_policy: String,
        enemy_policy: String,
        initial: Box<GameState>,
    },
    Event(CombatEvent),
    Final {
        outcome: Outcome,
        rounds: u32,
        state_hash: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombatLog {
    pub hero_policy: String,
    pub enemy_policy: String,
    pub initial: GameState,
    pub events: Vec<CombatEvent>,
    pub outcome: Outcome,
    pub rounds: u32,
    pub state_hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("log is empty")]
    Empty,
    #[error("first record is not a header")]
    MissingHeader,
    #[error("unsupported log version {0}")]
    Version(u32),
    #[error("log is truncated: no final record")]
    Truncated,
    #[error("records after the final record")]
    TrailingRecords,
    #[error("replay diverged at event {index}")]
    Diverged { index: usize },
    #[error("logged action at event {index} was rejected: {reason}")]
    Rejected { index: usize, reason: String },
    #[error("final state hash mismatch: logged {logged}, replayed {replayed}")]
    HashMismatch { logged: String, replayed: String },
}

impl CombatLog {
    pub fn new(hero_policy: &str, enemy_policy: &str, initial: GameState) -> Self {
        Self {
            hero_policy: hero_policy.to_string(),
            enemy_policy: enemy_policy.to_string(),
            initial,
            events: Vec::new(),
            outcome: Outcome::Ongoing,
            rounds: 0,
            state_hash: String::new(),
        }
    }

    /// Record the final state.
    pub fn finish(&mut self, state: &GameState) {
        self.outcome = is_terminal(state);
        self.rounds = state.round.min(state.max_rounds);
        self.state_hash = state.state_hash();
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = LogRecord::Header {
            version: LOG_VERSION,
            hero_policy: self.hero_policy.clone(),
            enemy_policy: self.enemy_policy.clone(),
            initial: Box::new(self.initial.clone()),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for e in &self.events {
            writeln!(out, "{}", serde_json::to_string(&LogRecord::Event(e.clone()))?)?;
        }
        let footer = LogRecord::Final {
            outcome: self.outcome,
            rounds: self.rounds,
            state_hash: self.state_hash.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&footer)?)?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<CombatLog, LogError> {
        let mut log: Option<CombatLog> = None;
        let mut finished = false;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if finished {
                return Err(LogError::TrailingRecords);
            }
            let record: LogRecord =
                serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?;
            match (record, log.as_mut()) {
                (
                    LogRecord::Header {
                        version,
                        hero_policy,
                        enemy_policy,
                        initial,
                    },
                    None,
                ) => {
                    if version != LOG_VERSION {
                        return Err(LogError::Version(version));
                    }
                    log = Some(CombatLog::new(&hero_policy, &enemy_policy, *initial));
                }
                (_, None) => return Err(LogError::MissingHeader),
                (LogRecord::Header { .. }, Some(_)) => return Err(LogError::MissingHeader),
                (LogRecord::Event(e), Some(l)) => l.events.push(e),
                (
                    LogRecord::Final {
                        outcome,
                        rounds,
                        state_hash,
                    },
                    Some(l),
                ) => {
                    l.outcome = outcome;
                    l.rounds = rounds;
                    l.state_hash = state_hash;
                    finished = true;
                }
            }
        }
        let log = log.ok_or(LogError::Empty)?;
        if !finished {
            return Err(LogError::Truncated);
        }
        Ok(log)
    }

    pub fn parse(text: &str) -> Result<CombatLog, LogError> {
        Self::read_jsonl(text.as_bytes())
    }
}

/// State after each logged action.
#[derive(Debug, Clone)]
pub struct Frame {
    /// 1-based turn counter of the acting entity.
    pub turn: u64,
    pub round: u32,
    pub action_text: String,
    pub state: GameState,
}

/// Re-apply every logged action from the initial state, check that the
/// regenerated events and final hash match, and return per-action frames.
pub fn replay(log: &CombatLog) -> Result<Vec<Frame>, LogError> {
    let mut state = log.initial.clone();
    let mut frames = Vec::new();
    let mut index = 0;
    while index < log.events.len() {
        let event = &log.events[index];
        let EventKind::ActionTaken { action, text } = &event.kind else {
            return Err(LogError::Diverged { index });
        };
        let (turn, round) = (state.turn_counter, state.round);
        let produced = apply_action(&mut state, *action).map_err(|e| LogError::Rejected {
            index,
            reason: e.to_string(),
        })?;
        for (k, ev) in produced.iter().enumerate() {
            if log.events.get(index + k) != Some(ev) {
                return Err(LogError::Diverged { index: index + k });
            }
        }
        index += produced.len();
        frames.push(Frame {
            turn,
            round,
            action_text: text.clone(),
            state: state.clone(),
        });
    }
    let replayed = state.state_hash();
    if replayed != log.state_hash {
        return Err(LogError::HashMismatch {
            logged: log.state_hash.clone(),
            replayed,
        });
    }
    Ok(frames)
}

/// Map with every creature shown: `P` heroes, `E` enemies, terrain in
/// prompt glyphs.
pub fn render_omniscient(state: &GameState) -> String {
    let map = &state.map;
    let mut out = String::new();
    for y in 0..map.height as i32 {
        for x in 0..map.width as i32 {
            let p = Position::new(x, y);
            let c = match state.living_at(p) {
                Some(e) if e.team == super::Team::Heroes => 'P',
                Some(_) => 'E',
                None => map.tile(p).render_glyph(),
            };
            out.push(c);
        }
        out.push('\n');
    }
    out
}
