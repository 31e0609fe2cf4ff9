//! Text interface for language-model adversaries: prompt rendering, reply
//! parsing, model routing and the rules/LLM episode mix. Transport lives in
//! the `skirmish-llm` crate.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::battlemap::render_ascii;
use crate::engine::{enumerate_actions, Action, EntityId, EntityState, GameState};
use crate::rng::{derive_seed, RngStream};

const LEGEND: &str = "\
areas with no characters are represented
by a dot (.)
the hero character is represented by
a (P)
the enemy character is represented by
an (E)
Allies or Party Members are represented by an (A)
Neutral characters are represented by
a question mark (?)
areas outside of the map are represented by a hash (_),
you
cannot move to areas with _
areas with obstacles are represented by an asterisk (*)
areas with a barrel are represented by an (o).
These provide half-cover if right behind it and
attacks are comming from the other side.
areas with water are represented by a tilde (~) and
are difficult terrain
areas that the player can't see are just blanks/space
Each tile of the map is 5ft by 5ft.
";

const ANSWER_FORMAT: &str = "\
Please choose the number corresponding to the action
you would like to take.
Provide your answer using the format, starting with
the desired number choice, followed by the
colon and the action.
1: attack enemy with ranged weapon
Just provide the action choice, no need to explain.
";

/// The glyph legend block, one line per legend line.
pub fn legend() -> &'static str {
    LEGEND
}

pub fn answer_format() -> &'static str {
    ANSWER_FORMAT
}

/// Format a float the way a one-element numpy array prints: up to eight
/// decimals, trailing zeros dropped, the point kept (`[100.]`).
pub fn numpy_float(x: f64) -> String {
    let s = format!("{x:.8}");
    let s = s.trim_end_matches('0');
    format!("[{s}]")
}

fn conditions_line(label: &str, e: &EntityState) -> String {
    let names = e.conditions.names();
    if names.is_empty() {
        format!("{label}:")
    } else {
        format!("{label}: {}", names.join(", "))
    }
}

/// The full prompt shown to the model whose turn it is.
pub fn build_prompt(state: &GameState, pov: EntityId) -> String {
    let me = state.entity(pov);
    let enemy = state
        .hostiles_of(pov)
        .min_by_key(|e| (me.position.chebyshev(e.position), e.id))
        .or_else(|| state.entities.iter().find(|e| e.team != me.team))
        .expect("a duel has an enemy");
    let mut p = String::new();
    p.push_str("We are playing a game of Dungeons and\nDragons\n");
    p.push_str("5th Edition. It is current your turn and\nyou play \n");
    p.push_str(&format!(
        "as a hero character denoted by P\n(a level {} {}).\n",
        me.sheet.level,
        me.class().name()
    ));
    p.push_str(&format!(
        "And you have an enemy donoted\nby E (a level {} {})\nwhich you must defeat. \n",
        enemy.sheet.level,
        enemy.class().name()
    ));
    p.push_str(&format!(
        "Your health is at {}%\nspecifically {}/{} \n",
        numpy_float(me.health_percent()),
        me.hp,
        me.sheet.max_hp
    ));
    p.push_str(&format!("Your Enemies health is at {}%\n", numpy_float(enemy.health_percent())));
    p.push_str(&conditions_line("Your current conditions are", me));
    p.push('\n');
    p.push_str(&conditions_line("Your enemies current conditions are", enemy));
    p.push('\n');
    p.push_str("You have the following available actions\nand movement available:\n\n");
    p.push_str(&format!("Available movement: [{}]ft\n", me.economy.movement_left));
    p.push_str(&format!("Available actions: {}\n", me.economy.actions));
    p.push_str(&format!("Bonus actions: {}\n", me.economy.bonus));
    p.push_str(&format!("Reactions: {}\n\n", me.economy.reaction));
    p.push_str("Here is a rough sketch of the map that\nconsiders line of sight to the enemy.\nHere is the map:\n");
    p.push_str(&render_ascii(&state.map, pov, state));
    p.push_str(LEGEND);
    p.push_str("\nHere are the available actions you can take,\nplease choose the number corresponding to the action:\n");
    for (i, a) in enumerate_actions(state).iter().enumerate() {
        p.push_str(&format!("{i}: {}\n", a.describe(state)));
    }
    p.push('\n');
    p.push_str(ANSWER_FORMAT);
    p
}

fn patterns() -> &'static [Regex; 3] {
    static P: OnceLock<[Regex; 3]> = OnceLock::new();
    P.get_or_init(|| {
        [
            Regex::new(r#"^\{\s*["']action["']\s*:\s*["']?(\d+)["']?\s*\}$"#).unwrap(),
            Regex::new(r"^(\d+)\s*:").unwrap(),
            Regex::new(r"^(\d+)\.?$").unwrap(),
        ]
    })
}

/// Menu index from a model reply: `N: text`, a bare `N`, or
/// `{"action": N}` (single quotes accepted). `None` means fall back.
pub fn parse_response(text: &str, menu_size: usize) -> Option<usize> {
    let text = text.trim();
    let n: usize = patterns()
        .iter()
        .find_map(|re| re.captures(text))
        .and_then(|c| c[1].parse().ok())?;
    (n < menu_size).then_some(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Primary,
    Secondary,
}

/// Whether one menu entry counts as a major decision.
pub fn is_major(action: &Action) -> bool {
    action.uses_action() || matches!(action, Action::Prone | Action::ActionSurge)
}

/// A decision goes to the primary model when any entry on the menu is major.
pub fn route(actions: &[Action]) -> Route {
    if actions.iter().any(is_major) {
        Route::Primary
    } else {
        Route::Secondary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    Rules,
    Llm,
}

/// Per-episode choice between the rules AI and the language model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixSchedule {
    pub llm_fraction: f64,
    pub seed: u64,
}

impl MixSchedule {
    pub fn rules_only(seed: u64) -> MixSchedule {
        MixSchedule { llm_fraction: 0.0, seed }
    }

    pub fn mixed(seed: u64) -> MixSchedule {
        MixSchedule { llm_fraction: 0.2, seed }
    }
}

/// Deterministic in `(schedule.seed, episode)` regardless of call order.
pub fn assign_adversary(episode: u64, schedule: &MixSchedule) -> AdversaryKind {
    let mut rng = RngStream::new(derive_seed(schedule.seed, episode));
    if rng.unit() < schedule.llm_fraction {
        AdversaryKind::Llm
    } else {
        AdversaryKind::Rules
    }
}
