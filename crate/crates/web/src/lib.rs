//! Browser bindings for the static demo page in `www/`: line-of-sight and
//! movement overlays on the bundled maps, and a fight you can step through
//! or play as the hero.

use std::sync::Arc;

use serde::Serialize;
use skirmish_core::adversaries::{InertPolicy, Policy, RandomPolicy, RulesPolicy};
use skirmish_core::battlemap::{bundled_map, bundled_maps, line_of_sight, movement_costs, BattleMap, Position, TerrainTile, Visibility};
use skirmish_core::characters::{bundled, ClassTag};
use skirmish_core::dqn::Checkpoint;
use skirmish_core::engine::{apply_action, enumerate_actions, is_terminal, GameState, Outcome, Team, DEFAULT_MAX_ROUNDS};
use skirmish_core::llm::build_prompt;
use skirmish_core::rng::{derive_seed, RngStream};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub fn map_names() -> Vec<String> {
    bundled_maps().iter().map(|m| m.name.clone()).collect()
}

#[wasm_bindgen]
pub fn class_names() -> Vec<String> {
    ClassTag::ALL.iter().map(|c| c.name().to_string()).collect()
}

fn class_by_name(name: &str) -> Result<ClassTag, String> {
    ClassTag::ALL
        .into_iter()
        .find(|c| c.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| format!("unknown class {name:?}"))
}

fn policy_by_name(name: &str, seed: u64) -> Result<Option<Box<dyn Policy>>, String> {
    Ok(match name {
        "human" => None,
        "rules" => Some(Box::new(RulesPolicy)),
        "random" => Some(Box::new(RandomPolicy::new(seed))),
        "inert" => Some(Box::new(InertPolicy)),
        _ => return Err(format!("unknown policy {name:?}")),
    })
}

#[derive(Serialize)]
struct EntityView<'a> {
    id: u32,
    team: &'static str,
    name: &'a str,
    class: &'static str,
    x: i32,
    y: i32,
    hp: u32,
    max_hp: u32,
    prone: bool,
    dodging: bool,
    active: bool,
}

/// One duel. `None` in a policy slot means the page picks that side's
/// actions through [`Fight::choose`].
#[wasm_bindgen]
pub struct Fight {
    state: GameState,
    hero: Option<Box<dyn Policy>>,
    enemy: Option<Box<dyn Policy>>,
    seed: u64,
}

#[wasm_bindgen]
impl Fight {
    #[wasm_bindgen(constructor)]
    pub fn new(map: &str, hero_class: &str, enemy_class: &str, hero: &str, enemy: &str, seed: u64) -> Result<Fight, String> {
        let map = bundled_map(map).ok_or_else(|| format!("unknown map {map:?}"))?;
        let state = GameState::duel(
            map,
            bundled(class_by_name(hero_class)?),
            bundled(class_by_name(enemy_class)?),
            RngStream::new(derive_seed(seed, 1)),
            DEFAULT_MAX_ROUNDS,
        );
        let mut fight = Fight {
            state,
            hero: policy_by_name(hero, derive_seed(seed, 2))?,
            enemy: policy_by_name(enemy, derive_seed(seed, 3))?,
            seed,
        };
        fight.reset_policies();
        Ok(fight)
    }

    fn reset_policies(&mut self) {
        if let Some(p) = self.hero.as_mut() {
            p.reset(derive_seed(self.seed, 2));
        }
        if let Some(p) = self.enemy.as_mut() {
            p.reset(derive_seed(self.seed, 3));
        }
    }

    /// Hand the hero to a trained network (checkpoint JSON text).
    pub fn load_checkpoint(&mut self, json: &str) -> Result<(), String> {
        let c = Checkpoint::from_json(json).map_err(|e| e.to_string())?;
        self.hero = Some(Box::new(c.policy("dqn")));
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.state.map.width
    }

    pub fn height(&self) -> usize {
        self.state.map.height
    }

    pub fn map_name(&self) -> String {
        self.state.map.name.clone()
    }

    /// Terrain glyphs, one line per row.
    pub fn terrain(&self) -> String {
        self.state.map.render_terrain()
    }

    pub fn entities_json(&self) -> String {
        let active = self.state.active();
        let view: Vec<EntityView> = self
            .state
            .entities
            .iter()
            .map(|e| EntityView {
                id: e.id.0,
                team: if e.team == Team::Heroes { "hero" } else { "enemy" },
                name: &e.sheet.name,
                class: e.class().name(),
                x: e.position.x,
                y: e.position.y,
                hp: e.hp,
                max_hp: e.sheet.max_hp,
                prone: e.conditions.prone,
                dodging: e.conditions.dodging,
                active: Some(e.id) == active,
            })
            .collect();
        serde_json::to_string(&view).expect("entities serialize")
    }

    /// Per tile, row-major: 0 clear, 1 half cover, 2 blocked, 3 off the map.
    pub fn visibility(&self, x: i32, y: i32) -> Vec<u8> {
        visibility_grid(&self.state.map, Position::new(x, y))
    }

    /// Per tile, row-major: movement cost in feet to reach it from (x, y)
    /// within `feet`, or 255 when out of reach. Other creatures block.
    pub fn reachable(&self, x: i32, y: i32, feet: u32) -> Vec<u8> {
        let from = Position::new(x, y);
        let blocked: Vec<Position> = self.state.living().map(|e| e.position).filter(|&p| p != from).collect();
        let costs = movement_costs(&self.state.map, from, feet, &blocked, 1);
        self.state
            .map
            .positions()
            .map(|p| costs.get(&p).map_or(u8::MAX, |&c| c.min(254) as u8))
            .collect()
    }

    pub fn round(&self) -> u32 {
        self.state.round
    }

    pub fn is_over(&self) -> bool {
        is_terminal(&self.state).is_over()
    }

    /// "hero won", "hero lost", "tie" or "" while the fight runs.
    pub fn outcome(&self) -> String {
        match is_terminal(&self.state) {
            Outcome::HeroWon => "hero won",
            Outcome::HeroLost => "hero lost",
            Outcome::Tie => "tie",
            Outcome::Ongoing => "",
        }
        .into()
    }

    /// True when the side to act is played from the page.
    pub fn awaiting_choice(&self) -> bool {
        let slot = if self.heroes_turn() { &self.hero } else { &self.enemy };
        !self.is_over() && slot.is_none()
    }

    fn heroes_turn(&self) -> bool {
        self.state.active_entity().map(|e| e.team) == Some(Team::Heroes)
    }

    fn slot(&mut self) -> Option<&mut Box<dyn Policy>> {
        if self.heroes_turn() {
            self.hero.as_mut()
        } else {
            self.enemy.as_mut()
        }
    }

    pub fn menu(&self) -> Vec<String> {
        if self.is_over() {
            return Vec::new();
        }
        enumerate_actions(&self.state).iter().map(|a| a.describe(&self.state)).collect()
    }

    /// The language-model prompt the active creature would receive.
    pub fn prompt(&self) -> String {
        self.state.active().map_or_else(String::new, |id| build_prompt(&self.state, id))
    }

    /// Apply menu entry `index` for the active creature.
    pub fn choose(&mut self, index: usize) -> Result<String, String> {
        if self.is_over() {
            return Err("the fight is over".into());
        }
        let actions = enumerate_actions(&self.state);
        let action = *actions.get(index).ok_or_else(|| format!("no menu entry {index}"))?;
        let who = self.state.active_entity().map(|e| e.sheet.name.clone()).unwrap_or_default();
        let text = action.describe(&self.state);
        apply_action(&mut self.state, action).map_err(|e| e.to_string())?;
        Ok(format!("{who}: {text}"))
    }

    /// Let the policy in charge of the active creature pick one action.
    pub fn advance(&mut self) -> Result<String, String> {
        if self.is_over() {
            return Err("the fight is over".into());
        }
        let actions = enumerate_actions(&self.state);
        let state = self.state.clone();
        let policy = self.slot().ok_or("this side is played by hand")?;
        let index = policy.choose(&state, &actions).map_err(|e| e.to_string())?;
        self.choose(index.min(actions.len() - 1))
    }

    /// Advance until the page has to choose or the fight ends, at most
    /// `limit` actions. Returns one line per action.
    pub fn run(&mut self, limit: usize) -> Result<Vec<String>, String> {
        let mut lines = Vec::new();
        while lines.len() < limit && !self.is_over() && !self.awaiting_choice() {
            lines.push(self.advance()?);
        }
        Ok(lines)
    }
}

fn visibility_grid(map: &Arc<BattleMap>, from: Position) -> Vec<u8> {
    map.positions()
        .map(|p| {
            if map.tile(p) == TerrainTile::OutOfMap {
                3
            } else {
                match line_of_sight(map, from, p) {
                    Visibility::Clear => 0,
                    Visibility::HalfCover => 1,
                    Visibility::Blocked => 2,
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        assert_eq!(map_names().len(), 4);
        for c in class_names() {
            assert!(class_by_name(&c).is_ok());
        }
        assert!(Fight::new("nowhere", "fighter", "fighter", "rules", "rules", 0).is_err());
        assert!(Fight::new("plain", "bard", "fighter", "rules", "rules", 0).is_err());
    }

    #[test]
    fn overlays_cover_the_map() {
        let f = Fight::new("wall", "fighter", "wizard", "human", "rules", 1).unwrap();
        let n = f.width() * f.height();
        let hero = f.state.entities[0].position;
        let vis = f.visibility(hero.x, hero.y);
        assert_eq!(vis.len(), n);
        assert_eq!(vis[hero.y as usize * f.width() + hero.x as usize], 0);
        assert!(vis.contains(&2));
        let reach = f.reachable(hero.x, hero.y, 30);
        assert_eq!(reach[hero.y as usize * f.width() + hero.x as usize], 0);
        assert!(reach.iter().all(|&c| c == u8::MAX || c <= 30));
        assert!(reach.contains(&u8::MAX));
    }

    #[test]
    fn automatic_fight_finishes() {
        let mut f = Fight::new("plain", "fighter", "fighter", "rules", "random", 3).unwrap();
        let lines = f.run(10_000).unwrap();
        assert!(f.is_over());
        assert!(!f.outcome().is_empty());
        assert!(!lines.is_empty());
        assert!(f.advance().is_err());
    }

    #[test]
    fn hand_played_hero() {
        let mut f = Fight::new("river", "rogue", "cleric", "human", "rules", 5).unwrap();
        f.run(1000).unwrap();
        assert!(f.awaiting_choice());
        assert!(f.advance().is_err());
        let menu = f.menu();
        assert_eq!(menu[0], "end my turn");
        assert!(f.prompt().contains("Here is the map:"));
        assert!(f.choose(menu.len()).is_err());
        assert!(f.choose(0).unwrap().ends_with("end my turn"));
        let v: serde_json::Value = serde_json::from_str(&f.entities_json()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
    }

    #[test]
    fn checkpoint_takes_over_the_hero() {
        let mut f = Fight::new("plain", "fighter", "fighter", "human", "inert", 2).unwrap();
        assert!(f.load_checkpoint("{}").is_err());
        let checkpoint = Checkpoint {
            version: skirmish_core::dqn::CHECKPOINT_VERSION,
            frame: 0,
            episodes: 0,
            env_steps: 0,
            config: Default::default(),
            reward_curve: Vec::new(),
            network: skirmish_core::dqn::QNetwork::new(4),
        };
        f.load_checkpoint(&checkpoint.to_json()).unwrap();
        assert!(!f.awaiting_choice());
        f.run(5000).unwrap();
        assert!(f.is_over());
    }
}
