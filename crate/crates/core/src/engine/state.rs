use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::battlemap::{BattleMap, Position};
use crate::characters::{Ability, CharacterSheet, ClassTag, FeatureId};
use crate::rng::RngStream;

pub const DEFAULT_MAX_ROUNDS: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Heroes,
    Enemies,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Heroes => Team::Enemies,
            Team::Enemies => Team::Heroes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conditions {
    pub prone: bool,
    pub dodging: bool,
    pub dead: bool,
}

impl Conditions {
    /// Names as shown in prompts.
    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.prone {
            out.push("prone");
        }
        if self.dodging {
            out.push("dodging");
        }
        if self.dead {
            out.push("dead");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Economy {
    pub actions: u8,
    pub bonus: u8,
    pub reaction: u8,
    pub movement_left: u32,
}

/// Per-turn bookkeeping, cleared at turn start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TurnFlags {
    pub attack_landed: bool,
    /// Slot of the light weapon used with the Attack action this turn.
    pub light_attack_slot: Option<u8>,
    pub sneak_used: bool,
    pub disengaged: bool,
    pub surged: bool,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityState {
    pub id: EntityId,
    pub team: Team,
    pub sheet: Arc<CharacterSheet>,
    pub hp: u32,
    pub position: Position,
    pub conditions: Conditions,
    /// Shield spell active until the start of this entity's next turn.
    pub shield_up: bool,
    pub economy: Economy,
    pub feature_uses: BTreeMap<FeatureId, u8>,
    pub spell_slots: u8,
    pub turn: TurnFlags,
}

impl EntityState {
    pub fn new(id: EntityId, team: Team, sheet: Arc<CharacterSheet>, position: Position) -> Self {
        let class = sheet.class;
        let feature_uses = class
            .features()
            .into_iter()
            .filter_map(|f| f.uses_per_rest.map(|n| (f.id, n)))
            .collect();
        Self {
            id,
            team,
            hp: sheet.max_hp,
            position,
            conditions: Conditions::default(),
            shield_up: false,
            economy: Economy::default(),
            feature_uses,
            spell_slots: class.spell_slots(),
            turn: TurnFlags::default(),
            sheet,
        }
    }

    pub fn class(&self) -> ClassTag {
        self.sheet.class
    }

    pub fn alive(&self) -> bool {
        !self.conditions.dead
    }

    pub fn health_fraction(&self) -> f64 {
        self.hp as f64 / self.sheet.max_hp as f64
    }

    pub fn health_percent(&self) -> f64 {
        100.0 * self.health_fraction()
    }

    pub fn uses_left(&self, feature: FeatureId) -> u8 {
        self.feature_uses.get(&feature).copied().unwrap_or(0)
    }

    pub(crate) fn start_turn(&mut self) {
        self.economy = Economy {
            actions: 1,
            bonus: 1,
            reaction: 1,
            movement_left: self.sheet.speed,
        };
        self.conditions.dodging = false;
        self.shield_up = false;
        self.turn = TurnFlags::default();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub map: Arc<BattleMap>,
    pub round: u32,
    /// Turns started so far, including the first.
    pub turn_counter: u64,
    pub initiative: Vec<EntityId>,
    pub active_index: usize,
    pub entities: Vec<EntityState>,
    pub rng: RngStream,
    pub max_rounds: u32,
}

impl GameState {
    /// Place the combatants on the map's spawn points, roll initiative and
    /// start the first turn.
    pub fn new(
        map: Arc<BattleMap>,
        heroes: &[Arc<CharacterSheet>],
        enemies: &[Arc<CharacterSheet>],
        rng: RngStream,
        max_rounds: u32,
    ) -> GameState {
        assert!(heroes.len() <= map.hero_spawns.len(), "not enough hero spawns");
        assert!(enemies.len() <= map.enemy_spawns.len(), "not enough enemy spawns");
        let mut entities = Vec::new();
        for (team, sheets, spawns) in [
            (Team::Heroes, heroes, &map.hero_spawns),
            (Team::Enemies, enemies, &map.enemy_spawns),
        ] {
            for (sheet, &pos) in sheets.iter().zip(spawns.iter()) {
                let id = EntityId(entities.len() as u32);
                entities.push(EntityState::new(id, team, sheet.clone(), pos));
            }
        }
        let mut state = GameState {
            map,
            round: 1,
            turn_counter: 0,
            initiative: Vec::new(),
            active_index: 0,
            entities,
            rng,
            max_rounds,
        };
        state.initiative = roll_initiative(&state.entities, &mut state.rng);
        state.begin_turn();
        state
    }

    /// One hero sheet against one enemy sheet.
    pub fn duel(
        map: Arc<BattleMap>,
        hero: Arc<CharacterSheet>,
        enemy: Arc<CharacterSheet>,
        rng: RngStream,
        max_rounds: u32,
    ) -> GameState {
        GameState::new(map, &[hero], &[enemy], rng, max_rounds)
    }

    pub fn entity(&self, id: EntityId) -> &EntityState {
        &self.entities[id.index()]
    }

    pub fn entity_mut(&mut self, id: EntityId) -> &mut EntityState {
        &mut self.entities[id.index()]
    }

    pub fn active(&self) -> Option<EntityId> {
        self.initiative.get(self.active_index).copied()
    }

    pub fn active_entity(&self) -> Option<&EntityState> {
        self.active().map(|id| self.entity(id))
    }

    pub fn living_at(&self, p: Position) -> Option<&EntityState> {
        self.entities.iter().find(|e| e.alive() && e.position == p)
    }

    pub fn living(&self) -> impl Iterator<Item = &EntityState> {
        self.entities.iter().filter(|e| e.alive())
    }

    pub fn hostiles_of(&self, id: EntityId) -> impl Iterator<Item = &EntityState> {
        let team = self.entity(id).team;
        self.living().filter(move |e| e.team != team)
    }

    /// Positions of living creatures other than `id`.
    pub fn occupied_except(&self, id: EntityId) -> Vec<Position> {
        self.living().filter(|e| e.id != id).map(|e| e.position).collect()
    }

    /// First entity of a team (the hero in a duel).
    pub fn first_of(&self, team: Team) -> Option<EntityId> {
        self.entities.iter().find(|e| e.team == team).map(|e| e.id)
    }

    pub(crate) fn begin_turn(&mut self) {
        if let Some(id) = self.active() {
            self.turn_counter += 1;
            self.entity_mut(id).start_turn();
        }
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn state_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// d20 + DEX modifier, highest first; ties go to the higher DEX score and
/// then to a coin flip.
pub fn roll_initiative(entities: &[EntityState], rng: &mut RngStream) -> Vec<EntityId> {
    let mut rolls: Vec<(i32, u8, u64, EntityId)> = entities
        .iter()
        .filter(|e| e.alive())
        .map(|e| {
            let dex = e.sheet.abilities.score(Ability::Dex);
            let total = rng.die(20) as i32 + e.sheet.modifier(Ability::Dex);
            (total, dex, 0, e.id)
        })
        .collect();
    for r in rolls.iter_mut() {
        r.2 = rng.next_u64();
    }
    rolls.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)));
    rolls.into_iter().map(|r| r.3).collect()
}
