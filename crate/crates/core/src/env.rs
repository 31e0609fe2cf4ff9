//! Single-agent environment around a duel: the hero is the learner, the
//! adversary's turns run inside `step`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adversaries::{Policy, RandomPolicy};
use crate::battlemap::{bundled_maps, line_of_sight, movement_costs, BattleMap, Direction, Position, TerrainTile, Visibility};
use crate::characters::{bundled, CharacterSheet, ClassTag, FeatureId, SheetOverrides, MELEE_REACH};
use crate::engine::{
    apply_action, enumerate_actions, is_terminal, Action, CombatEvent, EntityId, EntityState, GameState, Outcome,
    Team, DEFAULT_MAX_ROUNDS,
};
use crate::rng::{derive_seed, RngStream};

pub const VIEW: usize = 7;
pub const CHANNELS: usize = 16;
pub const TILE_FEATURES: usize = CHANNELS * VIEW * VIEW;
pub const SCALARS: usize = 13;

pub const WIN_REWARD: f64 = 10.0;
pub const LOSS_REWARD: f64 = -10.0;

/// Channel order of the tile tensor.
pub const CHANNEL_NAMES: [&str; CHANNELS] = [
    "passable",
    "wall",
    "out_of_map",
    "barrel",
    "water",
    "occupied_self",
    "occupied_enemy",
    "occupied_ally",
    "in_los",
    "enemy_hp_fraction",
    "enemy_prone",
    "enemy_dodging",
    "reachable_this_turn",
    "threatened",
    "cover_from_enemy",
    "distance_normalized",
];

/// Vocabulary sizes of the encoding fields.
pub const ACTION_TYPES: usize = 23;
pub const BINARY_ACTIONS: usize = 2;
pub const SUBTYPES: usize = 12;
pub const WEAPON_TYPES: usize = 6;
pub const ENTITY_TYPES: usize = 6;
pub const TERRAIN_TYPES: usize = 6;
pub const DIRECTIONS: usize = 9;

/// Categorical description of one legal action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionEncoding {
    /// Action kind; moves use 15 + heading relative to the visible enemy.
    pub action_type: u8,
    /// 1 for bonus-action variants.
    pub binary_action: u8,
    /// 0 none, 1-4 weapon slot, 5-11 spell.
    pub binary_subtype: u8,
    /// 0 none, 1-4 weapon, 5 spell.
    pub weapon_type: u8,
    /// 0 none, 1 self, 2-5 target class.
    pub entity_type: u8,
    /// 0 none, else destination terrain + 1.
    pub terrain_type: u8,
    /// 0 none, else direction + 1.
    pub direction: u8,
}

impl ActionEncoding {
    pub fn in_vocab(&self) -> bool {
        (self.action_type as usize) < ACTION_TYPES
            && (self.binary_action as usize) < BINARY_ACTIONS
            && (self.binary_subtype as usize) < SUBTYPES
            && (self.weapon_type as usize) < WEAPON_TYPES
            && (self.entity_type as usize) < ENTITY_TYPES
            && (self.terrain_type as usize) < TERRAIN_TYPES
            && (self.direction as usize) < DIRECTIONS
    }
}

pub fn encode_action(state: &GameState, action: &Action) -> ActionEncoding {
    let me = state.active_entity().expect("encoding needs an active entity");
    let mut enc = ActionEncoding {
        action_type: action.kind().index() as u8,
        binary_action: action.is_bonus() as u8,
        binary_subtype: 0,
        weapon_type: 0,
        entity_type: 0,
        terrain_type: 0,
        direction: 0,
    };
    match *action {
        Action::MeleeAttack { slot, .. } | Action::RangedAttack { slot, .. } | Action::TwoWeaponAttack { slot, .. } => {
            enc.binary_subtype = slot + 1;
            if let Some(w) = me.sheet.weapon_in_slot(slot as usize) {
                enc.weapon_type = w.id as u8 + 1;
            }
        }
        Action::CastSpell { spell, .. } => {
            enc.binary_subtype = 5 + spell.index() as u8;
            enc.weapon_type = 5;
        }
        Action::Move { direction } => {
            enc.action_type = 15 + relative_heading(state, me, direction);
            enc.direction = direction.index() as u8 + 1;
            enc.terrain_type = state.map.tile(me.position.step(direction)).index() as u8 + 1;
        }
        _ => {}
    }
    if let Some(t) = action.target() {
        enc.entity_type = if t == me.id {
            1
        } else {
            2 + state.entity(t).class().index() as u8
        };
    }
    enc
}

const RING: [Direction; 8] = [
    Direction::Up,
    Direction::UpRight,
    Direction::Right,
    Direction::DownRight,
    Direction::Down,
    Direction::DownLeft,
    Direction::Left,
    Direction::UpLeft,
];

fn ring_index(d: Direction) -> u8 {
    RING.iter().position(|&r| r == d).unwrap() as u8
}

/// Clockwise steps from the bearing of the nearest visible enemy (0 means
/// straight at it). Without a visible enemy the bearing is `Up`.
fn relative_heading(state: &GameState, me: &EntityState, d: Direction) -> u8 {
    let bearing = visible_enemy(state, me)
        .map(|e| {
            let dx = (e.position.x - me.position.x) as f64;
            let dy = (e.position.y - me.position.y) as f64;
            let a = dx.atan2(-dy).rem_euclid(std::f64::consts::TAU);
            ((a / std::f64::consts::FRAC_PI_4).round() as u8) % 8
        })
        .unwrap_or(0);
    (ring_index(d) + 8 - bearing) % 8
}

/// The legal action whose encoding is `enc`.
pub fn decode_action(state: &GameState, enc: &ActionEncoding) -> Option<Action> {
    enumerate_actions(state)
        .into_iter()
        .find(|a| encode_action(state, a) == *enc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Channel-major `[CHANNELS][VIEW][VIEW]`, values in [0, 1].
    pub tiles: Vec<f64>,
    pub scalars: [f64; SCALARS],
    pub own_class: u8,
    pub enemy_class: u8,
    pub legal: Vec<ActionEncoding>,
}

impl Observation {
    pub fn tile(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.tiles[(channel * VIEW + row) * VIEW + col]
    }
}

/// Nearest living hostile the entity can see.
fn visible_enemy<'a>(state: &'a GameState, me: &EntityState) -> Option<&'a EntityState> {
    state
        .hostiles_of(me.id)
        .filter(|e| line_of_sight(&state.map, me.position, e.position).visible())
        .min_by_key(|e| (me.position.chebyshev(e.position), e.id))
}

pub fn encode_observation(state: &GameState, pov: EntityId) -> Observation {
    let me = state.entity(pov);
    let map: &BattleMap = &state.map;
    let enemy = visible_enemy(state, me);
    let blocked = state.occupied_except(pov);
    let crawl = if me.conditions.prone { 2 } else { 1 };
    let reach = movement_costs(map, me.position, me.economy.movement_left, &blocked, crawl);
    let max_dim = map.width.max(map.height) as f64;
    let threats: Vec<Position> = state
        .hostiles_of(pov)
        .filter(|e| line_of_sight(map, me.position, e.position).visible())
        .filter(|e| e.sheet.weapons().iter().any(|w| w.can_melee()))
        .map(|e| e.position)
        .collect();

    let mut tiles = vec![0.0; TILE_FEATURES];
    let half = (VIEW / 2) as i32;
    for row in 0..VIEW {
        for col in 0..VIEW {
            let p = Position::new(me.position.x + col as i32 - half, me.position.y + row as i32 - half);
            let mut set = |c: usize, v: f64| tiles[(c * VIEW + row) * VIEW + col] = v;
            let tile = map.tile(p);
            set(0, tile.passable() as u8 as f64);
            set(1, (tile == TerrainTile::Wall) as u8 as f64);
            set(2, (tile == TerrainTile::OutOfMap) as u8 as f64);
            set(3, (tile == TerrainTile::Barrel) as u8 as f64);
            set(4, (tile == TerrainTile::Water) as u8 as f64);
            if tile == TerrainTile::OutOfMap {
                continue;
            }
            let seen = line_of_sight(map, me.position, p).visible();
            set(8, seen as u8 as f64);
            if p == me.position {
                set(5, 1.0);
            } else if seen {
                if let Some(other) = state.living_at(p) {
                    if other.team == me.team {
                        set(7, 1.0);
                    } else {
                        set(6, 1.0);
                        set(9, other.health_fraction());
                        set(10, other.conditions.prone as u8 as f64);
                        set(11, other.conditions.dodging as u8 as f64);
                    }
                }
            }
            set(12, reach.contains_key(&p) as u8 as f64);
            set(
                13,
                threats.iter().any(|t| t.distance_ft(p) <= MELEE_REACH && *t != p) as u8 as f64,
            );
            if let Some(e) = enemy {
                if tile.passable() && e.position != p {
                    let v = line_of_sight(map, e.position, p);
                    set(14, (v != Visibility::Clear) as u8 as f64);
                }
                set(15, (p.chebyshev(e.position) as f64 / max_dim).min(1.0));
            } else {
                set(15, 1.0);
            }
        }
    }

    let speed = me.sheet.speed as f64;
    let slots = me.class().spell_slots();
    let (dx, dy) = enemy
        .map(|e| {
            (
                (e.position.x - me.position.x) as f64 / max_dim,
                (e.position.y - me.position.y) as f64 / max_dim,
            )
        })
        .unwrap_or((0.0, 0.0));
    let flag = |b: bool| b as u8 as f64;
    let scalars = [
        me.health_fraction(),
        (me.economy.movement_left as f64 / (2.0 * speed)).min(1.0),
        flag(me.economy.actions > 0),
        flag(me.economy.bonus > 0),
        flag(me.economy.reaction > 0),
        flag(me.uses_left(FeatureId::SecondWind) > 0),
        flag(me.uses_left(FeatureId::ActionSurge) > 0),
        if slots == 0 {
            0.0
        } else {
            me.spell_slots as f64 / slots as f64
        },
        dx,
        dy,
        (state.round as f64 / state.max_rounds as f64).min(1.0),
        flag(me.conditions.prone),
        flag(me.conditions.dodging),
    ];
    let enemy_class = state
        .hostiles_of(pov)
        .next()
        .or_else(|| state.entities.iter().find(|e| e.team != me.team))
        .map(|e| e.class().index() as u8)
        .unwrap_or(0);
    let legal = if state.active() == Some(pov) {
        enumerate_actions(state).iter().map(|a| encode_action(state, a)).collect()
    } else {
        Vec::new()
    };
    Observation {
        tiles,
        scalars,
        own_class: me.class().index() as u8,
        enemy_class,
        legal,
    }
}

/// +10 for a win, 0 for a tie or an unfinished fight, and for a loss -10
/// scaled by the adversary's remaining health.
pub fn compute_reward(outcome: Outcome, adversary: &EntityState) -> f64 {
    match outcome {
        Outcome::HeroWon => WIN_REWARD,
        Outcome::HeroLost => LOSS_REWARD * adversary.hp as f64 / adversary.sheet.max_hp as f64,
        Outcome::Tie | Outcome::Ongoing => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMode {
    FighterOnly,
    FourClasses,
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub class_mode: ClassMode,
    pub maps: Vec<Arc<BattleMap>>,
    pub max_rounds: u32,
    pub sheets: SheetOverrides,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            class_mode: ClassMode::FighterOnly,
            maps: bundled_maps(),
            max_rounds: DEFAULT_MAX_ROUNDS,
            sheets: SheetOverrides::default(),
        }
    }
}

/// Map and sheets for an episode seed; the map is uniform over the pool.
pub fn sample_episode(config: &EpisodeConfig, seed: u64) -> (Arc<BattleMap>, Arc<CharacterSheet>, Arc<CharacterSheet>) {
    let mut rng = RngStream::new(derive_seed(seed, 0));
    let map = config.maps[rng.index(config.maps.len())].clone();
    let (hero, enemy) = match config.class_mode {
        ClassMode::FighterOnly => (ClassTag::Fighter, ClassTag::Fighter),
        ClassMode::FourClasses => (ClassTag::ALL[rng.index(4)], ClassTag::ALL[rng.index(4)]),
    };
    (map, config.sheets.hero_sheet(hero), config.sheets.enemy_sheet(enemy))
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("action index {index} outside menu of {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("episode is over; call reset")]
    Done,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub outcome: Outcome,
    /// Events produced by this step, adversary turns included.
    pub events: Vec<CombatEvent>,
}

pub struct Env {
    config: EpisodeConfig,
    adversary: Box<dyn Policy>,
    state: GameState,
    hero: EntityId,
    done: bool,
    fallback: RngStream,
    adversary_errors: u64,
}

impl Env {
    pub fn new(config: EpisodeConfig, adversary: Box<dyn Policy>) -> Env {
        let map = config.maps[0].clone();
        let state = GameState::duel(
            map,
            bundled(ClassTag::Fighter),
            bundled(ClassTag::Fighter),
            RngStream::new(0),
            config.max_rounds,
        );
        let mut env = Env {
            config,
            adversary,
            state,
            hero: EntityId(0),
            done: true,
            fallback: RngStream::new(0),
            adversary_errors: 0,
        };
        env.reset(0);
        env
    }

    pub fn set_adversary(&mut self, adversary: Box<dyn Policy>) {
        self.adversary = adversary;
    }

    pub fn adversary_name(&self) -> String {
        self.adversary.name()
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn hero(&self) -> EntityId {
        self.hero
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Adversary decisions that failed and were replaced by random picks.
    pub fn adversary_errors(&self) -> u64 {
        self.adversary_errors
    }

    pub fn legal_actions(&self) -> Vec<Action> {
        if self.done {
            Vec::new()
        } else {
            enumerate_actions(&self.state)
        }
    }

    /// Start a new episode. Adversary turns before the hero's first turn are
    /// played immediately.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let (map, hero, enemy) = sample_episode(&self.config, seed);
        self.state = GameState::duel(
            map,
            hero,
            enemy,
            RngStream::new(derive_seed(seed, 1)),
            self.config.max_rounds,
        );
        self.hero = self.state.first_of(Team::Heroes).expect("hero exists");
        self.adversary.reset(derive_seed(seed, 2));
        self.fallback = RngStream::new(derive_seed(seed, 3));
        self.done = false;
        let mut events = Vec::new();
        self.run_adversary(&mut events);
        self.done = is_terminal(&self.state).is_over();
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        let mut obs = encode_observation(&self.state, self.hero);
        if self.done {
            obs.legal.clear();
        }
        obs
    }

    fn adversary_entity(&self) -> &EntityState {
        self.state
            .entities
            .iter()
            .find(|e| e.team != self.state.entity(self.hero).team)
            .expect("adversary exists")
    }

    fn run_adversary(&mut self, events: &mut Vec<CombatEvent>) {
        while !is_terminal(&self.state).is_over() && self.state.active() != Some(self.hero) {
            let actions = enumerate_actions(&self.state);
            let index = match self.adversary.choose(&self.state, &actions) {
                Ok(i) if i < actions.len() => i,
                _ => {
                    self.adversary_errors += 1;
                    self.fallback.index(actions.len())
                }
            };
            let produced = apply_action(&mut self.state, actions[index]).expect("enumerated action applies");
            events.extend(produced);
        }
    }

    /// Apply the hero's choice `index` from the current legal list.
    pub fn step(&mut self, index: usize) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::Done);
        }
        let actions = enumerate_actions(&self.state);
        let Some(&action) = actions.get(index) else {
            return Err(EnvError::OutOfRange {
                index,
                len: actions.len(),
            });
        };
        let mut events = apply_action(&mut self.state, action).expect("enumerated action applies");
        self.run_adversary(&mut events);
        let outcome = is_terminal(&self.state);
        self.done = outcome.is_over();
        let reward = if self.done {
            compute_reward(outcome, self.adversary_entity())
        } else {
            0.0
        };
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done: self.done,
            outcome,
            events,
        })
    }
}

/// Convenience constructor: fighter mirror against a random adversary.
pub fn default_env(seed: u64) -> Env {
    Env::new(EpisodeConfig::default(), Box::new(RandomPolicy::new(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::{InertPolicy, RulesPolicy};
    use crate::battlemap::bundled_map;
    use crate::fixtures::{random_state, rogue_vs_wizard};
    use proptest::prelude::*;

    fn plain_config() -> EpisodeConfig {
        EpisodeConfig {
            class_mode: ClassMode::FighterOnly,
            maps: vec![bundled_map("plain").unwrap()],
            max_rounds: 20,
            ..EpisodeConfig::default()
        }
    }

    #[test]
    fn corner_view_is_padded_with_out_of_map() {
        let map = bundled_map("plain").unwrap();
        let s = GameState::duel(map, bundled(ClassTag::Fighter), bundled(ClassTag::Fighter), RngStream::new(1), 500);
        // Hero spawn is the bottom-right corner.
        let obs = encode_observation(&s, EntityId(0));
        assert_eq!(obs.tiles.len(), 16 * 7 * 7);
        assert_eq!(obs.tile(2, 6, 6), 1.0);
        assert_eq!(obs.tile(2, 3, 4), 1.0);
        assert_eq!(obs.tile(2, 3, 3), 0.0);
        assert_eq!(obs.tile(5, 3, 3), 1.0);
        assert!(obs.tiles.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn visible_enemy_at_full_health() {
        let s = rogue_vs_wizard();
        let obs = encode_observation(&s, EntityId(0));
        // Wizard is 2 left, 1 down of the rogue.
        assert_eq!(obs.tile(6, 4, 1), 1.0);
        assert_eq!(obs.tile(9, 4, 1), 1.0);
        assert_eq!(obs.scalars[0], 15.0 / 18.0);
    }

    #[test]
    fn move_ids_are_relative_to_the_enemy() {
        let s = rogue_vs_wizard();
        let t = |d| encode_action(&s, &Action::Move { direction: d }).action_type;
        // Wizard bears down-left.
        assert_eq!(t(Direction::DownLeft), 15);
        assert_eq!(t(Direction::Left), 16);
        assert_eq!(t(Direction::Up), 18);
        assert_eq!(t(Direction::UpRight), 19);
        assert_eq!(encode_action(&s, &Action::Move { direction: Direction::Up }).direction, 4);
        let map = std::sync::Arc::new(
            crate::battlemap::load_map("fog", "......\n......\n.P#E..\n..##..\n......\n......\n").unwrap(),
        );
        let s = GameState::duel(map, bundled(ClassTag::Fighter), bundled(ClassTag::Fighter), RngStream::new(1), 500);
        let t = |d| encode_action(&s, &Action::Move { direction: d }).action_type;
        assert_eq!(t(Direction::Up), 15);
        assert_eq!(t(Direction::Right), 17);
    }

    #[test]
    fn enemy_behind_wall_is_fogged() {
        let map = std::sync::Arc::new(
            crate::battlemap::load_map("fog", "......\n......\n.P#E..\n..##..\n......\n......\n").unwrap(),
        );
        let s = GameState::duel(map, bundled(ClassTag::Fighter), bundled(ClassTag::Fighter), RngStream::new(1), 500);
        let obs = encode_observation(&s, EntityId(0));
        assert_eq!(obs.tile(8, 3, 5), 0.0);
        assert_eq!(obs.tile(6, 3, 5), 0.0);
        assert_eq!(obs.tile(9, 3, 5), 0.0);
    }

    #[test]
    fn reward_cases() {
        let mut adv = EntityState::new(
            EntityId(1),
            Team::Enemies,
            bundled(ClassTag::Rogue),
            Position::new(0, 0),
        );
        assert_eq!(compute_reward(Outcome::HeroWon, &adv), 10.0);
        assert_eq!(compute_reward(Outcome::Tie, &adv), 0.0);
        assert_eq!(compute_reward(Outcome::HeroLost, &adv), -10.0);
        adv.hp = 9;
        assert_eq!(compute_reward(Outcome::HeroLost, &adv), -5.0);
    }

    #[test]
    fn fighter_only_mode_and_determinism() {
        let mut env = Env::new(plain_config(), Box::new(RandomPolicy::new(1)));
        let a = env.reset(42);
        assert!(env.state().entities.iter().all(|e| e.class() == ClassTag::Fighter));
        let b = env.reset(42);
        assert_eq!(a, b);
    }

    #[test]
    fn four_class_mode_covers_all_classes() {
        let config = EpisodeConfig {
            class_mode: ClassMode::FourClasses,
            ..EpisodeConfig::default()
        };
        let mut counts = [[0u32; 4]; 2];
        let rogue = SheetOverrides { hero: Some(bundled(ClassTag::Rogue)), enemy: None };
        let fixed = EpisodeConfig { sheets: rogue, ..config.clone() };
        assert!((0..50).all(|s| sample_episode(&fixed, s).1.class == ClassTag::Rogue));
        assert_eq!(sample_episode(&fixed, 3).2, sample_episode(&config, 3).2);
        for seed in 0..1000 {
            let (_, h, e) = sample_episode(&config, seed);
            counts[0][h.class.index()] += 1;
            counts[1][e.class.index()] += 1;
        }
        for side in counts {
            for c in side {
                assert!((200..=300).contains(&c), "{counts:?}");
            }
        }
    }

    #[test]
    fn end_turns_against_inert_adversary_tie() {
        let mut env = Env::new(plain_config(), Box::new(InertPolicy));
        env.reset(3);
        let mut last = None;
        while !env.is_done() {
            let r = env.step(0).unwrap();
            if !r.done {
                assert_eq!(r.reward, 0.0);
            }
            last = Some(r);
        }
        let last = last.unwrap();
        assert_eq!(last.outcome, Outcome::Tie);
        assert_eq!(last.reward, 0.0);
        assert_eq!(env.step(0).unwrap_err(), EnvError::Done);
    }

    #[test]
    fn killing_blow_pays_ten() {
        let mut env = Env::new(plain_config(), Box::new(InertPolicy));
        env.reset(4);
        loop {
            let actions = env.legal_actions();
            let pick = actions
                .iter()
                .position(|a| a.is_attack())
                .or_else(|| actions.iter().position(|a| matches!(a, Action::Move { .. })))
                .unwrap_or(0);
            let r = env.step(pick).unwrap();
            if r.done {
                assert_eq!(r.outcome, Outcome::HeroWon);
                assert_eq!(r.reward, 10.0);
                break;
            }
        }
    }

    #[test]
    fn index_out_of_range() {
        let mut env = Env::new(plain_config(), Box::new(RulesPolicy));
        env.reset(5);
        let n = env.legal_actions().len();
        assert_eq!(env.step(n).unwrap_err(), EnvError::OutOfRange { index: n, len: n });
    }

    proptest! {
        #[test]
        fn encodings_are_a_bijection(seed in any::<u64>()) {
            let s = random_state(seed, 40);
            let actions = enumerate_actions(&s);
            let encs: Vec<ActionEncoding> = actions.iter().map(|a| encode_action(&s, a)).collect();
            for (a, e) in actions.iter().zip(&encs) {
                prop_assert!(e.in_vocab());
                prop_assert_eq!(decode_action(&s, e), Some(*a));
            }
            let unique: std::collections::HashSet<_> = encs.iter().collect();
            prop_assert_eq!(unique.len(), encs.len());
        }

        #[test]
        fn observation_ranges(seed in any::<u64>()) {
            let s = random_state(seed, 40);
            let obs = encode_observation(&s, s.active().unwrap());
            prop_assert_eq!(obs.tiles.len(), TILE_FEATURES);
            prop_assert!(obs.tiles.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(!obs.legal.is_empty());
        }

        #[test]
        fn rewards_bounded_and_zero_until_done(seed in 0u64..10_000) {
            let mut env = Env::new(
                EpisodeConfig { class_mode: ClassMode::FourClasses, max_rounds: 30, ..EpisodeConfig::default() },
                Box::new(RulesPolicy),
            );
            env.reset(seed);
            let mut rng = RngStream::new(seed);
            while !env.is_done() {
                let n = env.legal_actions().len();
                let r = env.step(rng.index(n)).unwrap();
                prop_assert!((-10.0..=10.0).contains(&r.reward));
                if !r.done { prop_assert_eq!(r.reward, 0.0); }
            }
        }

        #[test]
        fn loss_reward_monotone(hp_a in 0u32..=18, hp_b in 0u32..=18) {
            let mut a = EntityState::new(EntityId(1), Team::Enemies, bundled(ClassTag::Rogue), Position::new(0, 0));
            let mut b = a.clone();
            a.hp = hp_a;
            b.hp = hp_b;
            // Less adversary health left means more damage dealt.
            if hp_a < hp_b {
                prop_assert!(compute_reward(Outcome::HeroLost, &a) > compute_reward(Outcome::HeroLost, &b));
            }
        }
    }
}
