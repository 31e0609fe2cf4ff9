//! Turn state machine: initiative, action economy, legal-action enumeration
//! and action application.

mod action;
pub mod log;
mod state;

pub use action::{Action, ActionKind};
pub use state::{
    roll_initiative, Conditions, Economy, EntityId, EntityState, GameState, Team, TurnFlags,
    DEFAULT_MAX_ROUNDS,
};

use serde::{Deserialize, Serialize};

use crate::battlemap::{line_of_sight, movement_budget_cost, Direction, Position, Visibility};
use crate::characters::{Ability, ClassFeature, FeatureId, SpellCost, SpellEffect, SpellId, Trigger, Weapon, MELEE_REACH};
use crate::rules::{
    self, apply_damage, attack_advantage, effective_ac, roll, roll_d20, roll_damage, roll_dice,
    saving_throw_with_bonus, weapon_modifiers, AdvantageState, AttackMode, CoverDegree, DamageType,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ongoing,
    HeroWon,
    HeroLost,
    Tie,
}

impl Outcome {
    pub fn is_over(self) -> bool {
        self != Outcome::Ongoing
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("illegal action {0:?}")]
    IllegalAction(Action),
    #[error("the fight is already over")]
    FightOver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombatEvent {
    pub round: u32,
    pub turn: u64,
    pub actor: EntityId,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    RoundStart,
    TurnStart,
    ActionTaken {
        action: Action,
        text: String,
    },
    Attack {
        target: EntityId,
        source: String,
        natural: u32,
        total: i32,
        target_ac: i32,
        advantage: AdvantageState,
        hit: bool,
        critical: bool,
    },
    Damage {
        target: EntityId,
        amount: u32,
        damage_type: DamageType,
        hp_after: u32,
    },
    Save {
        target: EntityId,
        ability: Ability,
        natural: u32,
        total: i32,
        dc: i32,
        passed: bool,
    },
    Heal {
        target: EntityId,
        amount: u32,
        hp_after: u32,
    },
    Moved {
        from: Position,
        to: Position,
        cost: u32,
        movement_left: u32,
    },
    OpportunityAttack {
        target: EntityId,
    },
    ShieldCast,
    Died,
    FightOver {
        outcome: Outcome,
    },
}

/// Win/loss/tie from the heroes' side.
pub fn is_terminal(state: &GameState) -> Outcome {
    let alive = |team: Team| state.entities.iter().any(|e| e.team == team && e.alive());
    if !alive(Team::Heroes) {
        Outcome::HeroLost
    } else if !alive(Team::Enemies) {
        Outcome::HeroWon
    } else if state.round > state.max_rounds {
        Outcome::Tie
    } else {
        Outcome::Ongoing
    }
}

/// Uses remain and the economy slot the feature needs is unspent.
pub fn feature_available(state: &GameState, entity: EntityId, feature: FeatureId) -> bool {
    let e = state.entity(entity);
    if !e.alive() {
        return false;
    }
    let Some(spec) = e.class().features().into_iter().find(|f| f.id == feature) else {
        return false;
    };
    slot_free(e, &spec)
}

fn slot_free(e: &EntityState, spec: &ClassFeature) -> bool {
    if spec.uses_per_rest.is_some() && e.uses_left(spec.id) == 0 {
        return false;
    }
    match spec.trigger {
        Trigger::Action => e.economy.actions > 0,
        Trigger::Bonus => e.economy.bonus > 0,
        Trigger::Free => !(spec.id == FeatureId::ActionSurge && e.turn.surged),
        Trigger::Passive => true,
    }
}

/// Cover the target gets against an attack from `from`.
pub fn cover_between(state: &GameState, from: Position, to: Position) -> Visibility {
    line_of_sight(&state.map, from, to)
}

/// Feet needed for the active entity to step in `dir`, if it can.
pub fn move_cost(state: &GameState, id: EntityId, dir: Direction) -> Option<u32> {
    let e = state.entity(id);
    let to = e.position.step(dir);
    if state.living_at(to).is_some() {
        return None;
    }
    let base = movement_budget_cost(&state.map, e.position, to).ok()?;
    Some(if e.conditions.prone { base * 2 } else { base })
}

pub fn stand_cost(e: &EntityState) -> u32 {
    e.sheet.speed / 2
}

/// Every legal action for the active entity, in menu order. Empty once the
/// fight is over.
pub fn enumerate_actions(state: &GameState) -> Vec<Action> {
    let mut out = Vec::new();
    if is_terminal(state).is_over() {
        return out;
    }
    let Some(me) = state.active_entity() else {
        return out;
    };
    let id = me.id;
    let econ = me.economy;
    out.push(Action::EndTurn);

    let weapons = me.sheet.weapons();
    let targets: Vec<&EntityState> = state
        .hostiles_of(id)
        .filter(|t| line_of_sight(&state.map, me.position, t.position).visible())
        .collect();
    if econ.actions > 0 {
        for t in &targets {
            let dist = me.position.distance_ft(t.position);
            for (slot, w) in weapons.iter().enumerate() {
                let slot = slot as u8;
                if w.can_melee() && dist <= MELEE_REACH {
                    out.push(Action::MeleeAttack { target: t.id, slot });
                }
                if w.can_shoot() && dist <= w.long_range {
                    out.push(Action::RangedAttack { target: t.id, slot });
                }
            }
        }
    }
    if econ.bonus > 0 {
        if let Some(used) = me.turn.light_attack_slot {
            for t in &targets {
                let dist = me.position.distance_ft(t.position);
                for (slot, w) in weapons.iter().enumerate() {
                    if slot as u8 == used || !w.properties.light {
                        continue;
                    }
                    if (w.can_melee() && dist <= MELEE_REACH) || (w.can_shoot() && dist <= w.long_range) {
                        out.push(Action::TwoWeaponAttack { target: t.id, slot: slot as u8 });
                    }
                }
            }
        }
    }
    let cunning = me.class().has_feature(FeatureId::CunningAction);
    if econ.actions > 0 {
        out.push(Action::Dash);
    }
    if cunning && econ.bonus > 0 {
        out.push(Action::DashBonus);
    }
    if econ.actions > 0 {
        out.push(Action::Disengage);
    }
    if cunning && econ.bonus > 0 {
        out.push(Action::DisengageBonus);
    }
    if econ.actions > 0 {
        out.push(Action::Dodge);
    }
    for dir in Direction::ALL {
        if move_cost(state, id, dir).is_some_and(|c| c <= econ.movement_left) {
            out.push(Action::Move { direction: dir });
        }
    }
    if me.conditions.prone {
        if econ.movement_left >= stand_cost(me) {
            out.push(Action::Stand);
        }
    } else {
        out.push(Action::Prone);
    }
    if feature_available(state, id, FeatureId::SecondWind) {
        out.push(Action::SecondWind);
    }
    if feature_available(state, id, FeatureId::ActionSurge) {
        out.push(Action::ActionSurge);
    }
    if econ.actions > 0 {
        for &spell_id in me.class().spell_list() {
            if !me.sheet.spells.contains(&spell_id) {
                continue;
            }
            let spell = spell_id.stats();
            if spell.cost != SpellCost::Action || (spell.level > 0 && me.spell_slots == 0) {
                continue;
            }
            if spell.targets_self() {
                out.push(Action::CastSpell { spell: spell_id, target: id });
            } else {
                for t in &targets {
                    if me.position.distance_ft(t.position) <= spell.range {
                        out.push(Action::CastSpell { spell: spell_id, target: t.id });
                    }
                }
            }
        }
    }
    out
}

/// Menu lines for the current enumeration.
pub fn action_menu(state: &GameState) -> Vec<String> {
    enumerate_actions(state).iter().map(|a| a.describe(state)).collect()
}

struct Ctx<'a> {
    state: &'a mut GameState,
    events: Vec<CombatEvent>,
}

impl Ctx<'_> {
    fn push(&mut self, actor: EntityId, kind: EventKind) {
        self.events.push(CombatEvent {
            round: self.state.round,
            turn: self.state.turn_counter,
            actor,
            kind,
        });
    }
}

/// Apply one action for the active entity. Actions not in
/// [`enumerate_actions`] are rejected.
pub fn apply_action(state: &mut GameState, action: Action) -> Result<Vec<CombatEvent>, EngineError> {
    if is_terminal(state).is_over() {
        return Err(EngineError::FightOver);
    }
    if !enumerate_actions(state).contains(&action) {
        return Err(EngineError::IllegalAction(action));
    }
    let actor = state.active().expect("ongoing fight has an active entity");
    let text = action.describe(state);
    let mut ctx = Ctx {
        state,
        events: Vec::new(),
    };
    ctx.push(actor, EventKind::ActionTaken { action, text });
    perform(&mut ctx, actor, action);
    cleanup_dead(&mut ctx, actor);
    let outcome = is_terminal(ctx.state);
    if outcome.is_over() {
        ctx.push(actor, EventKind::FightOver { outcome });
    }
    Ok(ctx.events)
}

fn perform(ctx: &mut Ctx<'_>, actor: EntityId, action: Action) {
    match action {
        Action::EndTurn => end_turn(ctx),
        Action::MeleeAttack { target, slot } => {
            spend_action(ctx, actor);
            weapon_attack(ctx, actor, target, slot, AttackMode::Melee, false);
        }
        Action::RangedAttack { target, slot } => {
            spend_action(ctx, actor);
            weapon_attack(ctx, actor, target, slot, AttackMode::Ranged, false);
        }
        Action::TwoWeaponAttack { target, slot } => {
            let e = ctx.state.entity_mut(actor);
            e.economy.bonus -= 1;
            let dist = e.position.distance_ft(ctx.state.entity(target).position);
            let mode = if dist <= MELEE_REACH {
                AttackMode::Melee
            } else {
                AttackMode::Ranged
            };
            weapon_attack(ctx, actor, target, slot, mode, true);
        }
        Action::Dash => {
            spend_action(ctx, actor);
            dash(ctx, actor);
        }
        Action::DashBonus => {
            ctx.state.entity_mut(actor).economy.bonus -= 1;
            dash(ctx, actor);
        }
        Action::Disengage => {
            spend_action(ctx, actor);
            ctx.state.entity_mut(actor).turn.disengaged = true;
        }
        Action::DisengageBonus => {
            let e = ctx.state.entity_mut(actor);
            e.economy.bonus -= 1;
            e.turn.disengaged = true;
        }
        Action::Dodge => {
            spend_action(ctx, actor);
            ctx.state.entity_mut(actor).conditions.dodging = true;
        }
        Action::Move { direction } => move_step(ctx, actor, direction),
        Action::Prone => ctx.state.entity_mut(actor).conditions.prone = true,
        Action::Stand => {
            let e = ctx.state.entity_mut(actor);
            e.economy.movement_left -= stand_cost(e);
            e.conditions.prone = false;
        }
        Action::SecondWind => {
            let e = ctx.state.entity_mut(actor);
            e.economy.bonus -= 1;
            *e.feature_uses.entry(FeatureId::SecondWind).or_default() -= 1;
            let level = e.sheet.level as i32;
            let amount = roll_dice(1, 10, &mut ctx.state.rng) + level;
            heal(ctx, actor, actor, amount);
        }
        Action::ActionSurge => {
            let e = ctx.state.entity_mut(actor);
            *e.feature_uses.entry(FeatureId::ActionSurge).or_default() -= 1;
            e.turn.surged = true;
            e.economy.actions += 1;
        }
        Action::CastSpell { spell, target } => {
            spend_action(ctx, actor);
            cast_spell(ctx, actor, spell, target);
        }
    }
}

fn spend_action(ctx: &mut Ctx<'_>, actor: EntityId) {
    ctx.state.entity_mut(actor).economy.actions -= 1;
}

fn dash(ctx: &mut Ctx<'_>, actor: EntityId) {
    let e = ctx.state.entity_mut(actor);
    e.economy.movement_left += e.sheet.speed;
    e.turn.dashed = true;
}

fn end_turn(ctx: &mut Ctx<'_>) {
    let state = &mut *ctx.state;
    state.active_index += 1;
    if state.active_index >= state.initiative.len() {
        state.active_index = 0;
        state.round += 1;
        if state.round > state.max_rounds {
            return;
        }
        let first = state.initiative[0];
        ctx.push(first, EventKind::RoundStart);
    }
    start_active_turn(ctx);
}

fn start_active_turn(ctx: &mut Ctx<'_>) {
    ctx.state.begin_turn();
    if let Some(id) = ctx.state.active() {
        ctx.push(id, EventKind::TurnStart);
    }
}

/// Drop dead entities from the initiative order. If the acting entity died
/// on its own turn, play passes to the next creature.
fn cleanup_dead(ctx: &mut Ctx<'_>, actor: EntityId) {
    let active_before = ctx.state.active();
    let state = &mut *ctx.state;
    let mut index = 0;
    let mut active_index = state.active_index;
    let entities = &state.entities;
    state.initiative.retain(|id| {
        let keep = entities[id.index()].alive();
        if !keep && index < active_index {
            active_index -= 1;
        }
        index += 1;
        keep
    });
    state.active_index = active_index;
    if state.initiative.is_empty() {
        return;
    }
    let actor_died = active_before == Some(actor) && !state.entity(actor).alive();
    if state.active_index >= state.initiative.len() {
        state.active_index = 0;
        if actor_died {
            state.round += 1;
        }
    }
    if actor_died && !is_terminal(ctx.state).is_over() {
        start_active_turn(ctx);
    }
}

fn heal(ctx: &mut Ctx<'_>, actor: EntityId, target: EntityId, amount: i32) {
    let e = ctx.state.entity_mut(target);
    let before = e.hp;
    e.hp = (e.hp + amount.max(0) as u32).min(e.sheet.max_hp);
    let healed = e.hp - before;
    let hp_after = e.hp;
    ctx.push(
        actor,
        EventKind::Heal {
            target,
            amount: healed,
            hp_after,
        },
    );
}

fn deal_damage(ctx: &mut Ctx<'_>, actor: EntityId, target: EntityId, amount: i32, damage_type: DamageType) {
    let e = ctx.state.entity_mut(target);
    if !e.alive() {
        return;
    }
    let dealt = apply_damage(e, amount.max(0) as u32, damage_type);
    let hp_after = e.hp;
    let died = !e.alive();
    ctx.push(
        actor,
        EventKind::Damage {
            target,
            amount: dealt,
            damage_type,
            hp_after,
        },
    );
    if died {
        ctx.push(target, EventKind::Died);
    }
}

/// A wizard with a free reaction, a slot and the spell prepared.
fn can_shield(e: &EntityState) -> bool {
    e.alive()
        && !e.shield_up
        && e.economy.reaction > 0
        && e.spell_slots > 0
        && e.sheet.spells.contains(&SpellId::Shield)
}

fn raise_shield(ctx: &mut Ctx<'_>, id: EntityId) {
    let e = ctx.state.entity_mut(id);
    e.shield_up = true;
    e.economy.reaction -= 1;
    e.spell_slots -= 1;
    ctx.push(id, EventKind::ShieldCast);
}

/// Roll to hit; the target raises Shield when it would turn a hit into a miss.
fn roll_to_hit(
    ctx: &mut Ctx<'_>,
    attacker: EntityId,
    target: EntityId,
    bonus: i32,
    cover: CoverDegree,
    advantage: AdvantageState,
    source: &str,
) -> (bool, bool, AdvantageState) {
    let outcome = roll_d20(bonus, advantage, &mut ctx.state.rng);
    let mut ac = effective_ac(ctx.state.entity(target)) + cover.ac_bonus();
    let beats = |ac: i32| outcome.critical_hit || (!outcome.critical_miss && outcome.total >= ac);
    let mut hit = beats(ac);
    if hit && !outcome.critical_hit && can_shield(ctx.state.entity(target)) && !beats(ac + 5) {
        raise_shield(ctx, target);
        ac += 5;
        hit = false;
    }
    ctx.push(
        attacker,
        EventKind::Attack {
            target,
            source: source.to_string(),
            natural: outcome.natural,
            total: outcome.total,
            target_ac: ac,
            advantage,
            hit,
            critical: hit && outcome.critical_hit,
        },
    );
    (hit, hit && outcome.critical_hit, advantage)
}

fn weapon_attack(ctx: &mut Ctx<'_>, attacker: EntityId, target: EntityId, slot: u8, mode: AttackMode, offhand: bool) {
    let a = ctx.state.entity(attacker);
    let weapon = a.sheet.weapon_in_slot(slot as usize).expect("enumerated slot exists");
    if !offhand && weapon.properties.light {
        ctx.state.entity_mut(attacker).turn.light_attack_slot = Some(slot);
    }
    resolve_weapon_attack(ctx, attacker, target, &weapon, mode, offhand);
}

fn resolve_weapon_attack(
    ctx: &mut Ctx<'_>,
    attacker: EntityId,
    target: EntityId,
    weapon: &Weapon,
    mode: AttackMode,
    offhand: bool,
) {
    let a = ctx.state.entity(attacker);
    let t = ctx.state.entity(target);
    let dist = a.position.distance_ft(t.position);
    let long = mode == AttackMode::Ranged && dist > weapon.normal_range;
    let advantage = attack_advantage(a, t, mode, long);
    let cover = CoverDegree::from(line_of_sight(&ctx.state.map, a.position, t.position));
    let (bonus, damage_mod) = weapon_modifiers(a, weapon, mode);
    let damage_mod = if offhand { damage_mod.min(0) } else { damage_mod };
    let sneak_ok = a.class().has_feature(FeatureId::SneakAttack)
        && !a.turn.sneak_used
        && (weapon.properties.finesse || mode == AttackMode::Ranged);
    let (hit, crit, adv) = roll_to_hit(ctx, attacker, target, bonus, cover, advantage, weapon.name);
    if !hit {
        return;
    }
    ctx.state.entity_mut(attacker).turn.attack_landed = true;
    let mut amount = roll_damage(&weapon.damage.with_modifier(damage_mod), crit, &mut ctx.state.rng);
    if sneak_ok && adv == AdvantageState::Advantage {
        ctx.state.entity_mut(attacker).turn.sneak_used = true;
        amount += roll_dice(if crit { 2 } else { 1 }, 6, &mut ctx.state.rng);
    }
    deal_damage(ctx, attacker, target, amount, weapon.damage_type);
}

fn cast_spell(ctx: &mut Ctx<'_>, caster: EntityId, spell_id: SpellId, target: EntityId) {
    let spell = spell_id.stats();
    let c = ctx.state.entity_mut(caster);
    if spell.level > 0 {
        c.spell_slots -= 1;
    }
    let sheet = c.sheet.clone();
    match spell.effect {
        SpellEffect::Attack { damage, damage_type } => {
            let a = ctx.state.entity(caster);
            let t = ctx.state.entity(target);
            let advantage = attack_advantage(a, t, AttackMode::Ranged, false);
            let cover = CoverDegree::from(line_of_sight(&ctx.state.map, a.position, t.position));
            let bonus = sheet.spell_attack_bonus().unwrap_or(0);
            let (hit, crit, _) = roll_to_hit(ctx, caster, target, bonus, cover, advantage, spell.name);
            if hit {
                ctx.state.entity_mut(caster).turn.attack_landed = true;
                let amount = roll_damage(&damage, crit, &mut ctx.state.rng);
                deal_damage(ctx, caster, target, amount, damage_type);
            }
        }
        SpellEffect::Save {
            ability,
            damage,
            damage_type,
            half_on_save,
            ignores_cover,
        } => {
            let dc = sheet.spell_save_dc().unwrap_or(10);
            let a = ctx.state.entity(caster).position;
            let state = &mut *ctx.state;
            let t = &state.entities[target.index()];
            let cover = if ignores_cover || ability != Ability::Dex {
                CoverDegree::None
            } else {
                CoverDegree::from(line_of_sight(&state.map, a, t.position))
            };
            let result = saving_throw_with_bonus(t, ability, dc, cover.ac_bonus(), &mut state.rng)
                .expect("spell DC is positive");
            ctx.push(
                caster,
                EventKind::Save {
                    target,
                    ability,
                    natural: result.outcome.natural,
                    total: result.outcome.total,
                    dc,
                    passed: result.passed,
                },
            );
            let full = roll(&damage, &mut ctx.state.rng);
            let amount = match (result.passed, half_on_save) {
                (false, _) => full,
                (true, true) => full / 2,
                (true, false) => 0,
            };
            if amount > 0 || !result.passed {
                deal_damage(ctx, caster, target, amount, damage_type);
            }
        }
        SpellEffect::Missiles { darts, damage } => {
            if can_shield(ctx.state.entity(target)) {
                raise_shield(ctx, target);
                return;
            }
            for _ in 0..darts {
                let amount = roll(&damage, &mut ctx.state.rng);
                deal_damage(ctx, caster, target, amount, DamageType::Force);
            }
        }
        SpellEffect::Heal { dice } => {
            let m = sheet
                .class
                .spellcasting_ability()
                .map(|a| sheet.modifier(a))
                .unwrap_or(0);
            let amount = roll(&dice, &mut ctx.state.rng) + m;
            heal(ctx, caster, caster, amount);
        }
        SpellEffect::Shield { .. } => raise_shield(ctx, caster),
    }
}

fn move_step(ctx: &mut Ctx<'_>, mover: EntityId, dir: Direction) {
    let cost = move_cost(ctx.state, mover, dir).expect("enumerated move is affordable");
    let from = ctx.state.entity(mover).position;
    let to = from.step(dir);
    if !ctx.state.entity(mover).turn.disengaged {
        let threats: Vec<EntityId> = ctx
            .state
            .hostiles_of(mover)
            .filter(|h| {
                h.position.distance_ft(from) <= MELEE_REACH
                    && h.position.distance_ft(to) > MELEE_REACH
                    && h.economy.reaction > 0
                    && best_melee_weapon(h).is_some()
            })
            .map(|h| h.id)
            .collect();
        for h in threats {
            if !ctx.state.entity(mover).alive() {
                break;
            }
            let weapon = best_melee_weapon(ctx.state.entity(h)).expect("filtered above");
            ctx.state.entity_mut(h).economy.reaction -= 1;
            ctx.push(h, EventKind::OpportunityAttack { target: mover });
            resolve_weapon_attack(ctx, h, mover, &weapon, AttackMode::Melee, false);
        }
        if !ctx.state.entity(mover).alive() {
            return;
        }
    }
    let e = ctx.state.entity_mut(mover);
    e.economy.movement_left -= cost;
    e.position = to;
    let movement_left = e.economy.movement_left;
    ctx.push(
        mover,
        EventKind::Moved {
            from,
            to,
            cost,
            movement_left,
        },
    );
}

/// Melee weapon with the highest average damage for `e`.
pub fn best_melee_weapon(e: &EntityState) -> Option<Weapon> {
    e.sheet
        .weapons()
        .into_iter()
        .filter(|w| w.can_melee())
        .max_by(|a, b| {
            let avg = |w: &Weapon| w.damage.average() + weapon_modifiers(e, w, AttackMode::Melee).1 as f64;
            avg(a).total_cmp(&avg(b))
        })
}

/// Expected damage of an attack or damaging spell against its target, used
/// by scripted policies. Zero for anything else.
pub fn expected_damage(state: &GameState, action: &Action) -> f64 {
    let Some(me) = state.active_entity() else {
        return 0.0;
    };
    let Some(tid) = action.target() else {
        return 0.0;
    };
    let t = state.entity(tid);
    let dist = me.position.distance_ft(t.position);
    let cover = CoverDegree::from(line_of_sight(&state.map, me.position, t.position));
    let ac = effective_ac(t) + cover.ac_bonus();
    let weapon_case = |slot: u8, mode: AttackMode, offhand: bool| {
        let Some(w) = me.sheet.weapon_in_slot(slot as usize) else {
            return 0.0;
        };
        let long = mode == AttackMode::Ranged && dist > w.normal_range;
        let adv = attack_advantage(me, t, mode, long);
        let (bonus, dmg) = weapon_modifiers(me, &w, mode);
        let dmg = if offhand { dmg.min(0) } else { dmg };
        rules::hit_probability(bonus, ac, adv) * (w.damage.average() + dmg as f64).max(0.0)
    };
    match *action {
        Action::MeleeAttack { slot, .. } => weapon_case(slot, AttackMode::Melee, false),
        Action::RangedAttack { slot, .. } => weapon_case(slot, AttackMode::Ranged, false),
        Action::TwoWeaponAttack { slot, .. } => {
            let mode = if dist <= MELEE_REACH {
                AttackMode::Melee
            } else {
                AttackMode::Ranged
            };
            weapon_case(slot, mode, true)
        }
        Action::CastSpell { spell, .. } => match spell.stats().effect {
            SpellEffect::Attack { damage, .. } => {
                let adv = attack_advantage(me, t, AttackMode::Ranged, false);
                let bonus = me.sheet.spell_attack_bonus().unwrap_or(0);
                rules::hit_probability(bonus, ac, adv) * damage.average()
            }
            SpellEffect::Save {
                ability,
                damage,
                half_on_save,
                ..
            } => {
                let dc = me.sheet.spell_save_dc().unwrap_or(10);
                let need = dc - rules::save_modifier(t, ability);
                let p_pass = ((21 - need) as f64 / 20.0).clamp(0.0, 1.0);
                let on_pass = if half_on_save { 0.5 } else { 0.0 };
                damage.average() * ((1.0 - p_pass) + p_pass * on_pass)
            }
            SpellEffect::Missiles { darts, damage } => darts as f64 * damage.average(),
            _ => 0.0,
        },
        _ => 0.0,
    }
}
