//! Dice and the SRD subset: ability modifiers, attack rolls, saving throws
//! and damage.

use serde::{Deserialize, Serialize};

use crate::battlemap::Visibility;
use crate::characters::{Ability, Weapon, MELEE_REACH};
use crate::engine::EntityState;
use crate::rng::RngStream;

pub const DIE_SIDES: [u32; 6] = [4, 6, 8, 10, 12, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamageType {
    Piercing,
    Bludgeoning,
    Fire,
    Radiant,
    Force,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RulesError {
    #[error("invalid dice {count}d{sides}")]
    InvalidDice { count: u32, sides: u32 },
    #[error("ability score {0} outside 1..=30")]
    ScoreOutOfRange(u8),
    #[error("target is {distance} ft away, beyond {range} ft")]
    OutOfRange { distance: u32, range: u32 },
    #[error("saving throw DC must be at least 1")]
    InvalidDc,
}

/// `count`d`sides` + `modifier`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RollSpec {
    count: u32,
    sides: u32,
    modifier: i32,
}

impl RollSpec {
    pub fn new(count: u32, sides: u32, modifier: i32) -> Result<Self, RulesError> {
        if count == 0 || !DIE_SIDES.contains(&sides) {
            return Err(RulesError::InvalidDice { count, sides });
        }
        Ok(Self {
            count,
            sides,
            modifier,
        })
    }

    /// Unchecked constructor for the static tables.
    pub(crate) const fn dice(count: u32, sides: u32) -> Self {
        Self {
            count,
            sides,
            modifier: 0,
        }
    }

    pub const fn with_modifier(self, modifier: i32) -> Self {
        Self { modifier, ..self }
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn sides(&self) -> u32 {
        self.sides
    }

    pub fn modifier(&self) -> i32 {
        self.modifier
    }

    pub fn min(&self) -> i32 {
        self.count as i32 + self.modifier
    }

    pub fn max(&self) -> i32 {
        (self.count * self.sides) as i32 + self.modifier
    }

    pub fn average(&self) -> f64 {
        self.count as f64 * (self.sides as f64 + 1.0) / 2.0 + self.modifier as f64
    }
}

/// Sum of `count` dice; exactly `count` draws.
pub fn roll_dice(count: u32, sides: u32, rng: &mut RngStream) -> i32 {
    (0..count).map(|_| rng.die(sides) as i32).sum()
}

pub fn roll(spec: &RollSpec, rng: &mut RngStream) -> i32 {
    roll_dice(spec.count, spec.sides, rng) + spec.modifier
}

/// Damage dice, doubled on a critical hit; the modifier is added once.
pub fn roll_damage(spec: &RollSpec, critical: bool, rng: &mut RngStream) -> i32 {
    let count = if critical { spec.count * 2 } else { spec.count };
    (roll_dice(count, spec.sides, rng) + spec.modifier).max(0)
}

/// `floor((score - 10) / 2)`.
pub fn ability_modifier(score: u8) -> i32 {
    (score as i32 - 10).div_euclid(2)
}

pub fn checked_ability_modifier(score: u8) -> Result<i32, RulesError> {
    if (1..=30).contains(&score) {
        Ok(ability_modifier(score))
    } else {
        Err(RulesError::ScoreOutOfRange(score))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageState {
    #[default]
    Normal,
    Advantage,
    Disadvantage,
}

impl AdvantageState {
    /// Any advantage and any disadvantage cancel out.
    pub fn from_sources(advantage: bool, disadvantage: bool) -> Self {
        match (advantage, disadvantage) {
            (true, false) => AdvantageState::Advantage,
            (false, true) => AdvantageState::Disadvantage,
            _ => AdvantageState::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct D20Outcome {
    pub natural: u32,
    pub total: i32,
    pub critical_hit: bool,
    pub critical_miss: bool,
    pub advantage: AdvantageState,
}

pub fn roll_d20(modifier: i32, advantage: AdvantageState, rng: &mut RngStream) -> D20Outcome {
    let first = rng.die(20);
    let natural = match advantage {
        AdvantageState::Normal => first,
        AdvantageState::Advantage => first.max(rng.die(20)),
        AdvantageState::Disadvantage => first.min(rng.die(20)),
    };
    D20Outcome {
        natural,
        total: natural as i32 + modifier,
        critical_hit: natural == 20,
        critical_miss: natural == 1,
        advantage,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverDegree {
    #[default]
    None,
    Half,
}

impl CoverDegree {
    pub fn ac_bonus(self) -> i32 {
        match self {
            CoverDegree::None => 0,
            CoverDegree::Half => 2,
        }
    }
}

impl From<Visibility> for CoverDegree {
    fn from(v: Visibility) -> Self {
        match v {
            Visibility::HalfCover => CoverDegree::Half,
            _ => CoverDegree::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackMode {
    Melee,
    Ranged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRoll {
    pub outcome: D20Outcome,
    /// AC including cover.
    pub target_ac: i32,
    pub hit: bool,
}

/// Hit iff natural 20, or total meets AC + cover and the die is not a 1.
pub fn resolve_attack(
    attack_bonus: i32,
    target_ac: i32,
    cover: CoverDegree,
    advantage: AdvantageState,
    rng: &mut RngStream,
) -> AttackRoll {
    let outcome = roll_d20(attack_bonus, advantage, rng);
    let effective_ac = target_ac + cover.ac_bonus();
    let hit = outcome.critical_hit || (!outcome.critical_miss && outcome.total >= effective_ac);
    AttackRoll {
        outcome,
        target_ac: effective_ac,
        hit,
    }
}

/// Chance that an attack with `bonus` hits `ac` (cover already included).
pub fn hit_probability(bonus: i32, ac: i32, advantage: AdvantageState) -> f64 {
    let hits = (1..=20)
        .filter(|&n| n == 20 || (n != 1 && n + bonus >= ac))
        .count();
    let q = hits as f64 / 20.0;
    match advantage {
        AdvantageState::Normal => q,
        AdvantageState::Advantage => 1.0 - (1.0 - q) * (1.0 - q),
        AdvantageState::Disadvantage => q * q,
    }
}

/// Advantage sources for an attack from `attacker` on `target`.
pub fn attack_advantage(attacker: &EntityState, target: &EntityState, mode: AttackMode, long_range: bool) -> AdvantageState {
    let distance = attacker.position.distance_ft(target.position);
    let mut adv = false;
    let mut dis = attacker.conditions.prone || target.conditions.dodging;
    if target.conditions.prone {
        if distance <= MELEE_REACH {
            adv = true;
        } else {
            dis = true;
        }
    }
    if mode == AttackMode::Ranged && (long_range || distance <= MELEE_REACH) {
        dis = true;
    }
    AdvantageState::from_sources(adv, dis)
}

/// Attack bonus and damage modifier for a weapon: finesse uses the better of
/// STR and DEX, ranged weapons DEX, other melee STR.
pub fn weapon_modifiers(attacker: &EntityState, weapon: &Weapon, mode: AttackMode) -> (i32, i32) {
    let sheet = &attacker.sheet;
    let str_mod = sheet.modifier(Ability::Str);
    let dex_mod = sheet.modifier(Ability::Dex);
    let ability = if weapon.properties.finesse {
        str_mod.max(dex_mod)
    } else if mode == AttackMode::Ranged && weapon.category == crate::characters::WeaponCategory::Ranged {
        dex_mod
    } else {
        str_mod
    };
    (ability + sheet.proficiency_bonus, ability)
}

pub fn effective_ac(target: &EntityState) -> i32 {
    target.sheet.armor_class + if target.shield_up { 5 } else { 0 }
}

/// Roll a weapon attack. The caller has already checked sight.
pub fn attack_roll(
    attacker: &EntityState,
    target: &EntityState,
    weapon: &Weapon,
    mode: AttackMode,
    cover: CoverDegree,
    rng: &mut RngStream,
) -> Result<AttackRoll, RulesError> {
    let distance = attacker.position.distance_ft(target.position);
    let range = match mode {
        AttackMode::Melee if weapon.can_melee() => MELEE_REACH,
        AttackMode::Ranged if weapon.can_shoot() => weapon.long_range,
        _ => 0,
    };
    if distance > range {
        return Err(RulesError::OutOfRange { distance, range });
    }
    let long = mode == AttackMode::Ranged && distance > weapon.normal_range;
    let advantage = attack_advantage(attacker, target, mode, long);
    let (bonus, _) = weapon_modifiers(attacker, weapon, mode);
    Ok(resolve_attack(bonus, effective_ac(target), cover, advantage, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaveResult {
    pub outcome: D20Outcome,
    pub dc: i32,
    pub passed: bool,
}

pub fn save_modifier(entity: &EntityState, ability: Ability) -> i32 {
    let sheet = &entity.sheet;
    sheet.modifier(ability)
        + if sheet.is_save_proficient(ability) {
            sheet.proficiency_bonus
        } else {
            0
        }
}

/// Pass iff d20 + modifier (+ proficiency) meets the DC. A natural 20 is not
/// an automatic success.
pub fn saving_throw(entity: &EntityState, ability: Ability, dc: i32, rng: &mut RngStream) -> Result<SaveResult, RulesError> {
    saving_throw_with_bonus(entity, ability, dc, 0, rng)
}

/// Saving throw with an extra flat bonus (half cover on DEX saves).
pub fn saving_throw_with_bonus(
    entity: &EntityState,
    ability: Ability,
    dc: i32,
    bonus: i32,
    rng: &mut RngStream,
) -> Result<SaveResult, RulesError> {
    if dc < 1 {
        return Err(RulesError::InvalidDc);
    }
    let advantage = AdvantageState::from_sources(ability == Ability::Dex && entity.conditions.dodging, false);
    let outcome = roll_d20(save_modifier(entity, ability) + bonus, advantage, rng);
    Ok(SaveResult {
        outcome,
        dc,
        passed: outcome.total >= dc,
    })
}

/// Subtract hit points, flooring at zero; zero hit points is death.
/// Returns the hit points actually removed.
pub fn apply_damage(target: &mut EntityState, amount: u32, _damage_type: DamageType) -> u32 {
    let dealt = amount.min(target.hp);
    target.hp -= dealt;
    if target.hp == 0 {
        target.conditions.dead = true;
    }
    dealt
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::battlemap::Position;
    use crate::characters::{bundled, ClassTag, WeaponId};
    use crate::engine::{EntityId, EntityState, Team};

    fn entity(class: ClassTag, pos: Position) -> EntityState {
        EntityState::new(EntityId(0), Team::Heroes, bundled(class), pos)
    }

    #[test]
    fn roll_spec_validation() {
        assert!(RollSpec::new(0, 6, 0).is_err());
        assert!(RollSpec::new(1, 7, 0).is_err());
        assert!(RollSpec::new(2, 6, 3).is_ok());
    }

    #[test]
    fn forced_roll_arithmetic() {
        let mut rng = RngStream::new(0);
        rng.force_dice(&[10]);
        assert_eq!(roll(&RollSpec::new(1, 20, 5).unwrap(), &mut rng), 15);
        rng.force_dice(&[1, 1]);
        assert_eq!(roll(&RollSpec::new(2, 6, 0).unwrap(), &mut rng), 2);
    }

    #[test]
    fn roll_advances_by_count() {
        let mut rng = RngStream::new(3);
        roll(&RollSpec::new(4, 6, 0).unwrap(), &mut rng);
        assert_eq!(rng.position(), 4);
    }

    #[test]
    fn seeded_rolls_repeat() {
        let spec = RollSpec::new(1, 20, 0).unwrap();
        let a = roll(&spec, &mut RngStream::new(42));
        let b = roll(&spec, &mut RngStream::new(42));
        assert_eq!(a, b);
    }

    #[test]
    fn ability_modifier_table() {
        // SRD table: 1 -5, 2-3 -4, ..., 10-11 0, ..., 30 +10
        let table = [
            (1, -5),
            (2, -4),
            (3, -4),
            (8, -1),
            (9, -1),
            (10, 0),
            (11, 0),
            (15, 2),
            (20, 5),
            (30, 10),
        ];
        for (score, m) in table {
            assert_eq!(ability_modifier(score), m, "score {score}");
        }
        assert!(checked_ability_modifier(0).is_err());
        assert!(checked_ability_modifier(31).is_err());
    }

    #[test]
    fn gom_rapier_hits_crys_on_five() {
        let gom = entity(ClassTag::Fighter, Position::new(0, 0));
        let crys = entity(ClassTag::Wizard, Position::new(1, 0));
        let rapier = WeaponId::Rapier.stats();
        assert_eq!(weapon_modifiers(&gom, &rapier, AttackMode::Melee).0, 7);
        assert_eq!(crys.sheet.armor_class, 12);
        let mut rng = RngStream::new(0);
        rng.force_dice(&[5]);
        let r = attack_roll(&gom, &crys, &rapier, AttackMode::Melee, CoverDegree::None, &mut rng).unwrap();
        assert_eq!(r.outcome.total, 12);
        assert!(r.hit);
    }

    #[test]
    fn natural_one_always_misses() {
        let mut rng = RngStream::new(0);
        rng.force_dice(&[1]);
        let r = resolve_attack(99, 10, CoverDegree::None, AdvantageState::Normal, &mut rng);
        assert!(!r.hit && r.outcome.critical_miss);
    }

    #[test]
    fn natural_twenty_always_hits() {
        let mut rng = RngStream::new(0);
        rng.force_dice(&[20]);
        let r = resolve_attack(-10, 30, CoverDegree::Half, AdvantageState::Normal, &mut rng);
        assert!(r.hit && r.outcome.critical_hit);
    }

    #[test]
    fn half_cover_adds_two() {
        // total = AC + 1 misses behind half cover
        let mut rng = RngStream::new(0);
        rng.force_dice(&[11]);
        let r = resolve_attack(2, 12, CoverDegree::Half, AdvantageState::Normal, &mut rng);
        assert_eq!(r.outcome.total, 13);
        assert_eq!(r.target_ac, 14);
        assert!(!r.hit);
    }

    #[test]
    fn out_of_range_rejected() {
        let gom = entity(ClassTag::Fighter, Position::new(0, 0));
        let crys = entity(ClassTag::Wizard, Position::new(3, 0));
        let mut rng = RngStream::new(0);
        let err = attack_roll(&gom, &crys, &WeaponId::Rapier.stats(), AttackMode::Melee, CoverDegree::None, &mut rng);
        assert_eq!(err, Err(RulesError::OutOfRange { distance: 15, range: 5 }));
    }

    #[test]
    fn ranged_in_melee_has_disadvantage() {
        let gom = entity(ClassTag::Fighter, Position::new(0, 0));
        let crys = entity(ClassTag::Wizard, Position::new(1, 1));
        assert_eq!(attack_advantage(&gom, &crys, AttackMode::Ranged, false), AdvantageState::Disadvantage);
        let far = entity(ClassTag::Wizard, Position::new(4, 1));
        assert_eq!(attack_advantage(&gom, &far, AttackMode::Ranged, false), AdvantageState::Normal);
    }

    #[test]
    fn prone_target_melee_advantage_ranged_disadvantage() {
        let gom = entity(ClassTag::Fighter, Position::new(0, 0));
        let mut near = entity(ClassTag::Wizard, Position::new(1, 0));
        near.conditions.prone = true;
        assert_eq!(attack_advantage(&gom, &near, AttackMode::Melee, false), AdvantageState::Advantage);
        let mut far = entity(ClassTag::Wizard, Position::new(4, 0));
        far.conditions.prone = true;
        assert_eq!(attack_advantage(&gom, &far, AttackMode::Ranged, false), AdvantageState::Disadvantage);
    }

    #[test]
    fn saving_throw_boundary_and_shor() {
        let mut plain = entity(ClassTag::Fighter, Position::new(0, 0));
        let mut sheet = (*plain.sheet).clone();
        sheet.abilities.int = 10;
        plain.sheet = Arc::new(sheet);
        let mut rng = RngStream::new(0);
        rng.force_dice(&[10]);
        // Fighter, INT 10, not proficient: +0
        assert!(saving_throw(&plain, Ability::Int, 10, &mut rng).unwrap().passed);

        let shor = entity(ClassTag::Cleric, Position::new(0, 0));
        rng.force_dice(&[10]);
        let r = saving_throw(&shor, Ability::Wis, 13, &mut rng).unwrap();
        // WIS 16 (+3) plus cleric WIS save proficiency (+2)
        assert_eq!(r.outcome.total, 15);
        assert!(r.passed);
    }

    #[test]
    fn natural_twenty_save_can_fail() {
        let crys = entity(ClassTag::Wizard, Position::new(0, 0));
        let mut rng = RngStream::new(0);
        rng.force_dice(&[20]);
        let r = saving_throw(&crys, Ability::Str, 30, &mut rng).unwrap();
        assert_eq!(r.outcome.total, 20);
        assert!(!r.passed);
        assert!(saving_throw(&crys, Ability::Str, 0, &mut rng).is_err());
    }

    #[test]
    fn damage_floors_at_zero() {
        let mut e = entity(ClassTag::Rogue, Position::new(0, 0));
        e.hp = 15;
        assert_eq!(apply_damage(&mut e, 0, DamageType::Piercing), 0);
        assert_eq!(e.hp, 15);
        assert_eq!(apply_damage(&mut e, 20, DamageType::Piercing), 15);
        assert_eq!(e.hp, 0);
        assert!(e.conditions.dead);
    }

    #[test]
    fn crys_half_health() {
        let mut crys = entity(ClassTag::Wizard, Position::new(0, 0));
        apply_damage(&mut crys, 7, DamageType::Fire);
        assert_eq!((crys.hp, crys.sheet.max_hp), (7, 14));
        assert_eq!(crys.health_percent(), 50.0);
    }

    #[test]
    fn critical_doubles_dice_not_modifier() {
        let mut rng = RngStream::new(0);
        rng.force_dice(&[3, 4]);
        let spec = RollSpec::dice(1, 8).with_modifier(5);
        assert_eq!(roll_damage(&spec, true, &mut rng), 12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn roll_within_bounds(count in 1u32..6, side_idx in 0usize..6, modifier in -5i32..10, seed in any::<u64>()) {
                let spec = RollSpec::new(count, DIE_SIDES[side_idx], modifier).unwrap();
                let mut rng = RngStream::new(seed);
                for _ in 0..50 {
                    let v = roll(&spec, &mut rng);
                    prop_assert!(v >= spec.min() && v <= spec.max());
                }
                prop_assert_eq!(rng.position(), 50 * count as u64);
            }

            #[test]
            fn hit_monotone_in_natural(bonus in -5i32..15, ac in 5i32..25, half in any::<bool>()) {
                let cover = if half { CoverDegree::Half } else { CoverDegree::None };
                let hits: Vec<bool> = (2..=19).map(|n| {
                    let mut rng = RngStream::new(0);
                    rng.force_dice(&[n]);
                    resolve_attack(bonus, ac, cover, AdvantageState::Normal, &mut rng).hit
                }).collect();
                for w in hits.windows(2) {
                    prop_assert!(!w[0] || w[1]);
                }
            }
        }
    }
}
