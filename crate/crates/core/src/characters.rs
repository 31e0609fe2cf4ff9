//! Character sheets, equipment and the fixed per-class kits.
//!
//! Four level-2 sheets ship with the crate (`data/characters/*.toml`). Sheets
//! are validated on load: level and proficiency are pinned to level 2 and the
//! stored armor class must agree with the equipment.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::rules::{ability_modifier, DamageType, RollSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ability {
    Str,
    Dex,
    Con,
    Int,
    Wis,
    Cha,
}

impl fmt::Display for Ability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Ability::Str => "STR",
            Ability::Dex => "DEX",
            Ability::Con => "CON",
            Ability::Int => "INT",
            Ability::Wis => "WIS",
            Ability::Cha => "CHA",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbilityScores {
    pub str: u8,
    pub dex: u8,
    pub con: u8,
    pub int: u8,
    pub wis: u8,
    pub cha: u8,
}

impl AbilityScores {
    pub fn score(&self, ability: Ability) -> u8 {
        match ability {
            Ability::Str => self.str,
            Ability::Dex => self.dex,
            Ability::Con => self.con,
            Ability::Int => self.int,
            Ability::Wis => self.wis,
            Ability::Cha => self.cha,
        }
    }

    pub fn modifier(&self, ability: Ability) -> i32 {
        ability_modifier(self.score(ability))
    }

    fn iter(&self) -> impl Iterator<Item = (Ability, u8)> + '_ {
        [
            Ability::Str,
            Ability::Dex,
            Ability::Con,
            Ability::Int,
            Ability::Wis,
            Ability::Cha,
        ]
        .into_iter()
        .map(move |a| (a, self.score(a)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Fighter,
    Rogue,
    Wizard,
    Cleric,
}

impl ClassTag {
    pub const ALL: [ClassTag; 4] = [
        ClassTag::Fighter,
        ClassTag::Rogue,
        ClassTag::Wizard,
        ClassTag::Cleric,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassTag::Fighter => "fighter",
            ClassTag::Rogue => "rogue",
            ClassTag::Wizard => "wizard",
            ClassTag::Cleric => "cleric",
        }
    }

    pub fn save_proficiencies(self) -> [Ability; 2] {
        match self {
            ClassTag::Fighter => [Ability::Str, Ability::Con],
            ClassTag::Rogue => [Ability::Dex, Ability::Int],
            ClassTag::Wizard => [Ability::Int, Ability::Wis],
            ClassTag::Cleric => [Ability::Wis, Ability::Cha],
        }
    }

    pub fn spellcasting_ability(self) -> Option<Ability> {
        match self {
            ClassTag::Wizard => Some(Ability::Int),
            ClassTag::Cleric => Some(Ability::Wis),
            _ => None,
        }
    }

    /// First-level slots for a level-2 character.
    pub fn spell_slots(self) -> u8 {
        match self {
            ClassTag::Wizard | ClassTag::Cleric => 3,
            _ => 0,
        }
    }

    /// The fixed spell loadout for the class.
    pub fn spell_list(self) -> &'static [SpellId] {
        match self {
            ClassTag::Wizard => &[
                SpellId::FireBolt,
                SpellId::MagicMissile,
                SpellId::BurningHands,
                SpellId::Shield,
            ],
            ClassTag::Cleric => &[
                SpellId::SacredFlame,
                SpellId::CureWounds,
                SpellId::GuidingBolt,
            ],
            _ => &[],
        }
    }

    pub fn features(self) -> Vec<ClassFeature> {
        use FeatureId::*;
        match self {
            ClassTag::Fighter => vec![
                ClassFeature::new(SecondWind, Some(1), Trigger::Bonus),
                ClassFeature::new(ActionSurge, Some(1), Trigger::Free),
            ],
            ClassTag::Rogue => vec![
                ClassFeature::new(CunningAction, None, Trigger::Bonus),
                ClassFeature::new(SneakAttack, None, Trigger::Passive),
            ],
            ClassTag::Wizard | ClassTag::Cleric => {
                vec![ClassFeature::new(Spellcasting, None, Trigger::Action)]
            }
        }
    }

    pub fn has_feature(self, id: FeatureId) -> bool {
        self.features().iter().any(|f| f.id == id)
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureId {
    SecondWind,
    ActionSurge,
    CunningAction,
    SneakAttack,
    Spellcasting,
}

/// Which part of the action economy a feature spends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trigger {
    Action,
    Bonus,
    /// No economy slot (action surge).
    Free,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFeature {
    pub id: FeatureId,
    /// `None` means unlimited.
    pub uses_per_rest: Option<u8>,
    pub trigger: Trigger,
}

impl ClassFeature {
    pub const fn new(id: FeatureId, uses_per_rest: Option<u8>, trigger: Trigger) -> Self {
        Self {
            id,
            uses_per_rest,
            trigger,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeaponId {
    Dagger,
    Rapier,
    Longbow,
    Warhammer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeaponCategory {
    Melee,
    Ranged,
    /// Melee weapon that can also be thrown.
    Thrown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WeaponProperties {
    pub finesse: bool,
    pub light: bool,
    pub two_handed: bool,
    pub loading: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Weapon {
    pub id: WeaponId,
    pub name: &'static str,
    pub category: WeaponCategory,
    pub damage: RollSpec,
    pub damage_type: DamageType,
    /// Ranged/thrown bands in feet; 5/5 for melee-only weapons.
    pub normal_range: u32,
    pub long_range: u32,
    pub properties: WeaponProperties,
}

pub const MELEE_REACH: u32 = 5;

impl Weapon {
    pub fn can_melee(&self) -> bool {
        matches!(self.category, WeaponCategory::Melee | WeaponCategory::Thrown)
    }

    pub fn can_shoot(&self) -> bool {
        matches!(self.category, WeaponCategory::Ranged | WeaponCategory::Thrown)
    }
}

impl WeaponId {
    pub const ALL: [WeaponId; 4] = [
        WeaponId::Dagger,
        WeaponId::Rapier,
        WeaponId::Longbow,
        WeaponId::Warhammer,
    ];

    pub fn stats(self) -> Weapon {
        match self {
            WeaponId::Dagger => Weapon {
                id: self,
                name: "dagger",
                category: WeaponCategory::Thrown,
                damage: RollSpec::dice(1, 4),
                damage_type: DamageType::Piercing,
                normal_range: 20,
                long_range: 60,
                properties: WeaponProperties {
                    finesse: true,
                    light: true,
                    ..Default::default()
                },
            },
            WeaponId::Rapier => Weapon {
                id: self,
                name: "rapier",
                category: WeaponCategory::Melee,
                damage: RollSpec::dice(1, 8),
                damage_type: DamageType::Piercing,
                normal_range: MELEE_REACH,
                long_range: MELEE_REACH,
                properties: WeaponProperties {
                    finesse: true,
                    ..Default::default()
                },
            },
            WeaponId::Longbow => Weapon {
                id: self,
                name: "longbow",
                category: WeaponCategory::Ranged,
                damage: RollSpec::dice(1, 8),
                damage_type: DamageType::Piercing,
                normal_range: 150,
                long_range: 600,
                properties: WeaponProperties {
                    two_handed: true,
                    ..Default::default()
                },
            },
            // Versatile; one-handed with a shield.
            WeaponId::Warhammer => Weapon {
                id: self,
                name: "warhammer",
                category: WeaponCategory::Melee,
                damage: RollSpec::dice(1, 8),
                damage_type: DamageType::Bludgeoning,
                normal_range: MELEE_REACH,
                long_range: MELEE_REACH,
                properties: WeaponProperties::default(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArmorKind {
    Light,
    Medium,
    Shield,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Item {
    Dagger,
    Rapier,
    Longbow,
    Warhammer,
    LeatherArmor,
    ScaleMail,
    Shield,
    Torch,
}

impl Item {
    pub fn weapon(self) -> Option<WeaponId> {
        match self {
            Item::Dagger => Some(WeaponId::Dagger),
            Item::Rapier => Some(WeaponId::Rapier),
            Item::Longbow => Some(WeaponId::Longbow),
            Item::Warhammer => Some(WeaponId::Warhammer),
            _ => None,
        }
    }

    /// `(kind, base AC or bonus)` for armor items.
    pub fn armor(self) -> Option<(ArmorKind, i32)> {
        match self {
            Item::LeatherArmor => Some((ArmorKind::Light, 11)),
            Item::ScaleMail => Some((ArmorKind::Medium, 14)),
            Item::Shield => Some((ArmorKind::Shield, 2)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpellId {
    FireBolt,
    MagicMissile,
    BurningHands,
    Shield,
    SacredFlame,
    CureWounds,
    GuidingBolt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpellCost {
    Action,
    Reaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpellEffect {
    /// Ranged spell attack roll.
    Attack { damage: RollSpec, damage_type: DamageType },
    /// Saving throw against the caster's DC.
    Save {
        ability: Ability,
        damage: RollSpec,
        damage_type: DamageType,
        half_on_save: bool,
        ignores_cover: bool,
    },
    /// Auto-hitting darts.
    Missiles { darts: u32, damage: RollSpec },
    /// Heal self; the caster's spellcasting modifier is added.
    Heal { dice: RollSpec },
    /// +AC until the start of the caster's next turn.
    Shield { ac_bonus: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Spell {
    pub id: SpellId,
    pub name: &'static str,
    pub level: u8,
    pub cost: SpellCost,
    pub range: u32,
    pub effect: SpellEffect,
}

impl Spell {
    pub fn targets_self(&self) -> bool {
        matches!(self.effect, SpellEffect::Heal { .. } | SpellEffect::Shield { .. })
    }
}

impl SpellId {
    pub const ALL: [SpellId; 7] = [
        SpellId::FireBolt,
        SpellId::MagicMissile,
        SpellId::BurningHands,
        SpellId::Shield,
        SpellId::SacredFlame,
        SpellId::CureWounds,
        SpellId::GuidingBolt,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn stats(self) -> Spell {
        use SpellEffect::*;
        let (name, level, cost, range, effect) = match self {
            SpellId::FireBolt => (
                "fire bolt",
                0,
                SpellCost::Action,
                120,
                Attack {
                    damage: RollSpec::dice(1, 10),
                    damage_type: DamageType::Fire,
                },
            ),
            SpellId::MagicMissile => (
                "magic missile",
                1,
                SpellCost::Action,
                120,
                Missiles {
                    darts: 3,
                    damage: RollSpec::dice(1, 4).with_modifier(1),
                },
            ),
            SpellId::BurningHands => (
                "burning hands",
                1,
                SpellCost::Action,
                15,
                Save {
                    ability: Ability::Dex,
                    damage: RollSpec::dice(3, 6),
                    damage_type: DamageType::Fire,
                    half_on_save: true,
                    ignores_cover: false,
                },
            ),
            SpellId::Shield => (
                "shield",
                1,
                SpellCost::Reaction,
                0,
                Shield { ac_bonus: 5 },
            ),
            SpellId::SacredFlame => (
                "sacred flame",
                0,
                SpellCost::Action,
                60,
                Save {
                    ability: Ability::Dex,
                    damage: RollSpec::dice(1, 8),
                    damage_type: DamageType::Radiant,
                    half_on_save: false,
                    ignores_cover: true,
                },
            ),
            SpellId::CureWounds => (
                "cure wounds",
                1,
                SpellCost::Action,
                5,
                Heal {
                    dice: RollSpec::dice(1, 8),
                },
            ),
            SpellId::GuidingBolt => (
                "guiding bolt",
                1,
                SpellCost::Action,
                120,
                Attack {
                    damage: RollSpec::dice(4, 6),
                    damage_type: DamageType::Radiant,
                },
            ),
        };
        Spell {
            id: self,
            name,
            level,
            cost,
            range,
            effect,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SheetError {
    #[error("character sheet parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SheetError {
    SheetError::Invalid {
        field,
        reason: reason.into(),
    }
}

pub const SHEET_LEVEL: u8 = 2;
pub const LEVEL_2_PROFICIENCY: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterSheet {
    pub name: String,
    pub race: String,
    pub class: ClassTag,
    pub level: u8,
    pub max_hp: u32,
    pub speed: u32,
    pub proficiency_bonus: i32,
    pub armor_class: i32,
    pub equipment: Vec<Item>,
    #[serde(default)]
    pub spells: Vec<SpellId>,
    pub abilities: AbilityScores,
}

impl CharacterSheet {
    pub fn modifier(&self, ability: Ability) -> i32 {
        self.abilities.modifier(ability)
    }

    /// Weapons in equipment order; the index is the weapon slot.
    pub fn weapons(&self) -> Vec<Weapon> {
        self.equipment
            .iter()
            .filter_map(|i| i.weapon())
            .map(WeaponId::stats)
            .collect()
    }

    pub fn weapon_in_slot(&self, slot: usize) -> Option<Weapon> {
        self.weapons().get(slot).copied()
    }

    pub fn spell_attack_bonus(&self) -> Option<i32> {
        self.class
            .spellcasting_ability()
            .map(|a| self.modifier(a) + self.proficiency_bonus)
    }

    pub fn spell_save_dc(&self) -> Option<i32> {
        self.spell_attack_bonus().map(|b| 8 + b)
    }

    pub fn is_save_proficient(&self, ability: Ability) -> bool {
        self.class.save_proficiencies().contains(&ability)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sheet serializes")
    }
}

/// Parse and validate a character config document.
pub fn load_sheet(text: &str) -> Result<CharacterSheet, SheetError> {
    let sheet: CharacterSheet = toml::from_str(text)?;
    validate(&sheet)?;
    Ok(sheet)
}

fn validate(sheet: &CharacterSheet) -> Result<(), SheetError> {
    if sheet.name.trim().is_empty() {
        return Err(invalid("name", "empty"));
    }
    if sheet.level != SHEET_LEVEL {
        return Err(invalid(
            "level",
            format!("only level {SHEET_LEVEL} characters are supported, got {}", sheet.level),
        ));
    }
    if sheet.proficiency_bonus != LEVEL_2_PROFICIENCY {
        return Err(invalid(
            "proficiency_bonus",
            format!("level 2 proficiency is +2, got {}", sheet.proficiency_bonus),
        ));
    }
    if sheet.max_hp == 0 {
        return Err(invalid("max_hp", "must be positive"));
    }
    if sheet.speed == 0 || !sheet.speed.is_multiple_of(5) {
        return Err(invalid("speed", "must be a positive multiple of 5"));
    }
    for (ability, score) in sheet.abilities.iter() {
        if !(1..=30).contains(&score) {
            return Err(invalid(
                "abilities",
                format!("{ability} score {score} outside 1..=30"),
            ));
        }
    }
    for spell in &sheet.spells {
        if !sheet.class.spell_list().contains(spell) {
            return Err(invalid(
                "spells",
                format!("{spell:?} is not in the {} loadout", sheet.class),
            ));
        }
    }
    let derived = derive_ac(sheet)?;
    if derived != sheet.armor_class {
        return Err(invalid(
            "armor_class",
            format!("stored {} but equipment gives {derived}", sheet.armor_class),
        ));
    }
    Ok(())
}

/// Armor class from equipment: armor base + (capped) DEX + shield.
pub fn derive_ac(sheet: &CharacterSheet) -> Result<i32, SheetError> {
    let dex = sheet.modifier(Ability::Dex);
    let mut body: Option<(ArmorKind, i32)> = None;
    let mut shield = 0;
    for item in &sheet.equipment {
        match item.armor() {
            Some((ArmorKind::Shield, bonus)) => {
                if shield > 0 {
                    return Err(invalid("equipment", "more than one shield"));
                }
                shield = bonus;
            }
            Some(armor) => {
                if body.is_some() {
                    return Err(invalid("equipment", "more than one suit of armor"));
                }
                body = Some(armor);
            }
            None => {}
        }
    }
    let base = match body {
        None => 10 + dex,
        Some((ArmorKind::Light, base)) => base + dex,
        Some((ArmorKind::Medium, base)) => base + dex.min(2),
        Some((ArmorKind::Shield, _)) => unreachable!(),
    };
    Ok(base + shield)
}

const GOM: &str = include_str!("../data/characters/gom.toml");
const BELLY: &str = include_str!("../data/characters/belly.toml");
const CRYS: &str = include_str!("../data/characters/crys.toml");
const SHOR: &str = include_str!("../data/characters/shor.toml");

/// The bundled sheet for a class.
pub fn bundled(class: ClassTag) -> Arc<CharacterSheet> {
    static SHEETS: OnceLock<Vec<Arc<CharacterSheet>>> = OnceLock::new();
    let sheets = SHEETS.get_or_init(|| {
        [GOM, BELLY, CRYS, SHOR]
            .iter()
            .map(|text| Arc::new(load_sheet(text).expect("bundled sheet is valid")))
            .collect()
    });
    sheets[class.index()].clone()
}

/// Sheet files that replace the bundled sheet on one side of every duel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SheetOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hero: Option<Arc<CharacterSheet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enemy: Option<Arc<CharacterSheet>>,
}

impl SheetOverrides {
    pub fn hero_sheet(&self, drawn: ClassTag) -> Arc<CharacterSheet> {
        self.hero.clone().unwrap_or_else(|| bundled(drawn))
    }

    pub fn enemy_sheet(&self, drawn: ClassTag) -> Arc<CharacterSheet> {
        self.enemy.clone().unwrap_or_else(|| bundled(drawn))
    }
}

pub fn bundled_by_name(name: &str) -> Option<Arc<CharacterSheet>> {
    ClassTag::ALL
        .into_iter()
        .map(bundled)
        .find(|s| s.name.eq_ignore_ascii_case(name) || s.class.name() == name.to_ascii_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_gom_matches_table() {
        let gom = bundled(ClassTag::Fighter);
        assert_eq!(gom.name, "Gom");
        assert_eq!(gom.race, "High Elf");
        assert_eq!(gom.level, 2);
        assert_eq!(gom.max_hp, 24);
        assert_eq!(gom.abilities.dex, 20);
        assert_eq!(
            gom.equipment,
            vec![Item::Rapier, Item::Longbow, Item::LeatherArmor, Item::Shield]
        );
    }

    #[test]
    fn bundled_crys_matches_table() {
        let crys = bundled(ClassTag::Wizard);
        assert_eq!((crys.class, crys.max_hp, crys.abilities.int), (ClassTag::Wizard, 14, 18));
        assert_eq!(crys.equipment, vec![Item::Dagger]);
        assert_eq!(crys.armor_class, 12);
    }

    #[test]
    fn bundled_hit_points_as_printed() {
        let hp: Vec<_> = ClassTag::ALL.iter().map(|&c| (bundled(c).name.clone(), bundled(c).max_hp)).collect();
        assert_eq!(
            hp,
            vec![
                ("Gom".to_string(), 24),
                ("Belly".to_string(), 18),
                ("Crys".to_string(), 14),
                ("Shor".to_string(), 16)
            ]
        );
    }

    #[test]
    fn all_abilities_match_table() {
        let shor = bundled(ClassTag::Cleric);
        let a = shor.abilities;
        assert_eq!([a.str, a.dex, a.con, a.int, a.wis, a.cha], [14, 10, 16, 10, 16, 12]);
        let b = bundled(ClassTag::Rogue).abilities;
        assert_eq!([b.str, b.dex, b.con, b.int, b.wis, b.cha], [11, 20, 16, 11, 12, 17]);
        let g = bundled(ClassTag::Fighter).abilities;
        assert_eq!([g.str, g.dex, g.con, g.int, g.wis, g.cha], [12, 20, 16, 16, 12, 11]);
        let c = bundled(ClassTag::Wizard).abilities;
        assert_eq!([c.str, c.dex, c.con, c.int, c.wis, c.cha], [10, 15, 14, 18, 12, 8]);
    }

    #[test]
    fn level_three_rejected() {
        let text = GOM.replace("level = 2", "level = 3");
        match load_sheet(&text) {
            Err(SheetError::Invalid { field, .. }) => assert_eq!(field, "level"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_it() {
        let text = GOM.replace("max_hp = 24\n", "");
        let err = load_sheet(&text).unwrap_err().to_string();
        assert!(err.contains("max_hp"), "{err}");
    }

    #[test]
    fn stored_ac_must_match_equipment() {
        let text = GOM.replace("armor_class = 18", "armor_class = 17");
        assert!(matches!(
            load_sheet(&text),
            Err(SheetError::Invalid { field: "armor_class", .. })
        ));
    }

    #[test]
    fn derive_ac_cases() {
        assert_eq!(derive_ac(&bundled(ClassTag::Fighter)).unwrap(), 18);
        assert_eq!(derive_ac(&bundled(ClassTag::Cleric)).unwrap(), 16);
        assert_eq!(derive_ac(&bundled(ClassTag::Rogue)).unwrap(), 16);
        let mut bare = (*bundled(ClassTag::Wizard)).clone();
        bare.abilities.dex = 10;
        bare.equipment.clear();
        assert_eq!(derive_ac(&bare).unwrap(), 10);
    }

    #[test]
    fn scale_mail_caps_dex() {
        let mut s = (*bundled(ClassTag::Cleric)).clone();
        s.abilities.dex = 18;
        assert_eq!(derive_ac(&s).unwrap(), 14 + 2 + 2);
    }

    #[test]
    fn two_body_armors_rejected() {
        let mut s = (*bundled(ClassTag::Cleric)).clone();
        s.equipment.push(Item::LeatherArmor);
        assert!(derive_ac(&s).is_err());
    }

    #[test]
    fn sheet_round_trip_is_identity() {
        for class in ClassTag::ALL {
            let sheet = bundled(class);
            let back = load_sheet(&sheet.to_toml()).unwrap();
            assert_eq!(*sheet, back);
        }
    }

    #[test]
    fn spell_outside_loadout_rejected() {
        let text = CRYS.replace("\"fire_bolt\"", "\"cure_wounds\"");
        assert!(matches!(
            load_sheet(&text),
            Err(SheetError::Invalid { field: "spells", .. })
        ));
    }

    #[test]
    fn casters_have_three_slots_and_dcs() {
        let crys = bundled(ClassTag::Wizard);
        assert_eq!(crys.class.spell_slots(), 3);
        assert_eq!(crys.spell_save_dc(), Some(14));
        assert_eq!(crys.spell_attack_bonus(), Some(6));
        let shor = bundled(ClassTag::Cleric);
        assert_eq!(shor.spell_save_dc(), Some(13));
        assert_eq!(bundled(ClassTag::Fighter).spell_save_dc(), None);
    }
}
