use serde::{Deserialize, Serialize};

use super::state::{EntityId, GameState};
use crate::battlemap::Direction;
use crate::characters::SpellId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    EndTurn,
    MeleeAttack { target: EntityId, slot: u8 },
    RangedAttack { target: EntityId, slot: u8 },
    /// Off-hand attack with a light weapon; melee when adjacent, thrown otherwise.
    TwoWeaponAttack { target: EntityId, slot: u8 },
    Dash,
    DashBonus,
    Disengage,
    DisengageBonus,
    Dodge,
    Move { direction: Direction },
    Prone,
    Stand,
    SecondWind,
    ActionSurge,
    CastSpell { spell: SpellId, target: EntityId },
}

/// Discriminant of an [`Action`], in menu order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    EndTurn,
    MeleeAttack,
    RangedAttack,
    TwoWeaponAttack,
    Dash,
    DashBonus,
    Disengage,
    DisengageBonus,
    Dodge,
    Move,
    Prone,
    Stand,
    SecondWind,
    ActionSurge,
    CastSpell,
}

impl ActionKind {
    pub const COUNT: usize = 15;

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::EndTurn => ActionKind::EndTurn,
            Action::MeleeAttack { .. } => ActionKind::MeleeAttack,
            Action::RangedAttack { .. } => ActionKind::RangedAttack,
            Action::TwoWeaponAttack { .. } => ActionKind::TwoWeaponAttack,
            Action::Dash => ActionKind::Dash,
            Action::DashBonus => ActionKind::DashBonus,
            Action::Disengage => ActionKind::Disengage,
            Action::DisengageBonus => ActionKind::DisengageBonus,
            Action::Dodge => ActionKind::Dodge,
            Action::Move { .. } => ActionKind::Move,
            Action::Prone => ActionKind::Prone,
            Action::Stand => ActionKind::Stand,
            Action::SecondWind => ActionKind::SecondWind,
            Action::ActionSurge => ActionKind::ActionSurge,
            Action::CastSpell { .. } => ActionKind::CastSpell,
        }
    }

    pub fn target(&self) -> Option<EntityId> {
        match *self {
            Action::MeleeAttack { target, .. }
            | Action::RangedAttack { target, .. }
            | Action::TwoWeaponAttack { target, .. }
            | Action::CastSpell { target, .. } => Some(target),
            _ => None,
        }
    }

    /// Spends the bonus action.
    pub fn is_bonus(&self) -> bool {
        matches!(
            self,
            Action::TwoWeaponAttack { .. } | Action::DashBonus | Action::DisengageBonus | Action::SecondWind
        )
    }

    /// Spends the action (or is the extra action from Action Surge).
    pub fn uses_action(&self) -> bool {
        matches!(
            self,
            Action::MeleeAttack { .. }
                | Action::RangedAttack { .. }
                | Action::Dash
                | Action::Disengage
                | Action::Dodge
                | Action::CastSpell { .. }
        )
    }

    pub fn is_attack(&self) -> bool {
        matches!(
            self,
            Action::MeleeAttack { .. } | Action::RangedAttack { .. } | Action::TwoWeaponAttack { .. }
        )
    }

    /// Menu line for `state`'s acting entity.
    pub fn describe(&self, state: &GameState) -> String {
        let Some(actor) = state.active_entity() else {
            return "end my turn".to_string();
        };
        let side = |target: EntityId| {
            if target == actor.id {
                "myself"
            } else if state.entity(target).team == actor.team {
                "ally"
            } else {
                "enemy"
            }
        };
        let weapon = |slot: u8| {
            actor
                .sheet
                .weapon_in_slot(slot as usize)
                .map(|w| w.name)
                .unwrap_or("unarmed")
        };
        match *self {
            Action::EndTurn => "end my turn".to_string(),
            Action::MeleeAttack { target, slot } => {
                format!("attack {} with melee weapon: {}", side(target), weapon(slot))
            }
            Action::RangedAttack { target, slot } => {
                format!("attack {} with ranged weapon: {}", side(target), weapon(slot))
            }
            Action::TwoWeaponAttack { target, slot } => {
                format!("attack {} with off-hand weapon: {}", side(target), weapon(slot))
            }
            Action::Dash => "dash action".to_string(),
            Action::DashBonus => "dash as bonus action".to_string(),
            Action::Disengage => "disengage action".to_string(),
            Action::DisengageBonus => "disengage as bonus action action".to_string(),
            Action::Dodge => "dodge action".to_string(),
            Action::Move { direction } => format!("move 5ft {}", direction.phrase()),
            Action::Prone => "go prone".to_string(),
            Action::Stand => "stand up".to_string(),
            Action::SecondWind => "use second wind".to_string(),
            Action::ActionSurge => "use action surge".to_string(),
            Action::CastSpell { spell, target } => {
                format!("cast {} on {}", spell.stats().name, side(target))
            }
        }
    }
}
