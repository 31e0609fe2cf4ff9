//! Policies that pick from the legal-action menu: the scripted rules AI,
//! uniform random, and a do-nothing baseline.

use crate::battlemap::{cost_to_goals, Position};
use crate::engine::{enumerate_actions, expected_damage, Action, GameState};
use crate::rng::RngStream;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("{0}")]
pub struct PolicyError(pub String);

/// Anything that picks an index into the current action menu.
pub trait Policy: Send {
    fn name(&self) -> String;

    /// Index into `actions`, which is `enumerate_actions(state)` and never
    /// empty.
    fn choose(&mut self, state: &GameState, actions: &[Action]) -> Result<usize, PolicyError>;

    /// Called at the start of each fight with a fight-specific seed.
    fn reset(&mut self, _seed: u64) {}
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn choose(&mut self, state: &GameState, actions: &[Action]) -> Result<usize, PolicyError> {
        (**self).choose(state, actions)
    }

    fn reset(&mut self, seed: u64) {
        (**self).reset(seed)
    }
}

/// Uniform over the menu.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: RngStream,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: RngStream::new(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(&mut self, _state: &GameState, actions: &[Action]) -> Result<usize, PolicyError> {
        Ok(self.rng.index(actions.len()))
    }

    fn reset(&mut self, seed: u64) {
        self.rng = RngStream::new(seed);
    }
}

/// Always ends its turn.
#[derive(Debug, Clone, Default)]
pub struct InertPolicy;

impl Policy for InertPolicy {
    fn name(&self) -> String {
        "inert".into()
    }

    fn choose(&mut self, _state: &GameState, _actions: &[Action]) -> Result<usize, PolicyError> {
        Ok(0)
    }
}

/// The scripted baseline.
#[derive(Debug, Clone, Default)]
pub struct RulesPolicy;

impl Policy for RulesPolicy {
    fn name(&self) -> String {
        "rules".into()
    }

    fn choose(&mut self, state: &GameState, actions: &[Action]) -> Result<usize, PolicyError> {
        let chosen = rules_policy(state, actions);
        Ok(actions.iter().position(|a| *a == chosen).unwrap_or(0))
    }
}

/// Pick an action by fixed priority: action surge after a landed attack,
/// the best attack on the nearest visible enemy, second wind below half
/// health, a step toward the enemy, end turn.
pub fn rules_policy(state: &GameState, actions: &[Action]) -> Action {
    let Some(me) = state.active_entity() else {
        return Action::EndTurn;
    };
    if me.turn.attack_landed && me.economy.actions == 0 && actions.contains(&Action::ActionSurge) {
        return Action::ActionSurge;
    }

    let nearest = actions
        .iter()
        .filter_map(|a| a.target())
        .filter(|&t| t != me.id)
        .min_by_key(|&t| (me.position.chebyshev(state.entity(t).position), t));
    if let Some(target) = nearest {
        let mut best: Option<(f64, Action)> = None;
        for a in actions.iter().filter(|a| a.target() == Some(target)) {
            let ev = expected_damage(state, a);
            if ev > 0.0 && best.is_none_or(|(b, _)| ev > b) {
                best = Some((ev, *a));
            }
        }
        if let Some((_, a)) = best {
            return a;
        }
    }

    if me.hp * 2 < me.sheet.max_hp && actions.contains(&Action::SecondWind) {
        return Action::SecondWind;
    }

    if me.economy.actions > 0 {
        if let Some(step) = step_toward_enemy(state, actions) {
            return step;
        }
    }
    Action::EndTurn
}

fn step_toward_enemy(state: &GameState, actions: &[Action]) -> Option<Action> {
    let me = state.active_entity()?;
    let enemy = state
        .hostiles_of(me.id)
        .min_by_key(|e| (me.position.chebyshev(e.position), e.id))?;
    if me.position.chebyshev(enemy.position) <= 1 {
        return None;
    }
    if me.conditions.prone && actions.contains(&Action::Stand) {
        return Some(Action::Stand);
    }
    let goals: Vec<Position> = state
        .map
        .positions()
        .filter(|p| p.chebyshev(enemy.position) == 1)
        .collect();
    let blocked = state.occupied_except(me.id);
    let field = cost_to_goals(&state.map, &goals, &blocked);
    let here = field.get(&me.position).copied().unwrap_or(u32::MAX);
    let mut best: Option<(u32, Action)> = None;
    for a in actions {
        if let Action::Move { direction } = *a {
            let dest = me.position.step(direction);
            let Some(&rest) = field.get(&dest) else {
                continue;
            };
            let step = crate::battlemap::movement_budget_cost(&state.map, me.position, dest).ok()?;
            let total = step + rest;
            if rest < here && best.is_none_or(|(b, _)| total < b) {
                best = Some((total, *a));
            }
        }
    }
    best.map(|(_, a)| a)
}

/// Play one policy decision for the active entity.
pub fn choose_action<P: Policy + ?Sized>(policy: &mut P, state: &GameState) -> Result<Action, PolicyError> {
    let actions = enumerate_actions(state);
    if actions.is_empty() {
        return Err(PolicyError("no legal actions: the fight is over".into()));
    }
    let i = policy.choose(state, &actions)?;
    actions
        .get(i)
        .copied()
        .ok_or_else(|| PolicyError(format!("index {i} outside menu of {}", actions.len())))
}
