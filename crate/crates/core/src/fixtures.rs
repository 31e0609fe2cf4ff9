//! Canned states shared by tests, benchmarks and the demo.

use std::sync::Arc;

use crate::battlemap::{bundled_maps, load_map, BattleMap};
use crate::characters::{bundled, ClassTag};
use crate::engine::{apply_action, enumerate_actions, is_terminal, GameState, Team, DEFAULT_MAX_ROUNDS};
use crate::rng::RngStream;

const ROGUE_VS_WIZARD_MAP: &str = "\
____________
____________
____________
____________
____________
___.......__
___...P...__
___.E.#...__
___.ww.w..__
___ww.....__
___ww.....__
____________
";

pub fn rogue_vs_wizard_map() -> Arc<BattleMap> {
    Arc::new(load_map("rogue-vs-wizard", ROGUE_VS_WIZARD_MAP).expect("fixture map is valid"))
}

/// A rogue at 15/18 hp facing a wizard across a wall corner, on the rogue's
/// fresh turn.
pub fn rogue_vs_wizard() -> GameState {
    let mut state = GameState::duel(
        rogue_vs_wizard_map(),
        bundled(ClassTag::Rogue),
        bundled(ClassTag::Wizard),
        RngStream::new(7),
        DEFAULT_MAX_ROUNDS,
    );
    let hero = state.first_of(Team::Heroes).expect("hero exists");
    state.entity_mut(hero).hp = 15;
    while state.active() != Some(hero) {
        state.active_index = (state.active_index + 1) % state.initiative.len();
    }
    state.begin_turn();
    state
}

/// A reachable mid-fight state: random map and classes, then up to
/// `max_steps` uniformly random legal actions. Never terminal.
pub fn random_state(seed: u64, max_steps: usize) -> GameState {
    let maps = bundled_maps();
    let mut attempt = 0u64;
    loop {
        let mut rng = RngStream::new(seed).split(attempt);
        let map = maps[rng.index(maps.len())].clone();
        let hero = bundled(ClassTag::ALL[rng.index(4)]);
        let enemy = bundled(ClassTag::ALL[rng.index(4)]);
        let mut state = GameState::duel(map, hero, enemy, rng.split(1), DEFAULT_MAX_ROUNDS);
        let steps = rng.index(max_steps + 1);
        let mut ok = true;
        for _ in 0..steps {
            let actions = enumerate_actions(&state);
            let a = actions[rng.index(actions.len())];
            apply_action(&mut state, a).expect("enumerated action applies");
            if is_terminal(&state).is_over() {
                ok = false;
                break;
            }
        }
        if ok {
            return state;
        }
        attempt += 1;
    }
}
