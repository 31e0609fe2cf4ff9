//! Round-robin evaluation: fights per ordered pairing, a win/loss/tie
//! matrix and a leaderboard.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adversaries::{InertPolicy, Policy, RandomPolicy, RulesPolicy};
use crate::battlemap::{bundled_maps, BattleMap};
use crate::characters::{CharacterSheet, ClassTag, SheetOverrides};
use crate::dqn::{Checkpoint, DqnPolicy, QNetwork};
use crate::engine::log::CombatLog;
use crate::engine::{apply_action, enumerate_actions, is_terminal, GameState, Outcome, Team};
use crate::env::ClassMode;
use crate::rng::{derive_seed, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Rules,
    Random,
    Inert,
    DqnCheckpoint,
    Llm,
}

/// One roster entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRef {
    pub id: String,
    pub kind: PolicyKind,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl PolicyRef {
    pub fn new(id: &str, kind: PolicyKind) -> PolicyRef {
        PolicyRef {
            id: id.into(),
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> PolicyRef {
        self.params.insert(key.into(), value.into());
        self
    }
}

/// Builds a fresh policy for each fight.
pub trait PolicyFactory: Sync {
    fn build(&self, policy: &PolicyRef) -> Result<Box<dyn Policy>, String>;
}

/// Rules, random, inert and checkpoint policies. Checkpoints are loaded
/// once and shared across fights.
#[derive(Default)]
pub struct CoreFactory {
    networks: std::sync::Mutex<BTreeMap<PathBuf, Result<Arc<QNetwork>, String>>>,
}

impl CoreFactory {
    pub fn new() -> CoreFactory {
        CoreFactory::default()
    }

    fn network(&self, path: &Path) -> Result<Arc<QNetwork>, String> {
        let mut cache = self.networks.lock().expect("cache lock");
        cache
            .entry(path.to_path_buf())
            .or_insert_with(|| {
                Checkpoint::load(path)
                    .map(|c| Arc::new(c.network))
                    .map_err(|e| format!("{}: {e}", path.display()))
            })
            .clone()
    }
}

impl PolicyFactory for CoreFactory {
    fn build(&self, policy: &PolicyRef) -> Result<Box<dyn Policy>, String> {
        match policy.kind {
            PolicyKind::Rules => Ok(Box::new(RulesPolicy)),
            PolicyKind::Random => Ok(Box::new(RandomPolicy::new(0))),
            PolicyKind::Inert => Ok(Box::new(InertPolicy)),
            PolicyKind::DqnCheckpoint => {
                if let Some(seed) = policy.params.get("init_seed") {
                    let seed = seed.parse().map_err(|_| format!("bad init_seed {seed:?}"))?;
                    return Ok(Box::new(DqnPolicy::new(Arc::new(QNetwork::new(seed)), &policy.id)));
                }
                let path = policy
                    .params
                    .get("path")
                    .ok_or_else(|| format!("{}: dqn_checkpoint needs a path", policy.id))?;
                Ok(Box::new(DqnPolicy::new(self.network(Path::new(path))?, &policy.id)))
            }
            PolicyKind::Llm => Err(format!("{}: llm policies need an endpoint client", policy.id)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub fights_per_pair: u64,
    pub seed: u64,
    pub class_mode: ClassMode,
    pub max_rounds: u32,
    /// Mirrored pairings replay the same fights, which makes the matrix
    /// exactly antisymmetric.
    pub shared_seeds: bool,
    pub keep_logs: bool,
    #[serde(default)]
    pub sheets: SheetOverrides,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        TournamentConfig {
            fights_per_pair: 30,
            seed: 0,
            class_mode: ClassMode::FighterOnly,
            max_rounds: crate::engine::DEFAULT_MAX_ROUNDS,
            shared_seeds: false,
            keep_logs: false,
            sheets: SheetOverrides::default(),
        }
    }
}

/// Outcome of one fight from the side of the first agent in the match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FightResult {
    Win,
    Loss,
    Tie,
}

impl FightResult {
    pub fn flipped(self) -> FightResult {
        match self {
            FightResult::Win => FightResult::Loss,
            FightResult::Loss => FightResult::Win,
            FightResult::Tie => FightResult::Tie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FightRecord {
    pub index: u64,
    pub seed: u64,
    pub map: String,
    pub result: FightResult,
    pub rounds: u32,
    /// Set when a policy failed and the fight was scored as a forfeit.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub agent_a: String,
    pub agent_b: String,
    pub fights: Vec<FightRecord>,
    /// One entry per fight when logs are kept; `None` for fights that never
    /// started and for the mirrored side of shared-seed pairs.
    #[serde(skip)]
    pub logs: Vec<Option<CombatLog>>,
}

impl MatchResult {
    pub fn tally(&self) -> Tally {
        let mut t = Tally::default();
        for f in &self.fights {
            t.add(f);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub wins: u32,
    pub losses: u32,
    pub ties: u32,
    pub rounds: u64,
}

impl Tally {
    fn add(&mut self, f: &FightRecord) {
        match f.result {
            FightResult::Win => self.wins += 1,
            FightResult::Loss => self.losses += 1,
            FightResult::Tie => self.ties += 1,
        }
        self.rounds += f.rounds as u64;
    }

    pub fn fights(&self) -> u32 {
        self.wins + self.losses + self.ties
    }

    pub fn cell(&self) -> String {
        format!("{}/{}/{}", self.wins, self.losses, self.ties)
    }

    fn merge(&mut self, other: &Tally) {
        self.wins += other.wins;
        self.losses += other.losses;
        self.ties += other.ties;
        self.rounds += other.rounds;
    }
}

/// Map for fight `k`: the pool is cycled in order.
fn fight_setup(
    k: u64,
    seed: u64,
    config: &TournamentConfig,
    maps: &[Arc<BattleMap>],
) -> (Arc<BattleMap>, Arc<CharacterSheet>, Arc<CharacterSheet>) {
    let map = maps[(k % maps.len() as u64) as usize].clone();
    let mut rng = RngStream::new(derive_seed(seed, 0));
    let (h, e) = match config.class_mode {
        ClassMode::FighterOnly => (ClassTag::Fighter, ClassTag::Fighter),
        ClassMode::FourClasses => (ClassTag::ALL[rng.index(4)], ClassTag::ALL[rng.index(4)]),
    };
    (map, config.sheets.hero_sheet(h), config.sheets.enemy_sheet(e))
}

/// Play one fight with `a` as the hero. The result is from `a`'s side.
#[allow(clippy::too_many_arguments)]
pub fn run_fight(
    factory: &dyn PolicyFactory,
    a: &PolicyRef,
    b: &PolicyRef,
    k: u64,
    seed: u64,
    config: &TournamentConfig,
    maps: &[Arc<BattleMap>],
) -> (FightRecord, Option<CombatLog>) {
    let (map, hero, enemy) = fight_setup(k, seed, config, maps);
    let map_name = map.name.clone();
    let record = |result, rounds, error| FightRecord {
        index: k,
        seed,
        map: map_name.clone(),
        result,
        rounds,
        error,
    };
    let (pa, pb) = (factory.build(a), factory.build(b));
    let (mut pa, mut pb) = match (pa, pb) {
        (Ok(pa), Ok(pb)) => (pa, pb),
        (Err(e), Ok(_)) => return (record(FightResult::Loss, 0, Some(e)), None),
        (Ok(_), Err(e)) => return (record(FightResult::Win, 0, Some(e)), None),
        (Err(ea), Err(eb)) => return (record(FightResult::Tie, 0, Some(format!("{ea}; {eb}"))), None),
    };
    pa.reset(derive_seed(seed, 2));
    pb.reset(derive_seed(seed, 3));
    let mut state = GameState::duel(
        map,
        hero,
        enemy,
        RngStream::new(derive_seed(seed, 1)),
        config.max_rounds,
    );
    let mut log = config.keep_logs.then(|| CombatLog::new(&a.id, &b.id, state.clone()));
    let mut error = None;
    let mut forfeit = None;
    while !is_terminal(&state).is_over() {
        let heroes = state.active_entity().map(|e| e.team) == Some(Team::Heroes);
        let policy = if heroes { &mut pa } else { &mut pb };
        let actions = enumerate_actions(&state);
        let index = match policy.choose(&state, &actions) {
            Ok(i) if i < actions.len() => i,
            Ok(i) => {
                error = Some(format!("{}: index {i} outside menu of {}", policy.name(), actions.len()));
                forfeit = Some(heroes);
                break;
            }
            Err(e) => {
                error = Some(format!("{}: {e}", policy.name()));
                forfeit = Some(heroes);
                break;
            }
        };
        let events = apply_action(&mut state, actions[index]).expect("enumerated action applies");
        if let Some(log) = log.as_mut() {
            log.events.extend(events);
        }
    }
    if let Some(log) = log.as_mut() {
        log.finish(&state);
    }
    let rounds = state.round.min(state.max_rounds);
    let result = match forfeit {
        Some(true) => FightResult::Loss,
        Some(false) => FightResult::Win,
        None => match is_terminal(&state) {
            Outcome::HeroWon => FightResult::Win,
            Outcome::HeroLost => FightResult::Loss,
            _ => FightResult::Tie,
        },
    };
    (record(result, rounds, error), log)
}

/// `fights` duels with `a` as hero; fight `k` uses seed `derive(base_seed, k)`.
pub fn run_match(
    factory: &dyn PolicyFactory,
    a: &PolicyRef,
    b: &PolicyRef,
    fights: u64,
    base_seed: u64,
    config: &TournamentConfig,
) -> MatchResult {
    let maps = bundled_maps();
    let results = par_map((0..fights).collect(), |k| {
        run_fight(factory, a, b, k, derive_seed(base_seed, k), config, &maps)
    });
    let mut m = MatchResult {
        agent_a: a.id.clone(),
        agent_b: b.id.clone(),
        fights: Vec::new(),
        logs: Vec::new(),
    };
    for (f, log) in results {
        m.fights.push(f);
        m.logs.push(log);
    }
    m
}

#[cfg(feature = "parallel")]
fn par_map<T: Send + Sync, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Send + Sync, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    items.into_iter().map(f).collect()
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TournamentError {
    #[error("roster needs at least two agents")]
    TooSmall,
    #[error("duplicate agent id {0:?}")]
    Duplicate(String),
    #[error("fights per pair must be at least 1")]
    NoFights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentMatrix {
    pub roster: Vec<String>,
    /// `cells[a][b]` from `a`'s side; the diagonal is `None`.
    pub cells: Vec<Vec<Option<Tally>>>,
    pub matches: Vec<MatchResult>,
}

/// Every ordered pairing, merged in roster order whatever the thread count.
pub fn round_robin(
    factory: &dyn PolicyFactory,
    roster: &[PolicyRef],
    config: &TournamentConfig,
) -> Result<TournamentMatrix, TournamentError> {
    if roster.len() < 2 {
        return Err(TournamentError::TooSmall);
    }
    if config.fights_per_pair == 0 {
        return Err(TournamentError::NoFights);
    }
    let mut seen = BTreeSet::new();
    for p in roster {
        if !seen.insert(p.id.as_str()) {
            return Err(TournamentError::Duplicate(p.id.clone()));
        }
    }
    let n = roster.len();
    let maps = bundled_maps();
    // (a, b, fight). With shared seeds only a < b is simulated; the mirror
    // is read off the same fights.
    let mut jobs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || (config.shared_seeds && a > b) {
                continue;
            }
            for k in 0..config.fights_per_pair {
                jobs.push((a, b, k));
            }
        }
    }
    let results = par_map(jobs.clone(), |(a, b, k)| {
        let pair = derive_seed(config.seed, (a * n + b) as u64);
        run_fight(factory, &roster[a], &roster[b], k, derive_seed(pair, k), config, &maps)
    });
    let mut by_pair: BTreeMap<(usize, usize), MatchResult> = BTreeMap::new();
    for ((a, b, _), (f, log)) in jobs.into_iter().zip(results) {
        let m = by_pair.entry((a, b)).or_insert_with(|| MatchResult {
            agent_a: roster[a].id.clone(),
            agent_b: roster[b].id.clone(),
            fights: Vec::new(),
            logs: Vec::new(),
        });
        m.fights.push(f);
        m.logs.push(log);
    }
    if config.shared_seeds {
        let mirrored: Vec<_> = by_pair
            .iter()
            .map(|(&(a, b), m)| {
                let fights: Vec<FightRecord> = m
                    .fights
                    .iter()
                    .map(|f| FightRecord {
                        result: f.result.flipped(),
                        ..f.clone()
                    })
                    .collect();
                (
                    (b, a),
                    MatchResult {
                        agent_a: m.agent_b.clone(),
                        agent_b: m.agent_a.clone(),
                        logs: vec![None; fights.len()],
                        fights,
                    },
                )
            })
            .collect();
        by_pair.extend(mirrored);
    }
    let mut cells = vec![vec![None; n]; n];
    let mut matches = Vec::new();
    for ((a, b), m) in by_pair {
        cells[a][b] = Some(m.tally());
        matches.push(m);
    }
    Ok(TournamentMatrix {
        roster: roster.iter().map(|p| p.id.clone()).collect(),
        cells,
        matches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub agent: String,
    pub wins: u32,
    pub losses: u32,
    pub ties: u32,
    pub avg_rounds: f64,
}

/// Row sums of the matrix, most wins first; ties keep roster order.
pub fn leaderboard(matrix: &TournamentMatrix) -> Vec<LeaderboardRow> {
    let mut rows: Vec<LeaderboardRow> = matrix
        .roster
        .iter()
        .enumerate()
        .map(|(a, agent)| {
            let mut t = Tally::default();
            for cell in matrix.cells[a].iter().flatten() {
                t.merge(cell);
            }
            LeaderboardRow {
                agent: agent.clone(),
                wins: t.wins,
                losses: t.losses,
                ties: t.ties,
                avg_rounds: if t.fights() == 0 {
                    0.0
                } else {
                    t.rounds as f64 / t.fights() as f64
                },
            }
        })
        .collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.wins));
    rows
}

impl TournamentMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent");
        for id in &self.roster {
            write!(out, ",{id}").unwrap();
        }
        out.push('\n');
        for (a, id) in self.roster.iter().enumerate() {
            out.push_str(id);
            for cell in &self.cells[a] {
                match cell {
                    Some(t) => write!(out, ",{}", t.cell()).unwrap(),
                    None => out.push_str(",-"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut rows = vec![std::iter::once(String::new()).chain(self.roster.iter().cloned()).collect::<Vec<_>>()];
        for (a, id) in self.roster.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(
                self.cells[a]
                    .iter()
                    .map(|c| c.map(|t| t.cell()).unwrap_or_else(|| "-".into())),
            );
            rows.push(row);
        }
        align(&rows)
    }

    pub fn total_wins(&self) -> u32 {
        self.cells.iter().flatten().flatten().map(|t| t.wins).sum()
    }

    pub fn total_losses(&self) -> u32 {
        self.cells.iter().flatten().flatten().map(|t| t.losses).sum()
    }
}

pub fn leaderboard_csv(rows: &[LeaderboardRow]) -> String {
    let mut out = String::from("rank,agent,wins,losses,ties,avg_rounds\n");
    for (i, r) in rows.iter().enumerate() {
        writeln!(out, "{},{},{},{},{},{:.2}", i + 1, r.agent, r.wins, r.losses, r.ties, r.avg_rounds).unwrap();
    }
    out
}

pub fn leaderboard_text(rows: &[LeaderboardRow]) -> String {
    let mut table = vec![vec![
        "Agent".to_string(),
        "Wins".into(),
        "Losses".into(),
        "Ties".into(),
        "AVG Rounds".into(),
    ]];
    for r in rows {
        table.push(vec![
            r.agent.clone(),
            r.wins.to_string(),
            r.losses.to_string(),
            r.ties.to_string(),
            format!("{:.2}", r.avg_rounds),
        ]);
    }
    align(&table)
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster() -> Vec<PolicyRef> {
        vec![
            PolicyRef::new("rules", PolicyKind::Rules),
            PolicyRef::new("random", PolicyKind::Random),
            PolicyRef::new("inert", PolicyKind::Inert),
        ]
    }

    fn quick(shared: bool) -> TournamentConfig {
        TournamentConfig {
            fights_per_pair: 4,
            seed: 9,
            max_rounds: 40,
            shared_seeds: shared,
            ..TournamentConfig::default()
        }
    }

    #[test]
    fn rules_beat_random() {
        let f = CoreFactory::new();
        let m = run_match(
            &f,
            &PolicyRef::new("rules", PolicyKind::Rules),
            &PolicyRef::new("random", PolicyKind::Random),
            30,
            1,
            &TournamentConfig::default(),
        );
        let t = m.tally();
        assert_eq!(t.fights(), 30);
        assert!(t.wins >= 27, "{}", t.cell());
    }

    #[test]
    fn single_fight_match() {
        let f = CoreFactory::new();
        let r = roster();
        let m = run_match(&f, &r[0], &r[2], 1, 3, &quick(false));
        assert_eq!(m.fights.len(), 1);
        assert_eq!(m.tally().fights(), 1);
    }

    #[test]
    fn three_agents_fill_six_cells() {
        let m = round_robin(&CoreFactory::new(), &roster(), &quick(false)).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(m.cells[a][b].is_some(), a != b);
            }
        }
        assert_eq!(m.matches.len(), 6);
    }

    #[test]
    fn shared_seeds_give_exact_antisymmetry() {
        let m = round_robin(&CoreFactory::new(), &roster(), &quick(true)).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    let (x, y) = (m.cells[a][b].unwrap(), m.cells[b][a].unwrap());
                    assert_eq!((x.wins, x.losses, x.ties), (y.losses, y.wins, y.ties));
                }
            }
        }
        assert_eq!(m.total_wins(), m.total_losses());
        let rows = leaderboard(&m);
        let wins: u32 = rows.iter().map(|r| r.wins).sum();
        assert_eq!(wins, m.total_wins());
    }

    #[test]
    fn same_seed_same_matrix() {
        let a = round_robin(&CoreFactory::new(), &roster(), &quick(false)).unwrap();
        let b = round_robin(&CoreFactory::new(), &roster(), &quick(false)).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.matches, b.matches);
    }

    #[test]
    fn duplicates_and_tiny_rosters_are_rejected() {
        let f = CoreFactory::new();
        let mut r = roster();
        r.push(PolicyRef::new("rules", PolicyKind::Random));
        assert_eq!(
            round_robin(&f, &r, &quick(false)).unwrap_err(),
            TournamentError::Duplicate("rules".into())
        );
        assert_eq!(round_robin(&f, &r[..1], &quick(false)).unwrap_err(), TournamentError::TooSmall);
    }

    #[test]
    fn rounds_respect_the_cap_and_ties_only_at_it() {
        let m = round_robin(&CoreFactory::new(), &roster(), &quick(false)).unwrap();
        for f in m.matches.iter().flat_map(|m| &m.fights) {
            assert!(f.rounds <= 40);
            if f.result == FightResult::Tie {
                assert_eq!(f.rounds, 40);
            }
        }
    }

    #[test]
    fn missing_checkpoint_forfeits() {
        let f = CoreFactory::new();
        let ghost = PolicyRef::new("ghost", PolicyKind::DqnCheckpoint).with_param("path", "/nonexistent/ckpt.json");
        let m = run_match(&f, &ghost, &PolicyRef::new("random", PolicyKind::Random), 3, 0, &quick(false));
        assert!(m.fights.iter().all(|f| f.result == FightResult::Loss && f.error.is_some()));
        let m = run_match(&f, &PolicyRef::new("random", PolicyKind::Random), &ghost, 2, 0, &quick(false));
        assert!(m.fights.iter().all(|f| f.result == FightResult::Win));
    }

    #[test]
    fn leaderboard_orders_by_wins() {
        let t = |w, l| Some(Tally { wins: w, losses: l, ties: 0, rounds: 10 * (w + l) as u64 });
        let m = TournamentMatrix {
            roster: vec!["a".into(), "x".into(), "b".into()],
            cells: vec![vec![None, t(1, 2), t(2, 1)], vec![t(2, 1), None, t(3, 0)], vec![t(1, 2), t(0, 3), None]],
            matches: Vec::new(),
        };
        let rows = leaderboard(&m);
        assert_eq!(rows[0].agent, "x");
        assert_eq!((rows[0].wins, rows[0].losses), (5, 1));
        assert_eq!(rows[0].avg_rounds, 10.0);
        assert_eq!(rows[2].agent, "b");
        assert!(leaderboard_text(&rows).starts_with("Agent  Wins"));
        assert_eq!(leaderboard_csv(&rows).lines().count(), 4);
    }

    #[test]
    fn logs_are_kept_and_replay() {
        let f = CoreFactory::new();
        let r = roster();
        let config = TournamentConfig {
            keep_logs: true,
            ..quick(false)
        };
        let m = run_match(&f, &r[0], &r[1], 2, 5, &config);
        assert_eq!(m.logs.len(), 2);
        assert!(m.logs.iter().all(Option::is_some));
        for log in m.logs.iter().flatten() {
            crate::engine::log::replay(log).unwrap();
        }
    }
}
