//! Grid terrain, line of sight, movement costs and ASCII rendering.
//!
//! Tiles are 5 ft squares. Map files are UTF-8 glyph grids:
//! `.` floor, `#` wall, `o` barrel, `w` water (difficult terrain),
//! `_` outside the map, `P` hero spawn and `E` enemy spawn (both on floor).

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{EntityId, GameState};

pub const TILE_FEET: u32 = 5;
pub const DIFFICULT_FEET: u32 = 10;
pub const MIN_MAP_SIDE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerrainTile {
    Floor,
    OutOfMap,
    Wall,
    Barrel,
    Water,
}

impl TerrainTile {
    pub fn passable(self) -> bool {
        matches!(self, TerrainTile::Floor | TerrainTile::Water)
    }

    pub fn blocks_sight(self) -> bool {
        self == TerrainTile::Wall
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn file_glyph(self) -> char {
        match self {
            TerrainTile::Floor => '.',
            TerrainTile::OutOfMap => '_',
            TerrainTile::Wall => '#',
            TerrainTile::Barrel => 'o',
            TerrainTile::Water => 'w',
        }
    }

    /// Glyph used in rendered (prompt) maps.
    pub fn render_glyph(self) -> char {
        match self {
            TerrainTile::Floor => '.',
            TerrainTile::OutOfMap => '_',
            TerrainTile::Wall => '*',
            TerrainTile::Barrel => 'o',
            TerrainTile::Water => '~',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Grid distance in tiles (diagonals count as one).
    pub fn chebyshev(self, other: Position) -> u32 {
        (self.x - other.x).unsigned_abs().max((self.y - other.y).unsigned_abs())
    }

    pub fn distance_ft(self, other: Position) -> u32 {
        self.chebyshev(other) * TILE_FEET
    }

    pub fn step(self, dir: Direction) -> Position {
        let (dx, dy) = dir.delta();
        Position::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The eight movement directions, in action-menu order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    UpLeft,
    Left,
    DownLeft,
    Up,
    Down,
    UpRight,
    Right,
    DownRight,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::UpLeft,
        Direction::Left,
        Direction::DownLeft,
        Direction::Up,
        Direction::Down,
        Direction::UpRight,
        Direction::Right,
        Direction::DownRight,
    ];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::UpLeft => (-1, -1),
            Direction::Left => (-1, 0),
            Direction::DownLeft => (-1, 1),
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::UpRight => (1, -1),
            Direction::Right => (1, 0),
            Direction::DownRight => (1, 1),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_delta(dx: i32, dy: i32) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.delta() == (dx, dy))
    }

    pub fn phrase(self) -> &'static str {
        match self {
            Direction::UpLeft => "up and to the left",
            Direction::Left => "to the left",
            Direction::DownLeft => "down and to the left",
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::UpRight => "up and to the right",
            Direction::Right => "to the right",
            Direction::DownRight => "down and to the right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Clear,
    HalfCover,
    Blocked,
}

impl Visibility {
    pub fn visible(self) -> bool {
        self != Visibility::Blocked
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("unknown glyph {glyph:?} at row {row}, column {col}")]
    UnknownGlyph { glyph: char, row: usize, col: usize },
    #[error("map has no {0} spawn")]
    MissingSpawn(&'static str),
    #[error("map is {width}x{height}, minimum is {MIN_MAP_SIDE}x{MIN_MAP_SIDE}")]
    TooSmall { width: usize, height: usize },
    #[error("{from} and {to} are not adjacent")]
    NotAdjacent { from: Position, to: Position },
    #[error("{0} is not passable")]
    Impassable(Position),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BattleMap {
    pub name: String,
    pub width: usize,
    pub height: usize,
    tiles: Vec<TerrainTile>,
    pub hero_spawns: Vec<Position>,
    pub enemy_spawns: Vec<Position>,
}

impl BattleMap {
    pub fn in_bounds(&self, p: Position) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Tile at `p`; anything off the grid reads as out-of-map.
    pub fn tile(&self, p: Position) -> TerrainTile {
        if self.in_bounds(p) {
            self.tiles[p.y as usize * self.width + p.x as usize]
        } else {
            TerrainTile::OutOfMap
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height as i32).flat_map(move |y| (0..self.width as i32).map(move |x| Position::new(x, y)))
    }

    /// Terrain as a file-format grid (spawns shown as floor).
    pub fn to_file_text(&self) -> String {
        self.grid_text(|t| t.file_glyph())
    }

    /// Omniscient render of terrain only.
    pub fn render_terrain(&self) -> String {
        self.grid_text(|t| t.render_glyph())
    }

    fn grid_text(&self, glyph: impl Fn(TerrainTile) -> char) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(glyph(self.tiles[y * self.width + x]));
            }
            out.push('\n');
        }
        out
    }
}

/// Parse a map file.
pub fn load_map(name: &str, text: &str) -> Result<BattleMap, MapError> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .skip_while(|l| l.is_empty())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if rows.is_empty() {
        return Err(MapError::Empty);
    }
    let width = rows[0].chars().count();
    let mut tiles = Vec::with_capacity(width * rows.len());
    let mut hero_spawns = Vec::new();
    let mut enemy_spawns = Vec::new();
    for (row, line) in rows.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(MapError::Ragged {
                row,
                found,
                expected: width,
            });
        }
        for (col, glyph) in line.chars().enumerate() {
            let pos = Position::new(col as i32, row as i32);
            let tile = match glyph {
                '.' => TerrainTile::Floor,
                '#' => TerrainTile::Wall,
                'o' => TerrainTile::Barrel,
                'w' => TerrainTile::Water,
                '_' => TerrainTile::OutOfMap,
                'P' => {
                    hero_spawns.push(pos);
                    TerrainTile::Floor
                }
                'E' => {
                    enemy_spawns.push(pos);
                    TerrainTile::Floor
                }
                _ => return Err(MapError::UnknownGlyph { glyph, row, col }),
            };
            tiles.push(tile);
        }
    }
    let height = rows.len();
    if width < MIN_MAP_SIDE || height < MIN_MAP_SIDE {
        return Err(MapError::TooSmall { width, height });
    }
    if hero_spawns.is_empty() {
        return Err(MapError::MissingSpawn("hero (P)"));
    }
    if enemy_spawns.is_empty() {
        return Err(MapError::MissingSpawn("enemy (E)"));
    }
    Ok(BattleMap {
        name: name.to_string(),
        width,
        height,
        tiles,
        hero_spawns,
        enemy_spawns,
    })
}

pub const BUNDLED_MAPS: [(&str, &str); 4] = [
    ("plain", include_str!("../data/maps/plain.map")),
    ("river", include_str!("../data/maps/river.map")),
    ("wall", include_str!("../data/maps/wall.map")),
    ("crossroads", include_str!("../data/maps/crossroads.map")),
];

/// The four bundled maps; `plain` is the obstacle-free control map.
pub fn bundled_maps() -> Vec<Arc<BattleMap>> {
    BUNDLED_MAPS
        .iter()
        .map(|(name, text)| Arc::new(load_map(name, text).expect("bundled map is valid")))
        .collect()
}

pub fn bundled_map(name: &str) -> Option<Arc<BattleMap>> {
    BUNDLED_MAPS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| Arc::new(load_map(n, text).expect("bundled map is valid")))
}

/// `num / den` rounded half away from zero; `den > 0`.
fn div_round(num: i32, den: i32) -> i32 {
    num.signum() * ((2 * num.abs() + den) / (2 * den))
}

/// Bresenham line from `a` to `b`, endpoints included. Ties round toward
/// `b`, so the two directions can differ.
fn line(a: Position, b: Position) -> Vec<Position> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let n = dx.abs().max(dy.abs());
    (0..=n)
        .map(|i| {
            if n == 0 {
                a
            } else {
                Position::new(a.x + div_round(i * dx, n), a.y + div_round(i * dy, n))
            }
        })
        .collect()
}

/// Sight along one Bresenham line: `None` if a wall is in the way (a
/// diagonal squeeze between two walls counts), else whether a barrel next
/// to `to` lies on the line.
fn trace(map: &BattleMap, from: Position, to: Position) -> Option<bool> {
    let points = line(from, to);
    let mut cover = false;
    for w in points.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p.x != q.x && p.y != q.y {
            let side_a = map.tile(Position::new(q.x, p.y));
            let side_b = map.tile(Position::new(p.x, q.y));
            if side_a.blocks_sight() && side_b.blocks_sight() {
                return None;
            }
        }
        if q == to {
            break;
        }
        let tile = map.tile(q);
        if tile.blocks_sight() {
            return None;
        }
        cover |= tile == TerrainTile::Barrel && q.chebyshev(to) == 1;
    }
    Some(cover)
}

/// Sight from `from` to `to`. Walls block only when the lines in both
/// directions are obstructed, so blocking is symmetric. A barrel adjacent to
/// `to` on the line gives half cover.
pub fn line_of_sight(map: &BattleMap, from: Position, to: Position) -> Visibility {
    if from == to {
        return Visibility::Clear;
    }
    let forward = trace(map, from, to);
    let seen = forward.or_else(|| {
        trace(map, to, from).map(|_| {
            let mut back = line(to, from);
            back.reverse();
            back[1..back.len() - 1]
                .iter()
                .any(|&p| map.tile(p) == TerrainTile::Barrel && p.chebyshev(to) == 1)
        })
    });
    match seen {
        None => Visibility::Blocked,
        Some(true) => Visibility::HalfCover,
        Some(false) => Visibility::Clear,
    }
}

/// Feet of movement to step from `from` into the adjacent tile `to`.
pub fn movement_budget_cost(map: &BattleMap, from: Position, to: Position) -> Result<u32, MapError> {
    if from.chebyshev(to) != 1 {
        return Err(MapError::NotAdjacent { from, to });
    }
    let dest = map.tile(to);
    if !dest.passable() {
        return Err(MapError::Impassable(to));
    }
    if from.x != to.x && from.y != to.y {
        let side_a = map.tile(Position::new(to.x, from.y));
        let side_b = map.tile(Position::new(from.x, to.y));
        if side_a == TerrainTile::Wall && side_b == TerrainTile::Wall {
            return Err(MapError::Impassable(to));
        }
    }
    Ok(match dest {
        TerrainTile::Water => DIFFICULT_FEET,
        _ => TILE_FEET,
    })
}

/// Cheapest movement cost from `from` to every tile within `budget` feet.
/// `blocked` tiles (other creatures) cannot be entered. Costs are multiplied
/// by `cost_factor` (2 while crawling).
pub fn movement_costs(
    map: &BattleMap,
    from: Position,
    budget: u32,
    blocked: &[Position],
    cost_factor: u32,
) -> BTreeMap<Position, u32> {
    let mut best: BTreeMap<Position, u32> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(from, 0);
    heap.push(Reverse((0u32, from)));
    while let Some(Reverse((cost, pos))) = heap.pop() {
        if best.get(&pos).is_some_and(|&c| c < cost) {
            continue;
        }
        for dir in Direction::ALL {
            let next = pos.step(dir);
            if blocked.contains(&next) {
                continue;
            }
            let Ok(step) = movement_budget_cost(map, pos, next) else {
                continue;
            };
            let total = cost + step * cost_factor;
            if total > budget {
                continue;
            }
            if best.get(&next).is_none_or(|&c| total < c) {
                best.insert(next, total);
                heap.push(Reverse((total, next)));
            }
        }
    }
    best
}

/// Every tile reachable from `from` within `budget` feet, including `from`.
pub fn reachable(map: &BattleMap, from: Position, budget: u32, blocked: &[Position]) -> BTreeSet<Position> {
    movement_costs(map, from, budget, blocked, 1).into_keys().collect()
}

/// Remaining path cost from every tile to any tile in `goals`.
pub fn cost_to_goals(map: &BattleMap, goals: &[Position], blocked: &[Position]) -> BTreeMap<Position, u32> {
    let mut best: BTreeMap<Position, u32> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    for &g in goals {
        if map.tile(g).passable() && !blocked.contains(&g) {
            best.insert(g, 0);
            heap.push(Reverse((0u32, g)));
        }
    }
    while let Some(Reverse((cost, pos))) = heap.pop() {
        if best.get(&pos).is_some_and(|&c| c < cost) {
            continue;
        }
        // Relax edges prev -> pos.
        for dir in Direction::ALL {
            let prev = pos.step(dir);
            if blocked.contains(&prev) || !map.tile(prev).passable() {
                continue;
            }
            let Ok(step) = movement_budget_cost(map, prev, pos) else {
                continue;
            };
            let total = cost + step;
            if best.get(&prev).is_none_or(|&c| total < c) {
                best.insert(prev, total);
                heap.push(Reverse((total, prev)));
            }
        }
    }
    best
}

/// Legend characters `render_ascii` may emit.
pub const RENDER_ALPHABET: &[char] = &['.', 'P', 'E', 'A', '?', '_', '*', 'o', '~', ' '];

/// Render the map as seen by `viewer`: tiles without line of sight are
/// blank, out-of-map tiles are always drawn.
pub fn render_ascii(map: &BattleMap, viewer: EntityId, state: &GameState) -> String {
    let me = state.entity(viewer);
    let mut out = String::with_capacity((map.width + 1) * map.height);
    for y in 0..map.height as i32 {
        for x in 0..map.width as i32 {
            let p = Position::new(x, y);
            let tile = map.tile(p);
            let glyph = if p == me.position {
                'P'
            } else if tile == TerrainTile::OutOfMap {
                '_'
            } else if !line_of_sight(map, me.position, p).visible() {
                ' '
            } else if let Some(other) = state.living_at(p) {
                if other.team == me.team {
                    'A'
                } else {
                    'E'
                }
            } else {
                tile.render_glyph()
            };
            out.push(glyph);
        }
        out.push('\n');
    }
    out
}
