//! ASCII grid maps.
//!
//! A map file is a block of equal-length rows over the alphabet
//! `#` (wall), `.` (free) and `<`, `>`, `^`, `v` (free cell with wind
//! blowing in the arrow's direction). The outer border must be wall.
//! Coordinates are `(x, y)` with the origin at the top-left corner.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// One of the four compass moves. Also used for wind directions.
///
/// The declaration order is the fixed tie-breaking order used by greedy
/// policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Direction> {
        Self::ALL.get(i).copied()
    }

    /// `(dx, dy)` with `y` growing downwards.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Direction::Up => '^',
            Direction::Down => 'v',
            Direction::Left => '<',
            Direction::Right => '>',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    pub fn from_name(s: &str) -> Option<Direction> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Wall,
    Free,
    Wind(Direction),
}

impl CellKind {
    pub fn is_wall(self) -> bool {
        self == CellKind::Wall
    }

    fn from_char(c: char) -> Option<CellKind> {
        Some(match c {
            '#' => CellKind::Wall,
            '.' => CellKind::Free,
            '^' => CellKind::Wind(Direction::Up),
            'v' => CellKind::Wind(Direction::Down),
            '<' => CellKind::Wind(Direction::Left),
            '>' => CellKind::Wind(Direction::Right),
            _ => return None,
        })
    }

    fn to_char(self) -> char {
        match self {
            CellKind::Wall => '#',
            CellKind::Free => '.',
            CellKind::Wind(d) => d.arrow(),
        }
    }
}

/// Cell position; `x` counts columns from the left, `y` rows from the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellCoord {
    pub x: usize,
    pub y: usize,
}

impl CellCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        CellCoord { x, y }
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("row {row} has length {found}, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("unknown character {ch:?} at row {row}, column {col}")]
    UnknownChar { row: usize, col: usize, ch: char },
    #[error("map is {width}x{height}, minimum is 3x3")]
    TooSmall { width: usize, height: usize },
    #[error("border cell at row {row}, column {col} is not a wall")]
    OpenBorder { row: usize, col: usize },
    #[error("map has {found} traversable cells, need at least 2")]
    NoFreeCells { found: usize },
}

/// A parsed, validated grid map.
///
/// Non-wall cells are numbered in row-major order; that number is the
/// *state index* used by the learning tables.
#[derive(Debug, Clone)]
pub struct GridMap {
    name: String,
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
    states: Vec<CellCoord>,
    state_of_cell: Vec<Option<usize>>,
}

impl PartialEq for GridMap {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.width == other.width && self.height == other.height && self.cells == other.cells
    }
}

impl Eq for GridMap {}

impl GridMap {
    /// Parses an anonymous map (named `custom`).
    pub fn parse(text: &str) -> Result<GridMap, MapError> {
        Self::parse_named("custom", text)
    }

    pub fn parse_named(name: &str, text: &str) -> Result<GridMap, MapError> {
        let rows: Vec<&str> = text.lines().collect();
        if rows.is_empty() || rows.iter().all(|r| r.is_empty()) {
            return Err(MapError::Empty);
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in rows.iter().enumerate() {
            let found = row.chars().count();
            if found != width {
                return Err(MapError::RaggedRows { row: y, expected: width, found });
            }
            for (x, ch) in row.chars().enumerate() {
                let kind = CellKind::from_char(ch).ok_or(MapError::UnknownChar { row: y, col: x, ch })?;
                cells.push(kind);
            }
        }
        Self::from_cells(name, width, height, cells)
    }

    /// Builds a map from row-major cells, checking every invariant.
    pub fn from_cells(name: &str, width: usize, height: usize, cells: Vec<CellKind>) -> Result<GridMap, MapError> {
        assert_eq!(cells.len(), width * height, "cell count does not match dimensions");
        if width < 3 || height < 3 {
            return Err(MapError::TooSmall { width, height });
        }
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if border && !cells[y * width + x].is_wall() {
                    return Err(MapError::OpenBorder { row: y, col: x });
                }
            }
        }
        let mut states = Vec::new();
        let mut state_of_cell = vec![None; cells.len()];
        for (i, c) in cells.iter().enumerate() {
            if !c.is_wall() {
                state_of_cell[i] = Some(states.len());
                states.push(CellCoord::new(i % width, i / width));
            }
        }
        if states.len() < 2 {
            return Err(MapError::NoFreeCells { found: states.len() });
        }
        Ok(GridMap { name: name.to_string(), width, height, cells, states, state_of_cell })
    }

    /// Renders the map back into its text form, rows joined by `\n`
    /// without a trailing newline.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            if y > 0 {
                out.push('\n');
            }
            for x in 0..self.width {
                out.push(self.cells[y * self.width + x].to_char());
            }
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> GridMap {
        self.name = name.to_string();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Cell kind at `c`; out-of-bounds reads as wall.
    pub fn cell(&self, c: CellCoord) -> CellKind {
        if self.contains(c) {
            self.cells[c.y * self.width + c.x]
        } else {
            CellKind::Wall
        }
    }

    pub fn is_wall(&self, c: CellCoord) -> bool {
        self.cell(c).is_wall()
    }

    /// Number of non-wall cells.
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Non-wall cells in state-index order.
    pub fn states(&self) -> &[CellCoord] {
        &self.states
    }

    pub fn coord(&self, state: usize) -> CellCoord {
        self.states[state]
    }

    pub fn state_index(&self, c: CellCoord) -> Option<usize> {
        if self.contains(c) {
            self.state_of_cell[c.y * self.width + c.x]
        } else {
            None
        }
    }

    /// Wind cells and their directions, in row-major order.
    pub fn wind_cells(&self) -> impl Iterator<Item = (CellCoord, Direction)> + '_ {
        self.states.iter().filter_map(|&c| match self.cell(c) {
            CellKind::Wind(d) => Some((c, d)),
            _ => None,
        })
    }

    /// Copy of this map with every wind cell turned into a plain free cell.
    pub fn without_wind(&self) -> GridMap {
        let cells = self
            .cells
            .iter()
            .map(|c| match c {
                CellKind::Wind(_) => CellKind::Free,
                other => *other,
            })
            .collect();
        GridMap { cells, ..self.clone() }
    }

    /// The cell reached by moving from `pos` in direction `d`; bumping into
    /// a wall leaves the position unchanged.
    pub fn intended_move(&self, pos: CellCoord, d: Direction) -> CellCoord {
        let (dx, dy) = d.delta();
        let nx = pos.x as isize + dx;
        let ny = pos.y as isize + dy;
        if nx < 0 || ny < 0 {
            return pos;
        }
        let next = CellCoord::new(nx as usize, ny as usize);
        if self.is_wall(next) {
            pos
        } else {
            next
        }
    }

    /// State-index version of [`GridMap::intended_move`].
    pub fn next_state(&self, state: usize, d: Direction) -> usize {
        let c = self.intended_move(self.coord(state), d);
        self.state_index(c).expect("intended_move never lands on a wall")
    }
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    GridMap::parse(text)
}

pub fn serialize_map(map: &GridMap) -> String {
    map.serialize()
}

const FOUR_ROOM: &str = "\
###########
#....#....#
#.........#
#....#....#
#....#....#
##.####.###
#....#....#
#.........#
#....#....#
#....#....#
###########";

const WINDY_FOUR_ROOM: &str = "\
###########
#....#..v.#
#.>>......#
#....#..v.#
#....#....#
##.####.###
#.^..#....#
#.^.......#
#....#.<<.#
#....#....#
###########";

const H_MAZE: &str = "\
#########
#.#####.#
#.#####.#
#.#####.#
#.......#
#.#####.#
#.#####.#
#.#####.#
#########";

/// Maps shipped with the crate: `four_room`, `windy_four_room`, `h_maze`.
pub fn bundled_maps() -> Vec<(String, GridMap)> {
    [("four_room", FOUR_ROOM), ("windy_four_room", WINDY_FOUR_ROOM), ("h_maze", H_MAZE)]
        .into_iter()
        .map(|(name, text)| {
            let map = GridMap::parse_named(name, text).expect("bundled map is valid");
            (name.to_string(), map)
        })
        .collect()
}

pub fn bundled_map(name: &str) -> Option<GridMap> {
    bundled_maps().into_iter().find(|(n, _)| n == name).map(|(_, m)| m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_free_cell_is_rejected() {
        assert_eq!(GridMap::parse("###\n#.#\n###"), Err(MapError::NoFreeCells { found: 1 }));
    }

    #[test]
    fn smallest_valid_map() {
        let m = GridMap::parse("####\n#..#\n####").unwrap();
        assert_eq!((m.width(), m.height()), (4, 3));
        assert_eq!(m.num_states(), 2);
        assert_eq!(m.states(), &[CellCoord::new(1, 1), CellCoord::new(2, 1)]);
    }

    #[test]
    fn arrow_becomes_wind() {
        let m = GridMap::parse("####\n#>.#\n#..#\n####").unwrap();
        assert_eq!(m.cell(CellCoord::new(1, 1)), CellKind::Wind(Direction::Right));
        assert_eq!(m.num_states(), 4);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(GridMap::parse("####\n#..\n####"), Err(MapError::RaggedRows { row: 1, expected: 4, found: 3 }));
        assert_eq!(GridMap::parse("####\n#.x#\n####"), Err(MapError::UnknownChar { row: 1, col: 2, ch: 'x' }));
        assert_eq!(GridMap::parse("####\n...#\n####"), Err(MapError::OpenBorder { row: 1, col: 0 }));
        assert_eq!(GridMap::parse("##\n##"), Err(MapError::TooSmall { width: 2, height: 2 }));
        assert_eq!(GridMap::parse(""), Err(MapError::Empty));
    }

    #[test]
    fn trailing_newline_and_crlf_are_accepted() {
        let a = GridMap::parse("####\n#..#\n####\n").unwrap();
        let b = GridMap::parse("####\r\n#..#\r\n####\r\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serialize_is_exact() {
        let text = "####\n#..#\n####";
        assert_eq!(GridMap::parse(text).unwrap().serialize(), text);
        let windy = GridMap::parse("#####\n#.^.#\n#####").unwrap();
        assert_eq!(windy.serialize().lines().nth(1).unwrap().chars().nth(2), Some('^'));
    }

    #[test]
    fn bundled_maps_round_trip() {
        for (name, m) in bundled_maps() {
            assert_eq!(GridMap::parse_named(&name, &m.serialize()).unwrap(), m);
        }
    }

    #[test]
    fn four_room_layout() {
        let four = bundled_map("four_room").unwrap();
        assert_eq!((four.width(), four.height()), (11, 11));
        assert_eq!(four.num_states(), 68);
        let doors = [(5, 2), (5, 7), (2, 5), (7, 5)];
        for (x, y) in doors {
            assert!(!four.is_wall(CellCoord::new(x, y)), "doorway ({x},{y})");
        }
        // the dividing walls are solid apart from the doorways
        let wall_gaps = (1..10)
            .map(|y| CellCoord::new(5, y))
            .chain((1..10).map(|x| CellCoord::new(x, 5)))
            .filter(|&c| !four.is_wall(c))
            .count();
        assert_eq!(wall_gaps, 4);
    }

    #[test]
    fn windy_shares_free_cells() {
        let four = bundled_map("four_room").unwrap();
        let windy = bundled_map("windy_four_room").unwrap();
        assert_eq!(four.states(), windy.states());
        assert!(windy.wind_cells().count() > 0);
        assert_eq!(windy.without_wind().with_name("four_room"), four);
    }

    #[test]
    fn intended_move_bumps() {
        let m = GridMap::parse("#####\n#...#\n#...#\n#####").unwrap();
        let corner = CellCoord::new(1, 1);
        assert_eq!(m.intended_move(corner, Direction::Up), corner);
        assert_eq!(m.intended_move(corner, Direction::Left), corner);
        assert_eq!(m.intended_move(corner, Direction::Right), CellCoord::new(2, 1));
        assert_eq!(m.intended_move(corner, Direction::Down), CellCoord::new(1, 2));
    }
}
