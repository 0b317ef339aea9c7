//! The biological lab grid world as an ODP.
//!
//! A robot shuttles between a clean and a dirty lab. The promise made at
//! home is to visit both labs infinitely often and to return home only
//! finitely often; the promise made in the dirty area is to avoid the clean
//! lab until decontaminated. Visiting the dirty lab straight from the clean
//! lab pays `rho` (a guarded action), the two decontamination stations
//! charge `f1 < f2`, and every move from home costs `xi`. The south door of
//! the clean lab carries a zapper that destroys the robot with probability
//! `p_zap` on the first crossing and is harmless afterwards.

use serde::{Deserialize, Serialize};

use crate::automata::{Alphabet, Automaton, Kind, Letter, StateId};
use crate::error::{Error, Result};
use crate::mdp::{Outcome, SId};
use crate::odp::{Odp, OdpAction};

/// The committed map.
pub const DEFAULT_MAP: &str = include_str!("../../../../fixtures/biolab/biolab.map");

pub const APS: [&str; 4] = ["clean_lab", "dirty_lab", "initial_location", "decontamination"];
const CLEAN: Letter = 1;
const DIRTY: Letter = 2;
const HOME: Letter = 4;
const DECON: Letter = 8;

/// Lookahead schema states.
pub mod promise {
    pub const GF_CLEAN: u32 = 0;
    pub const GF_DIRTY: u32 = 2;
    pub const FG_NOT_HOME: u32 = 4;
    /// Decontamination releases "not in the clean lab".
    pub const DECON_BEFORE_CLEAN: u32 = 5;
    /// Conjunction of the three home promises.
    pub const HOME_TASKS: u32 = 7;
}

/// Lookback schema state accepting histories whose last letter is the
/// dirty lab and whose previous visit to a lab was the clean one.
pub const GUARD_FROM_CLEAN: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Plain,
    Home,
    Clean,
    Dirty,
    Station1,
    Station2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    fn delta(self) -> (i32, i32) {
        match self {
            Dir::N => (0, 1),
            Dir::E => (1, 0),
            Dir::S => (0, -1),
            Dir::W => (-1, 0),
        }
    }

    fn perpendicular(self) -> [Dir; 2] {
        match self {
            Dir::N | Dir::S => [Dir::E, Dir::W],
            Dir::E | Dir::W => [Dir::N, Dir::S],
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Dir::N => '^',
            Dir::E => '>',
            Dir::S => 'v',
            Dir::W => '<',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dir::N => "N",
            Dir::E => "E",
            Dir::S => "S",
            Dir::W => "W",
        }
    }
}

/// A rectangular grid with walls between cells. `(0, 0)` is the south-west
/// corner.
#[derive(Clone, Debug, PartialEq)]
pub struct BiolabMap {
    pub width: usize,
    pub height: usize,
    cells: Vec<Cell>,
    dirty_area: Vec<bool>,
    /// Wall on the north / east side of each cell.
    wall_n: Vec<bool>,
    wall_e: Vec<bool>,
    /// The cell south of the zapper door; the door is on its north side.
    pub zapper: Option<(usize, usize)>,
}

impl BiolabMap {
    /// Parses the map format documented in the committed map file.
    pub fn parse(text: &str) -> Result<BiolabMap> {
        let rows: Vec<&[u8]> =
            text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).map(str::as_bytes).collect();
        let bad = |msg: &str| Error::InvalidModel(format!("map: {msg}"));
        if rows.len() < 3 || rows.len() % 2 == 0 {
            return Err(bad("expected alternating boundary and cell lines"));
        }
        let height = rows.len() / 2;
        let cols = rows[0].len();
        if cols < 3 || cols % 2 == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(bad("ragged or too narrow lines"));
        }
        let width = cols / 2;
        let at = |x: usize, y: usize| y * width + x;
        // Line index of the cell row `y` (north is up).
        let line = |y: usize| 2 * (height - 1 - y) + 1;
        let mut map = BiolabMap {
            width,
            height,
            cells: vec![Cell::Plain; width * height],
            dirty_area: vec![false; width * height],
            wall_n: vec![false; width * height],
            wall_e: vec![false; width * height],
            zapper: None,
        };
        for y in 0..height {
            let r = rows[line(y)];
            let above = rows[line(y) - 1];
            for x in 0..width {
                let i = at(x, y);
                map.cells[i] = match r[2 * x + 1] {
                    b'.' => Cell::Plain,
                    b'd' => Cell::Plain,
                    b'H' => Cell::Home,
                    b'C' => Cell::Clean,
                    b'D' => Cell::Dirty,
                    b'1' => Cell::Station1,
                    b'2' => Cell::Station2,
                    c => return Err(bad(&format!("unknown cell '{}' at ({x}, {y})", c as char))),
                };
                map.dirty_area[i] = matches!(r[2 * x + 1], b'd' | b'D');
                map.wall_e[i] = match r[2 * x + 2] {
                    b'|' => true,
                    b' ' => false,
                    c => return Err(bad(&format!("unknown wall '{}' east of ({x}, {y})", c as char))),
                };
                map.wall_n[i] = match above[2 * x + 1] {
                    b'-' => true,
                    b' ' => false,
                    b'z' if y + 1 < height => {
                        if map.zapper.replace((x, y)).is_some() {
                            return Err(bad("more than one zapper door"));
                        }
                        false
                    }
                    c => return Err(bad(&format!("unknown wall '{}' north of ({x}, {y})", c as char))),
                };
            }
        }
        for kind in [Cell::Home, Cell::Clean, Cell::Dirty, Cell::Station1, Cell::Station2] {
            if map.cells.iter().filter(|&&c| c == kind).count() != 1 {
                return Err(bad(&format!("need exactly one {kind:?} cell")));
            }
        }
        Ok(map)
    }

    pub fn default_map() -> BiolabMap {
        Self::parse(DEFAULT_MAP).expect("committed map parses")
    }

    pub fn cell(&self, x: usize, y: usize) -> Cell {
        self.cells[y * self.width + x]
    }

    pub fn in_dirty_area(&self, x: usize, y: usize) -> bool {
        self.dirty_area[y * self.width + x]
    }

    pub fn find(&self, kind: Cell) -> (usize, usize) {
        let i = self.cells.iter().position(|&c| c == kind).expect("cell kinds checked on parse");
        (i % self.width, i / self.width)
    }

    /// Whether a wall blocks the move from `(x, y)` in direction `d`.
    pub fn blocked(&self, x: usize, y: usize, d: Dir) -> bool {
        let w = self.width;
        match d {
            Dir::N => y + 1 >= self.height || self.wall_n[y * w + x],
            Dir::S => y == 0 || self.wall_n[(y - 1) * w + x],
            Dir::E => x + 1 >= w || self.wall_e[y * w + x],
            Dir::W => x == 0 || self.wall_e[y * w + x - 1],
        }
    }

    /// Destination of a move; walls keep the robot in place.
    pub fn step(&self, x: usize, y: usize, d: Dir) -> (usize, usize) {
        if self.blocked(x, y, d) {
            return (x, y);
        }
        let (dx, dy) = d.delta();
        ((x as i32 + dx) as usize, (y as i32 + dy) as usize)
    }

    /// Whether moving from `(x, y)` in direction `d` crosses the zapper door.
    pub fn crosses_zapper(&self, x: usize, y: usize, d: Dir) -> bool {
        match self.zapper {
            Some((zx, zy)) => x == zx && ((d == Dir::N && y == zy) || (d == Dir::S && y == zy + 1)),
            None => false,
        }
    }

    pub fn label(&self, x: usize, y: usize) -> Letter {
        match self.cell(x, y) {
            Cell::Plain => 0,
            Cell::Home => HOME,
            Cell::Clean => CLEAN,
            Cell::Dirty => DIRTY,
            Cell::Station1 | Cell::Station2 => DECON,
        }
    }

    /// Boundary character north of row `y` (or of the top row) above `x`.
    fn boundary_n(&self, x: usize, y: usize) -> char {
        if y + 1 >= self.height {
            return '-';
        }
        if self.zapper == Some((x, y)) {
            'z'
        } else if self.wall_n[y * self.width + x] {
            '-'
        } else {
            ' '
        }
    }

    /// Draws the grid with `glyph(x, y)` in every cell.
    pub fn draw(&self, glyph: impl Fn(usize, usize) -> char) -> String {
        let mut out = String::new();
        let border = |out: &mut String, y: Option<usize>| {
            out.push('+');
            for x in 0..self.width {
                out.push(match y {
                    None => '-',
                    Some(y) => self.boundary_n(x, y),
                });
                out.push('+');
            }
            out.push('\n');
        };
        border(&mut out, None);
        for y in (0..self.height).rev() {
            out.push('|');
            for x in 0..self.width {
                out.push(glyph(x, y));
                out.push(if x + 1 == self.width || self.wall_e[y * self.width + x] { '|' } else { ' ' });
            }
            out.push('\n');
            if y > 0 {
                border(&mut out, Some(y - 1));
            }
        }
        border(&mut out, None);
        out
    }

    /// The map with its cell symbols.
    pub fn symbol(&self, x: usize, y: usize) -> char {
        match self.cell(x, y) {
            Cell::Plain if self.in_dirty_area(x, y) => 'd',
            Cell::Plain => '.',
            Cell::Home => 'H',
            Cell::Clean => 'C',
            Cell::Dirty => 'D',
            Cell::Station1 => '1',
            Cell::Station2 => '2',
        }
    }
}

/// Rewards, dynamics and learning defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiolabParams {
    /// Reward for reaching the dirty lab from the clean lab.
    pub rho: f64,
    pub f1: f64,
    pub f2: f64,
    /// Cost of each move from home.
    pub xi: f64,
    /// Probability of slipping to one of the two perpendicular directions.
    pub p_slip: f64,
    pub p_zap: f64,
    pub lambda: f64,
    pub zeta: f64,
    pub tau_lex: f64,
}

impl Default for BiolabParams {
    fn default() -> Self {
        BiolabParams { rho: 10.0, f1: 1.0, f2: 2.0, xi: 1.0, p_slip: 0.0, p_zap: 0.1, lambda: 0.99, zeta: 0.99, tau_lex: 0.01 }
    }
}

impl BiolabParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(0.0 < self.f1 && self.f1 < self.f2 && self.f2 < self.rho) {
            return bad("rewards must satisfy 0 < f1 < f2 < rho");
        }
        if !(self.xi > 0.0) {
            return bad("xi must be positive");
        }
        if !(0.0..1.0).contains(&self.p_slip) || !(0.0..=1.0).contains(&self.p_zap) {
            return bad("p_slip must lie in [0, 1) and p_zap in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.lambda) || !(self.zeta > 0.0 && self.zeta < 1.0) || !(self.tau_lex >= 0.0) {
            return bad("need lambda in [0, 1), zeta in (0, 1) and tau_lex >= 0");
        }
        Ok(())
    }
}

/// The biolab ODP and the meaning of its states.
#[derive(Clone, Debug)]
pub struct Biolab {
    pub map: BiolabMap,
    pub params: BiolabParams,
    pub odp: Odp,
}

/// Where the robot is: a cell and whether the zapper is disabled, or
/// destroyed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    At { x: usize, y: usize, disabled: bool },
    Destroyed,
}

impl Biolab {
    pub fn state(&self, x: usize, y: usize, disabled: bool) -> SId {
        ((disabled as usize * self.map.height + y) * self.map.width + x) as SId
    }

    pub fn destroyed(&self) -> SId {
        (2 * self.map.width * self.map.height) as SId
    }

    pub fn position(&self, s: SId) -> Position {
        let cells = self.map.width * self.map.height;
        let s = s as usize;
        if s >= 2 * cells {
            return Position::Destroyed;
        }
        let disabled = s >= cells;
        let i = s % cells;
        Position::At { x: i % self.map.width, y: i / self.map.width, disabled }
    }
}

fn lookahead_schema(alpha: &Alphabet) -> Automaton {
    use promise::*;
    let mut a = Automaton::new(Kind::Uca, alpha.clone(), 8);
    let sink = DECON_BEFORE_CLEAN + 1;
    for l in alpha.letters() {
        for (q, ap) in [(GF_CLEAN, CLEAN), (GF_DIRTY, DIRTY)] {
            a.add_edge(q, l, q, false);
            if l & ap == 0 {
                a.add_edge(q, l, q + 1, false);
                a.add_edge(q + 1, l, q + 1, true);
            }
        }
        a.add_edge(FG_NOT_HOME, l, FG_NOT_HOME, l & HOME != 0);
        if l & CLEAN != 0 {
            a.add_edge(DECON_BEFORE_CLEAN, l, sink, false);
        } else if l & DECON == 0 {
            a.add_edge(DECON_BEFORE_CLEAN, l, DECON_BEFORE_CLEAN, false);
        }
        a.add_edge(sink, l, sink, true);
        for q in [GF_CLEAN, GF_DIRTY, FG_NOT_HOME] {
            let targets: Vec<(StateId, bool)> = a.successors(q, l).iter().map(|e| (e.target, e.marked)).collect();
            for (t, m) in targets {
                a.add_edge(HOME_TASKS, l, t, m);
            }
        }
    }
    a
}

fn lookback_schema(alpha: &Alphabet) -> Automaton {
    // 0: no clean lab since the last dirty lab; 1: clean lab seen since;
    // 2: just entered the dirty lab from state 1.
    let mut d = Automaton::new(Kind::Dfa, alpha.clone(), 3);
    d.finals = vec![false, false, true];
    for l in alpha.letters() {
        for q in 0..3 {
            let t = if l & CLEAN != 0 {
                1
            } else if l & DIRTY != 0 {
                if q == 1 {
                    2
                } else {
                    0
                }
            } else if q == 2 {
                0
            } else {
                q
            };
            d.add_edge(q, l, t, false);
        }
    }
    d
}

/// Builds the ODP of `map` with the given parameters.
pub fn build_biolab(map: &BiolabMap, params: &BiolabParams) -> Result<Biolab> {
    params.validate()?;
    let alpha = Alphabet::new(APS)?;
    let cells = map.width * map.height;
    let n = 2 * cells + 1;
    let mut labels = vec![0; n];
    let mut actions: Vec<Vec<OdpAction>> = vec![Vec::new(); n];
    let bio = Biolab {
        map: map.clone(),
        params: params.clone(),
        odp: Odp { aps: Vec::new(), labels: Vec::new(), initial: 0, actions: Vec::new(), lookback: None, lookahead: None },
    };
    for disabled in [false, true] {
        for y in 0..map.height {
            for x in 0..map.width {
                let s = bio.state(x, y, disabled) as usize;
                labels[s] = map.label(x, y);
                let cell = map.cell(x, y);
                let reward = match cell {
                    Cell::Home => -params.xi,
                    Cell::Station1 => -params.f1,
                    Cell::Station2 => -params.f2,
                    _ => 0.0,
                };
                let promise = if cell == Cell::Home {
                    Some(promise::HOME_TASKS)
                } else if map.in_dirty_area(x, y) {
                    Some(promise::DECON_BEFORE_CLEAN)
                } else {
                    None
                };
                for d in Dir::ALL {
                    let mut moves = vec![(d, 1.0 - params.p_slip)];
                    if params.p_slip > 0.0 {
                        moves.extend(d.perpendicular().map(|p| (p, params.p_slip / 2.0)));
                    }
                    let mut outcomes: Vec<Outcome> = Vec::new();
                    let mut add = |target: SId, prob: f64| {
                        if prob <= 0.0 {
                            return;
                        }
                        match outcomes.iter_mut().find(|o| o.target == target) {
                            Some(o) => o.prob += prob,
                            None => outcomes.push(Outcome { target, prob, reward }),
                        }
                    };
                    for (m, p) in moves {
                        let (tx, ty) = map.step(x, y, m);
                        if !disabled && map.crosses_zapper(x, y, m) {
                            add(bio.destroyed(), p * params.p_zap);
                            add(bio.state(tx, ty, true), p * (1.0 - params.p_zap));
                        } else {
                            add(bio.state(tx, ty, disabled), p);
                        }
                    }
                    let plain = OdpAction { name: d.name().into(), guard: None, promise, outcomes };
                    if cell == Cell::Dirty {
                        let paid = plain.outcomes.iter().map(|o| Outcome { reward: params.rho, ..*o }).collect();
                        actions[s].push(OdpAction {
                            name: format!("{}+", d.name()),
                            guard: Some(GUARD_FROM_CLEAN),
                            outcomes: paid,
                            ..plain.clone()
                        });
                    }
                    actions[s].push(plain);
                }
            }
        }
    }
    let dead = bio.destroyed() as usize;
    actions[dead].push(OdpAction {
        name: "idle".into(),
        guard: None,
        promise: None,
        outcomes: vec![Outcome { target: dead as SId, prob: 1.0, reward: 0.0 }],
    });
    let (hx, hy) = map.find(Cell::Home);
    let odp = Odp {
        aps: APS.iter().map(|s| s.to_string()).collect(),
        labels,
        initial: bio.state(hx, hy, false),
        actions,
        lookback: Some(lookback_schema(&alpha)),
        lookahead: Some(lookahead_schema(&alpha)),
    };
    odp.validate()?;
    Ok(Biolab { odp, ..bio })
}
