//! Rank-based complementation of universal co-Büchi automata into
//! strongly limit-deterministic, good-for-MDPs Büchi automata.
//!
//! The first phase is the subset construction. From a subset the automaton
//! may guess a tight level ranking and enter the second phase, whose states
//! `(S, O, f, i)` are updated deterministically. Transitions completing a
//! breakpoint (the owing set `O` of index `i` running empty) are accepting.
//! The empty set has no tight ranking: it is a first-phase sink with
//! accepting self-loops, and second-phase moves into it block.
//!
//! Only reachable states are built. Rankings are stored densely, one byte
//! per input state, so inputs are limited to 64 states.

mod ranking;

use std::time::Instant;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::automata::{Automaton, Edge, Kind, Letter, StateId};
use crate::error::{Error, Result};

pub use ranking::{is_tight, tight_rankings, Entry, NONE};
use ranking::bits;

/// Whether the designated state of a collection automaton is pinned to the
/// unique maximal rank.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pin {
    /// Pin iff the input designates a fresh initial state.
    #[default]
    Auto,
    On,
    Off,
}

/// Syntactic shapes of collection automata with cheaper complements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Every transition except the designated self-loop is rejecting.
    Reachability,
    /// Rejecting transitions are exactly the self-loops of rejecting sinks
    /// and nothing leaving the designated state is rejecting.
    Safety,
}

#[derive(Clone, Debug)]
pub struct ComplementOpts {
    /// Enter the second phase only with rankings using odd values.
    pub odd_entry: bool,
    pub pin: Pin,
    /// Use the reachability/safety constructions when the shape matches.
    pub special_cases: bool,
    /// Restrict the constructed transitions to these letters.
    pub letters: Option<Vec<Letter>>,
    pub max_states: usize,
    pub deadline: Option<Instant>,
}

impl Default for ComplementOpts {
    fn default() -> Self {
        ComplementOpts {
            odd_entry: true,
            pin: Pin::Auto,
            special_cases: true,
            letters: None,
            max_states: 50_000_000,
            deadline: None,
        }
    }
}

impl ComplementOpts {
    /// The plain construction: no restriction on entry rankings.
    pub fn unrestricted() -> Self {
        ComplementOpts { odd_entry: false, pin: Pin::Off, special_cases: false, ..Default::default() }
    }
}

/// Which phase a state of the complement belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part {
    Subset,
    Ranking,
    EmptySink,
}

impl Part {
    /// True for states of the initial (nondeterministic) part.
    pub fn is_first(self) -> bool {
        self == Part::Subset
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplementStats {
    pub states: usize,
    pub transitions: usize,
    pub accepting_transitions: usize,
    pub blocked_transitions: usize,
    pub wall_time_ms: f64,
}

/// A complement automaton together with its phase partition.
#[derive(Clone, Debug)]
pub struct GfmNba {
    pub nba: Automaton,
    pub part: Vec<Part>,
    pub stats: ComplementStats,
}

impl GfmNba {
    pub fn num_states(&self) -> usize {
        self.nba.num_states()
    }

    /// Restriction to `keep`, carrying the partition along.
    pub fn restrict(&self, keep: &[bool]) -> GfmNba {
        let (nba, map) = self.nba.restrict(keep);
        let mut part = vec![Part::Subset; nba.num_states()];
        for (q, m) in map.iter().enumerate() {
            if let Some(nq) = m {
                part[*nq as usize] = self.part[q];
            }
        }
        GfmNba { nba, part, stats: self.stats.clone() }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Empty,
    Subset(u64),
    Ranking { s: u64, o: u64, i: u8, f: Box<[u8]> },
}

/// Detects the special shapes on a collection automaton.
pub fn detect_shape(a: &Automaton) -> Option<Shape> {
    let d = a.designated?;
    let reach = a.states().all(|q| a.edges(q).iter().all(|e| e.marked != (q == d && e.target == d)));
    if reach {
        return Some(Shape::Reachability);
    }
    let sinks = rejecting_sinks(a);
    let safety = a.states().all(|q| {
        a.edges(q).iter().all(|e| {
            if q == d {
                !e.marked
            } else {
                e.marked == (sinks >> q & 1 == 1)
            }
        })
    });
    safety.then_some(Shape::Safety)
}

/// States whose only transitions are rejecting self-loops on every letter.
fn rejecting_sinks(a: &Automaton) -> u64 {
    let letters = a.alphabet.num_letters();
    let mut mask = 0u64;
    for q in a.states().take(64) {
        let es = a.edges(q);
        if es.len() == letters && es.iter().all(|e| e.marked && e.target == q) {
            mask |= 1 << q;
        }
    }
    mask
}

/// Complements a UCA into a language-equivalent GFM NBA.
pub fn complement_uca(a: &Automaton, opts: &ComplementOpts) -> Result<GfmNba> {
    let shape = if opts.special_cases { detect_shape(a) } else { None };
    build(a, opts, shape)
}

/// Complements with the construction for a declared special shape.
pub fn complement_special(a: &Automaton, shape: Shape, opts: &ComplementOpts) -> Result<GfmNba> {
    if detect_shape(a) != Some(shape) {
        return Err(Error::Shape(match shape {
            Shape::Reachability => "reachability collection",
            Shape::Safety => "safety collection",
        }));
    }
    build(a, opts, Some(shape))
}

fn build(a: &Automaton, opts: &ComplementOpts, shape: Option<Shape>) -> Result<GfmNba> {
    let start = Instant::now();
    let n = a.num_states();
    let masks = a.dense_masks()?;
    let pin = match (opts.pin, a.designated) {
        (Pin::Off, _) => None,
        (Pin::Auto, None) => None,
        (Pin::On, None) => return Err(Error::Shape("collection automaton with a designated state")),
        (_, Some(d)) => {
            let incoming = a.states().any(|q| a.edges(q).iter().any(|e| e.target == d && q != d));
            if incoming {
                return Err(Error::Shape("collection automaton whose designated state has no incoming transitions"));
            }
            Some(d as usize)
        }
    };
    let entry = match shape {
        Some(Shape::Reachability) => Entry::Reachability { pin: a.designated.unwrap() as usize },
        Some(Shape::Safety) => Entry::Safety,
        None => Entry::General { odd_only: opts.odd_entry, pin, ties: opts.odd_entry },
    };
    let blocked_mask = if shape == Some(Shape::Safety) { rejecting_sinks(a) } else { 0 };
    let letters: Vec<Letter> = match &opts.letters {
        Some(ls) => {
            let mut ls: Vec<Letter> = ls.iter().copied().filter(|&l| a.alphabet.is_valid(l)).collect();
            ls.sort_unstable();
            ls.dedup();
            ls
        }
        None => a.alphabet.letters().collect(),
    };

    let mut index: FxHashMap<Key, StateId> = FxHashMap::default();
    let mut keys: Vec<Key> = Vec::new();
    let mut part: Vec<Part> = Vec::new();
    let mut rankings: FxHashMap<u64, std::rc::Rc<Vec<Box<[u8]>>>> = FxHashMap::default();
    let mut out = Automaton::new(Kind::Nba, a.alphabet.clone(), 0);
    let mut stats = ComplementStats::default();

    let mut intern = |key: Key, keys: &mut Vec<Key>, part: &mut Vec<Part>, out: &mut Automaton| -> Result<StateId> {
        if let Some(&id) = index.get(&key) {
            return Ok(id);
        }
        if keys.len() >= opts.max_states {
            return Err(Error::Capacity { what: "complement", built: keys.len() });
        }
        let id = out.add_state();
        part.push(match key {
            Key::Empty => Part::EmptySink,
            Key::Subset(_) => Part::Subset,
            Key::Ranking { .. } => Part::Ranking,
        });
        index.insert(key.clone(), id);
        keys.push(key);
        Ok(id)
    };

    let init_mask = a.initial.iter().fold(0u64, |m, &q| m | 1 << q);
    let init_key = if init_mask == 0 { Key::Empty } else { Key::Subset(init_mask) };
    let init = intern(init_key, &mut keys, &mut part, &mut out)?;
    out.initial = vec![init];

    let post = |s: u64, l: Letter| bits(s).fold(0u64, |m, q| m | masks[q][l as usize].0);

    let mut head = 0;
    while head < keys.len() {
        if head % 1024 == 0 {
            if let Some(deadline) = opts.deadline {
                if Instant::now() >= deadline {
                    return Err(Error::Timeout { built: keys.len() });
                }
            }
        }
        let key = keys[head].clone();
        let src = head as StateId;
        head += 1;
        let mut list: Vec<Edge> = Vec::new();
        match key {
            Key::Empty => {
                list.extend(letters.iter().map(|&l| Edge { letter: l, target: src, marked: true }));
            }
            Key::Subset(s) => {
                for &l in &letters {
                    let s2 = post(s, l);
                    if s2 & blocked_mask != 0 {
                        stats.blocked_transitions += 1;
                        continue;
                    }
                    if s2 == 0 {
                        let t = intern(Key::Empty, &mut keys, &mut part, &mut out)?;
                        list.push(Edge { letter: l, target: t, marked: false });
                        continue;
                    }
                    let t = intern(Key::Subset(s2), &mut keys, &mut part, &mut out)?;
                    list.push(Edge { letter: l, target: t, marked: false });
                    let fs = rankings
                        .entry(s2)
                        .or_insert_with(|| {
                            let domain: Vec<usize> = bits(s2).collect();
                            std::rc::Rc::new(tight_rankings(&domain, n, entry))
                        })
                        .clone();
                    for f in fs.iter() {
                        let t = intern(Key::Ranking { s: s2, o: 0, i: 0, f: f.clone() }, &mut keys, &mut part, &mut out)?;
                        list.push(Edge { letter: l, target: t, marked: false });
                    }
                }
            }
            Key::Ranking { s, o, i, ref f } => {
                for &l in &letters {
                    let s2 = post(s, l);
                    if s2 & blocked_mask != 0 {
                        stats.blocked_transitions += 1;
                        continue;
                    }
                    if s2 == 0 {
                        stats.blocked_transitions += 1;
                        continue;
                    }
                    let mut f2 = vec![NONE; n].into_boxed_slice();
                    for q in bits(s) {
                        let (all, marked) = masks[q][l as usize];
                        let j = f[q];
                        for t in bits(all & !marked) {
                            f2[t] = f2[t].min(j);
                        }
                        for t in bits(marked) {
                            f2[t] = f2[t].min(j & !1);
                        }
                    }
                    if !is_tight(&f2, s2) {
                        stats.blocked_transitions += 1;
                        continue;
                    }
                    let rank = bits(s2).map(|q| f2[q]).max().unwrap();
                    let level = |v: u8| bits(s2).filter(|&q| f2[q] == v).fold(0u64, |m, q| m | 1 << q);
                    let o2 = post(o, l) & level(i);
                    let (o3, i3, marked) = if o2 != 0 {
                        (o2, i, false)
                    } else {
                        let i3 = (i + 2) % (rank + 1);
                        (level(i3), i3, true)
                    };
                    let t = intern(Key::Ranking { s: s2, o: o3, i: i3, f: f2 }, &mut keys, &mut part, &mut out)?;
                    list.push(Edge { letter: l, target: t, marked });
                }
            }
        }
        out.set_edges(src, list);
    }

    stats.states = out.num_states();
    stats.transitions = out.num_edges();
    stats.accepting_transitions = out.num_marked();
    stats.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(GfmNba { nba: out, part, stats })
}

#[cfg(test)]
mod tests;
