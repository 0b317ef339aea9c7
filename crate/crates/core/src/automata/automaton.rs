use serde::{Deserialize, Serialize};

use super::alphabet::{Alphabet, Letter};
use crate::error::{Error, Result};

pub type StateId = u32;

/// Automaton flavour. Acceptance is always carried by transition marks
/// (`Nba`/`Dba`: accepting, `Uca`: rejecting) or by `finals` for a `Dfa`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Nba,
    Dba,
    Uca,
    Dfa,
}

impl Kind {
    pub fn is_deterministic(self) -> bool {
        matches!(self, Kind::Dba | Kind::Dfa)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub letter: Letter,
    pub target: StateId,
    pub marked: bool,
}

/// An explicit ω-automaton (or automaton schema when `initial` is empty).
///
/// Outgoing edges of every state are kept sorted by `(letter, target)`
/// without duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    pub kind: Kind,
    pub alphabet: Alphabet,
    pub initial: Vec<StateId>,
    /// Final states of a DFA; empty for other kinds.
    pub finals: Vec<bool>,
    /// Fresh initial state of a collection automaton.
    pub designated: Option<StateId>,
    edges: Vec<Vec<Edge>>,
}

impl Automaton {
    pub fn new(kind: Kind, alphabet: Alphabet, states: usize) -> Self {
        Automaton {
            kind,
            alphabet,
            initial: Vec::new(),
            finals: if kind == Kind::Dfa { vec![false; states] } else { Vec::new() },
            designated: None,
            edges: vec![Vec::new(); states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn num_marked(&self) -> usize {
        self.edges.iter().flatten().filter(|e| e.marked).count()
    }

    pub fn add_state(&mut self) -> StateId {
        self.edges.push(Vec::new());
        if self.kind == Kind::Dfa {
            self.finals.push(false);
        }
        (self.edges.len() - 1) as StateId
    }

    pub fn is_schema(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn states(&self) -> std::ops::Range<StateId> {
        0..self.num_states() as StateId
    }

    /// Adds `src --letter--> target`; an existing identical edge keeps the
    /// union of the marks.
    pub fn add_edge(&mut self, src: StateId, letter: Letter, target: StateId, marked: bool) {
        let list = &mut self.edges[src as usize];
        match list.binary_search_by(|e| (e.letter, e.target).cmp(&(letter, target))) {
            Ok(i) => list[i].marked |= marked,
            Err(i) => list.insert(i, Edge { letter, target, marked }),
        }
    }

    /// Replaces all outgoing edges of `src`; the list is sorted and merged.
    pub fn set_edges(&mut self, src: StateId, mut list: Vec<Edge>) {
        list.sort_unstable();
        list.dedup_by(|b, a| {
            if a.letter == b.letter && a.target == b.target {
                a.marked |= b.marked;
                true
            } else {
                false
            }
        });
        self.edges[src as usize] = list;
    }

    pub fn edges(&self, q: StateId) -> &[Edge] {
        &self.edges[q as usize]
    }

    /// Outgoing edges of `q` reading `letter`.
    pub fn successors(&self, q: StateId, letter: Letter) -> &[Edge] {
        let list = &self.edges[q as usize];
        let lo = list.partition_point(|e| e.letter < letter);
        let hi = lo + list[lo..].partition_point(|e| e.letter == letter);
        &list[lo..hi]
    }

    pub fn check_state(&self, q: StateId) -> Result<()> {
        if (q as usize) < self.num_states() {
            Ok(())
        } else {
            Err(Error::UnknownState(q as usize))
        }
    }

    /// The automaton `A_q`: the schema with `q` as initial state.
    pub fn instantiate(&self, q: StateId) -> Result<Automaton> {
        self.check_state(q)?;
        let mut a = self.clone();
        a.initial = vec![q];
        Ok(a)
    }

    /// The same structure with the schema flag set (no initial state).
    pub fn as_schema(&self) -> Automaton {
        let mut a = self.clone();
        a.initial.clear();
        a
    }

    /// The same structure read with a different acceptance interpretation.
    pub fn reinterpret(&self, kind: Kind) -> Automaton {
        let mut a = self.clone();
        a.kind = kind;
        if kind != Kind::Dfa {
            a.finals.clear();
        } else if a.finals.len() != a.num_states() {
            a.finals = vec![false; a.num_states()];
        }
        a
    }

    /// True iff every (state, letter) pair has at most one successor.
    pub fn is_deterministic(&self) -> bool {
        self.initial.len() <= 1
            && self.edges.iter().all(|list| list.windows(2).all(|w| w[0].letter != w[1].letter))
    }

    /// True iff every state has a successor on every valid letter.
    pub fn is_complete(&self) -> bool {
        let letters: Vec<Letter> = self.alphabet.letters().collect();
        self.states().all(|q| letters.iter().all(|&l| !self.successors(q, l).is_empty()))
    }

    /// States reachable from the initial states.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack: Vec<StateId> = Vec::new();
        for &q in &self.initial {
            if !seen[q as usize] {
                seen[q as usize] = true;
                stack.push(q);
            }
        }
        while let Some(q) = stack.pop() {
            for e in self.edges(q) {
                if !seen[e.target as usize] {
                    seen[e.target as usize] = true;
                    stack.push(e.target);
                }
            }
        }
        seen
    }

    /// Restriction to the states with `keep` set; returns the new automaton
    /// and the old-to-new id map.
    pub fn restrict(&self, keep: &[bool]) -> (Automaton, Vec<Option<StateId>>) {
        let mut map = vec![None; self.num_states()];
        let mut next = 0;
        for q in 0..self.num_states() {
            if keep[q] {
                map[q] = Some(next);
                next += 1;
            }
        }
        let mut out = Automaton::new(self.kind, self.alphabet.clone(), next as usize);
        for q in self.states() {
            let Some(nq) = map[q as usize] else { continue };
            let list = self
                .edges(q)
                .iter()
                .filter_map(|e| map[e.target as usize].map(|t| Edge { target: t, ..*e }))
                .collect();
            out.set_edges(nq, list);
            if self.kind == Kind::Dfa {
                out.finals[nq as usize] = self.finals[q as usize];
            }
        }
        out.initial = self.initial.iter().filter_map(|&q| map[q as usize]).collect();
        out.designated = self.designated.and_then(|q| map[q as usize]);
        (out, map)
    }

    /// Renumbers states in breadth-first order from the initial states
    /// (exploring edges in `(letter, target)` order) and drops unreachable
    /// states. Schemas keep all states in their original order.
    pub fn canonicalize(&self) -> Automaton {
        if self.is_schema() {
            return self.clone();
        }
        let mut order: Vec<StateId> = Vec::new();
        let mut map = vec![None; self.num_states()];
        let mut initial: Vec<StateId> = self.initial.clone();
        initial.sort_unstable();
        initial.dedup();
        for &q in &initial {
            if map[q as usize].is_none() {
                map[q as usize] = Some(order.len() as StateId);
                order.push(q);
            }
        }
        let mut head = 0;
        while head < order.len() {
            let q = order[head];
            head += 1;
            for e in self.edges(q) {
                if map[e.target as usize].is_none() {
                    map[e.target as usize] = Some(order.len() as StateId);
                    order.push(e.target);
                }
            }
        }
        let mut out = Automaton::new(self.kind, self.alphabet.clone(), order.len());
        for (nq, &q) in order.iter().enumerate() {
            let list = self
                .edges(q)
                .iter()
                .map(|e| Edge { target: map[e.target as usize].unwrap(), ..*e })
                .collect();
            out.set_edges(nq as StateId, list);
            if self.kind == Kind::Dfa {
                out.finals[nq] = self.finals[q as usize];
            }
        }
        out.initial = initial.iter().map(|&q| map[q as usize].unwrap()).collect();
        out.designated = self.designated.and_then(|q| map[q as usize]);
        out
    }

    /// Dense successor table: for each state and each raw letter, the bit
    /// masks of all successors and of the marked successors. Requires at
    /// most 64 states.
    pub fn dense_masks(&self) -> Result<Vec<Vec<(u64, u64)>>> {
        if self.num_states() > 64 {
            return Err(Error::Capacity { what: "dense transition table", built: self.num_states() });
        }
        let raw = self.alphabet.raw_size();
        let mut table = vec![vec![(0u64, 0u64); raw]; self.num_states()];
        for q in self.states() {
            for e in self.edges(q) {
                let cell = &mut table[q as usize][e.letter as usize];
                cell.0 |= 1 << e.target;
                if e.marked {
                    cell.1 |= 1 << e.target;
                }
            }
        }
        Ok(table)
    }

    /// DFA acceptance of a finite word from `start` (subset semantics, so
    /// nondeterministic schemas are accepted too).
    pub fn accepts_finite(&self, start: StateId, word: &[Letter]) -> bool {
        let mut current = vec![start];
        for &l in word {
            let mut next: Vec<StateId> = current
                .iter()
                .flat_map(|&q| self.successors(q, l).iter().map(|e| e.target))
                .collect();
            next.sort_unstable();
            next.dedup();
            current = next;
        }
        current.iter().any(|&q| self.finals.get(q as usize).copied().unwrap_or(false))
    }
}
