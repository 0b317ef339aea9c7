//! Synchronous products of an MDP with an automaton or a reward machine.
//! The automaton reads the letter emitted by the chosen action, which is
//! the label of the source state unless the action overrides it.

use rustc_hash::FxHashMap;

use crate::automata::{Automaton, Kind, Letter, StateId};
use crate::error::{Error, Result};

use super::{Choice, Mdp, Outcome, SId};

/// Product MDP with the origin of every state and choice.
#[derive(Clone, Debug)]
pub struct Product {
    pub mdp: Mdp,
    /// (MDP state, automaton or machine state) per product state.
    pub origin: Vec<(SId, u32)>,
    /// Index of the originating MDP choice per product choice.
    pub choice_origin: Vec<Vec<usize>>,
    /// Product states where the automaton has no move under any action;
    /// they get a single non-accepting self-loop.
    pub dead: Vec<bool>,
}

impl Product {
    pub fn index_of(&self, s: SId, q: u32) -> Option<SId> {
        self.origin.iter().position(|&o| o == (s, q)).map(|i| i as SId)
    }
}

/// Product with a nondeterministic Büchi automaton: one product choice per
/// action and automaton move, accepting iff the move is.
pub fn product_with_nba(m: &Mdp, a: &Automaton) -> Result<Product> {
    if a.kind != Kind::Nba && a.kind != Kind::Dba {
        return Err(Error::Shape("Büchi automaton"));
    }
    let &q0 = match a.initial.as_slice() {
        [q] => q,
        _ => return Err(Error::Unsupported("product needs exactly one initial automaton state".into())),
    };
    for (s, cs) in m.choices.iter().enumerate() {
        for c in cs {
            let l = m.letter(s as SId, c);
            if !a.alphabet.is_valid(l) {
                return Err(Error::AlphabetMismatch(format!("letter {l} of state {s} unknown to the automaton")));
            }
        }
    }
    let mut out = Mdp::new(m.aps.clone());
    out.action_names = m.action_names.clone();
    let dead_action = out.action_id("_dead");
    let mut index: FxHashMap<(SId, StateId), SId> = FxHashMap::default();
    let mut origin: Vec<(SId, u32)> = Vec::new();
    let mut choice_origin = Vec::new();
    let mut dead = Vec::new();
    let mut intern = |s: SId, q: StateId, out: &mut Mdp, origin: &mut Vec<(SId, u32)>| -> SId {
        *index.entry((s, q)).or_insert_with(|| {
            origin.push((s, q));
            out.add_state(m.labels[s as usize])
        })
    };
    out.initial = intern(m.initial, q0, &mut out, &mut origin);
    let mut next = 0usize;
    while next < origin.len() {
        let (s, q) = origin[next];
        let p = next as SId;
        next += 1;
        let mut owners = Vec::new();
        for (ci, c) in m.choices[s as usize].iter().enumerate() {
            let l: Letter = m.letter(s, c);
            for e in a.successors(q, l) {
                let outcomes = c
                    .outcomes
                    .iter()
                    .map(|o| Outcome { target: intern(o.target, e.target, &mut out, &mut origin), ..*o })
                    .collect();
                out.add_choice(p, Choice { action: c.action, outcomes, letter: c.letter, accepting: e.marked });
                owners.push(ci);
            }
        }
        let is_dead = owners.is_empty();
        if is_dead {
            let outcomes = vec![Outcome { target: p, prob: 1.0, reward: 0.0 }];
            out.add_choice(p, Choice { action: dead_action, outcomes, letter: None, accepting: false });
            owners.push(usize::MAX);
        }
        choice_origin.push(owners);
        dead.push(is_dead);
    }
    Ok(Product { mdp: out, origin, choice_origin, dead })
}

/// Deterministic, complete reward machine over the MDP's letters. Taking a
/// step from `u` on letter `l` moves to `delta[u][l]` and earns
/// `reward[u][l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardMachine {
    pub initial: u32,
    pub delta: Vec<Vec<u32>>,
    pub reward: Vec<Vec<f64>>,
}

impl RewardMachine {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    /// Builds the machine from a DFA: reward `r` on every transition that
    /// enters a final state.
    pub fn from_dfa(d: &Automaton, r: f64) -> Result<Self> {
        if d.kind != Kind::Dfa || !d.is_deterministic() || !d.is_complete() {
            return Err(Error::Shape("complete deterministic finite automaton"));
        }
        let &u0 = d.initial.first().ok_or_else(|| Error::InvalidModel("guard without initial state".into()))?;
        let letters = d.alphabet.raw_size();
        let mut delta = vec![vec![0; letters]; d.num_states()];
        let mut reward = vec![vec![0.0; letters]; d.num_states()];
        for q in d.states() {
            for e in d.edges(q) {
                delta[q as usize][e.letter as usize] = e.target;
                if d.finals[e.target as usize] {
                    reward[q as usize][e.letter as usize] = r;
                }
            }
        }
        Ok(RewardMachine { initial: u0, delta, reward })
    }
}

/// Product with a reward machine. Machine rewards are added to the MDP's
/// own rewards; acceptance marks are kept.
pub fn product_with_reward_machine(m: &Mdp, rm: &RewardMachine) -> Result<Product> {
    let width = rm.delta.first().map_or(0, Vec::len);
    if rm.delta.iter().any(|row| row.len() != width) || rm.reward.len() != rm.delta.len() {
        return Err(Error::InvalidModel("ragged reward machine".into()));
    }
    let mut out = Mdp::new(m.aps.clone());
    out.action_names = m.action_names.clone();
    let mut index: FxHashMap<(SId, u32), SId> = FxHashMap::default();
    let mut origin: Vec<(SId, u32)> = Vec::new();
    let mut choice_origin = Vec::new();
    let mut intern = |s: SId, u: u32, out: &mut Mdp, origin: &mut Vec<(SId, u32)>| -> SId {
        *index.entry((s, u)).or_insert_with(|| {
            origin.push((s, u));
            out.add_state(m.labels[s as usize])
        })
    };
    out.initial = intern(m.initial, rm.initial, &mut out, &mut origin);
    let mut next = 0usize;
    while next < origin.len() {
        let (s, u) = origin[next];
        let p = next as SId;
        next += 1;
        for c in &m.choices[s as usize] {
            let l = m.letter(s, c) as usize;
            if l >= width {
                return Err(Error::AlphabetMismatch(format!("letter {l} outside the reward machine")));
            }
            let u2 = rm.delta[u as usize][l];
            let r = rm.reward[u as usize][l];
            let outcomes = c
                .outcomes
                .iter()
                .map(|o| Outcome { target: intern(o.target, u2, &mut out, &mut origin), prob: o.prob, reward: o.reward + r })
                .collect();
            out.add_choice(p, Choice { outcomes, ..c.clone() });
        }
        choice_origin.push((0..m.choices[s as usize].len()).collect());
    }
    let dead = vec![false; origin.len()];
    Ok(Product { mdp: out, origin, choice_origin, dead })
}
