//! Semantic oracle: determinization of universal co-Büchi automata into
//! deterministic Streett automata over history trees, lasso membership for
//! the result, and the maximal satisfaction probability of a Streett
//! objective in an MDP. The last one gives an independent check that a
//! nondeterministic automaton is good for MDPs.

mod tree;

use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;

use crate::automata::{Alphabet, Automaton, Kind, LassoWord, Letter};
use crate::error::{Error, Result};
use crate::mdp::{accepting_mecs, max_reach_prob, mecs_within, product_with_nba, Choice, Mdp, Outcome, SId};

pub use tree::{HistoryStep, HistoryTree, Name};

/// Pair membership of one transition.
#[derive(Clone, Debug)]
pub struct Marks {
    /// Pairs whose node collapses.
    pub collapse: FixedBitSet,
    /// Pairs whose node is stable; all others are unstable.
    pub stable: FixedBitSet,
}

/// Deterministic Streett automaton whose states are history trees. Pair `i`
/// belongs to node name `pairs[i]`: its first set holds the transitions
/// where the node collapses, its second those where it is unstable. A run
/// is accepting iff every pair that collapses infinitely often is also
/// unstable infinitely often.
#[derive(Clone, Debug)]
pub struct StreettDsa {
    pub alphabet: Alphabet,
    pub trees: Vec<HistoryTree>,
    pub initial: u32,
    pub letters: Vec<Letter>,
    letter_index: Vec<u32>,
    pub next: Vec<Vec<u32>>,
    pub marks: Vec<Vec<Marks>>,
    pub pairs: Vec<Name>,
}

impl StreettDsa {
    pub fn num_states(&self) -> usize {
        self.trees.len()
    }

    fn index(&self, letter: Letter) -> Result<usize> {
        match self.letter_index.get(letter as usize) {
            Some(&i) if i != u32::MAX => Ok(i as usize),
            _ => Err(Error::AlphabetMismatch(format!("letter {letter} not in the Streett automaton's alphabet"))),
        }
    }

    pub fn step(&self, t: u32, letter: Letter) -> Result<(u32, &Marks)> {
        let i = self.index(letter)?;
        Ok((self.next[t as usize][i], &self.marks[t as usize][i]))
    }

    /// Human-readable listing of states, transitions and pairs.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states: {}  pairs: {}  initial: {}", self.num_states(), self.pairs.len(), self.initial);
        for (i, name) in self.pairs.iter().enumerate() {
            let parts: Vec<String> = name.iter().map(u8::to_string).collect();
            let _ = writeln!(out, "pair {i}: node {}", if parts.is_empty() { "e".into() } else { parts.join(".") });
        }
        for (t, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "state {t}: {tree}");
            for (k, &l) in self.letters.iter().enumerate() {
                let m = &self.marks[t][k];
                let unstable: Vec<usize> = (0..self.pairs.len()).filter(|&p| !m.stable.contains(p)).collect();
                let _ = writeln!(
                    out,
                    "  [{}] -> {}  collapse {:?} unstable {:?}",
                    self.alphabet.format_letter(l),
                    self.next[t][k],
                    m.collapse.ones().collect::<Vec<_>>(),
                    unstable
                );
            }
        }
        out
    }
}

/// Determinizes a universal co-Büchi automaton (read as the Büchi automaton
/// of its complement) into a Streett automaton over history trees.
pub fn determinize_uca(a: &Automaton, max_states: usize) -> Result<StreettDsa> {
    if a.kind != Kind::Uca {
        return Err(Error::Shape("universal co-Büchi automaton"));
    }
    let table = a.dense_masks()?;
    let letters: Vec<Letter> = a.alphabet.letters().collect();
    let mut letter_index = vec![u32::MAX; a.alphabet.raw_size()];
    for (i, &l) in letters.iter().enumerate() {
        letter_index[l as usize] = i as u32;
    }
    let post = |s: u64, l: Letter, marked: bool| {
        let mut out = 0u64;
        let mut rest = s;
        while rest != 0 {
            let q = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let (all, acc) = table[q][l as usize];
            out |= if marked { acc } else { all };
        }
        out
    };
    let init = a.initial.iter().fold(0u64, |m, &q| m | 1 << q);
    let mut trees = vec![HistoryTree::initial(init)];
    let mut index: FxHashMap<HistoryTree, u32> = FxHashMap::default();
    index.insert(trees[0].clone(), 0);
    let mut next: Vec<Vec<u32>> = Vec::new();
    let mut raw: Vec<Vec<(Vec<Name>, Vec<Name>)>> = Vec::new();
    let mut pair_ids: FxHashMap<Name, usize> = FxHashMap::default();
    let mut pairs: Vec<Name> = Vec::new();
    let mut t = 0;
    while t < trees.len() {
        let mut row = Vec::with_capacity(letters.len());
        let mut info = Vec::with_capacity(letters.len());
        for &l in &letters {
            let step = trees[t].successor(|s| post(s, l, false), |s| post(s, l, true));
            let target = match index.get(&step.tree) {
                Some(&id) => id,
                None => {
                    if trees.len() >= max_states {
                        return Err(Error::Capacity { what: "Streett determinization", built: trees.len() });
                    }
                    let id = trees.len() as u32;
                    index.insert(step.tree.clone(), id);
                    trees.push(step.tree);
                    id
                }
            };
            for c in &step.collapsing {
                pair_ids.entry(c.clone()).or_insert_with(|| {
                    pairs.push(c.clone());
                    pairs.len() - 1
                });
            }
            row.push(target);
            info.push((step.collapsing, step.stable));
        }
        next.push(row);
        raw.push(info);
        t += 1;
    }
    let np = pairs.len();
    let to_bits = |names: &[Name]| {
        let mut b = FixedBitSet::with_capacity(np);
        for n in names {
            if let Some(&p) = pair_ids.get(n) {
                b.insert(p);
            }
        }
        b
    };
    let marks = raw
        .iter()
        .map(|row| row.iter().map(|(c, s)| Marks { collapse: to_bits(c), stable: to_bits(s) }).collect())
        .collect();
    Ok(StreettDsa { alphabet: a.alphabet.clone(), trees, initial: 0, letters, letter_index, next, marks, pairs })
}

/// Streett acceptance of a set of transitions visited infinitely often.
fn loop_accepts<'a>(np: usize, marks: impl Iterator<Item = &'a Marks>) -> bool {
    let mut collapse = FixedBitSet::with_capacity(np);
    let mut unstable = FixedBitSet::with_capacity(np);
    for m in marks {
        collapse.union_with(&m.collapse);
        let mut u = m.stable.clone();
        u.toggle_range(..);
        unstable.union_with(&u);
    }
    collapse.is_subset(&unstable)
}

/// Membership of `prefix · cycle^ω`: the cycle is unrolled until the state
/// at its start repeats, and the transitions of the repeating part decide.
pub fn lasso_member_dsa(d: &StreettDsa, w: &LassoWord) -> Result<bool> {
    let mut t = d.initial;
    for &l in &w.prefix {
        t = d.step(t, l)?.0;
    }
    let mut seen: FxHashMap<u32, usize> = FxHashMap::default();
    let mut trail: Vec<(u32, usize)> = Vec::new();
    loop {
        if let Some(&start) = seen.get(&t) {
            let np = d.pairs.len();
            let looped = trail[start..].iter().map(|&(s, k)| &d.marks[s as usize][k]);
            return Ok(loop_accepts(np, looped));
        }
        seen.insert(t, trail.len());
        for &l in &w.cycle {
            let k = d.index(l)?;
            trail.push((t, k));
            t = d.next[t as usize][k];
        }
    }
}

/// Maximal probability that the run of `d` on the letters emitted by `m`
/// satisfies the Streett condition. Accepting end components are found by
/// the usual recursion: inside an MEC, a pair that collapses but is never
/// unstable forbids its collapsing transitions, and the rest is
/// decomposed again.
pub fn streett_mdp_max_prob(m: &Mdp, d: &StreettDsa) -> Result<f64> {
    let p = streett_mdp_values(m, d)?;
    Ok(p.values[p.mdp.initial as usize])
}

/// Product of an MDP with a Streett automaton and the maximal satisfaction
/// probability of every product state.
#[derive(Clone, Debug)]
pub struct StreettProduct {
    pub mdp: Mdp,
    /// (MDP state, automaton state) per product state.
    pub origin: Vec<(SId, u32)>,
    pub values: Vec<f64>,
}

/// Per-state version of [`streett_mdp_max_prob`].
pub fn streett_mdp_values(m: &Mdp, d: &StreettDsa) -> Result<StreettProduct> {
    let mut p = Mdp::new(m.aps.clone());
    p.action_names = m.action_names.clone();
    let mut index: FxHashMap<(SId, u32), SId> = FxHashMap::default();
    let mut origin: Vec<(SId, u32)> = Vec::new();
    let mut marks: Vec<Vec<&Marks>> = Vec::new();
    let mut intern = |s: SId, t: u32, p: &mut Mdp, origin: &mut Vec<(SId, u32)>| -> SId {
        *index.entry((s, t)).or_insert_with(|| {
            origin.push((s, t));
            p.add_state(m.labels[s as usize])
        })
    };
    p.initial = intern(m.initial, d.initial, &mut p, &mut origin);
    let mut k = 0;
    while k < origin.len() {
        let (s, t) = origin[k];
        let mut row = Vec::new();
        for c in &m.choices[s as usize] {
            let (t2, mk) = d.step(t, m.letter(s, c))?;
            let outcomes = c
                .outcomes
                .iter()
                .map(|o| Outcome { target: intern(o.target, t2, &mut p, &mut origin), ..*o })
                .collect();
            p.add_choice(k as SId, Choice { outcomes, ..c.clone() });
            row.push(mk);
        }
        marks.push(row);
        k += 1;
    }
    let n = p.num_states();
    let np = d.pairs.len();
    let mut good = vec![false; n];
    let mut work: Vec<(Vec<bool>, Vec<Vec<bool>>)> =
        vec![(vec![true; n], p.choices.iter().map(|cs| vec![true; cs.len()]).collect())];
    while let Some((states, allowed)) = work.pop() {
        for mec in mecs_within(&p, &states, |s, c| allowed[s as usize][c]) {
            let inside = mec.choices.iter().map(|&(s, c)| marks[s as usize][c]);
            let mut collapse = FixedBitSet::with_capacity(np);
            let mut unstable = FixedBitSet::with_capacity(np);
            for mk in inside {
                collapse.union_with(&mk.collapse);
                let mut u = mk.stable.clone();
                u.toggle_range(..);
                unstable.union_with(&u);
            }
            let bad: FixedBitSet = collapse.difference(&unstable).collect();
            if bad.is_clear() {
                for &s in &mec.states {
                    good[s as usize] = true;
                }
                continue;
            }
            let mut sub_states = vec![false; n];
            for &s in &mec.states {
                sub_states[s as usize] = true;
            }
            let mut sub_allowed: Vec<Vec<bool>> = p.choices.iter().map(|cs| vec![false; cs.len()]).collect();
            for &(s, c) in &mec.choices {
                sub_allowed[s as usize][c] = marks[s as usize][c].collapse.is_disjoint(&bad);
            }
            work.push((sub_states, sub_allowed));
        }
    }
    let (values, _) = max_reach_prob(&p, &good);
    Ok(StreettProduct { mdp: p, origin, values })
}

/// Outcome of comparing the syntactic product value with the semantic one.
#[derive(Clone, Debug, PartialEq)]
pub struct GfmVerdict {
    pub agree: bool,
    /// Maximal probability of reaching an accepting MEC in `M × C`.
    pub product: f64,
    /// Maximal probability of the language of `A` in `M`.
    pub semantic: f64,
}

/// Compares the product value of the Büchi automaton `c` with the semantic
/// value of the universal co-Büchi automaton `a`, which must have the same
/// language. Different values show that `c` is not good for `m`.
pub fn gfm_value_test(c: &Automaton, a: &Automaton, m: &Mdp, max_states: usize) -> Result<GfmVerdict> {
    let prod = product_with_nba(m, c)?;
    let mut target = vec![false; prod.mdp.num_states()];
    for mec in accepting_mecs(&prod.mdp) {
        for s in mec.states {
            target[s as usize] = true;
        }
    }
    let product = max_reach_prob(&prod.mdp, &target).0[prod.mdp.initial as usize];
    let semantic = streett_mdp_max_prob(m, &determinize_uca(a, max_states)?)?;
    Ok(GfmVerdict { agree: (product - semantic).abs() <= 1e-7, product, semantic })
}

#[cfg(test)]
mod tests;
