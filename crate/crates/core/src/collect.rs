//! The collection automaton: a universal co-Büchi automaton over letters
//! paired with promises that accepts exactly the words satisfying every
//! promise they make.
//!
//! Given a UCA schema with states `Q`, the collection automaton has states
//! `Q ∪ {q0'}` with `q0'` fresh and initial. Reading `(σ, q)` in `q0'`
//! loops back to `q0'` and additionally starts a run of the schema in `q`
//! (consuming `σ`). Promise components are ignored by the states in `Q`.
//! A promise made with the letter at position `i` therefore constrains the
//! suffix starting at position `i`.

use serde::{Deserialize, Serialize};

use crate::automata::{Alphabet, Automaton, Edge, Kind, Promise, PromiseMode, StateId};
use crate::error::{Error, Result};

/// Marking of the transitions leaving `q0'` towards schema states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Finality {
    /// Transitions from `q0'` into the schema are rejecting.
    #[default]
    Default,
    /// All transitions from `q0'` are non-rejecting (for safety schemas).
    SafetyAdjusted,
}

/// Builds the collection UCA of `schema`. The result has `initial = [q0']`
/// and `designated = Some(q0')` with `q0' = |Q|`.
pub fn build_collection(schema: &Automaton, mode: PromiseMode, finality: Finality) -> Result<Automaton> {
    if schema.kind != Kind::Uca {
        return Err(Error::Shape("universal co-Büchi schema"));
    }
    let n = schema.num_states();
    if n == 0 {
        return Err(Error::InvalidModel("empty schema".into()));
    }
    if schema.alphabet.promise_layout().is_some() {
        return Err(Error::AlphabetMismatch("schema alphabet already carries promises".into()));
    }
    let alphabet = Alphabet::with_promises(&schema.alphabet, mode, n)?;
    let q0 = n as StateId;
    let mut out = Automaton::new(Kind::Uca, alphabet.clone(), n + 1);
    let mut lists: Vec<Vec<Edge>> = vec![Vec::new(); n + 1];
    let from_q0_marked = finality == Finality::Default;
    for letter in alphabet.letters() {
        let base = alphabet.base_letter(letter);
        for q in schema.states() {
            for e in schema.successors(q, base) {
                lists[q as usize].push(Edge { letter, target: e.target, marked: e.marked });
            }
        }
        lists[n].push(Edge { letter, target: q0, marked: false });
        let promised = match alphabet.promise_of(letter) {
            Some(Promise::Top) | None => 0u64,
            Some(Promise::State(p)) => 1u64 << p,
            Some(Promise::Set(m)) => m,
        };
        for p in (0..n).filter(|&p| promised >> p & 1 == 1) {
            for e in schema.successors(p as StateId, base) {
                lists[n].push(Edge { letter, target: e.target, marked: from_q0_marked });
            }
        }
    }
    for (q, list) in lists.into_iter().enumerate() {
        out.set_edges(q as StateId, list);
    }
    out.initial = vec![q0];
    out.designated = Some(q0);
    Ok(out)
}
