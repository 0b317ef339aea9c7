use rustc_hash::FxHashMap;

use super::alphabet::Alphabet;
use super::automaton::{Automaton, Edge, Kind, StateId};
use super::scc::{backward_closure, tarjan, UNREACHED};
use crate::error::{Error, Result};

/// States from which an accepting lasso exists (marked transitions read as
/// accepting).
pub fn nonempty_states(a: &Automaton) -> Vec<bool> {
    let n = a.num_states();
    let sccs = tarjan(n, 0..n, |v, out| out.extend(a.edges(v as StateId).iter().map(|e| e.target as usize)));
    let mut good = vec![false; sccs.count];
    for (c, members) in sccs.members().into_iter().enumerate() {
        good[c] = members.iter().any(|&v| {
            a.edges(v as StateId).iter().any(|e| {
                let cw = sccs.comp[e.target as usize] as usize;
                (cw == c && e.marked) || (cw < c && good[cw])
            })
        });
    }
    (0..n).map(|q| good[sccs.comp[q] as usize]).collect()
}

/// True iff some initial state has a nonempty language.
pub fn is_nonempty(a: &Automaton) -> bool {
    let live = nonempty_states(a);
    a.initial.iter().any(|&q| live[q as usize])
}

/// Büchi product with `L(result) = L(a) ∩ L(b)`; only reachable pairs are
/// built. Track 0 waits for an accepting transition of `a`, track 1 for one
/// of `b`; completing track 1 is the accepting event.
pub fn intersect_nba(a: &Automaton, b: &Automaton) -> Result<Automaton> {
    if !a.alphabet.same_letters(&b.alphabet) {
        return Err(Error::AlphabetMismatch(format!("{:?} vs {:?}", a.alphabet.aps(), b.alphabet.aps())));
    }
    let mut index: FxHashMap<(StateId, StateId, u8), StateId> = FxHashMap::default();
    let mut queue: Vec<(StateId, StateId, u8)> = Vec::new();
    let mut out = Automaton::new(Kind::Nba, a.alphabet.clone(), 0);
    let mut intern = |key: (StateId, StateId, u8), out: &mut Automaton, queue: &mut Vec<_>| -> StateId {
        *index.entry(key).or_insert_with(|| {
            queue.push(key);
            out.add_state()
        })
    };
    for &p in &a.initial {
        for &q in &b.initial {
            let id = intern((p, q, 0), &mut out, &mut queue);
            out.initial.push(id);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let (p, q, t) = queue[head];
        let src = head as StateId;
        head += 1;
        let mut list = Vec::new();
        for ea in a.edges(p) {
            for eb in b.successors(q, ea.letter) {
                let (nt, marked) = match t {
                    0 if ea.marked => (1, false),
                    0 => (0, false),
                    _ if eb.marked => (0, true),
                    _ => (1, false),
                };
                let tgt = intern((ea.target, eb.target, nt), &mut out, &mut queue);
                list.push(Edge { letter: ea.letter, target: tgt, marked });
            }
        }
        out.set_edges(src, list);
    }
    Ok(out)
}

/// Partition witnessing strong limit determinism.
#[derive(Clone, Debug)]
pub struct SldReport {
    pub ok: bool,
    /// `true` for states in the initial (first) part.
    pub first_part: Vec<bool>,
}

/// Checks strong limit determinism. The second part is chosen maximal: all
/// states from which no nondeterministic choice is reachable. The check then
/// requires every accepting transition to lead into the second part and the
/// first part to be deterministic within itself.
pub fn is_strongly_limit_deterministic(a: &Automaton) -> SldReport {
    let n = a.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut branching = vec![false; n];
    for q in a.states() {
        let edges = a.edges(q);
        branching[q as usize] = edges.windows(2).any(|w| w[0].letter == w[1].letter);
        for e in edges {
            preds[e.target as usize].push(q as usize);
        }
    }
    let first = backward_closure(&branching, &preds);
    let mut ok = a.initial.iter().filter(|&&q| first[q as usize]).count() <= 1;
    for q in a.states() {
        let edges = a.edges(q);
        if edges.iter().any(|e| e.marked && first[e.target as usize]) {
            ok = false;
        }
        if first[q as usize] {
            let inner: Vec<&Edge> = edges.iter().filter(|e| first[e.target as usize]).collect();
            if inner.windows(2).any(|w| w[0].letter == w[1].letter) {
                ok = false;
            }
        }
    }
    SldReport { ok, first_part: first }
}

/// One-state automaton looping on every letter with the given mark.
pub fn universal(kind: Kind, alphabet: Alphabet, marked: bool) -> Automaton {
    let mut a = Automaton::new(kind, alphabet, 1);
    let list = a.alphabet.letters().map(|l| Edge { letter: l, target: 0, marked }).collect();
    a.set_edges(0, list);
    a.initial = vec![0];
    a
}

/// One-state automaton without transitions.
pub fn empty(kind: Kind, alphabet: Alphabet) -> Automaton {
    let mut a = Automaton::new(kind, alphabet, 1);
    a.initial = vec![0];
    a
}

/// Restricts to `nonempty_states`; keeps the canonical one-state empty
/// automaton when the initial state has an empty language.
pub fn trim_empty(a: &Automaton) -> Automaton {
    let live = nonempty_states(a);
    if !a.initial.iter().any(|&q| live[q as usize]) {
        return empty(a.kind, a.alphabet.clone());
    }
    a.restrict(&live).0
}

/// Components of states: `comp[q]` plus whether each component contains a
/// marked internal edge. Exposed for reductions that need the SCC view.
pub fn marked_sccs(a: &Automaton) -> (Vec<u32>, Vec<bool>) {
    let n = a.num_states();
    let sccs = tarjan(n, 0..n, |v, out| out.extend(a.edges(v as StateId).iter().map(|e| e.target as usize)));
    let mut acc = vec![false; sccs.count];
    for q in a.states() {
        let c = sccs.comp[q as usize];
        debug_assert_ne!(c, UNREACHED);
        for e in a.edges(q) {
            if e.marked && sccs.comp[e.target as usize] == c {
                acc[c as usize] = true;
            }
        }
    }
    (sccs.comp, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::lasso::{canonical_lassos, lasso_member_nba};

    fn inf(ap_bit: u32) -> Automaton {
        // infinitely many letters with bit `ap_bit` set, over 2 APs
        let mut a = Automaton::new(Kind::Nba, Alphabet::new(["a", "b"]).unwrap(), 1);
        for l in 0..4 {
            a.add_edge(0, l, 0, l >> ap_bit & 1 == 1);
        }
        a.initial = vec![0];
        a
    }

    #[test]
    fn intersection_of_two_recurrences() {
        let p = intersect_nba(&inf(0), &inf(1)).unwrap();
        let ab = LassoWord::new(vec![], vec![1, 2]);
        let aa = LassoWord::new(vec![], vec![1]);
        assert!(lasso_member_nba(&p, &ab));
        assert!(!lasso_member_nba(&p, &aa));
        for w in canonical_lassos(&[0, 1, 2, 3], 4) {
            assert_eq!(lasso_member_nba(&p, &w), lasso_member_nba(&inf(0), &w) && lasso_member_nba(&inf(1), &w));
        }
    }

    use crate::automata::lasso::LassoWord;

    #[test]
    fn nonempty_with_accepting_loop() {
        let mut a = Automaton::new(Kind::Nba, Alphabet::new(["a"]).unwrap(), 3);
        a.add_edge(0, 0, 1, false);
        a.add_edge(1, 0, 1, true);
        a.add_edge(2, 0, 2, false);
        assert_eq!(nonempty_states(&a), vec![true, true, false]);
        assert!(nonempty_states(&empty(Kind::Nba, Alphabet::new(["a"]).unwrap())).iter().all(|&x| !x));
    }

    #[test]
    fn nondeterministic_accepting_choice_is_not_sld() {
        let mut a = Automaton::new(Kind::Nba, Alphabet::new(["a"]).unwrap(), 3);
        a.initial = vec![0];
        a.add_edge(0, 0, 1, true);
        a.add_edge(0, 0, 2, true);
        a.add_edge(1, 0, 1, true);
        a.add_edge(2, 0, 2, true);
        // a first-part state may branch into the second part
        assert!(is_strongly_limit_deterministic(&a).ok);
        a.add_edge(1, 0, 2, true);
        assert!(!is_strongly_limit_deterministic(&a).ok);
    }

    #[test]
    fn alphabet_mismatch_is_reported() {
        let a = universal(Kind::Nba, Alphabet::new(["a"]).unwrap(), true);
        let b = universal(Kind::Nba, Alphabet::new(["b"]).unwrap(), true);
        assert!(matches!(intersect_nba(&a, &b), Err(Error::AlphabetMismatch(_))));
    }
}
