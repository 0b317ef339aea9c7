use rand::Rng;

use super::alphabet::Alphabet;
use super::automaton::{Automaton, Kind, StateId};

/// Random automaton with `n` states: each (state, letter, target) triple is
/// present with probability `density` and marked with probability `marked`.
/// State 0 is initial unless `kind` is a deterministic kind, in which case
/// at most one target per (state, letter) is kept.
pub fn random_automaton<R: Rng>(rng: &mut R, kind: Kind, alphabet: &Alphabet, n: usize, density: f64, marked: f64) -> Automaton {
    let mut a = Automaton::new(kind, alphabet.clone(), n);
    let letters: Vec<_> = alphabet.letters().collect();
    for q in 0..n as StateId {
        for &l in &letters {
            if kind.is_deterministic() {
                if rng.gen_bool(density) {
                    let t = rng.gen_range(0..n) as StateId;
                    a.add_edge(q, l, t, rng.gen_bool(marked));
                }
            } else {
                for t in 0..n as StateId {
                    if rng.gen_bool(density) {
                        a.add_edge(q, l, t, rng.gen_bool(marked));
                    }
                }
            }
        }
    }
    if kind == Kind::Dfa {
        a.finals = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    }
    if n > 0 {
        a.initial = vec![0];
    }
    a
}
