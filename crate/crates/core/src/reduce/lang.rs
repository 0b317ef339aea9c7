use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::automata::scc::tarjan;
use crate::automata::{Automaton, LassoWord, Letter, StateId};

const DEAD: StateId = StateId::MAX;

/// Deterministic successor of `q` on `l`, or [`DEAD`].
fn step(a: &Automaton, q: StateId, l: Letter) -> (StateId, bool) {
    if q == DEAD {
        return (DEAD, false);
    }
    match a.successors(q, l).first() {
        Some(e) => (e.target, e.marked),
        None => (DEAD, false),
    }
}

/// Büchi acceptance of a lasso from `q` in the deterministic part.
pub fn accepts_from(a: &Automaton, q: StateId, w: &LassoWord) -> bool {
    let mut q = q;
    for &l in &w.prefix {
        q = step(a, q, l).0;
    }
    let k = w.cycle.len();
    let mut seen: FxHashMap<StateId, usize> = FxHashMap::default();
    let mut marks: Vec<bool> = Vec::new();
    let mut rounds = 0usize;
    loop {
        if q == DEAD {
            return false;
        }
        if let Some(&r) = seen.get(&q) {
            return marks[r * k..].iter().any(|&m| m);
        }
        seen.insert(q, rounds);
        for &l in &w.cycle {
            let (t, m) = step(a, q, l);
            marks.push(m);
            q = t;
        }
        rounds += 1;
    }
}

/// Membership bits of `states` on a fixed sample of random lassos; states
/// with different fingerprints have different languages.
pub fn fingerprints(a: &Automaton, states: &[StateId], letters: &[Letter], samples: usize) -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let words: Vec<LassoWord> = (0..samples).map(|_| LassoWord::random(&mut rng, letters, 4, 4)).collect();
    states
        .iter()
        .map(|&q| {
            let mut fp = vec![0u64; samples.div_ceil(64)];
            for (i, w) in words.iter().enumerate() {
                if accepts_from(a, q, w) {
                    fp[i / 64] |= 1 << (i % 64);
                }
            }
            fp
        })
        .collect()
}

/// Exact language equality of two states of a deterministic Büchi part
/// (runs may die). Explores the synchronous product from `(p, q)` and looks
/// for a reachable cycle accepting on one side but not on the other.
pub fn equivalent(a: &Automaton, p: StateId, q: StateId, letters: &[Letter]) -> bool {
    if p == q {
        return true;
    }
    let mut index: FxHashMap<(StateId, StateId), usize> = FxHashMap::default();
    let mut nodes: Vec<(StateId, StateId)> = vec![(p, q)];
    index.insert((p, q), 0);
    // (target, marked on left, marked on right)
    let mut succ: Vec<Vec<(usize, bool, bool)>> = Vec::new();
    let mut head = 0;
    while head < nodes.len() {
        let (x, y) = nodes[head];
        head += 1;
        let mut list = Vec::new();
        for &l in letters {
            let (x2, mx) = step(a, x, l);
            let (y2, my) = step(a, y, l);
            if x2 == DEAD && y2 == DEAD {
                continue;
            }
            let id = *index.entry((x2, y2)).or_insert_with(|| {
                nodes.push((x2, y2));
                nodes.len() - 1
            });
            list.push((id, mx, my));
        }
        succ.push(list);
    }
    !distinguishing_cycle(&succ, true) && !distinguishing_cycle(&succ, false)
}

/// A cycle with a mark on the chosen side and none on the other one.
fn distinguishing_cycle(succ: &[Vec<(usize, bool, bool)>], left: bool) -> bool {
    let n = succ.len();
    let other = |m: &(usize, bool, bool)| if left { m.2 } else { m.1 };
    let own = |m: &(usize, bool, bool)| if left { m.1 } else { m.2 };
    let sccs = tarjan(n, 0..n, |v, out| out.extend(succ[v].iter().filter(|m| !other(m)).map(|m| m.0)));
    (0..n).any(|v| succ[v].iter().any(|m| !other(m) && own(m) && sccs.comp[m.0] == sccs.comp[v]))
}
