//! Ultimately periodic words and membership tests on them.

use fixedbitset::FixedBitSet;
use rand::Rng;
use rustc_hash::FxHashMap;

use super::alphabet::Letter;
use super::automaton::Automaton;
use super::scc::{tarjan, UNREACHED};

/// The word `prefix · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LassoWord {
    pub prefix: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

impl LassoWord {
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Self {
        assert!(!cycle.is_empty(), "lasso cycle must be nonempty");
        LassoWord { prefix, cycle }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letter at position `i` of the infinite word.
    pub fn at(&self, i: usize) -> Letter {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// The suffix starting at position `i`, again as a lasso.
    pub fn suffix(&self, i: usize) -> LassoWord {
        if i < self.prefix.len() {
            LassoWord::new(self.prefix[i..].to_vec(), self.cycle.clone())
        } else {
            let k = (i - self.prefix.len()) % self.cycle.len();
            let mut cycle = self.cycle[k..].to_vec();
            cycle.extend_from_slice(&self.cycle[..k]);
            LassoWord::new(Vec::new(), cycle)
        }
    }

    /// Applies `f` letterwise.
    pub fn map(&self, f: impl Fn(Letter) -> Letter) -> LassoWord {
        LassoWord::new(self.prefix.iter().map(|&l| f(l)).collect(), self.cycle.iter().map(|&l| f(l)).collect())
    }

    /// Random lasso with `|prefix| <= max_prefix` and `1 <= |cycle| <= max_cycle`.
    pub fn random<R: Rng>(rng: &mut R, letters: &[Letter], max_prefix: usize, max_cycle: usize) -> LassoWord {
        let u = rng.gen_range(0..=max_prefix);
        let v = rng.gen_range(1..=max_cycle.max(1));
        let pick = |rng: &mut R| letters[rng.gen_range(0..letters.len())];
        let prefix = (0..u).map(|_| pick(rng)).collect();
        let cycle = (0..v).map(|_| pick(rng)).collect();
        LassoWord::new(prefix, cycle)
    }
}

/// All lassos with `|u| + |v| <= max_len` up to word equality: cycles are
/// primitive and a nonempty prefix never ends with the last cycle letter
/// (otherwise the lasso can be rotated into a shorter one). Every lasso of
/// length at most `max_len` denotes the same word as one of these.
pub fn canonical_lassos(letters: &[Letter], max_len: usize) -> Vec<LassoWord> {
    let mut out = Vec::new();
    for vlen in 1..=max_len {
        for v in words(letters, vlen) {
            if !is_primitive(&v) {
                continue;
            }
            for ulen in 0..=(max_len - vlen) {
                for u in words(letters, ulen) {
                    if u.last().is_some_and(|&l| l == *v.last().unwrap()) {
                        continue;
                    }
                    out.push(LassoWord::new(u, v.clone()));
                }
            }
        }
    }
    out
}

fn words(letters: &[Letter], len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                letters.iter().map(move |&l| {
                    let mut w2 = w.clone();
                    w2.push(l);
                    w2
                })
            })
            .collect();
    }
    out
}

fn is_primitive(v: &[Letter]) -> bool {
    let n = v.len();
    (1..n).filter(|d| n % d == 0).all(|d| (0..n).any(|i| v[i] != v[i % d]))
}

/// Membership oracle with caches keyed by prefix and cycle, so that many
/// lassos can be tested against one automaton cheaply.
///
/// A word `u·v^ω` has an accepting run iff some state reached after `u` lies
/// in the set of states with an accepting run on `v^ω`; the latter set is
/// computed once per cycle on the product of the automaton with the cycle
/// positions.
pub struct LassoChecker<'a> {
    aut: &'a Automaton,
    good: FxHashMap<Vec<Letter>, FixedBitSet>,
    post: FxHashMap<Vec<Letter>, FixedBitSet>,
}

impl<'a> LassoChecker<'a> {
    pub fn new(aut: &'a Automaton) -> Self {
        LassoChecker { aut, good: FxHashMap::default(), post: FxHashMap::default() }
    }

    /// Some run visits a marked transition infinitely often.
    pub fn member_nba(&mut self, w: &LassoWord) -> bool {
        if !self.post.contains_key(&w.prefix) {
            let set = self.post_set(&w.prefix);
            self.post.insert(w.prefix.clone(), set);
        }
        if !self.good.contains_key(&w.cycle) {
            let set = good_states(self.aut, &w.cycle);
            self.good.insert(w.cycle.clone(), set);
        }
        let post = &self.post[&w.prefix];
        let good = &self.good[&w.cycle];
        post.intersection(good).next().is_some()
    }

    /// No run visits a marked (rejecting) transition infinitely often.
    pub fn member_uca(&mut self, w: &LassoWord) -> bool {
        !self.member_nba(w)
    }

    fn post_set(&self, prefix: &[Letter]) -> FixedBitSet {
        let n = self.aut.num_states();
        let mut current = FixedBitSet::with_capacity(n);
        for &q in &self.aut.initial {
            current.insert(q as usize);
        }
        for &l in prefix {
            let mut next = FixedBitSet::with_capacity(n);
            for q in current.ones() {
                for e in self.aut.successors(q as u32, l) {
                    next.insert(e.target as usize);
                }
            }
            current = next;
        }
        current
    }
}

/// States from which some run on `cycle^ω` visits a marked transition
/// infinitely often.
pub fn good_states(aut: &Automaton, cycle: &[Letter]) -> FixedBitSet {
    let n = aut.num_states();
    let k = cycle.len();
    let node = |q: usize, j: usize| q * k + j;
    let sccs = tarjan(n * k, (0..n).map(|q| node(q, 0)), |v, out| {
        let (q, j) = (v / k, v % k);
        for e in aut.successors(q as u32, cycle[j]) {
            out.push(node(e.target as usize, (j + 1) % k));
        }
    });
    let mut good_comp = vec![false; sccs.count];
    let mut members = vec![Vec::new(); sccs.count];
    for v in 0..n * k {
        let c = sccs.comp[v];
        if c != UNREACHED {
            members[c as usize].push(v);
        }
    }
    for c in 0..sccs.count {
        let mut good = false;
        'scan: for &v in &members[c] {
            let (q, j) = (v / k, v % k);
            for e in aut.successors(q as u32, cycle[j]) {
                let w = node(e.target as usize, (j + 1) % k);
                let cw = sccs.comp[w] as usize;
                if (cw == c && e.marked) || (cw < c && good_comp[cw]) {
                    good = true;
                    break 'scan;
                }
            }
        }
        good_comp[c] = good;
    }
    let mut out = FixedBitSet::with_capacity(n);
    for q in 0..n {
        let c = sccs.comp[node(q, 0)];
        if c != UNREACHED && good_comp[c as usize] {
            out.insert(q);
        }
    }
    out
}

/// Membership of `w` in an automaton read as a Büchi automaton.
pub fn lasso_member_nba(aut: &Automaton, w: &LassoWord) -> bool {
    LassoChecker::new(aut).member_nba(w)
}

/// Membership of `w` in an automaton read as a universal co-Büchi automaton.
pub fn lasso_member_uca(aut: &Automaton, w: &LassoWord) -> bool {
    !lasso_member_nba(aut, w)
}
