use rustc_hash::FxHashMap;

use crate::automata::{Edge, Letter, StateId};
use crate::complement::{GfmNba, Part};

/// Coarsest strong bisimulation refining `initial` (block ids per state),
/// by rounds of signature refinement. Returns block ids numbered by the
/// lowest member.
pub fn refine(g: &GfmNba, initial: Vec<u32>) -> Vec<u32> {
    let a = &g.nba;
    let mut block = normalize(&initial);
    let mut count = block.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
    let mut sig: Vec<(Letter, bool, u32)> = Vec::new();
    loop {
        let mut index: FxHashMap<(u32, Vec<(Letter, bool, u32)>), u32> = FxHashMap::default();
        let mut next = Vec::with_capacity(block.len());
        for q in a.states() {
            sig.clear();
            sig.extend(a.edges(q).iter().map(|e| (e.letter, e.marked, block[e.target as usize])));
            sig.sort_unstable();
            sig.dedup();
            let fresh = index.len() as u32;
            let id = *index.entry((block[q as usize], sig.clone())).or_insert(fresh);
            next.push(id);
        }
        let new_count = index.len();
        block = normalize(&next);
        if new_count == count {
            return block;
        }
        count = new_count;
    }
}

/// Renumbers block ids in order of their lowest member.
fn normalize(block: &[u32]) -> Vec<u32> {
    let mut map: FxHashMap<u32, u32> = FxHashMap::default();
    block
        .iter()
        .map(|&b| {
            let fresh = map.len() as u32;
            *map.entry(b).or_insert(fresh)
        })
        .collect()
}

/// Quotient by a bisimulation given as normalized block ids.
pub fn quotient(g: &GfmNba, block: &[u32]) -> GfmNba {
    let a = &g.nba;
    let count = block.iter().map(|&b| b as usize + 1).max().unwrap_or(0);
    let mut rep = vec![u32::MAX; count];
    for q in a.states() {
        let b = block[q as usize] as usize;
        if rep[b] == u32::MAX {
            rep[b] = q;
        }
    }
    let mut out = crate::automata::Automaton::new(a.kind, a.alphabet.clone(), count);
    let mut part = Vec::with_capacity(count);
    for (b, &q) in rep.iter().enumerate() {
        let list = a.edges(q).iter().map(|e| Edge { target: block[e.target as usize], ..*e }).collect();
        out.set_edges(b as StateId, list);
        part.push(g.part[q as usize]);
    }
    let mut initial: Vec<StateId> = a.initial.iter().map(|&q| block[q as usize]).collect();
    initial.sort_unstable();
    initial.dedup();
    out.initial = initial;
    out.designated = a.designated.map(|q| block[q as usize]);
    GfmNba { nba: out, part, stats: g.stats.clone() }
}

/// Initial blocks: one per first-phase state when `split_first`, otherwise
/// one for all of them; one for the empty sink; one for the ranking states.
pub fn initial_blocks(g: &GfmNba, split_first: bool) -> Vec<u32> {
    g.part
        .iter()
        .enumerate()
        .map(|(q, p)| match p {
            Part::Subset if split_first => 3 + q as u32,
            Part::Subset => 0,
            Part::EmptySink => 1,
            Part::Ranking => 2,
        })
        .collect()
}
