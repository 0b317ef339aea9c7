//! ASCII rendering of biolab strategies: one grid per memory mode, where a
//! memory mode is the lookback tracker together with the automaton state.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::mdp::{SId, Strategy};
use crate::odp::OdpSolution;

use super::biolab::{Biolab, Dir, Position};

fn arrow(name: &str) -> char {
    Dir::ALL.iter().find(|d| name.starts_with(d.name())).map_or('?', |d| d.arrow())
}

/// Grids of the moves `strategy` makes in the product states it reaches
/// from the initial state (the first phase of a switching strategy). With
/// no strategy only the bare map is drawn.
pub fn render_policy(bio: &Biolab, sol: &OdpSolution, strategy: Option<&Strategy>) -> String {
    let map = &bio.map;
    let Some(strategy) = strategy else {
        return map.draw(|x, y| map.symbol(x, y));
    };
    let m = &sol.product.mdp;
    let mut seen = vec![false; m.num_states()];
    let mut stack = vec![m.initial];
    seen[m.initial as usize] = true;
    let mut order: Vec<SId> = Vec::new();
    while let Some(p) = stack.pop() {
        order.push(p);
        let c = &m.choices[p as usize][strategy.choice_at(p, 0)];
        for o in &c.outcomes {
            if !seen[o.target as usize] {
                seen[o.target as usize] = true;
                stack.push(o.target);
            }
        }
    }
    order.sort_unstable();
    // Memory mode -> (cell -> arrow).
    let mut modes: BTreeMap<(Vec<u64>, u32), BTreeMap<(usize, usize), char>> = BTreeMap::new();
    for p in order {
        let (s, u, q) = sol.describe(p);
        let Position::At { x, y, .. } = bio.position(s) else { continue };
        let tracker = sol.unguarded.trackers[u as usize].clone();
        let name = &m.action_names[m.choices[p as usize][strategy.choice_at(p, 0)].action as usize];
        modes.entry((tracker, q)).or_default().insert((x, y), arrow(name));
    }
    let mut out = String::new();
    for (k, ((tracker, q), cells)) in modes.iter().enumerate() {
        let trackers: Vec<String> = tracker.iter().map(|t| format!("{t:b}")).collect();
        let _ = writeln!(out, "mode {k}: automaton state {q}, tracker [{}]", trackers.join(" "));
        out.push_str(&map.draw(|x, y| cells.get(&(x, y)).copied().unwrap_or_else(|| map.symbol(x, y))));
    }
    out
}
