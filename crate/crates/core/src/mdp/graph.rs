//! Graph-level MDP analysis: maximal end components, qualitative
//! reachability and the almost-sure Büchi region with a positional witness.

use crate::automata::scc::tarjan;

use super::{Mdp, SId};

/// A maximal end component: its states and, per state, the choices that
/// stay inside.
#[derive(Clone, Debug, PartialEq)]
pub struct Mec {
    pub states: Vec<SId>,
    pub choices: Vec<(SId, usize)>,
}

impl Mec {
    pub fn has_accepting(&self, m: &Mdp) -> bool {
        self.choices.iter().any(|&(s, c)| m.choices[s as usize][c].accepting)
    }
}

/// End-component decomposition of the sub-MDP given by the allowed states
/// and choices: repeatedly drops choices that leave their SCC and states
/// left without choices.
pub fn mecs_within(m: &Mdp, allowed_state: &[bool], allowed_choice: impl Fn(SId, usize) -> bool) -> Vec<Mec> {
    let n = m.num_states();
    let mut alive = allowed_state.to_vec();
    let mut ok: Vec<Vec<bool>> = (0..n)
        .map(|s| (0..m.choices[s].len()).map(|c| alive[s] && allowed_choice(s as SId, c)).collect())
        .collect();
    let sccs = loop {
        let sccs = tarjan(n, (0..n).filter(|&s| alive[s]), |s, out| {
            for (c, choice) in m.choices[s].iter().enumerate() {
                if ok[s][c] {
                    out.extend(choice.outcomes.iter().map(|o| o.target as usize).filter(|&t| alive[t]));
                }
            }
        });
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (c, choice) in m.choices[s].iter().enumerate() {
                if ok[s][c]
                    && choice.outcomes.iter().any(|o| {
                        let t = o.target as usize;
                        !alive[t] || sccs.comp[t] != sccs.comp[s]
                    })
                {
                    ok[s][c] = false;
                    changed = true;
                }
            }
            if !ok[s].iter().any(|&b| b) {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            break sccs;
        }
    };
    let mut by_comp: rustc_hash::FxHashMap<u32, Mec> = Default::default();
    for s in (0..n).filter(|&s| alive[s]) {
        let mec = by_comp.entry(sccs.comp[s]).or_insert_with(|| Mec { states: Vec::new(), choices: Vec::new() });
        mec.states.push(s as SId);
        mec.choices.extend((0..m.choices[s].len()).filter(|&c| ok[s][c]).map(|c| (s as SId, c)));
    }
    let mut out: Vec<Mec> = by_comp.into_values().collect();
    out.sort_by_key(|mec| mec.states[0]);
    out
}

pub fn mec_decomposition(m: &Mdp) -> Vec<Mec> {
    mecs_within(m, &vec![true; m.num_states()], |_, _| true)
}

/// MECs containing an accepting choice.
pub fn accepting_mecs(m: &Mdp) -> Vec<Mec> {
    mec_decomposition(m).into_iter().filter(|mec| mec.has_accepting(m)).collect()
}

fn predecessors(m: &Mdp) -> Vec<Vec<(SId, usize)>> {
    let mut preds = vec![Vec::new(); m.num_states()];
    for (s, cs) in m.choices.iter().enumerate() {
        for (c, choice) in cs.iter().enumerate() {
            for o in &choice.outcomes {
                let list: &mut Vec<(SId, usize)> = &mut preds[o.target as usize];
                if list.last() != Some(&(s as SId, c)) {
                    list.push((s as SId, c));
                }
            }
        }
    }
    preds
}

/// States that can reach `target` with probability one, together with an
/// attractor choice for every non-target state of the region: the choice
/// keeps the play inside the region and reaches a state closer to the
/// target with positive probability.
pub fn prob1_region(m: &Mdp, target: &[bool]) -> (Vec<bool>, Vec<Option<usize>>) {
    let n = m.num_states();
    let preds = predecessors(m);
    let mut region = vec![true; n];
    loop {
        let stays: Vec<Vec<bool>> = m
            .choices
            .iter()
            .map(|cs| cs.iter().map(|c| c.outcomes.iter().all(|o| region[o.target as usize])).collect())
            .collect();
        let mut reach = vec![false; n];
        let mut via = vec![None; n];
        let mut stack: Vec<SId> = Vec::new();
        for s in 0..n {
            if target[s] && region[s] {
                reach[s] = true;
                stack.push(s as SId);
            }
        }
        let mut head = 0;
        while head < stack.len() {
            let t = stack[head];
            head += 1;
            for &(s, c) in &preds[t as usize] {
                let su = s as usize;
                if !reach[su] && region[su] && stays[su][c] {
                    reach[su] = true;
                    via[su] = Some(c);
                    stack.push(s);
                }
            }
        }
        if reach == region {
            return (region, via);
        }
        region = reach;
    }
}

/// Maximal probability of reaching `target`, and a positional strategy
/// attaining it.
pub fn max_reach_prob(m: &Mdp, target: &[bool]) -> (Vec<f64>, Vec<usize>) {
    let n = m.num_states();
    let preds = predecessors(m);
    let mut can = target.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&s| target[s]).collect();
    while let Some(t) = stack.pop() {
        for &(s, _) in &preds[t] {
            if !can[s as usize] {
                can[s as usize] = true;
                stack.push(s as usize);
            }
        }
    }
    let (sure, via) = prob1_region(m, target);
    let mut v: Vec<f64> = (0..n).map(|s| if sure[s] { 1.0 } else { 0.0 }).collect();
    let open: Vec<usize> = (0..n).filter(|&s| can[s] && !sure[s]).collect();
    for _ in 0..10_000_000u64 {
        let mut delta = 0.0f64;
        for &s in &open {
            let best = m.choices[s]
                .iter()
                .map(|c| c.outcomes.iter().map(|o| o.prob * v[o.target as usize]).sum::<f64>())
                .fold(0.0, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < 1e-14 {
            break;
        }
    }
    let mut strat = vec![0usize; n];
    let mut done = vec![false; n];
    let mut queue: Vec<usize> = Vec::new();
    for s in 0..n {
        if sure[s] || !can[s] {
            strat[s] = via[s].unwrap_or(0);
            done[s] = true;
            if sure[s] {
                queue.push(s);
            }
        }
    }
    // Attractor over value-optimal choices towards the sure region.
    let optimal = |s: usize, c: usize| {
        let q: f64 = m.choices[s][c].outcomes.iter().map(|o| o.prob * v[o.target as usize]).sum();
        q >= v[s] - 1e-9
    };
    let mut head = 0;
    while head < queue.len() {
        let t = queue[head];
        head += 1;
        for &(s, c) in &preds[t] {
            let su = s as usize;
            if !done[su] && optimal(su, c) {
                done[su] = true;
                strat[su] = c;
                queue.push(su);
            }
        }
    }
    for &s in &open {
        if !done[s] {
            strat[s] = (0..m.choices[s].len()).find(|&c| optimal(s, c)).unwrap_or(0);
        }
    }
    (v, strat)
}

/// The almost-sure Büchi region and a positional strategy winning from
/// every state in it.
#[derive(Clone, Debug)]
pub struct AlmostSure {
    pub region: Vec<bool>,
    pub strategy: Vec<usize>,
    /// States of accepting MECs.
    pub accepting: Vec<bool>,
}

/// States from which some strategy visits accepting choices infinitely
/// often with probability one. Inside an accepting MEC the strategy walks
/// an attractor towards one accepting choice; elsewhere it follows the
/// attractor towards the accepting MECs.
pub fn almost_sure_buchi_region(m: &Mdp) -> AlmostSure {
    let n = m.num_states();
    let mut accepting = vec![false; n];
    let mut strategy = vec![0usize; n];
    let mut fixed = vec![false; n];
    for mec in accepting_mecs(m) {
        let (hub, hub_choice) =
            *mec.choices.iter().find(|&&(s, c)| m.choices[s as usize][c].accepting).expect("accepting MEC");
        let mut inside = vec![Vec::new(); n];
        for &(s, c) in &mec.choices {
            inside[s as usize].push(c);
            accepting[s as usize] = true;
        }
        strategy[hub as usize] = hub_choice;
        fixed[hub as usize] = true;
        let mut progress = true;
        while progress {
            progress = false;
            for &s in &mec.states {
                let su = s as usize;
                if fixed[su] {
                    continue;
                }
                let step = inside[su]
                    .iter()
                    .copied()
                    .find(|&c| m.choices[su][c].outcomes.iter().any(|o| fixed[o.target as usize]));
                if let Some(c) = step {
                    strategy[su] = c;
                    fixed[su] = true;
                    progress = true;
                }
            }
        }
    }
    let (region, via) = prob1_region(m, &accepting);
    for s in 0..n {
        if region[s] && !accepting[s] {
            strategy[s] = via[s].expect("attractor choice");
        }
    }
    AlmostSure { region, strategy, accepting }
}
