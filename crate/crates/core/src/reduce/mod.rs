//! State-space reductions of complement automata that preserve both the
//! language and the good-for-MDPs property, and the pipeline chaining them:
//! complement, prune empty states, lump the final part, merge
//! language-equivalent final states, lump everything.

mod bisim;
mod lang;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::automata::{empty, nonempty_states, Automaton, Edge, Kind, Letter, StateId};
use crate::complement::{complement_uca, ComplementOpts, GfmNba, Part};
use crate::error::{Error, Result};

pub use lang::{accepts_from, equivalent};

/// Restricts to states with a nonempty language; the canonical one-state
/// empty automaton if the initial state goes.
pub fn prune_empty(g: &GfmNba) -> GfmNba {
    let live = nonempty_states(&g.nba);
    if !g.nba.initial.iter().any(|&q| live[q as usize]) {
        let nba = empty(Kind::Nba, g.nba.alphabet.clone());
        return GfmNba { nba, part: vec![Part::Subset], stats: g.stats.clone() };
    }
    g.restrict(&live)
}

/// Bisimulation quotient of the final part; first-phase states are kept
/// apart, only their edges are redirected.
pub fn lump_final(g: &GfmNba) -> GfmNba {
    let blocks = bisim::refine(g, bisim::initial_blocks(g, true));
    bisim::quotient(g, &blocks)
}

/// Bisimulation quotient of the whole automaton, keeping the phases and the
/// empty sink in separate blocks.
pub fn lump_all(g: &GfmNba) -> GfmNba {
    let blocks = bisim::refine(g, bisim::initial_blocks(g, false));
    bisim::quotient(g, &blocks)
}

/// Redirects every edge leaving the first phase to the lowest-numbered
/// language-equivalent target, then drops unreachable states. Edges inside
/// the final part stay untouched: redirecting those could change the
/// language of a Büchi automaton.
pub fn merge_lang_final(g: &GfmNba) -> GfmNba {
    merge_lang_final_until(g, None).expect("no deadline")
}

fn merge_lang_final_until(g: &GfmNba, deadline: Option<Instant>) -> Result<GfmNba> {
    let a = &g.nba;
    let n = a.num_states();
    let mut entered = vec![false; n];
    for q in a.states() {
        if g.part[q as usize].is_first() {
            for e in a.edges(q) {
                if !g.part[e.target as usize].is_first() {
                    entered[e.target as usize] = true;
                }
            }
        }
    }
    let candidates: Vec<StateId> = a.states().filter(|&q| entered[q as usize]).collect();
    let letters: Vec<Letter> = used_letters(a);
    let prints = lang::fingerprints(a, &candidates, &letters, 256);
    let mut groups: rustc_hash::FxHashMap<&Vec<u64>, Vec<StateId>> = Default::default();
    for (q, fp) in candidates.iter().zip(&prints) {
        groups.entry(fp).or_default().push(*q);
    }
    let mut rep: Vec<StateId> = (0..n as StateId).collect();
    let mut ordered: Vec<Vec<StateId>> = groups.into_values().collect();
    ordered.sort();
    for group in ordered {
        let mut reps: Vec<StateId> = Vec::new();
        for &q in &group {
            if let Some(d) = deadline {
                if Instant::now() >= d {
                    return Err(Error::Timeout { built: n });
                }
            }
            match reps.iter().find(|&&r| lang::equivalent(a, r, q, &letters)) {
                Some(&r) => rep[q as usize] = r,
                None => reps.push(q),
            }
        }
    }
    let mut out = a.clone();
    for q in a.states() {
        if g.part[q as usize].is_first() {
            let list = a.edges(q).iter().map(|e| Edge { target: rep[e.target as usize], ..*e }).collect();
            out.set_edges(q, list);
        }
    }
    let reach = out.reachable();
    Ok(GfmNba { nba: out, part: g.part.clone(), stats: g.stats.clone() }.restrict(&reach))
}

fn used_letters(a: &Automaton) -> Vec<Letter> {
    let mut ls: Vec<Letter> = a.states().flat_map(|q| a.edges(q).iter().map(|e| e.letter)).collect();
    ls.sort_unstable();
    ls.dedup();
    if ls.is_empty() {
        ls = a.alphabet.letters().take(1).collect();
    }
    ls
}

/// State counts after every stage, as in the usual benchmark tables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub orig: usize,
    pub compl: Option<usize>,
    pub prune: Option<usize>,
    pub lumpd: Option<usize>,
    pub lang: Option<usize>,
    pub lumpa: Option<usize>,
    /// Wall time in seconds.
    pub time: f64,
    pub timed_out: bool,
}

impl PipelineStats {
    /// Stage counts in order, missing stages omitted.
    pub fn stages(&self) -> Vec<usize> {
        [Some(self.orig), self.compl, self.prune, self.lumpd, self.lang, self.lumpa].into_iter().flatten().collect()
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOpts {
    pub complement: ComplementOpts,
    pub timeout: Duration,
}

impl Default for PipelineOpts {
    fn default() -> Self {
        PipelineOpts { complement: ComplementOpts::default(), timeout: Duration::from_secs(600) }
    }
}

/// Complements `a` (read as a UCA) and runs all reductions. On timeout the
/// stats hold the stages finished so far and no automaton is returned.
pub fn run_pipeline(a: &Automaton, opts: &PipelineOpts) -> Result<(Option<GfmNba>, PipelineStats)> {
    let start = Instant::now();
    let deadline = start + opts.timeout;
    let uca = a.reinterpret(Kind::Uca);
    let mut stats = PipelineStats { orig: a.num_states(), ..Default::default() };
    let finish = |mut stats: PipelineStats, timed_out: bool| {
        stats.time = start.elapsed().as_secs_f64();
        stats.timed_out = timed_out;
        stats
    };
    let copts = ComplementOpts { deadline: Some(deadline), ..opts.complement.clone() };
    let c = match complement_uca(&uca, &copts) {
        Ok(c) => c,
        Err(Error::Timeout { .. }) => return Ok((None, finish(stats, true))),
        Err(e) => return Err(e),
    };
    stats.compl = Some(c.num_states());
    let over = || Instant::now() >= deadline;
    let c = prune_empty(&c);
    stats.prune = Some(c.num_states());
    if over() {
        return Ok((None, finish(stats, true)));
    }
    let c = lump_final(&c);
    stats.lumpd = Some(c.num_states());
    if over() {
        return Ok((None, finish(stats, true)));
    }
    let c = match merge_lang_final_until(&c, Some(deadline)) {
        Ok(c) => c,
        Err(Error::Timeout { .. }) => return Ok((None, finish(stats, true))),
        Err(e) => return Err(e),
    };
    stats.lang = Some(c.num_states());
    if over() {
        return Ok((None, finish(stats, true)));
    }
    let c = lump_all(&c);
    stats.lumpa = Some(c.num_states());
    Ok((Some(c), finish(stats, false)))
}
