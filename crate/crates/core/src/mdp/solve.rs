//! Discounted value iteration, the lexicographic solver and exact-ish
//! evaluation of the strategies it produces.

use serde::{Deserialize, Serialize};

use crate::automata::scc::{tarjan, UNREACHED};
use crate::error::{Error, Result};

use super::graph::{almost_sure_buchi_region, max_reach_prob};
use super::{Mdp, SId};

/// Target precision of value iteration.
pub const DEFAULT_VI_EPSILON: f64 = 1e-8;

/// A strategy over MDP choice indices. The switching form plays `before`
/// for the first `switch_step` steps and `after` from then on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    Positional { choices: Vec<usize> },
    Switching { before: Vec<usize>, after: Vec<usize>, switch_step: usize },
}

impl Strategy {
    pub fn choice_at(&self, s: SId, step: usize) -> usize {
        match self {
            Strategy::Positional { choices } => choices[s as usize],
            Strategy::Switching { before, after, switch_step } => {
                if step < *switch_step {
                    before[s as usize]
                } else {
                    after[s as usize]
                }
            }
        }
    }
}

fn check_discount(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("discount factor {lambda} outside [0, 1)")));
    }
    Ok(())
}

/// Discounted value iteration restricted to the allowed choices. Stops once
/// the sup-norm residual is at most `eps (1 - lambda) / (2 lambda)`, which
/// puts the greedy strategy within `eps` of optimal. States without an
/// allowed choice get value 0.
pub fn discounted_vi_with(
    m: &Mdp,
    lambda: f64,
    eps: f64,
    allowed: impl Fn(SId, usize) -> bool,
) -> Result<(Vec<f64>, Vec<usize>)> {
    check_discount(lambda)?;
    let n = m.num_states();
    let q = |v: &[f64], s: usize, c: usize| -> f64 {
        m.choices[s][c].outcomes.iter().map(|o| o.prob * (o.reward + lambda * v[o.target as usize])).sum()
    };
    let allowed_lists: Vec<Vec<usize>> =
        (0..n).map(|s| (0..m.choices[s].len()).filter(|&c| allowed(s as SId, c)).collect()).collect();
    let stop = if lambda == 0.0 { f64::INFINITY } else { eps * (1.0 - lambda) / (2.0 * lambda) };
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let bound = 1.0 + m.r_max() / (1.0 - lambda);
    for _ in 0..100_000_000u64 {
        let mut residual = 0.0f64;
        for s in 0..n {
            let best = allowed_lists[s].iter().map(|&c| q(&v, s, c)).fold(f64::NEG_INFINITY, f64::max);
            next[s] = if best.is_finite() { best } else { 0.0 };
            residual = residual.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if v.iter().any(|x| !x.is_finite() || x.abs() > bound) {
            return Err(Error::Divergence("values left the reward bound".into()));
        }
        if residual <= stop {
            break;
        }
    }
    let strat = (0..n)
        .map(|s| {
            let mut best = (f64::NEG_INFINITY, 0usize);
            for &c in &allowed_lists[s] {
                let x = q(&v, s, c);
                if x > best.0 + 1e-12 {
                    best = (x, c);
                }
            }
            best.1
        })
        .collect();
    Ok((v, strat))
}

pub fn discounted_vi(m: &Mdp, lambda: f64, eps: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    discounted_vi_with(m, lambda, eps, |_, _| true)
}

/// Steps after which the remaining discounted reward is below `eps / 2`:
/// `ceil(log_lambda(eps (1 - lambda) / (2 r_max)))`, at least 0.
pub fn switch_step(lambda: f64, eps: f64, r_max: f64) -> usize {
    if r_max == 0.0 {
        return 0;
    }
    if lambda == 0.0 {
        return 1;
    }
    let t = (eps * (1.0 - lambda) / (2.0 * r_max)).ln() / lambda.ln();
    // Guard against 11.999999 style rounding of exact powers.
    let r = t.round();
    if (t - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        t.ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug)]
pub struct LexSolution {
    pub strategy: Strategy,
    /// Almost-sure Büchi region.
    pub region: Vec<bool>,
    /// Optimal discounted values among strategies staying in the region.
    pub values: Vec<f64>,
    pub switch_step: usize,
}

impl LexSolution {
    pub fn value(&self, s: SId) -> f64 {
        self.values[s as usize]
    }
}

/// Lexicographic optimisation: satisfy the Büchi objective almost surely,
/// then maximise discounted reward. Plays the discount-optimal strategy of
/// the region-restricted MDP for `switch_step` steps, then switches to the
/// almost-sure Büchi strategy; the switch costs at most `eps`.
pub fn lexicographic_solve(m: &Mdp, lambda: f64, eps: f64) -> Result<LexSolution> {
    check_discount(lambda)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {eps} must be positive")));
    }
    let sure = almost_sure_buchi_region(m);
    if !sure.region[m.initial as usize] {
        let (v, _) = max_reach_prob(m, &sure.accepting);
        return Err(Error::NoValidStrategy { max_sat: v[m.initial as usize] });
    }
    let region = &sure.region;
    let stays = |s: SId, c: usize| {
        region[s as usize] && m.choices[s as usize][c].outcomes.iter().all(|o| region[o.target as usize])
    };
    let (values, disc) = discounted_vi_with(m, lambda, eps.min(DEFAULT_VI_EPSILON), stays)?;
    let t = switch_step(lambda, eps, m.r_max());
    Ok(LexSolution {
        strategy: Strategy::Switching { before: disc, after: sure.strategy.clone(), switch_step: t },
        region: sure.region,
        values,
        switch_step: t,
    })
}

/// Discounted value of the Markov chain induced by a positional strategy.
pub fn markov_discounted(m: &Mdp, choices: &[usize], lambda: f64) -> Result<Vec<f64>> {
    check_discount(lambda)?;
    let n = m.num_states();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..100_000_000u64 {
        let mut residual = 0.0f64;
        let mut scale = 1.0f64;
        for s in 0..n {
            next[s] = m.choices[s][choices[s]]
                .outcomes
                .iter()
                .map(|o| o.prob * (o.reward + lambda * v[o.target as usize]))
                .sum();
            residual = residual.max((next[s] - v[s]).abs());
            scale = scale.max(next[s].abs());
        }
        std::mem::swap(&mut v, &mut next);
        if lambda == 0.0 || residual * lambda / (1.0 - lambda) <= 1e-13 * scale {
            break;
        }
    }
    Ok(v)
}

/// Probability, per state, that the chain induced by `choices` takes
/// accepting choices infinitely often. Exact 0 and 1 are decided on the
/// graph; the rest by iteration.
fn markov_buchi(m: &Mdp, choices: &[usize]) -> Vec<f64> {
    let n = m.num_states();
    let succ = |s: usize| m.choices[s][choices[s]].outcomes.iter().map(|o| o.target as usize);
    let sccs = tarjan(n, 0..n, |s, out| out.extend(succ(s)));
    let mut bottom = vec![true; sccs.count];
    let mut good = vec![false; sccs.count];
    for s in 0..n {
        let c = sccs.comp[s];
        debug_assert_ne!(c, UNREACHED);
        if succ(s).any(|t| sccs.comp[t] != c) {
            bottom[c as usize] = false;
        }
        if m.choices[s][choices[s]].accepting {
            good[c as usize] = true;
        }
    }
    // Components are numbered in reverse topological order, so one pass
    // from low to high ids settles reachability of good and bad bottoms.
    let members = sccs.members();
    let mut reach_good = vec![false; sccs.count];
    let mut reach_bad = vec![false; sccs.count];
    for c in 0..sccs.count {
        if bottom[c] {
            reach_good[c] = good[c];
            reach_bad[c] = !good[c];
            continue;
        }
        for &s in &members[c] {
            for t in succ(s) {
                let d = sccs.comp[t] as usize;
                if d != c {
                    reach_good[c] |= reach_good[d];
                    reach_bad[c] |= reach_bad[d];
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n)
        .map(|s| {
            let c = sccs.comp[s] as usize;
            if !reach_bad[c] {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let open: Vec<usize> = (0..n)
        .filter(|&s| {
            let c = sccs.comp[s] as usize;
            reach_good[c] && reach_bad[c]
        })
        .collect();
    for _ in 0..10_000_000u64 {
        let mut delta = 0.0f64;
        for &s in &open {
            let x: f64 = m.choices[s][choices[s]].outcomes.iter().map(|o| o.prob * v[o.target as usize]).sum();
            delta = delta.max((x - v[s]).abs());
            v[s] = x;
        }
        if delta < 1e-15 {
            break;
        }
    }
    v
}

/// Evaluates a strategy from the initial state: the probability of the
/// Büchi objective and the expected discounted reward. Switching strategies
/// are evaluated by pushing the initial distribution through the first
/// phase and by backward induction over the step counter.
pub fn strategy_value_check(m: &Mdp, strategy: &Strategy, lambda: f64) -> Result<(f64, f64)> {
    let n = m.num_states();
    let s0 = m.initial as usize;
    match strategy {
        Strategy::Positional { choices } => {
            check_len(m, choices, n)?;
            let sat = markov_buchi(m, choices)[s0];
            let disc = markov_discounted(m, choices, lambda)?[s0];
            Ok((sat, disc))
        }
        Strategy::Switching { before, after, switch_step } => {
            check_len(m, before, n)?;
            check_len(m, after, n)?;
            let sat_after = markov_buchi(m, after);
            let mut dist = vec![0.0; n];
            dist[s0] = 1.0;
            for _ in 0..*switch_step {
                let mut next = vec![0.0; n];
                for s in 0..n {
                    if dist[s] > 0.0 {
                        for o in &m.choices[s][before[s]].outcomes {
                            next[o.target as usize] += dist[s] * o.prob;
                        }
                    }
                }
                dist = next;
            }
            let support_sure = (0..n).all(|s| dist[s] == 0.0 || sat_after[s] == 1.0);
            let sat = if support_sure { 1.0 } else { (0..n).map(|s| dist[s] * sat_after[s]).sum() };
            let mut v = markov_discounted(m, after, lambda)?;
            for _ in 0..*switch_step {
                v = (0..n)
                    .map(|s| {
                        m.choices[s][before[s]].outcomes.iter().map(|o| o.prob * (o.reward + lambda * v[o.target as usize])).sum()
                    })
                    .collect();
            }
            Ok((sat, v[s0]))
        }
    }
}

fn check_len(m: &Mdp, choices: &[usize], n: usize) -> Result<()> {
    if choices.len() != n {
        return Err(Error::InvalidModel(format!("strategy covers {} of {n} states", choices.len())));
    }
    if let Some(s) = (0..n).find(|&s| choices[s] >= m.choices[s].len()) {
        return Err(Error::InvalidModel(format!("strategy picks a missing choice at state {s}")));
    }
    Ok(())
}
