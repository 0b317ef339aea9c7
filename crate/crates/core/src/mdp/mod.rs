//! Markov decision processes: products with automata and reward machines,
//! end components, reachability, discounted value iteration and the
//! lexicographic solver (almost-sure Büchi first, discounted reward second).
//!
//! A state owns a list of choices. Each choice is one enabled action (or an
//! action paired with an automaton move, in products) with a distribution
//! over successors. Choices may emit their own letter instead of the state
//! label and may carry an acceptance mark.

mod graph;
mod json;
mod product;
mod solve;

use rand::Rng;

use crate::automata::Letter;
use crate::error::{Error, Result};

pub use graph::{
    accepting_mecs, almost_sure_buchi_region, max_reach_prob, mec_decomposition, mecs_within, prob1_region,
    AlmostSure, Mec,
};
pub use json::{ActionJson, MdpJson, StateJson, StrategyEntry, StrategyJson, SuccessorJson};
pub use product::{product_with_nba, product_with_reward_machine, Product, RewardMachine};
pub use solve::{
    discounted_vi, discounted_vi_with, lexicographic_solve, markov_discounted, strategy_value_check, switch_step, LexSolution, Strategy,
    DEFAULT_VI_EPSILON,
};

pub type SId = u32;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub target: SId,
    pub prob: f64,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    /// Index into [`Mdp::action_names`].
    pub action: u32,
    pub outcomes: Vec<Outcome>,
    /// Letter emitted when this choice is taken; the state label if `None`.
    pub letter: Option<Letter>,
    pub accepting: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    pub aps: Vec<String>,
    pub labels: Vec<Letter>,
    pub initial: SId,
    pub choices: Vec<Vec<Choice>>,
    pub action_names: Vec<String>,
}

impl Mdp {
    pub fn new(aps: Vec<String>) -> Self {
        Mdp { aps, labels: Vec::new(), initial: 0, choices: Vec::new(), action_names: Vec::new() }
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn num_choices(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    pub fn add_state(&mut self, label: Letter) -> SId {
        self.labels.push(label);
        self.choices.push(Vec::new());
        (self.labels.len() - 1) as SId
    }

    /// Interns an action name.
    pub fn action_id(&mut self, name: &str) -> u32 {
        match self.action_names.iter().position(|n| n == name) {
            Some(i) => i as u32,
            None => {
                self.action_names.push(name.to_string());
                (self.action_names.len() - 1) as u32
            }
        }
    }

    pub fn add_choice(&mut self, s: SId, choice: Choice) {
        self.choices[s as usize].push(choice);
    }

    pub fn letter(&self, s: SId, c: &Choice) -> Letter {
        c.letter.unwrap_or(self.labels[s as usize])
    }

    pub fn r_max(&self) -> f64 {
        self.choices.iter().flatten().flat_map(|c| c.outcomes.iter().map(|o| o.reward.abs())).fold(0.0, f64::max)
    }

    /// Checks the structural invariants: every state has a choice, every
    /// distribution sums to one and targets exist.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        if self.initial as usize >= n {
            return Err(Error::InvalidModel(format!("initial state {} out of range", self.initial)));
        }
        for (s, cs) in self.choices.iter().enumerate() {
            if cs.is_empty() {
                return Err(Error::InvalidModel(format!("state {s} has no enabled action")));
            }
            for c in cs {
                let sum: f64 = c.outcomes.iter().map(|o| o.prob).sum();
                if (sum - 1.0).abs() > 1e-12 * (1 + c.outcomes.len()) as f64 {
                    return Err(Error::InvalidModel(format!("distribution at state {s} sums to {sum}")));
                }
                if c.outcomes.iter().any(|o| o.target as usize >= n || !(o.prob > 0.0) || !o.reward.is_finite()) {
                    return Err(Error::InvalidModel(format!("bad outcome at state {s}")));
                }
            }
        }
        Ok(())
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![self.initial];
        seen[self.initial as usize] = true;
        while let Some(s) = stack.pop() {
            for c in &self.choices[s as usize] {
                for o in &c.outcomes {
                    if !seen[o.target as usize] {
                        seen[o.target as usize] = true;
                        stack.push(o.target);
                    }
                }
            }
        }
        seen
    }
}

/// Random MDP with `n` states labelled over `aps` propositions, one to
/// `max_actions` actions per state and one to three successors per action
/// with random probabilities.
pub fn random_mdp<R: Rng>(rng: &mut R, n: usize, aps: usize, max_actions: usize) -> Mdp {
    let mut m = Mdp::new((0..aps).map(|i| format!("p{i}")).collect());
    for _ in 0..n {
        m.add_state(rng.gen_range(0..1u32 << aps));
    }
    for s in 0..n as SId {
        for a in 0..rng.gen_range(1..=max_actions) {
            let k = rng.gen_range(1..=3.min(n));
            let mut targets: Vec<SId> = (0..k).map(|_| rng.gen_range(0..n as SId)).collect();
            targets.sort_unstable();
            targets.dedup();
            let weights: Vec<f64> = targets.iter().map(|_| rng.gen_range(1..=4) as f64).collect();
            let total: f64 = weights.iter().sum();
            let action = m.action_id(&format!("a{a}"));
            let outcomes =
                targets.iter().zip(&weights).map(|(&t, &w)| Outcome { target: t, prob: w / total, reward: 0.0 }).collect();
            m.add_choice(s, Choice { action, outcomes, letter: None, accepting: false });
        }
    }
    m
}

#[cfg(test)]
mod tests;
