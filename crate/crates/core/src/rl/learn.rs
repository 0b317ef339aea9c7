//! Tabular lexicographic Q-learning: one table for the Büchi objective,
//! where each accepting transition ends the episode with probability
//! `1 - zeta` and pays 1, and one for the discounted reward. The greedy
//! action maximises the reward table among the actions whose satisfaction
//! value is within `tau_lex` of the best.
//!
//! A positional greedy strategy may keep the satisfaction value at its
//! maximum while postponing acceptance forever, as the exact solver's
//! reward-optimal phase does. A third table therefore counts accepting
//! transitions under a per-step discount, and the learned strategy has the
//! solver's switching form: greedy for a bounded number of steps, then the
//! progress-maximising action within the same satisfaction band. Training
//! episodes switch at a random step so that both phases are trained on the
//! states they visit.
//!
//! Single runs can settle on a self-consistent but suboptimal reward table,
//! so training is repeated from independent seeds and the run whose
//! strategy does best in simulated rollouts is kept.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{switch_step, Mdp, Strategy};

/// One sampled step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub reward: f64,
    pub accepting: bool,
}

/// Simulator access to a product MDP.
pub trait Sampler {
    fn num_states(&self) -> usize;
    fn initial(&self) -> usize;
    fn num_actions(&self, s: usize) -> usize;
    fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Transition;
}

impl Sampler for Mdp {
    fn num_states(&self) -> usize {
        Mdp::num_states(self)
    }

    fn initial(&self) -> usize {
        self.initial as usize
    }

    fn num_actions(&self, s: usize) -> usize {
        self.choices[s].len()
    }

    fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Transition {
        let c = &self.choices[s][a];
        let mut x: f64 = rng.gen();
        let mut pick = &c.outcomes[c.outcomes.len() - 1];
        for o in &c.outcomes {
            if x < o.prob {
                pick = o;
                break;
            }
            x -= o.prob;
        }
        Transition { next: pick.target as usize, reward: pick.reward, accepting: c.accepting }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexQConfig {
    pub episodes: usize,
    pub episode_len: usize,
    pub lambda: f64,
    pub zeta: f64,
    pub tau_lex: f64,
    /// Learning rate; decays as `alpha / (1 + visits / alpha_halflife)`
    /// down to `alpha_min`.
    pub alpha: f64,
    pub alpha_min: f64,
    pub alpha_halflife: f64,
    /// Exploration probability, decayed linearly over the episodes.
    pub explore_start: f64,
    pub explore_end: f64,
    /// Per-step discount of the progress table.
    pub progress_discount: f64,
    /// Reward given up by switching to the progress phase.
    pub switch_eps: f64,
    /// Fraction of training episodes that switch phase at a random step.
    pub switch_episodes: f64,
    /// Independent training runs; the best by rollout score is returned.
    pub restarts: usize,
    /// Rollouts used to score each run.
    pub eval_rollouts: usize,
    pub seed: u64,
    /// Training stops with a timeout error once this passes.
    #[serde(skip)]
    pub deadline: Option<Instant>,
}

impl Default for LexQConfig {
    fn default() -> Self {
        LexQConfig {
            episodes: 500_000,
            episode_len: 1000,
            lambda: 0.99,
            zeta: 0.99,
            tau_lex: 0.01,
            alpha: 0.5,
            alpha_min: 0.05,
            alpha_halflife: 200.0,
            explore_start: 1.0,
            explore_end: 0.2,
            progress_discount: 0.99,
            switch_eps: 1e-3,
            switch_episodes: 0.2,
            restarts: 4,
            eval_rollouts: 100,
            seed: 0,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexQTables {
    pub q_sat: Vec<Vec<f64>>,
    pub q_disc: Vec<Vec<f64>>,
    pub q_prog: Vec<Vec<f64>>,
    pub visits: Vec<Vec<u32>>,
    pub tau_lex: f64,
    pub switch_step: usize,
    pub score: RolloutScore,
}

/// Simulated performance of a learned strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutScore {
    /// Fraction of rollouts with an accepting transition in their final
    /// `episode_len` steps.
    pub accept_rate: f64,
    /// Mean discounted return.
    pub mean_return: f64,
}

impl LexQTables {
    fn new<S: Sampler>(env: &S, tau_lex: f64) -> Self {
        let shape = |v: f64| (0..env.num_states()).map(|s| vec![v; env.num_actions(s)]).collect::<Vec<_>>();
        LexQTables {
            q_sat: shape(0.0),
            q_disc: shape(0.0),
            q_prog: shape(0.0),
            visits: (0..env.num_states()).map(|s| vec![0; env.num_actions(s)]).collect(),
            tau_lex,
            switch_step: 0,
            score: RolloutScore::default(),
        }
    }

    /// Best satisfaction value at `s`.
    pub fn sat_value(&self, s: usize) -> f64 {
        self.q_sat[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn best_in_band(&self, s: usize, by: &[f64]) -> usize {
        let best = self.sat_value(s);
        let mut pick = (f64::NEG_INFINITY, 0);
        for (a, (&qs, &q)) in self.q_sat[s].iter().zip(by).enumerate() {
            if qs >= best - self.tau_lex && q > pick.0 {
                pick = (q, a);
            }
        }
        pick.1
    }

    /// The lexicographically greedy action.
    pub fn greedy(&self, s: usize) -> usize {
        self.best_in_band(s, &self.q_disc[s])
    }

    /// The action of the progress phase.
    pub fn progress(&self, s: usize) -> usize {
        self.best_in_band(s, &self.q_prog[s])
    }

    /// The greedy action everywhere, forever.
    pub fn greedy_strategy(&self) -> Strategy {
        Strategy::Positional { choices: (0..self.q_sat.len()).map(|s| self.greedy(s)).collect() }
    }

    /// Greedy for `switch_step` steps, then progress.
    pub fn strategy(&self) -> Strategy {
        let n = self.q_sat.len();
        Strategy::Switching {
            before: (0..n).map(|s| self.greedy(s)).collect(),
            after: (0..n).map(|s| self.progress(s)).collect(),
            switch_step: self.switch_step,
        }
    }
}

/// Trains `cfg.restarts` independent runs and keeps the best one: highest
/// acceptance rate (up to 0.05), then highest mean return.
pub fn lex_q_learn<S: Sampler>(env: &S, cfg: &LexQConfig) -> Result<LexQTables> {
    let mut best: Option<LexQTables> = None;
    for i in 0..cfg.restarts.max(1) {
        let seed = cfg.seed.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut t = train_once(env, cfg, seed)?;
        t.score = rollout_score(env, &t, cfg, seed ^ 0x5eed);
        let better = match &best {
            None => true,
            Some(b) => {
                let (x, y) = (t.score, b.score);
                x.accept_rate > y.accept_rate + 0.05
                    || (x.accept_rate >= y.accept_rate - 0.05 && x.mean_return > y.mean_return)
            }
        };
        if better {
            best = Some(t);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Runs the learned strategy without exploration for `switch_step +
/// episode_len` steps per rollout.
pub fn rollout_score<S: Sampler>(env: &S, t: &LexQTables, cfg: &LexQConfig, seed: u64) -> RolloutScore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strategy = t.strategy();
    let len = t.switch_step + cfg.episode_len;
    let n = cfg.eval_rollouts.max(1);
    let (mut accepted, mut total) = (0usize, 0.0);
    for _ in 0..n {
        let mut s = env.initial();
        let (mut ret, mut disc, mut late_accept) = (0.0, 1.0, false);
        for step in 0..len {
            let tr = env.sample(s, strategy.choice_at(s as _, step), &mut rng);
            ret += disc * tr.reward;
            disc *= cfg.lambda;
            late_accept |= tr.accepting && step >= t.switch_step;
            s = tr.next;
        }
        accepted += usize::from(late_accept);
        total += ret;
    }
    RolloutScore { accept_rate: accepted as f64 / n as f64, mean_return: total / n as f64 }
}

fn train_once<S: Sampler>(env: &S, cfg: &LexQConfig, seed: u64) -> Result<LexQTables> {
    if !(0.0..1.0).contains(&cfg.lambda) || !(cfg.zeta > 0.0 && cfg.zeta < 1.0) {
        return Err(Error::InvalidParameter("need lambda in [0, 1) and zeta in (0, 1)".into()));
    }
    if !(0.0..1.0).contains(&cfg.progress_discount)
        || !(cfg.switch_eps > 0.0)
        || !(0.0..=1.0).contains(&cfg.switch_episodes)
    {
        return Err(Error::InvalidParameter(
            "need progress_discount in [0, 1), switch_eps > 0 and switch_episodes in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = LexQTables::new(env, cfg.tau_lex);
    let mut r_max = 0.0f64;
    for ep in 0..cfg.episodes {
        if cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Timeout { built: ep });
        }
        let frac = if cfg.episodes > 1 { ep as f64 / (cfg.episodes - 1) as f64 } else { 1.0 };
        let explore = cfg.explore_start + (cfg.explore_end - cfg.explore_start) * frac;
        let switch_at =
            if rng.gen_bool(cfg.switch_episodes) { rng.gen_range(0..cfg.episode_len) } else { cfg.episode_len };
        let mut s = env.initial();
        for step in 0..cfg.episode_len {
            let n = env.num_actions(s);
            let a = if rng.gen_bool(explore.clamp(0.0, 1.0)) {
                rng.gen_range(0..n)
            } else if step < switch_at {
                t.greedy(s)
            } else {
                t.progress(s)
            };
            let tr = env.sample(s, a, &mut rng);
            r_max = r_max.max(tr.reward.abs());
            let v = &mut t.visits[s][a];
            *v = v.saturating_add(1);
            let alpha = (cfg.alpha / (1.0 + *v as f64 / cfg.alpha_halflife)).max(cfg.alpha_min);
            let next_sat = t.sat_value(tr.next);
            let sat_target = if tr.accepting { (1.0 - cfg.zeta) + cfg.zeta * next_sat } else { next_sat };
            let g = t.greedy(tr.next);
            let disc_target = tr.reward + cfg.lambda * t.q_disc[tr.next][g];
            let h = t.progress(tr.next);
            let prog_target = f64::from(u8::from(tr.accepting)) + cfg.progress_discount * t.q_prog[tr.next][h];
            t.q_sat[s][a] += alpha * (sat_target - t.q_sat[s][a]);
            t.q_disc[s][a] += alpha * (disc_target - t.q_disc[s][a]);
            t.q_prog[s][a] += alpha * (prog_target - t.q_prog[s][a]);
            let bound = 1.0 + r_max / (1.0 - cfg.lambda);
            if !t.q_disc[s][a].is_finite() || t.q_disc[s][a].abs() > bound || !t.q_sat[s][a].is_finite() {
                return Err(Error::Divergence(format!(
                    "episode {ep}: Q values at state {s} action {a} are {} / {}",
                    t.q_sat[s][a], t.q_disc[s][a]
                )));
            }
            s = tr.next;
        }
    }
    t.switch_step = switch_step(cfg.lambda, cfg.switch_eps, r_max);
    Ok(t)
}

/// Largest Bellman residual of the reward table at the greedy actions of
/// the states the greedy strategy reaches.
pub fn bellman_residual(m: &Mdp, t: &LexQTables, lambda: f64) -> f64 {
    let mut seen = vec![false; m.num_states()];
    let mut stack = vec![m.initial as usize];
    seen[m.initial as usize] = true;
    let mut worst = 0.0f64;
    while let Some(s) = stack.pop() {
        let a = t.greedy(s);
        let c = &m.choices[s][a];
        let expected: f64 =
            c.outcomes.iter().map(|o| o.prob * (o.reward + lambda * t.q_disc[o.target as usize][t.greedy(o.target as usize)])).sum();
        worst = worst.max((expected - t.q_disc[s][a]).abs());
        for o in &c.outcomes {
            if !seen[o.target as usize] {
                seen[o.target as usize] = true;
                stack.push(o.target as usize);
            }
        }
    }
    worst
}

/// States that a fully random episode of `episode_len` steps from the
/// initial state visits with positive probability.
pub fn episode_support(m: &Mdp, episode_len: usize) -> Vec<bool> {
    let mut seen = vec![false; m.num_states()];
    seen[m.initial as usize] = true;
    let mut frontier = vec![m.initial as usize];
    for _ in 0..episode_len {
        let mut next = Vec::new();
        for s in frontier {
            for o in m.choices[s].iter().flat_map(|c| &c.outcomes) {
                if o.prob > 0.0 && !std::mem::replace(&mut seen[o.target as usize], true) {
                    next.push(o.target as usize);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    seen
}

/// States visited by `episodes` fully random episodes.
pub fn random_coverage<S: Sampler>(env: &S, episodes: usize, episode_len: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = vec![false; env.num_states()];
    for _ in 0..episodes {
        let mut s = env.initial();
        seen[s] = true;
        for _ in 0..episode_len {
            let a = rng.gen_range(0..env.num_actions(s));
            s = env.sample(s, a, &mut rng).next;
            seen[s] = true;
        }
    }
    seen
}
