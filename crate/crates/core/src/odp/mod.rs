//! ω-regular decision processes: MDPs whose actions carry a lookback guard
//! (a state of a DFA schema that must accept the history) and a lookahead
//! promise (a state of a UCA schema that must accept the future).
//!
//! Solving proceeds in three stages. Guards are removed by tracking, for
//! every DFA state, the set of states the history leads to. Promises are
//! removed by emitting them as part of the letter, collecting them in one
//! UCA and complementing that into a good-for-MDPs Büchi automaton. The
//! product of the promise MDP with that automaton is then solved
//! lexicographically: promises kept almost surely first, discounted reward
//! second.
//!
//! A promise made by the action taken in state `s` constrains the label
//! sequence starting with `L(s)`.

mod json;

use rustc_hash::FxHashMap;

use crate::automata::{lasso_member_uca, Alphabet, Automaton, Kind, LassoWord, Letter, Promise, PromiseMode, StateId};
use crate::collect::{build_collection, Finality};
use crate::complement::{complement_uca, ComplementOpts, GfmNba, Part};
use crate::error::{Error, Result};
use crate::mdp::{lexicographic_solve, product_with_nba, Choice, LexSolution, Mdp, Outcome, Product, SId, Strategy};
use crate::reduce::{lump_all, lump_final, merge_lang_final, prune_empty};

pub use json::{CubeJson, DfaJson, OdpActionJson, OdpJson, SchemaRef};

/// One action of an ODP state. `None` guards and promises are trivial.
#[derive(Clone, Debug, PartialEq)]
pub struct OdpAction {
    pub name: String,
    pub guard: Option<StateId>,
    pub promise: Option<StateId>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Odp {
    pub aps: Vec<String>,
    pub labels: Vec<Letter>,
    pub initial: SId,
    pub actions: Vec<Vec<OdpAction>>,
    /// DFA schema (`Kind::Dfa`, no initial state); may be nondeterministic.
    pub lookback: Option<Automaton>,
    /// UCA schema (`Kind::Uca`, no initial state).
    pub lookahead: Option<Automaton>,
}

/// Default bound on the number of (state, tracker) pairs.
pub const DEFAULT_TRACKER_BUDGET: usize = 1_000_000;

impl Odp {
    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn base_alphabet(&self) -> Result<Alphabet> {
        Alphabet::new(self.aps.iter().cloned())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        if self.initial as usize >= n || self.actions.len() != n {
            return Err(Error::InvalidModel("initial state or action table out of range".into()));
        }
        let base = self.base_alphabet()?;
        for (kind, schema) in [(Kind::Dfa, &self.lookback), (Kind::Uca, &self.lookahead)] {
            if let Some(a) = schema {
                if a.kind != kind {
                    return Err(Error::Shape(if kind == Kind::Dfa { "DFA lookback schema" } else { "UCA lookahead schema" }));
                }
                if !a.alphabet.same_letters(&base) {
                    return Err(Error::AlphabetMismatch("schema propositions differ from the process".into()));
                }
            }
        }
        for (s, acts) in self.actions.iter().enumerate() {
            for a in acts {
                let sum: f64 = a.outcomes.iter().map(|o| o.prob).sum();
                if (sum - 1.0).abs() > 1e-12 * (1 + a.outcomes.len()) as f64
                    || a.outcomes.iter().any(|o| o.target as usize >= n || !(o.prob > 0.0))
                {
                    return Err(Error::InvalidModel(format!("bad distribution for {} at state {s}", a.name)));
                }
                let check = |q: Option<StateId>, schema: &Option<Automaton>, what: &str| match (q, schema) {
                    (None, _) => Ok(()),
                    (Some(q), Some(a)) if (q as usize) < a.num_states() => Ok(()),
                    (Some(q), _) => Err(Error::InvalidModel(format!("{what} state {q} of {} at state {s} undefined", a.name))),
                };
                check(a.guard, &self.lookback, "guard")?;
                check(a.promise, &self.lookahead, "promise")?;
            }
        }
        Ok(())
    }

    fn has_guards(&self) -> bool {
        self.actions.iter().flatten().any(|a| a.guard.is_some())
    }

    fn has_promises(&self) -> bool {
        self.actions.iter().flatten().any(|a| a.promise.is_some())
    }

    /// The underlying MDP with guards and promises ignored.
    pub fn underlying_mdp(&self) -> Mdp {
        let mut m = Mdp::new(self.aps.clone());
        for &l in &self.labels {
            m.add_state(l);
        }
        m.initial = self.initial;
        for (s, acts) in self.actions.iter().enumerate() {
            for a in acts {
                let action = m.action_id(&a.name);
                m.add_choice(s as SId, Choice { action, outcomes: a.outcomes.clone(), letter: None, accepting: false });
            }
        }
        m
    }
}

/// Guard-free process with the original state and tracker of every state.
#[derive(Clone, Debug)]
pub struct Unguarded {
    pub odp: Odp,
    pub origin: Vec<SId>,
    pub trackers: Vec<Vec<u64>>,
}

fn dfa_post(dfa: &Automaton, set: u64, letter: Letter) -> u64 {
    let mut out = 0;
    let mut rest = set;
    while rest != 0 {
        let q = rest.trailing_zeros();
        rest &= rest - 1;
        for e in dfa.successors(q, letter) {
            out |= 1 << e.target;
        }
    }
    out
}

fn final_mask(dfa: &Automaton) -> u64 {
    dfa.finals.iter().enumerate().filter(|(_, &f)| f).fold(0, |m, (q, _)| m | 1 << q)
}

/// Removes lookback guards by pairing each state with a tracker mapping
/// every DFA state to the set of states the history leads it to. An action
/// guarded by `b` is kept where the tracker of `b` meets a final state.
pub fn remove_lookback(d: &Odp, budget: usize) -> Result<Unguarded> {
    d.validate()?;
    let Some(dfa) = d.lookback.as_ref().filter(|_| d.has_guards()) else {
        let odp = Odp { lookback: None, ..d.clone() };
        let n = d.num_states();
        return Ok(Unguarded { odp, origin: (0..n as SId).collect(), trackers: vec![Vec::new(); n] });
    };
    if dfa.num_states() > 64 {
        return Err(Error::Capacity { what: "lookback tracker", built: dfa.num_states() });
    }
    let finals = final_mask(dfa);
    let step = |tr: &[u64], l: Letter| -> Vec<u64> { tr.iter().map(|&set| dfa_post(dfa, set, l)).collect() };
    let start: Vec<u64> = (0..dfa.num_states()).map(|p| 1u64 << p).collect();
    let mut index: FxHashMap<(SId, Vec<u64>), SId> = FxHashMap::default();
    let mut origin = vec![d.initial];
    let mut trackers = vec![step(&start, d.labels[d.initial as usize])];
    index.insert((d.initial, trackers[0].clone()), 0);
    let mut actions: Vec<Vec<OdpAction>> = Vec::new();
    let mut k = 0;
    while k < origin.len() {
        let s = origin[k];
        let tr = trackers[k].clone();
        let mut acts = Vec::new();
        for a in &d.actions[s as usize] {
            if let Some(b) = a.guard {
                if tr[b as usize] & finals == 0 {
                    continue;
                }
            }
            let mut outcomes = Vec::with_capacity(a.outcomes.len());
            for o in &a.outcomes {
                let next = step(&tr, d.labels[o.target as usize]);
                let key = (o.target, next);
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        if origin.len() >= budget {
                            return Err(Error::Capacity { what: "lookback tracker", built: origin.len() });
                        }
                        let id = origin.len() as SId;
                        origin.push(key.0);
                        trackers.push(key.1.clone());
                        index.insert(key, id);
                        id
                    }
                };
                outcomes.push(Outcome { target: id, ..*o });
            }
            acts.push(OdpAction { guard: None, outcomes, ..a.clone() });
        }
        if acts.is_empty() {
            return Err(Error::InvalidModel(format!("state {s} has no enabled action after some history")));
        }
        actions.push(acts);
        k += 1;
    }
    let labels = origin.iter().map(|&s| d.labels[s as usize]).collect();
    let odp = Odp { aps: d.aps.clone(), labels, initial: 0, actions, lookback: None, lookahead: d.lookahead.clone() };
    Ok(Unguarded { odp, origin, trackers })
}

/// The guard-free process as an MDP whose actions emit `(L(s), promise)`,
/// together with a good-for-MDPs automaton accepting exactly the letter
/// sequences that keep all their promises.
#[derive(Clone, Debug)]
pub struct PromiseMdp {
    pub mdp: Mdp,
    pub automaton: GfmNba,
}

#[derive(Clone, Debug)]
pub struct CompileOpts {
    pub complement: ComplementOpts,
    /// Run the reductions on the complement.
    pub reduce: bool,
    pub tracker_budget: usize,
}

impl Default for CompileOpts {
    fn default() -> Self {
        CompileOpts { complement: ComplementOpts::default(), reduce: true, tracker_budget: DEFAULT_TRACKER_BUDGET }
    }
}

/// Removes lookahead promises from a guard-free process.
pub fn remove_lookahead(d: &Odp, opts: &CompileOpts) -> Result<PromiseMdp> {
    if d.has_guards() {
        return Err(Error::InvalidParameter("lookback guards must be removed first".into()));
    }
    d.validate()?;
    let base = d.base_alphabet()?;
    let schema = match (&d.lookahead, d.has_promises()) {
        (Some(s), true) => s,
        _ => {
            // Nothing is ever promised: a one-state automaton accepting everything.
            let mut mdp = d.underlying_mdp();
            mdp.initial = d.initial;
            let mut nba = Automaton::new(Kind::Nba, base.clone(), 1);
            for l in base.letters() {
                nba.add_edge(0, l, 0, true);
            }
            nba.initial = vec![0];
            let stats = Default::default();
            return Ok(PromiseMdp { mdp, automaton: GfmNba { nba, part: vec![Part::Ranking], stats } });
        }
    };
    let collection = build_collection(&schema.as_schema(), PromiseMode::AtMostOne, Finality::Default)?;
    let alphabet = collection.alphabet.clone();
    let mut mdp = Mdp::new(alphabet.aps().to_vec());
    for &l in &d.labels {
        mdp.add_state(l);
    }
    mdp.initial = d.initial;
    let mut used: Vec<Letter> = Vec::new();
    for (s, acts) in d.actions.iter().enumerate() {
        for a in acts {
            let promise = a.promise.map_or(Promise::Top, Promise::State);
            let letter = alphabet
                .promise_letter(d.labels[s], promise)
                .ok_or_else(|| Error::InvalidModel(format!("promise of {} not encodable", a.name)))?;
            used.push(letter);
            let action = mdp.action_id(&a.name);
            mdp.add_choice(s as SId, Choice { action, outcomes: a.outcomes.clone(), letter: Some(letter), accepting: false });
        }
    }
    used.sort_unstable();
    used.dedup();
    let copts = ComplementOpts { letters: Some(used), ..opts.complement.clone() };
    let mut g = complement_uca(&collection, &copts)?;
    if opts.reduce {
        g = lump_all(&merge_lang_final(&lump_final(&prune_empty(&g))));
    }
    Ok(PromiseMdp { mdp, automaton: g })
}

/// Everything produced by [`solve_odp`].
#[derive(Clone, Debug)]
pub struct OdpSolution {
    /// Optimal discounted value among valid strategies, from the initial state.
    pub value: f64,
    pub unguarded: Unguarded,
    pub promise_mdp: PromiseMdp,
    pub product: Product,
    pub lex: LexSolution,
}

impl OdpSolution {
    pub fn strategy(&self) -> &Strategy {
        &self.lex.strategy
    }

    /// (original state, tracker index, automaton state) of a product state.
    pub fn describe(&self, p: SId) -> (SId, SId, u32) {
        let (u, q) = self.product.origin[p as usize];
        (self.unguarded.origin[u as usize], u, q)
    }

    /// Memory of product state `p` as seen from the original process: the
    /// lookback tracker (one state set per DFA state) and the automaton state.
    pub fn memory(&self, p: SId) -> String {
        let (_, u, q) = self.describe(p);
        let sets: Vec<String> = self.unguarded.trackers[u as usize].iter().map(|t| format!("{t:b}")).collect();
        format!("tracker [{}], automaton {q}", sets.join(" "))
    }

    /// Name of the action played in product state `p` at step `step`.
    pub fn action_name(&self, p: SId, step: usize) -> &str {
        let m = &self.product.mdp;
        let c = self.lex.strategy.choice_at(p, step);
        &m.action_names[m.choices[p as usize][c].action as usize]
    }
}

/// Full pipeline: guards, promises, product, lexicographic solution.
pub fn solve_odp(d: &Odp, lambda: f64, eps: f64, opts: &CompileOpts) -> Result<OdpSolution> {
    let unguarded = remove_lookback(d, opts.tracker_budget)?;
    let promise_mdp = remove_lookahead(&unguarded.odp, opts)?;
    let product = product_with_nba(&promise_mdp.mdp, &promise_mdp.automaton.nba)?;
    let lex = lexicographic_solve(&product.mdp, lambda, eps)?;
    let value = lex.value(product.mdp.initial);
    Ok(OdpSolution { value, unguarded, promise_mdp, product, lex })
}

/// Checks a finite run `states[0], actions[0], states[1], ...` (action
/// indices into the state's action list) against every guard, and every
/// promise against the rest of the run followed by `suffix`.
pub fn validate_run(d: &Odp, states: &[SId], actions: &[usize], suffix: &LassoWord) -> Result<bool> {
    if states.len() != actions.len() + 1 || states.iter().any(|&s| s as usize >= d.num_states()) {
        return Err(Error::InvalidModel("malformed run".into()));
    }
    let labels: Vec<Letter> = states.iter().map(|&s| d.labels[s as usize]).collect();
    for (i, &ai) in actions.iter().enumerate() {
        let a = d.actions[states[i] as usize]
            .get(ai)
            .ok_or_else(|| Error::InvalidModel(format!("no action {ai} at step {i}")))?;
        if !a.outcomes.iter().any(|o| o.target == states[i + 1]) {
            return Err(Error::InvalidModel(format!("step {i} moves to an impossible successor")));
        }
        if let (Some(b), Some(dfa)) = (a.guard, &d.lookback) {
            let set = labels[..=i].iter().fold(1u64 << b, |set, &l| dfa_post(dfa, set, l));
            if set & final_mask(dfa) == 0 {
                return Ok(false);
            }
        }
        if let (Some(p), Some(schema)) = (a.promise, &d.lookahead) {
            let mut prefix = labels[i..].to_vec();
            prefix.extend_from_slice(&suffix.prefix);
            let word = LassoWord::new(prefix, suffix.cycle.clone());
            if !lasso_member_uca(&schema.instantiate(p)?, &word) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
