//! JSON exchange format for MDPs and strategies.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Choice, Mdp, Outcome, Strategy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub id: u32,
    #[serde(default)]
    pub label: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessorJson {
    pub target: u32,
    pub prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionJson {
    pub state: u32,
    pub name: String,
    pub successors: Vec<SuccessorJson>,
    /// Added to every successor's reward.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
}

/// `{aps?, states: [{id, label}], initial, actions: [{state, name,
/// successors: [{target, prob, reward?}], reward?}]}`. State ids are
/// arbitrary; without `aps` the propositions are collected from the labels
/// in order of appearance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aps: Option<Vec<String>>,
    pub states: Vec<StateJson>,
    pub initial: u32,
    pub actions: Vec<ActionJson>,
}

impl MdpJson {
    pub fn parse(text: &str) -> Result<Mdp> {
        serde_json::from_str::<MdpJson>(text)?.to_mdp()
    }

    pub fn to_mdp(&self) -> Result<Mdp> {
        let aps = match &self.aps {
            Some(aps) => aps.clone(),
            None => {
                let mut aps: Vec<String> = Vec::new();
                for s in &self.states {
                    for l in &s.label {
                        if !aps.contains(l) {
                            aps.push(l.clone());
                        }
                    }
                }
                aps
            }
        };
        if aps.len() > 24 {
            return Err(Error::AlphabetTooLarge { letters: 1 << aps.len().min(63), cap: 1 << 24 });
        }
        let mut m = Mdp::new(aps);
        let mut index: FxHashMap<u32, u32> = FxHashMap::default();
        for s in &self.states {
            let mut label = 0;
            for l in &s.label {
                let bit = m
                    .aps
                    .iter()
                    .position(|a| a == l)
                    .ok_or_else(|| Error::InvalidModel(format!("undeclared proposition {l}")))?;
                label |= 1 << bit;
            }
            if index.insert(s.id, m.add_state(label)).is_some() {
                return Err(Error::InvalidModel(format!("duplicate state id {}", s.id)));
            }
        }
        let lookup = |id: u32| index.get(&id).copied().ok_or(Error::UnknownState(id as usize));
        m.initial = lookup(self.initial)?;
        for a in &self.actions {
            let s = lookup(a.state)?;
            let action = m.action_id(&a.name);
            let mut outcomes = Vec::new();
            for succ in &a.successors {
                let reward = succ.reward.unwrap_or(0.0) + a.reward.unwrap_or(0.0);
                outcomes.push(Outcome { target: lookup(succ.target)?, prob: succ.prob, reward });
            }
            m.add_choice(s, Choice { action, outcomes, letter: None, accepting: false });
        }
        m.validate()?;
        Ok(m)
    }

    pub fn from_mdp(m: &Mdp) -> MdpJson {
        let label = |l: u32| (0..m.aps.len()).filter(|&i| l >> i & 1 == 1).map(|i| m.aps[i].clone()).collect();
        let states = (0..m.num_states()).map(|s| StateJson { id: s as u32, label: label(m.labels[s]) }).collect();
        let mut actions = Vec::new();
        for (s, cs) in m.choices.iter().enumerate() {
            for c in cs {
                let successors = c
                    .outcomes
                    .iter()
                    .map(|o| SuccessorJson {
                        target: o.target,
                        prob: o.prob,
                        reward: (o.reward != 0.0).then_some(o.reward),
                    })
                    .collect();
                actions.push(ActionJson {
                    state: s as u32,
                    name: m.action_names[c.action as usize].clone(),
                    successors,
                    reward: None,
                });
            }
        }
        MdpJson { aps: Some(m.aps.clone()), states, initial: m.initial, actions }
    }
}

/// A strategy in readable form. A switching strategy lists every state
/// twice, with memory `before` and `after` the switch step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyJson {
    /// `positional` or `switching`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub switch_step: Option<usize>,
    pub choices: Vec<StrategyEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub state: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub memory: Option<String>,
    pub action: String,
}

impl StrategyJson {
    /// `describe(s)` maps a state of `m` to a state of some original model
    /// and the memory that distinguishes it; `None` keeps `s` itself.
    pub fn new(m: &Mdp, strategy: &Strategy, describe: impl Fn(u32) -> Option<(u32, String)>) -> StrategyJson {
        let name = |s: usize, step: usize| m.action_names[m.choices[s][strategy.choice_at(s as u32, step)].action as usize].clone();
        let mut choices = Vec::new();
        for s in 0..m.num_states() {
            let (state, memory) = describe(s as u32).map_or((s as u32, None), |(o, mem)| (o, Some(mem)));
            let with_phase = |phase: &str| Some(memory.as_ref().map_or(phase.to_string(), |mem| format!("{mem}, {phase}")));
            match strategy {
                Strategy::Positional { .. } => choices.push(StrategyEntry { state, memory: memory.clone(), action: name(s, 0) }),
                Strategy::Switching { .. } => {
                    choices.push(StrategyEntry { state, memory: with_phase("before"), action: name(s, 0) });
                    choices.push(StrategyEntry { state, memory: with_phase("after"), action: name(s, usize::MAX) });
                }
            }
        }
        let (kind, switch_step) = match strategy {
            Strategy::Positional { .. } => ("positional", None),
            Strategy::Switching { switch_step, .. } => ("switching", Some(*switch_step)),
        };
        StrategyJson { kind: kind.into(), switch_step, choices }
    }
}
