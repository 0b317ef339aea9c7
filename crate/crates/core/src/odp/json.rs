//! JSON form of an ODP: the MDP format plus a lookback DFA schema, a
//! lookahead UCA schema and a guard and promise per action.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::automata::{Alphabet, Automaton, Kind, StateId};
use crate::error::{Error, Result};
use crate::hoa::{emit_hoa, parse_hoa};
use crate::mdp::{MdpJson, Outcome, StateJson, SuccessorJson};

use super::{Odp, OdpAction};

/// A propositional cube: listed propositions must take the given value,
/// the others are free.
pub type CubeJson = std::collections::BTreeMap<String, bool>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfaEdgeJson {
    pub from: u32,
    pub to: u32,
    #[serde(default)]
    pub when: CubeJson,
}

/// DFA schema: `{states, finals, edges: [{from, to, when: {ap: bool}}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfaJson {
    pub states: usize,
    pub finals: Vec<u32>,
    pub edges: Vec<DfaEdgeJson>,
}

impl DfaJson {
    pub fn to_automaton(&self, alphabet: &Alphabet) -> Result<Automaton> {
        let mut a = Automaton::new(Kind::Dfa, alphabet.clone(), self.states);
        for &f in &self.finals {
            a.check_state(f)?;
            a.finals[f as usize] = true;
        }
        for e in &self.edges {
            a.check_state(e.from)?;
            a.check_state(e.to)?;
            let mut care = 0u32;
            let mut value = 0u32;
            for (ap, &v) in &e.when {
                let bit = alphabet
                    .aps()
                    .iter()
                    .position(|x| x == ap)
                    .ok_or_else(|| Error::InvalidModel(format!("undeclared proposition {ap}")))?;
                care |= 1 << bit;
                if v {
                    value |= 1 << bit;
                }
            }
            for l in alphabet.letters() {
                if l & care == value {
                    a.add_edge(e.from, l, e.to, false);
                }
            }
        }
        Ok(a)
    }
}

/// A UCA schema given inline as HOA text or as a path to a HOA file
/// (relative paths are resolved against the ODP file's directory).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaRef {
    Hoa(String),
    Path(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdpActionJson {
    pub state: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<StateId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub promise: Option<StateId>,
    pub successors: Vec<SuccessorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdpJson {
    pub aps: Vec<String>,
    pub states: Vec<StateJson>,
    pub initial: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookback: Option<DfaJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookahead: Option<SchemaRef>,
    pub actions: Vec<OdpActionJson>,
}

impl OdpJson {
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Odp> {
        serde_json::from_str::<OdpJson>(text)?.to_odp(base_dir)
    }

    pub fn to_odp(&self, base_dir: Option<&Path>) -> Result<Odp> {
        let alphabet = Alphabet::new(self.aps.iter().cloned())?;
        // Reuse the MDP reader for states, labels and distributions.
        let plain = MdpJson {
            aps: Some(self.aps.clone()),
            states: self.states.clone(),
            initial: self.initial,
            actions: self
                .actions
                .iter()
                .map(|a| crate::mdp::ActionJson {
                    state: a.state,
                    name: a.name.clone(),
                    successors: a.successors.clone(),
                    reward: a.reward,
                })
                .collect(),
        }
        .to_mdp()?;
        let mut actions: Vec<Vec<OdpAction>> = vec![Vec::new(); plain.num_states()];
        let ids: Vec<u32> = self.states.iter().map(|s| s.id).collect();
        for a in &self.actions {
            let s = ids.iter().position(|&id| id == a.state).ok_or(Error::UnknownState(a.state as usize))?;
            let outcomes = a
                .successors
                .iter()
                .map(|succ| {
                    let t = ids.iter().position(|&id| id == succ.target).ok_or(Error::UnknownState(succ.target as usize))?;
                    Ok(Outcome {
                        target: t as u32,
                        prob: succ.prob,
                        reward: succ.reward.unwrap_or(0.0) + a.reward.unwrap_or(0.0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            actions[s].push(OdpAction { name: a.name.clone(), guard: a.guard, promise: a.promise, outcomes });
        }
        let lookback = self.lookback.as_ref().map(|d| d.to_automaton(&alphabet)).transpose()?;
        let lookahead = match &self.lookahead {
            None => None,
            Some(r) => {
                let text = match r {
                    SchemaRef::Hoa(t) => t.clone(),
                    SchemaRef::Path(p) => {
                        let path = match base_dir {
                            Some(dir) if Path::new(p).is_relative() => dir.join(p),
                            _ => Path::new(p).to_path_buf(),
                        };
                        std::fs::read_to_string(path)?
                    }
                };
                let a = parse_hoa(&text)?.reinterpret(Kind::Uca).as_schema();
                if !a.alphabet.same_letters(&alphabet) || a.alphabet.aps() != alphabet.aps() {
                    return Err(Error::AlphabetMismatch("lookahead propositions differ from the process".into()));
                }
                Some(a)
            }
        };
        let odp = Odp { aps: self.aps.clone(), labels: plain.labels, initial: plain.initial, actions, lookback, lookahead };
        odp.validate()?;
        Ok(odp)
    }

    /// JSON form of `d`; the lookahead schema is embedded as HOA text.
    pub fn from_odp(d: &Odp) -> Result<OdpJson> {
        let label = |l: u32| (0..d.aps.len()).filter(|&i| l >> i & 1 == 1).map(|i| d.aps[i].clone()).collect();
        let states = (0..d.num_states()).map(|s| StateJson { id: s as u32, label: label(d.labels[s]) }).collect();
        let mut actions = Vec::new();
        for (s, acts) in d.actions.iter().enumerate() {
            for a in acts {
                let successors = a
                    .outcomes
                    .iter()
                    .map(|o| SuccessorJson { target: o.target, prob: o.prob, reward: (o.reward != 0.0).then_some(o.reward) })
                    .collect();
                actions.push(OdpActionJson {
                    state: s as u32,
                    name: a.name.clone(),
                    guard: a.guard,
                    promise: a.promise,
                    successors,
                    reward: None,
                });
            }
        }
        let lookback = d.lookback.as_ref().map(|dfa| {
            let mut edges = Vec::new();
            for q in dfa.states() {
                for e in dfa.edges(q) {
                    let when = (0..d.aps.len()).map(|i| (d.aps[i].clone(), e.letter >> i & 1 == 1)).collect();
                    edges.push(DfaEdgeJson { from: q, to: e.target, when });
                }
            }
            let finals = (0..dfa.num_states() as u32).filter(|&q| dfa.finals[q as usize]).collect();
            DfaJson { states: dfa.num_states(), finals, edges }
        });
        let lookahead = d.lookahead.as_ref().map(emit_hoa).transpose()?.map(SchemaRef::Hoa);
        Ok(OdpJson { aps: d.aps.clone(), states, initial: d.initial, lookback, lookahead, actions })
    }
}
