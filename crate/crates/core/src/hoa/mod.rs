//! Reading and writing automata in the HOA v1 format.
//!
//! Only Büchi (`Inf(0)`) and co-Büchi (`Fin(0)`) acceptance are accepted on
//! input, with state- or transition-based marks. Symbolic edge labels are
//! expanded into explicit letters. Two custom headers carry promise
//! alphabets and the designated initial state of collection automata:
//!
//! ```text
//! odp-promises: <base AP count> "<single|at-most-one|sets>" <schema states>
//! odp-designated: <state>
//! ```
//!
//! Promise codes occupy the trailing APs, least significant bit first.

mod lexer;
mod parse;

use std::fmt::Write;

use crate::automata::{Automaton, Kind, Letter};
use crate::error::{Error, Result};

pub use parse::{parse_hoa, parse_hoa_with_cap};

/// Canonical HOA text: states in id order, edges in `(letter, target)`
/// order, explicit full-cube labels, transition-based acceptance.
pub fn emit_hoa(a: &Automaton) -> Result<String> {
    let (acc_name, acceptance) = match a.kind {
        Kind::Nba | Kind::Dba => ("Buchi", "1 Inf(0)"),
        Kind::Uca => ("co-Buchi", "1 Fin(0)"),
        Kind::Dfa => return Err(Error::Unsupported("HOA emission of finite automata".into())),
    };
    let mut out = String::new();
    writeln!(out, "HOA: v1").unwrap();
    writeln!(out, "States: {}", a.num_states()).unwrap();
    for q in &a.initial {
        writeln!(out, "Start: {q}").unwrap();
    }
    write!(out, "AP: {}", a.alphabet.num_aps()).unwrap();
    for ap in a.alphabet.aps() {
        write!(out, " \"{}\"", escape(ap)).unwrap();
    }
    out.push('\n');
    writeln!(out, "acc-name: {acc_name}").unwrap();
    writeln!(out, "Acceptance: {acceptance}").unwrap();
    writeln!(out, "properties: trans-labels explicit-labels trans-acc").unwrap();
    if let Some(layout) = a.alphabet.promise_layout() {
        writeln!(out, "odp-promises: {} \"{}\" {}", a.alphabet.base_aps(), layout.mode.as_str(), layout.count).unwrap();
    }
    if let Some(d) = a.designated {
        writeln!(out, "odp-designated: {d}").unwrap();
    }
    writeln!(out, "--BODY--").unwrap();
    for q in a.states() {
        writeln!(out, "State: {q}").unwrap();
        for e in a.edges(q) {
            let mark = if e.marked { " {0}" } else { "" };
            writeln!(out, "[{}] {}{}", cube(e.letter, a.alphabet.num_aps()), e.target, mark).unwrap();
        }
    }
    writeln!(out, "--END--").unwrap();
    Ok(out)
}

fn cube(letter: Letter, aps: usize) -> String {
    if aps == 0 {
        return "t".into();
    }
    (0..aps)
        .map(|i| if letter >> i & 1 == 1 { i.to_string() } else { format!("!{i}") })
        .collect::<Vec<_>>()
        .join("&")
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
