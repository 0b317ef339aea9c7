//! Omega-regular decision processes end to end.
//!
//! Promises made by a decision maker are collected into a universal
//! co-Büchi automaton, complemented into a good-for-MDPs Büchi automaton by a
//! rank-based construction, and the resulting product MDP is solved (or
//! learned) lexicographically: almost-sure satisfaction of all promises
//! first, discounted reward second.

pub mod automata;
pub mod collect;
pub mod complement;
pub mod error;
pub mod hoa;
pub mod mdp;
pub mod odp;
pub mod reduce;
pub mod rl;
pub mod streett;

pub use error::{Error, Result};
