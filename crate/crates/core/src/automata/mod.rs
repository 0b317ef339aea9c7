//! Alphabets, explicit ω-automata with transition-based acceptance, and the
//! graph primitives (SCCs, emptiness, lasso membership) shared by every
//! other module.

mod alphabet;
mod automaton;
pub mod lasso;
mod ops;
mod random;
pub mod scc;

pub use alphabet::{Alphabet, Letter, Promise, PromiseLayout, PromiseMode, DEFAULT_LETTER_CAP};
pub use automaton::{Automaton, Edge, Kind, StateId};
pub use lasso::{canonical_lassos, lasso_member_nba, lasso_member_uca, LassoChecker, LassoWord};
pub use ops::{
    empty, intersect_nba, is_nonempty, is_strongly_limit_deterministic, marked_sccs, nonempty_states, trim_empty,
    universal, SldReport,
};
pub use random::random_automaton;
