//! The biolab case study: a grid-world ODP, a simulator interface for
//! product MDPs, lexicographic Q-learning and strategy rendering.

mod biolab;
mod learn;
mod render;

pub use biolab::{
    build_biolab, promise, Biolab, BiolabMap, BiolabParams, Cell, Dir, Position, APS, DEFAULT_MAP, GUARD_FROM_CLEAN,
};
pub use learn::{
    bellman_residual, episode_support, lex_q_learn, random_coverage, rollout_score, LexQConfig, LexQTables, RolloutScore,
    Sampler, Transition,
};
pub use render::render_policy;
