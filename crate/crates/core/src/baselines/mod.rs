//! Baseline steering policies.

mod heuristic;
mod tabular;

pub use heuristic::{
    heuristic_decide, heuristic_score, HeuristicInputs, HeuristicPolicy, HeuristicWeights,
};
pub use tabular::{
    Discretizer, QTable, TabularAgent, TabularConfig, QUEUE_LEVELS, SINR_BUCKETS, STATE_COUNT,
};
