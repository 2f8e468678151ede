//! Simulation engine: world state, per-TTI loop and run driver.

mod engine;
mod state;
mod world;

pub use engine::{
    lte_byte_share, run, Agent, DecisionRecord, Mode, RunError, RunLabel, RunOutput, Simulation,
};
pub use state::{action_to_rat, rat_to_action, StateEncoder, SteeringState, ACTION_COUNT, STATE_DIM};
pub use world::{stream_rng, Delivery, Stream, TtiOutcome, World};
