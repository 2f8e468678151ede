//! Deep Q-learning building blocks: replay memory, dense Q-network with
//! backpropagation, ε-greedy selection, TD targets and target-network sync.

mod dqn;
mod network;
mod replay;

pub use dqn::{
    argmax, select_action, sync_target, td_target, train_step, AgentConfig, DqnAgent, Divergence,
    EpsilonSchedule,
};
pub use network::{Dense, Gradients, NetworkError, QNetwork};
pub use replay::{Experience, ReplayMemory, WarmupIncomplete};
