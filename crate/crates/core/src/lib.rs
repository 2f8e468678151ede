//! Multi-RAT traffic steering with deep Q-learning.
//!
//! A TTI-level downlink simulator for one LTE eNB overlaid with NR small
//! cells. Every flow is steered to LTE or NR by a DQN agent, a tabular
//! Q-learning agent or a threshold heuristic; the sweep harness compares them
//! on throughput and delay.

pub mod baselines;
pub mod config;
pub mod metrics;
pub mod net;
pub mod qos;
pub mod rl;
pub mod sim;
pub mod sweep;
pub mod traffic;

pub use config::{load_config, Algorithm, ConfigError, ExperimentConfig};
pub use metrics::{read_csv, summarize, write_csv, KpiRow, RunStatus, Summary};
pub use sim::{run, Agent, Mode, RunOutput, Simulation};
pub use sweep::{run_sweep, SweepOutcome};
