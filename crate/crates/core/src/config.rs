//! Experiment configuration: one JSON document fully determines a sweep.
//!
//! Every key is optional; omitted keys take the defaults below (1 eNB at
//! 40 W / 10 MHz, 4 gNBs at 20 W / 20 MHz, 30 UEs, the voice/video/gaming
//! table, loads 5–10 Mbps). Unknown keys are rejected.

use crate::baselines::{HeuristicWeights, TabularConfig};
use crate::net::Position;
use crate::qos::{QosWeights, DEFAULT_RATIO_CAP};
use crate::rl::AgentConfig;
use crate::traffic::{default_traffic_table, validate_traffic_table, TrafficClass, TrafficClassSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dqn,
    Qlearning,
    Heuristic,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Dqn, Algorithm::Qlearning, Algorithm::Heuristic];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dqn => "dqn",
            Algorithm::Qlearning => "qlearning",
            Algorithm::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected dqn, qlearning or heuristic)"))
    }
}

/// One base station. All fields are required when a cell is given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub position: Position,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    pub rbg_count: usize,
}

impl CellConfig {
    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if !(self.tx_power_w > 0.0) || !(self.bandwidth_hz > 0.0) || !(self.carrier_freq_hz > 0.0) {
            return invalid(format!("{name}: power, bandwidth and carrier frequency must be positive"));
        }
        if self.rbg_count == 0 {
            return invalid(format!("{name}: rbg_count must be at least 1"));
        }
        if !self.position.x.is_finite() || !self.position.y.is_finite() {
            return invalid(format!("{name}: position must be finite"));
        }
        Ok(())
    }
}

fn macro_cell() -> CellConfig {
    CellConfig {
        position: Position::new(0.0, 0.0),
        tx_power_w: 40.0,
        bandwidth_hz: 10e6,
        carrier_freq_hz: 3.5e9,
        rbg_count: 50,
    }
}

fn small_cell(x: f64, y: f64) -> CellConfig {
    CellConfig {
        position: Position::new(x, y),
        tx_power_w: 20.0,
        bandwidth_hz: 20e6,
        carrier_freq_hz: 0.8e9,
        rbg_count: 100,
    }
}

/// UEs are dropped uniformly over an annulus around gNB `i mod gnb_count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UePlacement {
    pub min_radius_m: f64,
    pub max_radius_m: f64,
}

impl Default for UePlacement {
    fn default() -> Self {
        Self {
            min_radius_m: 20.0,
            max_radius_m: 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub enb: CellConfig,
    pub gnbs: Vec<CellConfig>,
    pub ue_count: usize,
    pub ue_placement: UePlacement,
    pub noise_density_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub shadowing_sigma_db: f64,
    pub fast_fading: bool,
    /// Exchanges the eNB and gNB carrier frequencies at world build time.
    pub swap_carrier_frequencies: bool,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            enb: macro_cell(),
            gnbs: vec![
                small_cell(2500.0, 150.0),
                small_cell(2500.0, -150.0),
                small_cell(-2500.0, 150.0),
                small_cell(-2500.0, -150.0),
            ],
            ue_count: 30,
            ue_placement: UePlacement::default(),
            noise_density_dbm_per_hz: -174.0,
            noise_figure_db: 9.0,
            shadowing_sigma_db: 8.0,
            fast_fading: true,
            swap_carrier_frequencies: false,
        }
    }
}

impl TopologyConfig {
    /// Effective N0 in W/Hz including the receiver noise figure.
    pub fn noise_density_w_per_hz(&self) -> f64 {
        10f64.powf((self.noise_density_dbm_per_hz + self.noise_figure_db - 30.0) / 10.0)
    }

    /// Keeps the first `gnbs` small cells and sets the UE count.
    pub fn scaled(&self, ue_count: usize, gnbs: usize) -> Self {
        Self {
            ue_count,
            gnbs: self.gnbs.iter().take(gnbs).copied().collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub ttis: u64,
    pub tti_duration_s: f64,
    /// TTIs between consecutive steering decisions of a flow.
    pub decision_period: u64,
    /// TTIs of measurement behind each decision's reward.
    pub reward_window: u64,
    /// TTIs per KPI row.
    pub report_window: u64,
    /// Packets per (UE, BS) buffer.
    pub queue_capacity: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            ttis: 50_000,
            tti_duration_s: 1e-3,
            decision_period: 10,
            reward_window: 50,
            report_window: 1_000,
            queue_capacity: 1_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.decision_period == 0 || self.reward_window == 0 || self.report_window == 0 {
            return invalid("decision_period, reward_window and report_window must be at least 1");
        }
        if self.ttis > 0 && self.ttis < self.decision_period {
            return invalid("ttis must cover at least one decision period");
        }
        if !(self.tti_duration_s > 0.0) {
            return invalid("tti_duration_s must be positive");
        }
        if self.queue_capacity == 0 {
            return invalid("queue_capacity must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosConfig {
    pub weights: QosWeights,
    /// Per-class replacements for `weights`.
    pub class_weights: BTreeMap<TrafficClass, QosWeights>,
    pub ratio_cap: f64,
}

impl Default for QosConfig {
    fn default() -> Self {
        Self {
            weights: QosWeights::default(),
            class_weights: BTreeMap::new(),
            ratio_cap: DEFAULT_RATIO_CAP,
        }
    }
}

impl QosConfig {
    pub fn weights_for(&self, class: TrafficClass) -> QosWeights {
        self.class_weights.get(&class).copied().unwrap_or(self.weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologyConfig,
    pub traffic: Vec<TrafficClassSpec>,
    pub loads_bps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub simulation: SimulationConfig,
    pub qos: QosConfig,
    pub agent: AgentConfig,
    pub tabular: TabularConfig,
    pub heuristic: HeuristicWeights,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: TopologyConfig::default(),
            traffic: default_traffic_table(),
            loads_bps: vec![5e6, 6e6, 7e6, 8e6, 9e6, 10e6],
            seeds: vec![1],
            algorithms: Algorithm::ALL.to_vec(),
            simulation: SimulationConfig::default(),
            qos: QosConfig::default(),
            agent: AgentConfig::default(),
            tabular: TabularConfig::default(),
            heuristic: HeuristicWeights::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn spec(&self, class: TrafficClass) -> Option<&TrafficClassSpec> {
        self.traffic.iter().find(|s| s.class == class)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.topology;
        t.enb.validate("enb")?;
        if t.gnbs.is_empty() {
            return invalid("at least one gNB is required");
        }
        for (i, g) in t.gnbs.iter().enumerate() {
            g.validate(&format!("gnbs[{i}]"))?;
        }
        if t.ue_count == 0 {
            return invalid("ue_count must be at least 1");
        }
        let p = &t.ue_placement;
        if !(p.min_radius_m >= 0.0) || !(p.max_radius_m >= p.min_radius_m) {
            return invalid("ue_placement needs 0 <= min_radius_m <= max_radius_m");
        }
        if !(t.shadowing_sigma_db >= 0.0) {
            return invalid("shadowing_sigma_db must be non-negative");
        }
        if !t.noise_density_w_per_hz().is_finite() || t.noise_density_w_per_hz() <= 0.0 {
            return invalid("noise density must be a finite dBm/Hz value");
        }
        validate_traffic_table(&self.traffic).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.loads_bps.is_empty() || self.loads_bps.iter().any(|l| !(*l > 0.0)) {
            return invalid("loads_bps must be a non-empty list of positive loads");
        }
        if self.seeds.is_empty() {
            return invalid("seeds must not be empty");
        }
        if self.algorithms.is_empty() {
            return invalid("algorithms must not be empty");
        }
        self.simulation.validate()?;
        for w in std::iter::once(&self.qos.weights).chain(self.qos.class_weights.values()) {
            if !w.is_valid() {
                return invalid("QoS weights need w1, w2 >= 0 and w1 + w2 = 1");
            }
        }
        if !(self.qos.ratio_cap > 0.0) {
            return invalid("ratio_cap must be positive");
        }
        self.agent.validate().map_err(ConfigError::Invalid)?;
        self.tabular.validate().map_err(ConfigError::Invalid)?;
        if !self.heuristic.is_valid() {
            return invalid("heuristic weights must be non-negative");
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json(&text)
}
