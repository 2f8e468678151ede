//! Sweeps over (algorithm × load × seed).

use crate::config::ExperimentConfig;
use crate::metrics::{KpiRow, RunStatus};
use crate::sim::{run, RunError};
use crate::traffic::TrafficError;

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<KpiRow>,
    /// Cells that aborted, as (algorithm, load, seed, message).
    pub failures: Vec<String>,
}

impl SweepOutcome {
    pub fn diverged(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Runs every cell in order. A diverged run keeps its completed windows and
/// adds one `diverged` row; the sweep continues.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome, TrafficError> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &alg in &cfg.algorithms {
        for &load in &cfg.loads_bps {
            for &seed in &cfg.seeds {
                match run(cfg, alg, load, seed) {
                    Ok(out) => rows.extend(out.rows),
                    Err(RunError::Traffic(e)) => return Err(e),
                    Err(RunError::Diverged { source, rows: partial }) => {
                        let window = partial.len() as u64;
                        rows.extend(partial);
                        rows.push(KpiRow {
                            status: RunStatus::Diverged,
                            ..KpiRow::empty(alg, seed, load, window)
                        });
                        failures.push(format!("{alg} load={load} seed={seed}: {source}"));
                    }
                }
            }
        }
    }
    Ok(SweepOutcome { rows, failures })
}
