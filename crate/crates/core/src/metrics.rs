//! KPI rows, their CSV form, and steady-state comparison tables.

use crate::config::Algorithm;
use crate::net::Rat;
use crate::traffic::TrafficClass;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Diverged,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Ok => "ok",
            RunStatus::Diverged => "diverged",
        })
    }
}

impl FromStr for RunStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ok" => Ok(RunStatus::Ok),
            "diverged" => Ok(RunStatus::Diverged),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

/// KPIs of one reporting window of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiRow {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub load_bps: f64,
    pub window: u64,
    pub status: RunStatus,
    /// Delivered bits over all UEs and RATs divided by the window duration.
    pub throughput_bps: f64,
    /// Mean delay of all packets delivered in the window.
    pub mean_delay_s: f64,
    pub class_delay_s: [f64; TrafficClass::COUNT],
    /// Bytes delivered per class and RAT.
    pub bytes: [[u64; 2]; TrafficClass::COUNT],
    pub mean_reward: f64,
    pub drops: u64,
    pub capacity_violations: u64,
    /// Delivered packets whose delay exceeded their class budget.
    pub latency_violations: u64,
}

impl KpiRow {
    pub fn empty(algorithm: Algorithm, seed: u64, load_bps: f64, window: u64) -> Self {
        Self {
            algorithm,
            seed,
            load_bps,
            window,
            status: RunStatus::Ok,
            throughput_bps: 0.0,
            mean_delay_s: 0.0,
            class_delay_s: [0.0; TrafficClass::COUNT],
            bytes: [[0; 2]; TrafficClass::COUNT],
            mean_reward: 0.0,
            drops: 0,
            capacity_violations: 0,
            latency_violations: 0,
        }
    }

    /// Share of a class's bytes served by `rat`; `None` when nothing was served.
    pub fn rat_share(&self, class: TrafficClass, rat: Rat) -> Option<f64> {
        let b = self.bytes[class.index()];
        let total = b[0] + b[1];
        (total > 0).then(|| b[rat.index()] as f64 / total as f64)
    }
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "algorithm",
        "seed",
        "load_bps",
        "window",
        "status",
        "throughput_bps",
        "mean_delay_s",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for c in TrafficClass::ALL {
        h.push(format!("delay_{c}_s"));
    }
    for c in TrafficClass::ALL {
        for r in Rat::ALL {
            h.push(format!("bytes_{c}_{r}"));
        }
    }
    for s in ["mean_reward", "drops", "capacity_violations", "latency_violations"] {
        h.push(s.to_string());
    }
    h
}

fn to_record(row: &KpiRow) -> Vec<String> {
    let mut r = vec![
        row.algorithm.to_string(),
        row.seed.to_string(),
        row.load_bps.to_string(),
        row.window.to_string(),
        row.status.to_string(),
        row.throughput_bps.to_string(),
        row.mean_delay_s.to_string(),
    ];
    r.extend(row.class_delay_s.iter().map(f64::to_string));
    r.extend(row.bytes.iter().flatten().map(u64::to_string));
    r.push(row.mean_reward.to_string());
    r.push(row.drops.to_string());
    r.push(row.capacity_violations.to_string());
    r.push(row.latency_violations.to_string());
    r
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: expected {expected:?}")]
    Header { expected: Vec<String> },
    #[error("line {line}: {message}")]
    Field { line: u64, message: String },
    #[error("summary needs at least two algorithms, found {0}")]
    TooFewAlgorithms(usize),
    #[error("summary needs dqn rows to compare against")]
    NoDqn,
    #[error("algorithms do not share a (load, seed) grid; missing cells: {}", .0.join(", "))]
    MismatchedGrid(Vec<String>),
}

/// Sorts by (algorithm, load, seed, window) and writes CSV with LF endings.
pub fn write_csv<W: Write>(rows: &[KpiRow], out: W) -> Result<(), MetricsError> {
    let mut sorted: Vec<&KpiRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.algorithm
            .cmp(&b.algorithm)
            .then(a.load_bps.total_cmp(&b.load_bps))
            .then(a.seed.cmp(&b.seed))
            .then(a.window.cmp(&b.window))
    });
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(csv_header())?;
    for row in sorted {
        w.write_record(to_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_to_csv_string(rows: &[KpiRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<KpiRow>, MetricsError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let expected = csv_header();
    if rd.headers()?.iter().ne(expected.iter().map(String::as_str)) {
        return Err(MetricsError::Header { expected });
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| MetricsError::Field { line, message };
        let mut it = rec.iter();
        let mut next = |name: &str| it.next().ok_or_else(|| bad(format!("missing {name}")));
        fn num<T: FromStr>(s: &str, name: &str, line: u64) -> Result<T, MetricsError> {
            s.parse().map_err(|_| MetricsError::Field {
                line,
                message: format!("cannot parse {name} from `{s}`"),
            })
        }
        let algorithm = next("algorithm")?.parse::<Algorithm>().map_err(bad)?;
        let seed = num(next("seed")?, "seed", line)?;
        let load_bps = num(next("load_bps")?, "load_bps", line)?;
        let window = num(next("window")?, "window", line)?;
        let status = next("status")?.parse::<RunStatus>().map_err(bad)?;
        let throughput_bps = num(next("throughput")?, "throughput", line)?;
        let mean_delay_s = num(next("delay")?, "delay", line)?;
        let mut row = KpiRow {
            status,
            throughput_bps,
            mean_delay_s,
            ..KpiRow::empty(algorithm, seed, load_bps, window)
        };
        for d in &mut row.class_delay_s {
            *d = num(next("class delay")?, "class delay", line)?;
        }
        for b in row.bytes.iter_mut().flatten() {
            *b = num(next("bytes")?, "bytes", line)?;
        }
        row.mean_reward = num(next("mean_reward")?, "mean_reward", line)?;
        row.drops = num(next("drops")?, "drops", line)?;
        row.capacity_violations = num(next("capacity_violations")?, "capacity_violations", line)?;
        row.latency_violations = num(next("latency_violations")?, "latency_violations", line)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Steady-state means of one (algorithm, load) cell, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub throughput_bps: f64,
    pub mean_delay_s: f64,
    /// Share of each class's bytes served by the eNB, when any were served.
    pub lte_share: [Option<f64>; TrafficClass::COUNT],
}

/// Relative change of DQN over one baseline at one load.
#[derive(Debug, Clone, PartialEq)]
pub struct Delta {
    pub load_bps: f64,
    pub baseline: Algorithm,
    pub throughput: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub steady: BTreeMap<(Algorithm, u64), SteadyState>,
    pub deltas: Vec<Delta>,
}

impl Summary {
    pub fn get(&self, alg: Algorithm, load_bps: f64) -> Option<&SteadyState> {
        self.steady.get(&(alg, load_bps.to_bits()))
    }

    pub fn loads(&self) -> Vec<f64> {
        let set: BTreeSet<u64> = self.steady.keys().map(|k| k.1).collect();
        let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "algorithm,load_bps,throughput_bps,mean_delay_s,voice_lte_share,video_lte_share,gaming_lte_share")?;
        for ((alg, load), s) in &self.steady {
            let share = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.4}"));
            writeln!(
                f,
                "{alg},{},{:.1},{:.6},{},{},{}",
                f64::from_bits(*load),
                s.throughput_bps,
                s.mean_delay_s,
                share(s.lte_share[0]),
                share(s.lte_share[1]),
                share(s.lte_share[2]),
            )?;
        }
        writeln!(f)?;
        writeln!(f, "baseline,load_bps,dqn_throughput_delta_pct,dqn_delay_delta_pct")?;
        for d in &self.deltas {
            writeln!(f, "{},{},{:+.2},{:+.2}", d.baseline, d.load_bps, 100.0 * d.throughput, 100.0 * d.delay)?;
        }
        Ok(())
    }
}

fn relative(new: f64, base: f64) -> f64 {
    if base == 0.0 {
        if new == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(new)
        }
    } else {
        (new - base) / base
    }
}

/// Per (algorithm, load): the mean over seeds of each run's mean over its
/// last 25% of windows (at least one). Deltas compare DQN to every other
/// algorithm present.
pub fn summarize(rows: &[KpiRow]) -> Result<Summary, MetricsError> {
    // (alg, load bits, seed) -> windows in order
    let mut runs: BTreeMap<(Algorithm, u64, u64), Vec<&KpiRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status == RunStatus::Ok) {
        runs.entry((r.algorithm, r.load_bps.to_bits(), r.seed)).or_default().push(r);
    }
    let algs: BTreeSet<Algorithm> = runs.keys().map(|k| k.0).collect();
    if algs.len() < 2 {
        return Err(MetricsError::TooFewAlgorithms(algs.len()));
    }
    let grid: BTreeSet<(u64, u64)> = runs.keys().map(|k| (k.1, k.2)).collect();
    let mut missing = Vec::new();
    for &a in &algs {
        for &(l, s) in &grid {
            if !runs.contains_key(&(a, l, s)) {
                missing.push(format!("{a}@load={},seed={s}", f64::from_bits(l)));
            }
        }
    }
    if !missing.is_empty() {
        return Err(MetricsError::MismatchedGrid(missing));
    }
    let mut acc: BTreeMap<(Algorithm, u64), (f64, f64, [[u64; 2]; 3], usize)> = BTreeMap::new();
    for ((a, l, _), mut windows) in runs {
        windows.sort_by_key(|r| r.window);
        let n = windows.len();
        let tail = &windows[n - (n / 4).max(1)..];
        let k = tail.len() as f64;
        let e = acc.entry((a, l)).or_insert((0.0, 0.0, [[0; 2]; 3], 0));
        e.0 += tail.iter().map(|r| r.throughput_bps).sum::<f64>() / k;
        e.1 += tail.iter().map(|r| r.mean_delay_s).sum::<f64>() / k;
        for r in tail {
            for c in 0..3 {
                for rat in 0..2 {
                    e.2[c][rat] += r.bytes[c][rat];
                }
            }
        }
        e.3 += 1;
    }
    let steady: BTreeMap<(Algorithm, u64), SteadyState> = acc
        .into_iter()
        .map(|(key, (t, d, bytes, seeds))| {
            let lte_share = std::array::from_fn(|c| {
                let total = bytes[c][0] + bytes[c][1];
                (total > 0).then(|| bytes[c][0] as f64 / total as f64)
            });
            let s = seeds as f64;
            (key, SteadyState { throughput_bps: t / s, mean_delay_s: d / s, lte_share })
        })
        .collect();
    let mut deltas = Vec::new();
    if algs.contains(&Algorithm::Dqn) {
        let loads: BTreeSet<u64> = grid.iter().map(|g| g.0).collect();
        for &l in &loads {
            let dqn = &steady[&(Algorithm::Dqn, l)];
            for &b in algs.iter().filter(|&&a| a != Algorithm::Dqn) {
                let base = &steady[&(b, l)];
                deltas.push(Delta {
                    load_bps: f64::from_bits(l),
                    baseline: b,
                    throughput: relative(dqn.throughput_bps, base.throughput_bps),
                    delay: relative(dqn.mean_delay_s, base.mean_delay_s),
                });
            }
        }
        deltas.sort_by(|a, b| a.baseline.cmp(&b.baseline).then(a.load_bps.total_cmp(&b.load_bps)));
    }
    Ok(Summary { steady, deltas })
}
