//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 1–3, 7 and 8 are correctness checks and fail the process when
//! violated. Criteria 4–6 check qualitative steering behaviour at scale;
//! their lines report the measured margins either way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratsteer::baselines::{heuristic_decide, heuristic_score, HeuristicWeights, TabularAgent, TabularConfig};
use ratsteer::config::{Algorithm, ExperimentConfig};
use ratsteer::metrics::{rows_to_csv_string, summarize, KpiRow};
use ratsteer::net::{
    channel_gain, check_capacity_constraint, compute_sinr, link_capacity, path_loss_db, total_delay,
    transmission_delay, BaseStation, ChannelRealization, Packet, Position, Rat, RbgAllocation,
};
use ratsteer::qos::{delay_ratio, reward, steering_metric, throughput_ratio, KpiSample, QosWeights};
use ratsteer::rl::{AgentConfig, DqnAgent, EpsilonSchedule, Experience, QNetwork};
use ratsteer::sim::{lte_byte_share, Agent, Mode, Simulation};
use ratsteer::sweep::run_sweep;
use ratsteer::traffic::{default_traffic_table, TrafficClass};
use std::time::Instant;

struct Report {
    hard_failures: Vec<u8>,
}

impl Report {
    fn line(&mut self, id: u8, hard: bool, pass: bool, detail: String, secs: f64) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id}: {verdict} ({secs:.1}s) {detail}");
        if hard && !pass {
            self.hard_failures.push(id);
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
}

// ---------------------------------------------------------------- criterion 1

fn equation_suite() -> Vec<String> {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    let n0 = 1e-20;
    let w = 180e3;
    // Single-RBG BS whose power p satisfies p·g = k·ω·N0 for g = 1.
    let bs = |id, rat, k: f64| BaseStation::new(id, rat, k * w * n0, w, 2e9, Position::default(), 1);
    let chan = ChannelRealization::new(1, &[1, 1], n0);
    let serving = bs(0, Rat::Nr, 1.0);
    let mut alloc = RbgAllocation::with_rbg_counts(&[1, 1]);
    alloc.assign(0, 0, 0);
    check("sinr unit ratio", close(compute_sinr(0, 0, &serving, &[], &alloc, &chan), 1.0));
    let serving2 = bs(0, Rat::Nr, 2.0);
    let interferer = bs(1, Rat::Nr, 1.0);
    let mut both = alloc.clone();
    both.assign(0, 0, 1);
    check("sinr with interferer", close(compute_sinr(0, 0, &serving2, &[&interferer], &both, &chan), 1.0));
    check("capacity log2(2)", close(link_capacity(0, &serving, &[], &alloc, &chan), 180_000.0));
    let serving3 = bs(0, Rat::Nr, 3.0);
    check("capacity log2(4)", close(link_capacity(0, &serving3, &[], &alloc, &chan), 360_000.0));
    check("capacity boundary", check_capacity_constraint([(2e6, true), (3e6, true)], 5e6));
    check("capacity exceeded", !check_capacity_constraint([(2e6, true), (3.5e6, true)], 5e6));
    check("transmission delay", close(transmission_delay(1e6, 1e7), 0.1));
    check("unserved link", transmission_delay(1.0, 0.0).is_infinite());
    let p = Packet { flow: 0, class: TrafficClass::Video, size_bits: 2000, enqueue_tti: 3 };
    check("total delay", close(total_delay(&p, 1e6, 8, 1e-3), 0.005 + 0.002));
    check("LTE path loss at 1 km", close(path_loss_db(Rat::Lte, 1000.0, 2e9), 128.1));
    check("gain at 1 km", close(channel_gain(128.1, 0.0, 1.0), 10f64.powf(-12.81)));
    let table = default_traffic_table();
    let spec = |c: TrafficClass| *table.iter().find(|s| s.class == c).unwrap();
    let sample = |class, delay, throughput| KpiSample { class, bs: 0, delay, throughput, window: 50 };
    check("delay ratio 1", close(delay_ratio(&sample(TrafficClass::Voice, 0.1, 0.0), &spec(TrafficClass::Voice), 2.0), 1.0));
    check("delay ratio 0.5", close(delay_ratio(&sample(TrafficClass::Voice, 0.2, 0.0), &spec(TrafficClass::Voice), 2.0), 0.5));
    check("gaming delay ratio", close(delay_ratio(&sample(TrafficClass::Gaming, 0.04, 0.0), &spec(TrafficClass::Gaming), 2.0), 1.0));
    check("empty delay capped", delay_ratio(&sample(TrafficClass::Voice, 0.0, 0.0), &spec(TrafficClass::Voice), 2.0) == 2.0);
    check("throughput ratio 1", close(throughput_ratio(&sample(TrafficClass::Video, 0.0, 1e7), &spec(TrafficClass::Video)), 1.0));
    check("throughput ratio 0.5", close(throughput_ratio(&sample(TrafficClass::Video, 0.0, 5e6), &spec(TrafficClass::Video)), 0.5));
    check("throughput ratio 0", throughput_ratio(&sample(TrafficClass::Video, 0.0, 0.0), &spec(TrafficClass::Video)) == 0.0);
    let half = QosWeights::default();
    check("metric equal ratios", close(steering_metric(1.0, 1.0, &half), 1.0));
    check("metric degenerate", steering_metric(0.7, 1.9, &QosWeights { w1: 1.0, w2: 0.0 }) == 0.7);
    check("metric arithmetic", close(steering_metric(0.5, 1.5, &half), 1.0));
    check("sigmoid origin", reward(0.0) == 0.5);
    check("sigmoid at 1", (reward(1.0) - 0.73106).abs() < 1e-5);
    check("sigmoid below 1", reward(2.0) < 1.0);
    let hw = HeuristicWeights::default();
    check("heuristic all ones", heuristic_score(true, true, true, true, &hw) == 1.0);
    check("heuristic all zeros", heuristic_score(false, false, false, false, &hw) == 0.0);
    check("heuristic threshold", hw.threshold() == 0.5);
    check("heuristic NR branch", heuristic_decide(0.6, 0.5) == Rat::Nr);
    check("heuristic boundary", heuristic_decide(0.5, 0.5) == Rat::Lte);
    check("heuristic zero", heuristic_decide(0.0, 0.5) == Rat::Lte);
    failed
}

// ---------------------------------------------------------------- criterion 2

fn gradient_check() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let inputs = rng.random_range(1..6);
        let hidden: Vec<usize> = (0..rng.random_range(1..3)).map(|_| rng.random_range(2..8)).collect();
        let outputs = rng.random_range(2..4);
        let sizes: Vec<usize> = std::iter::once(inputs).chain(hidden).chain([outputs]).collect();
        let mut net = QNetwork::new(&sizes, &mut rng);
        let params: Vec<f64> = net.params().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        net.set_params(&params);
        let states: Vec<Vec<f64>> =
            (0..rng.random_range(1..5)).map(|_| (0..inputs).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let batch: Vec<(&[f64], usize, f64)> = states
            .iter()
            .map(|s| (s.as_slice(), rng.random_range(0..outputs), rng.random_range(-1.0..1.0)))
            .collect();
        let analytic = net.loss_and_gradients(&batch).1.flatten();
        let h = 1e-5;
        for (i, a) in analytic.iter().enumerate() {
            let mut p = params.clone();
            p[i] = params[i] + h;
            net.set_params(&p);
            let up = net.loss_and_gradients(&batch).0;
            p[i] = params[i] - h;
            net.set_params(&p);
            let down = net.loss_and_gradients(&batch).0;
            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-7);
            worst = worst.max(rel);
        }
        net.set_params(&params);
    }
    worst
}

// ---------------------------------------------------------------- criterion 3

/// States 0..=3 on a line. Action 1 moves right, action 0 moves left; action 0
/// in state 0 stays and pays 0.09. Entering state 3 pays 1 and ends the
/// episode. With γ = 0.9 staying forever in 0 is worth 0.9 against 0.81 for
/// walking right, so the optimal policy is (0 → 0, 1 → 1, 2 → 1).
fn toy_step(s: usize, a: usize) -> (usize, f64, bool) {
    match (s, a) {
        (0, 0) => (0, 0.09, false),
        (_, 0) => (s - 1, 0.0, false),
        (2, _) => (3, 1.0, true),
        (_, _) => (s + 1, 0.0, false),
    }
}

const TOY_OPTIMAL: [usize; 3] = [0, 1, 1];
const TOY_STEPS: usize = 5000;

fn one_hot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; 4];
    v[s] = 1.0;
    v
}

fn toy_dqn(seed: u64) -> bool {
    let cfg = AgentConfig {
        gamma: 0.9,
        epsilon: EpsilonSchedule { start: 1.0, end: 0.1, decay_steps: 2500 },
        learning_rate: 0.05,
        minibatch_size: 32,
        target_sync_period: 50,
        replay_capacity: 5000,
        warmup_steps: 100,
        hidden_layers: vec![16],
    };
    let mut agent = DqnAgent::new(4, 2, cfg, ChaCha8Rng::seed_from_u64(seed));
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let mut s = env_rng.random_range(0..3);
    for _ in 0..TOY_STEPS {
        let a = agent.act(&one_hot(s), true);
        let (next, r, done) = toy_step(s, a);
        agent.remember(Experience { state: one_hot(s), action: a, reward: r, next_state: one_hot(next), terminal: done });
        agent.learn().expect("toy training stays finite");
        s = if done { env_rng.random_range(0..3) } else { next };
    }
    (0..3).all(|s| agent.act(&one_hot(s), false) == TOY_OPTIMAL[s])
}

fn toy_tabular(seed: u64) -> bool {
    let cfg = TabularConfig {
        alpha: 0.1,
        gamma: 0.9,
        epsilon: EpsilonSchedule { start: 1.0, end: 0.1, decay_steps: 2500 },
        ..TabularConfig::default()
    };
    let mut agent = TabularAgent::new(cfg, ChaCha8Rng::seed_from_u64(seed));
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let mut s = env_rng.random_range(0..3);
    for _ in 0..TOY_STEPS {
        let a = agent.act_on_key(s, true);
        let (next, r, done) = toy_step(s, a);
        agent.learn(s, a, r, next);
        s = if done { env_rng.random_range(0..3) } else { next };
    }
    (0..3).all(|s| agent.act_on_key(s, false) == TOY_OPTIMAL[s])
}

// ------------------------------------------------------------ criteria 4, 5, 7

fn reproduction_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.topology = cfg.topology.scaled(10, 2);
    cfg.simulation.ttis = 50_000;
    cfg.seeds = vec![1, 2, 3];
    cfg.loads_bps = (5..=10).map(|m| m as f64 * 1e6).collect();
    cfg
}

fn steady_tail(rows: &[KpiRow], alg: Algorithm) -> Vec<KpiRow> {
    let mut out = Vec::new();
    let mut keys: Vec<(u64, u64)> = rows
        .iter()
        .filter(|r| r.algorithm == alg)
        .map(|r| (r.load_bps.to_bits(), r.seed))
        .collect();
    keys.sort();
    keys.dedup();
    for (l, s) in keys {
        let run: Vec<&KpiRow> = rows.iter().filter(|r| r.algorithm == alg && r.load_bps.to_bits() == l && r.seed == s).collect();
        let keep = (run.len() / 4).max(1);
        out.extend(run[run.len() - keep..].iter().map(|r| (*r).clone()));
    }
    out
}

// ---------------------------------------------------------------- criterion 8

fn fuzz_conservation(total_ttis: u64) -> (u64, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (mut ttis, mut violations, mut runs) = (0, 0, 0);
    while ttis < total_ttis {
        let mut cfg = ExperimentConfig::default();
        let gnbs = rng.random_range(1..=4);
        cfg.topology = cfg.topology.scaled(rng.random_range(1..=8), gnbs);
        cfg.topology.fast_fading = rng.random_bool(0.8);
        cfg.topology.shadowing_sigma_db = rng.random_range(0.0..12.0);
        cfg.simulation.queue_capacity = rng.random_range(1..=60);
        cfg.simulation.decision_period = rng.random_range(1..=20);
        cfg.simulation.reward_window = rng.random_range(1..=80);
        cfg.simulation.report_window = rng.random_range(1..=500);
        cfg.agent.replay_capacity = rng.random_range(1..=300);
        cfg.agent.minibatch_size = rng.random_range(1..=16);
        cfg.agent.warmup_steps = rng.random_range(0..=50);
        cfg.agent.hidden_layers = vec![8];
        let alg = Algorithm::ALL[rng.random_range(0..3)];
        let load = rng.random_range(0.5e6..40e6);
        let len = rng.random_range(500..8000).min(total_ttis - ttis);
        let mut sim = Simulation::new(&cfg, alg, load, rng.random()).expect("fuzz config is valid");
        if rng.random_bool(0.3) {
            // Deactivate a few flows mid-run and burst others.
            for f in 0..sim.world().flows.len() {
                if rng.random_bool(0.3) {
                    sim.world_mut().set_active(f, false);
                }
            }
        }
        for t in 0..len {
            if t % 97 == 0 {
                let f = rng.random_range(0..sim.world().flows.len());
                if sim.world().is_active(f) {
                    sim.push_arrivals(f, rng.random_range(0..200));
                }
            }
            sim.step().expect("fuzz runs stay finite");
            if !sim.world().is_conserved() {
                violations += 1;
            }
            if let Agent::Dqn(a) = sim.agent() {
                let m = a.memory();
                if m.len() > m.capacity() || m.len() as u64 != m.pushed().min(m.capacity() as u64) {
                    violations += 1;
                }
            }
        }
        ttis += len;
        runs += 1;
    }
    (ttis, runs, violations)
}

fn main() {
    let mut report = Report { hard_failures: Vec::new() };

    let t = Instant::now();
    let failed = equation_suite();
    let secs = t.elapsed().as_secs_f64();
    report.line(1, true, failed.is_empty() && secs < 1.0, format!("failed examples: {failed:?}"), secs);

    let t = Instant::now();
    let worst = gradient_check();
    let secs = t.elapsed().as_secs_f64();
    report.line(2, true, worst < 1e-5 && secs < 10.0, format!("max relative error {worst:.2e}"), secs);

    let t = Instant::now();
    let dqn: Vec<bool> = (1..=5).map(toy_dqn).collect();
    let tab: Vec<bool> = (1..=5).map(toy_tabular).collect();
    let secs = t.elapsed().as_secs_f64();
    let ok = dqn.iter().chain(&tab).all(|b| *b) && secs < 30.0;
    report.line(3, true, ok, format!("dqn seeds {dqn:?}, tabular seeds {tab:?}"), secs);

    let cfg = reproduction_config();
    let t = Instant::now();
    let sweep = run_sweep(&cfg).expect("reproduction config is valid");
    let sweep_secs = t.elapsed().as_secs_f64();
    let rows = sweep.rows;
    let summary = summarize(&rows).expect("full grid");
    print!("{summary}");
    let mut worst_thr = f64::INFINITY;
    let mut worst_delay = f64::NEG_INFINITY;
    let mut direction = true;
    for d in &summary.deltas {
        worst_thr = worst_thr.min(d.throughput);
        worst_delay = worst_delay.max(d.delay);
        direction &= d.throughput > 0.0 && d.delay < 0.0;
    }
    let magnitude = worst_thr >= 0.03 && worst_delay <= -0.10;
    report.line(
        4,
        false,
        direction && magnitude && sweep.failures.is_empty(),
        format!(
            "direction at every load: {direction}; worst throughput delta {:+.2}%, worst delay delta {:+.2}% (targets >= +3%, <= -10%)",
            100.0 * worst_thr,
            100.0 * worst_delay
        ),
        sweep_secs,
    );

    let tail = steady_tail(&rows, Algorithm::Dqn);
    let share = |c| lte_byte_share(&tail, c).unwrap_or(f64::NAN);
    let (voice, video, gaming) = (share(TrafficClass::Voice), share(TrafficClass::Video), share(TrafficClass::Gaming));
    report.line(
        5,
        false,
        voice > 0.5 && video < 0.5 && gaming < 0.5,
        format!(
            "eNB byte share: voice {:.1}% (> 50%), video {:.1}% (< 50%), gaming {:.1}% (< 50%)",
            100.0 * voice,
            100.0 * video,
            100.0 * gaming
        ),
        0.0,
    );

    let t = Instant::now();
    let (ok, detail) = load_shedding(&cfg);
    report.line(6, false, ok, detail, t.elapsed().as_secs_f64());

    let t = Instant::now();
    let again = run_sweep(&cfg).expect("reproduction config is valid");
    let identical = rows_to_csv_string(&rows) == rows_to_csv_string(&again.rows);
    report.line(7, true, identical, format!("{} rows compared", rows.len()), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let (ttis, runs, violations) = fuzz_conservation(100_000);
    report.line(
        8,
        true,
        violations == 0 && ttis >= 100_000,
        format!("{ttis} TTIs over {runs} randomized runs, {violations} violations"),
        t.elapsed().as_secs_f64(),
    );

    if !report.hard_failures.is_empty() {
        eprintln!("correctness criteria failed: {:?}", report.hard_failures);
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- criterion 6

/// Trains a DQN, freezes it, then bursts every flow the policy keeps on the
/// busiest base station just after a decision boundary. Passes when each
/// scenario whose queue starts below the cutoff sees an affected flow change
/// RAT within two decision periods of the crossing.
fn load_shedding(base: &ExperimentConfig) -> (bool, String) {
    const CUTOFF: usize = 50;
    let mut cfg = base.clone();
    cfg.topology = cfg.topology.scaled(6, 2);
    let period = cfg.simulation.decision_period;
    let mut outcomes = Vec::new();
    for seed in 1..=5u64 {
        let mut sim = Simulation::new(&cfg, Algorithm::Dqn, 6e6, seed).expect("valid config");
        sim.run_for(20_000).expect("training stays finite");
        sim.set_mode(Mode::Frozen);
        sim.run_for(1_000).expect("frozen run stays finite");
        while sim.tti() % period != 1 {
            sim.step().expect("frozen run stays finite");
        }
        let w = sim.world();
        let on = |f: usize, b: usize| {
            w.route(f).is_some_and(|rat| w.bss[b].rat == rat && w.serving_bs(w.flows[f].ue, rat) == b)
        };
        let b = (0..w.bss.len())
            .max_by_key(|&b| ((0..w.flows.len()).filter(|&f| on(f, b)).count(), std::cmp::Reverse(b)))
            .expect("at least one BS");
        let affected: Vec<usize> = (0..w.flows.len()).filter(|&f| on(f, b)).collect();
        let before: Vec<_> = affected.iter().map(|&f| w.route(f)).collect();
        if w.bss[b].queued_packets() > CUTOFF {
            outcomes.push(format!("seed {seed}: already congested"));
            continue;
        }
        for &f in &affected {
            sim.push_arrivals(f, 60);
        }
        let (mut crossed, mut switched) = (None, None);
        for _ in 0..3 * period {
            let t = sim.tti();
            sim.step().expect("frozen run stays finite");
            if crossed.is_none() && sim.world().bss[b].queued_packets() > CUTOFF {
                crossed = Some(t);
            }
            let moved = affected.iter().zip(&before).any(|(&f, r)| sim.world().route(f) != *r);
            if let (Some(c), None, true) = (crossed, switched, moved) {
                switched = Some(t - c);
            }
        }
        let ok = matches!((crossed, switched), (Some(_), Some(d)) if d <= 2 * period);
        outcomes.push(format!("seed {seed}: {} after {switched:?} TTIs", if ok { "switch" } else { "no switch" }));
    }
    let tested: Vec<&String> = outcomes.iter().filter(|o| !o.contains("congested")).collect();
    let ok = !tested.is_empty() && tested.iter().all(|o| o.contains(": switch"));
    (ok, outcomes.join("; "))
}
