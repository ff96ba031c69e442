//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use storage_coopt::battery::{greedy_backup, parse_c_rating, BatterySpec};
use storage_coopt::forecast::{fit_arma, FitOptions, HistoryBuffer};
use storage_coopt::metrics::{arbitrage_gain, loss_of_opportunity, peak_gain};
use storage_coopt::mpc::{run_mpc, ArmaForecaster, MpcConfig, MpcTemplate, PerfectForecaster};
use storage_coopt::optimizer::{
    solve_arbitrage, solve_with_backup, BackupPolicy, Incident, OptProblem, OptSolution,
};
use storage_coopt::synthetic::{generate, SyntheticConfig};
use storage_coopt::tariff::{PpcTable, RateType, TouSchedule};
use storage_coopt::timeseries::{NetLoadSeries, TimeGrid};

const GRID_STEP: f64 = 0.05;
const ORACLE_INSTANCES: usize = 200;
const BACKUP_INSTANCES: usize = 100;
const GREEDY_INSTANCES: usize = 100;
const SEEDS: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn grid(step_hours: f64, n: usize) -> TimeGrid {
    TimeGrid::new(step_hours, n, Default::default()).unwrap()
}

fn random_battery(rng: &mut ChaCha8Rng) -> BatterySpec {
    let b_min = rng.random_range(0.0..0.5);
    let b_max = b_min + rng.random_range(0.5..2.0);
    BatterySpec::new(
        rng.random_range(0.8..=1.0),
        rng.random_range(0.8..=1.0),
        -rng.random_range(0.2..0.8),
        rng.random_range(0.2..0.8),
        b_min,
        b_max,
    )
    .unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn next_charge(b: f64, s: f64, spec: &BatterySpec) -> f64 {
    if s >= 0.0 {
        b + spec.eta_ch() * s
    } else {
        b + s / spec.eta_dis()
    }
}

/// Cheapest hinge cost over actions restricted to multiples of `step`.
fn brute_force(z: &[f64], prices: &[f64], spec: &BatterySpec, b0: f64, h: f64, step: f64) -> f64 {
    let (lo, hi) = spec.step_bounds(h);
    let choices: Vec<f64> = ((lo / step).ceil() as i64..=(hi / step).floor() as i64)
        .map(|k| k as f64 * step)
        .collect();
    fn go(i: usize, b: f64, z: &[f64], p: &[f64], spec: &BatterySpec, choices: &[f64]) -> f64 {
        if i == z.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for &s in choices {
            let nb = next_charge(b, s, spec);
            if nb < spec.b_min() - 1e-9 || nb > spec.b_max() + 1e-9 {
                continue;
            }
            let cost = p[i] * (z[i] + s).max(0.0) + go(i + 1, nb, z, p, spec, choices);
            best = best.min(cost);
        }
        best
    }
    go(0, b0, z, prices, spec, &choices)
}

fn optimal(p: &OptProblem, backup: bool) -> Result<OptSolution, String> {
    let out = if backup {
        solve_with_backup(p)
    } else {
        solve_arbitrage(p)
    };
    match out {
        Ok(o) => match o.optimal() {
            Some(s) => Ok(s),
            None => Err("solver reported infeasible".into()),
        },
        Err(e) => Err(e.to_string()),
    }
}

fn tariff_table() -> Outcome {
    let expected = [
        (3.45, 0.1611, 0.1643),
        (4.60, 0.2096, 0.2132),
        (5.75, 0.2560, 0.2590),
        (6.90, 0.3040, 0.3080),
        (10.35, 0.4478, 0.4532),
        (13.80, 0.5902, 0.5981),
        (17.25, 0.7326, 0.7436),
        (20.70, 0.8751, 0.8892),
    ];
    let t = PpcTable::madeira_2018();
    let mut matched = 0;
    for (kva, single, multi) in expected {
        let s = t.daily_rate(kva, RateType::Single);
        let d = t.daily_rate(kva, RateType::Dual);
        let tr = t.daily_rate(kva, RateType::Triple);
        if s.ok() == Some(single) {
            matched += 1;
        }
        if d.ok() == Some(multi) && tr.ok() == Some(multi) {
            matched += 1;
        }
    }
    outcome(matched == 16, format!("{matched}/16 entries exact"))
}

fn peak_gain_arithmetic() -> Outcome {
    let t = PpcTable::madeira_2018();
    let cases = [
        (10.35, 6.9, 1.0, 0.144),
        (10.35, 5.75, 1.0, 0.192),
        (10.35, 3.45, 1.0, 0.287),
        (17.25, 13.8, 30.0, 4.27),
        (17.25, 10.35, 30.0, 8.54),
    ];
    let mut worst: f64 = 0.0;
    for (before, after, days, want) in cases {
        match peak_gain(&t, before, after, RateType::Single, days) {
            Ok(g) => worst = worst.max((g - want).abs()),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(
        worst <= 0.005,
        format!("max deviation {worst:.4} euros (tol 0.005)"),
    )
}

fn loo_arithmetic() -> Outcome {
    match loss_of_opportunity(5.01, 5.50) {
        Ok(v) => outcome((v - 0.0891).abs() <= 1e-4, format!("LoO = {v:.5}")),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn lp_vs_oracle(complementarity: &mut Vec<String>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_above: f64 = f64::NEG_INFINITY;
    let mut worst_below_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..ORACLE_INSTANCES {
        let n = rng.random_range(1..=4);
        let spec = random_battery(&mut rng);
        let b0 = rng.random_range(spec.b_min()..=spec.b_max());
        let z = random_vec(&mut rng, n, -1.5, 1.5);
        let prices = random_vec(&mut rng, n, 0.05, 0.3);
        let p = OptProblem::new(
            NetLoadSeries::new(z.clone()).unwrap(),
            prices.clone(),
            spec,
            b0,
            grid(1.0, n),
        )
        .unwrap();
        let sol = match optimal(&p, false) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        for (i, v) in &sol.complementarity_violations {
            complementarity.push(format!("oracle instance {k} step {i}: {v:e}"));
        }
        let disc = brute_force(&z, &prices, &spec, b0, 1.0, GRID_STEP);
        // Moving each action to a neighbouring grid point changes the
        // billed energy by at most one grid step per step, amplified by the
        // round-trip losses it carries forward.
        let lipschitz = n as f64 * prices.iter().cloned().fold(0.0, f64::max)
            / (spec.eta_ch() * spec.eta_dis());
        let bound = lipschitz * GRID_STEP;
        let above = sol.objective - disc;
        worst_above = worst_above.max(above);
        worst_below_ratio = worst_below_ratio.max((disc - sol.objective) / bound);
        if above > 1e-6 {
            failures.push(format!(
                "instance {k}: LP {} above grid optimum {disc}",
                sol.objective
            ));
        }
        if disc - sol.objective > bound {
            failures.push(format!(
                "instance {k}: grid optimum {disc} more than {bound} above LP {}",
                sol.objective
            ));
        }
    }
    let detail = format!(
        "{ORACLE_INSTANCES} instances, max LP - grid = {worst_above:.2e}, max gap/bound = {worst_below_ratio:.3}"
    );
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join("; ")))
    }
}

fn backup_satisfaction(complementarity: &mut Vec<String>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut worst_shortfall: f64 = f64::NEG_INFINITY;
    let mut worst_equal: f64 = 0.0;
    let mut incidents_checked = 0;
    for k in 0..BACKUP_INSTANCES {
        let n = rng.random_range(2..=24);
        let h = if rng.random_bool(0.5) { 0.25 } else { 1.0 };
        let spec = random_battery(&mut rng);
        let b0 = rng.random_range(spec.b_min()..=spec.b_max());
        let z = random_vec(&mut rng, n, -1.5 * h, 2.0 * h);
        let prices = random_vec(&mut rng, n, 0.05, 0.3);
        let outage = random_vec(&mut rng, n, 0.0, 0.05);
        let base =
            OptProblem::new(NetLoadSeries::new(z).unwrap(), prices, spec, b0, grid(h, n)).unwrap();

        // Highest charge reachable after each step.
        let mut reach = Vec::with_capacity(n);
        let mut b = b0;
        for _ in 0..n {
            b = (b + spec.delta_max() * h).min(spec.b_max());
            reach.push(b);
        }
        let incidents: Vec<Incident> = (0..rng.random_range(1..=3))
            .map(|_| {
                let step = rng.random_range(0..n);
                let window = rng.random_range(1..=3).min(n - step);
                let top = reach[step..step + window]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                Incident {
                    step,
                    b_set: spec.b_min() + rng.random_range(0.0..1.0) * (top - spec.b_min()),
                    window,
                }
            })
            .collect();
        let policy = BackupPolicy {
            outage_prob: outage.clone(),
            lambda: rng.random_range(0.0..0.5),
            incidents: incidents.clone(),
        };
        match optimal(&base.clone().with_backup(policy).unwrap(), true) {
            Ok(sol) => {
                for (i, v) in &sol.complementarity_violations {
                    complementarity.push(format!("backup instance {k} step {i}: {v:e}"));
                }
                for inc in &incidents {
                    for j in inc.step..inc.step + inc.window {
                        let short = inc.b_set - sol.schedule.charge()[j];
                        worst_shortfall = worst_shortfall.max(short);
                        incidents_checked += 1;
                        if short > 1e-6 {
                            failures.push(format!(
                                "instance {k} step {j}: charge {short:e} below level"
                            ));
                        }
                    }
                }
            }
            Err(e) => failures.push(format!("instance {k}: {e}")),
        }

        let neutral = BackupPolicy {
            outage_prob: outage,
            lambda: 0.0,
            incidents: Vec::new(),
        };
        match (
            optimal(&base, false),
            optimal(&base.clone().with_backup(neutral).unwrap(), true),
        ) {
            (Ok(a), Ok(b)) => {
                for (i, v) in &b.complementarity_violations {
                    complementarity.push(format!("neutral instance {k} step {i}: {v:e}"));
                }
                let d = (a.objective - b.objective).abs();
                worst_equal = worst_equal.max(d);
                if d > 1e-8 {
                    failures.push(format!(
                        "instance {k}: neutral backup changes objective by {d:e}"
                    ));
                }
            }
            (Err(e), _) | (_, Err(e)) => failures.push(format!("instance {k}: {e}")),
        }
    }
    let detail = format!(
        "{BACKUP_INSTANCES} instances, {incidents_checked} incident steps, max shortfall {worst_shortfall:.2e}, \
         max |neutral - plain| {worst_equal:.2e}"
    );
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join("; ")))
    }
}

fn complementarity_check(violations: &[String]) -> Outcome {
    if violations.is_empty() {
        outcome(
            true,
            "no step with s_plus*s_minus > 1e-8 on the oracle and backup suites",
        )
    } else {
        outcome(false, violations.join("; "))
    }
}

fn mpc_consistency() -> Outcome {
    let spec = parse_c_rating(
        "1C-1C",
        &BatterySpec::new(0.95, 0.95, 0.0, 0.0, 0.2, 2.0).unwrap(),
    )
    .unwrap();
    let n = 24;
    let mut worst_perfect: f64 = 0.0;
    let mut worst_loo: f64 = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for seed in 0..SEEDS {
        let cfg = SyntheticConfig {
            days: 21,
            step_hours: 1.0,
            seed,
            ..Default::default()
        };
        let all = generate(&cfg).unwrap();
        let hist = all.slice(0, 14 * n).unwrap();
        let eval = all.slice(14 * n, 7 * n).unwrap();
        let prices = TouSchedule::preset("triple")
            .unwrap()
            .price_signal(eval.grid())
            .unwrap();
        let template = MpcTemplate {
            prices: prices.clone(),
            spec,
            grid: *eval.grid(),
            p_set: None,
            backup: None,
        };
        let z = eval.net_load();
        let det = match optimal(&template.problem(z.clone(), 1.0).unwrap(), true) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };

        if seed == 0 {
            let mut perfect = PerfectForecaster::new(&z);
            match run_mpc(&eval, &mut perfect, &template, 1.0, MpcConfig::default()) {
                Ok(run) => worst_perfect = (run.objective - det.objective).abs(),
                Err(e) => return outcome(false, format!("perfect forecast: {e}")),
            }
            if worst_perfect > 1e-6 {
                failures.push(format!("perfect forecast differs by {worst_perfect:e}"));
            }
        }

        let history = HistoryBuffer::new(n, hist.net_load().into_inner()).unwrap();
        let (model, _) = fit_arma(&history, FitOptions::default()).unwrap();
        let mut arma = ArmaForecaster::new(model, history).unwrap();
        let run = match run_mpc(&eval, &mut arma, &template, 1.0, MpcConfig::default()) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        let actual = arbitrage_gain(&z, &run.committed, &prices).unwrap();
        let best = arbitrage_gain(&z, &det.schedule, &prices).unwrap();
        match loss_of_opportunity(actual, best) {
            Ok(loo) => {
                worst_loo = worst_loo.max(loo);
                if loo >= 0.25 {
                    failures.push(format!("seed {seed}: LoO {loo:.4}"));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let detail = format!(
        "7-day hourly runs, perfect |diff| {worst_perfect:.2e}, max ARMA LoO {worst_loo:.4} over {SEEDS} seeds"
    );
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join("; ")))
    }
}

fn greedy_policy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let mut worst_gap: f64 = 0.0;
    for k in 0..GREEDY_INSTANCES {
        let n = rng.random_range(1..=48);
        let h = [0.25, 0.5, 1.0][rng.random_range(0..3)];
        let spec = random_battery(&mut rng);
        let b0 = rng.random_range(spec.b_min()..=spec.b_max());
        let z = random_vec(&mut rng, n, -2.0 * h, 2.0 * h);
        let zs = NetLoadSeries::new(z.clone()).unwrap();
        let sched = match greedy_backup(&zs, &spec, b0, h) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("instance {k}: {e}"));
                continue;
            }
        };
        let (lo, hi) = spec.step_bounds(h);
        let mut b = b0;
        for (i, (&zi, &s)) in z.iter().zip(sched.actions()).enumerate() {
            let terms = if zi >= 0.0 {
                [-zi, lo, -(b - spec.b_min()) * spec.eta_dis()]
            } else {
                [-zi, hi, (spec.b_max() - b) / spec.eta_ch()]
            };
            if !terms.iter().any(|t| (t - s).abs() <= 1e-9) {
                failures.push(format!(
                    "instance {k} step {i}: action {s} matches no bounding term"
                ));
            }
            b = next_charge(b, s, &spec);
            if s < lo - 1e-9
                || s > hi + 1e-9
                || !spec.contains(b)
                || (b - sched.charge()[i]).abs() > 1e-9
            {
                failures.push(format!("instance {k} step {i}: infeasible action {s}"));
            }
        }

        let price = rng.random_range(0.05..0.3);
        let p = OptProblem::new(zs, vec![price; n], spec, b0, grid(h, n)).unwrap();
        match optimal(&p, false) {
            Ok(sol) => {
                let greedy_cost: f64 = z
                    .iter()
                    .zip(sched.actions())
                    .map(|(zi, s)| price * (zi + s).max(0.0))
                    .sum();
                let gap = (greedy_cost - sol.objective).abs();
                worst_gap = worst_gap.max(gap);
                if gap > 1e-6 {
                    failures.push(format!(
                        "instance {k}: flat-price greedy cost differs by {gap:e}"
                    ));
                }
            }
            Err(e) => failures.push(format!("instance {k}: {e}")),
        }
    }
    let detail = format!("{GREEDY_INSTANCES} instances, max flat-price gap {worst_gap:.2e}");
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join("; ")))
    }
}

fn arma_recovery() -> Outcome {
    let steps_per_day = 96;
    let days = 28;
    let mut worst: f64 = 0.0;
    let mut estimates = Vec::new();
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut r = 0.0;
        let values: Vec<f64> = (0..steps_per_day * days)
            .map(|t| {
                r = 0.7 * r + noise.sample(&mut rng);
                let hour = (t % steps_per_day) as f64 / 4.0;
                0.3 + 0.2 * (std::f64::consts::TAU * hour / 24.0).sin() + r
            })
            .collect();
        let hist = HistoryBuffer::new(steps_per_day, values).unwrap();
        match fit_arma(&hist, FitOptions::default()) {
            Ok((model, _)) => {
                let a1 = model.alpha[0];
                estimates.push(format!("{a1:.3}"));
                worst = worst.max((a1 - 0.7).abs());
            }
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        }
    }
    outcome(
        worst <= 0.05,
        format!(
            "lag-one estimates [{}], max error {worst:.4} (tol 0.05)",
            estimates.join(", ")
        ),
    )
}

fn sweep_structure() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sweep.toml");
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_storage-coopt"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    if !status.status.success() {
        return outcome(
            false,
            format!(
                "sweep exited with {}: {}",
                status.status,
                String::from_utf8_lossy(&status.stderr)
            ),
        );
    }
    let mut reader = csv::Reader::from_path(out.path().join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (tariff, case, state, g_arb, ppc) = (
        col("tariff"),
        col("case"),
        col("status"),
        col("g_arb"),
        col("ppc_after"),
    );
    // (rating, dual G_arb, triple G_arb, dual PPC, triple PPC)
    let mut rows: Vec<(String, [Option<f64>; 2], [Option<f64>; 2])> = Vec::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        let slot = match &rec[tariff] {
            "dual" => 0,
            "triple" => 1,
            _ => continue,
        };
        if &rec[state] != "optimal" {
            if &rec[state] != "baseline" {
                return outcome(
                    false,
                    format!("{} / {} is {}", &rec[tariff], &rec[case], &rec[state]),
                );
            }
            continue;
        }
        let name = rec[case].to_string();
        let idx = match rows.iter().position(|r| r.0 == name) {
            Some(i) => i,
            None => {
                rows.push((name, [None; 2], [None; 2]));
                rows.len() - 1
            }
        };
        rows[idx].1[slot] = rec[g_arb].parse().ok();
        rows[idx].2[slot] = rec[ppc].parse().ok();
    }
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (name, arb, _) in &rows {
        match arb {
            [Some(d), Some(t)] => {
                summary.push(format!("{name} {d:.3}/{t:.3}"));
                if t < d {
                    failures.push(format!("{name}: triple G_arb {t} < dual {d}"));
                }
            }
            _ => failures.push(format!("{name}: missing G_arb")),
        }
    }
    for slot in 0..2 {
        for w in rows.windows(2) {
            if let (Some(slow), Some(fast)) = (w[0].2[slot], w[1].2[slot]) {
                if fast > slow {
                    failures.push(format!("{} PPC {fast} above {} PPC {slow}", w[1].0, w[0].0));
                }
            }
        }
    }
    let ppcs: Vec<String> = rows
        .iter()
        .map(|r| format!("{}", r.2[1].unwrap_or(f64::NAN)))
        .collect();
    let detail = format!(
        "G_arb dual/triple: {}; triple PPC by rating: {}",
        summary.join(", "),
        ppcs.join(" ")
    );
    if rows.is_empty() {
        outcome(false, "no battery rows in sweep output")
    } else if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failures.join("; ")))
    }
}

fn main() -> ExitCode {
    let mut complementarity = Vec::new();
    let criteria: Vec<(&str, Box<dyn FnOnce(&mut Vec<String>) -> Outcome>)> = vec![
        ("tariff table fidelity", Box::new(|_| tariff_table())),
        ("peak gain arithmetic", Box::new(|_| peak_gain_arithmetic())),
        (
            "loss of opportunity arithmetic",
            Box::new(|_| loo_arithmetic()),
        ),
        ("LP against brute-force grid", Box::new(lp_vs_oracle)),
        (
            "backup constraint satisfaction",
            Box::new(backup_satisfaction),
        ),
        ("complementarity", Box::new(|c| complementarity_check(c))),
        ("MPC consistency", Box::new(|_| mpc_consistency())),
        ("greedy policy", Box::new(|_| greedy_policy())),
        ("ARMA recovery", Box::new(|_| arma_recovery())),
        ("ToU and rating structure", Box::new(|_| sweep_structure())),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check(&mut complementarity);
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} ({:.1?}) {}",
            i + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
