//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 infeasible model.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;

use crate::battery::{greedy_backup, BatterySpec, StorageSchedule};
use crate::config::{Mode, PeakCap, RunConfig};
use crate::error::{Error, Result};
use crate::forecast::{fit_arma, FitOptions, HistoryBuffer, MIN_FIT_DAYS};
use crate::lp::ConstraintClass;
use crate::metrics::{arbitrage_gain, loss_of_opportunity, ContractContext, PerformanceReport};
use crate::mpc::{
    run_mpc, ArmaForecaster, MpcConfig, MpcTemplate, NetLoadForecaster, PerfectForecaster,
};
use crate::optimizer::{
    build_lp, recommend_for_problem, solve_with_backup, BackupPolicy, OptOutcome, OptProblem,
};
use crate::tariff::{PpcTable, TouSchedule};
use crate::timeseries::{write_long_format, write_series, NetLoadSeries, Scenario};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "storage-coopt",
    version,
    about = "Home battery scheduling against time-of-use and peak power tariffs"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// simulate | greedy | mpc | sweep | synth; overrides the configured mode.
    #[arg(long)]
    pub mode: Option<String>,
    /// Concurrent sweep jobs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drive the controller with the realised net load.
    #[arg(long)]
    pub perfect_forecast: bool,
    /// Seed of the synthetic generator.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the scheduling program in LP format (simulate mode).
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
}

/// Outcome of a mode that ran to completion.
enum Status {
    Done,
    Infeasible,
}

pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli) -> u8 {
    match dispatch(cli) {
        Ok(Status::Done) => EXIT_OK,
        Ok(Status::Infeasible) => EXIT_INFEASIBLE,
        Err(Error::NoContract { peak_kw }) => {
            eprintln!("error: infeasible: no peak power contract covers {peak_kw:.3} kW");
            EXIT_INFEASIBLE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Status> {
    let cfg = RunConfig::load(&cli.config)?;
    let mode = match (&cli.mode, cfg.mode) {
        (Some(m), _) => m.parse()?,
        (None, Some(m)) => m,
        (None, None) => {
            return Err(Error::Config(
                "no mode given in the configuration or on the command line".into(),
            ))
        }
    };
    cfg.validate(mode)?;
    if cli.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let out = match (&cli.out, &cfg.out_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => cfg.resolve(o),
        (None, None) => cfg.resolve(Path::new("out")),
    };
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    if mode == Mode::Synth {
        return synth(&cfg, cli.seed, &out);
    }
    let ctx = Context::new(&cfg, cli.seed)?;
    match mode {
        Mode::Simulate => simulate(&ctx, &out, cli.dump_lp.as_deref()),
        Mode::Greedy => greedy(&ctx, &out),
        Mode::Mpc => mpc(&ctx, &out, cli.perfect_forecast),
        Mode::Sweep => sweep(&ctx, &out, cli.jobs),
        Mode::Synth => unreachable!(),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        f(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

struct Context<'a> {
    cfg: &'a RunConfig,
    scenario: Scenario,
    spec: BatterySpec,
    b0: f64,
    tariff_name: String,
    schedule: TouSchedule,
    table: PpcTable,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig, seed: Option<u64>) -> Result<Self> {
        let scenario = cfg.scenario(seed)?;
        let (tariff_name, schedule, table) = cfg.tariff()?;
        Ok(Context {
            cfg,
            scenario,
            spec: cfg.battery.spec()?,
            b0: cfg.battery.b0,
            tariff_name,
            schedule,
            table,
        })
    }
}

/// Everything needed to solve and score one battery and tariff on one scenario.
struct Case<'a> {
    scenario: &'a Scenario,
    spec: BatterySpec,
    b0: f64,
    schedule: &'a TouSchedule,
    table: &'a PpcTable,
    cap: PeakCap,
    ppc_kva: Option<f64>,
    backup: Option<BackupPolicy>,
    billing_days: Option<f64>,
}

impl Case<'_> {
    fn prices(&self) -> Result<Vec<f64>> {
        self.schedule.price_signal(self.scenario.grid())
    }

    fn days(&self) -> f64 {
        self.billing_days
            .unwrap_or(self.scenario.grid().duration_hours() / 24.0)
    }

    /// Contract needed without generation or storage, unless configured.
    fn reference_level(&self) -> Result<f64> {
        match self.ppc_kva {
            Some(kva) => self.table.lookup(kva).map(|l| l.kva),
            None => {
                let demand = NetLoadSeries::new(self.scenario.demand().to_vec())?;
                self.table
                    .select(demand.peak_kw(self.scenario.grid().step_hours()).max(0.0))
            }
        }
    }

    fn achieved_level(&self, z: &NetLoadSeries, sched: &StorageSchedule) -> Result<f64> {
        self.table
            .select(sched.peak_kw(z, self.scenario.grid().step_hours()).max(0.0))
    }

    fn problem(&self) -> Result<OptProblem> {
        let z = self.scenario.net_load();
        let mut p = OptProblem::new(z, self.prices()?, self.spec, self.b0, *self.scenario.grid())?;
        if let Some(b) = &self.backup {
            p = p.with_backup(b.clone())?;
        }
        match self.cap {
            PeakCap::None => Ok(p),
            PeakCap::Kw(kw) => p.with_peak_cap(kw),
            PeakCap::Auto => {
                let kw = recommend_for_problem(&p, self.table)?.p_set;
                p.with_peak_cap(kw)
            }
        }
    }

    fn report(
        &self,
        name: &str,
        sched: &StorageSchedule,
        with_battery: bool,
    ) -> Result<PerformanceReport> {
        let z = self.scenario.net_load();
        let contract = ContractContext {
            table: self.table,
            rate_type: self.schedule.rate_type,
            before: self.reference_level()?,
            after: self.achieved_level(&z, sched)?,
            days: self.days(),
        };
        let prices = self.prices()?;
        PerformanceReport::evaluate(
            name,
            self.scenario,
            sched,
            &prices,
            with_battery.then_some(&self.spec),
            contract,
        )
    }
}

fn case_for<'a>(
    ctx: &'a Context<'a>,
    scenario: &'a Scenario,
    spec: BatterySpec,
) -> Result<Case<'a>> {
    Ok(Case {
        scenario,
        spec,
        b0: ctx.b0,
        schedule: &ctx.schedule,
        table: &ctx.table,
        cap: ctx.cfg.tariff.peak_cap,
        ppc_kva: ctx.cfg.tariff.ppc_kva,
        backup: ctx.cfg.backup(scenario.grid())?,
        billing_days: ctx.cfg.billing_days,
    })
}

fn write_outputs(
    out: &Path,
    case: &Case<'_>,
    sched: &StorageSchedule,
    report: &PerformanceReport,
) -> Result<()> {
    let grid = case.scenario.grid();
    let z = case.scenario.net_load();
    let prices = case.prices()?;
    write_atomic(&out.join("schedule.csv"), |w| {
        write_series(w, grid, sched.actions())
    })?;
    write_atomic(&out.join("battery.csv"), |w| {
        write_series(w, grid, sched.charge())
    })?;
    write_atomic(&out.join("report.csv"), |w| {
        PerformanceReport::write_csv(std::slice::from_ref(report), w)
    })?;
    write_atomic(&out.join("plot.csv"), |w| {
        write_long_format(
            w,
            grid,
            &[
                ("demand", case.scenario.demand()),
                ("generation", case.scenario.generation()),
                ("net_load", z.values()),
                ("price", &prices),
                ("action", sched.actions()),
                ("charge", sched.charge()),
                ("grid_energy", sched.grid_energy()),
            ],
        )
    })
}

fn print_report(r: &PerformanceReport) {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!(
        "{}: G_arb {} | PPC {} -> {} kVA | G_peak {:.4} | SS {:.3} | G_T {:.4} | cycles {:.3} | euros/cycle {}",
        r.case,
        opt(r.g_arb),
        r.ppc_before,
        r.ppc_after,
        r.g_peak,
        r.ss,
        r.g_total,
        r.cycles,
        opt(r.euros_per_cycle)
    );
}

fn simulate(ctx: &Context<'_>, out: &Path, dump_lp: Option<&Path>) -> Result<Status> {
    let case = case_for(ctx, &ctx.scenario, ctx.spec)?;
    let problem = case.problem()?;
    if let Some(path) = dump_lp {
        let lp = build_lp(&problem);
        write_atomic(path, |w| {
            lp.write_lp_format(w).map_err(|e| Error::io(path, e))
        })?;
    }
    let sol = match solve_with_backup(&problem)? {
        OptOutcome::Optimal(sol) => sol,
        OptOutcome::Infeasible(why) => {
            eprintln!("error: infeasible: {why}");
            if why.class == ConstraintClass::Peak {
                eprintln!("hint: raise the peak cap or use peak_cap = \"auto\"");
            }
            return Ok(Status::Infeasible);
        }
    };
    if !sol.complementarity_violations.is_empty() {
        eprintln!(
            "warning: schedule charges and discharges in the same step at {} step(s)",
            sol.complementarity_violations.len()
        );
    }
    let report = case.report(&ctx.tariff_name, &sol.schedule, true)?;
    write_outputs(out, &case, &sol.schedule, &report)?;
    print_report(&report);
    println!(
        "objective {:.6} (energy cost {:.6}, backup reward {:.6})",
        sol.objective, sol.energy_cost, sol.backup_reward
    );
    Ok(Status::Done)
}

fn greedy(ctx: &Context<'_>, out: &Path) -> Result<Status> {
    let case = case_for(ctx, &ctx.scenario, ctx.spec)?;
    let z = ctx.scenario.net_load();
    let sched = greedy_backup(&z, &ctx.spec, ctx.b0, ctx.scenario.grid().step_hours())?;
    let report = case.report("greedy", &sched, true)?;
    write_outputs(out, &case, &sched, &report)?;
    print_report(&report);
    Ok(Status::Done)
}

fn mpc(ctx: &Context<'_>, out: &Path, perfect_flag: bool) -> Result<Status> {
    let block = ctx
        .cfg
        .mpc
        .as_ref()
        .ok_or_else(|| Error::Config("mpc mode needs an [mpc] block".into()))?;
    let perfect = perfect_flag || block.perfect_forecast;
    let n =
        ctx.scenario.grid().steps_per_day().ok_or_else(|| {
            Error::Config("mpc mode needs a step that divides the day evenly".into())
        })?;
    if !perfect && block.history_days < MIN_FIT_DAYS {
        return Err(Error::Config(format!(
            "mpc needs at least {MIN_FIT_DAYS} days of history before the evaluation window, got {}",
            block.history_days
        )));
    }
    let hist_steps = block.history_days * n;
    if ctx.scenario.len() <= hist_steps {
        return Err(Error::Config(format!(
            "scenario has {} steps, all used as {} days of history; nothing left to evaluate",
            ctx.scenario.len(),
            block.history_days
        )));
    }
    let eval = ctx
        .scenario
        .slice(hist_steps, ctx.scenario.len() - hist_steps)?;
    let case = case_for(ctx, &eval, ctx.spec)?;
    let det_problem = case.problem()?;
    let det = match solve_with_backup(&det_problem)? {
        OptOutcome::Optimal(sol) => sol,
        OptOutcome::Infeasible(why) => {
            eprintln!("error: infeasible: {why}");
            return Ok(Status::Infeasible);
        }
    };

    let z = eval.net_load();
    let mut forecaster: Box<dyn NetLoadForecaster> = if perfect {
        Box::new(PerfectForecaster::new(&z))
    } else {
        let history = HistoryBuffer::new(
            n,
            ctx.scenario.slice(0, hist_steps)?.net_load().into_inner(),
        )?;
        let (model, fit) = fit_arma(&history, FitOptions { ridge: block.ridge })?;
        println!(
            "fitted forecaster on {} samples (rank {}): alpha {:?} beta {:?}",
            fit.samples, fit.rank, model.alpha, model.beta
        );
        let text = model.to_toml()?;
        write_atomic(&out.join("model.toml"), |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| Error::io("model.toml", e))
        })?;
        Box::new(ArmaForecaster::new(model, history)?)
    };
    let template = MpcTemplate::from_problem(&det_problem);
    let config = MpcConfig {
        window: block.window,
        retain_forecasts: false,
    };
    let run = run_mpc(&eval, forecaster.as_mut(), &template, ctx.b0, config)?;

    let prices = case.prices()?;
    let det_gain = arbitrage_gain(&z, &det.schedule, &prices)?;
    let mpc_gain = arbitrage_gain(&z, &run.committed, &prices)?;
    let loo = match loss_of_opportunity(mpc_gain, det_gain) {
        Ok(l) if l.abs() < 1e-9 => Some(0.0),
        Ok(l) => Some(l),
        Err(e) => {
            eprintln!("warning: {e}");
            None
        }
    };

    let det_report = case.report("deterministic", &det.schedule, true)?;
    let mut mpc_report = case.report("mpc", &run.committed, true)?;
    if let Some(l) = loo {
        mpc_report = mpc_report.with_loo(l);
    }
    let grid = eval.grid();
    let h = grid.step_hours();
    write_atomic(&out.join("mpc_log.csv"), |w| run.write_log(w))?;
    write_atomic(&out.join("schedule.csv"), |w| {
        write_series(w, grid, run.committed.actions())
    })?;
    write_atomic(&out.join("battery.csv"), |w| {
        write_series(w, grid, run.committed.charge())
    })?;
    write_atomic(&out.join("report.csv"), |w| {
        PerformanceReport::write_csv(&[det_report.clone(), mpc_report.clone()], w)
    })?;
    write_atomic(&out.join("comparison.csv"), |w| {
        let mut c = csv::Writer::from_writer(w);
        let werr = |e: csv::Error| Error::Parse(format!("writing comparison: {e}"));
        c.write_record([
            "case",
            "energy_cost",
            "backup_reward",
            "objective",
            "g_arb",
            "peak_kw",
            "contract_violations",
            "loo",
        ])
        .map_err(werr)?;
        c.write_record([
            "deterministic".to_string(),
            det.energy_cost.to_string(),
            det.backup_reward.to_string(),
            det.objective.to_string(),
            det_gain.to_string(),
            det.schedule.peak_kw(&z, h).to_string(),
            "0".to_string(),
            String::new(),
        ])
        .map_err(werr)?;
        c.write_record([
            "mpc".to_string(),
            run.energy_cost.to_string(),
            run.backup_reward.to_string(),
            run.objective.to_string(),
            mpc_gain.to_string(),
            run.realised_peak_kw.to_string(),
            run.contract_violations.len().to_string(),
            loo.map_or(String::new(), |l| l.to_string()),
        ])
        .map_err(werr)?;
        c.flush().map_err(|e| Error::io("comparison.csv", e))
    })?;
    let forecast_first: Vec<f64> = run.log.iter().map(|r| r.forecast_z).collect();
    write_atomic(&out.join("plot.csv"), |w| {
        write_long_format(
            w,
            grid,
            &[
                ("net_load", z.values()),
                ("forecast", &forecast_first),
                ("price", &prices),
                ("deterministic_action", det.schedule.actions()),
                ("mpc_action", run.committed.actions()),
                ("deterministic_charge", det.schedule.charge()),
                ("mpc_charge", run.committed.charge()),
            ],
        )
    })?;

    print_report(&det_report);
    print_report(&mpc_report);
    println!(
        "objective deterministic {:.6} mpc {:.6}; arbitrage gain deterministic {det_gain:.4} mpc {mpc_gain:.4}",
        det.objective, run.objective
    );
    match loo {
        Some(l) => println!("loss of opportunity {l:.4}"),
        None => println!("loss of opportunity undefined"),
    }
    if !run.contract_violations.is_empty() {
        println!(
            "warning: realised grid draw exceeded the peak cap in {} step(s); peak {:.3} kW",
            run.contract_violations.len(),
            run.realised_peak_kw
        );
    }
    for rec in run.recoveries() {
        println!("recovery: {rec}");
    }
    Ok(Status::Done)
}

/// One row of the sweep table.
struct SweepRow {
    tariff: String,
    status: &'static str,
    report: Option<PerformanceReport>,
    case: String,
    detail: String,
}

fn sweep_job(
    ctx: &Context<'_>,
    tariff: &(String, TouSchedule, PpcTable),
    rating: &str,
    out: &Path,
) -> SweepRow {
    let (name, schedule, table) = tariff;
    let attempt = || -> Result<std::result::Result<PerformanceReport, String>> {
        let spec = ctx.cfg.battery.spec_with_rating(rating)?;
        let mut case = case_for(ctx, &ctx.scenario, spec)?;
        case.schedule = schedule;
        case.table = table;
        let problem = match case.problem() {
            Ok(p) => p,
            Err(Error::NoContract { peak_kw }) => {
                return Ok(Err(format!("no contract covers {peak_kw:.3} kW")))
            }
            Err(e) => return Err(e),
        };
        let sol = match solve_with_backup(&problem)? {
            OptOutcome::Optimal(sol) => sol,
            OptOutcome::Infeasible(why) => return Ok(Err(why.to_string())),
        };
        let grid = ctx.scenario.grid();
        let file = out.join(format!("{}_{}.csv", sanitize(name), sanitize(rating)));
        write_atomic(&file, |w| {
            write_long_format(
                w,
                grid,
                &[
                    ("action", sol.schedule.actions()),
                    ("charge", sol.schedule.charge()),
                ],
            )
        })?;
        case.report(rating, &sol.schedule, true).map(Ok)
    };
    let (status, report, detail) = match attempt() {
        Ok(Ok(r)) => ("optimal", Some(r), String::new()),
        Ok(Err(why)) => ("infeasible", None, why),
        Err(e) => ("error", None, e.to_string()),
    };
    SweepRow {
        tariff: name.clone(),
        status,
        report,
        case: rating.to_string(),
        detail,
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn baseline_rows(
    ctx: &Context<'_>,
    tariff: &(String, TouSchedule, PpcTable),
) -> Result<Vec<SweepRow>> {
    let (name, schedule, table) = tariff;
    let no_pv = ctx.scenario.without_generation();
    let mut rows = Vec::new();
    for (label, scenario) in [("No PV", &no_pv), ("PV", &ctx.scenario)] {
        let mut case = case_for(ctx, scenario, ctx.spec)?;
        case.schedule = schedule;
        case.table = table;
        let idle = StorageSchedule::idle(&scenario.net_load(), ctx.b0);
        let report = case.report(label, &idle, false)?;
        rows.push(SweepRow {
            tariff: name.clone(),
            status: "baseline",
            report: Some(report),
            case: label.to_string(),
            detail: String::new(),
        });
    }
    Ok(rows)
}

fn sweep(ctx: &Context<'_>, out: &Path, jobs: Option<usize>) -> Result<Status> {
    let block = ctx
        .cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep mode needs a [sweep] block".into()))?;
    let tariffs = block
        .tariffs
        .iter()
        .map(|t| ctx.cfg.load_tariff(t))
        .collect::<Result<Vec<_>>>()?;
    let sweep_dir = out.join("sweep");
    std::fs::create_dir_all(&sweep_dir).map_err(|e| Error::io(&sweep_dir, e))?;

    let combos: Vec<(usize, &str)> = (0..tariffs.len())
        .flat_map(|t| block.c_ratings.iter().map(move |r| (t, r.as_str())))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<SweepRow> = pool.install(|| {
        combos
            .par_iter()
            .map(|&(t, rating)| sweep_job(ctx, &tariffs[t], rating, &sweep_dir))
            .collect()
    });

    let mut per_tariff: Vec<Vec<SweepRow>> = tariffs.iter().map(|_| Vec::new()).collect();
    for (row, &(t, _)) in results.into_iter().zip(&combos) {
        per_tariff[t].push(row);
    }
    let mut rows = Vec::new();
    for (tariff, jobs) in tariffs.iter().zip(per_tariff) {
        if block.include_baseline {
            rows.extend(baseline_rows(ctx, tariff)?);
        }
        rows.extend(jobs);
    }

    write_atomic(&out.join("sweep.csv"), |w| write_sweep(w, &rows))?;
    for r in &rows {
        match &r.report {
            Some(rep) => {
                print!("[{}] ", r.tariff);
                print_report(rep);
            }
            None => println!("[{}] {}: {} ({})", r.tariff, r.case, r.status, r.detail),
        }
    }
    if let Some(e) = rows.iter().find(|r| r.status == "error") {
        return Err(Error::Config(format!(
            "sweep case {} / {} failed: {}",
            e.tariff, e.case, e.detail
        )));
    }
    Ok(Status::Done)
}

fn write_sweep(w: &mut dyn Write, rows: &[SweepRow]) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    let werr = |e: csv::Error| Error::Parse(format!("writing sweep table: {e}"));
    c.write_record([
        "tariff",
        "case",
        "status",
        "g_arb",
        "ppc_before",
        "ppc_after",
        "g_peak",
        "ss",
        "g_total",
        "cycles",
        "euros_per_cycle",
        "detail",
    ])
    .map_err(werr)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for r in rows {
        let mut rec = vec![r.tariff.clone(), r.case.clone(), r.status.to_string()];
        match &r.report {
            Some(p) => rec.extend([
                opt(p.g_arb),
                p.ppc_before.to_string(),
                p.ppc_after.to_string(),
                p.g_peak.to_string(),
                p.ss.to_string(),
                p.g_total.to_string(),
                p.cycles.to_string(),
                opt(p.euros_per_cycle),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 8)),
        }
        rec.push(r.detail.clone());
        c.write_record(&rec).map_err(werr)?;
    }
    c.flush().map_err(|e| Error::io("sweep.csv", e))
}

fn synth(cfg: &RunConfig, seed: Option<u64>, out: &Path) -> Result<Status> {
    let scenario = cfg.scenario(seed)?;
    let grid = scenario.grid();
    write_atomic(&out.join("demand.csv"), |w| {
        write_series(w, grid, scenario.demand())
    })?;
    write_atomic(&out.join("generation.csv"), |w| {
        write_series(w, grid, scenario.generation())
    })?;
    println!(
        "wrote {} steps of {} h to {}",
        scenario.len(),
        grid.step_hours(),
        out.display()
    );
    Ok(Status::Done)
}
