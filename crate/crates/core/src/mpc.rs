//! Receding-horizon control: forecast the remaining net load, solve the
//! scheduling program on the forecast from the current charge, commit only
//! the first action, observe the realised net load and repeat.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::battery::{apply_action, clamp_action, BatterySpec, BatteryState, StorageSchedule};
use crate::error::{Error, Result};
use crate::forecast::{ForecastModel, HistoryBuffer, LAGS};
use crate::lp::ConstraintClass;
use crate::optimizer::{solve_with_backup, BackupPolicy, OptOutcome, OptProblem, OptSolution};
use crate::tariff::energy_cost;
use crate::timeseries::{format_timestamp, NetLoadSeries, Scenario, TimeGrid};

/// Slack on the realised peak before a step counts as a contract violation, kW.
pub const PEAK_VIOLATION_TOL: f64 = 1e-6;

/// Supplies net-load forecasts to the controller and learns realised values.
pub trait NetLoadForecaster {
    /// Forecast for steps `step..step + horizon` of the evaluation window.
    fn forecast(&mut self, step: usize, horizon: usize) -> Result<Vec<f64>>;

    /// Realised net load of `step`, revealed after its action was committed.
    fn observe(&mut self, step: usize, realised: f64);
}

/// Mean profile plus residual autoregression, fed by a growing history.
#[derive(Debug, Clone)]
pub struct ArmaForecaster {
    model: ForecastModel,
    history: HistoryBuffer,
}

impl ArmaForecaster {
    /// `history` must end immediately before the evaluation window.
    pub fn new(model: ForecastModel, history: HistoryBuffer) -> Result<Self> {
        if model.steps_per_day() != history.steps_per_day() {
            return Err(Error::Forecast(format!(
                "model has {} steps per day, history has {}",
                model.steps_per_day(),
                history.steps_per_day()
            )));
        }
        if history.days() < LAGS {
            return Err(Error::Forecast(format!(
                "forecasting needs at least {LAGS} days of history, got {}",
                history.days()
            )));
        }
        Ok(ArmaForecaster { model, history })
    }

    pub fn model(&self) -> &ForecastModel {
        &self.model
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }
}

impl NetLoadForecaster for ArmaForecaster {
    fn forecast(&mut self, _step: usize, horizon: usize) -> Result<Vec<f64>> {
        Ok(self.model.forecast(self.history.values(), horizon))
    }

    fn observe(&mut self, _step: usize, realised: f64) {
        self.history.push(realised);
    }
}

/// Replays the true net load.
#[derive(Debug, Clone)]
pub struct PerfectForecaster {
    truth: Vec<f64>,
}

impl PerfectForecaster {
    pub fn new(truth: &NetLoadSeries) -> Self {
        PerfectForecaster {
            truth: truth.values().to_vec(),
        }
    }
}

impl NetLoadForecaster for PerfectForecaster {
    fn forecast(&mut self, step: usize, horizon: usize) -> Result<Vec<f64>> {
        self.truth
            .get(step..step + horizon)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::Forecast(format!("no data for steps {step}..{}", step + horizon)))
    }

    fn observe(&mut self, _step: usize, _realised: f64) {}
}

/// The true net load shifted by a constant offset, kWh per step.
#[derive(Debug, Clone)]
pub struct BiasedForecaster {
    inner: PerfectForecaster,
    bias: f64,
}

impl BiasedForecaster {
    pub fn new(truth: &NetLoadSeries, bias: f64) -> Self {
        BiasedForecaster {
            inner: PerfectForecaster::new(truth),
            bias,
        }
    }
}

impl NetLoadForecaster for BiasedForecaster {
    fn forecast(&mut self, step: usize, horizon: usize) -> Result<Vec<f64>> {
        let mut f = self.inner.forecast(step, horizon)?;
        f.iter_mut().for_each(|v| *v += self.bias);
        Ok(f)
    }

    fn observe(&mut self, _step: usize, _realised: f64) {}
}

/// Everything about the scheduling program that stays fixed across steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcTemplate {
    pub prices: Vec<f64>,
    pub spec: BatterySpec,
    pub grid: TimeGrid,
    pub p_set: Option<f64>,
    pub backup: Option<BackupPolicy>,
}

impl MpcTemplate {
    /// Takes every field of `p` except its net load.
    pub fn from_problem(p: &OptProblem) -> Self {
        MpcTemplate {
            prices: p.prices().to_vec(),
            spec: *p.spec(),
            grid: *p.grid(),
            p_set: p.p_set(),
            backup: p.backup().cloned(),
        }
    }

    /// The full-horizon problem on `z`, as a clairvoyant planner would solve it.
    pub fn problem(&self, z: NetLoadSeries, b0: f64) -> Result<OptProblem> {
        let mut p = OptProblem::new(z, self.prices.clone(), self.spec, b0, self.grid)?;
        if let Some(cap) = self.p_set {
            p = p.with_peak_cap(cap)?;
        }
        if let Some(backup) = &self.backup {
            p = p.with_backup(backup.clone())?;
        }
        Ok(p)
    }

    fn subproblem(&self, forecast: Vec<f64>, offset: usize, b0: f64) -> Result<OptProblem> {
        let len = forecast.len();
        let mut p = OptProblem::new(
            NetLoadSeries::new(forecast)?,
            self.prices[offset..offset + len].to_vec(),
            self.spec,
            b0,
            self.grid.window(offset, len)?,
        )?;
        if let Some(cap) = self.p_set {
            p = p.with_peak_cap(cap)?;
        }
        if let Some(backup) = &self.backup {
            p = p.with_backup(backup.window(offset, len))?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MpcConfig {
    /// Fixed look-ahead in steps; `None` plans to the end of the window.
    pub window: Option<usize>,
    /// Keep every forecast vector in the run.
    pub retain_forecasts: bool,
}

/// What the controller had to give up to obtain a solvable subproblem.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    /// A scheduled outage level at this absolute step was not enforced.
    DroppedBackup { step: usize, b_set: f64 },
    /// The peak cap was lifted for this solve.
    RelaxedPeak { step: usize },
}

impl fmt::Display for Recovery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recovery::DroppedBackup { step, b_set } => {
                write!(f, "dropped backup level {b_set} at step {step}")
            }
            Recovery::RelaxedPeak { step } => write!(f, "relaxed peak cap from step {step}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Objective of the subproblem on the forecast.
    pub forecast_cost: f64,
    /// Action proposed by the subproblem.
    pub planned: f64,
    /// Action actually applied.
    pub action: f64,
    pub forecast_z: f64,
    pub realised_z: f64,
    /// Charge after the step.
    pub charge: f64,
    pub recoveries: Vec<Recovery>,
    pub peak_violation: bool,
}

impl StepRecord {
    pub fn clamped(&self) -> bool {
        self.action != self.planned
    }

    fn flags(&self) -> String {
        let mut flags: Vec<String> = self
            .recoveries
            .iter()
            .map(|r| match r {
                Recovery::DroppedBackup { step, .. } => format!("dropped_backup@{step}"),
                Recovery::RelaxedPeak { .. } => "relaxed_peak".to_string(),
            })
            .collect();
        if self.clamped() {
            flags.push("clamped".into());
        }
        if self.peak_violation {
            flags.push("peak_violation".into());
        }
        flags.join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcRun {
    pub committed: StorageSchedule,
    pub log: Vec<StepRecord>,
    /// Forecast vector used at each step when retained.
    pub forecasts: Option<Vec<Vec<f64>>>,
    pub template: MpcTemplate,
    /// Energy cost on the realised net load.
    pub energy_cost: f64,
    /// Weighted stored energy reward on the committed trajectory.
    pub backup_reward: f64,
    pub objective: f64,
    /// max_i (z_i + s_i)/h over the realised steps, kW.
    pub realised_peak_kw: f64,
    /// Steps whose realised grid draw exceeded the peak cap.
    pub contract_violations: Vec<usize>,
}

impl MpcRun {
    pub fn recoveries(&self) -> impl Iterator<Item = &Recovery> {
        self.log.iter().flat_map(|r| r.recoveries.iter())
    }

    /// One CSV row per step.
    pub fn write_log<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            step: usize,
            timestamp: String,
            forecast_cost: f64,
            planned: f64,
            action: f64,
            forecast_z: f64,
            realised_z: f64,
            charge: f64,
            flags: &'a str,
        }
        let mut w = csv::Writer::from_writer(out);
        for r in &self.log {
            let flags = r.flags();
            w.serialize(Row {
                step: r.step,
                timestamp: format_timestamp(self.template.grid.step_start(r.step)),
                forecast_cost: r.forecast_cost,
                planned: r.planned,
                action: r.action,
                forecast_z: r.forecast_z,
                realised_z: r.realised_z,
                charge: r.charge,
                flags: &flags,
            })
            .map_err(|e| Error::Parse(format!("writing run log: {e}")))?;
        }
        w.flush().map_err(|e| Error::io("<run log>", e))
    }

    pub fn write_log_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_log(std::io::BufWriter::new(file))
    }
}

/// Solves `p`, giving up backup levels (earliest first) and then the peak
/// cap until the program is feasible. Battery limits are never relaxed.
fn solve_with_recovery(
    mut p: OptProblem,
    offset: usize,
    recoveries: &mut Vec<Recovery>,
) -> Result<OptSolution> {
    loop {
        let why = match solve_with_backup(&p)? {
            OptOutcome::Optimal(sol) => return Ok(sol),
            OptOutcome::Infeasible(why) => why,
        };
        match (why.class, why.incident) {
            (ConstraintClass::Backup, Some(k)) => {
                let backup = p.backup_mut().ok_or_else(|| {
                    Error::Solver("backup infeasibility without a backup policy".into())
                })?;
                let inc = backup.incidents.remove(k);
                let rec = Recovery::DroppedBackup {
                    step: offset + inc.step,
                    b_set: inc.b_set,
                };
                log::warn!("step {offset}: {rec} ({})", why.detail);
                recoveries.push(rec);
            }
            (ConstraintClass::Peak, _) if p.p_set().is_some() => {
                let rec = Recovery::RelaxedPeak { step: offset };
                log::warn!("step {offset}: {rec} ({})", why.detail);
                recoveries.push(rec);
                p = p.without_peak_cap();
            }
            _ => {
                return Err(Error::Solver(format!(
                    "unrecoverable subproblem at step {offset}: {why}"
                )))
            }
        }
    }
}

/// Runs the controller over the whole scenario from charge `b0`.
pub fn run_mpc(
    scenario: &Scenario,
    forecaster: &mut dyn NetLoadForecaster,
    template: &MpcTemplate,
    b0: f64,
    config: MpcConfig,
) -> Result<MpcRun> {
    let n = scenario.len();
    if n == 0 {
        return Err(Error::Validation("MPC needs at least one step".into()));
    }
    Error::check_len(n, template.prices.len())?;
    Error::check_len(n, template.grid.steps())?;
    if config.window == Some(0) {
        return Err(Error::Validation(
            "MPC window must be at least one step".into(),
        ));
    }
    let z = scenario.net_load();
    let h = template.grid.step_hours();
    let spec = &template.spec;

    let mut state = BatteryState::new(b0, spec)?;
    let mut log = Vec::with_capacity(n);
    let mut forecasts = config.retain_forecasts.then(|| Vec::with_capacity(n));
    let mut actions = Vec::with_capacity(n);

    for i in 0..n {
        let horizon = config.window.map_or(n - i, |w| w.min(n - i));
        let forecast = forecaster.forecast(i, horizon)?;
        Error::check_len(horizon, forecast.len())?;
        let forecast_z = forecast[0];
        if let Some(f) = forecasts.as_mut() {
            f.push(forecast.clone());
        }

        let mut recoveries = Vec::new();
        let sub = template.subproblem(forecast, i, state.charge)?;
        let sol = solve_with_recovery(sub, i, &mut recoveries)?;
        let planned = sol.schedule.actions()[0];
        let action = clamp_action(state, planned, spec, h);
        state = apply_action(state, action, spec, h)?;

        let realised_z = z.values()[i];
        let peak_violation = template
            .p_set
            .is_some_and(|cap| (realised_z + action) / h > cap + PEAK_VIOLATION_TOL);
        if peak_violation {
            log::warn!(
                "step {i}: realised draw {:.3} kW exceeds the peak cap",
                (realised_z + action) / h
            );
        }
        forecaster.observe(i, realised_z);
        actions.push(action);
        log.push(StepRecord {
            step: i,
            forecast_cost: sol.objective,
            planned,
            action,
            forecast_z,
            realised_z,
            charge: state.charge,
            recoveries,
            peak_violation,
        });
    }

    let committed = StorageSchedule::from_actions(&z, actions, spec, b0, h)?;
    let cost = energy_cost(committed.grid_energy(), &template.prices)?;
    let reward = template.backup.as_ref().map_or(0.0, |b| {
        -b.lambda
            * b.outage_prob
                .iter()
                .zip(committed.charge())
                .map(|(p, c)| p * c)
                .sum::<f64>()
    });
    let contract_violations = log
        .iter()
        .filter(|r| r.peak_violation)
        .map(|r| r.step)
        .collect();
    Ok(MpcRun {
        realised_peak_kw: committed.peak_kw(&z, h),
        committed,
        log,
        forecasts,
        template: template.clone(),
        energy_cost: cost,
        backup_reward: reward,
        objective: cost + reward,
        contract_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Incident;
    use chrono::NaiveDate;

    fn grid(n: usize) -> TimeGrid {
        let start = NaiveDate::from_ymd_opt(2018, 6, 4)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        TimeGrid::new(1.0, n, start).unwrap()
    }

    fn day_scenario() -> Scenario {
        let demand: Vec<f64> = (0..24)
            .map(|i| 0.4 + if (18..22).contains(&i) { 1.2 } else { 0.0 })
            .collect();
        let generation: Vec<f64> = (0..24)
            .map(|i| {
                if (8..17).contains(&i) {
                    1.5 * ((i - 7) as f64 / 10.0 * std::f64::consts::PI).sin()
                } else {
                    0.0
                }
            })
            .collect();
        Scenario::new(grid(24), demand, generation).unwrap()
    }

    fn template(n: usize) -> MpcTemplate {
        let prices = (0..n)
            .map(|i| {
                if (9..22).contains(&(i % 24)) {
                    0.2
                } else {
                    0.1
                }
            })
            .collect();
        MpcTemplate {
            prices,
            spec: BatterySpec::new(0.95, 0.95, -1.0, 1.0, 0.0, 3.0).unwrap(),
            grid: grid(n),
            p_set: None,
            backup: None,
        }
    }

    fn deterministic(s: &Scenario, t: &MpcTemplate, b0: f64) -> f64 {
        let p = t.problem(s.net_load(), b0).unwrap();
        solve_with_backup(&p).unwrap().objective().unwrap()
    }

    #[test]
    fn perfect_forecast_matches_deterministic() {
        let s = day_scenario();
        let t = template(24);
        let mut f = PerfectForecaster::new(&s.net_load());
        let run = run_mpc(&s, &mut f, &t, 1.0, MpcConfig::default()).unwrap();
        assert!((run.objective - deterministic(&s, &t, 1.0)).abs() < 1e-6);
        assert_eq!(run.log.len(), 24);
        assert!(run.contract_violations.is_empty());
    }

    #[test]
    fn single_step_horizon() {
        let s = day_scenario().slice(19, 1).unwrap();
        let mut t = template(24);
        t.prices = vec![t.prices[19]];
        t.grid = *s.grid();
        let mut f = PerfectForecaster::new(&s.net_load());
        let run = run_mpc(&s, &mut f, &t, 1.0, MpcConfig::default()).unwrap();
        assert_eq!(run.committed.len(), 1);
        assert!((run.objective - deterministic(&s, &t, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn biased_forecast_costs_more() {
        let s = day_scenario();
        let t = template(24);
        let mut f = BiasedForecaster::new(&s.net_load(), 0.1);
        let run = run_mpc(
            &s,
            &mut f,
            &t,
            1.0,
            MpcConfig {
                window: None,
                retain_forecasts: true,
            },
        )
        .unwrap();
        assert!(run.objective >= deterministic(&s, &t, 1.0) - 1e-9);
        assert_eq!(run.forecasts.as_ref().unwrap()[3].len(), 21);
    }

    #[test]
    fn fixed_window_shortens_forecasts() {
        let s = day_scenario();
        let t = template(24);
        let mut f = PerfectForecaster::new(&s.net_load());
        let cfg = MpcConfig {
            window: Some(6),
            retain_forecasts: true,
        };
        let run = run_mpc(&s, &mut f, &t, 1.0, cfg).unwrap();
        let lens: Vec<usize> = run.forecasts.unwrap().iter().map(Vec::len).collect();
        assert_eq!(lens[0], 6);
        assert_eq!(lens[20], 4);
        assert_eq!(lens[23], 1);
    }

    #[test]
    fn unreachable_backup_is_dropped_and_logged() {
        let s = day_scenario();
        let mut t = template(24);
        let mut backup = BackupPolicy::none(24);
        backup.incidents = vec![Incident::new(0, 2.9), Incident::new(12, 2.0)];
        t.backup = Some(backup);
        let mut f = PerfectForecaster::new(&s.net_load());
        let run = run_mpc(&s, &mut f, &t, 0.0, MpcConfig::default()).unwrap();
        let recs: Vec<_> = run.recoveries().collect();
        assert_eq!(
            recs[0],
            &Recovery::DroppedBackup {
                step: 0,
                b_set: 2.9
            }
        );
        assert!(run.committed.charge()[12] >= 2.0 - 1e-6);
    }

    #[test]
    fn under_forecast_flags_peak_violation() {
        let s = day_scenario();
        let mut t = template(24);
        t.p_set = Some(1.0);
        let mut f = BiasedForecaster::new(&s.net_load(), -0.5);
        let run = run_mpc(&s, &mut f, &t, 0.0, MpcConfig::default()).unwrap();
        assert!(!run.contract_violations.is_empty());
        assert!(run.realised_peak_kw > 1.0);
        let mut buf = Vec::new();
        run.write_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "step,timestamp,forecast_cost,planned,action,forecast_z,realised_z,charge,flags\n"
        ));
        assert!(text.contains("peak_violation"));
    }

    #[test]
    fn arma_forecaster_needs_three_days() {
        let model = ForecastModel::new([0.0; 3], [0.0; 3], vec![0.0; 24]).unwrap();
        let short = HistoryBuffer::new(24, vec![0.0; 48]).unwrap();
        assert!(ArmaForecaster::new(model.clone(), short).is_err());
        let ok = HistoryBuffer::new(24, vec![0.0; 72]).unwrap();
        let mut f = ArmaForecaster::new(model, ok).unwrap();
        f.observe(0, 1.0);
        assert_eq!(f.history().values().len(), 73);
        assert_eq!(f.forecast(1, 5).unwrap().len(), 5);
    }
}
