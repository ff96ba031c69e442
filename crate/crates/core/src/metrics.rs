//! Performance indices of a storage schedule.

use serde::Serialize;

use crate::battery::{BatterySpec, StorageSchedule};
use crate::error::{Error, Result};
use crate::tariff::{energy_cost, PpcTable, RateType};
use crate::timeseries::{NetLoadSeries, Scenario};

/// Below this many equivalent cycles euros/cycle is not reported.
pub const MIN_CYCLES: f64 = 1e-6;

/// Energy cost avoided relative to leaving the battery idle, euros.
pub fn arbitrage_gain(z: &NetLoadSeries, sched: &StorageSchedule, prices: &[f64]) -> Result<f64> {
    Error::check_len(z.len(), sched.len())?;
    let idle: Vec<f64> = z.values().iter().map(|v| v.max(0.0)).collect();
    Ok(energy_cost(&idle, prices)? - energy_cost(sched.grid_energy(), prices)?)
}

/// Saving from moving the peak power contract from `before` to `after` over `days`.
pub fn peak_gain(
    table: &PpcTable,
    before: f64,
    after: f64,
    rate_type: RateType,
    days: f64,
) -> Result<f64> {
    let gain = (table.daily_rate(before, rate_type)? - table.daily_rate(after, rate_type)?) * days;
    if after > before {
        log::warn!(
            "contract {after} kVA is above the reference {before} kVA; peak gain is negative"
        );
    }
    Ok(gain)
}

/// Share of demand not bought from the grid.
pub fn self_sufficiency(scenario: &Scenario, sched: &StorageSchedule) -> Result<f64> {
    Error::check_len(scenario.len(), sched.len())?;
    let demand: f64 = scenario.demand().iter().sum();
    if demand <= 0.0 {
        return Err(Error::UndefinedMetric(
            "self-sufficiency with zero total demand",
        ));
    }
    let bought: f64 = sched.grid_energy().iter().sum();
    Ok((1.0 - bought / demand).clamp(0.0, 1.0))
}

/// Equivalent full cycles: total depth of every discharge excursion in the
/// charge trajectory `b`, divided by the usable range.
pub fn count_cycles(b: &[f64], spec: &BatterySpec) -> f64 {
    let range = spec.usable_range();
    if range <= 0.0 {
        return 0.0;
    }
    let depth: f64 = b.windows(2).map(|w| (w[0] - w[1]).max(0.0)).sum();
    depth / range
}

/// 1 − actual/deterministic.
pub fn loss_of_opportunity(actual_gain: f64, deterministic_gain: f64) -> Result<f64> {
    if !(deterministic_gain > 0.0) {
        return Err(Error::UndefinedMetric(
            "loss of opportunity needs a positive deterministic gain",
        ));
    }
    Ok(1.0 - actual_gain / deterministic_gain)
}

/// Contract context for the peak-shaving part of a report.
#[derive(Debug, Clone, Copy)]
pub struct ContractContext<'a> {
    pub table: &'a PpcTable,
    pub rate_type: RateType,
    /// Reference level, kVA.
    pub before: f64,
    /// Level achieved with storage, kVA.
    pub after: f64,
    pub days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub case: String,
    /// Blank for cases without a battery.
    pub g_arb: Option<f64>,
    pub ppc_before: f64,
    pub ppc_after: f64,
    pub g_peak: f64,
    pub ss: f64,
    pub g_total: f64,
    pub cycles: f64,
    pub euros_per_cycle: Option<f64>,
    pub loo: Option<f64>,
}

impl PerformanceReport {
    /// Indices of `sched` applied to `scenario`.
    pub fn evaluate(
        case: impl Into<String>,
        scenario: &Scenario,
        sched: &StorageSchedule,
        prices: &[f64],
        spec: Option<&BatterySpec>,
        contract: ContractContext<'_>,
    ) -> Result<Self> {
        let z = scenario.net_load();
        let g_arb = match spec {
            Some(_) => Some(arbitrage_gain(&z, sched, prices)?),
            None => None,
        };
        let g_peak = peak_gain(
            contract.table,
            contract.before,
            contract.after,
            contract.rate_type,
            contract.days,
        )?;
        let g_total = g_arb.unwrap_or(0.0) + g_peak;
        let cycles = spec.map_or(0.0, |s| count_cycles(&sched.trajectory(), s));
        Ok(PerformanceReport {
            case: case.into(),
            g_arb,
            ppc_before: contract.before,
            ppc_after: contract.after,
            g_peak,
            ss: self_sufficiency(scenario, sched)?,
            g_total,
            cycles,
            euros_per_cycle: (cycles >= MIN_CYCLES).then(|| g_total / cycles),
            loo: None,
        })
    }

    pub fn with_loo(mut self, loo: f64) -> Self {
        self.loo = Some(loo);
        self
    }

    pub fn write_csv<W: std::io::Write>(reports: &[PerformanceReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in reports {
            w.serialize(r)
                .map_err(|e| Error::Parse(format!("writing report: {e}")))?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))
    }
}
