//! Time-of-use energy prices, peak power contracts (PPC) and billing arithmetic.
//!
//! Built-in price levels and the PPC table are the 2018 Madeira low-voltage
//! tariffs. Period clock times are configuration data; the bundled daily and
//! weekly schedules are documented samples, not authoritative boundaries.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeGrid;

pub const SINGLE_RATE_PRICE: f64 = 0.1629;
pub const DUAL_PEAK_PRICE: f64 = 0.1894;
pub const TRIPLE_PEAK_PRICE: f64 = 0.2153;
pub const HALF_PEAK_PRICE: f64 = 0.1716;
pub const OFF_PEAK_PRICE: f64 = 0.0982;

const LEVEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateType {
    Single,
    Dual,
    Triple,
}

impl FromStr for RateType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" => Ok(RateType::Single),
            "dual" => Ok(RateType::Dual),
            "triple" => Ok(RateType::Triple),
            other => Err(Error::Parse(format!("unknown rate type '{other}'"))),
        }
    }
}

impl fmt::Display for RateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateType::Single => "single",
            RateType::Dual => "dual",
            RateType::Triple => "triple",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BillingCycle {
    Daily,
    Weekly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodLabel {
    Peak,
    HalfPeak,
    OffPeak,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayType {
    Workday,
    Saturday,
    Sunday,
}

impl DayType {
    pub fn of(ts: NaiveDateTime) -> DayType {
        match ts.weekday() {
            Weekday::Sat => DayType::Saturday,
            Weekday::Sun => DayType::Sunday,
            _ => DayType::Workday,
        }
    }
}

/// Half-open interval `[start, end)` of the day, in decimal hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub start: f64,
    pub end: f64,
    pub label: PeriodLabel,
}

impl Period {
    pub const fn new(start: f64, end: f64, label: PeriodLabel) -> Self {
        Period { start, end, label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouSchedule {
    pub rate_type: RateType,
    pub cycle: BillingCycle,
    pub prices: BTreeMap<PeriodLabel, f64>,
    pub workday: Vec<Period>,
    /// Ignored for the daily cycle.
    #[serde(default)]
    pub saturday: Vec<Period>,
    #[serde(default)]
    pub sunday: Vec<Period>,
}

fn validate_partition(day: &str, periods: &[Period]) -> Result<()> {
    let gap = |msg: String| Error::Config(format!("{day} periods: {msg}"));
    if periods.is_empty() {
        return Err(gap("no periods defined".into()));
    }
    let mut cursor = 0.0;
    for p in periods {
        if !(p.start < p.end) {
            return Err(gap(format!(
                "empty or reversed period [{}, {})",
                p.start, p.end
            )));
        }
        if (p.start - cursor).abs() > LEVEL_TOL {
            return Err(gap(format!(
                "periods must tile [0, 24) in order; expected start {cursor}, found {}",
                p.start
            )));
        }
        cursor = p.end;
    }
    if (cursor - 24.0).abs() > LEVEL_TOL {
        return Err(gap(format!("periods end at {cursor}, not 24")));
    }
    Ok(())
}

impl TouSchedule {
    pub fn validate(&self) -> Result<()> {
        validate_partition("workday", &self.workday)?;
        if self.cycle == BillingCycle::Weekly {
            validate_partition("saturday", &self.saturday)?;
            validate_partition("sunday", &self.sunday)?;
        }
        for p in self.all_periods() {
            match self.prices.get(&p.label) {
                Some(v) if v.is_finite() && *v >= 0.0 => {}
                Some(v) => {
                    return Err(Error::Config(format!(
                        "price {v} for {:?} is invalid",
                        p.label
                    )))
                }
                None => {
                    return Err(Error::Config(format!(
                        "no price for period label {:?}",
                        p.label
                    )))
                }
            }
        }
        let allowed: &[PeriodLabel] = match self.rate_type {
            RateType::Single => &[PeriodLabel::Flat],
            RateType::Dual => &[PeriodLabel::Peak, PeriodLabel::OffPeak],
            RateType::Triple => &[
                PeriodLabel::Peak,
                PeriodLabel::HalfPeak,
                PeriodLabel::OffPeak,
            ],
        };
        if let Some(p) = self.all_periods().find(|p| !allowed.contains(&p.label)) {
            return Err(Error::Config(format!(
                "label {:?} not allowed for a {} rate tariff",
                p.label, self.rate_type
            )));
        }
        if self.rate_type == RateType::Single {
            let days: Vec<&[Period]> = match self.cycle {
                BillingCycle::Daily => vec![&self.workday],
                BillingCycle::Weekly => vec![&self.workday, &self.saturday, &self.sunday],
            };
            if days.iter().any(|d| d.len() != 1) {
                return Err(Error::Config(
                    "single-rate tariff must have exactly one flat period".into(),
                ));
            }
        }
        Ok(())
    }

    fn all_periods(&self) -> impl Iterator<Item = &Period> {
        let weekly = self.cycle == BillingCycle::Weekly;
        self.workday.iter().chain(
            self.saturday
                .iter()
                .chain(&self.sunday)
                .filter(move |_| weekly),
        )
    }

    pub fn periods_for(&self, day: DayType) -> &[Period] {
        match (self.cycle, day) {
            (BillingCycle::Daily, _) | (BillingCycle::Weekly, DayType::Workday) => &self.workday,
            (BillingCycle::Weekly, DayType::Saturday) => &self.saturday,
            (BillingCycle::Weekly, DayType::Sunday) => &self.sunday,
        }
    }

    pub fn period_at(&self, ts: NaiveDateTime) -> Result<PeriodLabel> {
        let hour = ts.num_seconds_from_midnight() as f64 / 3600.0 + ts.nanosecond() as f64 / 3.6e12;
        self.periods_for(DayType::of(ts))
            .iter()
            .find(|p| hour >= p.start - LEVEL_TOL && hour < p.end - LEVEL_TOL)
            .map(|p| p.label)
            .ok_or_else(|| Error::Config(format!("no tariff period covers {ts}")))
    }

    pub fn price_at(&self, ts: NaiveDateTime) -> Result<f64> {
        let label = self.period_at(ts)?;
        self.prices
            .get(&label)
            .copied()
            .ok_or_else(|| Error::Config(format!("no price for period label {label:?}")))
    }

    /// Price of the period containing the start of each step, euros/kWh.
    pub fn price_signal(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        (0..grid.steps())
            .map(|i| self.price_at(grid.step_start(i)))
            .collect()
    }

    pub fn single_rate() -> TouSchedule {
        TouSchedule {
            rate_type: RateType::Single,
            cycle: BillingCycle::Daily,
            prices: BTreeMap::from([(PeriodLabel::Flat, SINGLE_RATE_PRICE)]),
            workday: vec![Period::new(0.0, 24.0, PeriodLabel::Flat)],
            saturday: vec![],
            sunday: vec![],
        }
    }

    /// Sample daily-cycle three-level schedule.
    pub fn sample_triple_daily() -> TouSchedule {
        use PeriodLabel::*;
        TouSchedule {
            rate_type: RateType::Triple,
            cycle: BillingCycle::Daily,
            prices: BTreeMap::from([
                (Peak, TRIPLE_PEAK_PRICE),
                (HalfPeak, HALF_PEAK_PRICE),
                (OffPeak, OFF_PEAK_PRICE),
            ]),
            workday: vec![
                Period::new(0.0, 8.0, OffPeak),
                Period::new(8.0, 9.0, HalfPeak),
                Period::new(9.0, 10.5, Peak),
                Period::new(10.5, 18.0, HalfPeak),
                Period::new(18.0, 20.5, Peak),
                Period::new(20.5, 22.0, HalfPeak),
                Period::new(22.0, 24.0, OffPeak),
            ],
            saturday: vec![],
            sunday: vec![],
        }
    }

    /// Sample daily-cycle two-level schedule, derived from the three-level one.
    pub fn sample_dual_daily() -> TouSchedule {
        TouSchedule::sample_triple_daily().to_dual(DUAL_PEAK_PRICE)
    }

    /// Sample weekly-cycle three-level schedule.
    pub fn sample_triple_weekly() -> TouSchedule {
        use PeriodLabel::*;
        TouSchedule {
            cycle: BillingCycle::Weekly,
            workday: vec![
                Period::new(0.0, 7.0, OffPeak),
                Period::new(7.0, 9.5, HalfPeak),
                Period::new(9.5, 12.0, Peak),
                Period::new(12.0, 18.5, HalfPeak),
                Period::new(18.5, 21.0, Peak),
                Period::new(21.0, 24.0, HalfPeak),
            ],
            saturday: vec![
                Period::new(0.0, 9.5, OffPeak),
                Period::new(9.5, 13.0, HalfPeak),
                Period::new(13.0, 18.5, OffPeak),
                Period::new(18.5, 22.0, HalfPeak),
                Period::new(22.0, 24.0, OffPeak),
            ],
            sunday: vec![Period::new(0.0, 24.0, OffPeak)],
            ..TouSchedule::sample_triple_daily()
        }
    }

    /// Two-level schedule whose peak period is this schedule's peak ∪ half-peak.
    pub fn to_dual(&self, peak_price: f64) -> TouSchedule {
        let merge = |periods: &[Period]| -> Vec<Period> {
            let mut out: Vec<Period> = Vec::with_capacity(periods.len());
            for p in periods {
                let label = match p.label {
                    PeriodLabel::HalfPeak | PeriodLabel::Peak => PeriodLabel::Peak,
                    other => other,
                };
                match out.last_mut() {
                    Some(last) if last.label == label => last.end = p.end,
                    _ => out.push(Period::new(p.start, p.end, label)),
                }
            }
            out
        };
        let off_peak = self
            .prices
            .get(&PeriodLabel::OffPeak)
            .copied()
            .unwrap_or(OFF_PEAK_PRICE);
        TouSchedule {
            rate_type: RateType::Dual,
            cycle: self.cycle,
            prices: BTreeMap::from([
                (PeriodLabel::Peak, peak_price),
                (PeriodLabel::OffPeak, off_peak),
            ]),
            workday: merge(&self.workday),
            saturday: merge(&self.saturday),
            sunday: merge(&self.sunday),
        }
    }

    /// Built-in schedule by name: `single`, `dual`, `triple`, `dual-weekly`, `triple-weekly`.
    pub fn preset(name: &str) -> Result<TouSchedule> {
        match name {
            "single" => Ok(TouSchedule::single_rate()),
            "dual" | "dual-daily" => Ok(TouSchedule::sample_dual_daily()),
            "triple" | "triple-daily" => Ok(TouSchedule::sample_triple_daily()),
            "triple-weekly" => Ok(TouSchedule::sample_triple_weekly()),
            "dual-weekly" => Ok(TouSchedule::sample_triple_weekly().to_dual(DUAL_PEAK_PRICE)),
            other => Err(Error::Config(format!("unknown tariff preset '{other}'"))),
        }
    }
}

/// One PPC level with its daily charge for each rate column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpcLevel {
    pub kva: f64,
    pub single: f64,
    pub multi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpcTable {
    levels: Vec<PpcLevel>,
}

const MADEIRA_2018: [(f64, f64, f64); 8] = [
    (3.45, 0.1611, 0.1643),
    (4.60, 0.2096, 0.2132),
    (5.75, 0.2560, 0.2590),
    (6.90, 0.3040, 0.3080),
    (10.35, 0.4478, 0.4532),
    (13.80, 0.5902, 0.5981),
    (17.25, 0.7326, 0.7436),
    (20.70, 0.8751, 0.8892),
];

impl PpcTable {
    pub fn new(levels: Vec<PpcLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Config("PPC table is empty".into()));
        }
        for pair in levels.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if !(a.kva < b.kva && a.single < b.single && a.multi < b.multi) {
                return Err(Error::Config(format!(
                    "PPC levels must increase strictly in kVA and both rates ({} -> {})",
                    a.kva, b.kva
                )));
            }
        }
        if levels
            .iter()
            .any(|l| !(l.kva > 0.0 && l.single >= 0.0 && l.multi >= 0.0))
        {
            return Err(Error::Config("PPC entries must be positive".into()));
        }
        Ok(PpcTable { levels })
    }

    /// Low-voltage PPC daily rates in force in Madeira in 2018.
    pub fn madeira_2018() -> PpcTable {
        PpcTable {
            levels: MADEIRA_2018
                .iter()
                .map(|&(kva, single, multi)| PpcLevel { kva, single, multi })
                .collect(),
        }
    }

    pub fn levels(&self) -> &[PpcLevel] {
        &self.levels
    }

    pub fn largest(&self) -> f64 {
        self.levels[self.levels.len() - 1].kva
    }

    /// Smallest level that covers `peak_kw` (kVA treated as kW).
    pub fn select(&self, peak_kw: f64) -> Result<f64> {
        self.levels
            .iter()
            .find(|l| l.kva >= peak_kw - LEVEL_TOL)
            .map(|l| l.kva)
            .ok_or(Error::NoContract { peak_kw })
    }

    pub fn lookup(&self, level: f64) -> Result<&PpcLevel> {
        self.levels
            .iter()
            .find(|l| (l.kva - level).abs() < 1e-6)
            .ok_or(Error::UnknownLevel(level))
    }

    /// Daily fixed charge in euros for `level` under `rate_type`.
    pub fn daily_rate(&self, level: f64, rate_type: RateType) -> Result<f64> {
        let entry = self.lookup(level)?;
        Ok(match rate_type {
            RateType::Single => entry.single,
            RateType::Dual | RateType::Triple => entry.multi,
        })
    }
}

impl Default for PpcTable {
    fn default() -> Self {
        PpcTable::madeira_2018()
    }
}

/// Contracted peak level together with the energy tariff.
#[derive(Debug, Clone, PartialEq)]
pub struct TariffContract {
    pub ppc_kva: f64,
    pub schedule: TouSchedule,
}

impl TariffContract {
    pub fn new(ppc_kva: f64, schedule: TouSchedule, table: &PpcTable) -> Result<Self> {
        table.lookup(ppc_kva)?;
        schedule.validate()?;
        Ok(TariffContract { ppc_kva, schedule })
    }
}

/// Σ prices_i·grid_energy_i with energy in kWh per step.
pub fn energy_cost(grid_energy: &[f64], prices: &[f64]) -> Result<f64> {
    Error::check_len(grid_energy.len(), prices.len())?;
    Ok(grid_energy.iter().zip(prices).map(|(t, p)| t * p).sum())
}

#[derive(Debug, Deserialize)]
struct PeriodsBlock {
    workday: Vec<Period>,
    #[serde(default)]
    saturday: Vec<Period>,
    #[serde(default)]
    sunday: Vec<Period>,
}

#[derive(Debug, Deserialize)]
struct PpcBlock {
    levels: Vec<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TariffFile {
    #[serde(default)]
    name: Option<String>,
    rate_type: RateType,
    cycle: BillingCycle,
    prices: BTreeMap<PeriodLabel, f64>,
    periods: PeriodsBlock,
    #[serde(default)]
    ppc_table: Option<PpcBlock>,
}

/// A parsed tariff configuration file.
#[derive(Debug, Clone)]
pub struct TariffConfig {
    pub name: Option<String>,
    pub schedule: TouSchedule,
    pub ppc_table: Option<PpcTable>,
}

impl TariffConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: TariffFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("tariff file: {e}")))?;
        if raw.cycle == BillingCycle::Daily
            && (!raw.periods.saturday.is_empty() || !raw.periods.sunday.is_empty())
        {
            return Err(Error::Config(
                "daily billing cycle takes only periods.workday; use cycle = \"weekly\" for weekend schedules".into(),
            ));
        }
        let schedule = TouSchedule {
            rate_type: raw.rate_type,
            cycle: raw.cycle,
            prices: raw.prices,
            workday: raw.periods.workday,
            saturday: raw.periods.saturday,
            sunday: raw.periods.sunday,
        };
        schedule.validate()?;
        let ppc_table = raw
            .ppc_table
            .map(|b| {
                PpcTable::new(
                    b.levels
                        .into_iter()
                        .map(|[kva, single, multi]| PpcLevel { kva, single, multi })
                        .collect(),
                )
            })
            .transpose()?;
        Ok(TariffConfig {
            name: raw.name,
            schedule,
            ppc_table,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TariffConfig::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(day: u32, h: u32, m: u32) -> NaiveDateTime {
        // 2018-05-14 is a Monday.
        NaiveDate::from_ymd_opt(2018, 5, day)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap()
    }

    #[test]
    fn price_levels() {
        let grid = TimeGrid::new(0.25, 96 * 3, at(18, 0, 0)).unwrap();
        let single = TouSchedule::single_rate().price_signal(&grid).unwrap();
        assert!(single.iter().all(|&p| p == 0.1629));

        let dual = TouSchedule::sample_dual_daily();
        assert_eq!(dual.price_at(at(18, 3, 0)).unwrap(), 0.0982);
        assert_eq!(dual.price_at(at(18, 19, 0)).unwrap(), 0.1894);
        // Half-peak hours belong to the dual-rate peak period.
        assert_eq!(dual.price_at(at(18, 14, 0)).unwrap(), 0.1894);

        let triple = TouSchedule::sample_triple_daily();
        assert_eq!(triple.price_at(at(18, 14, 0)).unwrap(), 0.1716);
        assert_eq!(triple.price_at(at(18, 19, 0)).unwrap(), 0.2153);
        assert_eq!(triple.price_at(at(18, 23, 45)).unwrap(), 0.0982);
    }

    #[test]
    fn weekly_cycle_distinguishes_day_types() {
        let weekly = TouSchedule::sample_triple_weekly();
        weekly.validate().unwrap();
        assert_eq!(weekly.period_at(at(14, 10, 0)).unwrap(), PeriodLabel::Peak);
        assert_eq!(
            weekly.period_at(at(19, 10, 0)).unwrap(),
            PeriodLabel::HalfPeak
        );
        assert_eq!(
            weekly.period_at(at(20, 10, 0)).unwrap(),
            PeriodLabel::OffPeak
        );
    }

    #[test]
    fn price_signal_breaks_only_at_boundaries() {
        let sched = TouSchedule::sample_triple_daily();
        let grid = TimeGrid::new(0.25, 96 * 2, at(18, 0, 0)).unwrap();
        let prices = sched.price_signal(&grid).unwrap();
        let boundaries: Vec<f64> = sched.workday.iter().map(|p| p.start).collect();
        for i in 1..prices.len() {
            if prices[i] != prices[i - 1] {
                let hour = (i as f64 * 0.25) % 24.0;
                assert!(
                    boundaries.contains(&hour),
                    "unexpected break at hour {hour}"
                );
            }
        }
    }

    #[test]
    fn rejects_gaps_and_overlaps() {
        let mut s = TouSchedule::sample_triple_daily();
        s.workday[1].start = 8.5;
        assert!(matches!(s.validate(), Err(Error::Config(_))));

        let mut s = TouSchedule::sample_triple_daily();
        s.workday.pop();
        assert!(s.validate().is_err());

        let mut s = TouSchedule::sample_triple_daily();
        s.prices.remove(&PeriodLabel::HalfPeak);
        assert!(s.validate().is_err());

        let mut s = TouSchedule::single_rate();
        s.workday = vec![
            Period::new(0.0, 12.0, PeriodLabel::Flat),
            Period::new(12.0, 24.0, PeriodLabel::Flat),
        ];
        assert!(s.validate().is_err());
    }

    #[test]
    fn select_ppc_examples() {
        let t = PpcTable::madeira_2018();
        assert_eq!(t.select(6.1).unwrap(), 6.90);
        assert_eq!(t.select(3.45).unwrap(), 3.45);
        assert_eq!(t.select(-2.0).unwrap(), 3.45);
        assert!(matches!(t.select(21.0), Err(Error::NoContract { .. })));
    }

    #[test]
    fn ppc_daily_rate_examples() {
        let t = PpcTable::madeira_2018();
        assert_eq!(t.daily_rate(10.35, RateType::Single).unwrap(), 0.4478);
        assert_eq!(t.daily_rate(3.45, RateType::Single).unwrap(), 0.1611);
        assert_eq!(t.daily_rate(20.70, RateType::Dual).unwrap(), 0.8892);
        assert_eq!(t.daily_rate(20.70, RateType::Triple).unwrap(), 0.8892);
        assert!(matches!(
            t.daily_rate(7.0, RateType::Single),
            Err(Error::UnknownLevel(_))
        ));
    }

    #[test]
    fn energy_cost_examples() {
        assert_eq!(energy_cost(&[0.0, 0.0], &[0.1, 0.2]).unwrap(), 0.0);
        assert!((energy_cost(&[1.0, 1.0], &[0.1, 0.2]).unwrap() - 0.3).abs() < 1e-12);
        assert!((energy_cost(&[2.0], &[0.1629]).unwrap() - 0.3258).abs() < 1e-12);
        assert!(energy_cost(&[1.0], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn parses_tariff_file() {
        let text = r#"
            name = "three-level"
            rate_type = "triple"
            cycle = "daily"

            [prices]
            peak = 0.2153
            half_peak = 0.1716
            off_peak = 0.0982

            [periods]
            workday = [
              { start = 0.0, end = 8.0, label = "off_peak" },
              { start = 8.0, end = 18.0, label = "half_peak" },
              { start = 18.0, end = 21.0, label = "peak" },
              { start = 21.0, end = 24.0, label = "off_peak" },
            ]

            [ppc_table]
            levels = [[3.45, 0.1611, 0.1643], [6.90, 0.3040, 0.3080]]
        "#;
        let cfg = TariffConfig::parse(text).unwrap();
        assert_eq!(cfg.name.as_deref(), Some("three-level"));
        assert_eq!(cfg.schedule.rate_type, RateType::Triple);
        assert_eq!(cfg.ppc_table.unwrap().levels().len(), 2);

        let with_weekend = text.replace("[ppc_table]", "saturday = []\n[ppc_table]");
        assert!(TariffConfig::parse(&with_weekend).is_ok());
        let bad = text.replace("end = 18.0", "end = 17.0");
        assert!(TariffConfig::parse(&bad).is_err());
    }

    #[test]
    fn dual_derivation_merges_half_peak() {
        let dual = TouSchedule::sample_dual_daily();
        dual.validate().unwrap();
        assert_eq!(
            dual.workday,
            vec![
                Period::new(0.0, 8.0, PeriodLabel::OffPeak),
                Period::new(8.0, 22.0, PeriodLabel::Peak),
                Period::new(22.0, 24.0, PeriodLabel::OffPeak),
            ]
        );
    }

    #[test]
    fn ppc_table_must_increase() {
        let mut levels = PpcTable::madeira_2018().levels().to_vec();
        levels.swap(2, 3);
        assert!(PpcTable::new(levels).is_err());
    }
}
