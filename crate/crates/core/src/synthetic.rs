//! Seeded synthetic prosumer data: a clear-sky PV arc scaled by a daily
//! cloud factor, and a residential load with morning and evening peaks,
//! an evening spike of random height and autocorrelated noise.

use chrono::{NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{Scenario, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub days: usize,
    pub step_hours: f64,
    pub start: NaiveDateTime,
    pub seed: u64,
    /// PV peak power, kW.
    pub pv_kwp: f64,
    /// Daily cloud factor is drawn uniformly from `[cloud_min, 1]`.
    pub cloud_min: f64,
    /// Always-on load, kW.
    pub base_kw: f64,
    pub morning_kw: f64,
    pub evening_kw: f64,
    /// Height of the short evening spike is drawn uniformly from this range, kW.
    pub spike_min_kw: f64,
    pub spike_max_kw: f64,
    /// Lag-one correlation of the load noise.
    pub noise_phi: f64,
    /// Innovation standard deviation of the load noise, kW.
    pub noise_sigma: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            days: 7,
            step_hours: 0.25,
            start: NaiveDate::from_ymd_opt(2018, 6, 4)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
            seed: 1,
            pv_kwp: 6.25,
            cloud_min: 0.6,
            base_kw: 0.35,
            morning_kw: 1.2,
            evening_kw: 2.0,
            spike_min_kw: 2.5,
            spike_max_kw: 6.0,
            noise_phi: 0.7,
            noise_sigma: 0.08,
        }
    }
}

fn bump(hour: f64, centre: f64, width: f64) -> f64 {
    (-0.5 * ((hour - centre) / width).powi(2)).exp()
}

/// Clear-sky PV output as a fraction of peak, by hour of day.
pub fn clear_sky(hour: f64) -> f64 {
    if (6.5..19.5).contains(&hour) {
        (std::f64::consts::PI * (hour - 6.5) / 13.0).sin().powf(1.3)
    } else {
        0.0
    }
}

/// Mean load by hour of day before the spike and noise, kW.
fn load_shape(cfg: &SyntheticConfig, hour: f64) -> f64 {
    cfg.base_kw + cfg.morning_kw * bump(hour, 7.5, 0.9) + cfg.evening_kw * bump(hour, 20.0, 1.4)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<Scenario> {
    let steps_per_day = 24.0 / cfg.step_hours;
    if cfg.days == 0 || !(steps_per_day.fract() == 0.0 && steps_per_day >= 1.0) {
        return Err(Error::Config(format!(
            "synthetic data needs whole days of whole steps; got {} days of {} h",
            cfg.days, cfg.step_hours
        )));
    }
    if !(0.0..=1.0).contains(&cfg.cloud_min) || !(0.0..1.0).contains(&cfg.noise_phi.abs()) {
        return Err(Error::Config(
            "cloud_min must be in [0, 1] and |noise_phi| < 1".into(),
        ));
    }
    let n = steps_per_day as usize;
    let grid = TimeGrid::new(cfg.step_hours, n * cfg.days, cfg.start)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cloud =
        Uniform::new_inclusive(cfg.cloud_min, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let spike = Uniform::new_inclusive(
        cfg.spike_min_kw.max(0.0),
        cfg.spike_max_kw.max(cfg.spike_min_kw).max(0.0),
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let spike_hour = Uniform::new(18.5, 21.5).map_err(|e| Error::Config(e.to_string()))?;
    let noise =
        Normal::new(0.0, cfg.noise_sigma.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;

    let h = cfg.step_hours;
    let mut demand = Vec::with_capacity(grid.steps());
    let mut generation = Vec::with_capacity(grid.steps());
    let mut ar = 0.0;
    for _ in 0..cfg.days {
        let c = cloud.sample(&mut rng);
        let height = spike.sample(&mut rng);
        let at = spike_hour.sample(&mut rng);
        for k in 0..n {
            let hour = (k as f64 + 0.5) * h;
            ar = cfg.noise_phi * ar + noise.sample(&mut rng);
            let load_kw = (load_shape(cfg, hour) + height * bump(hour, at, 0.2) + ar).max(0.05);
            demand.push(load_kw * h);
            generation.push(cfg.pv_kwp * c * clear_sky(hour) * h);
        }
    }
    Scenario::new(grid, demand, generation)
}
