//! Run configuration files.
//!
//! Relative paths inside a configuration are resolved against the directory
//! of the file that names them.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer};

use crate::battery::{parse_c_rating, BatterySpec};
use crate::error::{Error, Result};
use crate::optimizer::{BackupPolicy, Incident};
use crate::synthetic::{generate, SyntheticConfig};
use crate::tariff::{PpcTable, TariffConfig, TouSchedule};
use crate::timeseries::{load_scenario, read_series, Scenario, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Greedy,
    Mpc,
    Sweep,
    /// Writes synthetic demand and generation files.
    Synth,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simulate" | "deterministic" => Ok(Mode::Simulate),
            "greedy" => Ok(Mode::Greedy),
            "mpc" => Ok(Mode::Mpc),
            "sweep" => Ok(Mode::Sweep),
            "synth" | "synthetic" => Ok(Mode::Synth),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Greedy => "greedy",
            Mode::Mpc => "mpc",
            Mode::Sweep => "sweep",
            Mode::Synth => "synth",
        })
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Grid draw cap for the optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PeakCap {
    /// Smallest contract level the battery can hold.
    #[default]
    Auto,
    None,
    Kw(f64),
}

impl<'de> Deserialize<'de> for PeakCap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Number(kw) if kw >= 0.0 => Ok(PeakCap::Kw(kw)),
            Raw::Number(kw) => Err(serde::de::Error::custom(format!(
                "peak cap {kw} must be >= 0"
            ))),
            Raw::Word(w) => match w.as_str() {
                "auto" => Ok(PeakCap::Auto),
                "none" => Ok(PeakCap::None),
                other => Err(serde::de::Error::custom(format!(
                    "peak_cap must be \"auto\", \"none\" or a number, got '{other}'"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    /// Step of the demand and generation files, hours.
    #[serde(default = "default_step_hours")]
    pub step_hours: f64,
    pub demand: Option<PathBuf>,
    pub generation: Option<PathBuf>,
    pub synthetic: Option<SyntheticConfig>,
}

fn default_step_hours() -> f64 {
    0.25
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryBlock {
    pub eta_ch: f64,
    pub eta_dis: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub b0: f64,
    pub c_rating: Option<String>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
}

impl BatteryBlock {
    pub fn spec(&self) -> Result<BatterySpec> {
        match (&self.c_rating, self.delta_min, self.delta_max) {
            (Some(tag), None, None) => {
                let base =
                    BatterySpec::new(self.eta_ch, self.eta_dis, 0.0, 0.0, self.b_min, self.b_max)?;
                parse_c_rating(tag, &base)
            }
            (None, Some(lo), Some(hi)) => {
                BatterySpec::new(self.eta_ch, self.eta_dis, lo, hi, self.b_min, self.b_max)
            }
            _ => Err(Error::Config(
                "battery needs either c_rating or both delta_min and delta_max".into(),
            )),
        }
    }

    /// Same battery with another C-rating.
    pub fn spec_with_rating(&self, tag: &str) -> Result<BatterySpec> {
        let base = BatterySpec::new(self.eta_ch, self.eta_dis, 0.0, 0.0, self.b_min, self.b_max)?;
        parse_c_rating(tag, &base)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffBlock {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    /// Reference contract, kVA; defaults to the level needed without PV or storage.
    pub ppc_kva: Option<f64>,
    #[serde(default)]
    pub peak_cap: PeakCap,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentEntry {
    pub step: usize,
    pub b_set: f64,
    #[serde(default = "one")]
    pub window: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackupBlock {
    /// Euros per kWh of stored energy, weighted by outage probability.
    #[serde(default)]
    pub lambda: f64,
    /// Constant outage probability per step.
    pub outage_prob: Option<f64>,
    /// Per-step outage probability series.
    pub outage_profile: Option<PathBuf>,
    #[serde(default)]
    pub incidents: Vec<IncidentEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcBlock {
    /// Leading days of the scenario used as forecaster history.
    pub history_days: usize,
    pub window: Option<usize>,
    #[serde(default)]
    pub perfect_forecast: bool,
    #[serde(default)]
    pub ridge: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub c_ratings: Vec<String>,
    /// Preset names or tariff file paths.
    pub tariffs: Vec<String>,
    #[serde(default = "yes")]
    pub include_baseline: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub out_dir: Option<PathBuf>,
    /// Days billed for the contract; defaults to the evaluated horizon.
    pub billing_days: Option<f64>,
    pub scenario: ScenarioBlock,
    pub battery: BatteryBlock,
    pub tariff: TariffBlock,
    #[serde(default)]
    pub backup: BackupBlock,
    pub mpc: Option<MpcBlock>,
    pub sweep: Option<SweepBlock>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Checks the blocks `mode` needs and the files the configuration names.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let s = &self.scenario;
        if s.demand.is_some() != s.generation.is_some() {
            return Err(Error::Config(
                "scenario needs both demand and generation files".into(),
            ));
        }
        if mode == Mode::Synth && s.synthetic.is_none() {
            return Err(Error::Config(
                "synth mode needs a [scenario.synthetic] block".into(),
            ));
        }
        match (&s.demand, &s.generation, &s.synthetic) {
            (Some(d), Some(g), None) => {
                for p in [d, g] {
                    let full = self.resolve(p);
                    if !full.is_file() {
                        return Err(Error::Config(format!(
                            "scenario file {} does not exist",
                            full.display()
                        )));
                    }
                }
            }
            (None, None, Some(_)) => {}
            (Some(_), Some(_), Some(_)) => {
                return Err(Error::Config(
                    "scenario takes files or [scenario.synthetic], not both".into(),
                ))
            }
            _ => return Err(Error::Config(
                "scenario needs either demand and generation files or a [scenario.synthetic] block"
                    .into(),
            )),
        }
        if mode == Mode::Synth {
            return Ok(());
        }
        self.battery.spec()?;
        match (&self.tariff.preset, &self.tariff.file) {
            (Some(_), None) => {}
            (None, Some(f)) if self.resolve(f).is_file() => {}
            (None, Some(f)) => {
                return Err(Error::Config(format!(
                    "tariff file {} does not exist",
                    self.resolve(f).display()
                )))
            }
            _ => {
                return Err(Error::Config(
                    "tariff needs exactly one of preset or file".into(),
                ))
            }
        }
        if let Some(p) = &self.backup.outage_profile {
            if self.backup.outage_prob.is_some() {
                return Err(Error::Config(
                    "backup takes outage_prob or outage_profile, not both".into(),
                ));
            }
            if !self.resolve(p).is_file() {
                return Err(Error::Config(format!(
                    "outage profile {} does not exist",
                    self.resolve(p).display()
                )));
            }
        }
        match mode {
            Mode::Mpc if self.mpc.is_none() => {
                Err(Error::Config("mpc mode needs an [mpc] block".into()))
            }
            Mode::Sweep => match &self.sweep {
                None => Err(Error::Config("sweep mode needs a [sweep] block".into())),
                Some(sw) if sw.c_ratings.is_empty() || sw.tariffs.is_empty() => Err(Error::Config(
                    "sweep needs at least one c_rating and one tariff".into(),
                )),
                Some(_) => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Demand and generation; `seed` replaces the synthetic seed.
    pub fn scenario(&self, seed: Option<u64>) -> Result<Scenario> {
        let s = &self.scenario;
        if let (Some(d), Some(g)) = (&s.demand, &s.generation) {
            return load_scenario(&self.resolve(d), &self.resolve(g), s.step_hours);
        }
        let mut synth = s
            .synthetic
            .clone()
            .ok_or_else(|| Error::Config("no scenario source configured".into()))?;
        if let Some(seed) = seed {
            synth.seed = seed;
        }
        generate(&synth)
    }

    /// Tariff named by a sweep entry or the `[tariff]` block.
    pub fn load_tariff(&self, name_or_path: &str) -> Result<(String, TouSchedule, PpcTable)> {
        if name_or_path.ends_with(".toml") {
            let path = self.resolve(Path::new(name_or_path));
            let cfg = TariffConfig::load(&path)?;
            let name = cfg.name.unwrap_or_else(|| {
                path.file_stem().map_or_else(
                    || name_or_path.to_string(),
                    |s| s.to_string_lossy().into_owned(),
                )
            });
            Ok((name, cfg.schedule, cfg.ppc_table.unwrap_or_default()))
        } else {
            Ok((
                name_or_path.to_string(),
                TouSchedule::preset(name_or_path)?,
                PpcTable::default(),
            ))
        }
    }

    pub fn tariff(&self) -> Result<(String, TouSchedule, PpcTable)> {
        match (&self.tariff.preset, &self.tariff.file) {
            (Some(p), None) => self.load_tariff(p),
            (None, Some(f)) => self.load_tariff(&f.to_string_lossy()),
            _ => Err(Error::Config(
                "tariff needs exactly one of preset or file".into(),
            )),
        }
    }

    /// Backup policy over `grid`; `None` when no backup terms are configured.
    pub fn backup(&self, grid: &TimeGrid) -> Result<Option<BackupPolicy>> {
        let b = &self.backup;
        let n = grid.steps();
        let outage_prob = match (&b.outage_profile, b.outage_prob) {
            (Some(path), _) => {
                let series = read_series(&self.resolve(path))?;
                Error::check_len(n, series.len()).map_err(|_| {
                    Error::Alignment(format!(
                        "outage profile has {} rows, scenario has {n}",
                        series.len()
                    ))
                })?;
                series.into_iter().map(|(_, p)| p).collect()
            }
            (None, Some(p)) => vec![p; n],
            (None, None) => vec![0.0; n],
        };
        let policy = BackupPolicy {
            outage_prob,
            lambda: b.lambda,
            incidents: b
                .incidents
                .iter()
                .map(|e| Incident {
                    step: e.step,
                    b_set: e.b_set,
                    window: e.window,
                })
                .collect(),
        };
        Ok((!policy.is_trivial()).then_some(policy))
    }
}
