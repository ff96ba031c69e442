//! Battery model: grid-side actions, ramp and capacity limits, state updates
//! and the greedy backup-only policy.
//!
//! Sign convention: an action `s` is energy drawn from the grid side of the
//! storage in one step, positive while charging. Charging `s > 0` stores
//! `eta_ch·s`; discharging `s < 0` removes `|s|/eta_dis` from the cells.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::NetLoadSeries;

/// Tolerance on every battery bound check, in kWh.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    eta_ch: f64,
    eta_dis: f64,
    delta_min: f64,
    delta_max: f64,
    b_min: f64,
    b_max: f64,
}

impl BatterySpec {
    pub fn new(
        eta_ch: f64,
        eta_dis: f64,
        delta_min: f64,
        delta_max: f64,
        b_min: f64,
        b_max: f64,
    ) -> Result<Self> {
        let spec = BatterySpec {
            eta_ch,
            eta_dis,
            delta_min,
            delta_max,
            b_min,
            b_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with no ramp capability; useful as the "no storage" case.
    pub fn idle(b_min: f64, b_max: f64) -> Result<Self> {
        BatterySpec::new(1.0, 1.0, 0.0, 0.0, b_min, b_max)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.eta_ch,
            self.eta_dis,
            self.delta_min,
            self.delta_max,
            self.b_min,
            self.b_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "battery parameters must be finite".into(),
            ));
        }
        if !(self.eta_ch > 0.0 && self.eta_ch <= 1.0) {
            return Err(Error::Validation(format!(
                "eta_ch {} outside (0, 1]",
                self.eta_ch
            )));
        }
        if !(self.eta_dis > 0.0 && self.eta_dis <= 1.0) {
            return Err(Error::Validation(format!(
                "eta_dis {} outside (0, 1]",
                self.eta_dis
            )));
        }
        if self.delta_min > 0.0 || self.delta_max < 0.0 {
            return Err(Error::Validation(format!(
                "ramp limits must satisfy delta_min <= 0 <= delta_max, got [{}, {}]",
                self.delta_min, self.delta_max
            )));
        }
        if !(self.b_min >= 0.0 && self.b_min < self.b_max) {
            return Err(Error::Validation(format!(
                "capacity limits must satisfy 0 <= b_min < b_max, got [{}, {}]",
                self.b_min, self.b_max
            )));
        }
        Ok(())
    }

    pub fn eta_ch(&self) -> f64 {
        self.eta_ch
    }

    pub fn eta_dis(&self) -> f64 {
        self.eta_dis
    }

    pub fn delta_min(&self) -> f64 {
        self.delta_min
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// Usable charge range b_max − b_min in kWh.
    pub fn usable_range(&self) -> f64 {
        self.b_max - self.b_min
    }

    /// Replaces the ramp limits from an `xC-yC` rating over the usable range.
    pub fn with_c_rating(&self, rating: CRating) -> BatterySpec {
        BatterySpec {
            delta_max: rating.charge * self.usable_range(),
            delta_min: -rating.discharge * self.usable_range(),
            ..*self
        }
    }

    /// Grid-side action limits `(s_lo, s_hi)` for one step of `h` hours.
    pub fn step_bounds(&self, step_hours: f64) -> (f64, f64) {
        (
            self.delta_min * step_hours * self.eta_dis,
            self.delta_max * step_hours / self.eta_ch,
        )
    }

    /// Change of stored energy caused by grid-side action `s`.
    pub fn internal_delta(&self, s: f64) -> f64 {
        s.max(0.0) * self.eta_ch - (-s).max(0.0) / self.eta_dis
    }

    pub fn contains(&self, b: f64) -> bool {
        b >= self.b_min - FEASIBILITY_TOL && b <= self.b_max + FEASIBILITY_TOL
    }
}

/// Ramp rating `xC-yC`: full usable range charged in 1/x h, discharged in 1/y h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CRating {
    pub charge: f64,
    pub discharge: f64,
}

impl FromStr for CRating {
    type Err = Error;

    fn from_str(tag: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("'{tag}' is not an xC-yC rating"));
        let upper = tag.trim().to_ascii_uppercase();
        let (lhs, rhs) = upper.split_once('-').ok_or_else(bad)?;
        let factor = |part: &str| -> Result<f64> {
            let value: f64 = part
                .trim()
                .strip_suffix('C')
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?;
            if value.is_finite() && value > 0.0 {
                Ok(value)
            } else {
                Err(Error::Parse(format!("C-rate in '{tag}' must be positive")))
            }
        };
        Ok(CRating {
            charge: factor(lhs)?,
            discharge: factor(rhs)?,
        })
    }
}

impl fmt::Display for CRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}C-{}C", self.charge, self.discharge)
    }
}

/// Parses an `xC-yC` tag and applies it to `spec`.
pub fn parse_c_rating(tag: &str, spec: &BatterySpec) -> Result<BatterySpec> {
    Ok(spec.with_c_rating(tag.parse()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    RampCharge,
    RampDischarge,
    CapacityUpper,
    CapacityLower,
}

/// A bound broken by a proposed action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Value that broke the bound (kWh).
    pub value: f64,
    pub limit: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::RampCharge => "charge ramp limit",
            ViolationKind::RampDischarge => "discharge ramp limit",
            ViolationKind::CapacityUpper => "maximum charge level",
            ViolationKind::CapacityLower => "minimum charge level",
        };
        write!(f, "{what} violated: {} vs limit {}", self.value, self.limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    pub charge: f64,
}

impl BatteryState {
    pub fn new(charge: f64, spec: &BatterySpec) -> Result<Self> {
        if !spec.contains(charge) {
            return Err(Error::Validation(format!(
                "initial charge {charge} outside [{}, {}]",
                spec.b_min(),
                spec.b_max()
            )));
        }
        Ok(BatteryState { charge })
    }
}

/// Applies grid-side action `s` for one step, checking ramp and capacity limits.
///
/// Results within [`FEASIBILITY_TOL`] of a capacity bound are snapped onto it.
pub fn apply_action(
    state: BatteryState,
    s: f64,
    spec: &BatterySpec,
    step_hours: f64,
) -> Result<BatteryState> {
    let (lo, hi) = spec.step_bounds(step_hours);
    if s > hi + FEASIBILITY_TOL {
        return Err(Error::InfeasibleAction(Violation {
            kind: ViolationKind::RampCharge,
            value: s,
            limit: hi,
        }));
    }
    if s < lo - FEASIBILITY_TOL {
        return Err(Error::InfeasibleAction(Violation {
            kind: ViolationKind::RampDischarge,
            value: s,
            limit: lo,
        }));
    }
    let next = state.charge + spec.internal_delta(s);
    if next > spec.b_max() + FEASIBILITY_TOL {
        return Err(Error::InfeasibleAction(Violation {
            kind: ViolationKind::CapacityUpper,
            value: next,
            limit: spec.b_max(),
        }));
    }
    if next < spec.b_min() - FEASIBILITY_TOL {
        return Err(Error::InfeasibleAction(Violation {
            kind: ViolationKind::CapacityLower,
            value: next,
            limit: spec.b_min(),
        }));
    }
    Ok(BatteryState {
        charge: next.clamp(spec.b_min(), spec.b_max()),
    })
}

/// Closest feasible action to `s` from `state`.
pub fn clamp_action(state: BatteryState, s: f64, spec: &BatterySpec, step_hours: f64) -> f64 {
    let (lo, hi) = spec.step_bounds(step_hours);
    let headroom = ((spec.b_max() - state.charge) / spec.eta_ch()).max(0.0);
    let available = ((state.charge - spec.b_min()) * spec.eta_dis()).max(0.0);
    s.clamp(lo, hi).clamp(-available, headroom)
}

/// Storage actions over a horizon with the resulting charge trajectory and
/// billed grid energy max(0, z_i + s_i).
#[derive(Debug, Clone, PartialEq)]
pub struct StorageSchedule {
    initial_charge: f64,
    actions: Vec<f64>,
    charge: Vec<f64>,
    grid_energy: Vec<f64>,
}

impl StorageSchedule {
    /// Replays `actions` through [`apply_action`] from `b0`.
    pub fn from_actions(
        z: &NetLoadSeries,
        actions: Vec<f64>,
        spec: &BatterySpec,
        b0: f64,
        step_hours: f64,
    ) -> Result<Self> {
        Error::check_len(z.len(), actions.len())?;
        let mut state = BatteryState::new(b0, spec)?;
        let mut charge = Vec::with_capacity(actions.len());
        for &s in &actions {
            state = apply_action(state, s, spec, step_hours)?;
            charge.push(state.charge);
        }
        let grid_energy = billed_energy(z.values(), &actions);
        Ok(StorageSchedule {
            initial_charge: b0,
            actions,
            charge,
            grid_energy,
        })
    }

    /// Builds a schedule from externally computed trajectories without replay.
    pub(crate) fn from_parts(
        z: &NetLoadSeries,
        initial_charge: f64,
        actions: Vec<f64>,
        charge: Vec<f64>,
    ) -> Self {
        let grid_energy = billed_energy(z.values(), &actions);
        StorageSchedule {
            initial_charge,
            actions,
            charge,
            grid_energy,
        }
    }

    /// The schedule that never uses the battery.
    pub fn idle(z: &NetLoadSeries, b0: f64) -> Self {
        StorageSchedule::from_parts(z, b0, vec![0.0; z.len()], vec![b0; z.len()])
    }

    pub fn initial_charge(&self) -> f64 {
        self.initial_charge
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn charge(&self) -> &[f64] {
        &self.charge
    }

    pub fn grid_energy(&self) -> &[f64] {
        &self.grid_energy
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `[b0, b_1, …, b_N]`.
    pub fn trajectory(&self) -> Vec<f64> {
        std::iter::once(self.initial_charge)
            .chain(self.charge.iter().copied())
            .collect()
    }

    /// Largest grid draw max_i (z_i + s_i)/h in kW.
    pub fn peak_kw(&self, z: &NetLoadSeries, step_hours: f64) -> f64 {
        z.values()
            .iter()
            .zip(&self.actions)
            .map(|(z, s)| (z + s) / step_hours)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn billed_energy(z: &[f64], actions: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(actions)
        .map(|(z, s)| (z + s).max(0.0))
        .collect()
}

/// The three candidate terms of the greedy rule at one step; the action is
/// their max (net load ≥ 0, discharging) or min (net load < 0, charging).
pub fn greedy_candidates(z: f64, charge: f64, spec: &BatterySpec, step_hours: f64) -> [f64; 3] {
    let (lo, hi) = spec.step_bounds(step_hours);
    if z >= 0.0 {
        [-z, lo, -(charge - spec.b_min()) * spec.eta_dis()]
    } else {
        [-z, hi, (spec.b_max() - charge) / spec.eta_ch()]
    }
}

/// Backup-only policy with no look-ahead: absorb surplus generation, cover
/// deficits from storage, each limited by ramp and capacity.
pub fn greedy_backup(
    z: &NetLoadSeries,
    spec: &BatterySpec,
    b0: f64,
    step_hours: f64,
) -> Result<StorageSchedule> {
    let mut state = BatteryState::new(b0, spec)?;
    let mut actions = Vec::with_capacity(z.len());
    let mut charge = Vec::with_capacity(z.len());
    for &zi in z.values() {
        let terms = greedy_candidates(zi, state.charge, spec, step_hours);
        let s = if zi >= 0.0 {
            terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            terms.iter().copied().fold(f64::INFINITY, f64::min)
        };
        state = apply_action(state, s, spec, step_hours)?;
        actions.push(s);
        charge.push(state.charge);
    }
    Ok(StorageSchedule::from_parts(z, b0, actions, charge))
}
