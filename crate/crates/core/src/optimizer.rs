//! Finite-horizon storage scheduling as a linear program.
//!
//! Charging and discharging are split into two non-negative variables so the
//! efficiency-dependent dynamics stay linear. The split is exact whenever no
//! optimum charges and discharges in the same step; solutions are checked for
//! that after the solve instead of assuming it.
//!
//! Per step `i` the program has variables `s_plus_i`, `s_minus_i`, `grid_energy_i`
//! and `b_i` and minimises `Σ price_i·grid_energy_i − lambda·Σ outage_prob_i·b_i` subject to
//!
//! ```text
//! s_plus_i  <= delta_max·h/eta_ch                      ramp
//! s_minus_i <= −delta_min·h·eta_dis                    ramp
//! b_min <= b_i <= b_max                                capacity
//! grid_energy_i >= 0                                         self-sufficiency
//! grid_energy_i >= z_i + s_plus_i − s_minus_i                arbitrage
//! b_i = b_{i−1} + eta_ch·s_plus_i − s_minus_i/eta_dis  dynamics
//! (z_i + s_plus_i − s_minus_i)/h <= p_set              peak (when capped)
//! b_k >= b_set for each scheduled outage step k        backup
//! ```

use std::fmt;

use crate::battery::{BatterySpec, StorageSchedule, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::lp::{ConstraintClass, LinearProgram, LpOutcome, Sense, VarDomain};
use crate::tariff::{energy_cost, PpcTable};
use crate::timeseries::{NetLoadSeries, TimeGrid};

/// Largest acceptable s_plus·s_minus in any step of a returned schedule.
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;
/// Primal feasibility tolerance for solver output.
pub const PRIMAL_TOL: f64 = 1e-6;

/// Scheduled outage: charge must be at least `b_set` for `window` steps from `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incident {
    pub step: usize,
    pub b_set: f64,
    pub window: usize,
}

impl Incident {
    pub fn new(step: usize, b_set: f64) -> Self {
        Incident {
            step,
            b_set,
            window: 1,
        }
    }

    pub fn covers(&self, i: usize) -> bool {
        i >= self.step && i < self.step + self.window.max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackupPolicy {
    /// Outage probability per step.
    pub outage_prob: Vec<f64>,
    /// Reward weight on stored energy, euros/kWh.
    pub lambda: f64,
    pub incidents: Vec<Incident>,
}

impl BackupPolicy {
    pub fn none(steps: usize) -> Self {
        BackupPolicy {
            outage_prob: vec![0.0; steps],
            lambda: 0.0,
            incidents: Vec::new(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.incidents.is_empty()
            && (self.lambda == 0.0 || self.outage_prob.iter().all(|&p| p == 0.0))
    }

    fn validate(&self, steps: usize, spec: &BatterySpec) -> Result<()> {
        Error::check_len(steps, self.outage_prob.len())?;
        if let Some(p) = self.outage_prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Validation(format!(
                "outage probability {p} outside [0, 1]"
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Validation(format!(
                "lambda {} must be >= 0",
                self.lambda
            )));
        }
        for inc in &self.incidents {
            if inc.step >= steps {
                return Err(Error::Validation(format!(
                    "incident step {} outside horizon of {steps} steps",
                    inc.step
                )));
            }
            if !(inc.b_set <= spec.b_max()) || !inc.b_set.is_finite() {
                return Err(Error::Validation(format!(
                    "incident b_set {} exceeds b_max {}",
                    inc.b_set,
                    spec.b_max()
                )));
            }
        }
        Ok(())
    }

    /// Policy restricted to steps `offset..offset + len`, re-indexed from zero.
    pub fn window(&self, offset: usize, len: usize) -> BackupPolicy {
        let end = offset + len;
        let incidents = self
            .incidents
            .iter()
            .filter_map(|inc| {
                let inc_end = inc.step + inc.window.max(1);
                if inc_end <= offset || inc.step >= end {
                    return None;
                }
                let start = inc.step.max(offset);
                Some(Incident {
                    step: start - offset,
                    b_set: inc.b_set,
                    window: inc_end.min(end) - start,
                })
            })
            .collect();
        BackupPolicy {
            outage_prob: self.outage_prob[offset..end].to_vec(),
            lambda: self.lambda,
            incidents,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptProblem {
    z: NetLoadSeries,
    prices: Vec<f64>,
    spec: BatterySpec,
    b0: f64,
    grid: TimeGrid,
    p_set: Option<f64>,
    backup: Option<BackupPolicy>,
}

impl OptProblem {
    pub fn new(
        z: NetLoadSeries,
        prices: Vec<f64>,
        spec: BatterySpec,
        b0: f64,
        grid: TimeGrid,
    ) -> Result<Self> {
        Error::check_len(grid.steps(), z.len())?;
        Error::check_len(grid.steps(), prices.len())?;
        if let Some(p) = prices.iter().find(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("price {p} is not finite")));
        }
        spec.validate()?;
        if !spec.contains(b0) {
            return Err(Error::Validation(format!(
                "initial charge {b0} outside [{}, {}]",
                spec.b_min(),
                spec.b_max()
            )));
        }
        Ok(OptProblem {
            z,
            prices,
            spec,
            b0: b0.clamp(spec.b_min(), spec.b_max()),
            grid,
            p_set: None,
            backup: None,
        })
    }

    /// Caps grid draw at `p_set` kW; `+∞` removes the cap.
    pub fn with_peak_cap(mut self, p_set: f64) -> Result<Self> {
        if p_set.is_nan() || p_set < 0.0 {
            return Err(Error::Validation(format!("peak cap {p_set} must be >= 0")));
        }
        self.p_set = p_set.is_finite().then_some(p_set);
        Ok(self)
    }

    pub fn with_backup(mut self, backup: BackupPolicy) -> Result<Self> {
        backup.validate(self.grid.steps(), &self.spec)?;
        self.backup = Some(backup);
        Ok(self)
    }

    pub fn without_peak_cap(mut self) -> Self {
        self.p_set = None;
        self
    }

    pub fn z(&self) -> &NetLoadSeries {
        &self.z
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn spec(&self) -> &BatterySpec {
        &self.spec
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn p_set(&self) -> Option<f64> {
        self.p_set
    }

    pub fn backup(&self) -> Option<&BackupPolicy> {
        self.backup.as_ref()
    }

    pub fn backup_mut(&mut self) -> Option<&mut BackupPolicy> {
        self.backup.as_mut()
    }

    fn incidents(&self) -> &[Incident] {
        self.backup.as_ref().map_or(&[], |b| b.incidents.as_slice())
    }

    /// −lambda·Σ outage_prob_i·b_i for a charge trajectory.
    pub fn backup_reward(&self, charge: &[f64]) -> f64 {
        self.backup.as_ref().map_or(0.0, |b| {
            -b.lambda
                * b.outage_prob
                    .iter()
                    .zip(charge)
                    .map(|(p, b)| p * b)
                    .sum::<f64>()
        })
    }
}

/// Variable indices of step `i` in the program built by [`build_lp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepVars {
    pub s_plus: usize,
    pub s_minus: usize,
    pub grid_energy: usize,
    pub charge: usize,
}

pub fn step_vars(i: usize) -> StepVars {
    StepVars {
        s_plus: 4 * i,
        s_minus: 4 * i + 1,
        grid_energy: 4 * i + 2,
        charge: 4 * i + 3,
    }
}

pub fn build_lp(p: &OptProblem) -> LinearProgram {
    let h = p.grid.step_hours();
    let spec = &p.spec;
    let (s_lo, s_hi) = spec.step_bounds(h);
    let (lambda, prob) = match &p.backup {
        Some(b) => (b.lambda, Some(&b.outage_prob)),
        None => (0.0, None),
    };

    let mut lp = LinearProgram::new();
    for i in 0..p.z.len() {
        let reward = prob.map_or(0.0, |pr| lambda * pr[i]);
        lp.add_var(format!("s_plus_{i}"), VarDomain::NonNegative, 0.0);
        lp.add_var(format!("s_minus_{i}"), VarDomain::NonNegative, 0.0);
        lp.add_var(format!("grid_{i}"), VarDomain::Free, p.prices[i]);
        lp.add_var(
            format!("b_{i}"),
            VarDomain::Free,
            if reward == 0.0 { 0.0 } else { -reward },
        );
    }

    for (i, &z) in p.z.values().iter().enumerate() {
        let v = step_vars(i);
        lp.add_row(
            format!("ramp_up_{i}"),
            vec![(v.s_plus, 1.0)],
            Sense::Le,
            s_hi,
            ConstraintClass::Ramp,
            i,
        );
        lp.add_row(
            format!("ramp_down_{i}"),
            vec![(v.s_minus, 1.0)],
            Sense::Le,
            -s_lo,
            ConstraintClass::Ramp,
            i,
        );
        lp.add_row(
            format!("cap_lo_{i}"),
            vec![(v.charge, 1.0)],
            Sense::Ge,
            spec.b_min(),
            ConstraintClass::Capacity,
            i,
        );
        lp.add_row(
            format!("cap_hi_{i}"),
            vec![(v.charge, 1.0)],
            Sense::Le,
            spec.b_max(),
            ConstraintClass::Capacity,
            i,
        );
        lp.add_row(
            format!("selfsuff_{i}"),
            vec![(v.grid_energy, 1.0)],
            Sense::Ge,
            0.0,
            ConstraintClass::SelfSufficiency,
            i,
        );
        lp.add_row(
            format!("arb_{i}"),
            vec![(v.grid_energy, 1.0), (v.s_plus, -1.0), (v.s_minus, 1.0)],
            Sense::Ge,
            z,
            ConstraintClass::Arbitrage,
            i,
        );
        let mut dynamics = vec![
            (v.charge, 1.0),
            (v.s_plus, -spec.eta_ch()),
            (v.s_minus, 1.0 / spec.eta_dis()),
        ];
        let rhs = if i == 0 {
            p.b0
        } else {
            dynamics.push((step_vars(i - 1).charge, -1.0));
            0.0
        };
        lp.add_row(
            format!("dyn_{i}"),
            dynamics,
            Sense::Eq,
            rhs,
            ConstraintClass::Dynamics,
            i,
        );
        if let Some(cap) = p.p_set {
            lp.add_row(
                format!("peak_{i}"),
                vec![(v.s_plus, 1.0), (v.s_minus, -1.0)],
                Sense::Le,
                cap * h - z,
                ConstraintClass::Peak,
                i,
            );
        }
    }

    for (k, inc) in p.incidents().iter().enumerate() {
        for i in (inc.step..inc.step + inc.window.max(1)).take_while(|&i| i < p.z.len()) {
            lp.add_row(
                format!("backup_{k}_{i}"),
                vec![(step_vars(i).charge, 1.0)],
                Sense::Ge,
                inc.b_set,
                ConstraintClass::Backup,
                i,
            );
        }
    }
    lp
}

/// Why a problem has no feasible schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility {
    /// Constraint that cannot be met: `Peak` or `Backup`.
    pub class: ConstraintClass,
    pub step: usize,
    /// Battery limit that makes it unreachable (`Ramp` or `Capacity`).
    pub limited_by: ConstraintClass,
    /// Index into the problem's incident list for backup failures.
    pub incident: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} constraint infeasible at step {} (limited by {}): {}",
            self.class, self.step, self.limited_by, self.detail
        )
    }
}

/// Exact feasibility test by forward propagation of the highest reachable charge.
///
/// Idling is always allowed, so only the peak cap (forcing discharge) and
/// backup levels (forcing charge) can make a problem infeasible, and keeping
/// the charge as high as possible never hurts either.
pub fn check_feasibility(p: &OptProblem) -> Option<Infeasibility> {
    let spec = &p.spec;
    let h = p.grid.step_hours();
    let (s_lo, s_hi) = spec.step_bounds(h);
    let mut best = p.b0;
    for (i, &z) in p.z.values().iter().enumerate() {
        let allowed = p.p_set.map_or(f64::INFINITY, |cap| cap * h - z);
        if allowed < 0.0 {
            let need = -allowed;
            if need > -s_lo + FEASIBILITY_TOL {
                return Some(Infeasibility {
                    class: ConstraintClass::Peak,
                    step: i,
                    limited_by: ConstraintClass::Ramp,
                    incident: None,
                    detail: format!(
                        "grid draw {:.4} kW needs {need:.4} kWh of discharge but the ramp allows {:.4}",
                        z / h,
                        -s_lo
                    ),
                });
            }
            let after = best - need / spec.eta_dis();
            if after < spec.b_min() - FEASIBILITY_TOL {
                return Some(Infeasibility {
                    class: ConstraintClass::Peak,
                    step: i,
                    limited_by: ConstraintClass::Capacity,
                    incident: None,
                    detail: format!(
                        "shaving {:.4} kW to the cap needs {need:.4} kWh but at most {:.4} kWh can be stored by then",
                        z / h,
                        ((best - spec.b_min()) * spec.eta_dis()).max(0.0)
                    ),
                });
            }
            best = after.max(spec.b_min());
        } else {
            best = (best + spec.eta_ch() * s_hi.min(allowed)).min(spec.b_max());
        }
        for (k, inc) in p.incidents().iter().enumerate() {
            if inc.covers(i) && best < inc.b_set - FEASIBILITY_TOL {
                return Some(Infeasibility {
                    class: ConstraintClass::Backup,
                    step: i,
                    limited_by: if best >= spec.b_max() - FEASIBILITY_TOL {
                        ConstraintClass::Capacity
                    } else {
                        ConstraintClass::Ramp
                    },
                    incident: Some(k),
                    detail: format!(
                        "backup level {:.4} kWh unreachable; at most {best:.4} kWh by step {i}",
                        inc.b_set
                    ),
                });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptSolution {
    pub schedule: StorageSchedule,
    /// Energy cost minus the weighted stored energy.
    pub objective: f64,
    pub energy_cost: f64,
    pub backup_reward: f64,
    /// Steps where s_plus·s_minus exceeded [`COMPLEMENTARITY_TOL`], with the product.
    pub complementarity_violations: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptOutcome {
    Optimal(OptSolution),
    Infeasible(Infeasibility),
}

impl OptOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, OptOutcome::Optimal(_))
    }

    pub fn optimal(self) -> Option<OptSolution> {
        match self {
            OptOutcome::Optimal(s) => Some(s),
            OptOutcome::Infeasible(_) => None,
        }
    }

    pub fn objective(&self) -> Option<f64> {
        match self {
            OptOutcome::Optimal(s) => Some(s.objective),
            OptOutcome::Infeasible(_) => None,
        }
    }
}

fn complementarity(x: &[f64], steps: usize) -> Vec<(usize, f64)> {
    (0..steps)
        .filter_map(|i| {
            let v = step_vars(i);
            let prod = x[v.s_plus].max(0.0) * x[v.s_minus].max(0.0);
            (prod > COMPLEMENTARITY_TOL).then_some((i, prod))
        })
        .collect()
}

/// Among optimal points, prefer the one with the least battery throughput.
fn minimise_throughput(
    lp: &LinearProgram,
    objective: f64,
    steps: usize,
) -> Result<Option<Vec<f64>>> {
    let mut refined = lp.clone();
    let coeffs: Vec<(usize, f64)> = lp
        .objective()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, &c)| (j, c))
        .collect();
    let slack = 1e-9 * objective.abs().max(1.0);
    refined.add_row(
        "objective_bound",
        coeffs,
        Sense::Le,
        objective + slack,
        ConstraintClass::Auxiliary,
        0,
    );
    let mut throughput = vec![0.0; lp.num_vars()];
    for i in 0..steps {
        let v = step_vars(i);
        throughput[v.s_plus] = 1.0;
        throughput[v.s_minus] = 1.0;
    }
    refined.set_objective(throughput);
    Ok(match refined.solve()? {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    })
}

fn solve_lp(p: &OptProblem) -> Result<OptOutcome> {
    if let Some(why) = check_feasibility(p) {
        return Ok(OptOutcome::Infeasible(why));
    }
    let n = p.z.len();
    let lp = build_lp(p);
    let (mut x, objective) = match lp.solve()? {
        LpOutcome::Optimal { x, objective } => (x, objective),
        LpOutcome::Infeasible => {
            return Err(Error::Solver(
                "simplex reported infeasible on a problem that passed the feasibility check".into(),
            ))
        }
        LpOutcome::Unbounded => return Err(Error::Solver("program unexpectedly unbounded".into())),
    };
    if !complementarity(&x, n).is_empty() {
        if let Some(refined) = minimise_throughput(&lp, objective, n)? {
            if lp.max_violation(&refined).0 <= PRIMAL_TOL {
                x = refined;
            }
        }
    }
    let (worst, row) = lp.max_violation(&x);
    if worst > PRIMAL_TOL {
        return Err(Error::Solver(format!(
            "solution violates {} by {worst:e}",
            row.map_or("a variable domain".to_string(), |r| r.name.clone())
        )));
    }

    let violations = complementarity(&x, n);
    if !violations.is_empty() {
        log::warn!(
            "simultaneous charge and discharge in {} step(s), first at step {}",
            violations.len(),
            violations[0].0
        );
    }
    let h = p.grid.step_hours();
    let actions: Vec<f64> = (0..n)
        .map(|i| {
            let v = step_vars(i);
            x[v.s_plus].max(0.0) - x[v.s_minus].max(0.0)
        })
        .collect();
    let schedule = if violations.is_empty() {
        StorageSchedule::from_actions(&p.z, actions, &p.spec, p.b0, h)
            .map_err(|e| Error::Solver(format!("replay of LP schedule failed: {e}")))?
    } else {
        let charge = (0..n).map(|i| x[step_vars(i).charge]).collect();
        StorageSchedule::from_parts(&p.z, p.b0, actions, charge)
    };
    let cost = energy_cost(schedule.grid_energy(), &p.prices)?;
    let reward = p.backup_reward(schedule.charge());
    Ok(OptOutcome::Optimal(OptSolution {
        objective: cost + reward,
        energy_cost: cost,
        backup_reward: reward,
        schedule,
        complementarity_violations: violations,
    }))
}

/// Arbitrage with zero feed-in and an optional peak cap; no backup terms.
pub fn solve_arbitrage(p: &OptProblem) -> Result<OptOutcome> {
    if p.backup.as_ref().is_some_and(|b| !b.is_trivial()) {
        return Err(Error::Validation(
            "arbitrage solve takes no backup policy; use solve_with_backup".into(),
        ));
    }
    solve_lp(p)
}

/// Arbitrage, peak cap, probable-outage reward and scheduled-outage levels.
pub fn solve_with_backup(p: &OptProblem) -> Result<OptOutcome> {
    solve_lp(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakRecommendation {
    /// max_i z_i/h without storage, kW.
    pub p_max: f64,
    /// Cap to impose, kW (equal to the level).
    pub p_set: f64,
    pub level: f64,
}

/// Smallest PPC level at or above max(P_max + delta_min, 0) that the battery can hold.
pub fn recommend_p_set(
    z: &NetLoadSeries,
    spec: &BatterySpec,
    b0: f64,
    grid: &TimeGrid,
    table: &PpcTable,
) -> Result<PeakRecommendation> {
    let base = OptProblem::new(z.clone(), vec![0.0; z.len()], *spec, b0, *grid)?;
    recommend_for_problem(&base, table)
}

/// As [`recommend_p_set`], keeping the scheduled outage levels of `p` satisfiable too.
pub fn recommend_for_problem(p: &OptProblem, table: &PpcTable) -> Result<PeakRecommendation> {
    let p_max = p.z.peak_kw(p.grid.step_hours());
    let floor = (p_max + p.spec.delta_min()).max(0.0);
    for level in table
        .levels()
        .iter()
        .map(|l| l.kva)
        .filter(|&l| l >= floor - 1e-9)
    {
        let probe = p.clone().with_peak_cap(level)?;
        if check_feasibility(&probe).is_none() {
            return Ok(PeakRecommendation {
                p_max,
                p_set: level,
                level,
            });
        }
    }
    Err(Error::NoContract { peak_kw: p_max })
}
