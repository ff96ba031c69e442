//! C ABI over `storage_coopt`.
//!
//! Objects are opaque heap handles created by `sc_*_new` and released by the
//! matching `sc_*_free`. Every fallible call returns an [`ScStatus`]; on
//! failure a description is available from [`sc_last_error`] on the same
//! thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use storage_coopt::battery::{greedy_backup, parse_c_rating, BatterySpec};
use storage_coopt::metrics::loss_of_opportunity;
use storage_coopt::optimizer::{
    solve_with_backup, BackupPolicy, Incident, OptOutcome, OptProblem, OptSolution,
};
use storage_coopt::tariff::{PpcTable, RateType};
use storage_coopt::timeseries::{NetLoadSeries, TimeGrid};
use storage_coopt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The problem has no feasible schedule.
    Infeasible = 3,
    Solver = 4,
    /// No contract level matches or covers the request.
    NoContract = 5,
    UndefinedMetric = 6,
    /// A buffer is too short for the result.
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScRateType {
    Single = 0,
    Dual = 1,
    Triple = 2,
}

pub struct ScBattery {
    spec: BatterySpec,
}

pub struct ScProblem {
    problem: OptProblem,
}

pub struct ScSolution {
    solution: OptSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: ScStatus, msg: impl Into<String>) -> ScStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> ScStatus {
    match e {
        Error::Solver(_) => ScStatus::Solver,
        Error::NoContract { .. } | Error::UnknownLevel(_) => ScStatus::NoContract,
        Error::UndefinedMetric(_) => ScStatus::UndefinedMetric,
        _ => ScStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> ScStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

/// Runs `f`, turning a panic into [`ScStatus::Panic`].
fn guard(f: impl FnOnce() -> ScStatus) -> ScStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(ScStatus::Panic, "internal panic"))
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

fn grid(step_hours: f64, steps: usize) -> Result<TimeGrid, Error> {
    TimeGrid::new(step_hours, steps, Default::default())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Battery with explicit ramp limits in kW.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sc_battery_new(
    eta_ch: f64,
    eta_dis: f64,
    delta_min: f64,
    delta_max: f64,
    b_min: f64,
    b_max: f64,
    out: *mut *mut ScBattery,
) -> ScStatus {
    guard(|| {
        if out.is_null() {
            return fail(ScStatus::NullPointer, "out is null");
        }
        match BatterySpec::new(eta_ch, eta_dis, delta_min, delta_max, b_min, b_max) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(ScBattery { spec }));
                ScStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Battery whose ramp limits follow an "xC-yC" tag over the usable range.
///
/// # Safety
/// `tag` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_battery_with_c_rating(
    tag: *const c_char,
    eta_ch: f64,
    eta_dis: f64,
    b_min: f64,
    b_max: f64,
    out: *mut *mut ScBattery,
) -> ScStatus {
    guard(|| {
        if tag.is_null() || out.is_null() {
            return fail(ScStatus::NullPointer, "tag or out is null");
        }
        let Ok(tag) = CStr::from_ptr(tag).to_str() else {
            return fail(ScStatus::InvalidArgument, "tag is not UTF-8");
        };
        let spec = BatterySpec::new(eta_ch, eta_dis, 0.0, 0.0, b_min, b_max)
            .and_then(|b| parse_c_rating(tag, &b));
        match spec {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(ScBattery { spec }));
                ScStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Grid-side ramp bounds for one step, kWh.
///
/// # Safety
/// `battery` must come from a battery constructor; `lo` and `hi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_battery_step_bounds(
    battery: *const ScBattery,
    step_hours: f64,
    lo: *mut f64,
    hi: *mut f64,
) -> ScStatus {
    guard(|| {
        if battery.is_null() || lo.is_null() || hi.is_null() {
            return fail(ScStatus::NullPointer, "null argument");
        }
        if !(step_hours > 0.0) {
            return fail(ScStatus::InvalidArgument, "step_hours must be positive");
        }
        let (l, h) = (*battery).spec.step_bounds(step_hours);
        *lo = l;
        *hi = h;
        ScStatus::Ok
    })
}

/// # Safety
/// `battery` must come from a battery constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn sc_battery_free(battery: *mut ScBattery) {
    if !battery.is_null() {
        drop(Box::from_raw(battery));
    }
}

/// Scheduling problem over `n` steps of net load `z` (kWh per step) and prices (euros/kWh).
///
/// # Safety
/// `z` and `prices` must point to `n` readable values; `battery` must be a
/// live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_problem_new(
    z: *const f64,
    prices: *const f64,
    n: usize,
    step_hours: f64,
    battery: *const ScBattery,
    b0: f64,
    out: *mut *mut ScProblem,
) -> ScStatus {
    guard(|| {
        let (Some(z), Some(prices)) = (slice(z, n), slice(prices, n)) else {
            return fail(ScStatus::NullPointer, "z or prices is null");
        };
        if battery.is_null() || out.is_null() {
            return fail(ScStatus::NullPointer, "battery or out is null");
        }
        let built = grid(step_hours, n).and_then(|g| {
            OptProblem::new(
                NetLoadSeries::new(z.to_vec())?,
                prices.to_vec(),
                (*battery).spec,
                b0,
                g,
            )
        });
        match built {
            Ok(problem) => {
                *out = Box::into_raw(Box::new(ScProblem { problem }));
                ScStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Caps grid draw at `kw`; pass infinity to remove the cap.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_problem_set_peak_cap(problem: *mut ScProblem, kw: f64) -> ScStatus {
    guard(|| {
        if problem.is_null() {
            return fail(ScStatus::NullPointer, "problem is null");
        }
        let p = &mut (*problem).problem;
        match p.clone().with_peak_cap(kw) {
            Ok(q) => {
                *p = q;
                ScStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Outage terms: reward weight `lambda` on stored energy with per-step
/// probabilities `outage_prob` (null means zero everywhere), and
/// `n_incidents` scheduled levels `incident_levels[k]` at `incident_steps[k]`.
///
/// # Safety
/// `problem` must be a live handle; `outage_prob` must be null or hold one
/// value per step; the incident arrays must hold `n_incidents` values.
#[no_mangle]
pub unsafe extern "C" fn sc_problem_set_backup(
    problem: *mut ScProblem,
    lambda: f64,
    outage_prob: *const f64,
    incident_steps: *const usize,
    incident_levels: *const f64,
    n_incidents: usize,
) -> ScStatus {
    guard(|| {
        if problem.is_null() {
            return fail(ScStatus::NullPointer, "problem is null");
        }
        let p = &mut (*problem).problem;
        let n = p.z().len();
        let prob = if outage_prob.is_null() {
            vec![0.0; n]
        } else {
            std::slice::from_raw_parts(outage_prob, n).to_vec()
        };
        let incidents = if n_incidents == 0 {
            Vec::new()
        } else {
            if incident_steps.is_null() || incident_levels.is_null() {
                return fail(ScStatus::NullPointer, "incident arrays are null");
            }
            let steps = std::slice::from_raw_parts(incident_steps, n_incidents);
            let levels = std::slice::from_raw_parts(incident_levels, n_incidents);
            steps
                .iter()
                .zip(levels)
                .map(|(&s, &b)| Incident::new(s, b))
                .collect()
        };
        let policy = BackupPolicy {
            outage_prob: prob,
            lambda,
            incidents,
        };
        match p.clone().with_backup(policy) {
            Ok(q) => {
                *p = q;
                ScStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `problem` must come from [`sc_problem_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn sc_problem_free(problem: *mut ScProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves the problem. Returns [`ScStatus::Infeasible`] with a diagnostic
/// naming the blocking constraint when no schedule exists.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_solve(
    problem: *const ScProblem,
    out: *mut *mut ScSolution,
) -> ScStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return fail(ScStatus::NullPointer, "problem or out is null");
        }
        match solve_with_backup(&(*problem).problem) {
            Ok(OptOutcome::Optimal(solution)) => {
                *out = Box::into_raw(Box::new(ScSolution { solution }));
                ScStatus::Ok
            }
            Ok(OptOutcome::Infeasible(why)) => fail(ScStatus::Infeasible, why.to_string()),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_solution_len(solution: *const ScSolution) -> usize {
    if solution.is_null() {
        0
    } else {
        (*solution).solution.schedule.len()
    }
}

/// Optimal objective: energy cost minus weighted stored energy. NaN for a null handle.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sc_solution_objective(solution: *const ScSolution) -> f64 {
    if solution.is_null() {
        f64::NAN
    } else {
        (*solution).solution.objective
    }
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> ScStatus {
    if buf.is_null() {
        return fail(ScStatus::NullPointer, "buffer is null");
    }
    if len < values.len() {
        return fail(
            ScStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        );
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    ScStatus::Ok
}

/// Copies the grid-side actions (kWh per step) into `buf`.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sc_solution_actions(
    solution: *const ScSolution,
    buf: *mut f64,
    len: usize,
) -> ScStatus {
    guard(|| {
        if solution.is_null() {
            return fail(ScStatus::NullPointer, "solution is null");
        }
        copy_out((*solution).solution.schedule.actions(), buf, len)
    })
}

/// Copies the charge after each step (kWh) into `buf`.
///
/// # Safety
/// `solution` must be a live handle; `buf` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sc_solution_charge(
    solution: *const ScSolution,
    buf: *mut f64,
    len: usize,
) -> ScStatus {
    guard(|| {
        if solution.is_null() {
            return fail(ScStatus::NullPointer, "solution is null");
        }
        copy_out((*solution).solution.schedule.charge(), buf, len)
    })
}

/// # Safety
/// `solution` must come from [`sc_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn sc_solution_free(solution: *mut ScSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Greedy backup-only policy; writes `n` actions and charges.
///
/// # Safety
/// `z` must hold `n` readable values; `actions` and `charge` must each hold
/// `n` writable values; `battery` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_greedy(
    z: *const f64,
    n: usize,
    step_hours: f64,
    battery: *const ScBattery,
    b0: f64,
    actions: *mut f64,
    charge: *mut f64,
) -> ScStatus {
    guard(|| {
        let Some(z) = slice(z, n) else {
            return fail(ScStatus::NullPointer, "z is null");
        };
        if battery.is_null() {
            return fail(ScStatus::NullPointer, "battery is null");
        }
        if !(step_hours > 0.0) {
            return fail(ScStatus::InvalidArgument, "step_hours must be positive");
        }
        let sched = match NetLoadSeries::new(z.to_vec())
            .and_then(|z| greedy_backup(&z, &(*battery).spec, b0, step_hours))
        {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        match copy_out(sched.actions(), actions, n) {
            ScStatus::Ok => copy_out(sched.charge(), charge, n),
            other => other,
        }
    })
}

/// 1 − actual/deterministic.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_loss_of_opportunity(
    actual_gain: f64,
    deterministic_gain: f64,
    out: *mut f64,
) -> ScStatus {
    guard(|| {
        if out.is_null() {
            return fail(ScStatus::NullPointer, "out is null");
        }
        match loss_of_opportunity(actual_gain, deterministic_gain) {
            Ok(v) => {
                *out = v;
                ScStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Daily rate (euros/day) of a built-in contract level for a rate type.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sc_ppc_daily_rate(
    level_kva: f64,
    rate: ScRateType,
    out: *mut f64,
) -> ScStatus {
    guard(|| {
        if out.is_null() {
            return fail(ScStatus::NullPointer, "out is null");
        }
        let rate_type = match rate {
            ScRateType::Single => RateType::Single,
            ScRateType::Dual => RateType::Dual,
            ScRateType::Triple => RateType::Triple,
        };
        match PpcTable::madeira_2018().daily_rate(level_kva, rate_type) {
            Ok(v) => {
                *out = v;
                ScStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
