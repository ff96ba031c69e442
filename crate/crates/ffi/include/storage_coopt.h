#ifndef STORAGE_COOPT_H
#define STORAGE_COOPT_H

#include <stddef.h>

typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_NULL_POINTER = 1,
  SC_STATUS_INVALID_ARGUMENT = 2,
  // The problem has no feasible schedule.
  SC_STATUS_INFEASIBLE = 3,
  SC_STATUS_SOLVER = 4,
  // No contract level matches or covers the request.
  SC_STATUS_NO_CONTRACT = 5,
  SC_STATUS_UNDEFINED_METRIC = 6,
  // A buffer is too short for the result.
  SC_STATUS_BUFFER_TOO_SMALL = 7,
  SC_STATUS_PANIC = 8,
} ScStatus;

typedef enum ScRateType {
  SC_RATE_TYPE_SINGLE = 0,
  SC_RATE_TYPE_DUAL = 1,
  SC_RATE_TYPE_TRIPLE = 2,
} ScRateType;

typedef struct ScBattery ScBattery;

typedef struct ScProblem ScProblem;

typedef struct ScSolution ScSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sc_version(void);

// Message of the last failure on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *sc_last_error(void);

// Battery with explicit ramp limits in kW.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum ScStatus sc_battery_new(double eta_ch,
                             double eta_dis,
                             double delta_min,
                             double delta_max,
                             double b_min,
                             double b_max,
                             struct ScBattery **out);

// Battery whose ramp limits follow an "xC-yC" tag over the usable range.
//
// # Safety
// `tag` must be a NUL-terminated string; `out` must be writable.
enum ScStatus sc_battery_with_c_rating(const char *tag,
                                       double eta_ch,
                                       double eta_dis,
                                       double b_min,
                                       double b_max,
                                       struct ScBattery **out);

// Grid-side ramp bounds for one step, kWh.
//
// # Safety
// `battery` must come from a battery constructor; `lo` and `hi` must be writable.
enum ScStatus sc_battery_step_bounds(const struct ScBattery *battery,
                                     double step_hours,
                                     double *lo,
                                     double *hi);

// # Safety
// `battery` must come from a battery constructor or be null.
void sc_battery_free(struct ScBattery *battery);

// Scheduling problem over `n` steps of net load `z` (kWh per step) and prices (euros/kWh).
//
// # Safety
// `z` and `prices` must point to `n` readable values; `battery` must be a
// live handle; `out` must be writable.
enum ScStatus sc_problem_new(const double *z,
                             const double *prices,
                             size_t n,
                             double step_hours,
                             const struct ScBattery *battery,
                             double b0,
                             struct ScProblem **out);

// Caps grid draw at `kw`; pass infinity to remove the cap.
//
// # Safety
// `problem` must be a live handle.
enum ScStatus sc_problem_set_peak_cap(struct ScProblem *problem, double kw);

// Outage terms: reward weight `lambda` on stored energy with per-step
// probabilities `outage_prob` (null means zero everywhere), and
// `n_incidents` scheduled levels `incident_levels[k]` at `incident_steps[k]`.
//
// # Safety
// `problem` must be a live handle; `outage_prob` must be null or hold one
// value per step; the incident arrays must hold `n_incidents` values.
enum ScStatus sc_problem_set_backup(struct ScProblem *problem,
                                    double lambda,
                                    const double *outage_prob,
                                    const size_t *incident_steps,
                                    const double *incident_levels,
                                    size_t n_incidents);

// # Safety
// `problem` must come from [`sc_problem_new`] or be null.
void sc_problem_free(struct ScProblem *problem);

// Solves the problem. Returns [`ScStatus::Infeasible`] with a diagnostic
// naming the blocking constraint when no schedule exists.
//
// # Safety
// `problem` must be a live handle; `out` must be writable.
enum ScStatus sc_solve(const struct ScProblem *problem, struct ScSolution **out);

// # Safety
// `solution` must be a live handle.
size_t sc_solution_len(const struct ScSolution *solution);

// Optimal objective: energy cost minus weighted stored energy. NaN for a null handle.
//
// # Safety
// `solution` must be a live handle or null.
double sc_solution_objective(const struct ScSolution *solution);

// Copies the grid-side actions (kWh per step) into `buf`.
//
// # Safety
// `solution` must be a live handle; `buf` must hold `len` writable values.
enum ScStatus sc_solution_actions(const struct ScSolution *solution, double *buf, size_t len);

// Copies the charge after each step (kWh) into `buf`.
//
// # Safety
// `solution` must be a live handle; `buf` must hold `len` writable values.
enum ScStatus sc_solution_charge(const struct ScSolution *solution, double *buf, size_t len);

// # Safety
// `solution` must come from [`sc_solve`] or be null.
void sc_solution_free(struct ScSolution *solution);

// Greedy backup-only policy; writes `n` actions and charges.
//
// # Safety
// `z` must hold `n` readable values; `actions` and `charge` must each hold
// `n` writable values; `battery` must be a live handle.
enum ScStatus sc_greedy(const double *z,
                        size_t n,
                        double step_hours,
                        const struct ScBattery *battery,
                        double b0,
                        double *actions,
                        double *charge);

// 1 − actual/deterministic.
//
// # Safety
// `out` must be writable.
enum ScStatus sc_loss_of_opportunity(double actual_gain, double deterministic_gain, double *out);

// Daily rate (euros/day) of a built-in contract level for a rate type.
//
// # Safety
// `out` must be writable.
enum ScStatus sc_ppc_daily_rate(double level_kva, enum ScRateType rate, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STORAGE_COOPT_H */
