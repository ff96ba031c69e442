use proptest::prelude::*;

use storage_coopt::battery::{greedy_backup, BatterySpec, StorageSchedule};
use storage_coopt::metrics::{arbitrage_gain, count_cycles, loss_of_opportunity};
use storage_coopt::optimizer::{solve_arbitrage, OptProblem};
use storage_coopt::timeseries::{NetLoadSeries, TimeGrid};

fn grid(h: f64, n: usize) -> TimeGrid {
    TimeGrid::new(h, n, Default::default()).unwrap()
}

prop_compose! {
    fn battery()(eta_ch in 0.8..=1.0f64, eta_dis in 0.8..=1.0f64, down in 0.2..2.0f64, up in 0.2..2.0f64,
                 b_min in 0.0..0.5f64, span in 0.5..3.0f64) -> BatterySpec {
        BatterySpec::new(eta_ch, eta_dis, -down, up, b_min, b_min + span).unwrap()
    }
}

prop_compose! {
    fn instance(max_n: usize)(spec in battery(), n in 1..=max_n, h in prop::sample::select(vec![0.25, 0.5, 1.0]))
                 (z in prop::collection::vec(-2.0..2.0f64, n), prices in prop::collection::vec(0.05..0.3f64, n),
                  b_frac in 0.0..=1.0f64, spec in Just(spec), h in Just(h))
                 -> (Vec<f64>, Vec<f64>, BatterySpec, f64, f64) {
        let b0 = spec.b_min() + b_frac * spec.usable_range();
        (z.iter().map(|v| v * h).collect(), prices, spec, b0, h)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_schedule_is_feasible_and_never_worse_than_idle((z, prices, spec, b0, h) in instance(24)) {
        let n = z.len();
        let zs = NetLoadSeries::new(z.clone()).unwrap();
        let p = OptProblem::new(zs.clone(), prices.clone(), spec, b0, grid(h, n)).unwrap();
        let sol = solve_arbitrage(&p).unwrap().optimal().unwrap();
        let (lo, hi) = spec.step_bounds(h);
        for &s in sol.schedule.actions() {
            prop_assert!(s >= lo - 1e-6 && s <= hi + 1e-6);
        }
        for &b in sol.schedule.charge() {
            prop_assert!(b >= spec.b_min() - 1e-6 && b <= spec.b_max() + 1e-6);
        }
        // Replaying the actions reproduces the charge trajectory.
        let replay = StorageSchedule::from_actions(&zs, sol.schedule.actions().to_vec(), &spec, b0, h).unwrap();
        for (a, b) in replay.charge().iter().zip(sol.schedule.charge()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
        prop_assert!(arbitrage_gain(&zs, &sol.schedule, &prices).unwrap() >= -1e-9);
    }

    #[test]
    fn greedy_stays_within_limits((z, _prices, spec, b0, h) in instance(96)) {
        let zs = NetLoadSeries::new(z.clone()).unwrap();
        let sched = greedy_backup(&zs, &spec, b0, h).unwrap();
        for ((&zi, &s), &b) in z.iter().zip(sched.actions()).zip(sched.charge()) {
            prop_assert!(spec.contains(b));
            // Never buys energy to store and never exports from storage.
            prop_assert!(s * zi <= 1e-12);
            prop_assert!(s.abs() <= zi.abs() + 1e-12);
        }
    }

    #[test]
    fn round_trip_keeps_product_of_efficiencies(spec in battery(), frac in 0.05..1.0f64) {
        let h = 1.0;
        let (lo, hi) = spec.step_bounds(h);
        let limit = hi.min(spec.usable_range() / spec.eta_ch()).min(-lo / (spec.eta_ch() * spec.eta_dis()));
        let s = frac * limit;
        let z = NetLoadSeries::new(vec![0.0, 0.0]).unwrap();
        let stored = spec.eta_ch() * s;
        let back = -stored * spec.eta_dis();
        let sched = StorageSchedule::from_actions(&z, vec![s, back], &spec, spec.b_min(), h).unwrap();
        prop_assert!((sched.charge()[1] - spec.b_min()).abs() < 1e-9);
        prop_assert!((-back / s - spec.eta_ch() * spec.eta_dis()).abs() < 1e-12);
    }

    #[test]
    fn cycles_ignore_how_a_discharge_is_split(spec in battery(), depth in 0.0..=1.0f64, pieces in 1usize..8) {
        let top = spec.b_max();
        let bottom = top - depth * spec.usable_range();
        let mut split = vec![top];
        for k in 1..=pieces {
            split.push(top - (top - bottom) * k as f64 / pieces as f64);
        }
        let whole = count_cycles(&[top, bottom], &spec);
        prop_assert!((count_cycles(&split, &spec) - whole).abs() < 1e-9);
        prop_assert!((whole - depth).abs() < 1e-9);
        let mut idle = split.clone();
        idle.insert(1, top);
        idle.push(bottom);
        prop_assert!((count_cycles(&idle, &spec) - whole).abs() < 1e-9);
    }

    #[test]
    fn loss_of_opportunity_falls_as_gain_rises(det in 0.01..10.0f64, a in -5.0..10.0f64, b in -5.0..10.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(loss_of_opportunity(hi, det).unwrap() <= loss_of_opportunity(lo, det).unwrap());
        prop_assert_eq!(loss_of_opportunity(det, det).unwrap(), 0.0);
    }
}
