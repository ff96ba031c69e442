//! Prosumer battery co-optimization under zero feed-in tariffs.
//!
//! The crate schedules a home battery for energy arbitrage against
//! time-of-use prices, peak power contract reduction, self-consumption of
//! local generation and backup for probable or scheduled outages. Schedules
//! come from a linear program solved over a finite horizon, from a greedy
//! backup-only policy, or from a receding-horizon controller driven by an
//! ARMA-style net-load forecast.

pub mod battery;
pub mod cli;
pub mod config;
pub mod error;
pub mod forecast;
pub mod lp;
pub mod metrics;
pub mod mpc;
pub mod optimizer;
pub mod synthetic;
pub mod tariff;
pub mod timeseries;

pub use error::{Error, Result};
