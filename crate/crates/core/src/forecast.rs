//! Net-load forecasting: daily mean profile plus an autoregressive residual
//! model with three step lags and three same-slot day lags.
//!
//! With `z̄` the mean daily profile and `X_k = z_k − z̄_k` the residual,
//!
//! ```text
//! X̂_k = α1·X_{k−1} + α2·X_{k−2} + α3·X_{k−3} + β1·X_{k−n} + β2·X_{k−2n} + β3·X_{k−3n}
//! ẑ_k = z̄_k + X̂_k
//! ```
//!
//! where `n` is the number of steps per day. Observed residuals are used
//! wherever the lagged step has been realised; forecasts fill in beyond it.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of step lags and of day lags.
pub const LAGS: usize = 3;
/// Days of history needed to fit: three day-lags plus one target day.
pub const MIN_FIT_DAYS: usize = LAGS + 1;

/// Past net-load values laid out day by day from slot 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    steps_per_day: usize,
    values: Vec<f64>,
}

impl HistoryBuffer {
    pub fn new(steps_per_day: usize, values: Vec<f64>) -> Result<Self> {
        if steps_per_day == 0 {
            return Err(Error::Forecast("steps per day must be positive".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(steps_per_day) {
            return Err(Error::Forecast(format!(
                "history of {} steps is not a whole number of {steps_per_day}-step days",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Forecast("history contains non-finite values".into()));
        }
        Ok(HistoryBuffer {
            steps_per_day,
            values,
        })
    }

    pub fn steps_per_day(&self) -> usize {
        self.steps_per_day
    }

    /// Complete days held.
    pub fn days(&self) -> usize {
        self.values.len() / self.steps_per_day
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn day(&self, d: usize) -> &[f64] {
        &self.values[d * self.steps_per_day..(d + 1) * self.steps_per_day]
    }

    /// Appends a realised value; the buffer may end mid-day afterwards.
    pub fn push(&mut self, z: f64) {
        self.values.push(z);
    }
}

/// Per-slot mean over the complete days of the buffer.
pub fn mean_profile(hist: &HistoryBuffer) -> Vec<f64> {
    let days = hist.days();
    let mut mean = vec![0.0; hist.steps_per_day];
    for d in 0..days {
        for (m, v) in mean.iter_mut().zip(hist.day(d)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= days as f64);
    mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub alpha: [f64; LAGS],
    pub beta: [f64; LAGS],
    pub mean_profile: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    /// Ridge penalty on the six coefficients; zero is plain least squares.
    pub ridge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub samples: usize,
    pub rank: usize,
    pub residual_sum_squares: f64,
}

impl FitReport {
    pub fn rank_deficient(&self) -> bool {
        self.rank < 2 * LAGS
    }
}

fn regressors(x: &[f64], k: usize, n: usize) -> [f64; 2 * LAGS] {
    [
        x[k - 1],
        x[k - 2],
        x[k - 3],
        x[k - n],
        x[k - 2 * n],
        x[k - 3 * n],
    ]
}

/// Least-squares fit of the residual model on every step after the third day.
///
/// A rank-deficient design falls back to the minimum-norm solution.
pub fn fit_arma(hist: &HistoryBuffer, opts: FitOptions) -> Result<(ForecastModel, FitReport)> {
    if hist.days() < MIN_FIT_DAYS {
        return Err(Error::Forecast(format!(
            "fitting needs at least {MIN_FIT_DAYS} days of history, got {}",
            hist.days()
        )));
    }
    if !(opts.ridge.is_finite() && opts.ridge >= 0.0) {
        return Err(Error::Forecast(format!(
            "ridge {} must be >= 0",
            opts.ridge
        )));
    }
    let n = hist.steps_per_day();
    let profile = mean_profile(hist);
    let complete = hist.days() * n;
    let x: Vec<f64> = hist.values()[..complete]
        .iter()
        .enumerate()
        .map(|(k, z)| z - profile[k % n])
        .collect();

    let first = LAGS * n;
    let samples = complete - first;
    let extra = if opts.ridge > 0.0 { 2 * LAGS } else { 0 };
    let mut design = DMatrix::<f64>::zeros(samples + extra, 2 * LAGS);
    let mut target = DVector::<f64>::zeros(samples + extra);
    for (row, k) in (first..complete).enumerate() {
        for (col, v) in regressors(&x, k, n).into_iter().enumerate() {
            design[(row, col)] = v;
        }
        target[row] = x[k];
    }
    for j in 0..extra {
        design[(samples + j, j)] = opts.ridge.sqrt();
    }

    let svd = design.clone().svd(true, true);
    let largest = svd.singular_values.max();
    // Residuals that are pure rounding noise must count as rank zero, so the
    // cutoff has a floor tied to the magnitude of the data itself.
    let scale = hist.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let rows = (samples + extra).max(2 * LAGS) as f64;
    let cutoff = (largest * 1e-10 * rows).max(1e-9 * scale * rows.sqrt());
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let coeffs = if rank == 0 {
        DVector::zeros(2 * LAGS)
    } else {
        svd.solve(&target, cutoff)
            .map_err(|e| Error::Forecast(format!("least-squares solve failed: {e}")))?
    };
    if rank < 2 * LAGS {
        log::warn!(
            "residual regression is rank deficient (rank {rank}); using minimum-norm coefficients"
        );
    }
    let fitted = &design * &coeffs;
    let rss = (0..samples).map(|r| (target[r] - fitted[r]).powi(2)).sum();

    let model = ForecastModel {
        alpha: [coeffs[0], coeffs[1], coeffs[2]],
        beta: [coeffs[3], coeffs[4], coeffs[5]],
        mean_profile: profile,
    };
    Ok((
        model,
        FitReport {
            samples,
            rank,
            residual_sum_squares: rss,
        },
    ))
}

impl ForecastModel {
    pub fn new(alpha: [f64; LAGS], beta: [f64; LAGS], mean_profile: Vec<f64>) -> Result<Self> {
        let model = ForecastModel {
            alpha,
            beta,
            mean_profile,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.mean_profile.is_empty() {
            return Err(Error::Forecast("mean profile is empty".into()));
        }
        let finite = self
            .alpha
            .iter()
            .chain(&self.beta)
            .chain(&self.mean_profile)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Forecast("model has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn steps_per_day(&self) -> usize {
        self.mean_profile.len()
    }

    /// Residuals of a day-aligned series against the mean profile.
    pub fn residuals(&self, observed: &[f64]) -> Vec<f64> {
        let n = self.steps_per_day();
        observed
            .iter()
            .enumerate()
            .map(|(k, z)| z - self.mean_profile[k % n])
            .collect()
    }

    /// Continues a residual series `horizon` steps past its end.
    pub fn forecast_residuals(&self, residuals: &[f64], horizon: usize) -> Vec<f64> {
        let n = self.steps_per_day();
        let start = residuals.len();
        let mut ext = Vec::with_capacity(start + horizon);
        ext.extend_from_slice(residuals);
        for k in start..start + horizon {
            let mut next = 0.0;
            for lag in 1..=LAGS {
                if let Some(v) = k.checked_sub(lag).map(|u| ext[u]) {
                    next += self.alpha[lag - 1] * v;
                }
                if let Some(v) = k.checked_sub(lag * n).map(|u| ext[u]) {
                    next += self.beta[lag - 1] * v;
                }
            }
            ext.push(next);
        }
        ext.split_off(start)
    }

    /// Forecast ẑ for the `horizon` steps following a day-aligned observed series.
    pub fn forecast(&self, observed: &[f64], horizon: usize) -> Vec<f64> {
        let n = self.steps_per_day();
        let start = observed.len();
        self.forecast_residuals(&self.residuals(observed), horizon)
            .into_iter()
            .enumerate()
            .map(|(j, x)| self.mean_profile[(start + j) % n] + x)
            .collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Forecast(format!("serialising model: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let model: ForecastModel =
            toml::from_str(text).map_err(|e| Error::Forecast(format!("parsing model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ForecastModel::from_toml(&text)
    }
}
