//! Goodness-of-fit and estimation-error metrics.

use serde::{Deserialize, Serialize};

use crate::dist::CoupledParams;
use crate::error::{Error, Result};
use crate::ia::Method;
use crate::mle;

/// Mean squared error of repeated estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub mse: f64,
    /// Sample standard deviation of the squared errors.
    pub sd: f64,
    /// Standard error of `mse`, `sd / √n`.
    pub se: f64,
}

pub fn mse_report(estimates: &[f64], truth: f64) -> Result<MseReport> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no estimates".into()));
    }
    let n = estimates.len() as f64;
    let sq: Vec<f64> = estimates.iter().map(|e| (e - truth).powi(2)).collect();
    let mse = sq.iter().sum::<f64>() / n;
    let sd = if estimates.len() > 1 {
        (sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(MseReport { mse, sd, se: sd / n.sqrt() })
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Cramér–von Mises `W² = 1/(12n) + Σ (F(x₍ᵢ₎) - (2i-1)/(2n))²`.
pub fn cvm(samples: &[f64], fitted: &CoupledParams) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut w2 = 1.0 / (12.0 * n);
    for (i, &x) in v.iter().enumerate() {
        let f = fitted.cdf(x)?;
        w2 += (f - (2.0 * i as f64 + 1.0) / (2.0 * n)).powi(2);
    }
    Ok(w2)
}

/// Mean absolute quantile deviation `(1/n) Σ |x₍ᵢ₎ - Q((i - 1/2)/n)|`.
pub fn avg_deviation(samples: &[f64], fitted: &CoupledParams) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut sum = 0.0;
    for (i, &x) in v.iter().enumerate() {
        sum += (x - fitted.quantile((i as f64 + 0.5) / n)?).abs();
    }
    Ok(sum / n)
}

/// Negative log-likelihood of the samples under the fit.
pub fn nll_metric(samples: &[f64], fitted: &CoupledParams) -> Result<f64> {
    mle::nll(fitted, samples)
}

/// One row of a Monte Carlo study: a method at one true coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub method: Method,
    pub kappa_true: f64,
    pub sigma_true: f64,
    pub mse_kappa: f64,
    pub sd_kappa: f64,
    pub mse_sigma: f64,
    pub sd_sigma: f64,
    /// Means over trials of the fit metrics.
    pub ad: f64,
    pub cvm: f64,
    pub nll: f64,
    /// Successful trials.
    pub trials: usize,
    pub n_per_trial: usize,
    /// Trials whose fit or metrics failed.
    pub failures: usize,
}
