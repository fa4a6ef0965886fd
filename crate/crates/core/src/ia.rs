//! Independent Approximates.
//!
//! The samples are shuffled into `n`-tuples. Tuples whose members lie close
//! together behave like draws of `n` exactly equal values, and the medians
//! of such tuples follow the renormalized `n`-th power density `f^n/∫f^n`.
//! Its low moments are finite even for very heavy tails and invert in closed
//! form to `(σ, κ)`.
//!
//! How close is close enough is decided by ranking the tuples by their
//! spread and keeping the `k` tightest. `k` is chosen where the statistic is
//! most stable across several random partitions.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{CoupledParams, Family, QBetaParams};
use crate::error::{Error, Result};
use crate::mle::FitDiagnostics;
use crate::moments;
use crate::sampler::{sample_power_density, RandomStream};

/// Estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Power moments of tuple medians only.
    #[serde(rename = "IA")]
    Ia,
    /// Scale from tuple medians, coupling from the log-average of all samples.
    #[serde(rename = "IA_GM")]
    IaGm,
    /// Maximum likelihood.
    #[serde(rename = "ML")]
    Ml,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ia, Method::IaGm, Method::Ml];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Ia => "IA",
            Method::IaGm => "IA_GM",
            Method::Ml => "ML",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ia" => Ok(Method::Ia),
            "ia-gm" => Ok(Method::IaGm),
            "ml" => Ok(Method::Ml),
            _ => Err(Error::param(format!("unknown method {s:?}; expected ia, ia-gm or ml"))),
        }
    }
}

/// How the spread of the per-permutation statistics is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dispersion {
    /// Mean absolute deviation from the median.
    MeanAbsDeviation,
    /// Sample standard deviation.
    StdDev,
}

/// Subsample selection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IAConfig {
    /// Tuple size: 2, 3 or 5.
    pub tuple_size: usize,
    /// Number of random partitions.
    pub permutations: usize,
    pub k_min: usize,
    pub k_step: usize,
    /// Largest candidate `k`; when absent, `k_max_fraction` of the tuples.
    pub k_max: Option<usize>,
    pub k_max_fraction: f64,
    pub dispersion: Dispersion,
}

impl Default for IAConfig {
    fn default() -> Self {
        IAConfig {
            tuple_size: 2,
            permutations: 25,
            k_min: 10,
            k_step: 1,
            k_max: None,
            k_max_fraction: DEFAULT_K_MAX_FRACTION,
            dispersion: Dispersion::MeanAbsDeviation,
        }
    }
}

/// Default share of the tuples that the `k` search may reach.
pub const DEFAULT_K_MAX_FRACTION: f64 = 0.02;

impl IAConfig {
    pub fn with_tuple_size(self, tuple_size: usize) -> Self {
        IAConfig { tuple_size, ..self }
    }

    /// Order of the raw moment of the medians that drives selection.
    pub fn selection_power(&self) -> i32 {
        self.tuple_size as i32 - 1
    }

    pub fn validate(&self) -> Result<()> {
        if ![2, 3, 5].contains(&self.tuple_size) {
            return Err(Error::param(format!("tuple size must be 2, 3 or 5, got {}", self.tuple_size)));
        }
        if self.permutations < 1 {
            return Err(Error::param("permutations must be >= 1"));
        }
        if self.k_min < 2 {
            return Err(Error::param("k_min must be >= 2"));
        }
        if self.k_step < 1 {
            return Err(Error::param("k_step must be >= 1"));
        }
        if !(self.k_max_fraction > 0.0 && self.k_max_fraction <= 1.0) {
            return Err(Error::param(format!(
                "k_max_fraction must be in (0, 1], got {}",
                self.k_max_fraction
            )));
        }
        Ok(())
    }

    /// Candidate range `[k_min, k_max]` for `n_samples` samples.
    pub fn k_range(&self, n_samples: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let tuples = n_samples / self.tuple_size;
        let k_max = match self.k_max {
            Some(k) => k,
            None => ((self.k_max_fraction * tuples as f64).round() as usize).max(self.k_min),
        };
        if k_max > tuples {
            return Err(Error::InsufficientData(format!(
                "k_max = {k_max} needs {} samples for tuples of {}, got {n_samples}",
                k_max * self.tuple_size,
                self.tuple_size
            )));
        }
        if self.k_min > k_max {
            return Err(Error::InsufficientData(format!(
                "k_min = {} exceeds k_max = {k_max} for {n_samples} samples",
                self.k_min
            )));
        }
        Ok((self.k_min, k_max))
    }
}

/// Fixed-size tuples stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Tuples {
    size: usize,
    data: Vec<f64>,
}

impl Tuples {
    /// Tuples of `size` taken consecutively from `data`; a short tail is
    /// dropped.
    pub fn from_flat(size: usize, mut data: Vec<f64>) -> Self {
        assert!(size > 0, "tuple size must be positive");
        data.truncate(data.len() / size * size);
        Tuples { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.size
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.size)
    }
}

/// `⌊N/n⌋` tuples of a uniformly random permutation of the samples.
pub fn partition_tuples(samples: &[f64], n: usize, rs: &RandomStream) -> Result<Tuples> {
    if n == 0 {
        return Err(Error::param("tuple size must be >= 1"));
    }
    if samples.len() < n {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot form a tuple of {n}",
            samples.len()
        )));
    }
    let mut shuffled = samples.to_vec();
    shuffled.shuffle(&mut rs.rng());
    Ok(Tuples::from_flat(n, shuffled))
}

/// `max(t) - min(t)`.
pub fn tuple_spread(t: &[f64]) -> f64 {
    let (lo, hi) = t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

/// Middle value; the mean of the two middle values for even sizes.
pub fn tuple_median(t: &[f64]) -> f64 {
    let mut s = t.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Medians of all tuples ordered by increasing spread.
fn ranked_medians(tuples: &Tuples) -> (Vec<f64>, Vec<f64>) {
    let mut ranked: Vec<(f64, f64)> = tuples.iter().map(|t| (tuple_spread(t), tuple_median(t))).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    ranked.into_iter().unzip()
}

/// Medians of the `k` tuples with the smallest spread, tightest first.
pub fn ia_medians(tuples: &Tuples, k: usize) -> Result<Vec<f64>> {
    if k > tuples.len() {
        return Err(Error::InsufficientData(format!("k = {k} exceeds the {} tuples", tuples.len())));
    }
    let (_, mut medians) = ranked_medians(tuples);
    medians.truncate(k);
    Ok(medians)
}

/// Spread of a set of estimates.
pub fn dispersion(values: &[f64], kind: Dispersion) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    match kind {
        Dispersion::MeanAbsDeviation => {
            let m = median(values);
            values.iter().map(|v| (v - m).abs()).sum::<f64>() / n as f64
        }
        Dispersion::StdDev => {
            let mean = values.iter().sum::<f64>() / n as f64;
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

/// Median of a nonempty slice.
pub fn median(values: &[f64]) -> f64 {
    tuple_median(values)
}

/// Position of the smallest dispersion in `curve`, whose entries belong to
/// `k = k_min, k_min + k_step, …`. Ties go to the smallest `k`; NaN never
/// wins.
pub fn argmin_k(k_min: usize, k_step: usize, curve: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &d) in curve.iter().enumerate() {
        if d.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((k_min + i * k_step, d));
        }
    }
    best
}

/// Outcome of the subsample-size search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub k: usize,
    /// Selection statistic of each permutation at `k`.
    pub statistics: Vec<f64>,
    pub dispersion: f64,
    /// Median over permutations of the `k`-th smallest spread.
    pub epsilon: f64,
    /// Dispersion at every candidate `k`.
    pub curve: Vec<f64>,
}

/// Search `k` for the power mean `mean(median^(n-1))` of the `k` tightest
/// tuples, minimizing its dispersion across `cfg.permutations` partitions.
///
/// Permutation `p` is drawn from `rs.child(p)`; the result does not depend on
/// the number of threads.
pub fn select_optimal_k(samples: &[f64], cfg: &IAConfig, rs: &RandomStream) -> Result<Selection> {
    let (k_min, k_max) = cfg.k_range(samples.len())?;
    let power = cfg.selection_power();
    let per_perm: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.permutations)
        .into_par_iter()
        .map(|p| {
            let tuples = partition_tuples(samples, cfg.tuple_size, &rs.child(p as u64))?;
            let (spreads, medians) = ranked_medians(&tuples);
            let mut stats = Vec::with_capacity(k_max);
            let mut sum = 0.0;
            for (i, m) in medians.iter().take(k_max).enumerate() {
                sum += m.powi(power);
                stats.push(sum / (i + 1) as f64);
            }
            Ok((stats, spreads))
        })
        .collect::<Result<_>>()?;
    let candidates: Vec<usize> = (k_min..=k_max).step_by(cfg.k_step).collect();
    let curve: Vec<f64> = candidates
        .iter()
        .map(|&k| {
            let at_k: Vec<f64> = per_perm.iter().map(|(s, _)| s[k - 1]).collect();
            dispersion(&at_k, cfg.dispersion)
        })
        .collect();
    let (k, disp) = argmin_k(k_min, cfg.k_step, &curve)
        .ok_or_else(|| Error::InsufficientData("no feasible subsample size".into()))?;
    let statistics = per_perm.iter().map(|(s, _)| s[k - 1]).collect();
    let eps: Vec<f64> = per_perm.iter().map(|(_, sp)| sp[k - 1]).collect();
    Ok(Selection { k, statistics, dispersion: disp, epsilon: median(&eps), curve })
}

/// Extra information attached to an estimate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Spread threshold implied by the selected `k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Selected `k` of the tuples that determine `κ̂` (method IA).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_k_selected: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_dispersion: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub kappa_per_permutation: Vec<f64>,
    /// Mean of `ln|x|` over all samples (method IA_GM).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_mean: Option<f64>,
    /// Exact zeros left out of the log mean.
    pub zeros_excluded: usize,
    /// `κ̂` fell below zero and is reported unclamped.
    pub kappa_at_boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitDiagnostics>,
}

/// A fitted `(σ̂, κ̂)` at known location `μ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    pub family: Family,
    pub sigma_hat: f64,
    pub kappa_hat: f64,
    /// Selected number of tuples (IA methods).
    pub k_selected: Option<usize>,
    /// Scale estimate of each permutation (IA methods).
    pub per_permutation_estimates: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_at_k: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    /// Parameters for evaluating the fit; a negative `κ̂` is raised to 0.
    pub fn fitted_params(&self) -> Result<CoupledParams> {
        CoupledParams::new(self.family, 0.0, self.sigma_hat, self.kappa_hat.max(0.0))
    }

    pub fn q_beta(&self) -> Result<QBetaParams> {
        Ok(self.fitted_params()?.to_q_beta())
    }
}

/// Samples as used by the tuple statistics: as is for the one-sided
/// coupled exponential, folded to `|x|` for the coupled Gaussian.
fn prepare(samples: &[f64], family: Family) -> Result<Vec<f64>> {
    match family {
        Family::Exponential => {
            if let Some((i, x)) = samples.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
                return Err(Error::domain(format!(
                    "sample {i} = {x} is negative; the coupled exponential is one-sided"
                )));
            }
            Ok(samples.to_vec())
        }
        Family::Gaussian => Ok(samples.iter().map(|x| x.abs()).collect()),
    }
}

/// Fit `(σ, κ)` by Independent Approximates.
///
/// | family      | method | `σ̂`                        | `κ̂`                                  |
/// |-------------|--------|-----------------------------|---------------------------------------|
/// | exponential | IA     | `2 μ̂_1^(2)` from pairs      | from `μ̂_1^(2)` and triplet `μ̂_2^(3)` |
/// | exponential | IA_GM  | `2 μ̂_1^(2)` from pairs      | log-average of all samples            |
/// | Gaussian    | IA     | `√(3 μ̂_2^(3))` of triplets  | quintuplet `μ̂_4^(5)`                 |
/// | Gaussian    | IA_GM  | `√(3 μ̂_2^(3))` of triplets  | log-average of all samples            |
///
/// Each tuple size runs its own `k` search on its own partitions. Per-
/// permutation estimates are paired by permutation index and the final
/// values are medians over permutations. `cfg.tuple_size` is ignored.
pub fn ia_fit(
    samples: &[f64],
    family: Family,
    method: Method,
    cfg: &IAConfig,
    rs: &RandomStream,
) -> Result<EstimateResult> {
    if method == Method::Ml {
        return Err(Error::param("maximum likelihood is fitted by mle::ml_fit"));
    }
    let data = prepare(samples, family)?;
    let select = |n: usize| select_optimal_k(&data, &cfg.with_tuple_size(n), &rs.child(n as u64));

    let scale = match family {
        Family::Exponential => select(2)?,
        Family::Gaussian => select(3)?,
    };
    let sigmas: Vec<f64> = match family {
        Family::Exponential => scale.statistics.iter().map(|m| 2.0 * m).collect(),
        Family::Gaussian => {
            scale.statistics.iter().map(|&m2| moments::invert_gauss_sigma(m2)).collect::<Result<_>>()?
        }
    };
    let sigma_hat = median(&sigmas);
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::Inversion(format!("scale estimate {sigma_hat} is not positive")));
    }
    let mut diagnostics = Diagnostics { epsilon: Some(scale.epsilon), ..Default::default() };

    let kappa_hat = match method {
        Method::IaGm => {
            let (log_mean, zeros) = moments::sample_log_abs_mean(samples)?;
            diagnostics.log_mean = Some(log_mean);
            diagnostics.zeros_excluded = zeros;
            moments::solve_kappa_from_log_mean(log_mean, sigma_hat, family)?
        }
        _ => {
            let n = match family {
                Family::Exponential => 3,
                Family::Gaussian => 5,
            };
            let shape = select(n)?;
            let kappas: Vec<f64> = sigmas
                .iter()
                .zip(&shape.statistics)
                .map(|(&s, &m)| match family {
                    Family::Exponential => 2.0 * s * s / (3.0 * m) - 3.0,
                    Family::Gaussian => (3.0 * s.powi(4) / m - 25.0) / 10.0,
                })
                .collect();
            let k = median(&kappas);
            diagnostics.kappa_k_selected = Some(shape.k);
            diagnostics.kappa_dispersion = Some(shape.dispersion);
            diagnostics.kappa_per_permutation = kappas;
            if !k.is_finite() || (family == Family::Exponential && k <= -1.0) {
                return Err(Error::Inversion(format!("kappa estimate {k} from tuple moments")));
            }
            k
        }
    };
    diagnostics.kappa_at_boundary = kappa_hat < 0.0;
    Ok(EstimateResult {
        method,
        family,
        sigma_hat,
        kappa_hat,
        k_selected: Some(scale.k),
        per_permutation_estimates: sigmas,
        dispersion_at_k: Some(scale.dispersion),
        diagnostics,
    })
}

/// Sampling variance of the exact-power-density estimators across sample
/// counts `I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyProbe {
    pub i_grid: Vec<usize>,
    pub mean_sigma: Vec<f64>,
    pub var_sigma: Vec<f64>,
    pub mean_kappa: Vec<f64>,
    pub var_kappa: Vec<f64>,
    /// Least-squares slope of `ln Var(σ̂)` against `ln I`.
    pub slope_sigma: f64,
    pub slope_kappa: f64,
}

/// For each `I` in `i_grid`, `trials` times: draw `I` exact pair medians and
/// `I` exact triplet medians from the power densities of the coupled
/// exponential `(σ, κ)`, and form `σ̂ = 2 mean` and
/// `κ̂ = 2σ̂²/(3 mean(x²)) - 3`.
pub fn consistency_probe(
    sigma: f64,
    kappa: f64,
    i_grid: &[usize],
    trials: usize,
    rs: &RandomStream,
) -> Result<ConsistencyProbe> {
    if trials < 2 {
        return Err(Error::param("the probe needs at least 2 trials"));
    }
    if i_grid.is_empty() || i_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("i_grid must be nonempty and strictly increasing"));
    }
    let p = CoupledParams::exponential(sigma, kappa)?;
    let mut out = ConsistencyProbe {
        i_grid: i_grid.to_vec(),
        mean_sigma: vec![],
        var_sigma: vec![],
        mean_kappa: vec![],
        var_kappa: vec![],
        slope_sigma: f64::NAN,
        slope_kappa: f64::NAN,
    };
    for (g, &count) in i_grid.iter().enumerate() {
        let grid_rs = rs.child(g as u64);
        let est: Vec<(f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let trial = grid_rs.child(t as u64);
                let pairs = sample_power_density(count, &p, 2, &trial.child(2))?;
                let triplets = sample_power_density(count, &p, 3, &trial.child(3))?;
                let s = 2.0 * mean(&pairs.values);
                let m2 = triplets.values.iter().map(|x| x * x).sum::<f64>() / count as f64;
                Ok((s, 2.0 * s * s / (3.0 * m2) - 3.0))
            })
            .collect::<Result<_>>()?;
        let (s, k): (Vec<f64>, Vec<f64>) = est.into_iter().unzip();
        out.mean_sigma.push(mean(&s));
        out.var_sigma.push(variance(&s));
        out.mean_kappa.push(mean(&k));
        out.var_kappa.push(variance(&k));
    }
    let x: Vec<f64> = i_grid.iter().map(|&i| (i as f64).ln()).collect();
    let ln = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    out.slope_sigma = slope(&x, &ln(&out.var_sigma));
    out.slope_kappa = slope(&x, &ln(&out.var_kappa));
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
