//! Monte Carlo comparison of the estimators on simulated coupled data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{CoupledParams, Family};
use crate::error::{Error, Result};
use crate::ia::{ia_fit, EstimateResult, IAConfig, Method};
use crate::metrics::{self, TrialReport};
use crate::mle::ml_fit;
use crate::sampler::{sample_coupled, RandomStream};

/// A grid of true couplings, each fitted by every method over many trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub family: Family,
    pub kappas: Vec<f64>,
    pub sigma: f64,
    /// Samples per trial.
    pub n: usize,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub ia: IAConfig,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappas.is_empty() || self.methods.is_empty() {
            return Err(Error::param("the study needs at least one kappa and one method"));
        }
        if self.trials < 1 {
            return Err(Error::param("trials must be >= 1"));
        }
        for &k in &self.kappas {
            CoupledParams::new(self.family, 0.0, self.sigma, k)?;
        }
        self.ia.validate()
    }
}

/// Fit `samples` with `method`. Maximum likelihood ignores `ia` and `rs`.
pub fn fit(
    samples: &[f64],
    family: Family,
    method: Method,
    ia: &IAConfig,
    rs: &RandomStream,
) -> Result<EstimateResult> {
    match method {
        Method::Ml => ml_fit(samples, family),
        _ => ia_fit(samples, family, method, ia, rs),
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    sigma: f64,
    kappa: f64,
    ad: f64,
    cvm: f64,
    nll: f64,
}

fn evaluate(samples: &[f64], est: &EstimateResult) -> Result<Outcome> {
    let p = est.fitted_params()?;
    Ok(Outcome {
        sigma: est.sigma_hat,
        kappa: est.kappa_hat,
        ad: metrics::avg_deviation(samples, &p)?,
        cvm: metrics::cvm(samples, &p)?,
        nll: metrics::nll_metric(samples, &p)?,
    })
}

/// Run the study. Rows come in grid order, methods within each coupling.
///
/// Trial `t` at coupling index `i` draws its data from
/// `RandomStream::new(seed, i).child(t).child(0)` and fits method number `m`
/// with `.child(t).child(1 + m)`, so the table does not depend on the
/// thread count. Failed fits are counted and left out of the averages.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<TrialReport>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..cfg.kappas.len())
        .flat_map(|i| (0..cfg.trials).map(move |t| (i, t)))
        .collect();
    let outcomes: Vec<Vec<Option<Outcome>>> = cells
        .par_iter()
        .map(|&(i, t)| {
            let p = CoupledParams::new(cfg.family, 0.0, cfg.sigma, cfg.kappas[i])?;
            let trial = RandomStream::new(cfg.seed, i as u64).child(t as u64);
            let data = sample_coupled(cfg.n, &p, &trial.child(0))?;
            Ok(cfg
                .methods
                .iter()
                .enumerate()
                .map(|(m, &method)| {
                    let est = fit(&data.values, cfg.family, method, &cfg.ia, &trial.child(1 + m as u64));
                    est.and_then(|e| evaluate(&data.values, &e)).ok()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cfg.kappas.len() * cfg.methods.len());
    for (i, &kappa) in cfg.kappas.iter().enumerate() {
        let block = &outcomes[i * cfg.trials..(i + 1) * cfg.trials];
        for (m, &method) in cfg.methods.iter().enumerate() {
            let ok: Vec<Outcome> = block.iter().filter_map(|o| o[m]).collect();
            rows.push(summarize(method, kappa, cfg, &ok));
        }
    }
    Ok(rows)
}

fn summarize(method: Method, kappa: f64, cfg: &StudyConfig, ok: &[Outcome]) -> TrialReport {
    let mean = |f: fn(&Outcome) -> f64| ok.iter().map(f).sum::<f64>() / ok.len() as f64;
    let report = |xs: Vec<f64>, truth: f64| {
        metrics::mse_report(&xs, truth).map(|r| (r.mse, r.sd)).unwrap_or((f64::NAN, f64::NAN))
    };
    let (mse_kappa, sd_kappa) = report(ok.iter().map(|o| o.kappa).collect(), kappa);
    let (mse_sigma, sd_sigma) = report(ok.iter().map(|o| o.sigma).collect(), cfg.sigma);
    TrialReport {
        method,
        kappa_true: kappa,
        sigma_true: cfg.sigma,
        mse_kappa,
        sd_kappa,
        mse_sigma,
        sd_sigma,
        ad: mean(|o| o.ad),
        cvm: mean(|o| o.cvm),
        nll: mean(|o| o.nll),
        trials: ok.len(),
        n_per_trial: cfg.n,
        failures: cfg.trials - ok.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(family: Family) -> StudyConfig {
        StudyConfig {
            family,
            kappas: vec![0.5, 1.0],
            sigma: 0.5,
            n: 2000,
            trials: 4,
            methods: Method::ALL.to_vec(),
            seed: 9,
            ia: IAConfig::default(),
        }
    }

    #[test]
    fn rows_cover_the_grid() {
        let cfg = small(Family::Exponential);
        let rows = run_study(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].kappa_true, 0.5);
        assert_eq!(rows[1].method, Method::IaGm);
        assert_eq!(rows[5].kappa_true, 1.0);
        for r in &rows {
            assert_eq!(r.trials + r.failures, 4);
            assert_eq!(r.n_per_trial, 2000);
            assert!(r.mse_sigma < 0.05, "{r:?}");
        }
    }

    #[test]
    fn single_trial_has_zero_spread() {
        let cfg = StudyConfig { trials: 1, kappas: vec![0.5], ..small(Family::Gaussian) };
        for r in run_study(&cfg).unwrap() {
            assert_eq!((r.sd_kappa, r.sd_sigma), (0.0, 0.0));
        }
    }

    #[test]
    fn study_ignores_the_thread_count() {
        let cfg = small(Family::Gaussian);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_study(&cfg).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
    }

    #[test]
    fn study_rejects_bad_grid() {
        let cfg = StudyConfig { kappas: vec![-1.0], ..small(Family::Exponential) };
        assert!(run_study(&cfg).is_err());
        let cfg = StudyConfig { methods: vec![], ..small(Family::Exponential) };
        assert!(run_study(&cfg).is_err());
    }
}
