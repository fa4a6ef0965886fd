//! The subcommands.

use std::fs;
use std::io::Write;
use std::path::Path;

use ia_tails::metrics::TrialReport;
use ia_tails::models::{cnm_run, stdmap_run, CnmConfig, StdMapConfig};
use ia_tails::sampler::{format_f64, sample_coupled, Provenance};
use ia_tails::study::{fit, run_study, StudyConfig};
use ia_tails::{CoupledParams, EstimateResult, Family, Method, RandomStream, SampleSet};
use serde::{Deserialize, Serialize};

use crate::args::{CnmArgs, FitArgs, PlotArgs, SampleArgs, StdmapArgs, StudyArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::{timestamp, RunManifest};
use crate::plot::{histogram, BinScale};

/// Header of the study table.
pub const STUDY_HEADER: [&str; 11] =
    ["kappa_true", "method", "mse_kappa", "sd_kappa", "mse_sigma", "sd_sigma", "ad", "cvm", "nll", "trials", "n"];

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_samples(path: &Path) -> CliResult<SampleSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let prov = Provenance::new(format!("file:{}", path.display()), None);
    SampleSet::from_text(&text, prov).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_samples(set: &SampleSet, out: &Path) -> CliResult<()> {
    write_file(out, set.to_text().as_bytes())
}

fn summary_line(set: &SampleSet, out: &Path) -> String {
    format!("{} values written to {}", set.len(), out.display())
}

pub fn sample(a: &SampleArgs, pretty: bool) -> CliResult<()> {
    let started = timestamp();
    let p = CoupledParams::new(a.family, 0.0, a.sigma, a.kappa)?;
    if a.n == 0 {
        return Err(CliError::Usage("n must be >= 1".into()));
    }
    let set = sample_coupled(a.n, &p, &RandomStream::new(a.seed, 0))?;
    write_samples(&set, &a.out)?;
    RunManifest::new("sample", a, Some(a.seed), started).finish(&a.out)?;
    if pretty {
        println!("{}", summary_line(&set, &a.out));
    }
    Ok(())
}

/// Everything the fit reports beyond the headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDetails {
    #[serde(flatten)]
    pub diagnostics: ia_tails::ia::Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_at_k: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_permutation_estimates: Vec<f64>,
    pub n_samples: usize,
}

/// The JSON document written by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub method: Method,
    pub family: Family,
    pub sigma_hat: f64,
    pub kappa_hat: f64,
    pub q_hat: f64,
    pub beta_hat: f64,
    pub k_selected: Option<usize>,
    pub diagnostics: FitDetails,
}

impl FitOutput {
    pub fn new(est: EstimateResult, n_samples: usize) -> CliResult<Self> {
        let qb = est.q_beta()?;
        Ok(FitOutput {
            method: est.method,
            family: est.family,
            sigma_hat: est.sigma_hat,
            kappa_hat: est.kappa_hat,
            q_hat: qb.q,
            beta_hat: qb.beta,
            k_selected: est.k_selected,
            diagnostics: FitDetails {
                diagnostics: est.diagnostics,
                dispersion_at_k: est.dispersion_at_k,
                per_permutation_estimates: est.per_permutation_estimates,
                n_samples,
            },
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fit output serializes");
        s.push('\n');
        s
    }

    fn table(&self) -> String {
        let k = self.k_selected.map_or("-".to_string(), |k| k.to_string());
        format!(
            "method  family       sigma_hat   kappa_hat   q_hat    beta_hat    k\n{:<7} {:<12} {:<11.4} {:<11.4} {:<8.4} {:<11.4} {k}",
            self.method.tag(),
            self.family.to_string(),
            self.sigma_hat,
            self.kappa_hat,
            self.q_hat,
            self.beta_hat,
        )
    }
}

pub fn fit_cmd(a: &FitArgs, pretty: bool) -> CliResult<()> {
    let started = timestamp();
    let set = read_samples(&a.input)?;
    let est = fit(&set.values, a.family, a.method, &a.ia.config(), &RandomStream::new(a.seed, 0))?;
    let out = FitOutput::new(est, set.len())?;
    match &a.out {
        Some(path) => {
            write_file(path, out.to_json().as_bytes())?;
            RunManifest::new("fit", a, Some(a.seed), started).finish(path)?;
        }
        None if !pretty => print!("{}", out.to_json()),
        None => {}
    }
    if pretty {
        println!("{}", out.table());
    }
    Ok(())
}

/// The study table as CSV text in full precision.
pub fn study_csv(rows: &[TrialReport]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(STUDY_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            format_f64(r.kappa_true),
            r.method.tag().to_string(),
            format_f64(r.mse_kappa),
            format_f64(r.sd_kappa),
            format_f64(r.mse_sigma),
            format_f64(r.sd_sigma),
            format_f64(r.ad),
            format_f64(r.cvm),
            format_f64(r.nll),
            r.trials.to_string(),
            r.n_per_trial.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

fn study_table(rows: &[TrialReport]) -> String {
    let mut s = format!(
        "{:>6} {:<6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>6}\n",
        "kappa", "method", "mse_kappa", "sd_kappa", "mse_sigma", "sd_sigma", "ad", "cvm", "nll", "trials"
    );
    for r in rows {
        s += &format!(
            "{:>6} {:<6} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.4e} {:>6}\n",
            r.kappa_true, r.method.tag(), r.mse_kappa, r.sd_kappa, r.mse_sigma, r.sd_sigma, r.ad, r.cvm, r.nll, r.trials
        );
    }
    s
}

pub fn mc_study(a: &StudyArgs, pretty: bool) -> CliResult<()> {
    let started = timestamp();
    let cfg = StudyConfig {
        family: a.family,
        kappas: a.kappas.clone(),
        sigma: a.sigma,
        n: a.n,
        trials: a.trials,
        methods: a.methods.clone(),
        seed: a.seed,
        ia: a.ia.config(),
    };
    let rows = run_study(&cfg)?;
    write_file(&a.out, study_csv(&rows).as_bytes())?;
    let failures: Vec<_> = rows
        .iter()
        .filter(|r| r.failures > 0)
        .map(|r| serde_json::json!({"kappa_true": r.kappa_true, "method": r.method, "failures": r.failures}))
        .collect();
    for f in &failures {
        eprintln!("warning: {} of {} fits failed at kappa = {} for {}", f["failures"], a.trials, f["kappa_true"], f["method"]);
    }
    let mut manifest = RunManifest::new("mc-study", a, Some(a.seed), started);
    manifest.notes = serde_json::json!({ "failures": failures });
    manifest.finish(&a.out)?;
    if pretty {
        print!("{}", study_table(&rows));
    }
    Ok(())
}

pub fn cnm(a: &CnmArgs, pretty: bool) -> CliResult<()> {
    let started = timestamp();
    let cfg = CnmConfig {
        n_agents: a.agents,
        sigma_stress: a.sigma_stress,
        f: a.f,
        steps: a.steps,
        subsample_every: a.subsample_every,
        normalize: !a.raw,
    };
    let set = cnm_run(&cfg, &RandomStream::new(a.seed, 0))?;
    write_samples(&set, &a.out)?;
    RunManifest::new("model cnm", a, Some(a.seed), started).finish(&a.out)?;
    if pretty {
        println!("{}", summary_line(&set, &a.out));
    }
    Ok(())
}

pub fn stdmap(a: &StdmapArgs, pretty: bool) -> CliResult<()> {
    let started = timestamp();
    let cfg = StdMapConfig {
        k: a.k,
        n_initial_conditions: a.orbits,
        transient: a.transient,
        sum_length: a.sum_length,
    };
    let set = stdmap_run(&cfg, &RandomStream::new(a.seed, 0))?;
    write_samples(&set, &a.out)?;
    RunManifest::new("model stdmap", a, Some(a.seed), started).finish(&a.out)?;
    if pretty {
        println!("{}", summary_line(&set, &a.out));
    }
    Ok(())
}

fn parse_fit_spec(spec: &str, family: Family) -> CliResult<(String, CoupledParams)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("--fit {spec:?}: expected LABEL:SIGMA:KAPPA"));
    let [label, sigma, kappa] = parts[..] else {
        return Err(bad());
    };
    let sigma: f64 = sigma.parse().map_err(|_| bad())?;
    let kappa: f64 = kappa.parse().map_err(|_| bad())?;
    Ok((label.to_string(), CoupledParams::new(family, 0.0, sigma, kappa)?))
}

pub fn plotdata(a: &PlotArgs, pretty: bool) -> CliResult<()> {
    let started = timestamp();
    let set = read_samples(&a.input)?;
    let mut fits = Vec::new();
    for spec in &a.fits {
        fits.push(parse_fit_spec(spec, a.family)?);
    }
    for path in &a.fit_json {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let f: FitOutput =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let p = CoupledParams::new(a.family, 0.0, f.sigma_hat, f.kappa_hat.max(0.0))?;
        fits.push((f.method.tag().to_string(), p));
    }
    let scale = match a.family {
        Family::Exponential => BinScale::Log,
        Family::Gaussian => BinScale::Linear,
    };
    let range = match (a.min, a.max) {
        (None, None) => None,
        (lo, hi) => {
            let finite = set.values.iter().copied().filter(|v| v.is_finite() && (scale == BinScale::Linear || *v > 0.0));
            let (dlo, dhi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            Some((lo.unwrap_or(dlo), hi.unwrap_or(dhi)))
        }
    };
    let h = histogram(&set.values, a.bins, scale, range)?;

    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["bin_center".to_string(), "empirical_density".to_string()];
    header.extend(fits.iter().map(|(label, _)| format!("pdf_{label}")));
    w.write_record(&header).expect("in-memory write");
    for (c, d) in h.centers().into_iter().zip(&h.density) {
        let mut row = vec![format_f64(c), format_f64(*d)];
        for (_, p) in &fits {
            row.push(format_f64(p.pdf(c)?));
        }
        w.write_record(&row).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    write_file(&a.out, &bytes)?;
    let mut manifest = RunManifest::new("plotdata", a, None, started);
    manifest.notes = serde_json::json!({ "binned": h.counted, "samples": set.len(), "scale": scale });
    manifest.finish(&a.out)?;
    if pretty {
        let mut out = std::io::stdout().lock();
        writeln!(out, "{} of {} values in {} {:?} bins written to {}", h.counted, set.len(), a.bins, scale, a.out.display())
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}
