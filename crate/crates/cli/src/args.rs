//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ia_tails::ia::DEFAULT_K_MAX_FRACTION;
use ia_tails::{Family, IAConfig, Method};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ia-tails", version, about = "Fit heavy-tailed coupled distributions with Independent Approximates")]
pub struct Cli {
    /// TOML file of flag values for the subcommand; flags given here win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Also print a rounded summary to stdout.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a coupled distribution.
    Sample(SampleArgs),
    /// Estimate scale and coupling from a sample file.
    Fit(FitArgs),
    /// Compare the estimators over repeated simulated samples.
    McStudy(StudyArgs),
    /// Generate data from a dynamical model.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Histogram a sample file next to fitted densities.
    Plotdata(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Avalanche sizes of the coherent noise model.
    Cnm(CnmArgs),
    /// Centered sums of standard-map iterates.
    Stdmap(StdmapArgs),
}

/// A count that may be written as `10000` or `1e4`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) => Ok(v as u64),
        _ => Err(format!("{s:?} is not a non-negative whole number")),
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    parse_count(s).map(|n| n as usize)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    /// gpd (coupled exponential) or gauss (coupled Gaussian).
    #[arg(long)]
    pub family: Family,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: f64,
    #[arg(long, value_parser = parse_usize)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IaArgs {
    /// Random partitions per subsample-size search.
    #[arg(long, default_value_t = 25, value_parser = parse_usize)]
    pub permutations: usize,
    /// Smallest number of tuples considered.
    #[arg(long, default_value_t = 10, value_parser = parse_usize)]
    pub k_min: usize,
    #[arg(long, default_value_t = 1, value_parser = parse_usize)]
    pub k_step: usize,
    /// Largest number of tuples considered; overrides --k-max-fraction.
    #[arg(long, value_parser = parse_usize)]
    pub k_max: Option<usize>,
    /// Largest number of tuples considered, as a share of all tuples.
    #[arg(long, default_value_t = DEFAULT_K_MAX_FRACTION)]
    pub k_max_fraction: f64,
}

impl IaArgs {
    pub fn config(&self) -> IAConfig {
        IAConfig {
            permutations: self.permutations,
            k_min: self.k_min,
            k_step: self.k_step,
            k_max: self.k_max,
            k_max_fraction: self.k_max_fraction,
            ..IAConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// ia, ia-gm or ml.
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub family: Family,
    /// Sample file, one number per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Seed of the random partitions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub ia: IaArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StudyArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,1.25,2")]
    pub kappas: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Samples per trial.
    #[arg(long, default_value_t = 10_000, value_parser = parse_usize)]
    pub n: usize,
    #[arg(long, default_value_t = 100, value_parser = parse_usize)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "ia,ia-gm,ml")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output file.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub ia: IaArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CnmArgs {
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub agents: u64,
    /// Scale of the exponential stress.
    #[arg(long, default_value_t = 0.05)]
    pub sigma_stress: f64,
    /// Agents given a fresh threshold every step.
    #[arg(long, default_value = "8000", value_parser = parse_count)]
    pub f: u64,
    #[arg(long, default_value = "1000000", value_parser = parse_count)]
    pub steps: u64,
    /// Keep every n-th step.
    #[arg(long, default_value = "1", value_parser = parse_count)]
    pub subsample_every: u64,
    /// Report avalanche sizes as agent counts instead of fractions.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StdmapArgs {
    /// Kicking strength.
    #[arg(long = "K", visible_alias = "k", default_value_t = 0.6)]
    pub k: f64,
    #[arg(long, default_value = "10000", value_parser = parse_usize)]
    pub orbits: usize,
    /// Iterations discarded before summing.
    #[arg(long, default_value = "10000", value_parser = parse_usize)]
    pub transient: usize,
    /// Iterates summed per orbit.
    #[arg(long, default_value = "10000", value_parser = parse_usize)]
    pub sum_length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// gpd bins on a log scale, gauss on a linear one.
    #[arg(long)]
    pub family: Family,
    #[arg(long, default_value_t = 50, value_parser = parse_usize)]
    pub bins: usize,
    /// Lower end of the binned range.
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    /// Upper end of the binned range.
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    /// Fitted density as LABEL:SIGMA:KAPPA. Repeatable.
    #[arg(long = "fit", value_name = "LABEL:SIGMA:KAPPA")]
    pub fits: Vec<String>,
    /// JSON written by `fit`; its method names the column. Repeatable.
    #[arg(long = "fit-json", value_name = "FILE")]
    pub fit_json: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn flags_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("100000"), Ok(100_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn study_lists_split_on_commas() {
        let cli = Cli::try_parse_from(["ia-tails", "mc-study", "--family", "gpd", "--out", "t.csv", "--methods", "ml,IA_GM"]).unwrap();
        let Command::McStudy(a) = cli.command else { panic!() };
        assert_eq!(a.methods, [Method::Ml, Method::IaGm]);
        assert_eq!(a.kappas, [0.25, 0.5, 1.0, 1.25, 2.0]);
    }

    #[test]
    fn negative_values_reach_validation() {
        let cli = Cli::try_parse_from(["ia-tails", "sample", "--family", "gpd", "--sigma", "1", "--kappa", "-0.5", "--n", "5", "--out", "x"]).unwrap();
        let Command::Sample(a) = cli.command else { panic!() };
        assert_eq!(a.kappa, -0.5);
    }
}
