//! Data generators: the coherent noise model and sums of standard-map
//! iterates.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp, Hypergeometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{Provenance, RandomStream, SampleSet};
use crate::special::ln_gamma;

/// Coherent noise model settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnmConfig {
    pub n_agents: u64,
    /// Scale of the exponential stress.
    pub sigma_stress: f64,
    /// Agents given a fresh threshold after every step.
    pub f: u64,
    pub steps: u64,
    /// Keep every `subsample_every`-th step.
    pub subsample_every: u64,
    /// Report avalanche sizes as a fraction of `n_agents`.
    pub normalize: bool,
}

impl Default for CnmConfig {
    fn default() -> Self {
        CnmConfig {
            n_agents: 100_000,
            sigma_stress: 0.05,
            f: 8_000,
            steps: 1_000_000,
            subsample_every: 1,
            normalize: true,
        }
    }
}

impl CnmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::param("n_agents must be >= 1"));
        }
        if self.f > self.n_agents {
            return Err(Error::param(format!("f = {} exceeds n_agents = {}", self.f, self.n_agents)));
        }
        if !(self.sigma_stress > 0.0 && self.sigma_stress.is_finite()) {
            return Err(Error::param(format!("sigma_stress must be > 0, got {}", self.sigma_stress)));
        }
        if self.subsample_every == 0 {
            return Err(Error::param("subsample_every must be >= 1"));
        }
        Ok(())
    }
}

/// The agents of a coherent noise model, held exactly in distribution.
///
/// Agents are exchangeable, and every agent's threshold is uniform on
/// `[lo, 1)` for the `lo` of the last stress it survived. The state is the
/// list of `(lo, count)` groups, sorted by `lo`. Survivors of a stress `η`
/// all become uniform on `[η, 1)`, so the list stays short: it holds the
/// fresh group and the running record stresses.
#[derive(Debug, Clone, PartialEq)]
pub struct CnmState {
    groups: Vec<(f64, u64)>,
    n_agents: u64,
}

impl CnmState {
    pub fn new(n_agents: u64) -> Self {
        CnmState { groups: vec![(0.0, n_agents)], n_agents }
    }

    pub fn n_agents(&self) -> u64 {
        self.groups.iter().map(|g| g.1).sum()
    }

    /// Lower ends of the threshold groups, ascending.
    pub fn floors(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().map(|g| g.0)
    }

    /// Apply stress `eta`: every agent with threshold below it is replaced.
    /// Returns the avalanche size.
    pub fn stress<R: Rng + ?Sized>(&mut self, eta: f64, rng: &mut R) -> u64 {
        let mut replaced = 0;
        let mut survivors = 0;
        let mut kept = Vec::with_capacity(self.groups.len() + 2);
        for &(lo, count) in &self.groups {
            if lo >= eta {
                kept.push((lo, count));
                continue;
            }
            let p = ((eta - lo) / (1.0 - lo)).min(1.0);
            let hit = if p >= 1.0 {
                count
            } else {
                Binomial::new(count, p).expect("valid binomial").sample(rng)
            };
            replaced += hit;
            survivors += count - hit;
        }
        let mut groups = Vec::with_capacity(kept.len() + 2);
        if replaced > 0 {
            groups.push((0.0, replaced));
        }
        if survivors > 0 {
            groups.push((eta, survivors));
        }
        groups.extend(kept);
        self.groups = groups;
        replaced
    }

    /// Give `f` agents chosen uniformly without replacement a fresh
    /// threshold.
    pub fn refresh<R: Rng + ?Sized>(&mut self, f: u64, rng: &mut R) {
        let mut pool = self.n_agents;
        let mut left = f;
        let mut fresh = 0;
        for g in self.groups.iter_mut() {
            if left == 0 {
                break;
            }
            let take = if g.1 == pool {
                left
            } else {
                hypergeometric(pool, g.1, left, rng)
            };
            pool -= g.1;
            g.1 -= take;
            left -= take;
            fresh += take;
        }
        self.groups.retain(|g| g.1 > 0);
        match self.groups.first_mut() {
            Some(g) if g.0 == 0.0 => g.1 += fresh,
            _ if fresh > 0 => self.groups.insert(0, (0.0, fresh)),
            _ => {}
        }
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Successes among `draws` taken without replacement from `population`
/// items of which `marked` are successes.
fn hypergeometric<R: Rng + ?Sized>(population: u64, marked: u64, draws: u64, rng: &mut R) -> u64 {
    match Hypergeometric::new(population, marked, draws) {
        Ok(h) => h.sample(rng),
        Err(_) => hypergeometric_inversion(population, marked, draws, rng),
    }
}

/// Inverse-transform hypergeometric draw with the first mass taken in logs.
/// Suited to small means, where the library sampler can fail to set up.
fn hypergeometric_inversion<R: Rng + ?Sized>(population: u64, marked: u64, draws: u64, rng: &mut R) -> u64 {
    let lo = (draws + marked).saturating_sub(population);
    let hi = draws.min(marked);
    let mut x = lo;
    let mut mass = (ln_choose(marked, lo) + ln_choose(population - marked, draws - lo)
        - ln_choose(population, draws))
    .exp();
    let mut u: f64 = rng.random();
    while x < hi && u > mass {
        u -= mass;
        let (xf, k, n) = (x as f64, marked as f64, draws as f64);
        let rest = (population - marked) as f64 - n;
        mass *= (k - xf) * (n - xf) / ((xf + 1.0) * (rest + xf + 1.0));
        x += 1;
    }
    x
}

/// Run the coherent noise model and return the nonzero avalanche sizes of
/// every `subsample_every`-th step.
pub fn cnm_run(cfg: &CnmConfig, rs: &RandomStream) -> Result<SampleSet> {
    cfg.validate()?;
    let mut rng = rs.rng();
    let stress = Exp::new(1.0 / cfg.sigma_stress).map_err(|e| Error::param(e.to_string()))?;
    let mut state = CnmState::new(cfg.n_agents);
    let scale = if cfg.normalize { 1.0 / cfg.n_agents as f64 } else { 1.0 };
    let mut values = Vec::new();
    for step in 0..cfg.steps {
        let eta: f64 = stress.sample(&mut rng);
        let size = state.stress(eta, &mut rng);
        state.refresh(cfg.f, &mut rng);
        if size > 0 && step % cfg.subsample_every == 0 {
            values.push(size as f64 * scale);
        }
    }
    let prov = Provenance::new("cnm", Some(rs))
        .with("n_agents", cfg.n_agents as f64)
        .with("sigma_stress", cfg.sigma_stress)
        .with("f", cfg.f as f64)
        .with("steps", cfg.steps as f64)
        .with("subsample_every", cfg.subsample_every as f64);
    Ok(SampleSet::new(values, prov))
}

/// Standard-map settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdMapConfig {
    /// Kicking strength `K`.
    pub k: f64,
    /// Orbits, each from a uniform random starting point.
    pub n_initial_conditions: usize,
    /// Iterations discarded before summing.
    pub transient: usize,
    /// Iterates summed per orbit.
    pub sum_length: usize,
}

impl Default for StdMapConfig {
    fn default() -> Self {
        StdMapConfig { k: 0.6, n_initial_conditions: 10_000, transient: 10_000, sum_length: 10_000 }
    }
}

impl StdMapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::param(format!("K must be > 0, got {}", self.k)));
        }
        if self.n_initial_conditions < 1 || self.sum_length < 1 {
            return Err(Error::param("n_initial_conditions and sum_length must be >= 1"));
        }
        Ok(())
    }
}

fn wrap(v: f64) -> f64 {
    let r = v.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// One step `y ← y - K sin x`, `x ← x + y`, both modulo `2π`.
pub fn stdmap_step(x: f64, y: f64, k: f64) -> (f64, f64) {
    let y = wrap(y - k * x.sin());
    (wrap(x + y), y)
}

/// Centered sums `(Σ xᵢ - L x̄)/√L` of `L = sum_length` iterates, one per
/// orbit, where `x̄` is the mean of all summed iterates of all orbits.
pub fn stdmap_run(cfg: &StdMapConfig, rs: &RandomStream) -> Result<SampleSet> {
    cfg.validate()?;
    let sums: Vec<f64> = (0..cfg.n_initial_conditions)
        .into_par_iter()
        .map(|j| {
            let mut rng = rs.child(j as u64).rng();
            let mut x = rng.random::<f64>() * TAU;
            let mut y = rng.random::<f64>() * TAU;
            for _ in 0..cfg.transient {
                (x, y) = stdmap_step(x, y, cfg.k);
            }
            let mut sum = 0.0;
            for _ in 0..cfg.sum_length {
                (x, y) = stdmap_step(x, y, cfg.k);
                sum += x;
            }
            sum
        })
        .collect();
    let len = cfg.sum_length as f64;
    let x_bar = sums.iter().sum::<f64>() / (len * cfg.n_initial_conditions as f64);
    let values = sums.iter().map(|s| (s - len * x_bar) / len.sqrt()).collect();
    let prov = Provenance::new("stdmap", Some(rs))
        .with("K", cfg.k)
        .with("n_initial_conditions", cfg.n_initial_conditions as f64)
        .with("transient", cfg.transient as f64)
        .with("sum_length", cfg.sum_length as f64);
    Ok(SampleSet::new(values, prov))
}
