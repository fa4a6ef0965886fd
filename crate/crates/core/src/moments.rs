//! Power moments of the coupled family, their inversions to `(σ, κ)`, and the
//! log-average used by the geometric-mean estimator.
//!
//! The power moment `μ_m^(n)` is the `m`-th moment of the renormalized
//! density `f^n / ∫ f^n`. Raising the density to a power thins its tail, so
//! `μ_m^(n)` stays finite for `m ≤ n - 1` even when the plain `m`-th moment of
//! `f` diverges.

use crate::dist::{CoupledParams, Family, KAPPA_ZERO};
use crate::error::{Error, Result};
use crate::quad::{self, DEFAULT_ABS_TOL};
use crate::special::{ln_gamma, ln_gamma_ratio};

/// Bracket searched by [`solve_kappa_from_log_mean`].
pub const KAPPA_BRACKET: (f64, f64) = (1e-6, 20.0);

/// Largest coupling for which `μ_m^(n)` is finite: `n / (m + 1 - n)`, or
/// infinity when `m < n`.
pub fn moment_bound(m: u32, n: u32) -> f64 {
    let d = m as f64 + 1.0 - n as f64;
    if d <= 0.0 {
        f64::INFINITY
    } else {
        n as f64 / d
    }
}

fn check_power_moment(m: u32, n: u32, sigma: f64, kappa: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::domain("density power must be >= 1"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::param(format!("kappa must be >= 0, got {kappa}")));
    }
    let bound = moment_bound(m, n);
    if kappa >= bound {
        return Err(Error::MomentDivergence { m, n, bound });
    }
    Ok(())
}

/// `μ_m^(n)` of the coupled exponential at `μ = 0`:
/// `(σ/κ)^m m! Γ(n + n/κ - 1 - m) / Γ(n + n/κ - 1)`.
///
/// ```
/// use ia_tails::moments::gpd_power_moment;
/// // The pair mean is σ/2 for every coupling.
/// assert!((gpd_power_moment(1, 2, 0.5, 1.5).unwrap() - 0.25).abs() < 1e-14);
/// ```
pub fn gpd_power_moment(m: u32, n: u32, sigma: f64, kappa: f64) -> Result<f64> {
    check_power_moment(m, n, sigma, kappa)?;
    let mf = m as f64;
    let nf = n as f64;
    let ln_fact = ln_gamma(mf + 1.0);
    if kappa < KAPPA_ZERO {
        return Ok((mf * (sigma / nf).ln() + ln_fact).exp());
    }
    let top = nf + nf / kappa - 1.0 - mf;
    Ok((mf * (sigma / kappa).ln() + ln_fact - ln_gamma_ratio(top, mf)).exp())
}

/// `μ_m^(n)` of the coupled Gaussian at `μ = 0`, through the Student's t
/// moments of the power density. Odd orders vanish.
pub fn gauss_power_moment(m: u32, n: u32, sigma: f64, kappa: f64) -> Result<f64> {
    check_power_moment(m, n, sigma, kappa)?;
    if m % 2 == 1 {
        return Ok(0.0);
    }
    let q = CoupledParams::gaussian(sigma, kappa)?.power_density_params(n)?;
    let mf = m as f64;
    // E|Z|^m for the standard Gaussian and the standard Student's t.
    let ln_base = ln_gamma(0.5 * (mf + 1.0)) - 0.5 * std::f64::consts::PI.ln();
    let ln_t = if q.kappa < KAPPA_ZERO {
        0.5 * mf * std::f64::consts::LN_2 + ln_base
    } else {
        let nu = 1.0 / q.kappa;
        0.5 * mf * nu.ln() + ln_base - ln_gamma_ratio(0.5 * (nu - mf), 0.5 * mf)
    };
    Ok((mf * q.sigma.ln() + ln_t).exp())
}

/// `(σ̂, κ̂)` of the coupled exponential from the pair mean `μ_1^(2) = σ/2`
/// and the triplet second moment `μ_2^(3) = 2σ²/(3(3+κ))`.
pub fn invert_gpd(pair_mean: f64, triplet_m2: f64) -> Result<(f64, f64)> {
    if !(pair_mean > 0.0 && pair_mean.is_finite()) {
        return Err(Error::domain(format!("pair mean must be > 0, got {pair_mean}")));
    }
    if !(triplet_m2 > 0.0 && triplet_m2.is_finite()) {
        return Err(Error::domain(format!("triplet second moment must be > 0, got {triplet_m2}")));
    }
    let sigma = 2.0 * pair_mean;
    let kappa = 2.0 * sigma * sigma / (3.0 * triplet_m2) - 3.0;
    if kappa <= -1.0 {
        return Err(Error::Inversion(format!(
            "kappa estimate {kappa} <= -1 from pair mean {pair_mean} and triplet moment {triplet_m2}"
        )));
    }
    Ok((sigma, kappa))
}

/// `σ̂ = √(3 μ_2^(3))` for the coupled Gaussian.
pub fn invert_gauss_sigma(triplet_m2: f64) -> Result<f64> {
    if !(triplet_m2 > 0.0 && triplet_m2.is_finite()) {
        return Err(Error::domain(format!("triplet second moment must be > 0, got {triplet_m2}")));
    }
    Ok((3.0 * triplet_m2).sqrt())
}

/// `κ̂` of the coupled Gaussian from the quintuplet fourth moment
/// `μ_4^(5) = 3σ⁴/(25 + 10κ)`. A negative value is returned as is.
pub fn invert_gauss_kappa_quint(m4: f64, sigma_hat: f64) -> Result<f64> {
    if !(m4 > 0.0 && m4.is_finite()) {
        return Err(Error::domain(format!("quintuplet fourth moment must be > 0, got {m4}")));
    }
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::domain(format!("sigma estimate must be > 0, got {sigma_hat}")));
    }
    Ok((3.0 * sigma_hat.powi(4) / m4 - 25.0) / 10.0)
}

/// `E ln|X - μ|` by adaptive quadrature over the support.
pub fn theoretical_log_abs_mean(p: &CoupledParams) -> Result<f64> {
    p.validate()?;
    let mu = p.mu;
    let q = p.integrate_over_support(
        |x| {
            let d = (x - mu).abs();
            if d == 0.0 {
                return 0.0;
            }
            match p.ln_pdf(x) {
                Ok(l) => d.ln() * l.exp(),
                Err(_) => 0.0,
            }
        },
        DEFAULT_ABS_TOL,
    )?;
    Ok(q.value)
}

/// Coupling whose log-average matches `sample_log_mean` at scale `sigma_hat`.
///
/// Solves `E ln|X| (σ̂, κ) = sample_log_mean` for `κ` in [`KAPPA_BRACKET`].
/// The log-average increases with `κ`; if the endpoints do not straddle the
/// target a [`Error::NoSolution`] carries the residuals at both ends.
pub fn solve_kappa_from_log_mean(sample_log_mean: f64, sigma_hat: f64, family: Family) -> Result<f64> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::domain(format!("sigma estimate must be > 0, got {sigma_hat}")));
    }
    if !sample_log_mean.is_finite() {
        return Err(Error::domain(format!("log mean must be finite, got {sample_log_mean}")));
    }
    // E ln|X| = ln σ + E ln|Z| with Z at unit scale.
    let target = sample_log_mean - sigma_hat.ln();
    let unit_log_mean = |kappa: f64| -> Result<f64> {
        let p = CoupledParams::new(family, 0.0, 1.0, kappa)?;
        theoretical_log_abs_mean(&p)
    };
    let (lo, hi) = KAPPA_BRACKET;
    let g_lo = unit_log_mean(lo)? - target;
    let g_hi = unit_log_mean(hi)? - target;
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::NoSolution { lo, hi, g_lo, g_hi });
    }
    let mut failure = None;
    let root = quad::brent(
        |k| match unit_log_mean(k) {
            Ok(v) => v - target,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-10,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    root
}

/// Mean of `ln|x|` over the nonzero samples, with the number of exact zeros
/// that were left out.
pub fn sample_log_abs_mean(samples: &[f64]) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut used = 0usize;
    for &x in samples {
        if x != 0.0 {
            sum += x.abs().ln();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData("no nonzero samples for the log mean".into()));
    }
    Ok((sum / used as f64, samples.len() - used))
}
