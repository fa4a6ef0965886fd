//! The coupled distribution family.
//!
//! A coupled distribution has density
//!
//! ```text
//! f(x) = (1/Z) (1 + κ |x-μ|^α / σ^α)^(-(1+κ)/(ακ))     κ > 0
//! f(x) = (1/Z) exp(-|x-μ|^α / (α σ^α))                 κ = 0
//! ```
//!
//! with `α = 1` the coupled exponential (generalized Pareto, one-sided by
//! default) and `α = 2` the coupled Gaussian (Student's t with `ν = 1/κ`,
//! two-sided by default). The scale `σ` sits at the knee of the log-log plot:
//! the log-log slope there is exactly `-1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Quadrature, DEFAULT_ABS_TOL};
use crate::special::{self, Regularized};

/// Below this coupling the exponential/Gaussian limit branch is used.
pub const KAPPA_ZERO: f64 = 1e-12;

/// Power of the variable: `α = 1` or `α = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `α = 1`: coupled exponential, a reparameterized generalized Pareto.
    #[serde(alias = "gpd")]
    Exponential,
    /// `α = 2`: coupled Gaussian, a reparameterized Student's t.
    #[serde(alias = "gauss")]
    Gaussian,
}

impl Family {
    pub fn alpha(self) -> f64 {
        match self {
            Family::Exponential => 1.0,
            Family::Gaussian => 2.0,
        }
    }

    pub fn from_alpha(alpha: u32) -> Result<Self> {
        match alpha {
            1 => Ok(Family::Exponential),
            2 => Ok(Family::Gaussian),
            _ => Err(Error::param(format!("alpha must be 1 or 2, got {alpha}"))),
        }
    }

    pub fn default_support(self) -> Support {
        match self {
            Family::Exponential => Support::OneSided,
            Family::Gaussian => Support::TwoSided,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    /// Accepts `exponential`, `gpd`, `gaussian` and `gauss`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "gpd" => Ok(Family::Exponential),
            "gaussian" | "gauss" => Ok(Family::Gaussian),
            _ => Err(Error::param(format!("unknown family {s:?}; expected gpd or gauss"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Support {
    /// `x ≥ μ`.
    OneSided,
    /// Symmetric about `μ`.
    TwoSided,
}

/// Parameters of a coupled distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledParams {
    pub family: Family,
    pub mu: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub support: Support,
}

/// Tsallis `q` and inverse-scale `β` equivalents of a coupled distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QBetaParams {
    pub q: f64,
    pub beta: f64,
}

/// Landmark points of the density, measured as offsets from `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogLandmarks {
    /// Zero of `f''` (coupled Gaussian only).
    pub inflection_x: Option<f64>,
    /// Zero of `f'''` away from the center (coupled Gaussian only).
    pub derivative_inflection_x: Option<f64>,
    /// Where the log-log slope is half its asymptotic value; needs `κ > 0`.
    pub half_slope_x: Option<f64>,
    /// Where the log-log slope is `-1`: always `σ`.
    pub unit_slope_x: f64,
    /// `lim d ln f / d ln x`; needs `κ > 0`.
    pub asymptotic_slope: Option<f64>,
}

/// Superstatistics gamma mixture variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Superstatistics {
    /// Boltzmann factor only: the exponential's normalization is ignored.
    TypeA,
    /// Normalized exponential densities are mixed.
    TypeB,
}

/// Both sides of the generalized-mean identity for the density at the scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralizedMeanCheck {
    /// `f(σ)`.
    pub lhs: f64,
    /// `(∫ f^(1 + ακ/(1+κ)))^((1+κ)/(ακ))` by quadrature.
    pub rhs: f64,
}

/// Normalization `Z(σ, κ, α)`.
///
/// `σ` for `α = 1`; `σ B(1/(2κ), 1/2) / √κ` for `α = 2, κ > 0`; `σ √(2π)` for
/// `α = 2, κ = 0`. `α = 1` normalizes the one-sided density and `α = 2` the
/// two-sided one.
pub fn partition_function(sigma: f64, kappa: f64, family: Family) -> Result<f64> {
    Ok(ln_partition_function(sigma, kappa, family)?.exp())
}

fn ln_partition_function(sigma: f64, kappa: f64, family: Family) -> Result<f64> {
    check_scale_shape(sigma, kappa)?;
    Ok(match family {
        Family::Exponential => sigma.ln(),
        Family::Gaussian if kappa < KAPPA_ZERO => {
            sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln()
        }
        Family::Gaussian => {
            sigma.ln() + special::ln_beta(0.5 / kappa, 0.5) - 0.5 * kappa.ln()
        }
    })
}

fn check_scale_shape(sigma: f64, kappa: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::param(format!("kappa must be >= 0, got {kappa}")));
    }
    Ok(())
}

impl CoupledParams {
    /// Validated parameters with the family's default support.
    pub fn new(family: Family, mu: f64, sigma: f64, kappa: f64) -> Result<Self> {
        let p = CoupledParams { family, mu, sigma, kappa, support: family.default_support() };
        p.validate()?;
        Ok(p)
    }

    /// One-sided coupled exponential at `μ = 0`.
    pub fn exponential(sigma: f64, kappa: f64) -> Result<Self> {
        Self::new(Family::Exponential, 0.0, sigma, kappa)
    }

    /// Two-sided coupled Gaussian at `μ = 0`.
    pub fn gaussian(sigma: f64, kappa: f64) -> Result<Self> {
        Self::new(Family::Gaussian, 0.0, sigma, kappa)
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::param(format!("mu must be finite, got {}", self.mu)));
        }
        check_scale_shape(self.sigma, self.kappa)
    }

    pub fn alpha(&self) -> f64 {
        self.family.alpha()
    }

    fn is_limit(&self) -> bool {
        self.kappa < KAPPA_ZERO
    }

    /// Log of the normalization actually used for the configured support.
    fn ln_norm(&self) -> Result<f64> {
        let ln_z = ln_partition_function(self.sigma, self.kappa, self.family)?;
        Ok(match (self.family, self.support) {
            (Family::Exponential, Support::TwoSided) => ln_z + std::f64::consts::LN_2,
            (Family::Gaussian, Support::OneSided) => ln_z - std::f64::consts::LN_2,
            _ => ln_z,
        })
    }

    /// `|x - μ| / σ`, rejecting points left of `μ` on one-sided support.
    fn standardize(&self, x: f64) -> Result<f64> {
        let z = (x - self.mu) / self.sigma;
        if self.support == Support::OneSided && z < 0.0 {
            return Err(Error::domain(format!(
                "x = {x} below the location {} of a one-sided distribution",
                self.mu
            )));
        }
        if z.is_nan() {
            return Err(Error::domain("x is NaN"));
        }
        Ok(z.abs())
    }

    /// `ln f(x)`; finite for `|x|` far beyond where `f` underflows.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        let z = self.standardize(x)?;
        Ok(self.ln_kernel(z) - self.ln_norm()?)
    }

    fn ln_kernel(&self, z: f64) -> f64 {
        let za = if self.family == Family::Gaussian { z * z } else { z };
        if self.is_limit() {
            -za / self.alpha()
        } else {
            let t = self.kappa * za;
            let ln_1p = if t.is_finite() {
                t.ln_1p()
            } else {
                self.kappa.ln() + self.alpha() * z.abs().ln()
            };
            -(1.0 + self.kappa) / (self.alpha() * self.kappa) * ln_1p
        }
    }

    /// `Σ ln f(xᵢ)`. A sample outside the support is reported by index.
    pub fn log_likelihood(&self, xs: &[f64]) -> Result<f64> {
        self.validate()?;
        let mut sum = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let z = self
                .standardize(x)
                .map_err(|e| Error::domain(format!("sample {i}: {e}")))?;
            sum += self.ln_kernel(z);
        }
        Ok(sum - xs.len() as f64 * self.ln_norm()?)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.ln_pdf(x)?.exp())
    }

    /// CDF and survival of `|X - μ|/σ` under the folded (one-sided) density.
    fn folded(&self, z: f64) -> Result<Regularized> {
        let k = self.kappa;
        match (self.family, self.is_limit()) {
            (Family::Exponential, true) => Ok(Regularized { lower: -(-z).exp_m1(), upper: (-z).exp() }),
            (Family::Exponential, false) => {
                let log_s = -(k * z).ln_1p() / k;
                Ok(Regularized { lower: -log_s.exp_m1(), upper: log_s.exp() })
            }
            (Family::Gaussian, true) => special::inc_gamma(0.5, 0.5 * z * z),
            (Family::Gaussian, false) => {
                let t = k * z * z;
                let (x, y) = if t > 1.0 {
                    let r = 1.0 / t;
                    (1.0 / (1.0 + r), r / (1.0 + r))
                } else {
                    (t / (1.0 + t), 1.0 / (1.0 + t))
                };
                special::inc_beta_xy(x, y, 0.5, 0.5 / k)
            }
        }
    }

    /// Returns `(F(x), 1 - F(x))`, each side evaluated without cancellation.
    pub fn cdf_sf(&self, x: f64) -> Result<(f64, f64)> {
        self.validate()?;
        let z = self.standardize(x)?;
        let r = self.folded(z)?;
        Ok(match self.support {
            Support::OneSided => (r.lower, r.upper),
            Support::TwoSided if x >= self.mu => (1.0 - 0.5 * r.upper, 0.5 * r.upper),
            Support::TwoSided => (0.5 * r.upper, 1.0 - 0.5 * r.upper),
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(self.cdf_sf(x)?.0)
    }

    pub fn sf(&self, x: f64) -> Result<f64> {
        Ok(self.cdf_sf(x)?.1)
    }

    /// Inverse CDF. Closed form for the coupled exponential, Brent search on
    /// the precise side of the CDF otherwise.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        self.validate()?;
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::domain(format!("probability {prob} not in (0, 1)")));
        }
        let z = match self.support {
            Support::OneSided => self.folded_quantile(prob, 1.0 - prob)?,
            Support::TwoSided if prob == 0.5 => 0.0,
            Support::TwoSided if prob > 0.5 => {
                let upper = 2.0 * (1.0 - prob);
                self.folded_quantile(1.0 - upper, upper)?
            }
            Support::TwoSided => -self.folded_quantile(1.0 - 2.0 * prob, 2.0 * prob)?,
        };
        Ok(self.mu + self.sigma * z)
    }

    /// Standardized `z ≥ 0` with folded CDF `lower` (equivalently survival
    /// `upper`).
    fn folded_quantile(&self, lower: f64, upper: f64) -> Result<f64> {
        if self.family == Family::Exponential {
            let log_s = if lower < 0.5 { (-lower).ln_1p() } else { upper.ln() };
            return Ok(if self.is_limit() {
                -log_s
            } else {
                (-self.kappa * log_s).exp_m1() / self.kappa
            });
        }
        // Safeguarded Newton in t = ln z on the log of the precise side,
        // which is close to linear in t in both the body and the tail.
        let use_lower = lower <= 0.5;
        let (target, sign) = if use_lower { (lower.ln(), 1.0) } else { (upper.ln(), -1.0) };
        let eval = |t: f64| -> Result<(f64, f64)> {
            let z = t.exp();
            let r = self.folded(z)?;
            let side = if use_lower { r.lower } else { r.upper };
            let slope = self.folded_unit_density(z) * z / side;
            Ok((sign * (side.ln() - target), slope))
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        let (mut h_lo, _) = eval(lo)?;
        // z² stays finite for |t| <= 350.
        while h_lo > 0.0 {
            if lo <= -350.0 {
                return Ok(0.0);
            }
            hi = lo;
            lo = (2.0 * lo).max(-350.0);
            h_lo = eval(lo)?.0;
        }
        let (mut h_hi, _) = eval(hi)?;
        while h_hi < 0.0 {
            if hi >= 350.0 {
                return Err(Error::NoConvergence(format!("quantile bracket for p = {lower}")));
            }
            lo = hi;
            hi = (2.0 * hi).min(350.0);
            h_hi = eval(hi)?.0;
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (h, dh) = eval(t)?;
            if h == 0.0 {
                break;
            }
            if h < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = t - h / dh;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let done = (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0);
            t = next;
            if done || hi - lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
                break;
            }
        }
        Ok(t.exp())
    }

    /// Density of `|X - μ|/σ` at `z ≥ 0`.
    fn folded_unit_density(&self, z: f64) -> f64 {
        let unit = CoupledParams { mu: 0.0, sigma: 1.0, support: Support::OneSided, ..*self };
        unit.ln_pdf(z).map(f64::exp).unwrap_or(0.0)
    }

    /// Tsallis `q = 1 + ακ/(1+κ)` and `β = (1+κ)/(α σ^α)`.
    pub fn to_q_beta(&self) -> QBetaParams {
        let a = self.alpha();
        QBetaParams {
            q: 1.0 + a * self.kappa / (1.0 + self.kappa),
            beta: (1.0 + self.kappa) / (a * self.sigma.powf(a)),
        }
    }

    /// Parameters of the renormalized `n`-th power density `f^n / ∫f^n`,
    /// which is again a coupled distribution.
    pub fn power_density_params(&self, n: u32) -> Result<CoupledParams> {
        self.validate()?;
        if n < 1 {
            return Err(Error::domain("density power must be >= 1"));
        }
        let n = n as f64;
        let denom = n + (n - 1.0) * self.kappa;
        let sigma = match self.family {
            Family::Exponential => self.sigma / denom,
            Family::Gaussian => self.sigma / denom.sqrt(),
        };
        Ok(CoupledParams { sigma, kappa: self.kappa / denom, ..*self })
    }

    pub fn loglog_landmarks(&self) -> Result<LogLogLandmarks> {
        self.validate()?;
        let k = self.kappa;
        let s = self.sigma;
        let heavy = !self.is_limit();
        let (inflection_x, derivative_inflection_x) = match self.family {
            Family::Gaussian => {
                let r = (1.0 + 2.0 * k).sqrt();
                (Some(s / r), Some(s * 3f64.sqrt() / r))
            }
            Family::Exponential => (None, None),
        };
        Ok(LogLogLandmarks {
            inflection_x,
            derivative_inflection_x,
            half_slope_x: heavy.then(|| s / k.powf(1.0 / self.alpha())),
            unit_slope_x: s,
            asymptotic_slope: heavy.then(|| -(1.0 + k) / k),
        })
    }

    /// Integrate `g` over the support by adaptive quadrature, splitting at
    /// `μ ± σ` and mapping each tail onto a finite interval.
    pub fn integrate_over_support<G: Fn(f64) -> f64>(
        &self,
        g: G,
        abs_tol: f64,
    ) -> Result<Quadrature> {
        let mu = self.mu;
        let right = quad::integrate_half_line(|t| g(mu + t), self.sigma, self.kappa, abs_tol)?;
        if self.support == Support::OneSided {
            return Ok(right);
        }
        let left = quad::integrate_half_line(|t| g(mu - t), self.sigma, self.kappa, abs_tol)?;
        Ok(Quadrature {
            value: left.value + right.value,
            abs_err: left.abs_err + right.abs_err,
            intervals: left.intervals + right.intervals,
        })
    }

    /// Gamma mixture over the inverse scale `b = 1/σ'` with shape `1/κ` and
    /// mean `1/σ`, evaluated at `x` by quadrature.
    ///
    /// Type B mixes normalized exponentials `b e^(-bx)` and reproduces the
    /// coupled exponential density. Type A mixes bare factors `e^(-bx)` and
    /// gives `(1 + κx/σ)^(-1/κ)`, the unnormalized kernel.
    pub fn superstatistics_mixture_pdf(&self, x: f64, variant: Superstatistics) -> Result<f64> {
        self.validate()?;
        if self.family != Family::Exponential || self.is_limit() {
            return Err(Error::param("superstatistics mixture needs alpha = 1 and kappa > 0"));
        }
        if !(x >= 0.0) {
            return Err(Error::domain(format!("mixture evaluated at x = {x} < 0")));
        }
        let shape = 1.0 / self.kappa;
        let rate = self.sigma / self.kappa;
        let ln_front = shape * rate.ln() - special::ln_gamma(shape);
        let extra = match variant {
            Superstatistics::TypeA => 0.0,
            Superstatistics::TypeB => 1.0,
        };
        // In t = ln b the integrand is smooth with a single peak at `t0`.
        let s = shape + extra;
        let t0 = (s / (x + rate)).ln();
        let integrand = |t: f64| (ln_front + s * t - (x + rate) * t.exp()).exp();
        let q = quad::integrate(integrand, t0 - 60.0 / s, t0 + 6.0, 0.0, 1e-13)?;
        Ok(q.value)
    }

    /// Density at the scale against the generalized mean of the density.
    pub fn generalized_mean_density_check(&self) -> Result<GeneralizedMeanCheck> {
        self.validate()?;
        if self.is_limit() {
            return Err(Error::param("generalized mean identity needs kappa > 0"));
        }
        let a = self.alpha();
        let q = 1.0 + a * self.kappa / (1.0 + self.kappa);
        let lhs = self.pdf(self.mu + self.sigma)?;
        let integral = self.integrate_over_support(
            |x| self.ln_pdf(x).map(|l| (q * l).exp()).unwrap_or(0.0),
            DEFAULT_ABS_TOL * 1e-2,
        )?;
        let rhs = integral.value.powf((1.0 + self.kappa) / (a * self.kappa));
        Ok(GeneralizedMeanCheck { lhs, rhs })
    }
}

/// Coupled parameters at `μ = 0` from Tsallis `(q, β)`; needs `1 ≤ q < 1+α`.
pub fn from_q_beta(q: f64, beta: f64, family: Family) -> Result<CoupledParams> {
    let a = family.alpha();
    if !(q >= 1.0 && q < 1.0 + a) {
        return Err(Error::domain(format!("q = {q} outside [1, {})", 1.0 + a)));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be > 0, got {beta}")));
    }
    let kappa = (q - 1.0) / (a - q + 1.0);
    let sigma = (1.0 / (beta * (a + 1.0 - q))).powf(1.0 / a);
    CoupledParams::new(family, 0.0, sigma, kappa)
}
