//! Random variates for the coupled family, its power densities and the
//! gamma mixture, drawn from deterministic splittable streams.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{CoupledParams, Family, Support, KAPPA_ZERO};
use crate::error::{Error, Result};

/// A reproducible random stream keyed by `(seed, stream_id)`.
///
/// Streams are plain values. The generator is rebuilt from the key on every
/// call to [`RandomStream::rng`], so the same stream always yields the same
/// sequence no matter which thread uses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    /// ChaCha20 generator for this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent sub-stream number `index`.
    ///
    /// All children of one stream share a key drawn from the parent's own
    /// sequence and differ in the ChaCha stream number.
    pub fn child(&self, index: u64) -> RandomStream {
        RandomStream { seed: self.rng().next_u64(), stream_id: index }
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    pub stream_id: Option<u64>,
    pub params: BTreeMap<String, f64>,
}

impl Provenance {
    pub fn new(generator: impl Into<String>, rs: Option<&RandomStream>) -> Self {
        Provenance {
            generator: generator.into(),
            seed: rs.map(|r| r.seed),
            stream_id: rs.map(|r| r.stream_id),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// An ordered sample together with its provenance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Self {
        SampleSet { values, provenance }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One value per line, each in its shortest exactly round-tripping form.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20);
        for &v in &self.values {
            out.push_str(&format_f64(v));
            out.push('\n');
        }
        out
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        w.flush()
    }

    /// Parse one finite decimal per line. Blank lines are skipped.
    pub fn from_text(text: &str, provenance: Provenance) -> Result<SampleSet> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => return Err(Error::Parse { line: i + 1, text: t.to_string() }),
            }
        }
        if values.is_empty() {
            return Err(Error::InsufficientData("no samples".into()));
        }
        Ok(SampleSet { values, provenance })
    }
}

/// Shortest decimal that parses back to exactly `v`; scientific notation
/// outside `[1e-5, 1e16)`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("sample size must be >= 1"));
    }
    Ok(())
}

/// Draw one coupled variate.
pub(crate) fn draw_coupled<R: Rng + ?Sized>(rng: &mut R, p: &CoupledParams) -> f64 {
    let k = p.kappa;
    let z = match p.family {
        Family::Exponential => {
            // Survival probability in (0, 1].
            let s = 1.0 - rng.random::<f64>();
            if k < KAPPA_ZERO {
                -s.ln()
            } else {
                (-k * s.ln()).exp_m1() / k
            }
        }
        Family::Gaussian => {
            let g: f64 = rng.sample(StandardNormal);
            if k < KAPPA_ZERO {
                g
            } else {
                let nu = 1.0 / k;
                let chi = ChiSquared::new(nu).expect("positive degrees of freedom");
                g / (chi.sample(rng) / nu).sqrt()
            }
        }
    };
    let z = match (p.family.default_support(), p.support) {
        (Support::OneSided, Support::TwoSided) if rng.random::<bool>() => -z,
        (Support::TwoSided, Support::OneSided) => z.abs(),
        _ => z,
    };
    p.mu + p.sigma * z
}

fn coupled_provenance(generator: &str, p: &CoupledParams, rs: &RandomStream) -> Provenance {
    Provenance::new(generator, Some(rs))
        .with("alpha", p.alpha())
        .with("mu", p.mu)
        .with("sigma", p.sigma)
        .with("kappa", p.kappa)
}

/// `n` independent draws from a coupled distribution.
///
/// The coupled exponential uses its closed-form inverse CDF; the coupled
/// Gaussian is `μ + σ Z / √(χ²_ν / ν)` with `ν = 1/κ`.
pub fn sample_coupled(n: usize, p: &CoupledParams, rs: &RandomStream) -> Result<SampleSet> {
    check_count(n)?;
    p.validate()?;
    let mut rng = rs.rng();
    let values = (0..n).map(|_| draw_coupled(&mut rng, p)).collect();
    Ok(SampleSet::new(values, coupled_provenance("coupled", p, rs)))
}

/// `n` draws from the renormalized `power`-th power of the density.
///
/// These are exact "independent-equals": the distribution that medians of
/// perfectly equal `power`-tuples would follow.
pub fn sample_power_density(
    n: usize,
    p: &CoupledParams,
    power: u32,
    rs: &RandomStream,
) -> Result<SampleSet> {
    if p.mu != 0.0 {
        return Err(Error::param("power-density sampling needs mu = 0"));
    }
    if !(p.kappa > 0.0) {
        return Err(Error::param("power-density sampling needs kappa > 0"));
    }
    let q = p.power_density_params(power)?;
    let mut s = sample_coupled(n, &q, rs)?;
    s.provenance = coupled_provenance("power-density", p, rs).with("power", power as f64);
    Ok(s)
}

/// `n` draws from an exponential whose rate is gamma distributed with shape
/// `1/κ` and mean `1/σ`. The result is coupled exponential `(σ, κ)`.
pub fn sample_gamma_mixture(
    n: usize,
    sigma: f64,
    kappa: f64,
    rs: &RandomStream,
) -> Result<SampleSet> {
    check_count(n)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param(format!("kappa must be > 0, got {kappa}")));
    }
    let rate = Gamma::new(1.0 / kappa, kappa / sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = rs.rng();
    let values = (0..n)
        .map(|_| {
            let b = rate.sample(&mut rng);
            let e: f64 = rng.sample(Exp1);
            e / b
        })
        .collect();
    let prov = Provenance::new("gamma-mixture", Some(rs)).with("sigma", sigma).with("kappa", kappa);
    Ok(SampleSet::new(values, prov))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    const N: usize = 100_000;
    // Asymptotic Kolmogorov critical values.
    const KS_1PCT: f64 = 1.628;
    const KS_5PCT: f64 = 1.358;

    #[test]
    fn coupled_exponential_matches_its_cdf() {
        let p = CoupledParams::exponential(1.0, 1.0).unwrap();
        let s = sample_coupled(N, &p, &RandomStream::new(11, 0)).unwrap();
        let d = ks_distance(&s.values, |x| 1.0 - 1.0 / (1.0 + x));
        assert!(d < KS_1PCT / (N as f64).sqrt(), "D = {d}");
    }

    #[test]
    fn every_family_and_coupling_passes_ks() {
        for family in [Family::Exponential, Family::Gaussian] {
            for (i, &k) in [0.25, 0.5, 1.0, 2.0].iter().enumerate() {
                let p = CoupledParams::new(family, 0.0, 0.5, k).unwrap();
                let s = sample_coupled(N, &p, &RandomStream::new(2024, i as u64)).unwrap();
                let d = ks_distance(&s.values, |x| p.cdf(x).unwrap());
                assert!(d < KS_1PCT / (N as f64).sqrt(), "{family:?} kappa {k}: D = {d}");
            }
        }
    }

    #[test]
    fn support_overrides() {
        let p = CoupledParams::gaussian(1.0, 0.5).unwrap().with_support(Support::OneSided);
        let s = sample_coupled(20_000, &p, &RandomStream::new(1, 1)).unwrap();
        assert!(s.values.iter().all(|&x| x >= 0.0));
        let d = ks_distance(&s.values, |x| p.cdf(x).unwrap());
        assert!(d < KS_1PCT / (20_000f64).sqrt());

        let p = CoupledParams::exponential(1.0, 0.5).unwrap().with_support(Support::TwoSided);
        let s = sample_coupled(20_000, &p, &RandomStream::new(1, 2)).unwrap();
        let d = ks_distance(&s.values, |x| p.cdf(x).unwrap());
        assert!(d < KS_1PCT / (20_000f64).sqrt());
    }

    #[test]
    fn gaussian_median_is_centered() {
        let p = CoupledParams::gaussian(0.5, 1.0).unwrap();
        let mut s = sample_coupled(N, &p, &RandomStream::new(5, 0)).unwrap().values;
        s.sort_by(f64::total_cmp);
        let med = 0.5 * (s[N / 2 - 1] + s[N / 2]);
        let f0 = p.pdf(0.0).unwrap();
        let se = 1.0 / (2.0 * f0 * (N as f64).sqrt());
        assert!(med.abs() < 3.0 * se, "median {med}");
    }

    #[test]
    fn streams_are_reproducible_and_independent() {
        let p = CoupledParams::exponential(1.0, 1.0).unwrap();
        let a = sample_coupled(1000, &p, &RandomStream::new(7, 3)).unwrap();
        let b = sample_coupled(1000, &p, &RandomStream::new(7, 3)).unwrap();
        assert_eq!(a, b);

        let u = CoupledParams::gaussian(1.0, 0.0).unwrap();
        let x = sample_coupled(N, &u, &RandomStream::new(7, 3)).unwrap().values;
        for other in [RandomStream::new(7, 4), RandomStream::new(8, 3), RandomStream::new(7, 3).child(0)] {
            let y = sample_coupled(N, &u, &other).unwrap().values;
            let r = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / N as f64;
            assert!(r.abs() < 4.0 / (N as f64).sqrt(), "{other:?}: r = {r}");
        }
        let rs = RandomStream::new(7, 3);
        assert_ne!(rs.child(0), rs.child(1));
        assert_eq!(rs.child(5), rs.child(5));
    }

    fn mean_and_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn power_density_moments() {
        let gpd = CoupledParams::exponential(0.5, 1.0).unwrap();
        let s = sample_power_density(N, &gpd, 2, &RandomStream::new(9, 0)).unwrap();
        let (m, se) = mean_and_se(&s.values);
        assert!((m - 0.25).abs() < 3.0 * se, "{m} ± {se}");

        let s = sample_power_density(N, &gpd, 3, &RandomStream::new(9, 1)).unwrap();
        let sq: Vec<f64> = s.values.iter().map(|x| x * x).collect();
        let (m, se) = mean_and_se(&sq);
        assert!((m - 0.5 / 12.0).abs() < 3.0 * se, "{m} ± {se}");

        let g = CoupledParams::gaussian(0.5, 1.0).unwrap();
        let s = sample_power_density(N, &g, 3, &RandomStream::new(9, 2)).unwrap();
        let sq: Vec<f64> = s.values.iter().map(|x| x * x).collect();
        let (m, se) = mean_and_se(&sq);
        assert!((m - 0.25 / 3.0).abs() < 3.0 * se, "{m} ± {se}");
        assert_eq!(s.provenance.params["power"], 3.0);
    }

    #[test]
    fn power_density_needs_heavy_tail_at_origin() {
        let p = CoupledParams::exponential(1.0, 0.0).unwrap();
        assert!(sample_power_density(10, &p, 2, &RandomStream::new(1, 0)).is_err());
        let p = CoupledParams::new(Family::Exponential, 1.0, 1.0, 1.0).unwrap();
        assert!(sample_power_density(10, &p, 2, &RandomStream::new(1, 0)).is_err());
    }

    #[test]
    fn gamma_mixture_is_coupled_exponential() {
        let p = CoupledParams::exponential(1.0, 0.5).unwrap();
        let s = sample_gamma_mixture(N, 1.0, 0.5, &RandomStream::new(3, 0)).unwrap();
        let d = ks_distance(&s.values, |x| p.cdf(x).unwrap());
        assert!(d < KS_1PCT / (N as f64).sqrt(), "D = {d}");

        let s = sample_gamma_mixture(10_000, 1.0, 1e-6, &RandomStream::new(3, 1)).unwrap();
        let d = ks_distance(&s.values, |x| -(-x).exp_m1());
        assert!(d < KS_5PCT / 100.0, "D = {d}");

        let again = sample_gamma_mixture(10_000, 1.0, 1e-6, &RandomStream::new(3, 1)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn invalid_parameters() {
        let rs = RandomStream::new(0, 0);
        let p = CoupledParams::exponential(1.0, 1.0).unwrap();
        assert!(sample_coupled(0, &p, &rs).is_err());
        let bad = CoupledParams { kappa: -0.5, ..p };
        assert!(sample_coupled(5, &bad, &rs).is_err());
        assert!(sample_gamma_mixture(5, 0.0, 1.0, &rs).is_err());
        assert!(sample_gamma_mixture(5, 1.0, 0.0, &rs).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = CoupledParams::gaussian(0.5, 2.0).unwrap();
        let mut s = sample_coupled(2000, &p, &RandomStream::new(1, 0)).unwrap();
        s.values.extend([1e-300, -2.5e20, 0.0, 1e-5, 9.999e15]);
        let text = s.to_text();
        let back = SampleSet::from_text(&text, s.provenance.clone()).unwrap();
        assert_eq!(back.values.len(), s.values.len());
        for (a, b) in s.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_errors_name_the_line() {
        let err = SampleSet::from_text("1.0\n2.0\nabc\n", Provenance::default()).unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, text: "abc".into() });
        let err = SampleSet::from_text("1\nNaN\n", Provenance::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = SampleSet::from_text("\n\n", Provenance::default()).unwrap_err();
        assert_eq!(err, Error::InsufficientData("no samples".into()));
    }
}
