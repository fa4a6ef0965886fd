//! Histograms for comparing data with fitted densities.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinScale {
    Linear,
    /// Equal widths in `ln x`; only positive values are binned.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub scale: BinScale,
    pub edges: Vec<f64>,
    /// Count per bin over `counted · width`, so `Σ density · width = 1`.
    pub density: Vec<f64>,
    /// Values that fell in the binned range.
    pub counted: usize,
}

impl Histogram {
    /// Arithmetic midpoints for linear bins, geometric for log bins.
    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| match self.scale {
                BinScale::Linear => 0.5 * (w[0] + w[1]),
                BinScale::Log => (w[0] * w[1]).sqrt(),
            })
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Histogram of `values` over `range`, or over the data range when absent.
pub fn histogram(values: &[f64], bins: usize, scale: BinScale, range: Option<(f64, f64)>) -> CliResult<Histogram> {
    if bins == 0 {
        return Err(CliError::Usage("bins must be >= 1".into()));
    }
    let usable: Vec<f64> = values
        .iter()
        .copied()
        .filter(|&v| v.is_finite() && (scale == BinScale::Linear || v > 0.0))
        .collect();
    let (lo, hi) = match range {
        Some(r) => r,
        None => usable.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
    };
    if !(lo < hi) || (scale == BinScale::Log && !(lo > 0.0)) {
        return Err(CliError::Usage(format!("cannot bin the range [{lo}, {hi}]")));
    }
    let (t_lo, t_hi) = match scale {
        BinScale::Linear => (lo, hi),
        BinScale::Log => (lo.ln(), hi.ln()),
    };
    let step = (t_hi - t_lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins)
        .map(|i| {
            let t = t_lo + step * i as f64;
            match scale {
                BinScale::Linear => t,
                BinScale::Log => t.exp(),
            }
        })
        .collect();
    edges[0] = lo;
    edges[bins] = hi;

    let mut counts = vec![0usize; bins];
    for &v in usable.iter().filter(|&&v| v >= lo && v <= hi) {
        let t = match scale {
            BinScale::Linear => v,
            BinScale::Log => v.ln(),
        };
        let mut i = (((t - t_lo) / step) as usize).min(bins - 1);
        // Rounding in the transform can land one bin off an edge.
        while i > 0 && v < edges[i] {
            i -= 1;
        }
        while i + 1 < bins && v >= edges[i + 1] {
            i += 1;
        }
        counts[i] += 1;
    }
    let counted: usize = counts.iter().sum();
    if counted == 0 {
        return Err(CliError::Usage("no values fall in the binned range".into()));
    }
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (counted as f64 * (w[1] - w[0])))
        .collect();
    Ok(Histogram { scale, edges, density, counted })
}
