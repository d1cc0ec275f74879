//! Order-independent summary statistics over ensembles.

use serde::{Deserialize, Serialize};

/// Lower and upper percentiles of the 65% band.
pub const BAND_PERCENTILES: (f64, f64) = (17.5, 82.5);

/// Mean, sample standard deviation and the [17.5, 82.5] percentile band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Stat {
    /// Summarizes `values` (NaNs are not allowed). An empty slice yields NaNs
    /// with `count = 0`.
    pub fn from_values(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat {
                count: 0,
                mean: f64::NAN,
                std: f64::NAN,
                lower: f64::NAN,
                upper: f64::NAN,
            };
        }
        let mean = mean(values);
        let std = if n > 1 {
            (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Stat {
            count: n,
            mean,
            std,
            lower: percentile_sorted(&sorted, BAND_PERCENTILES.0),
            upper: percentile_sorted(&sorted, BAND_PERCENTILES.1),
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}

/// Plain left-to-right sum divided by the length. Callers pass values in
/// realization order, so the result does not depend on scheduling.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Percentile by linear interpolation between closest ranks (the same rule
/// as NumPy's default). `sorted` must be ascending and non-empty.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Uniform-bin histogram normalized to probability mass (bins sum to 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<usize>,
    pub probability: Vec<f64>,
}

impl Histogram {
    /// Bins are half-open `[lo, hi)` except the last, which also holds
    /// `upper`. Values outside `[lower, upper]` are clamped into the edge bins.
    pub fn new(values: &[f64], lower: f64, upper: f64, bins: usize) -> Histogram {
        assert!(bins > 0, "histogram needs at least one bin");
        let (lower, upper) = if upper > lower {
            (lower, upper)
        } else {
            // Degenerate data range: a unit-width window around the value.
            (lower - 0.5, lower + 0.5)
        };
        let width = (upper - lower) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            let idx = ((v - lower) / width).floor();
            let idx = if idx.is_nan() { 0 } else { idx.clamp(0.0, (bins - 1) as f64) as usize };
            counts[idx] += 1;
        }
        let total = values.len().max(1) as f64;
        let probability = counts.iter().map(|&c| c as f64 / total).collect();
        Histogram {
            lower,
            upper,
            counts,
            probability,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.upper - self.lower) / self.bins() as f64
    }

    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.lower + w * bin as f64, self.lower + w * (bin + 1) as f64)
    }

    /// Index of the most populated bin (first one on ties).
    pub fn mode_bin(&self) -> usize {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().position(|&c| c == max).unwrap_or(0)
    }
}
