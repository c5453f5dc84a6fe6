//! Fairness and performance evaluation over run traces.

use crate::error::{Error, Result};
use crate::fairness::SatisfactionRecord;

pub const DEFAULT_BINS: usize = 20;
pub const HISTOGRAM_SMOOTHING: f64 = 1e-9;

fn tie_split<F: Fn(f64, f64) -> bool>(trace: &[Vec<f64>], better: F) -> Result<Vec<f64>> {
    let Some(first) = trace.first() else {
        return Err(Error::InvalidArgument("probability window is empty".into()));
    };
    let n = first.len();
    let mut probs = vec![0.0; n];
    for row in trace {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: row.len(),
            });
        }
        let best = row.iter().copied().fold(row[0], |b, x| if better(x, b) { x } else { b });
        let tied = row.iter().filter(|&&x| x == best).count() as f64;
        for (p, &x) in probs.iter_mut().zip(row) {
            if x == best {
                *p += 1.0 / tied;
            }
        }
    }
    let len = trace.len() as f64;
    probs.iter_mut().for_each(|p| *p /= len);
    Ok(probs)
}

/// Share of ticks on which each human holds the largest closeness; tied
/// humans split the tick equally.
pub fn opportunity_probs(trace: &[Vec<f64>]) -> Result<Vec<f64>> {
    tie_split(trace, |x, best| x > best)
}

/// Share of ticks on which each human holds the smallest closeness.
pub fn odds_probs(trace: &[Vec<f64>]) -> Result<Vec<f64>> {
    tie_split(trace, |x, best| x < best)
}

/// Mean of `|p_i - p_j|` over unordered pairs.
pub fn avg_abs_pairwise_diff(probs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..probs.len() {
        for j in i + 1..probs.len() {
            sum += (probs[i] - probs[j]).abs();
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

/// Equal-width histogram; values outside the range land in the edge bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::InvalidArgument(format!(
                "histogram needs hi > lo and at least one bin, got [{lo}, {hi}] x {bins}"
            )));
        }
        Ok(Histogram {
            lo,
            hi,
            counts: vec![0.0; bins],
        })
    }

    pub fn from_samples(lo: f64, hi: f64, bins: usize, samples: &[f64]) -> Result<Self> {
        let mut h = Self::new(lo, hi, bins)?;
        for &x in samples {
            h.add(x);
        }
        Ok(h)
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let k = ((x - self.lo) / (self.hi - self.lo) * bins as f64).floor();
        let k = if k.is_nan() { 0 } else { (k.max(0.0) as usize).min(bins - 1) };
        self.counts[k] += 1.0;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn same_edges(&self, other: &Histogram) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.counts.len() == other.counts.len()
    }
}

/// Jensen–Shannon divergence in bits between two histograms with shared
/// edges, after adding [`HISTOGRAM_SMOOTHING`] to every bin.
pub fn jsd(a: &Histogram, b: &Histogram) -> Result<f64> {
    if !a.same_edges(b) {
        return Err(Error::Incompatible("histograms have different bin edges".into()));
    }
    if a.total() <= 0.0 || b.total() <= 0.0 {
        return Err(Error::InvalidArgument("histogram has zero mass".into()));
    }
    let norm = |h: &Histogram| -> Vec<f64> {
        let total = h.total() + HISTOGRAM_SMOOTHING * h.counts.len() as f64;
        h.counts.iter().map(|c| (c + HISTOGRAM_SMOOTHING) / total).collect()
    };
    let (p, q) = (norm(a), norm(b));
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(&q) {
        let m = 0.5 * (pi + qi);
        d += 0.5 * pi * (pi / m).log2() + 0.5 * qi * (qi / m).log2();
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Sample mean and population variance.
pub fn gaussian_fit(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("gaussian fit needs at least 2 samples".into()));
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    Ok((mu, var))
}

pub fn satisfaction_metric(record: &SatisfactionRecord) -> Result<f64> {
    let total = record.u + record.v;
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("record has no mass".into()));
    }
    Ok(record.v / total)
}

/// `(1/t) * sum_{j=0..=t} (j/t) * w_j`: a utility that counts later weights more.
/// Uses `weights[0..=t]`.
pub fn fairiot_utility(weights: &[f64], t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument("utility horizon must be at least 1".into()));
    }
    if weights.len() <= t {
        return Err(Error::DimensionMismatch {
            expected: t + 1,
            actual: weights.len(),
        });
    }
    let tf = t as f64;
    Ok(weights[..=t]
        .iter()
        .enumerate()
        .map(|(j, w)| j as f64 / tf * w)
        .sum::<f64>()
        / tf)
}

/// `sqrt( (1/(n-1)) * sum (u - mean)^2 / mean^2 )`.
pub fn coefficient_of_variation(utilities: &[f64]) -> Result<f64> {
    if utilities.len() < 2 {
        return Err(Error::InvalidArgument("cv needs at least 2 utilities".into()));
    }
    let n = utilities.len() as f64;
    let mean = utilities.iter().sum::<f64>() / n;
    if mean == 0.0 || !mean.is_finite() {
        return Err(Error::InvalidArgument("cv is undefined for a zero mean".into()));
    }
    let ss: f64 = utilities.iter().map(|u| (u - mean).powi(2) / (mean * mean)).sum();
    Ok((ss / (n - 1.0)).sqrt())
}

/// Trailing mean over up to `width` samples, for plot-ready curves.
pub fn moving_average(xs: &[f64], width: usize) -> Vec<f64> {
    let width = width.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        sum += x;
        if i >= width {
            sum -= xs[i - width];
        }
        out.push(sum / (i + 1).min(width) as f64);
    }
    out
}
