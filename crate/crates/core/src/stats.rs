//! Small statistics toolbox: chi-square, confidence intervals, fits, bootstrap.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::SeqRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of `counts` against cell probabilities `probs`.
/// Refuses when some expected count is below `min_expected`.
pub fn chi_square(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquare> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::Invalid("chi-square needs matching cells, at least two".into()));
    }
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = n as f64 * p;
        if e < min_expected {
            return Err(Error::Invalid(format!("expected cell count {e:.2} below {min_expected}")));
        }
        stat += (c as f64 - e).powi(2) / e;
    }
    let dof = counts.len() - 1;
    let p_value = ChiSquared::new(dof as f64).map_err(|e| Error::Invalid(e.to_string()))?.sf(stat);
    Ok(ChiSquare { statistic: stat, dof, p_value })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Normal-approximation confidence interval for the mean.
pub fn mean_ci(xs: &[f64], level: f64) -> (f64, f64, f64) {
    let m = mean(xs);
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let half = z * (variance(xs) / xs.len() as f64).sqrt();
    (m, m - half, m + half)
}

/// Least-squares (slope, intercept) of y on x.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Log-log slope of the group medians against `sizes`, with a percentile
/// bootstrap interval from resampling every group independently.
pub fn bootstrap_loglog_slope(sizes: &[f64], groups: &[Vec<f64>], resamples: usize, level: f64, seed: u64) -> (f64, f64, f64) {
    let lx: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let fit = |meds: &[f64]| least_squares(&lx, &meds.iter().map(|m| m.ln()).collect::<Vec<_>>()).0;
    let point = fit(&groups.iter().map(|g| median(g)).collect::<Vec<_>>());
    let mut rng = SeqRng::new(seed);
    let mut slopes = Vec::with_capacity(resamples);
    let mut buf = Vec::new();
    for _ in 0..resamples {
        let meds: Vec<f64> = groups
            .iter()
            .map(|g| {
                buf.clear();
                buf.extend((0..g.len()).map(|_| g[rng.below(g.len())]));
                median(&buf)
            })
            .collect();
        slopes.push(fit(&meds));
    }
    let tail = (1.0 - level) / 2.0;
    (point, quantile(&slopes, tail), quantile(&slopes, 1.0 - tail))
}
