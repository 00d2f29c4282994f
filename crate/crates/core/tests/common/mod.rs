#![allow(dead_code)]

use qcomp_core::simulator::ShotRecord;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson statistic of `counts` against the uniform distribution, and the
/// critical value at significance `alpha`.
pub fn chi_squared_uniform(counts: &[u64], alpha: f64) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let df = (counts.len() - 1) as f64;
    let critical = ChiSquared::new(df).unwrap().inverse_cdf(1.0 - alpha);
    (stat, critical)
}

/// Counts of the joint input index `a * 2^n + b` over at most `max_bins`
/// equal-width bins. Bins hold equal probability under uniform inputs.
pub fn binned_input_counts(records: &[ShotRecord], n: usize, max_bins: usize) -> Vec<u64> {
    let cells = 1usize << (2 * n);
    let pow2_floor = 1usize << (usize::BITS - 1 - max_bins.leading_zeros());
    let bins = cells.min(pow2_floor).max(2);
    let per_bin = cells / bins;
    let mut counts = vec![0u64; bins];
    for r in records {
        let idx = ((r.a_meas as usize) << n) | r.b_meas as usize;
        counts[idx / per_bin] += 1;
    }
    counts
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn empirical(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Sum of per-cell 4-sigma deviations, halved: a TV distance an empirical
/// histogram of `shots` draws from `p` exceeds with negligible probability.
/// `samples` is 1 against an exact reference, 2 for two independent
/// histograms.
pub fn tv_bound_4sigma(p: &[f64], shots: u64, samples: u32) -> f64 {
    0.5 * p
        .iter()
        .map(|&x| 4.0 * (f64::from(samples) * x * (1.0 - x) / shots as f64).sqrt())
        .sum::<f64>()
}

/// Least-squares line through `(x, y)`; returns (slope, intercept, r^2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}
