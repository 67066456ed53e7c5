//! Small sample-statistics helpers shared across the crate.

use crate::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (normalized by `n`).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Median via sorting a copy; the mean of the two middle elements for
/// even lengths.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Pearson correlation of two equal-length samples. Returns 0 when either
/// side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims("pearson", (1, a.len()), (1, b.len())));
    }
    if a.is_empty() {
        return Err(Error::NotEnoughInputs { required: 1, actual: 0 });
    }
    let ma = mean(a);
    let mb = mean(b);
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da == 0.0 || db == 0.0 {
        return Ok(0.0);
    }
    Ok(num / (da * db).sqrt())
}

/// Uncentered correlation `<a,b> / (|a| |b|)`.
///
/// This is the right notion for signals that are zero-mean by
/// construction (noise residuals, DC-free DCT subbands): it agrees with
/// the population correlation without injecting sample-mean noise.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims("cosine_similarity", (1, a.len()), (1, b.len())));
    }
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        num += x * y;
        da += x * x;
        db += y * y;
    }
    if da == 0.0 || db == 0.0 {
        return Ok(0.0);
    }
    Ok(num / (da * db).sqrt())
}

/// Ordinary least squares fit `y ~ slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::dims("linear_fit", (1, x.len()), (1, y.len())));
    }
    if x.len() < 2 {
        return Err(Error::NotEnoughInputs { required: 2, actual: x.len() });
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    Ok((slope, my - slope * mx))
}

/// Upper-tail threshold of a Gaussian kernel density estimate.
///
/// Fits a KDE with Silverman's bandwidth to `samples` and returns the `t`
/// with `P(X > t) = tail`, found by bisection. Used to calibrate decision
/// thresholds from scores observed under the null hypothesis.
pub fn kde_upper_quantile(samples: &[f64], tail: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::NotEnoughInputs { required: 2, actual: samples.len() });
    }
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail",
            value: tail,
            reason: "must lie strictly between 0 and 1",
        });
    }
    let n = samples.len() as f64;
    let sd = std_dev(samples);
    let bw = if sd > 0.0 {
        1.06 * sd * n.powf(-0.2)
    } else {
        // Degenerate sample; fall back to a nominal spread so the
        // quantile is still defined.
        1e-6
    };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let tail_prob = |t: f64| -> f64 {
        samples.iter().map(|&s| 1.0 - normal.cdf((t - s) / bw)).sum::<f64>() / n
    };

    let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = (max - min).max(bw);
    let mut lo = min - 10.0 * spread;
    let mut hi = max + 10.0 * spread;
    // Exact tail probabilities are monotone in t, so plain bisection
    // converges; 200 halvings are far below f64 resolution already.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail_prob(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_variance() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn pearson_matches_hand_value() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let c = [4.0, 3.0, 2.0, 1.0];
        assert!((pearson(&a, &c).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&a, &[5.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_ignores_means() {
        let a = [1.0, 0.0, 1.0, 0.0];
        let b = [1.0, 0.0, 1.0, 0.0];
        assert!((cosine_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        // Uncentered: a constant vector correlates with itself.
        let c = [2.0, 2.0];
        assert!((cosine_similarity(&c, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (slope, intercept) = linear_fit(&x, &y).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kde_quantile_tracks_gaussian_tail() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..20_000)
            .map(|_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen::<f64>();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        // True 1% upper quantile of N(0,1) is 2.3263.
        let t = kde_upper_quantile(&samples, 0.01).unwrap();
        assert!((t - 2.3263).abs() < 0.15, "t={t}");
    }

    #[test]
    fn kde_quantile_rejects_bad_tail() {
        assert!(kde_upper_quantile(&[0.0, 1.0], 0.0).is_err());
        assert!(kde_upper_quantile(&[0.0], 0.5).is_err());
    }
}
