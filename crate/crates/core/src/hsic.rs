//! Kernel independence testing for fingerprint planes.
//!
//! The statistic is the biased HSIC V-statistic with Gaussian kernels;
//! the null distribution comes from permuting one sample, which keeps
//! the test exact at any sample size and deterministic under a fixed
//! seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fingerprint::Fingerprint;
use crate::mask::SubbandMask;
use crate::{derive_seed, Error, Result};

pub const MIN_SAMPLES: usize = 20;

/// Permutation count and per-tile sample cap used by
/// [`fingerprint_independence`].
#[derive(Debug, Clone, Copy)]
pub struct HsicConfig {
    pub n_perm: usize,
    pub subsample: usize,
}

impl Default for HsicConfig {
    fn default() -> Self {
        HsicConfig {
            n_perm: 200,
            subsample: 2000,
        }
    }
}

/// Outcome of one independence test.
#[derive(Debug, Clone, Copy)]
pub struct HsicOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
    pub n: usize,
    pub alpha: f64,
}

/// Which of the adversary's fingerprint bands is tested against the
/// camera's fragile band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Fragile band of both fingerprints.
    HighVsHigh,
    /// Fragile band of the camera fingerprint against the adversary's
    /// unprojected estimate.
    HighVsFull,
}

fn gaussian_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push((samples[i] - samples[j]).abs());
        }
    }
    dists.sort_unstable_by(f64::total_cmp);
    let median = if dists.len() % 2 == 1 {
        dists[dists.len() / 2]
    } else {
        0.5 * (dists[dists.len() / 2 - 1] + dists[dists.len() / 2])
    };
    if median > 0.0 {
        return Ok(median);
    }
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    if mean > 0.0 {
        return Ok(mean);
    }
    Err(Error::Degenerate {
        context: "all samples identical, kernel bandwidth undefined".into(),
    })
}

fn gram(samples: &[f64], sigma: f64) -> Vec<f64> {
    let n = samples.len();
    let inv = -1.0 / (2.0 * sigma * sigma);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let d = samples[i] - samples[j];
            let v = (inv * d * d).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn center(k: &mut [f64], n: usize) {
    let mut row_means = vec![0.0; n];
    for i in 0..n {
        row_means[i] = k[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64;
    }
    let total = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] += total - row_means[i] - row_means[j];
        }
    }
}

/// `(1/n^2) sum_ij Kc[i][j] * L[perm(i)][perm(j)]`; with `Kc` centered
/// this is the V-statistic of the permuted pairing.
fn statistic_under(kc: &[f64], l: &[f64], perm: &[usize], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let pi = perm[i] * n;
        let kci = &kc[i * n..(i + 1) * n];
        for j in 0..n {
            s += kci[j] * l[pi + perm[j]];
        }
    }
    s / (n * n) as f64
}

/// Tests independence of two paired scalar samples at level `alpha`
/// using `n_perm` permutations of `y`.
pub fn hsic_test(x: &[f64], y: &[f64], alpha: f64, n_perm: usize, seed: u64) -> Result<HsicOutcome> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::dims("hsic samples", (n, 1), (y.len(), 1)));
    }
    if n < MIN_SAMPLES {
        return Err(Error::NotEnoughInputs {
            required: MIN_SAMPLES,
            actual: n,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "test level must lie in (0, 1)",
        });
    }
    if n_perm == 0 {
        return Err(Error::InvalidParameter {
            name: "n_perm",
            value: 0.0,
            reason: "permutation count must be positive",
        });
    }
    let sigma_x = gaussian_bandwidth(x)?;
    let sigma_y = gaussian_bandwidth(y)?;
    let mut kc = gram(x, sigma_x);
    center(&mut kc, n);
    let l = gram(y, sigma_y);

    let identity: Vec<usize> = (0..n).collect();
    let statistic = statistic_under(&kc, &l, &identity, n);

    let mut null = Vec::with_capacity(n_perm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm = identity;
    for _ in 0..n_perm {
        perm.shuffle(&mut rng);
        null.push(statistic_under(&kc, &l, &perm, n));
    }
    null.sort_unstable_by(f64::total_cmp);
    let k = ((1.0 - alpha) * n_perm as f64).ceil() as usize;
    let threshold = null[k.clamp(1, n_perm) - 1];
    Ok(HsicOutcome {
        statistic,
        threshold,
        reject: statistic > threshold,
        n,
        alpha,
    })
}

/// Fraction of tiles on which the two fingerprints test as independent.
///
/// Both planes are center-cropped to a multiple of `block`, the camera
/// fingerprint is projected onto the fragile band `c` (the adversary's
/// plane too under [`Scenario::HighVsHigh`]), and each aligned tile of
/// the two tilings at offsets 0 and `block/2` yields one paired sample
/// set, subsampled to the configured cap.
pub fn fingerprint_independence(
    fp_alice: &Fingerprint,
    fp_mallory: &Fingerprint,
    c: i32,
    scenario: Scenario,
    block: usize,
    alpha: f64,
    seed: u64,
    cfg: &HsicConfig,
) -> Result<f64> {
    fp_alice
        .plane
        .check_same_shape(&fp_mallory.plane, "fingerprint_independence")?;
    if block < 8 || block % 8 != 0 {
        return Err(Error::InvalidParameter {
            name: "block",
            value: block as f64,
            reason: "tile size must be a positive multiple of 8",
        });
    }
    let mask = SubbandMask::fragile(c)?;
    let alice = fp_alice.plane.crop_to_multiple(block)?;
    let mallory = fp_mallory.plane.crop_to_multiple(block)?;
    let alice = mask.project_spatial(&alice)?;
    let mallory = match scenario {
        Scenario::HighVsHigh => mask.project_spatial(&mallory)?,
        Scenario::HighVsFull => mallory,
    };
    let (h, w) = alice.shape();

    let mut tiles = Vec::new();
    for (offset_idx, off) in [0usize, block / 2].into_iter().enumerate() {
        let mut r = off;
        while r + block <= h {
            let mut col = off;
            while col + block <= w {
                tiles.push((offset_idx, r, col));
                col += block;
            }
            r += block;
        }
    }
    let outcomes: Vec<Result<bool>> = tiles
        .par_iter()
        .enumerate()
        .map(|(idx, &(offset_idx, r, col))| {
            let mut xs = Vec::with_capacity(block * block);
            let mut ys = Vec::with_capacity(block * block);
            for i in 0..block {
                for j in 0..block {
                    xs.push(alice.at(r + i, col + j));
                    ys.push(mallory.at(r + i, col + j));
                }
            }
            let tile_seed = derive_seed(seed, offset_idx as u64 + 1, idx as u64);
            if xs.len() > cfg.subsample {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(tile_seed, 7, 0));
                let picks = rand::seq::index::sample(&mut rng, xs.len(), cfg.subsample);
                let mut sx = Vec::with_capacity(cfg.subsample);
                let mut sy = Vec::with_capacity(cfg.subsample);
                for p in picks.iter() {
                    sx.push(xs[p]);
                    sy.push(ys[p]);
                }
                xs = sx;
                ys = sy;
            }
            let outcome = hsic_test(&xs, &ys, alpha, cfg.n_perm, tile_seed)?;
            Ok(!outcome.reject)
        })
        .collect();
    let total = outcomes.len();
    let mut accepted = 0usize;
    for o in outcomes {
        if o? {
            accepted += 1;
        }
    }
    Ok(accepted as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::SyntheticCamera;
    use crate::ImagePlane;

    fn gaussian_pairs(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let norm = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        let x = (0..n).map(|_| norm.sample(&mut rng)).collect();
        let y = (0..n).map(|_| norm.sample(&mut rng)).collect();
        (x, y)
    }

    /// Direct expansion of the biased V-statistic.
    fn brute_hsic(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let kx = gram(x, gaussian_bandwidth(x).unwrap());
        let ky = gram(y, gaussian_bandwidth(y).unwrap());
        let nf = n as f64;
        let mut term1 = 0.0;
        let mut sum_k = 0.0;
        let mut sum_l = 0.0;
        let mut row_k = vec![0.0; n];
        let mut row_l = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                term1 += kx[i * n + j] * ky[i * n + j];
                sum_k += kx[i * n + j];
                sum_l += ky[i * n + j];
                row_k[i] += kx[i * n + j];
                row_l[i] += ky[i * n + j];
            }
        }
        let term3: f64 = (0..n).map(|i| row_k[i] * row_l[i]).sum();
        term1 / (nf * nf) + sum_k * sum_l / (nf * nf * nf * nf) - 2.0 * term3 / (nf * nf * nf)
    }

    #[test]
    fn matches_direct_double_sum() {
        let (x, y) = gaussian_pairs(50, 3);
        let out = hsic_test(&x, &y, 0.05, 5, 1).unwrap();
        let brute = brute_hsic(&x, &y);
        assert!(
            (out.statistic - brute).abs() < 1e-10,
            "{} vs {brute}",
            out.statistic
        );
        assert!(out.statistic >= 0.0);
    }

    #[test]
    fn joint_permutation_leaves_statistic_unchanged() {
        let (x, y) = gaussian_pairs(40, 9);
        let base = hsic_test(&x, &y, 0.05, 5, 1).unwrap().statistic;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut order: Vec<usize> = (0..40).collect();
        order.shuffle(&mut rng);
        let px: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let permuted = hsic_test(&px, &py, 0.05, 5, 1).unwrap().statistic;
        assert!((base - permuted).abs() < 1e-12);
    }

    #[test]
    fn perfect_dependence_rejects() {
        let (x, _) = gaussian_pairs(100, 21);
        let out = hsic_test(&x, &x, 0.05, 200, 5).unwrap();
        assert!(out.reject);
        assert!(out.statistic > out.threshold);
    }

    #[test]
    fn nonlinear_dependence_rejects() {
        let (x, _) = gaussian_pairs(200, 22);
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        // Squaring kills the linear correlation but not dependence.
        let r = crate::stats::pearson(&x, &y).unwrap();
        assert!(r.abs() < 0.2, "correlation {r}");
        let out = hsic_test(&x, &y, 0.05, 200, 5).unwrap();
        assert!(out.reject);
    }

    #[test]
    fn level_is_calibrated() {
        let mut rejections = 0;
        for trial in 0..200 {
            let (x, y) = gaussian_pairs(50, 1000 + trial);
            if hsic_test(&x, &y, 0.05, 200, 2000 + trial).unwrap().reject {
                rejections += 1;
            }
        }
        // 99% binomial interval around 200 * 0.05 = 10.
        assert!(
            (3..=17).contains(&rejections),
            "{rejections} rejections in 200 trials"
        );
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let constant = vec![1.0; 30];
        let varying: Vec<f64> = (0..30).map(|i| i as f64).collect();
        assert!(matches!(
            hsic_test(&constant, &varying, 0.05, 10, 1),
            Err(Error::Degenerate { .. })
        ));
        assert!(hsic_test(&varying[..10], &varying[..10], 0.05, 10, 1).is_err());
        assert!(hsic_test(&varying, &varying, 0.0, 10, 1).is_err());
        assert!(hsic_test(&varying, &varying, 0.05, 0, 1).is_err());
    }

    #[test]
    fn independent_fingerprints_mostly_accepted() {
        let size = 192;
        let cam_a = SyntheticCamera::new(0.02, 0.0, 31, size, size).unwrap();
        let cam_b = SyntheticCamera::new(0.02, 0.0, 32, size, size).unwrap();
        let fp = |prnu: &ImagePlane| Fingerprint {
            plane: prnu.clone(),
            estimator: crate::fingerprint::Estimator::MaximumLikelihood,
            n_images: 1,
            cleaned: true,
            degenerate_pixels: 0,
        };
        let cfg = HsicConfig {
            n_perm: 100,
            subsample: 400,
        };
        // At c = -6 the projection only removes each block's DC, so the
        // projector diagonal is uniform and pixels of independent
        // planes really are exchangeable paired samples; tiles then
        // accept H0 at close to the nominal 1 - alpha rate.
        let frac = fingerprint_independence(
            &fp(&cam_a.prnu),
            &fp(&cam_b.prnu),
            -6,
            Scenario::HighVsHigh,
            64,
            0.05,
            11,
            &cfg,
        )
        .unwrap();
        assert!(frac > 0.75, "acceptance fraction {frac}");
        let same = fingerprint_independence(
            &fp(&cam_a.prnu),
            &fp(&cam_a.prnu),
            -6,
            Scenario::HighVsHigh,
            64,
            0.05,
            11,
            &cfg,
        )
        .unwrap();
        assert!(same < 0.2, "self acceptance fraction {same}");
        // A deep fragile cutoff is different: the projected variance of
        // a pixel depends on its position inside the 8x8 block (the
        // projector diagonal spans a 21x range at c = 4), and the two
        // planes share that profile location by location. The paired
        // samples are a variance mixture over block phase, which is
        // genuine dependence, so acceptance drops well below the c = -6
        // rate even though the planes are independent.
        let frac_deep = fingerprint_independence(
            &fp(&cam_a.prnu),
            &fp(&cam_b.prnu),
            4,
            Scenario::HighVsHigh,
            64,
            0.05,
            11,
            &cfg,
        )
        .unwrap();
        assert!(
            frac_deep < frac,
            "deep cutoff acceptance {frac_deep} vs {frac}"
        );
    }
}
