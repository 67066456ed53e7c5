//! Analytical correlation bounds for JPEG-quantized Laplacian DCT
//! subbands.
//!
//! AC coefficients are modeled as zero-mean Laplace variables. The
//! convention throughout is the characteristic function
//! `Phi_U(x) = lambda^2 / (x^2 + lambda^2)`, which corresponds to the
//! density `(lambda/2) exp(-lambda |x|)`, variance `2 / lambda^2` and
//! diversity `b = 1 / lambda`. Mixing conventions silently corrupts
//! every downstream number, so all fits and moments in this module
//! speak `lambda`.

use rayon::prelude::*;

use crate::mask::SubbandMask;
use crate::{dct, stats, Error, ImagePlane, Result};

/// Correlation between the masked DCT coefficients of two planes.
///
/// With the DC mode excluded, the coefficient vectors are zero-mean by
/// construction (each block of the filtered spatial plane sums to
/// zero), so the correlation is the plain normalized inner product with
/// no sample-mean subtraction. By Parseval this equals the
/// spatial-domain Pearson correlation of the subband-projected planes
/// exactly, which is what the oracle tests assert.
pub fn dct_domain_correlation(u: &ImagePlane, v: &ImagePlane, mask: &SubbandMask) -> Result<f64> {
    u.check_same_shape(v, "dct_domain_correlation")?;
    if mask.contains(0, 0) {
        return Err(Error::InvalidParameter {
            name: "mask",
            value: 0.0,
            reason: "mask must exclude the DC mode",
        });
    }
    let cu = mask.coefficients(&dct::block_dct(u)?)?;
    let cv = mask.coefficients(&dct::block_dct(v)?)?;
    if cu.iter().all(|&x| x == 0.0) || cv.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate {
            context: "all masked coefficients are zero".into(),
        });
    }
    stats::cosine_similarity(&cu, &cv)
}

/// Maximum-likelihood Laplace scale fit with the location pinned at 0.
///
/// Returns `lambda = 1 / mean(|x|)`. All-zero samples have no scale and
/// are reported as degenerate so callers can drop the subband.
pub fn laplace_fit(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::NotEnoughInputs {
            required: 2,
            actual: samples.len(),
        });
    }
    let b = samples.iter().map(|x| x.abs()).sum::<f64>() / samples.len() as f64;
    if b == 0.0 {
        return Err(Error::Degenerate {
            context: "all-zero subband has no Laplace scale".into(),
        });
    }
    Ok(1.0 / b)
}

/// Second-order moments of a Laplace variable under uniform
/// quantization with step `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantMoments {
    /// Variance of the unquantized variable, `2 / lambda^2`.
    pub var_u: f64,
    /// Variance of the quantized variable.
    pub var_plus: f64,
    /// Covariance between the variable and its quantized version.
    pub cov_plus: f64,
}

const SERIES_PAIR_CAP: usize = 1_000_000;

/// Analytic `Var(U)`, `Var(V)` and `Cov(U, V)` for
/// `V = floor(U / q + 1/2) * q` with `U ~ Laplace` of scale `lambda`.
///
/// The two infinite series are alternating with slowly decaying terms
/// when `q` is large against `1 / lambda`, so consecutive terms are
/// summed in pairs; truncation stops once a pair's weighted
/// contribution drops below `tol * Var(U)`.
pub fn quant_moments(lambda: f64, q: f64, tol: f64) -> Result<QuantMoments> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "Laplace scale must be positive",
        });
    }
    if !(q > 0.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "quantization step must be positive",
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "truncation tolerance must be positive",
        });
    }
    let var_u = 2.0 / (lambda * lambda);
    let l2 = lambda * lambda;
    let phi = |x: f64| l2 / (x * x + l2);
    let dphi = |x: f64| {
        let d = x * x + l2;
        -2.0 * x * l2 / (d * d)
    };
    let step = 2.0 * std::f64::consts::PI / q;
    let w1 = q * q / (std::f64::consts::PI * std::f64::consts::PI);
    let w2 = 2.0 * q / std::f64::consts::PI;
    let w3 = q / std::f64::consts::PI;

    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut converged = false;
    for pair in 0..SERIES_PAIR_CAP {
        let k = (2 * pair + 1) as f64;
        // k odd: (-1)^k = -1 in the first series, (-1)^(k+1) = +1 in
        // the second; the partner term k+1 flips both.
        let t1 = -phi(step * k) / (k * k) + phi(step * (k + 1.0)) / ((k + 1.0) * (k + 1.0));
        let t2 = dphi(step * k) / k - dphi(step * (k + 1.0)) / (k + 1.0);
        s1 += t1;
        s2 += t2;
        let var_contrib = (w1 * t1 + w2 * t2).abs();
        let cov_contrib = (w3 * t2).abs();
        // Pair contributions decay between k^-3 and k^-5 depending on
        // the regime, so the dropped tail is at most ~k/4 times the
        // last pair; weighting the cutoff by k bounds the truncation
        // error itself by tol * Var(U), not just the final term.
        if var_contrib * k < tol * var_u && cov_contrib * k < tol * var_u {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical {
            context: format!(
                "quantization-moment series did not converge within {SERIES_PAIR_CAP} term pairs \
                 (lambda={lambda}, q={q}, tol={tol})"
            ),
        });
    }
    Ok(QuantMoments {
        var_u,
        var_plus: var_u + q * q / 12.0 + w1 * s1 + w2 * s2,
        cov_plus: var_u + w3 * s2,
    })
}

/// Per-image, per-subband Laplace scales fitted from blockwise DCT
/// coefficients. `None` marks the DC mode and degenerate (all-zero)
/// subbands.
#[derive(Debug, Clone)]
pub struct LaplaceSubbandModel {
    pub scales: Vec<[[Option<f64>; 8]; 8]>,
}

impl LaplaceSubbandModel {
    /// Fits scales for every AC subband of every image. Image
    /// dimensions must be multiples of 8.
    pub fn fit(images: &[ImagePlane]) -> Result<LaplaceSubbandModel> {
        if images.is_empty() {
            return Err(Error::NotEnoughInputs {
                required: 1,
                actual: 0,
            });
        }
        let scales: Vec<Result<[[Option<f64>; 8]; 8]>> = images
            .par_iter()
            .map(|img| {
                let coeffs = dct::block_dct(img)?;
                let (h, w) = coeffs.shape();
                let blocks = (h / 8) * (w / 8);
                let mut per_subband = vec![Vec::with_capacity(blocks); 64];
                for br in 0..h / 8 {
                    for bc in 0..w / 8 {
                        let block = coeffs.block8(br, bc);
                        for u in 0..8 {
                            for v in 0..8 {
                                per_subband[8 * u + v].push(block[u][v]);
                            }
                        }
                    }
                }
                let mut out = [[None; 8]; 8];
                for u in 0..8 {
                    for v in 0..8 {
                        if (u, v) == (0, 0) {
                            continue;
                        }
                        out[u][v] = match laplace_fit(&per_subband[8 * u + v]) {
                            Ok(lambda) => Some(lambda),
                            Err(Error::Degenerate { .. }) => None,
                            Err(e) => return Err(e),
                        };
                    }
                }
                Ok(out)
            })
            .collect();
        Ok(LaplaceSubbandModel {
            scales: scales.into_iter().collect::<Result<Vec<_>>>()?,
        })
    }
}

/// A population correlation estimate plus the number of degenerate
/// (image, subband) cells dropped from the sums.
#[derive(Debug, Clone, Copy)]
pub struct PopulationRho {
    pub value: f64,
    pub dropped_subbands: usize,
}

/// Population correlation between the fragile subband content of
/// images and of their quantized versions.
///
/// Sums `Cov+`, `Var` and `Var+` from [`quant_moments`] over every
/// (image, retained subband) cell, then forms
/// `rho = sum Cov+ / sqrt(sum Var * sum Var+)`. Degenerate cells are
/// dropped from numerator and denominator alike and counted.
pub fn population_rho(
    model: &LaplaceSubbandModel,
    table: &[[u16; 8]; 8],
    c: i32,
    tol: f64,
) -> Result<PopulationRho> {
    let mask = SubbandMask::fragile(c)?;
    let positions = mask.positions();
    let per_image: Vec<Result<(f64, f64, f64, usize)>> = model
        .scales
        .par_iter()
        .map(|scales| {
            let mut cov = 0.0;
            let mut var = 0.0;
            let mut var_plus = 0.0;
            let mut dropped = 0usize;
            for &(u, v) in &positions {
                match scales[u][v] {
                    Some(lambda) => {
                        let m = quant_moments(lambda, table[u][v] as f64, tol)?;
                        cov += m.cov_plus;
                        var += m.var_u;
                        var_plus += m.var_plus;
                    }
                    None => dropped += 1,
                }
            }
            Ok((cov, var, var_plus, dropped))
        })
        .collect();
    let mut cov = 0.0;
    let mut var = 0.0;
    let mut var_plus = 0.0;
    let mut dropped = 0usize;
    for item in per_image {
        let (c_, v_, vp, d) = item?;
        cov += c_;
        var += v_;
        var_plus += vp;
        dropped += d;
    }
    if var <= 0.0 || var_plus <= 0.0 {
        return Err(Error::Degenerate {
            context: "no usable subbands for the population correlation".into(),
        });
    }
    Ok(PopulationRho {
        value: cov / (var.sqrt() * var_plus.sqrt()),
        dropped_subbands: dropped,
    })
}

/// Sample correlation between the summed fragile-subband coefficients
/// of paired image lists (uncompressed vs compressed).
///
/// Coefficient vectors are summed elementwise across images first, then
/// correlated with the same zero-mean convention as
/// [`dct_domain_correlation`].
pub fn sample_r(uncompressed: &[ImagePlane], compressed: &[ImagePlane], c: i32) -> Result<f64> {
    if uncompressed.is_empty() || uncompressed.len() != compressed.len() {
        return Err(Error::NotEnoughInputs {
            required: 1.max(uncompressed.len()),
            actual: compressed.len(),
        });
    }
    let mask = SubbandMask::fragile(c)?;
    let mut sum_u: Vec<f64> = Vec::new();
    let mut sum_v: Vec<f64> = Vec::new();
    for (img_u, img_v) in uncompressed.iter().zip(compressed) {
        img_u.check_same_shape(img_v, "sample_r")?;
        let cu = mask.coefficients(&dct::block_dct(img_u)?)?;
        let cv = mask.coefficients(&dct::block_dct(img_v)?)?;
        if sum_u.is_empty() {
            sum_u = cu;
            sum_v = cv;
        } else {
            if cu.len() != sum_u.len() {
                return Err(Error::dims(
                    "sample_r",
                    (1, sum_u.len()),
                    (1, cu.len()),
                ));
            }
            for (s, x) in sum_u.iter_mut().zip(cu) {
                *s += x;
            }
            for (s, x) in sum_v.iter_mut().zip(cv) {
                *s += x;
            }
        }
    }
    if sum_u.iter().all(|&x| x == 0.0) || sum_v.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate {
            context: "all summed coefficients are zero".into(),
        });
    }
    stats::cosine_similarity(&sum_u, &sum_v)
}

/// One row of a bound-curve table.
#[derive(Debug, Clone, Copy)]
pub struct BoundReport {
    pub c: i32,
    pub quality: u8,
    pub rho: f64,
    pub r: f64,
}
