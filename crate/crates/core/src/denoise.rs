//! Wavelet-domain adaptive Wiener denoiser and noise-residual
//! extraction.

use crate::{wavelet, Error, ImagePlane, Result};

const MAX_LEVELS: usize = 4;
const WINDOW_SIZES: [usize; 4] = [3, 5, 7, 9];

/// Default noise standard deviation assumed by residual extraction
/// (8-bit pixel scale).
pub const DEFAULT_SIGMA0: f64 = 5.0;

/// Estimates the noise-free content of `img`.
///
/// The image is decomposed with a 4-level orthogonal wavelet transform;
/// in every detail subband, the local signal variance is estimated as
/// `max(0, localvar - sigma0^2)` minimized over square averaging windows
/// of sizes 3, 5, 7 and 9, and each coefficient is attenuated by the
/// Wiener factor `estvar / (estvar + sigma0^2)`. The approximation band
/// passes through unchanged.
pub fn denoise(img: &ImagePlane, sigma0: f64) -> Result<ImagePlane> {
    if !(sigma0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma0",
            value: sigma0,
            reason: "noise standard deviation must be positive",
        });
    }
    let (h, w) = img.shape();
    if h < 64 || w < 64 {
        return Err(Error::InvalidDimensions {
            height: h,
            width: w,
            reason: "denoiser supports images of at least 64x64",
        });
    }
    let mut dec = wavelet::forward(img, MAX_LEVELS);
    let noise_var = sigma0 * sigma0;
    for level in &mut dec.levels {
        for band in [&mut level.lh, &mut level.hl, &mut level.hh] {
            wiener_filter(band, noise_var);
        }
    }
    Ok(wavelet::inverse(&dec))
}

/// The noise residual `img - denoise(img)`.
pub fn noise_residual(img: &ImagePlane, sigma0: f64) -> Result<ImagePlane> {
    img.sub(&denoise(img, sigma0)?)
}

/// In-place minimum-variance Wiener attenuation of one detail subband.
fn wiener_filter(band: &mut ImagePlane, noise_var: f64) {
    let (h, w) = band.shape();
    // Summed-area table of squared coefficients, with a zero border row
    // and column so window sums need no special cases.
    let mut sat = vec![0.0f64; (h + 1) * (w + 1)];
    for r in 0..h {
        for c in 0..w {
            let v = band.at(r, c);
            sat[(r + 1) * (w + 1) + c + 1] =
                v * v + sat[r * (w + 1) + c + 1] + sat[(r + 1) * (w + 1) + c] - sat[r * (w + 1) + c];
        }
    }
    let window_mean = |r: usize, c: usize, half: usize| -> f64 {
        let r0 = r.saturating_sub(half);
        let c0 = c.saturating_sub(half);
        let r1 = (r + half + 1).min(h);
        let c1 = (c + half + 1).min(w);
        let sum = sat[r1 * (w + 1) + c1] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0]
            + sat[r0 * (w + 1) + c0];
        sum / ((r1 - r0) * (c1 - c0)) as f64
    };
    for r in 0..h {
        for c in 0..w {
            let mut estvar = f64::INFINITY;
            for size in WINDOW_SIZES {
                let local = window_mean(r, c, size / 2);
                estvar = estvar.min((local - noise_var).max(0.0));
                if estvar == 0.0 {
                    break;
                }
            }
            let factor = estvar / (estvar + noise_var);
            *band.at_mut(r, c) *= factor;
        }
    }
}
