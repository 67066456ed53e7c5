//! Fingerprint estimation, cleaning, and similarity detection.

use rayon::prelude::*;

use crate::denoise::noise_residual;
use crate::fft::circular_cross_correlation;
use crate::mask::SubbandMask;
use crate::{stats, Error, ImagePlane, Result};

/// Which estimator produced a fingerprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Weighted estimator `sum(W I) / sum(I^2)`.
    MaximumLikelihood,
    /// Plain pixel-wise average of noise residuals.
    Mean,
}

impl Estimator {
    pub fn code(self) -> u8 {
        match self {
            Estimator::MaximumLikelihood => 1,
            Estimator::Mean => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Estimator> {
        match code {
            1 => Some(Estimator::MaximumLikelihood),
            2 => Some(Estimator::Mean),
            _ => None,
        }
    }
}

/// An estimated camera fingerprint.
#[derive(Debug, Clone)]
pub struct Fingerprint {
    pub plane: ImagePlane,
    pub estimator: Estimator,
    /// Number of images the estimate was built from.
    pub n_images: u16,
    /// Whether zero-mean cleaning has been applied.
    pub cleaned: bool,
    /// Pixels whose denominator vanished and were set to zero (ML
    /// estimator only; dark pixels carry no usable pattern).
    pub degenerate_pixels: usize,
}

/// A noise residual together with the identifier of its source image.
#[derive(Debug, Clone)]
pub struct NoiseResidual {
    pub plane: ImagePlane,
    pub source_id: String,
}

impl NoiseResidual {
    /// Extracts the residual of `img` with the given denoiser strength.
    pub fn extract(img: &ImagePlane, sigma0: f64, source_id: impl Into<String>) -> Result<Self> {
        Ok(NoiseResidual {
            plane: noise_residual(img, sigma0)?,
            source_id: source_id.into(),
        })
    }
}

/// Weighted fingerprint estimate `K = sum_k(W_k I_k) / sum_k(I_k^2)`.
///
/// Residuals are extracted internally with the denoiser at `sigma0`.
/// Pixels with a zero denominator are set to 0 and counted in
/// `degenerate_pixels`. The result is not cleaned; apply
/// [`clean_fingerprint`] for that.
pub fn estimate_fingerprint_ml(images: &[ImagePlane], sigma0: f64) -> Result<Fingerprint> {
    if images.is_empty() {
        return Err(Error::NotEnoughInputs {
            required: 1,
            actual: 0,
        });
    }
    let shape = images[0].shape();
    for img in images {
        img.check_same_shape(&images[0], "estimate_fingerprint_ml")?;
    }
    // Per-image terms in parallel, then an ordered sequential sum so the
    // result does not depend on thread scheduling.
    let terms: Vec<Result<(ImagePlane, ImagePlane)>> = images
        .par_iter()
        .map(|img| {
            let w = noise_residual(img, sigma0)?;
            Ok((w.mul(img)?, img.mul(img)?))
        })
        .collect();
    let mut num = ImagePlane::zeros(shape.0, shape.1);
    let mut den = ImagePlane::zeros(shape.0, shape.1);
    for term in terms {
        let (wi, ii) = term?;
        num = num.add(&wi)?;
        den = den.add(&ii)?;
    }
    let mut degenerate = 0usize;
    let mut plane = ImagePlane::zeros(shape.0, shape.1);
    for (out, (&n, &d)) in plane
        .as_mut_slice()
        .iter_mut()
        .zip(num.as_slice().iter().zip(den.as_slice()))
    {
        if d == 0.0 {
            degenerate += 1;
        } else {
            *out = n / d;
        }
    }
    Ok(Fingerprint {
        plane,
        estimator: Estimator::MaximumLikelihood,
        n_images: images.len().min(u16::MAX as usize) as u16,
        cleaned: false,
        degenerate_pixels: degenerate,
    })
}

/// Pixel-wise average of pre-extracted noise residuals.
pub fn estimate_fingerprint_mean(residuals: &[NoiseResidual]) -> Result<Fingerprint> {
    if residuals.is_empty() {
        return Err(Error::NotEnoughInputs {
            required: 1,
            actual: 0,
        });
    }
    let mut acc = ImagePlane::zeros(residuals[0].plane.height(), residuals[0].plane.width());
    for res in residuals {
        acc = acc.add(&res.plane)?;
    }
    Ok(Fingerprint {
        plane: acc.scale(1.0 / residuals.len() as f64),
        estimator: Estimator::Mean,
        n_images: residuals.len().min(u16::MAX as usize) as u16,
        cleaned: false,
        degenerate_pixels: 0,
    })
}

/// Removes non-unique row/column artifacts by subtracting every row
/// mean, then every column mean. Idempotent; row and column means of
/// the result are zero.
pub fn clean_fingerprint(fp: &Fingerprint) -> Fingerprint {
    let (h, w) = fp.plane.shape();
    let mut plane = fp.plane.clone();
    for r in 0..h {
        let m = stats::mean(plane.row(r));
        for c in 0..w {
            *plane.at_mut(r, c) -= m;
        }
    }
    for c in 0..w {
        let mut m = 0.0;
        for r in 0..h {
            m += plane.at(r, c);
        }
        m /= h as f64;
        for r in 0..h {
            *plane.at_mut(r, c) -= m;
        }
    }
    Fingerprint {
        plane,
        cleaned: true,
        ..fp.clone()
    }
}

/// Normalized correlation (Pearson over all pixels). Constant inputs
/// have no defined correlation and are rejected.
pub fn ncc(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    a.check_same_shape(b, "ncc")?;
    let ma = stats::mean(a.as_slice());
    let mb = stats::mean(b.as_slice());
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da == 0.0 || db == 0.0 {
        return Err(Error::Degenerate {
            context: "ncc of a constant plane is undefined".into(),
        });
    }
    Ok(num / (da * db).sqrt())
}

/// Half-width of the square neighborhood around the true peak that is
/// excluded from the PCE noise-energy estimate (11x11 window).
const PCE_EXCLUSION_HALF: usize = 5;

/// Signed peak-to-correlation energy.
///
/// The correlation surface over all circular shifts is computed in the
/// frequency domain from mean-subtracted inputs; the peak is taken at
/// zero shift (inputs are aligned by construction), and its signed
/// squared value is divided by the mean squared correlation outside an
/// 11x11 neighborhood of the peak.
pub fn pce(residual: &ImagePlane, template: &ImagePlane) -> Result<f64> {
    residual.check_same_shape(template, "pce")?;
    let (h, w) = residual.shape();
    if h < 2 * PCE_EXCLUSION_HALF + 2 || w < 2 * PCE_EXCLUSION_HALF + 2 {
        return Err(Error::InvalidDimensions {
            height: h,
            width: w,
            reason: "pce needs planes larger than the 11x11 exclusion window",
        });
    }
    let ma = stats::mean(residual.as_slice());
    let mb = stats::mean(template.as_slice());
    let a = residual.map(|v| v - ma);
    let b = template.map(|v| v - mb);
    if a.as_slice().iter().all(|&v| v == 0.0) || b.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate {
            context: "pce of a constant plane is undefined".into(),
        });
    }
    let corr = circular_cross_correlation(&a, &b);
    let peak = corr.at(0, 0);
    let mut energy = 0.0;
    let mut count = 0usize;
    for r in 0..h {
        let wrapped_r = r.min(h - r);
        for c in 0..w {
            let wrapped_c = c.min(w - c);
            if wrapped_r <= PCE_EXCLUSION_HALF && wrapped_c <= PCE_EXCLUSION_HALF {
                continue;
            }
            let v = corr.at(r, c);
            energy += v * v;
            count += 1;
        }
    }
    let noise = energy / count as f64;
    if noise == 0.0 {
        return Err(Error::Degenerate {
            context: "pce noise floor is zero".into(),
        });
    }
    Ok(peak * peak * peak.signum() / noise)
}

/// Similarity measure used by [`identify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Ncc,
    Pce,
}

/// Outcome of a camera-identification query.
#[derive(Debug, Clone)]
pub struct SimilarityReport {
    pub measure: Measure,
    pub value: f64,
    pub threshold: f64,
    pub decision: bool,
    /// The fragile-mask offset when identification ran on a subband.
    pub cutoff_c: Option<i32>,
}

/// Decides whether `query` came from the fingerprinted camera.
///
/// Extracts the query's noise residual and compares it against
/// `query * K` with the chosen measure. With a mask, both planes are
/// first projected onto the retained modes (the fragile-subband
/// detector); the identity mask reproduces the full-band value up to
/// floating-point error. Planes are center-cropped to 8x8 alignment
/// when a mask is used.
pub fn identify(
    query: &ImagePlane,
    fp: &Fingerprint,
    mask: Option<&SubbandMask>,
    measure: Measure,
    threshold: f64,
    sigma0: f64,
) -> Result<SimilarityReport> {
    query.check_same_shape(&fp.plane, "identify")?;
    let residual = noise_residual(query, sigma0)?;
    let template = query.mul(&fp.plane)?;
    let (residual, template, cutoff_c) = match mask {
        None => (residual, template, None),
        Some(mask) => {
            let residual = residual.crop_to_multiple(8)?;
            let template = template.crop_to_multiple(8)?;
            (
                mask.project_spatial(&residual)?,
                mask.project_spatial(&template)?,
                mask.mode_offset(),
            )
        }
    };
    let value = match measure {
        Measure::Ncc => ncc(&residual, &template)?,
        Measure::Pce => pce(&residual, &template)?,
    };
    Ok(SimilarityReport {
        measure,
        value,
        threshold,
        decision: value > threshold,
        cutoff_c,
    })
}
