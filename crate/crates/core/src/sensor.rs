//! Synthetic camera simulator with ground-truth sensor noise.
//!
//! Captures follow the multiplicative model `I = I0 + I0 .* K + G` with
//! a fixed per-camera PRNU pattern `K` and i.i.d. Gaussian shot/readout
//! noise `G`. All generators are deterministic under their seeds, so
//! experiments can regenerate any image on demand instead of storing
//! corpora.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::Normal;

use crate::{dct, stats, Error, ImagePlane, Result};

/// A simulated camera: its ground-truth PRNU pattern plus noise levels.
#[derive(Debug, Clone)]
pub struct SyntheticCamera {
    /// Ground-truth multiplicative pattern `K`, zero-mean.
    pub prnu: ImagePlane,
    /// Standard deviation the PRNU was drawn with (unitless gain).
    pub sigma_prnu: f64,
    /// Standard deviation of the additive capture noise (8-bit scale).
    pub sigma_gamma: f64,
    /// Seed the camera was built from.
    pub seed: u64,
}

impl SyntheticCamera {
    /// Builds a camera with an i.i.d. Gaussian PRNU pattern, zero-meaned
    /// after drawing. `sigma_prnu = 0` is allowed as a degenerate camera
    /// with no fingerprint.
    pub fn new(
        sigma_prnu: f64,
        sigma_gamma: f64,
        seed: u64,
        height: usize,
        width: usize,
    ) -> Result<SyntheticCamera> {
        if !(sigma_prnu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_prnu",
                value: sigma_prnu,
                reason: "must be nonnegative",
            });
        }
        if !(sigma_gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_gamma",
                value: sigma_gamma,
                reason: "must be nonnegative",
            });
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                reason: "dimensions must be positive",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prnu = if sigma_prnu == 0.0 {
            ImagePlane::zeros(height, width)
        } else {
            let normal = Normal::new(0.0, sigma_prnu).expect("positive sigma");
            let mut plane = ImagePlane::from_fn(height, width, |_, _| normal.sample(&mut rng));
            let m = stats::mean(plane.as_slice());
            for v in plane.as_mut_slice() {
                *v -= m;
            }
            plane
        };
        Ok(SyntheticCamera {
            prnu,
            sigma_prnu,
            sigma_gamma,
            seed,
        })
    }

    /// Captures `scene` through this camera:
    /// `I = I0 + I0 .* K + G`, clamped to `[0, 255]`.
    pub fn capture(&self, scene: &ImagePlane, seed: u64) -> Result<ImagePlane> {
        scene.check_same_shape(&self.prnu, "capture")?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = ImagePlane::zeros(scene.height(), scene.width());
        if self.sigma_gamma == 0.0 {
            for (o, (&i0, &k)) in out
                .as_mut_slice()
                .iter_mut()
                .zip(scene.as_slice().iter().zip(self.prnu.as_slice()))
            {
                *o = (i0 + i0 * k).clamp(0.0, 255.0);
            }
        } else {
            let normal = Normal::new(0.0, self.sigma_gamma).expect("positive sigma");
            for (o, (&i0, &k)) in out
                .as_mut_slice()
                .iter_mut()
                .zip(scene.as_slice().iter().zip(self.prnu.as_slice()))
            {
                *o = (i0 + i0 * k + normal.sample(&mut rng)).clamp(0.0, 255.0);
            }
        }
        Ok(out)
    }
}

/// Scene content generators for the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneSpec {
    /// Constant plane at `intensity`.
    FlatField { intensity: f64 },
    /// Blockwise DCT synthesis: each AC subband carries zero-mean
    /// Laplace coefficients whose scale `b` is drawn once per subband,
    /// uniformly from `scale_range`; the DC mode makes the block mean
    /// equal `intensity`.
    LaplacianSynthetic {
        intensity: f64,
        scale_range: (f64, f64),
    },
    /// Low-pass-filtered Gaussian field (separable Gaussian blur with
    /// std `correlation_length`), linearly rescaled into
    /// `[0.2, 0.8] * 255`.
    Textured { correlation_length: f64 },
}

impl SceneSpec {
    fn validate(&self) -> Result<()> {
        let intensity = match self {
            SceneSpec::FlatField { intensity } => *intensity,
            SceneSpec::LaplacianSynthetic {
                intensity,
                scale_range,
            } => {
                if !(scale_range.0 > 0.0 && scale_range.1 >= scale_range.0) {
                    return Err(Error::InvalidParameter {
                        name: "scale_range",
                        value: scale_range.0,
                        reason: "must satisfy 0 < lo <= hi",
                    });
                }
                *intensity
            }
            SceneSpec::Textured { correlation_length } => {
                if !(*correlation_length > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "correlation_length",
                        value: *correlation_length,
                        reason: "must be positive",
                    });
                }
                return Ok(());
            }
        };
        if !(intensity > 0.0 && intensity <= 255.0) {
            return Err(Error::InvalidParameter {
                name: "intensity",
                value: intensity,
                reason: "must lie in (0, 255]",
            });
        }
        Ok(())
    }
}

/// Draws one Laplace(0, b) variate by inverting the CDF.
pub(crate) fn sample_laplace(rng: &mut impl Rng, b: f64) -> f64 {
    let u: f64 = rng.gen_range(-0.5..0.5);
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Renders a noise-free scene of the given size.
pub fn render_scene(
    spec: &SceneSpec,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<ImagePlane> {
    spec.validate()?;
    if height == 0 || width == 0 {
        return Err(Error::InvalidDimensions {
            height,
            width,
            reason: "dimensions must be positive",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        SceneSpec::FlatField { intensity } => {
            Ok(ImagePlane::from_fn(height, width, |_, _| *intensity))
        }
        SceneSpec::LaplacianSynthetic {
            intensity,
            scale_range,
        } => {
            if height % dct::BLOCK != 0 || width % dct::BLOCK != 0 {
                return Err(Error::InvalidDimensions {
                    height,
                    width,
                    reason: "dimensions must be multiples of the 8x8 block size",
                });
            }
            // One scale per AC subband, shared by all blocks of the image.
            let mut scales = [[0.0f64; 8]; 8];
            for u in 0..8 {
                for v in 0..8 {
                    if (u, v) != (0, 0) {
                        scales[u][v] = rng.gen_range(scale_range.0..=scale_range.1);
                    }
                }
            }
            let mut coeffs = ImagePlane::zeros(height, width);
            for br in 0..height / 8 {
                for bc in 0..width / 8 {
                    let mut block = [[0.0; 8]; 8];
                    block[0][0] = 8.0 * intensity;
                    for (u, row) in block.iter_mut().enumerate() {
                        for (v, y) in row.iter_mut().enumerate() {
                            if (u, v) != (0, 0) {
                                *y = sample_laplace(&mut rng, scales[u][v]);
                            }
                        }
                    }
                    coeffs.set_block8(br, bc, &block);
                }
            }
            Ok(dct::block_idct(&coeffs)?.clamp(0.0, 255.0))
        }
        SceneSpec::Textured { correlation_length } => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let field = ImagePlane::from_fn(height, width, |_, _| normal.sample(&mut rng));
            let blurred = gaussian_blur(&field, *correlation_length);
            let lo = blurred.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = blurred
                .as_slice()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            let (a, b) = (0.2 * 255.0, 0.8 * 255.0);
            Ok(blurred.map(|v| {
                if span == 0.0 {
                    0.5 * (a + b)
                } else {
                    a + (v - lo) / span * (b - a)
                }
            }))
        }
    }
}

/// Separable Gaussian blur with reflected boundaries; kernel truncated
/// at three standard deviations.
fn gaussian_blur(plane: &ImagePlane, sigma: f64) -> ImagePlane {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push((-d * d / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let (h, w) = plane.shape();
    let reflect = |idx: isize, n: usize| -> usize {
        let n = n as isize;
        let mut i = idx;
        while i < 0 || i >= n {
            if i < 0 {
                i = -i - 1;
            }
            if i >= n {
                i = 2 * n - i - 1;
            }
        }
        i as usize
    };

    let mut rows = ImagePlane::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                let cc = reflect(c as isize + i as isize - radius as isize, w);
                acc += k * plane.at(r, cc);
            }
            *rows.at_mut(r, c) = acc;
        }
    }
    let mut out = ImagePlane::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                let rr = reflect(r as isize + i as isize - radius as isize, h);
                acc += k * rows.at(rr, c);
            }
            *out.at_mut(r, c) = acc;
        }
    }
    out
}
