//! Fingerprint-copy attack: multiply a foreign image with an estimated
//! fingerprint so a detector attributes it to the victim camera.

use crate::fingerprint::Fingerprint;
use crate::{Error, ImagePlane, Result};

/// Embedding strength and output handling for [`copy_attack`].
#[derive(Debug, Clone, Copy)]
pub struct CopyAttackConfig {
    pub alpha: f64,
    pub clamp: bool,
}

impl Default for CopyAttackConfig {
    fn default() -> Self {
        CopyAttackConfig {
            alpha: 1.0,
            clamp: true,
        }
    }
}

/// Embeds an estimated fingerprint into a foreign image:
/// `J' = J (1 + alpha * K)`, clamped to [0, 255] when configured.
pub fn copy_attack(j: &ImagePlane, fp_e: &Fingerprint, cfg: &CopyAttackConfig) -> Result<ImagePlane> {
    if !(cfg.alpha >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: cfg.alpha,
            reason: "embedding strength must be nonnegative",
        });
    }
    j.check_same_shape(&fp_e.plane, "copy_attack")?;
    let mut out = j.zip_map(&fp_e.plane, "copy_attack", |p, k| p * (1.0 + cfg.alpha * k))?;
    if cfg.clamp {
        out = out.clamp(0.0, 255.0);
    }
    Ok(out)
}

/// Log-spaced embedding strengths for attack sweeps.
pub fn alpha_sweep(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (la + (lb - la) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::{self, Estimator};
    use crate::sensor::{SceneSpec, SyntheticCamera};
    use crate::{denoise, derive_seed};

    fn fingerprint_from(plane: ImagePlane) -> Fingerprint {
        Fingerprint {
            plane,
            estimator: Estimator::MaximumLikelihood,
            n_images: 1,
            cleaned: false,
            degenerate_pixels: 0,
        }
    }

    #[test]
    fn zero_strength_is_identity() {
        let j = ImagePlane::from_fn(16, 16, |i, k| (i * 16 + k) as f64);
        let fp = fingerprint_from(ImagePlane::from_fn(16, 16, |i, k| {
            ((i + k) as f64).sin() * 0.05
        }));
        let cfg = CopyAttackConfig {
            alpha: 0.0,
            clamp: false,
        };
        let out = copy_attack(&j, &fp, &cfg).unwrap();
        assert_eq!(out.as_slice(), j.as_slice());
    }

    #[test]
    fn rejects_bad_inputs() {
        let j = ImagePlane::zeros(8, 8);
        let fp = fingerprint_from(ImagePlane::zeros(8, 16));
        assert!(copy_attack(&j, &fp, &CopyAttackConfig::default()).is_err());
        let fp = fingerprint_from(ImagePlane::zeros(8, 8));
        let cfg = CopyAttackConfig {
            alpha: -1.0,
            clamp: true,
        };
        assert!(copy_attack(&j, &fp, &cfg).is_err());
    }

    #[test]
    fn clamping_bounds_output() {
        let j = ImagePlane::from_fn(8, 8, |_, _| 250.0);
        let fp = fingerprint_from(ImagePlane::from_fn(8, 8, |i, k| {
            if (i + k) % 2 == 0 { 0.5 } else { -2.0 }
        }));
        let cfg = CopyAttackConfig {
            alpha: 1.0,
            clamp: true,
        };
        let out = copy_attack(&j, &fp, &cfg).unwrap();
        for &v in out.as_slice() {
            assert!((0.0..=255.0).contains(&v));
        }
        let unclamped = copy_attack(
            &j,
            &fp,
            &CopyAttackConfig {
                alpha: 1.0,
                clamp: false,
            },
        )
        .unwrap();
        assert!(unclamped.as_slice().iter().any(|&v| v > 255.0));
    }

    #[test]
    fn embedded_fingerprint_raises_correlation_with_strength() {
        let size = 64;
        let alice = SyntheticCamera::new(0.02, 1.0, 900, size, size).unwrap();
        let scene = SceneSpec::FlatField { intensity: 128.0 };
        let flats: Vec<ImagePlane> = (0..12)
            .map(|k| {
                let img = crate::sensor::render_scene(&scene, size, size, 0).unwrap();
                alice.capture(&img, derive_seed(900, 1, k)).unwrap()
            })
            .collect();
        let fp_e = fingerprint::clean_fingerprint(
            &fingerprint::estimate_fingerprint_ml(&flats, denoise::DEFAULT_SIGMA0).unwrap(),
        );
        // A foreign image with no relation to Alice's sensor.
        let mallory = SyntheticCamera::new(0.02, 1.0, 901, size, size).unwrap();
        let j = mallory
            .capture(
                &crate::sensor::render_scene(&scene, size, size, 1).unwrap(),
                7,
            )
            .unwrap();
        let mut scores = Vec::new();
        for &alpha in &[0.0, 2.0, 10.0] {
            let cfg = CopyAttackConfig {
                alpha,
                clamp: false,
            };
            let attacked = copy_attack(&j, &fp_e, &cfg).unwrap();
            let residual = denoise::noise_residual(&attacked, denoise::DEFAULT_SIGMA0).unwrap();
            let template = attacked.mul(&fp_e.plane).unwrap();
            scores.push(fingerprint::ncc(&residual, &template).unwrap());
        }
        assert!(
            scores[0] < scores[1] && scores[1] < scores[2],
            "scores {scores:?}"
        );
    }

    #[test]
    fn sweep_is_log_spaced() {
        let grid = alpha_sweep(1e-3, 1e2, 40);
        assert_eq!(grid.len(), 40);
        assert!((grid[0] - 1e-3).abs() < 1e-12);
        assert!((grid[39] - 1e2).abs() < 1e-9);
        let ratio = grid[1] / grid[0];
        for w in grid.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
    }
}
