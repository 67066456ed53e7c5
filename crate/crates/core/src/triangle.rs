//! Triangle test: decides whether a public image contributed to the
//! fingerprint estimate embedded by a copy attack.
//!
//! For a candidate image I and an attacked image J', the correlation
//! between their two noise residuals has a predictable part driven by
//! the shared camera fingerprint. If I was among the images the
//! adversary used, its residual additionally leaks into J' and the
//! observed correlation pops above the prediction.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::fingerprint::{ncc, Fingerprint};
use crate::{denoise, stats, Error, ImagePlane, Result};

/// Affine correlation predictor plus decision threshold.
#[derive(Debug, Clone, Copy)]
pub struct TriangleModel {
    pub theta: f64,
    pub mu: f64,
    /// Decision threshold on the residual statistic.
    pub t: f64,
    pub fitted_on: usize,
    pub residual_std: f64,
}

pub const MIN_SAFE_IMAGES: usize = 10;

fn residual(img: &ImagePlane) -> Result<ImagePlane> {
    denoise::noise_residual(img, denoise::DEFAULT_SIGMA0)
}

/// Product-of-correlations feature for a candidate image against the
/// attacked image: `ncc(W_I, I*K) * ncc(W_J', J'*K)`.
fn feature(
    img: &ImagePlane,
    img_residual: &ImagePlane,
    attacked: &ImagePlane,
    attacked_residual: &ImagePlane,
    fp: &Fingerprint,
) -> Result<f64> {
    let a = ncc(img_residual, &img.mul(&fp.plane)?)?;
    let b = ncc(attacked_residual, &attacked.mul(&fp.plane)?)?;
    Ok(a * b)
}

fn affine_model(features: &[f64], responses: &[f64], pfa: f64) -> Result<TriangleModel> {
    let n = features.len();
    let (theta, mu) = stats::linear_fit(features, responses)?;
    let sxx: f64 = {
        let mean = stats::mean(features);
        features.iter().map(|f| (f - mean) * (f - mean)).sum()
    };
    if sxx < 1e-12 {
        return Err(Error::Degenerate {
            context: "feature values carry no spread, predictor slope is unidentifiable".into(),
        });
    }
    let ssr: f64 = features
        .iter()
        .zip(responses)
        .map(|(f, v)| {
            let r = v - theta * f - mu;
            r * r
        })
        .sum();
    let dof = (n - 2).max(1) as f64;
    let residual_std = (ssr / dof).sqrt();
    let norm = Normal::new(0.0, 1.0).expect("unit normal");
    let t = residual_std * norm.inverse_cdf(1.0 - pfa);
    Ok(TriangleModel {
        theta,
        mu,
        t,
        fitted_on: n,
        residual_std,
    })
}

/// Fits the correlation predictor on images known not to be part of
/// the adversary's estimate and places the threshold at the requested
/// false-alarm probability via a Gaussian tail fit of the residuals.
pub fn correlation_predictor_fit(
    safe_images: &[ImagePlane],
    fp_alice: &Fingerprint,
    attacked: &ImagePlane,
    pfa: f64,
) -> Result<TriangleModel> {
    if safe_images.len() < MIN_SAFE_IMAGES {
        return Err(Error::NotEnoughInputs {
            required: MIN_SAFE_IMAGES,
            actual: safe_images.len(),
        });
    }
    if !(pfa > 0.0 && pfa < 0.5) {
        return Err(Error::InvalidParameter {
            name: "pfa",
            value: pfa,
            reason: "false-alarm probability must lie in (0, 0.5)",
        });
    }
    let attacked_residual = residual(attacked)?;
    let mut features = Vec::with_capacity(safe_images.len());
    let mut responses = Vec::with_capacity(safe_images.len());
    for img in safe_images {
        let w = residual(img)?;
        features.push(feature(img, &w, attacked, &attacked_residual, fp_alice)?);
        responses.push(ncc(&w, &attacked_residual)?);
    }
    affine_model(&features, &responses, pfa)
}

/// Evaluates one candidate image: the residual-correlation excess over
/// the predictor, and whether it crosses the threshold.
pub fn triangle_test(
    image: &ImagePlane,
    attacked: &ImagePlane,
    fp_alice: &Fingerprint,
    model: &TriangleModel,
) -> Result<(f64, bool)> {
    let w = residual(image)?;
    let attacked_residual = residual(attacked)?;
    let f = feature(image, &w, attacked, &attacked_residual, fp_alice)?;
    let nu = ncc(&w, &attacked_residual)?;
    let statistic = nu - model.theta * f - model.mu;
    Ok((statistic, statistic > model.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{copy_attack, CopyAttackConfig};
    use crate::fingerprint::{clean_fingerprint, estimate_fingerprint_ml};
    use crate::sensor::{render_scene, SceneSpec, SyntheticCamera};
    use crate::derive_seed;

    #[test]
    fn affine_fit_handles_duplicate_features() {
        let features = vec![0.5, 0.5, 0.5, 0.8, 0.8, 0.8, 0.2, 0.2, 0.2, 0.4];
        let responses = vec![0.1, 0.2, 0.15, 0.3, 0.25, 0.35, 0.05, 0.0, 0.1, 0.12];
        let model = affine_model(&features, &responses, 1e-3).unwrap();
        assert!(model.residual_std > 0.0);
        assert!(model.t > 0.0);
        assert_eq!(model.fitted_on, 10);
    }

    #[test]
    fn affine_fit_rejects_constant_features() {
        let features = vec![0.5; 10];
        let responses: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
        assert!(matches!(
            affine_model(&features, &responses, 1e-3),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn threshold_tracks_false_alarm_probability() {
        let features: Vec<f64> = (0..20).map(|k| k as f64 / 20.0).collect();
        let responses: Vec<f64> = features.iter().map(|f| 0.5 * f + 0.01 * (f * 37.0).sin()).collect();
        let loose = affine_model(&features, &responses, 0.05).unwrap();
        let tight = affine_model(&features, &responses, 1e-3).unwrap();
        assert!(tight.t > loose.t);
        // Gaussian quantile ratio between the two levels.
        let ratio = tight.t / loose.t;
        assert!((ratio - 3.0902 / 1.6449).abs() < 0.01, "ratio {ratio}");
    }

    struct Setup {
        used: Vec<ImagePlane>,
        safe: Vec<ImagePlane>,
        held_out: Vec<ImagePlane>,
        attacked: ImagePlane,
        fp_alice: Fingerprint,
    }

    /// Alice's camera, an adversary estimate from `used` images, and an
    /// attacked foreign image.
    fn build_setup(alpha: f64) -> Setup {
        let size = 64;
        let master = 4242;
        let alice = SyntheticCamera::new(0.03, 2.0, master, size, size).unwrap();
        let capture_batch = |salt: u64, count: usize| -> Vec<ImagePlane> {
            (0..count)
                .map(|k| {
                    let scene = render_scene(
                        &SceneSpec::FlatField {
                            intensity: 120.0 + 8.0 * (k % 3) as f64,
                        },
                        size,
                        size,
                        0,
                    )
                    .unwrap();
                    alice
                        .capture(&scene, derive_seed(master, salt, k as u64))
                        .unwrap()
                })
                .collect()
        };
        // A small adversary set makes each used image's residual a
        // visible share of the embedded estimate.
        let used = capture_batch(1, 4);
        let safe = capture_batch(2, 12);
        let held_out = capture_batch(3, 6);
        let fp_e = clean_fingerprint(
            &estimate_fingerprint_ml(&used, denoise::DEFAULT_SIGMA0).unwrap(),
        );
        let mallory = SyntheticCamera::new(0.03, 2.0, master + 1, size, size).unwrap();
        let foreign = mallory
            .capture(
                &render_scene(&SceneSpec::FlatField { intensity: 135.0 }, size, size, 0).unwrap(),
                9,
            )
            .unwrap();
        let attacked = copy_attack(
            &foreign,
            &fp_e,
            &CopyAttackConfig {
                alpha,
                clamp: true,
            },
        )
        .unwrap();
        // The detector's reference fingerprint comes from separate
        // captures.
        let reference = capture_batch(4, 20);
        let fp_alice = clean_fingerprint(
            &estimate_fingerprint_ml(&reference, denoise::DEFAULT_SIGMA0).unwrap(),
        );
        Setup {
            used,
            safe,
            held_out,
            attacked,
            fp_alice,
        }
    }

    #[test]
    fn used_images_score_above_safe_images() {
        let s = build_setup(8.0);
        let model =
            correlation_predictor_fit(&s.safe, &s.fp_alice, &s.attacked, 1e-3).unwrap();
        assert!(model.fitted_on == 12);
        let mean_stat = |imgs: &[ImagePlane]| -> f64 {
            let vals: Vec<f64> = imgs
                .iter()
                .map(|img| triangle_test(img, &s.attacked, &s.fp_alice, &model).unwrap().0)
                .collect();
            stats::mean(&vals)
        };
        let held = mean_stat(&s.held_out);
        let used = mean_stat(&s.used);
        assert!(
            used > held + model.residual_std,
            "used {used} vs held-out {held} (sd {})",
            model.residual_std
        );
        assert!(held.abs() < 3.0 * model.residual_std, "held-out mean {held}");
    }

    #[test]
    fn needs_enough_safe_images() {
        let s = build_setup(2.0);
        assert!(matches!(
            correlation_predictor_fit(&s.safe[..5], &s.fp_alice, &s.attacked, 1e-3),
            Err(Error::NotEnoughInputs { .. })
        ));
        assert!(
            correlation_predictor_fit(&s.safe, &s.fp_alice, &s.attacked, 0.7).is_err()
        );
    }
}
