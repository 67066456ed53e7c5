//! Experiment manifests: the JSON description of one experiment run.

use std::fmt;
use std::path::{Path, PathBuf};

use prnulab::mask::{MAX_MODE_OFFSET, MIN_MODE_OFFSET};
use prnulab::sensor::SceneSpec;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Version of the manifest JSON layout this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {found} (this build reads {SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("invalid manifest field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("manifest declares experiment {declared} but the {requested} subcommand was invoked")]
    WrongExperiment {
        declared: &'static str,
        requested: &'static str,
    },
    #[error("{0}")]
    Usage(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ManifestError {
    ManifestError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    BoundCurves,
    FingerprintQuality,
    Roc,
    CopyAttack,
    DctRecovery,
    Hsic,
    Triangle,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BoundCurves => "bound_curves",
            Experiment::FingerprintQuality => "fingerprint_quality",
            Experiment::Roc => "roc",
            Experiment::CopyAttack => "copy_attack",
            Experiment::DctRecovery => "dct_recovery",
            Experiment::Hsic => "hsic",
            Experiment::Triangle => "triangle",
        }
    }
}

/// Which frequency band the defender scores on: the full plane or a
/// fragile subband with mode offset `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    Full,
    Offset(i32),
}

impl Cutoff {
    pub fn offset(self) -> Option<i32> {
        match self {
            Cutoff::Full => None,
            Cutoff::Offset(c) => Some(c),
        }
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Full => write!(f, "full"),
            Cutoff::Offset(c) => write!(f, "{c}"),
        }
    }
}

impl Serialize for Cutoff {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cutoff::Full => s.serialize_str("full"),
            Cutoff::Offset(c) => s.serialize_i32(*c),
        }
    }
}

impl<'de> Deserialize<'de> for Cutoff {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(i32),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(c) => Ok(Cutoff::Offset(c)),
            Repr::Text(s) if s == "full" => Ok(Cutoff::Full),
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "cutoff must be an integer or the string \"full\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraParams {
    pub n_cameras: usize,
    pub height: usize,
    pub width: usize,
    pub sigma_prnu: f64,
    pub sigma_gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneParams {
    FlatField {
        intensity: f64,
    },
    LaplacianSynthetic {
        intensity: f64,
        scale_lo: f64,
        scale_hi: f64,
    },
    Textured {
        correlation_length: f64,
    },
}

impl SceneParams {
    pub fn to_spec(&self) -> SceneSpec {
        match *self {
            SceneParams::FlatField { intensity } => SceneSpec::FlatField { intensity },
            SceneParams::LaplacianSynthetic {
                intensity,
                scale_lo,
                scale_hi,
            } => SceneSpec::LaplacianSynthetic {
                intensity,
                scale_range: (scale_lo, scale_hi),
            },
            SceneParams::Textured { correlation_length } => {
                SceneSpec::Textured { correlation_length }
            }
        }
    }
}

/// Kernel-test knobs for the hsic experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsicParams {
    pub block: usize,
    pub alpha: f64,
    pub n_perm: usize,
    pub subsample: usize,
}

impl Default for HsicParams {
    fn default() -> Self {
        // Smaller than the library defaults (200 permutations, 2000
        // samples): a full quality x cutoff x scenario grid at library
        // settings needs hours, not desk minutes.
        HsicParams {
            block: 64,
            alpha: 0.05,
            n_perm: 100,
            subsample: 400,
        }
    }
}

fn default_sigma0() -> f64 {
    prnulab::denoise::DEFAULT_SIGMA0
}

fn default_lp_max_iters() -> usize {
    prnulab::recovery::DEFAULT_MAX_ITERS
}

fn default_pfa() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub experiment: Experiment,
    pub camera: CameraParams,
    pub scene: SceneParams,
    /// Images per fingerprint estimate.
    pub n_fingerprint: usize,
    /// Images available to the attacker.
    pub n_attack: usize,
    /// Test images per class (probes, negatives, safe sets).
    pub n_test: usize,
    pub qualities: Vec<u8>,
    pub cutoffs: Vec<Cutoff>,
    /// Embedding strengths for copy_attack and triangle; a 40-point
    /// logarithmic sweep of [1e-3, 1e2] when omitted.
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    /// Image-count grid for fingerprint_quality; [5, 10, 25, 50] when
    /// omitted.
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub hsic: Option<HsicParams>,
    /// Triangle-test false-alarm design point.
    #[serde(default = "default_pfa")]
    pub pfa: f64,
    /// Denoiser strength for every residual extraction.
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    /// Simplex iteration budget per recovered block.
    #[serde(default = "default_lp_max_iters")]
    pub lp_max_iters: usize,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

/// A parsed manifest plus the hash of its canonical serialization,
/// recorded in every output table.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: ExperimentManifest,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<LoadedManifest, ManifestError> {
    let text = std::fs::read_to_string(path)?;
    let manifest: ExperimentManifest = serde_json::from_str(&text)?;
    manifest.validate()?;
    let sha256 = manifest.sha256();
    Ok(LoadedManifest { manifest, sha256 })
}

impl ExperimentManifest {
    /// Hash of the canonical (compact, field-ordered) JSON form, stable
    /// across whitespace and key-order variations of the source file.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_string(self).expect("manifest serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            use fmt::Write as _;
            write!(out, "{byte:02x}").unwrap();
        }
        out
    }

    pub fn scene_spec(&self) -> SceneSpec {
        self.scene.to_spec()
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        match &self.alphas {
            Some(a) => a.clone(),
            None => prnulab::attack::alpha_sweep(1e-3, 1e2, 40),
        }
    }

    pub fn image_count_grid(&self) -> Vec<usize> {
        match &self.n_grid {
            Some(g) => g.clone(),
            None => vec![5, 10, 25, 50],
        }
    }

    pub fn hsic_params(&self) -> HsicParams {
        self.hsic.clone().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ManifestError::Schema {
                found: self.schema_version,
            });
        }
        if self.n_fingerprint == 0 {
            return Err(invalid("n_fingerprint", "must be positive"));
        }
        if self.n_fingerprint > u16::MAX as usize {
            return Err(invalid("n_fingerprint", "exceeds the supported image count"));
        }
        if self.n_attack == 0 {
            return Err(invalid("n_attack", "must be positive"));
        }
        if self.n_test == 0 {
            return Err(invalid("n_test", "must be positive"));
        }
        if self.qualities.is_empty() {
            return Err(invalid("qualities", "must not be empty"));
        }
        if let Some(&q) = self.qualities.iter().find(|q| !(1..=100).contains(*q)) {
            return Err(invalid("qualities", format!("{q} outside [1, 100]")));
        }
        if self.cutoffs.is_empty() {
            return Err(invalid("cutoffs", "must not be empty"));
        }
        for cut in &self.cutoffs {
            if let Cutoff::Offset(c) = cut {
                if !(MIN_MODE_OFFSET..=MAX_MODE_OFFSET).contains(c) {
                    return Err(invalid(
                        "cutoffs",
                        format!("offset {c} outside [{MIN_MODE_OFFSET}, {MAX_MODE_OFFSET}]"),
                    ));
                }
            }
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "must not be empty"));
        }
        if self.camera.n_cameras == 0 {
            return Err(invalid("camera.n_cameras", "must be positive"));
        }
        let (h, w) = (self.camera.height, self.camera.width);
        if h % 8 != 0 || w % 8 != 0 || h < 32 || w < 32 {
            return Err(invalid(
                "camera",
                format!("dimensions {h}x{w} must be multiples of 8 and at least 32"),
            ));
        }
        if !(self.camera.sigma_prnu > 0.0 && self.camera.sigma_prnu.is_finite()) {
            return Err(invalid("camera.sigma_prnu", "must be positive and finite"));
        }
        if !(self.camera.sigma_gamma >= 0.0 && self.camera.sigma_gamma.is_finite()) {
            return Err(invalid("camera.sigma_gamma", "must be nonnegative and finite"));
        }
        if !(self.sigma0 > 0.0) {
            return Err(invalid("sigma0", "must be positive"));
        }
        if self.lp_max_iters == 0 {
            return Err(invalid("lp_max_iters", "must be positive"));
        }
        if !(self.pfa > 0.0 && self.pfa < 0.5) {
            return Err(invalid("pfa", "must lie in (0, 0.5)"));
        }
        if let Some(alphas) = &self.alphas {
            if alphas.is_empty() {
                return Err(invalid("alphas", "must not be empty when given"));
            }
            if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(invalid("alphas", "entries must be finite and nonnegative"));
            }
        }
        if let Some(grid) = &self.n_grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err(invalid("n_grid", "entries must be positive"));
            }
            if grid.iter().any(|&n| n > u16::MAX as usize) {
                return Err(invalid("n_grid", "entry exceeds the supported image count"));
            }
        }
        if let Some(hp) = &self.hsic {
            if hp.block < 16 || hp.block % 8 != 0 {
                return Err(invalid("hsic.block", "must be a multiple of 8, at least 16"));
            }
            if !(hp.alpha > 0.0 && hp.alpha < 1.0) {
                return Err(invalid("hsic.alpha", "must lie in (0, 1)"));
            }
            if hp.n_perm == 0 {
                return Err(invalid("hsic.n_perm", "must be positive"));
            }
            if hp.subsample < prnulab::hsic::MIN_SAMPLES {
                return Err(invalid(
                    "hsic.subsample",
                    format!("must be at least {}", prnulab::hsic::MIN_SAMPLES),
                ));
            }
        }
        self.validate_for_experiment()
    }

    fn validate_for_experiment(&self) -> Result<(), ManifestError> {
        let needs_two_cameras = matches!(
            self.experiment,
            Experiment::Roc | Experiment::CopyAttack | Experiment::Hsic | Experiment::Triangle
        );
        if needs_two_cameras && self.camera.n_cameras < 2 {
            return Err(invalid(
                "camera.n_cameras",
                format!("{} needs at least 2 cameras", self.experiment.name()),
            ));
        }
        let needs_numeric_cutoffs = matches!(
            self.experiment,
            Experiment::BoundCurves | Experiment::DctRecovery | Experiment::Hsic
                | Experiment::Triangle
        );
        if needs_numeric_cutoffs && self.cutoffs.iter().any(|c| *c == Cutoff::Full) {
            return Err(invalid(
                "cutoffs",
                format!("{} needs numeric mode offsets", self.experiment.name()),
            ));
        }
        if self.experiment == Experiment::DctRecovery {
            for cut in &self.cutoffs {
                if let Cutoff::Offset(c) = cut {
                    if *c <= MIN_MODE_OFFSET {
                        return Err(invalid(
                            "cutoffs",
                            "dct_recovery needs c > -6 so the low band is nonempty",
                        ));
                    }
                }
            }
        }
        if self.experiment == Experiment::Triangle {
            if self.qualities.len() != 1 || self.cutoffs.len() != 1 {
                return Err(invalid(
                    "qualities",
                    "triangle runs one (quality, cutoff) point per manifest",
                ));
            }
            if self.n_test < prnulab::triangle::MIN_SAFE_IMAGES {
                return Err(invalid(
                    "n_test",
                    format!(
                        "triangle needs at least {} safe images",
                        prnulab::triangle::MIN_SAFE_IMAGES
                    ),
                ));
            }
        }
        if self.experiment == Experiment::Hsic {
            let hp = self.hsic_params();
            let min_dim = self.camera.height.min(self.camera.width);
            if hp.block > min_dim {
                return Err(invalid("hsic.block", "tile size exceeds the image"));
            }
        }
        Ok(())
    }

    /// A runnable desk-scale manifest for the given experiment, used
    /// when no manifest file is supplied.
    pub fn default_for(experiment: Experiment) -> ExperimentManifest {
        let mut m = ExperimentManifest {
            schema_version: SCHEMA_VERSION,
            experiment,
            camera: CameraParams {
                n_cameras: 2,
                height: 256,
                width: 256,
                sigma_prnu: 0.01,
                sigma_gamma: 2.0,
            },
            scene: SceneParams::Textured {
                correlation_length: 4.0,
            },
            n_fingerprint: 25,
            n_attack: 50,
            n_test: 24,
            qualities: vec![100, 95, 90, 85, 80, 75, 70],
            cutoffs: vec![
                Cutoff::Full,
                Cutoff::Offset(1),
                Cutoff::Offset(2),
                Cutoff::Offset(3),
                Cutoff::Offset(4),
                Cutoff::Offset(5),
            ],
            alphas: None,
            n_grid: None,
            hsic: None,
            pfa: default_pfa(),
            sigma0: default_sigma0(),
            lp_max_iters: default_lp_max_iters(),
            seeds: vec![1],
            out_dir: PathBuf::from("out"),
        };
        match experiment {
            Experiment::BoundCurves => {
                m.camera.n_cameras = 1;
                m.scene = SceneParams::LaplacianSynthetic {
                    intensity: 128.0,
                    scale_lo: 2.0,
                    scale_hi: 24.0,
                };
                m.cutoffs = (1..=5).map(Cutoff::Offset).collect();
                m.seeds = vec![1, 2, 3, 4, 5];
            }
            Experiment::FingerprintQuality => {
                m.camera.n_cameras = 1;
                m.seeds = vec![1, 2, 3];
            }
            Experiment::Roc => {
                m.camera.n_cameras = 6;
                m.qualities = vec![100];
            }
            Experiment::CopyAttack => {
                m.qualities = vec![100, 95, 90, 85];
                m.n_test = 12;
                m.alphas = Some(prnulab::attack::alpha_sweep(1e-2, 1e2, 25));
            }
            Experiment::DctRecovery => {
                m.camera.n_cameras = 1;
                m.camera.height = 64;
                m.camera.width = 64;
                m.qualities = vec![100, 95, 90];
                m.cutoffs = vec![Cutoff::Offset(1)];
                m.n_test = 6;
                m.seeds = vec![1, 2, 3];
            }
            Experiment::Hsic => {
                m.qualities = vec![100, 90, 80, 70];
                m.cutoffs = vec![Cutoff::Offset(1), Cutoff::Offset(4)];
                m.seeds = vec![1, 2, 3];
            }
            Experiment::Triangle => {
                m.camera.height = 128;
                m.camera.width = 128;
                m.scene = SceneParams::FlatField { intensity: 128.0 };
                m.qualities = vec![90];
                m.cutoffs = vec![Cutoff::Offset(1)];
                m.n_attack = 3;
                m.n_test = 20;
                m.alphas = Some(prnulab::attack::alpha_sweep(5e-2, 2e1, 12));
                m.seeds = vec![1, 2, 3, 4, 5];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_every_experiment() {
        for exp in [
            Experiment::BoundCurves,
            Experiment::FingerprintQuality,
            Experiment::Roc,
            Experiment::CopyAttack,
            Experiment::DctRecovery,
            Experiment::Hsic,
            Experiment::Triangle,
        ] {
            let m = ExperimentManifest::default_for(exp);
            m.validate().unwrap();
            assert_eq!(m.sha256().len(), 64);
        }
    }

    #[test]
    fn roundtrips_through_json() {
        let m = ExperimentManifest::default_for(Experiment::CopyAttack);
        let text = serde_json::to_string_pretty(&m).unwrap();
        let back: ExperimentManifest = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.sha256(), m.sha256());
    }

    #[test]
    fn cutoff_accepts_numbers_and_full() {
        let cuts: Vec<Cutoff> = serde_json::from_str(r#"["full", 1, -6]"#).unwrap();
        assert_eq!(
            cuts,
            vec![Cutoff::Full, Cutoff::Offset(1), Cutoff::Offset(-6)]
        );
        assert!(serde_json::from_str::<Vec<Cutoff>>(r#"["fool"]"#).is_err());
    }

    #[test]
    fn validation_rejects_out_of_range_fields() {
        let mut m = ExperimentManifest::default_for(Experiment::Roc);
        m.qualities = vec![0];
        assert!(matches!(m.validate(), Err(ManifestError::Invalid { .. })));

        let mut m = ExperimentManifest::default_for(Experiment::Roc);
        m.cutoffs = vec![Cutoff::Offset(9)];
        assert!(m.validate().is_err());

        let mut m = ExperimentManifest::default_for(Experiment::Roc);
        m.camera.n_cameras = 1;
        assert!(m.validate().is_err());

        let mut m = ExperimentManifest::default_for(Experiment::BoundCurves);
        m.cutoffs = vec![Cutoff::Full];
        assert!(m.validate().is_err());

        let mut m = ExperimentManifest::default_for(Experiment::Hsic);
        m.schema_version = 2;
        assert!(matches!(m.validate(), Err(ManifestError::Schema { .. })));

        let mut m = ExperimentManifest::default_for(Experiment::DctRecovery);
        m.seeds.clear();
        assert!(m.validate().is_err());
    }
}
