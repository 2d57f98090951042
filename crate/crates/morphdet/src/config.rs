//! Run configuration: descriptor geometry, classifier hyperparameters, and
//! fusion settings. Accepted on disk as TOML or JSON; unknown keys are
//! rejected so typos cannot silently fall back to defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of the feature extraction stage. Trained models embed this
/// config; bundles and feature caches refuse to load under a different one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescriptorConfig {
    /// Working resolution; inputs are bilinearly resized to this square size.
    pub resolution: usize,
    /// Optional center-crop fraction applied before resizing.
    pub center_crop: Option<f64>,
    /// Laplacian pyramid depth per color channel.
    pub pyramid_levels: usize,
    pub lbp_points: usize,
    pub lbp_radius: usize,
    pub hog_cell: usize,
    pub hog_block: usize,
    pub hog_bins: usize,
    pub bsif_filters: usize,
    pub bsif_size: usize,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            resolution: 320,
            center_crop: None,
            pyramid_levels: 3,
            lbp_points: 8,
            lbp_radius: 1,
            hog_cell: 8,
            hog_block: 2,
            hog_bins: 9,
            bsif_filters: 8,
            bsif_size: 11,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lbp_points != 8 || self.lbp_radius != 1 {
            return Err(Error::Config(format!(
                "unsupported LBP configuration ({}, {}); this build implements LBP(8, 1)",
                self.lbp_points, self.lbp_radius
            )));
        }
        if self.bsif_filters != 8 || self.bsif_size != 11 {
            return Err(Error::Config(format!(
                "unsupported BSIF configuration ({} filters of {0}x{1}); the pinned bank is 8 filters of 11x11",
                self.bsif_filters, self.bsif_size
            )));
        }
        if self.hog_bins == 0 || self.hog_cell == 0 || self.hog_block == 0 {
            return Err(Error::Config("HoG geometry fields must be positive".into()));
        }
        if self.pyramid_levels == 0 {
            return Err(Error::Config("pyramid_levels must be at least 1".into()));
        }
        // The deepest sub-image must still fit one HoG block and the LBP
        // neighborhood.
        let deepest = self.resolution >> (self.pyramid_levels - 1);
        if deepest < self.hog_cell * self.hog_block || deepest < 3 {
            return Err(Error::Config(format!(
                "resolution {} too small for {} pyramid levels",
                self.resolution, self.pyramid_levels
            )));
        }
        if let Some(f) = self.center_crop {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!(
                    "center_crop fraction {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Stable hex digest of the descriptor geometry, embedded in feature
    /// caches and bundles for compatibility checks.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("descriptor config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Classifier hyperparameters. None of these are dictated by the method
/// itself; defaults are recorded in model metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub svm_c: f64,
    pub srkda_delta: f64,
    /// RBF bandwidth; `None` selects the median pairwise training distance.
    pub srkda_sigma: Option<f64>,
    pub pcrc_lambda: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            svm_c: 1.0,
            srkda_delta: 0.01,
            srkda_sigma: None,
            pcrc_lambda: 0.01,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.svm_c <= 0.0 {
            return Err(Error::Config("svm_c must be positive".into()));
        }
        if self.srkda_delta <= 0.0 {
            return Err(Error::Config("srkda_delta must be positive".into()));
        }
        if self.pcrc_lambda <= 0.0 {
            return Err(Error::Config("pcrc_lambda must be positive".into()));
        }
        if let Some(s) = self.srkda_sigma {
            if s <= 0.0 {
                return Err(Error::Config("srkda_sigma must be positive".into()));
            }
        }
        Ok(())
    }
}

/// How a stream's bootstrapped error rate maps to its fusion weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRule {
    /// weight proportional to `1 - mean D-EER`.
    OneMinusEer,
    /// weight proportional to `1 / max(mean D-EER, cap)`.
    InverseEer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub bootstrap_replicates: u32,
    /// Stratified fraction of the training partition carved out for weight
    /// estimation.
    pub dev_fraction: f64,
    pub weight_rule: WeightRule,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            bootstrap_replicates: 100,
            dev_fraction: 0.2,
            weight_rule: WeightRule::OneMinusEer,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_replicates == 0 {
            return Err(Error::Config("bootstrap_replicates must be >= 1".into()));
        }
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::Config("dev_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    /// Feature-extraction worker threads; 0 selects the machine default.
    pub workers: usize,
    pub descriptor: DescriptorConfig,
    pub classifiers: ClassifierConfig,
    pub fusion: FusionConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.descriptor.validate()?;
        self.classifiers.validate()?;
        self.fusion.validate()
    }

    /// Parse TOML or JSON text into a validated config.
    pub fn from_str(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let cfg: Config = if trimmed.starts_with('{') {
            serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?
        } else {
            toml::from_str(text)
                .map_err(|e| Error::Config(format!("invalid TOML config: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
seed = 7
workers = 2

[descriptor]
resolution = 320

[classifiers]
svm_c = 10.0

[fusion]
bootstrap_replicates = 25
"#;
        let cfg = Config::from_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.classifiers.svm_c, 10.0);
        assert_eq!(cfg.fusion.bootstrap_replicates, 25);
        assert_eq!(cfg.descriptor.hog_cell, 8);
    }

    #[test]
    fn json_accepted() {
        let cfg = Config::from_str(r#"{"seed": 3, "classifiers": {"pcrc_lambda": 0.5}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.classifiers.pcrc_lambda, 0.5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_str("sede = 7\n").is_err());
        assert!(Config::from_str(r#"{"descriptor": {"resolutio": 320}}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Config::from_str("[classifiers]\nsvm_c = 0.0\n").is_err());
        assert!(Config::from_str("[fusion]\ndev_fraction = 1.5\n").is_err());
        assert!(Config::from_str("[descriptor]\nlbp_radius = 2\n").is_err());
    }

    #[test]
    fn digest_tracks_descriptor_changes() {
        let a = DescriptorConfig::default();
        let mut b = a.clone();
        b.resolution = 256;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), DescriptorConfig::default().digest());
    }
}
