use std::path::{Path, PathBuf};

use clat_core::condition::{DEFAULT_MASK_P, DEFAULT_TEXT_DIM};
use clat_core::gaussian::Ridge;
use clat_core::ingest::DEFAULT_MIN_COUNT;
use clat_core::latent_ops::DEFAULT_CENTER_SAMPLES;
use clat_core::mapping::ModelConfig;
use clat_core::metrics::{DEFAULT_EMBED_DIM, DEFAULT_FJD_ALPHA, DEFAULT_IFID_FRACTION, DEFAULT_N_MAX};
use clat_core::synthetic::{BUNDLED_COUNT, BUNDLED_IMAGE_DIM};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::formats::read_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dims {
    pub z: usize,
    pub w: usize,
    pub image: usize,
    pub text_embed: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self {
            z: 32,
            w: 64,
            image: BUNDLED_IMAGE_DIM,
            text_embed: DEFAULT_TEXT_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    /// Points per condition for Gaussian fitting.
    pub fit: usize,
    /// Held-out points per condition for the accuracy table.
    pub classify: usize,
    /// Monte-Carlo samples behind every center of mass and transformation vector.
    pub center: usize,
    /// Points per condition in the truncation sweep.
    pub sweep: usize,
    /// Points per condition in the PCA scatter.
    pub pca: usize,
    /// Records per condition in the bundled dataset.
    pub dataset: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self {
            fit: 10_000,
            classify: 100_000,
            center: DEFAULT_CENTER_SAMPLES,
            sweep: 1_000,
            pca: 500,
            dataset: BUNDLED_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Masking {
    /// `None` means `⌈|S| / 2⌉`.
    pub k: Option<usize>,
    pub p: f64,
}

impl Default for Masking {
    fn default() -> Self {
        Self {
            k: None,
            p: DEFAULT_MASK_P,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inversion {
    pub steps: usize,
    pub step_size: f64,
}

impl Default for Inversion {
    fn default() -> Self {
        let d = clat_core::latent_ops::InversionConfig::default();
        Self {
            steps: d.steps,
            step_size: d.step_size,
        }
    }
}

/// Every tunable of a run; serialises to and from a single JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dims: Dims,
    pub mapping_depth: usize,
    pub synthesis_depth: usize,
    pub condition_gain: f64,
    pub samples: Samples,
    pub psi_sweep: Vec<f64>,
    pub masking: Masking,
    pub classify_ridge: Ridge,
    pub fjd_alpha: f64,
    pub ifid_fraction: f64,
    pub embed_dim: usize,
    pub min_count: usize,
    pub n_max: usize,
    pub inversion: Inversion,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dims: Dims::default(),
            mapping_depth: 2,
            synthesis_depth: 3,
            condition_gain: 8.0,
            samples: Samples::default(),
            psi_sweep: vec![1.0, 0.75, 0.5, 0.25, 0.0],
            masking: Masking::default(),
            classify_ridge: Ridge::CLASSIFY,
            fjd_alpha: DEFAULT_FJD_ALPHA,
            ifid_fraction: DEFAULT_IFID_FRACTION,
            embed_dim: DEFAULT_EMBED_DIM,
            min_count: DEFAULT_MIN_COUNT,
            n_max: DEFAULT_N_MAX,
            inversion: Inversion::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let counts = [
            ("dims.z", self.dims.z),
            ("dims.w", self.dims.w),
            ("dims.image", self.dims.image),
            ("dims.text_embed", self.dims.text_embed),
            ("mapping_depth", self.mapping_depth),
            ("synthesis_depth", self.synthesis_depth),
            ("samples.fit", self.samples.fit),
            ("samples.classify", self.samples.classify),
            ("samples.center", self.samples.center),
            ("samples.sweep", self.samples.sweep),
            ("samples.pca", self.samples.pca),
            ("samples.dataset", self.samples.dataset),
            ("embed_dim", self.embed_dim),
            ("min_count", self.min_count),
            ("n_max", self.n_max),
        ];
        let bad: Vec<&str> = counts.iter().filter(|(_, v)| *v == 0).map(|(n, _)| *n).collect();
        if !bad.is_empty() {
            return Err(CliError::Format(format!(
                "config values must be >= 1: {}",
                bad.join(", ")
            )));
        }
        if self.samples.fit < 2 {
            return Err(CliError::Format("samples.fit must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.masking.p) {
            return Err(CliError::Format("masking.p must be in [0, 1]".into()));
        }
        if !(self.ifid_fraction > 0.0 && self.ifid_fraction <= 1.0) {
            return Err(CliError::Format("ifid_fraction must be in (0, 1]".into()));
        }
        if !(self.fjd_alpha.is_finite() && self.fjd_alpha >= 0.0) {
            return Err(CliError::Format("fjd_alpha must be >= 0".into()));
        }
        if self.psi_sweep.is_empty() || self.psi_sweep.iter().any(|p| !p.is_finite()) {
            return Err(CliError::Format(
                "psi_sweep must be a non-empty list of finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn model_config(&self, c_dim: usize) -> ModelConfig {
        ModelConfig {
            z_dim: self.dims.z,
            c_dim,
            w_dim: self.dims.w,
            image_dim: self.dims.image,
            mapping_depth: self.mapping_depth,
            synthesis_depth: self.synthesis_depth,
            condition_gain: self.condition_gain,
            seed: self.seed,
        }
    }
}
