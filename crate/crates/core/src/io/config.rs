//! Pipeline configuration loaded from TOML. Unknown keys are rejected and
//! every omitted key takes its documented default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::SolverOptions;
use crate::clipper::{DEFAULT_TIERS, SMOOTHING_WINDOW};
use crate::conditioning::OcclusionParams;
use crate::error::{invalid, Result};
use crate::geoembed::{EncodingSpec, MaskMode, DEFAULT_LN_EPS, DEFAULT_MASK_RATE};
use crate::geometry::DEFAULT_SIGMA;
use crate::tracking::TrackerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Image pixels per latent grid cell.
    pub scale: f64,
    /// Heatmap bandwidth in grid cells.
    pub sigma: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { scale: 8.0, sigma: DEFAULT_SIGMA }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub encoding: EncodingSpec,
    pub id_dim: usize,
    pub table_size: usize,
    pub hidden_dim: usize,
    pub geo_dim: usize,
    /// `[kt, kh, kw]`.
    pub kernel: [usize; 3],
    pub out_channels: usize,
    pub ln_eps: f64,
    pub table_seed: u64,
    pub mlp_seed: u64,
    pub head_seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            encoding: EncodingSpec::default(),
            id_dim: 16,
            table_size: 42,
            hidden_dim: 64,
            geo_dim: 32,
            kernel: [3, 3, 3],
            out_channels: 16,
            ln_eps: DEFAULT_LN_EPS,
            table_seed: 1,
            mlp_seed: 2,
            head_seed: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClipConfig {
    pub thresholds: Vec<u32>,
    pub smoothing_window: usize,
    /// Allow several non-overlapping clips per episode.
    pub multi: bool,
    pub max_clips: usize,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self { thresholds: DEFAULT_TIERS.to_vec(), smoothing_window: SMOOTHING_WINDOW, multi: false, max_clips: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignScope {
    /// One similarity transform per frame and hand.
    #[default]
    PerFrameHand,
    /// One similarity transform per hand over the whole sequence.
    PerSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub align: bool,
    pub align_scope: AlignScope,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { align: true, align_scope: AlignScope::PerFrameHand }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskConfig {
    pub rate: f64,
    pub seed: u64,
    pub mode: MaskMode,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self { rate: DEFAULT_MASK_RATE, seed: 0, mode: MaskMode::WholeJoint }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub grid: GridConfig,
    pub occlusion: OcclusionParams,
    pub embedding: EmbeddingConfig,
    pub tracker: TrackerConfig,
    pub solver: SolverOptions,
    pub clip: ClipConfig,
    pub metrics: MetricsConfig,
    pub mask: MaskConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid.scale > 0.0 && self.grid.sigma > 0.0) {
            return Err(invalid("grid scale and sigma must be positive"));
        }
        self.occlusion.validate()?;
        self.embedding.encoding.validate()?;
        let e = &self.embedding;
        if e.id_dim == 0 || e.hidden_dim == 0 || e.geo_dim == 0 || e.out_channels == 0 {
            return Err(invalid("embedding dimensions must be positive"));
        }
        if e.table_size == 0 {
            return Err(invalid("identity table needs at least one row"));
        }
        if e.kernel[0] == 0 || e.kernel[1] % 2 == 0 || e.kernel[2] % 2 == 0 {
            return Err(invalid("kernel needs kt >= 1 and odd kh, kw"));
        }
        if !(e.ln_eps > 0.0) {
            return Err(invalid("ln_eps must be positive"));
        }
        self.tracker.validate()?;
        if self.clip.thresholds.windows(2).any(|w| w[0] <= w[1]) {
            return Err(invalid("clip thresholds must be strictly decreasing"));
        }
        if self.clip.smoothing_window % 2 == 0 {
            return Err(invalid("clip smoothing window must be odd"));
        }
        if !(0.0..=1.0).contains(&self.mask.rate) {
            return Err(invalid("mask rate must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
