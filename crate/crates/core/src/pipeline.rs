//! End-to-end construction of the conditioning tensors from a source latent
//! and a joint trajectory.
//!
//! Frame 0 of the trajectory is the source frame: joint features are pooled
//! from the latent there. Every frame `t` then gets a motion frame (features
//! carried to the frame-`t` joint locations through the soft Z-buffer) and a
//! geometric frame (joint embeddings splatted on the grid). Both volumes are
//! temporally compressed; the condition tensor takes the latent at index 0
//! and compressed motion afterwards, and the head fuses both streams.

use serde::{Deserialize, Serialize};

use crate::conditioning::{
    aggregate_context, compress_temporal, depth_weight_field, inject_condition, occlusion_penalty,
    propagate_motion, JointFeature,
};
use crate::error::{invalid, shape, Result};
use crate::field::{FeatureMap, Volume};
use crate::geoembed::{causal_head, joint_embedding, sincos_encode, splat_geo, CausalConvHead, IdentityTable, MlpProjector};
use crate::geometry::{gaussian_heatmap, GridSpec, Heatmap, ProjectedJoint};
use crate::io::PipelineConfig;
use crate::trajectory::{Handedness, JointInfo, JointTrajectory};

/// Identity rows reserved per hand.
pub const IDS_PER_HAND: u32 = 21;

/// Row of the identity table for a joint: left hand first, then right.
pub fn identity_index(info: &JointInfo) -> Result<usize> {
    if info.semantic_id >= IDS_PER_HAND {
        return Err(invalid(format!("semantic id {} exceeds {}", info.semantic_id, IDS_PER_HAND - 1)));
    }
    let offset = match info.handedness {
        Handedness::Left => 0,
        Handedness::Right => IDS_PER_HAND,
    };
    Ok((offset + info.semantic_id) as usize)
}

/// Per-frame outputs before temporal compression.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFields {
    pub motion: FeatureMap,
    pub geo: FeatureMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionOutputs {
    /// Condition tensor injected into the generator, `T' x C x gh x gw`.
    pub condition: Volume,
    /// Compressed motion volume.
    pub motion: Volume,
    /// Compressed geometric volume.
    pub geo: Volume,
    /// Fused geometric condition from the causal head.
    pub c_geo: Volume,
    pub features: Vec<JointFeature>,
}

/// Summary written next to the tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub source_frames: usize,
    pub latent_frames: usize,
    pub joints: usize,
    pub grid: [usize; 2],
    pub latent_channels: usize,
    pub geo_channels: usize,
    pub head_channels: usize,
    pub visible_joints: usize,
    pub empty_support_joints: usize,
}

/// All learned-or-seeded modules plus the grid, built once per run.
#[derive(Debug, Clone)]
pub struct ConditionPipeline {
    pub config: PipelineConfig,
    pub grid: GridSpec,
    pub table: IdentityTable,
    pub mlp: MlpProjector,
    pub head: CausalConvHead,
}

impl ConditionPipeline {
    pub fn new(config: &PipelineConfig, latent_channels: usize, gh: usize, gw: usize) -> Result<Self> {
        config.validate()?;
        let e = &config.embedding;
        let grid = GridSpec::new(gh, gw, config.grid.scale)?;
        let table = IdentityTable::new(e.table_size, e.id_dim, e.table_seed);
        let mlp = MlpProjector::new(e.encoding.output_len() + e.id_dim, e.hidden_dim, e.geo_dim, e.mlp_seed);
        let mut head = CausalConvHead::new(e.geo_dim + latent_channels, e.out_channels, e.kernel, e.head_seed)?;
        head.ln_eps = e.ln_eps;
        Ok(Self { config: config.clone(), grid, table, mlp, head })
    }

    /// Grid-space projections and heatmaps of one trajectory frame.
    pub fn frame_heatmaps(&self, traj: &JointTrajectory, t: usize) -> Result<(Vec<ProjectedJoint>, Vec<Heatmap>)> {
        let projected: Vec<ProjectedJoint> =
            traj.project_frame(t).iter().map(|p| self.grid.to_grid(p)).collect();
        let heatmaps = projected
            .iter()
            .map(|p| {
                if p.valid {
                    gaussian_heatmap(p.u, self.config.grid.sigma, &self.grid)
                } else {
                    Ok(Heatmap::zeros(&self.grid))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((projected, heatmaps))
    }

    /// Pools joint features from the source latent at trajectory frame 0.
    /// Joints invalid at the source carry zero features.
    pub fn source_features(&self, traj: &JointTrajectory, latent: &FeatureMap) -> Result<Vec<JointFeature>> {
        if traj.num_frames() == 0 {
            return Err(invalid("trajectory has no frames"));
        }
        if !latent.matches_grid(&self.grid) {
            return Err(shape("latent does not match the pipeline grid"));
        }
        let (projected, heatmaps) = self.frame_heatmaps(traj, 0)?;
        let penalty = occlusion_penalty(&projected, &self.config.occlusion)?;
        let mut features = aggregate_context(latent, &heatmaps, &penalty, self.config.occlusion.epsilon)?;
        for (f, p) in features.iter_mut().zip(&projected) {
            if !p.valid {
                *f = JointFeature::zero(latent.channels);
            }
        }
        Ok(features)
    }

    /// Motion and geometric frames for trajectory frame `t`.
    pub fn frame(&self, traj: &JointTrajectory, t: usize, features: &[JointFeature]) -> Result<FrameFields> {
        let (projected, heatmaps) = self.frame_heatmaps(traj, t)?;
        let disparities: Vec<Option<f64>> = projected.iter().map(|p| p.valid.then_some(p.d)).collect();
        let attention = depth_weight_field(&heatmaps, &disparities, &self.config.occlusion)?;
        let motion = propagate_motion(features, &attention, &heatmaps)?;

        let e = &self.config.embedding;
        let mut embeddings = Vec::new();
        let mut maps = Vec::new();
        for ((p, h), info) in projected.iter().zip(&heatmaps).zip(&traj.joints) {
            if !p.valid {
                continue;
            }
            let enc = sincos_encode(p.u, p.d, &e.encoding);
            embeddings.push(joint_embedding(&enc, identity_index(info)?, &self.table, &self.mlp)?);
            maps.push(h.clone());
        }
        let geo = if maps.is_empty() {
            FeatureMap::zeros(e.geo_dim, self.grid.gh, self.grid.gw)
        } else {
            splat_geo(&embeddings, &maps)?
        };
        Ok(FrameFields { motion, geo })
    }

    /// Compresses per-frame fields and assembles every output tensor.
    pub fn finish(&self, latent: &FeatureMap, features: Vec<JointFeature>, frames: Vec<FrameFields>) -> Result<ConditionOutputs> {
        let (motion, geo): (Vec<_>, Vec<_>) = frames.into_iter().map(|f| (f.motion, f.geo)).unzip();
        let motion = compress_temporal(&Volume::new(motion)?)?;
        let geo = compress_temporal(&Volume::new(geo)?)?;
        let condition = inject_condition(latent, &motion)?;
        let c_geo = causal_head(&geo, &motion, &self.head)?;
        Ok(ConditionOutputs { condition, motion, geo, c_geo, features })
    }

    /// Sequential end-to-end run.
    pub fn run(&self, traj: &JointTrajectory, latent: &FeatureMap) -> Result<ConditionOutputs> {
        traj.validate()?;
        let features = self.source_features(traj, latent)?;
        let frames = (0..traj.num_frames())
            .map(|t| self.frame(traj, t, &features))
            .collect::<Result<Vec<_>>>()?;
        self.finish(latent, features, frames)
    }
}

impl ConditionOutputs {
    pub fn summary(&self, source_frames: usize) -> ConditionSummary {
        let [t, c, gh, gw] = self.condition.dims();
        ConditionSummary {
            source_frames,
            latent_frames: t,
            joints: self.features.len(),
            grid: [gh, gw],
            latent_channels: c,
            geo_channels: self.geo.channels(),
            head_channels: self.c_geo.channels(),
            visible_joints: self.features.iter().filter(|f| f.visibility > 0.5).count(),
            empty_support_joints: self.features.iter().filter(|f| f.empty_support).count(),
        }
    }
}
