//! The 3D geometric embedding stream: coordinate encodings fused with joint
//! identities, splatted onto the grid and passed through a causal
//! convolutional head. Also hosts stochastic joint masking.

mod embedding;
mod encoding;
mod head;
mod mask;

pub use embedding::{joint_embedding, Activation, IdentityTable, MlpProjector};
pub use encoding::{sincos_encode, EncodingSpec};
pub use head::{causal_head, layer_norm_channels, CausalConvHead, DEFAULT_LN_EPS};
pub use mask::{mask_joints, select_joints, MaskMode, DEFAULT_MASK_RATE};

use crate::error::{shape, Result};
use crate::field::FeatureMap;
use crate::geometry::Heatmap;

/// `F_geo(x) = sum_i M_i(x) z_i`.
pub fn splat_geo(embeddings: &[Vec<f64>], heatmaps: &[Heatmap]) -> Result<FeatureMap> {
    if embeddings.len() != heatmaps.len() {
        return Err(shape(format!("{} embeddings for {} heatmaps", embeddings.len(), heatmaps.len())));
    }
    let Some(first) = heatmaps.first() else {
        return Err(shape("splatting needs at least one heatmap to fix the grid"));
    };
    let dim = embeddings[0].len();
    if embeddings.iter().any(|z| z.len() != dim) {
        return Err(shape("embeddings must share one length"));
    }
    if heatmaps.iter().any(|h| h.gh != first.gh || h.gw != first.gw) {
        return Err(shape("heatmaps must share one grid"));
    }
    let cells = first.gh * first.gw;
    let mut out = FeatureMap::zeros(dim, first.gh, first.gw);
    for (z, h) in embeddings.iter().zip(heatmaps) {
        for (c, zc) in z.iter().enumerate() {
            let plane = &mut out.data[c * cells..(c + 1) * cells];
            for (o, m) in plane.iter_mut().zip(&h.values) {
                *o += m * zc;
            }
        }
    }
    Ok(out)
}
