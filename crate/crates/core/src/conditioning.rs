//! Occlusion-removed context aggregation on the source latent and
//! depth-ordered propagation of the resulting joint features to target
//! frames.
//!
//! Joints that are invalid (behind the camera, masked, or missing) are
//! removed from both roles of the occlusion penalty and from the per-cell
//! softmax instead of receiving sentinel depths.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::field::{FeatureMap, Volume};
use crate::geometry::{Heatmap, ProjectedJoint, DEFAULT_SIGMA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcclusionParams {
    /// Spatial overlap bandwidth in grid cells.
    pub tau: f64,
    /// Sharpness of the depth-ordering sigmoid.
    pub gamma_depth: f64,
    /// Disparity scale in the soft Z-buffer logits.
    pub lambda_depth: f64,
    pub epsilon: f64,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self { tau: DEFAULT_SIGMA, gamma_depth: 50.0, lambda_depth: 1.0, epsilon: 1e-6 }
    }
}

impl OcclusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.gamma_depth > 0.0 && self.epsilon > 0.0) {
            return Err(invalid("occlusion params need tau, gamma_depth, epsilon > 0"));
        }
        if !self.lambda_depth.is_finite() {
            return Err(invalid("lambda_depth must be finite"));
        }
        Ok(())
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Pairwise penalty `P[i][j]`: likelihood that joint `j` hides joint `i`.
///
/// `joints[k].u` must already be in grid coordinates. Rows and columns of
/// invalid joints are zero, as is the diagonal.
pub fn occlusion_penalty(joints: &[ProjectedJoint], params: &OcclusionParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let n = joints.len();
    let inv = 1.0 / (2.0 * params.tau * params.tau);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (&joints[i], &joints[j]);
        if i == j || !a.valid || !b.valid {
            return 0.0;
        }
        let du = a.u[0] - b.u[0];
        let dv = a.u[1] - b.u[1];
        (-(du * du + dv * dv) * inv).exp() * sigmoid(params.gamma_depth * (b.d - a.d))
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointFeature {
    pub vector: Vec<f64>,
    /// Gate value `1 - max_j P[i][j]`.
    pub visibility: f64,
    /// Set when the joint's heatmap has no mass on the grid; the vector is zero.
    pub empty_support: bool,
}

impl JointFeature {
    pub fn zero(channels: usize) -> Self {
        Self { vector: vec![0.0; channels], visibility: 0.0, empty_support: false }
    }

    pub fn norm(&self) -> f64 {
        self.vector.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Gated, heatmap-normalized average of the source latent around each joint.
pub fn aggregate_context(
    latent: &FeatureMap,
    heatmaps: &[Heatmap],
    penalty: &DMatrix<f64>,
    epsilon: f64,
) -> Result<Vec<JointFeature>> {
    let n = heatmaps.len();
    if penalty.nrows() != n || penalty.ncols() != n {
        return Err(shape(format!("penalty is {}x{}, expected {n}x{n}", penalty.nrows(), penalty.ncols())));
    }
    if heatmaps.iter().any(|h| h.gh != latent.gh || h.gw != latent.gw) {
        return Err(shape("heatmaps must share the latent grid"));
    }
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    let cells = latent.plane_len();
    let features = heatmaps
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let occlusion = (0..n).filter(|&j| j != i).map(|j| penalty[(i, j)]).fold(0.0, f64::max);
            let gate = 1.0 - occlusion;
            let mass = h.sum();
            if mass <= epsilon {
                return JointFeature {
                    vector: vec![0.0; latent.channels],
                    visibility: gate,
                    empty_support: true,
                };
            }
            let norm = 1.0 / (mass + epsilon);
            let vector = (0..latent.channels)
                .map(|c| {
                    let plane = latent.plane(c);
                    let pooled: f64 = (0..cells).map(|x| h.values[x] * norm * plane[x]).sum();
                    gate * pooled
                })
                .collect();
            JointFeature { vector, visibility: gate, empty_support: false }
        })
        .collect();
    Ok(features)
}

/// Per-cell soft Z-buffer weights, `N x gh x gw`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionField {
    pub joints: usize,
    pub gh: usize,
    pub gw: usize,
    /// Joint-major: `weights[i * cells + x]`.
    pub weights: Vec<f64>,
    /// Joints that took part in the softmax.
    pub included: Vec<bool>,
}

impl AttentionField {
    pub fn cells(&self) -> usize {
        self.gh * self.gw
    }

    #[inline]
    pub fn weight(&self, joint: usize, cell: usize) -> f64 {
        self.weights[joint * self.cells() + cell]
    }
}

fn check_frame(heatmaps: &[Heatmap], disparities: &[Option<f64>]) -> Result<(usize, usize)> {
    if heatmaps.len() != disparities.len() {
        return Err(shape(format!("{} heatmaps but {} disparities", heatmaps.len(), disparities.len())));
    }
    let first = heatmaps.first().ok_or_else(|| invalid("at least one joint is required"))?;
    if heatmaps.iter().any(|h| h.gh != first.gh || h.gw != first.gw) {
        return Err(shape("heatmaps must share one grid"));
    }
    Ok((first.gh, first.gw))
}

/// Softmax over joints of `log(M_i(x) + eps) + lambda * d_i`.
///
/// `None` disparities mark excluded joints: they get zero weight. When every
/// joint is excluded all weights are zero.
pub fn depth_weight_field(
    heatmaps: &[Heatmap],
    disparities: &[Option<f64>],
    params: &OcclusionParams,
) -> Result<AttentionField> {
    params.validate()?;
    let (gh, gw) = check_frame(heatmaps, disparities)?;
    let n = heatmaps.len();
    let cells = gh * gw;
    let included: Vec<bool> = disparities.iter().map(Option::is_some).collect();
    let mut weights = vec![0.0; n * cells];
    let mut logits = vec![0.0; n];
    for x in 0..cells {
        let mut peak = f64::NEG_INFINITY;
        for (i, d) in disparities.iter().enumerate() {
            if let Some(d) = d {
                logits[i] = (heatmaps[i].values[x] + params.epsilon).ln() + params.lambda_depth * d;
                peak = peak.max(logits[i]);
            }
        }
        if peak == f64::NEG_INFINITY {
            continue;
        }
        let mut total = 0.0;
        for i in 0..n {
            if included[i] {
                let e = (logits[i] - peak).exp();
                weights[i * cells + x] = e;
                total += e;
            }
        }
        for i in 0..n {
            weights[i * cells + x] /= total;
        }
    }
    Ok(AttentionField { joints: n, gh, gw, weights, included })
}

/// Analytic Jacobian `dA_i(x) / dd_k` at one cell: `lambda * A_i * (delta_ik - A_k)`.
/// Rows and columns of excluded joints are zero.
pub fn depth_weight_jacobian(field: &AttentionField, cell: usize, lambda_depth: f64) -> DMatrix<f64> {
    let n = field.joints;
    DMatrix::from_fn(n, n, |i, k| {
        if !field.included[i] || !field.included[k] {
            return 0.0;
        }
        let ai = field.weight(i, cell);
        let ak = field.weight(k, cell);
        lambda_depth * ai * (if i == k { 1.0 } else { 0.0 } - ak)
    })
}

/// One frame of the motion volume:
/// `F(x) = (sum_i A_i(x) f_i) * (sum_j M_j(x))`, summing opacity over
/// included joints only.
pub fn propagate_motion(
    features: &[JointFeature],
    attention: &AttentionField,
    heatmaps: &[Heatmap],
) -> Result<FeatureMap> {
    let n = attention.joints;
    if features.len() != n || heatmaps.len() != n {
        return Err(shape(format!(
            "{} features, {} heatmaps, {} attention joints",
            features.len(),
            heatmaps.len(),
            n
        )));
    }
    if heatmaps.iter().any(|h| h.gh != attention.gh || h.gw != attention.gw) {
        return Err(shape("heatmaps and attention must share one grid"));
    }
    let channels = features.first().map_or(0, |f| f.vector.len());
    if features.iter().any(|f| f.vector.len() != channels) {
        return Err(shape("joint features must share one channel count"));
    }
    let cells = attention.cells();
    let mut out = FeatureMap::zeros(channels, attention.gh, attention.gw);
    let mut mixed = vec![0.0; channels];
    for x in 0..cells {
        let opacity: f64 = (0..n).filter(|&j| attention.included[j]).map(|j| heatmaps[j].values[x]).sum();
        if opacity == 0.0 {
            continue;
        }
        mixed.iter_mut().for_each(|m| *m = 0.0);
        for (i, f) in features.iter().enumerate() {
            let a = attention.weight(i, x);
            if a == 0.0 {
                continue;
            }
            for (m, v) in mixed.iter_mut().zip(&f.vector) {
                *m += a * v;
            }
        }
        for (c, m) in mixed.iter().enumerate() {
            out.data[c * cells + x] = m * opacity;
        }
    }
    Ok(out)
}

/// Number of latent frames produced from `t` source frames.
pub fn compressed_len(t: usize) -> usize {
    if t == 0 {
        0
    } else {
        1 + (t - 1).div_ceil(4)
    }
}

/// Keeps frame 0 and averages each following group of up to four frames.
pub fn compress_temporal(volume: &Volume) -> Result<Volume> {
    let first = volume.frames.first().ok_or_else(|| invalid("temporal compression needs T >= 1"))?;
    let mut frames = vec![first.clone()];
    for group in volume.frames[1..].chunks(4) {
        let mut acc = FeatureMap::zeros(first.channels, first.gh, first.gw);
        for f in group {
            for (a, v) in acc.data.iter_mut().zip(&f.data) {
                *a += v;
            }
        }
        let k = group.len() as f64;
        acc.data.iter_mut().for_each(|a| *a /= k);
        frames.push(acc);
    }
    Volume::new(frames)
}

/// Builds the condition tensor `y`: reference features at frame 0, compressed
/// motion at every later frame.
pub fn inject_condition(reference: &FeatureMap, compressed_motion: &Volume) -> Result<Volume> {
    if compressed_motion.is_empty() {
        return Volume::new(vec![reference.clone()]);
    }
    let [_, c, gh, gw] = compressed_motion.dims();
    if (reference.channels, reference.gh, reference.gw) != (c, gh, gw) {
        return Err(shape(format!(
            "reference is {}x{}x{}, motion frames are {c}x{gh}x{gw}",
            reference.channels, reference.gh, reference.gw
        )));
    }
    let mut frames = Vec::with_capacity(compressed_motion.len());
    frames.push(reference.clone());
    frames.extend(compressed_motion.frames[1..].iter().cloned());
    Volume::new(frames)
}
