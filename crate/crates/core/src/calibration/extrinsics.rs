//! Camera-from-root registration: reprojection residuals, bounded solve and
//! batch projection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::solver::{solve_bounded_least_squares, SolveReport, SolverOptions};
use crate::error::{invalid, structure, Result};
use crate::geometry::{project, CameraIntrinsics, RigidPose, Vec3, Z_MIN};

pub const DEFAULT_ANGLE_HALF_RANGE: f64 = 0.5;
pub const DEFAULT_TRANSLATION_HALF_RANGE: f64 = 0.3;
/// Scale of the residual substituted for annotations that land behind the camera.
pub const BEHIND_CAMERA_PENALTY: f64 = 1e4;

/// `[pitch, yaw, roll, tx, ty, tz]` with per-component box bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrinsicParams {
    pub theta: [f64; 6],
    pub bounds: [[f64; 2]; 6],
}

impl ExtrinsicParams {
    /// Default box around a nominal mount, starting at the box midpoint.
    pub fn around(nominal: [f64; 6]) -> Self {
        let mut bounds = [[0.0; 2]; 6];
        for (i, b) in bounds.iter_mut().enumerate() {
            let half = if i < 3 { DEFAULT_ANGLE_HALF_RANGE } else { DEFAULT_TRANSLATION_HALF_RANGE };
            *b = [nominal[i] - half, nominal[i] + half];
        }
        Self::at_midpoint(bounds)
    }

    pub fn at_midpoint(bounds: [[f64; 2]; 6]) -> Self {
        Self { theta: bounds.map(|[lo, hi]| 0.5 * (lo + hi)), bounds }
    }

    pub fn lower(&self) -> [f64; 6] {
        self.bounds.map(|b| b[0])
    }

    pub fn upper(&self) -> [f64; 6] {
        self.bounds.map(|b| b[1])
    }

    pub fn pose(&self) -> RigidPose {
        RigidPose::from_params(&self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (t, [lo, hi])) in self.theta.iter().zip(self.bounds).enumerate() {
            if !(lo <= hi) || !(lo <= *t && *t <= hi) {
                return Err(invalid(format!("extrinsic component {i} = {t} violates bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// A human-clicked pixel for one keypoint in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub frame: u64,
    pub joint_id: usize,
    pub u_star: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<u32>,
}

/// Root-frame keypoints per frame index.
pub type KeypointFrames = BTreeMap<u64, Vec<Vec3>>;

/// Fails with a message naming the first annotation whose frame or joint is missing.
pub fn check_annotations(annotations: &[Annotation], keypoints: &KeypointFrames) -> Result<()> {
    for a in annotations {
        let Some(points) = keypoints.get(&a.frame) else {
            return Err(structure(format!("annotation references frame {} with no joint configuration", a.frame)));
        };
        if a.joint_id >= points.len() {
            return Err(structure(format!(
                "annotation references joint {} in frame {}, but the chain has {} keypoints",
                a.joint_id,
                a.frame,
                points.len()
            )));
        }
        if !a.u_star.iter().all(|v| v.is_finite()) {
            return Err(invalid(format!("annotation for joint {} in frame {} is not finite", a.joint_id, a.frame)));
        }
    }
    Ok(())
}

/// Stacked `u* - pi(R p + t)` residuals, two per annotation.
///
/// A transformed point with `z <= Z_MIN` contributes
/// `BEHIND_CAMERA_PENALTY * (Z_MIN - z + 1)` in both coordinates.
pub fn reprojection_residuals(
    theta: &[f64; 6],
    annotations: &[Annotation],
    keypoints: &KeypointFrames,
    k: &CameraIntrinsics,
) -> Result<Vec<f64>> {
    check_annotations(annotations, keypoints)?;
    Ok(residuals_unchecked(theta, annotations, keypoints, k))
}

fn residuals_unchecked(
    theta: &[f64; 6],
    annotations: &[Annotation],
    keypoints: &KeypointFrames,
    k: &CameraIntrinsics,
) -> Vec<f64> {
    let pose = RigidPose::from_params(theta);
    let mut r = Vec::with_capacity(2 * annotations.len());
    for a in annotations {
        let p = pose.apply(&keypoints[&a.frame][a.joint_id]);
        if p.z <= Z_MIN {
            let penalty = BEHIND_CAMERA_PENALTY * (Z_MIN - p.z + 1.0);
            r.extend_from_slice(&[penalty, penalty]);
        } else {
            let pj = project(&p, k);
            r.push(a.u_star[0] - pj.u[0]);
            r.push(a.u_star[1] - pj.u[1]);
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: ExtrinsicParams,
    pub report: SolveReport,
    pub residuals: Vec<f64>,
    /// Root mean square of per-annotation pixel errors.
    pub rms_px: f64,
}

/// Fits the extrinsics to the annotations within the parameter box.
pub fn solve_extrinsics(
    annotations: &[Annotation],
    keypoints: &KeypointFrames,
    k: &CameraIntrinsics,
    initial: &ExtrinsicParams,
    opts: &SolverOptions,
) -> Result<CalibrationResult> {
    initial.validate()?;
    k.validate()?;
    check_annotations(annotations, keypoints)?;
    if annotations.is_empty() {
        return Err(invalid("calibration needs at least one annotation"));
    }
    let f = |x: &[f64]| {
        let theta: [f64; 6] = x.try_into().expect("six parameters");
        residuals_unchecked(&theta, annotations, keypoints, k)
    };
    let report = solve_bounded_least_squares(f, &initial.theta, &initial.lower(), &initial.upper(), opts)?;
    let theta: [f64; 6] = report.x.as_slice().try_into().expect("six parameters");
    let residuals = residuals_unchecked(&theta, annotations, keypoints, k);
    let rms_px = (report.cost / annotations.len() as f64).sqrt();
    Ok(CalibrationResult { params: ExtrinsicParams { theta, bounds: initial.bounds }, report, residuals, rms_px })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraKeypoint {
    pub p_c: [f64; 3],
    pub pixel: [f64; 2],
    pub disparity: f64,
    pub in_bounds: bool,
}

/// Moves every frame's root-frame keypoints into the camera and projects them.
pub fn batch_project(
    theta: &[f64; 6],
    keypoints: &KeypointFrames,
    k: &CameraIntrinsics,
) -> BTreeMap<u64, Vec<CameraKeypoint>> {
    let pose = RigidPose::from_params(theta);
    keypoints
        .iter()
        .map(|(&frame, pts)| {
            let projected = pts
                .iter()
                .map(|p| {
                    let pc = pose.apply(p);
                    let pj = project(&pc, k);
                    CameraKeypoint {
                        p_c: [pc.x, pc.y, pc.z],
                        pixel: pj.u,
                        disparity: pj.d,
                        in_bounds: pj.valid && k.contains(pj.u),
                    }
                })
                .collect();
            (frame, projected)
        })
        .collect()
}
