//! Robot-hand registration into the egocentric camera: forward kinematics of
//! rigid chains, bounded extrinsic fitting to annotated pixels, and batch
//! projection of whole episodes.

mod chain;
mod extrinsics;
mod solver;

pub use chain::{
    forward_kinematics, keypoints_per_side, JointKind, JointSpec, Keypoint, KinematicChain, Link, Origin,
};
pub use extrinsics::{
    batch_project, check_annotations, reprojection_residuals, solve_extrinsics, Annotation, CalibrationResult,
    CameraKeypoint, ExtrinsicParams, KeypointFrames, BEHIND_CAMERA_PENALTY, DEFAULT_ANGLE_HALF_RANGE,
    DEFAULT_TRANSLATION_HALF_RANGE,
};
pub use solver::{
    forward_jacobian, numeric_jacobian, solve_bounded_least_squares, ConvergenceStatus, SolveReport,
    SolverOptions,
};

use serde::{Deserialize, Serialize};

/// One line of a joint-configuration series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigRecord {
    pub frame: u64,
    pub q: Vec<f64>,
}
