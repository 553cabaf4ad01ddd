//! Geometry-conditioned video generation toolkit: hand-trajectory
//! conditioning of video latents, bimanual tracking, robot-camera
//! calibration, clip selection and evaluation metrics.

pub mod calibration;
pub mod clipper;
pub mod conditioning;
pub mod error;
pub mod field;
pub mod geoembed;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod tracking;
pub mod trajectory;

pub use error::{Error, Result};
pub use field::{FeatureMap, Volume};
pub use geometry::{CameraIntrinsics, GridSpec, Heatmap, Mat3, ProjectedJoint, RigidPose, Vec3};
pub use io::{PipelineConfig, Tensor};
pub use pipeline::{ConditionOutputs, ConditionPipeline};
pub use trajectory::{FrameRecord, Handedness, JointInfo, JointTrajectory};
