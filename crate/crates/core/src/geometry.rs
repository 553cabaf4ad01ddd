//! Pinhole camera model, rigid transforms and Gaussian heatmaps on the
//! conditioning grid.
//!
//! Depth is in meters and disparity is `1/z` in inverse meters everywhere in
//! the crate. Grid coordinates are `(x, y) = (column, row)` with cell centers
//! at integer coordinates.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Points at or closer than this depth (meters) are treated as behind the camera.
pub const Z_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(invalid("intrinsics need finite fx > 0 and fy > 0"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid("image size must be non-zero"));
        }
        if !(0.0..f64::from(self.width)).contains(&self.cx)
            || !(0.0..f64::from(self.height)).contains(&self.cy)
        {
            return Err(invalid("principal point must lie inside the image"));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// True when a pixel lies in `[0, width) x [0, height)`.
    pub fn contains(&self, u: [f64; 2]) -> bool {
        u[0] >= 0.0 && u[0] < f64::from(self.width) && u[1] >= 0.0 && u[1] < f64::from(self.height)
    }
}

/// A joint after perspective projection.
///
/// `u` is in pixels straight out of [`project`]; the conditioning stages work
/// with the same struct after [`GridSpec::to_grid`] has rescaled `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedJoint {
    pub u: [f64; 2],
    /// Inverse depth in 1/m.
    pub d: f64,
    pub valid: bool,
}

impl ProjectedJoint {
    pub const INVALID: ProjectedJoint = ProjectedJoint { u: [0.0, 0.0], d: 0.0, valid: false };
}

/// Perspective projection to pixel coordinates and disparity.
///
/// Points with `z <= Z_MIN` come back with `valid = false`; their `u` and `d`
/// are still the raw formula values when finite.
pub fn project(p: &Vec3, k: &CameraIntrinsics) -> ProjectedJoint {
    if !(p.z > Z_MIN) || !p.iter().all(|v| v.is_finite()) {
        let (u, d) = if p.z != 0.0 && p.z.is_finite() {
            ([k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy], 1.0 / p.z)
        } else {
            ([0.0, 0.0], 0.0)
        };
        return ProjectedJoint { u, d, valid: false };
    }
    let inv_z = 1.0 / p.z;
    ProjectedJoint {
        u: [k.fx * p.x * inv_z + k.cx, k.fy * p.y * inv_z + k.cy],
        d: inv_z,
        valid: true,
    }
}

/// Inverse of [`project`] for a valid pixel/disparity pair.
pub fn unproject(u: [f64; 2], d: f64, k: &CameraIntrinsics) -> Vec3 {
    let z = 1.0 / d;
    Vec3::new((u[0] - k.cx) * z / k.fx, (u[1] - k.cy) * z / k.fy, z)
}

/// Rotation from Euler angles, composed as `Rz(roll) * Ry(yaw) * Rx(pitch)`.
pub fn euler_to_rotation(pitch: f64, yaw: f64, roll: f64) -> Mat3 {
    rot_z(roll) * rot_y(yaw) * rot_x(pitch)
}

pub fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation about an arbitrary unit axis (Rodrigues).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    let k = Mat3::new(0.0, -axis.z, axis.y, axis.z, 0.0, -axis.x, -axis.y, axis.x, 0.0);
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidPose {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self { rotation: Mat3::identity(), translation: t }
    }

    /// `[pitch, yaw, roll, tx, ty, tz]`.
    pub fn from_params(theta: &[f64; 6]) -> Self {
        Self {
            rotation: euler_to_rotation(theta[0], theta[1], theta[2]),
            translation: Vec3::new(theta[3], theta[4], theta[5]),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Checks `R^T R = I` and `det R = +1` to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let ortho = (self.rotation.transpose() * self.rotation - Mat3::identity()).abs().max();
        ortho <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

pub fn apply_pose(pose: &RigidPose, p: &Vec3) -> Vec3 {
    pose.apply(p)
}

/// Shape of the conditioning grid and its relation to image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub gh: usize,
    pub gw: usize,
    /// Image pixels per grid cell.
    pub scale: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { gh: 60, gw: 104, scale: 8.0 }
    }
}

impl GridSpec {
    pub fn new(gh: usize, gw: usize, scale: f64) -> Result<Self> {
        let g = Self { gh, gw, scale };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gh == 0 || self.gw == 0 {
            return Err(invalid("grid must have at least one cell"));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(invalid("grid scale must be positive"));
        }
        Ok(())
    }

    /// Grid covering an image at this spec's scale (rounded up).
    pub fn for_image(k: &CameraIntrinsics, scale: f64) -> Result<Self> {
        Self::new(
            (f64::from(k.height) / scale).ceil() as usize,
            (f64::from(k.width) / scale).ceil() as usize,
            scale,
        )
    }

    pub fn cells(&self) -> usize {
        self.gh * self.gw
    }

    /// Maps a pixel coordinate onto grid coordinates so that the pixel
    /// block of cell `c` is centered on grid coordinate `c`.
    pub fn pixel_to_grid(&self, u: [f64; 2]) -> [f64; 2] {
        [(u[0] + 0.5) / self.scale - 0.5, (u[1] + 0.5) / self.scale - 0.5]
    }

    /// Rescales a pixel-space projected joint into grid space. Disparity and
    /// validity are untouched.
    pub fn to_grid(&self, p: &ProjectedJoint) -> ProjectedJoint {
        ProjectedJoint { u: self.pixel_to_grid(p.u), ..*p }
    }
}

/// Gaussian weight field `exp(-|x - center|^2 / (2 sigma^2))` sampled at
/// cell centers, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub gh: usize,
    pub gw: usize,
    pub center: [f64; 2],
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { gh: grid.gh, gw: grid.gw, center: [f64::NAN, f64::NAN], values: vec![0.0; grid.cells()] }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.gw + col]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub const DEFAULT_SIGMA: f64 = 1.5;

pub fn gaussian_heatmap(center: [f64; 2], sigma: f64, grid: &GridSpec) -> Result<Heatmap> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("heatmap sigma must be positive, got {sigma}")));
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut values = Vec::with_capacity(grid.cells());
    for row in 0..grid.gh {
        let dy = row as f64 - center[1];
        for col in 0..grid.gw {
            let dx = col as f64 - center[0];
            values.push((-(dx * dx + dy * dy) * inv).exp());
        }
    }
    Ok(Heatmap { gh: grid.gh, gw: grid.gw, center, values })
}
