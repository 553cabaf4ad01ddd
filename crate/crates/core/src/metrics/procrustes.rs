use nalgebra::{Matrix3, SVD};

use crate::error::{shape, Error, Result};
use crate::geometry::{Mat3, Vec3};

/// `p -> scale * R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self { scale: 1.0, rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.scale * (self.rotation * p) + self.translation
    }
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Least-squares similarity mapping `predicted` onto `reference`
/// (centroid removal, SVD of the cross-covariance with reflection correction,
/// variance-ratio scale).
pub fn procrustes_align(predicted: &[Vec3], reference: &[Vec3]) -> Result<SimilarityTransform> {
    if predicted.len() != reference.len() {
        return Err(shape(format!("{} predicted vs {} reference points", predicted.len(), reference.len())));
    }
    if predicted.len() < 3 {
        return Err(Error::Degenerate("alignment needs at least 3 points".into()));
    }
    let mu_p = centroid(predicted);
    let mu_r = centroid(reference);
    let n = predicted.len() as f64;
    let mut cov = Matrix3::zeros();
    let mut var_p = 0.0;
    for (p, r) in predicted.iter().zip(reference) {
        let dp = p - mu_p;
        let dr = r - mu_r;
        cov += dr * dp.transpose();
        var_p += dp.norm_squared();
    }
    cov /= n;
    var_p /= n;
    if var_p <= f64::EPSILON * (1.0 + mu_p.norm_squared()) {
        return Err(Error::Degenerate("predicted points are coincident".into()));
    }
    let svd = SVD::new(cov, true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut sv = svd.singular_values;
    // rank < 2 leaves the rotation undetermined
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    if sv[order[1]] <= 1e-12 * sv[order[0]].max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate("point configuration has rank < 2".into()));
    }
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        // flip the direction with the smallest singular value
        let k = order[2];
        d[(k, k)] = -1.0;
        sv[k] = -sv[k];
    }
    let rotation = u * d * v_t;
    let scale = sv.sum() / var_p;
    let translation = mu_r - scale * (rotation * mu_p);
    Ok(SimilarityTransform { scale, rotation, translation })
}

pub fn sum_sq_residual(t: &SimilarityTransform, predicted: &[Vec3], reference: &[Vec3]) -> f64 {
    predicted.iter().zip(reference).map(|(p, r)| (t.apply(p) - r).norm_squared()).sum()
}

/// Mean per-point Euclidean error in millimeters (inputs in meters),
/// optionally after similarity alignment. Points correspond by position.
pub fn mean_point_error_mm(predicted: &[Vec3], reference: &[Vec3], align: bool) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(shape(format!("{} predicted vs {} reference points", predicted.len(), reference.len())));
    }
    if predicted.is_empty() {
        return Err(shape("no points to compare"));
    }
    let t = if align { procrustes_align(predicted, reference)? } else { SimilarityTransform::identity() };
    let total: f64 = predicted.iter().zip(reference).map(|(p, r)| (t.apply(p) - r).norm()).sum();
    Ok(1000.0 * total / predicted.len() as f64)
}

/// Mean per-joint position error, mm.
pub fn mpjpe(predicted: &[Vec3], reference: &[Vec3], align: bool) -> Result<f64> {
    mean_point_error_mm(predicted, reference, align)
}

/// Mean per-vertex position error, mm. Same contract as [`mpjpe`] over mesh vertices.
pub fn mpvpe(predicted: &[Vec3], reference: &[Vec3], align: bool) -> Result<f64> {
    mean_point_error_mm(predicted, reference, align)
}
