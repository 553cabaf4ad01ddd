//! Geometric and image-quality evaluation.
//!
//! Point-set errors are reported in millimeters for inputs in meters; FID and
//! FVD are not provided since they need pretrained feature networks.

mod image;
mod procrustes;

pub use image::{psnr, ssim, Image, PSNR_CAP_DB, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use procrustes::{
    mean_point_error_mm, mpjpe, mpvpe, procrustes_align, sum_sq_residual, SimilarityTransform,
};
