use std::path::Path;

use crate::error::{invalid, shape, Result};

pub const PSNR_CAP_DB: f64 = 99.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// `H x W x C` intensities in `[0, 1]`, interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(shape(format!("{height}x{width}x{channels} image needs {} values", height * width * channels)));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self { height, width, channels, data: vec![value; height * width * channels] }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, c: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + c]
    }

    /// Reads an 8-bit PNG or PNM file, scaling to `[0, 1]`.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)?;
        let channels = usize::from(img.color().channel_count()).min(3);
        let (data, channels) = if channels == 1 {
            let g = img.to_luma8();
            (g.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect(), 1)
        } else {
            let rgb = img.to_rgb8();
            (rgb.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect(), 3)
        };
        Self::new(img.height() as usize, img.width() as usize, channels, data)
    }

    fn same_shape(&self, other: &Image) -> Result<()> {
        if (self.height, self.width, self.channels) != (other.height, other.width, other.channels) {
            return Err(shape(format!(
                "images differ in shape: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )));
        }
        Ok(())
    }
}

/// `10 log10(1 / MSE)`, capped at [`PSNR_CAP_DB`] (also for zero MSE).
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    if a.data.is_empty() {
        return Err(invalid("empty images"));
    }
    let mse = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-((i as f64 - half).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Mean SSIM over every full 11x11 Gaussian window (sigma 1.5, dynamic range
/// 1), averaged over channels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    if a.height < SSIM_WINDOW || a.width < SSIM_WINDOW {
        return Err(invalid(format!("SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")));
    }
    let g = gaussian_window();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let rows = a.height - SSIM_WINDOW + 1;
    let cols = a.width - SSIM_WINDOW + 1;
    let mut total = 0.0;
    for c in 0..a.channels {
        let mut acc = 0.0;
        for r0 in 0..rows {
            for q0 in 0..cols {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for (i, gi) in g.iter().enumerate() {
                    for (j, gj) in g.iter().enumerate() {
                        let w = gi * gj;
                        let x = a.at(r0 + i, q0 + j, c);
                        let y = b.at(r0 + i, q0 + j, c);
                        mx += w * x;
                        my += w * y;
                        sxx += w * x * x;
                        syy += w * y * y;
                        sxy += w * x * y;
                    }
                }
                let vx = sxx - mx * mx;
                let vy = syy - my * my;
                let cov = sxy - mx * my;
                acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        total += acc / (rows * cols) as f64;
    }
    Ok(total / a.channels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(h: usize, w: usize) -> Image {
        let data = (0..h * w).map(|k| 0.5 + 0.3 * ((k % w) as f64 * 0.7).sin() * ((k / w) as f64 * 0.4).cos()).collect();
        Image::new(h, w, 1, data).unwrap()
    }

    #[test]
    fn identical_images() {
        let a = pattern(16, 20);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_difference_psnr() {
        let a = Image::filled(8, 8, 3, 0.2);
        let b = Image::filled(8, 8, 3, 0.3);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn negative_has_negative_structure() {
        let a = pattern(16, 16);
        let neg = Image::new(16, 16, 1, a.data.iter().map(|v| 1.0 - v).collect()).unwrap();
        assert!(ssim(&a, &neg).unwrap() < 0.0);
    }

    #[test]
    fn constants_reduce_to_luminance_term() {
        let (x, y) = (0.2, 0.7);
        let a = Image::filled(12, 12, 1, x);
        let b = Image::filled(12, 12, 1, y);
        let c1 = SSIM_K1 * SSIM_K1;
        let expected = (2.0 * x * y + c1) / (x * x + y * y + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn symmetric() {
        let a = pattern(14, 13);
        let b = Image::new(14, 13, 1, a.data.iter().map(|v| (v * 1.3 - 0.1f64).clamp(0.0, 1.0)).collect()).unwrap();
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn small_or_mismatched_images_fail() {
        let a = Image::filled(10, 10, 1, 0.0);
        assert!(ssim(&a, &a).is_err());
        assert!(psnr(&a, &Image::filled(10, 11, 1, 0.0)).is_err());
    }
}
