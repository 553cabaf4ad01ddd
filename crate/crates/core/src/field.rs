//! Dense channel-major feature grids and frame stacks of them.

use crate::error::{shape, Result};
use crate::geometry::GridSpec;

/// `C x gh x gw` feature planes stored channel-major, row-major within a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub gh: usize,
    pub gw: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, gh: usize, gw: usize) -> Self {
        Self { channels, gh, gw, data: vec![0.0; channels * gh * gw] }
    }

    pub fn filled(channels: usize, gh: usize, gw: usize, value: f64) -> Self {
        Self { channels, gh, gw, data: vec![value; channels * gh * gw] }
    }

    pub fn from_vec(channels: usize, gh: usize, gw: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * gh * gw {
            return Err(shape(format!(
                "feature map {channels}x{gh}x{gw} needs {} values, got {}",
                channels * gh * gw,
                data.len()
            )));
        }
        Ok(Self { channels, gh, gw, data })
    }

    pub fn plane_len(&self) -> usize {
        self.gh * self.gw
    }

    #[inline]
    pub fn index(&self, c: usize, row: usize, col: usize) -> usize {
        (c * self.gh + row) * self.gw + col
    }

    #[inline]
    pub fn at(&self, c: usize, row: usize, col: usize) -> f64 {
        self.data[self.index(c, row, col)]
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn matches_grid(&self, grid: &GridSpec) -> bool {
        self.gh == grid.gh && self.gw == grid.gw
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks `a` over `b` along the channel axis.
    pub fn concat_channels(a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
        if a.gh != b.gh || a.gw != b.gw {
            return Err(shape("channel concat needs equal spatial size"));
        }
        let mut data = Vec::with_capacity(a.data.len() + b.data.len());
        data.extend_from_slice(&a.data);
        data.extend_from_slice(&b.data);
        Ok(FeatureMap { channels: a.channels + b.channels, gh: a.gh, gw: a.gw, data })
    }
}

/// A `T x C x gh x gw` stack of feature maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub frames: Vec<FeatureMap>,
}

impl Volume {
    pub fn new(frames: Vec<FeatureMap>) -> Result<Self> {
        if let Some(first) = frames.first() {
            let dims = (first.channels, first.gh, first.gw);
            if frames.iter().any(|f| (f.channels, f.gh, f.gw) != dims) {
                return Err(shape("all frames of a volume must share C x gh x gw"));
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.frames.first().map_or(0, |f| f.channels)
    }

    /// `[T, C, gh, gw]`.
    pub fn dims(&self) -> [usize; 4] {
        match self.frames.first() {
            Some(f) => [self.frames.len(), f.channels, f.gh, f.gw],
            None => [0, 0, 0, 0],
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.frames.iter().flat_map(|f| f.data.iter().copied()).collect()
    }

    pub fn from_flat(dims: [usize; 4], data: &[f64]) -> Result<Self> {
        let [t, c, gh, gw] = dims;
        let n = c * gh * gw;
        if data.len() != t * n {
            return Err(shape(format!("volume {dims:?} needs {} values, got {}", t * n, data.len())));
        }
        let frames = (0..t)
            .map(|i| FeatureMap { channels: c, gh, gw, data: data[i * n..(i + 1) * n].to_vec() })
            .collect();
        Ok(Self { frames })
    }
}
