use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Frequency ladder for the sinusoidal coordinate encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodingSpec {
    pub bands: usize,
    /// Lowest angular frequency, radians per grid cell (or per 1/m for disparity).
    pub base_freq: f64,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self { bands: 8, base_freq: std::f64::consts::PI / 64.0 }
    }
}

impl EncodingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 || !(self.base_freq > 0.0) || !self.base_freq.is_finite() {
            return Err(invalid("encoding needs bands >= 1 and base_freq > 0"));
        }
        Ok(())
    }

    pub fn output_len(&self) -> usize {
        6 * self.bands
    }

    pub fn frequency(&self, octave: usize) -> f64 {
        self.base_freq * (1u64 << octave) as f64
    }
}

/// Encodes `(u_x, u_y, d)` as `[sin(w_k s), cos(w_k s)]` pairs, scalar-major,
/// with `w_k = 2^k * base_freq`.
pub fn sincos_encode(u: [f64; 2], d: f64, spec: &EncodingSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.output_len());
    for s in [u[0], u[1], d] {
        for k in 0..spec.bands {
            let (sin, cos) = (spec.frequency(k) * s).sin_cos();
            out.push(sin);
            out.push(cos);
        }
    }
    out
}
