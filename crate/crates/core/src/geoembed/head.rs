use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::embedding::uniform_init;
use crate::error::{invalid, shape, Result};
use crate::field::{FeatureMap, Volume};

/// 3D convolution padded only on the past side of the time axis, followed by
/// layer normalization over channels at every `(t, row, col)`.
///
/// Spatial padding is zero "same" padding, so kernel height and width must be
/// odd. Weights are laid out `[out][in][kt][kh][kw]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalConvHead {
    pub kt: usize,
    pub kh: usize,
    pub kw: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub ln_gamma: Vec<f64>,
    pub ln_beta: Vec<f64>,
    pub ln_eps: f64,
    pub seed: u64,
}

pub const DEFAULT_LN_EPS: f64 = 1e-12;

impl CausalConvHead {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 3],
        seed: u64,
    ) -> Result<Self> {
        let [kt, kh, kw] = kernel;
        Self::check_kernel(kt, kh, kw)?;
        let fan_in = in_channels * kt * kh * kw;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = uniform_init(&mut rng, out_channels * fan_in, fan_in);
        let bias = uniform_init(&mut rng, out_channels, fan_in);
        Ok(Self {
            kt,
            kh,
            kw,
            in_channels,
            out_channels,
            weights,
            bias,
            ln_gamma: vec![1.0; out_channels],
            ln_beta: vec![0.0; out_channels],
            ln_eps: DEFAULT_LN_EPS,
            seed,
        })
    }

    /// 1x1x1 kernel mapping channel `c` to channel `c`, zero bias.
    pub fn dirac(channels: usize) -> Self {
        let mut weights = vec![0.0; channels * channels];
        for c in 0..channels {
            weights[c * channels + c] = 1.0;
        }
        Self {
            kt: 1,
            kh: 1,
            kw: 1,
            in_channels: channels,
            out_channels: channels,
            weights,
            bias: vec![0.0; channels],
            ln_gamma: vec![1.0; channels],
            ln_beta: vec![0.0; channels],
            ln_eps: DEFAULT_LN_EPS,
            seed: 0,
        }
    }

    fn check_kernel(kt: usize, kh: usize, kw: usize) -> Result<()> {
        if kt == 0 || kh % 2 == 0 || kw % 2 == 0 {
            return Err(invalid("causal head needs kt >= 1 and odd kh, kw"));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len() + self.ln_gamma.len() + self.ln_beta.len()
    }

    #[inline]
    fn weight(&self, o: usize, i: usize, dt: usize, dy: usize, dx: usize) -> f64 {
        self.weights[(((o * self.in_channels + i) * self.kt + dt) * self.kh + dy) * self.kw + dx]
    }

    /// Raw causal convolution without normalization.
    pub fn convolve(&self, input: &Volume) -> Result<Volume> {
        Self::check_kernel(self.kt, self.kh, self.kw)?;
        let [t_len, c, gh, gw] = input.dims();
        if t_len > 0 && c != self.in_channels {
            return Err(shape(format!("head expects {} input channels, got {c}", self.in_channels)));
        }
        let (ph, pw) = (self.kh / 2, self.kw / 2);
        let mut frames = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let mut out = FeatureMap::zeros(self.out_channels, gh, gw);
            for o in 0..self.out_channels {
                for row in 0..gh {
                    for col in 0..gw {
                        let mut acc = self.bias[o];
                        for dt in 0..self.kt {
                            // frame t - (kt - 1) + dt; negative frames are zero padding
                            let Some(src_t) = (t + dt).checked_sub(self.kt - 1) else { continue };
                            let src = &input.frames[src_t];
                            for i in 0..c {
                                for dy in 0..self.kh {
                                    let Some(r) = (row + dy).checked_sub(ph).filter(|&r| r < gh) else {
                                        continue;
                                    };
                                    for dx in 0..self.kw {
                                        let Some(q) = (col + dx).checked_sub(pw).filter(|&q| q < gw) else {
                                            continue;
                                        };
                                        acc += self.weight(o, i, dt, dy, dx) * src.at(i, r, q);
                                    }
                                }
                            }
                        }
                        let idx = out.index(o, row, col);
                        out.data[idx] = acc;
                    }
                }
            }
            frames.push(out);
        }
        Volume::new(frames)
    }

    pub fn forward(&self, input: &Volume) -> Result<Volume> {
        let mut v = self.convolve(input)?;
        for f in &mut v.frames {
            layer_norm_channels(f, &self.ln_gamma, &self.ln_beta, self.ln_eps);
        }
        Ok(v)
    }
}

/// Normalizes over the channel axis at each spatial position, in place.
pub fn layer_norm_channels(map: &mut FeatureMap, gamma: &[f64], beta: &[f64], eps: f64) {
    let cells = map.plane_len();
    let c = map.channels as f64;
    for x in 0..cells {
        let mean = (0..map.channels).map(|k| map.data[k * cells + x]).sum::<f64>() / c;
        let var = (0..map.channels).map(|k| (map.data[k * cells + x] - mean).powi(2)).sum::<f64>() / c;
        let inv = 1.0 / (var + eps).sqrt();
        for k in 0..map.channels {
            let v = &mut map.data[k * cells + x];
            *v = (*v - mean) * inv * gamma[k] + beta[k];
        }
    }
}

/// `LayerNorm(CausalConv3D([geo ; motion]))` framewise.
pub fn causal_head(geo: &Volume, motion: &Volume, head: &CausalConvHead) -> Result<Volume> {
    let [tg, _, hg, wg] = geo.dims();
    let [tm, _, hm, wm] = motion.dims();
    if (tg, hg, wg) != (tm, hm, wm) {
        return Err(shape(format!("geo volume {:?} and motion volume {:?} disagree", geo.dims(), motion.dims())));
    }
    if geo.channels() + motion.channels() != head.in_channels && tg > 0 {
        return Err(shape(format!(
            "head takes {} channels, inputs provide {} + {}",
            head.in_channels,
            geo.channels(),
            motion.channels()
        )));
    }
    let stacked = geo
        .frames
        .iter()
        .zip(&motion.frames)
        .map(|(g, m)| FeatureMap::concat_channels(g, m))
        .collect::<Result<Vec<_>>>()?;
    head.forward(&Volume::new(stacked)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_volume(t: usize, c: usize, gh: usize, gw: usize, seed: u64) -> Volume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frames = (0..t)
            .map(|_| {
                let data = (0..c * gh * gw).map(|_| rng.gen_range(-1.0..1.0)).collect();
                FeatureMap::from_vec(c, gh, gw, data).unwrap()
            })
            .collect();
        Volume::new(frames).unwrap()
    }

    #[test]
    fn dirac_kernel_is_layer_norm_of_input() {
        let input = random_volume(3, 5, 4, 4, 1);
        let out = CausalConvHead::dirac(5).forward(&input).unwrap();
        for (t, frame) in input.frames.iter().enumerate() {
            for x in 0..16 {
                let vals: Vec<f64> = (0..5).map(|c| frame.data[c * 16 + x]).collect();
                let mean = vals.iter().sum::<f64>() / 5.0;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
                for c in 0..5 {
                    let expected = (vals[c] - mean) / (var + DEFAULT_LN_EPS).sqrt();
                    assert!((out.frames[t].data[c * 16 + x] - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn future_frames_do_not_leak() {
        let head = CausalConvHead::new(4, 3, [3, 3, 3], 9).unwrap();
        let input = random_volume(6, 4, 5, 5, 2);
        let base = head.forward(&input).unwrap();
        let mut perturbed = input.clone();
        perturbed.frames[4].data.iter_mut().for_each(|v| *v += 1.0);
        let out = head.forward(&perturbed).unwrap();
        for t in 0..4 {
            assert_eq!(base.frames[t], out.frames[t]);
        }
        assert_ne!(base.frames[4], out.frames[4]);
    }

    #[test]
    fn normalized_positions_have_zero_mean_unit_variance() {
        let head = CausalConvHead::new(4, 8, [3, 3, 3], 4).unwrap();
        let out = head.forward(&random_volume(2, 4, 4, 4, 3)).unwrap();
        for f in &out.frames {
            for x in 0..16 {
                let vals: Vec<f64> = (0..8).map(|c| f.data[c * 16 + x]).collect();
                let mean = vals.iter().sum::<f64>() / 8.0;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
                assert!(mean.abs() < 1e-6);
                assert!((var - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn default_head_is_about_twenty_thousand_parameters() {
        let head = CausalConvHead::new(32 + 16, 16, [3, 3, 3], 0).unwrap();
        assert_eq!(head.weights.len(), 48 * 16 * 27);
    }

    #[test]
    fn rejects_even_spatial_kernel() {
        assert!(CausalConvHead::new(2, 2, [3, 2, 3], 0).is_err());
    }

    #[test]
    fn channel_mismatch_is_error() {
        let head = CausalConvHead::new(5, 2, [1, 1, 1], 0).unwrap();
        let geo = random_volume(2, 2, 3, 3, 0);
        let motion = random_volume(2, 2, 3, 3, 1);
        assert!(causal_head(&geo, &motion, &head).is_err());
    }
}
