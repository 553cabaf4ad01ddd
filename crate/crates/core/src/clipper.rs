//! Visibility-anchored selection of fixed-length training clips.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const CLIP_HALF_WINDOW: usize = 60;
pub const CLIP_LEN: usize = 2 * CLIP_HALF_WINDOW + 1;
pub const SMOOTHING_WINDOW: usize = 5;
pub const DEFAULT_TIERS: [u32; 4] = [8, 4, 2, 0];

/// Number of in-bounds keypoints per frame.
pub fn visibility_score(in_bounds: &[Vec<bool>]) -> Vec<u32> {
    in_bounds.iter().map(|f| f.iter().filter(|&&b| b).count() as u32).collect()
}

/// Centered moving average; windows are truncated at the ends and divided by
/// the number of samples actually covered.
pub fn smooth_series(raw: &[u32], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(invalid(format!("smoothing window must be odd and positive, got {window}")));
    }
    let half = window / 2;
    let mut prefix = vec![0u64; raw.len() + 1];
    for (i, &v) in raw.iter().enumerate() {
        prefix[i + 1] = prefix[i] + u64::from(v);
    }
    Ok((0..raw.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(raw.len() - 1);
            (prefix[hi + 1] - prefix[lo]) as f64 / (hi - lo + 1) as f64
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipIndex {
    pub center: usize,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub tier: u32,
    pub score: f64,
}

/// Picks the clip center: the first tier with any qualifying frame wins, and
/// within it the frame with the highest smoothed score (earliest on ties).
/// A frame qualifies when the full window fits around it and its raw count
/// reaches the tier.
pub fn select_clip(raw: &[u32], smoothed: &[f64], tiers: &[u32]) -> Result<Option<ClipIndex>> {
    if raw.len() != smoothed.len() {
        return Err(invalid("raw and smoothed series differ in length"));
    }
    if tiers.windows(2).any(|w| w[0] <= w[1]) {
        return Err(invalid("tiers must be strictly decreasing"));
    }
    if raw.len() < CLIP_LEN {
        return Ok(None);
    }
    let centers = CLIP_HALF_WINDOW..raw.len() - CLIP_HALF_WINDOW;
    for &tier in tiers {
        let mut best: Option<usize> = None;
        for c in centers.clone().filter(|&c| raw[c] >= tier) {
            if best.is_none_or(|b| smoothed[c] > smoothed[b]) {
                best = Some(c);
            }
        }
        if let Some(center) = best {
            return Ok(Some(ClipIndex {
                center,
                start: center - CLIP_HALF_WINDOW,
                end: center + CLIP_HALF_WINDOW,
                tier,
                score: smoothed[center],
            }));
        }
    }
    Ok(None)
}

/// Greedy repeat of [`select_clip`] yielding non-overlapping windows, best first.
pub fn select_clips(raw: &[u32], smoothed: &[f64], tiers: &[u32], max_clips: usize) -> Result<Vec<ClipIndex>> {
    let mut taken = vec![false; raw.len()];
    let mut clips = Vec::new();
    while clips.len() < max_clips {
        // frames whose window touches a taken frame cannot be centers
        let blocked_raw: Vec<u32> = (0..raw.len())
            .map(|c| {
                let lo = c.saturating_sub(CLIP_HALF_WINDOW);
                let hi = (c + CLIP_HALF_WINDOW).min(raw.len() - 1);
                if taken[lo..=hi].iter().any(|&t| t) {
                    0
                } else {
                    raw[c]
                }
            })
            .collect();
        let usable: Vec<bool> = (0..raw.len())
            .map(|c| {
                let lo = c.saturating_sub(CLIP_HALF_WINDOW);
                let hi = (c + CLIP_HALF_WINDOW).min(raw.len() - 1);
                !taken[lo..=hi].iter().any(|&t| t)
            })
            .collect();
        let masked: Vec<f64> =
            smoothed.iter().zip(&usable).map(|(&s, &u)| if u { s } else { f64::NEG_INFINITY }).collect();
        let Some(clip) = select_clip(&blocked_raw, &masked, tiers)? else { break };
        if !usable[clip.center] {
            break;
        }
        taken[clip.start..=clip.end].iter_mut().for_each(|t| *t = true);
        clips.push(ClipIndex { score: smoothed[clip.center], ..clip });
    }
    Ok(clips)
}
