use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tracker::Detection;
use crate::error::{invalid, Result};

pub const MIN_HAND_PRESENCE: f64 = 0.20;
pub const MIN_PARAM_DENSITY: f64 = 0.05;
pub const MAX_CROWDED_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VideoStats {
    pub frames_total: u64,
    pub frames_with_valid_hand: u64,
    pub frames_with_valid_params: u64,
    pub frames_with_more_than_two_hands: u64,
}

impl VideoStats {
    /// Counts per-frame conditions over a detection list.
    pub fn from_detections(detections: &[Detection], frames_total: u64) -> Self {
        let mut per_frame: BTreeMap<u64, (u64, bool)> = BTreeMap::new();
        for d in detections {
            let e = per_frame.entry(d.frame).or_default();
            e.0 += 1;
            e.1 |= d.has_params;
        }
        Self {
            frames_total,
            frames_with_valid_hand: per_frame.len() as u64,
            frames_with_valid_params: per_frame.values().filter(|e| e.1).count() as u64,
            frames_with_more_than_two_hands: per_frame.values().filter(|e| e.0 > 2).count() as u64,
        }
    }

    fn ratio(&self, count: u64) -> f64 {
        if self.frames_total == 0 {
            0.0
        } else {
            count as f64 / self.frames_total as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterReason {
    HandPresence,
    ParamDensity,
    CrowdedFrames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub keep: bool,
    pub reasons: Vec<FilterReason>,
    pub hand_ratio: f64,
    pub params_ratio: f64,
    pub crowded_ratio: f64,
}

/// Applies the sequence-level quality rules. Thresholds are strict: a ratio
/// exactly on a threshold passes.
pub fn quality_filter(stats: &VideoStats) -> Result<Verdict> {
    let counts = [
        stats.frames_with_valid_hand,
        stats.frames_with_valid_params,
        stats.frames_with_more_than_two_hands,
    ];
    if counts.iter().any(|&c| c > stats.frames_total) {
        return Err(invalid("frame counts cannot exceed frames_total"));
    }
    let hand_ratio = stats.ratio(stats.frames_with_valid_hand);
    let params_ratio = stats.ratio(stats.frames_with_valid_params);
    let crowded_ratio = stats.ratio(stats.frames_with_more_than_two_hands);
    let mut reasons = Vec::new();
    if hand_ratio < MIN_HAND_PRESENCE {
        reasons.push(FilterReason::HandPresence);
    }
    if params_ratio < MIN_PARAM_DENSITY {
        reasons.push(FilterReason::ParamDensity);
    }
    if crowded_ratio > MAX_CROWDED_RATIO {
        reasons.push(FilterReason::CrowdedFrames);
    }
    Ok(Verdict { keep: reasons.is_empty(), reasons, hand_ratio, params_ratio, crowded_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(hand: u64, params: u64, crowded: u64) -> VideoStats {
        VideoStats {
            frames_total: 100,
            frames_with_valid_hand: hand,
            frames_with_valid_params: params,
            frames_with_more_than_two_hands: crowded,
        }
    }

    #[test]
    fn low_hand_presence_discards() {
        let v = quality_filter(&stats(19, 50, 0)).unwrap();
        assert!(!v.keep);
        assert_eq!(v.reasons, vec![FilterReason::HandPresence]);
    }

    #[test]
    fn clean_video_is_kept() {
        assert!(quality_filter(&stats(100, 100, 0)).unwrap().keep);
    }

    #[test]
    fn boundaries_are_kept() {
        let v = quality_filter(&stats(20, 5, 25)).unwrap();
        assert!(v.keep, "{v:?}");
    }

    #[test]
    fn every_violation_is_reported() {
        let v = quality_filter(&stats(10, 4, 26)).unwrap();
        assert_eq!(
            v.reasons,
            vec![FilterReason::HandPresence, FilterReason::ParamDensity, FilterReason::CrowdedFrames]
        );
    }

    #[test]
    fn empty_video_fails_presence() {
        let v = quality_filter(&VideoStats::from_detections(&[], 0)).unwrap();
        assert!(v.reasons.contains(&FilterReason::HandPresence));
    }

    #[test]
    fn counts_above_total_are_rejected() {
        assert!(quality_filter(&stats(101, 0, 0)).is_err());
    }
}
