use serde::{Deserialize, Serialize};

use super::assignment::{solve_assignment, Assignment};
use crate::error::{invalid, Result};
use crate::geometry::Vec3;
use crate::trajectory::Handedness;

/// A single per-frame hand detection from the upstream reconstructor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub frame: u64,
    pub translation: [f64; 3],
    pub handedness: Handedness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub has_params: bool,
}

impl Detection {
    pub fn validate(&self) -> Result<()> {
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(invalid(format!("frame {}: non-finite translation", self.frame)));
        }
        if let Some(j) = &self.joints {
            if j.len() != 21 {
                return Err(invalid(format!("frame {}: expected 21 joints, got {}", self.frame, j.len())));
            }
        }
        Ok(())
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.translation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Cost added when a detection's handedness differs from the slot class.
    pub lambda_hand: f64,
    /// Minimum total-cost improvement required to accept an identity swap.
    pub tau_swap: f64,
    /// Frames without a detection after which a slot forgets its position.
    pub tau_gap: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { lambda_hand: 0.05, tau_swap: 0.02, tau_gap: 10 }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_hand >= 0.0 && self.tau_swap >= 0.0) {
            return Err(invalid("tracker lambda_hand and tau_swap must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub frame: u64,
    /// Index of the detection within its frame.
    pub detection: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSlot {
    pub nominal_class: Handedness,
    pub last_translation: Option<Vec3>,
    pub last_seen: Option<u64>,
    /// Handedness label of the detection assigned most recently; cleared on flush.
    pub last_label: Option<Handedness>,
    pub segments: Vec<SegmentEntry>,
}

impl TrackSlot {
    pub fn new(nominal_class: Handedness) -> Self {
        Self { nominal_class, last_translation: None, last_seen: None, last_label: None, segments: Vec::new() }
    }

    fn flush(&mut self) {
        self.last_translation = None;
        self.last_label = None;
    }
}

/// The standard left/right slot pair.
pub fn two_slots() -> Vec<TrackSlot> {
    vec![TrackSlot::new(Handedness::Left), TrackSlot::new(Handedness::Right)]
}

/// `C[i][j] = |T_i - T_j| + lambda [p_i != c_j]`; the distance term is zero
/// for a slot without position history.
pub fn assignment_cost(detections: &[Detection], slots: &[TrackSlot], cfg: &TrackerConfig) -> Vec<Vec<f64>> {
    detections
        .iter()
        .map(|det| {
            slots
                .iter()
                .map(|slot| {
                    let spatial = slot.last_translation.map_or(0.0, |t| (det.position() - t).norm());
                    let mismatch = if det.handedness != slot.nominal_class { cfg.lambda_hand } else { 0.0 };
                    spatial + mismatch
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapDecision {
    /// The optimal matching keeps each slot on the handedness label it followed.
    None,
    Accepted,
    Rejected,
}

/// What happened to the slots in one call to [`update_tracks`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub frame: u64,
    /// Detection index assigned to each slot.
    pub assigned: Vec<Option<usize>>,
    pub flushed: Vec<bool>,
    pub swap: SwapDecision,
    pub total_cost: f64,
}

fn slot_assignment(a: &Assignment, slots: usize) -> Vec<Option<usize>> {
    (0..slots).map(|s| a.row_of(s)).collect()
}

/// Advances the tracker by one frame.
///
/// Steps: flush slots unseen for more than `tau_gap` frames, solve the
/// matching, then apply hysteresis. When both slots are matched and both still
/// remember the label they followed, the optimal matching is a swap if
/// exchanging its two detections restores those labels; a swap stands only if
/// it beats the label-preserving matching by more than `tau_swap` in total
/// cost.
pub fn update_tracks(
    slots: &mut [TrackSlot],
    detections: &[Detection],
    frame: u64,
    cfg: &TrackerConfig,
) -> Result<FrameOutcome> {
    cfg.validate()?;
    if slots.iter().any(|s| s.last_seen.is_some_and(|l| l >= frame)) {
        return Err(invalid(format!("frame {frame} is not after the last seen frame")));
    }
    for d in detections {
        d.validate()?;
    }

    let flushed: Vec<bool> = slots
        .iter_mut()
        .map(|slot| {
            let stale = slot.last_seen.is_some_and(|l| frame - l > cfg.tau_gap) && slot.last_translation.is_some();
            if stale {
                slot.flush();
            }
            stale
        })
        .collect();

    let cost = assignment_cost(detections, slots, cfg);
    let best = solve_assignment(&cost)?;
    let mut assigned = slot_assignment(&best, slots.len());
    let mut total_cost = best.total;
    let mut swap = SwapDecision::None;

    if let [Some(a), Some(b)] = assigned[..] {
        if let (Some(la), Some(lb)) = (slots[0].last_label, slots[1].last_label) {
            let (pa, pb) = (detections[a].handedness, detections[b].handedness);
            let preserving = pa == la && pb == lb;
            let swapped_back = pb == la && pa == lb;
            if !preserving && swapped_back {
                let keep_cost = cost[b][0] + cost[a][1];
                if keep_cost - best.total > cfg.tau_swap {
                    swap = SwapDecision::Accepted;
                } else {
                    swap = SwapDecision::Rejected;
                    assigned = vec![Some(b), Some(a)];
                    total_cost = keep_cost;
                }
            }
        }
    }

    for (slot, det) in slots.iter_mut().zip(&assigned) {
        if let Some(i) = *det {
            slot.last_translation = Some(detections[i].position());
            slot.last_seen = Some(frame);
            slot.last_label = Some(detections[i].handedness);
            slot.segments.push(SegmentEntry { frame, detection: i });
        }
    }
    Ok(FrameOutcome { frame, assigned, flushed, swap, total_cost })
}

/// Groups detections by frame (input must be frame-sorted) and runs the
/// tracker over them.
pub fn track_sequence(
    detections: &[Detection],
    cfg: &TrackerConfig,
) -> Result<(Vec<TrackSlot>, Vec<FrameOutcome>)> {
    let mut slots = two_slots();
    let mut outcomes = Vec::new();
    let mut start = 0;
    while start < detections.len() {
        let frame = detections[start].frame;
        let end = start + detections[start..].iter().take_while(|d| d.frame == frame).count();
        if let Some(prev) = outcomes.last().map(|o: &FrameOutcome| o.frame) {
            if frame <= prev {
                return Err(invalid(format!("detections are not sorted by frame at frame {frame}")));
            }
        }
        outcomes.push(update_tracks(&mut slots, &detections[start..end], frame, cfg)?);
        start = end;
    }
    Ok((slots, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame: u64, t: [f64; 3], h: Handedness) -> Detection {
        Detection { frame, translation: t, handedness: h, joints: None, has_params: true }
    }

    #[test]
    fn cost_terms() {
        let cfg = TrackerConfig::default();
        let mut slots = two_slots();
        slots[0].last_translation = Some(Vec3::zeros());
        let d = [det(0, [0.1, 0.0, 0.0], Handedness::Left), det(0, [0.0, 0.1, 0.0], Handedness::Right)];
        let c = assignment_cost(&d, &slots, &cfg);
        assert!((c[0][0] - 0.10).abs() < 1e-15);
        assert!((c[1][0] - 0.15).abs() < 1e-15);
        // fresh right slot: handedness term only
        assert_eq!(c[1][1], 0.0);
        assert_eq!(c[0][1], 0.05);
    }

    #[test]
    fn gap_longer_than_tau_flushes_history() {
        let cfg = TrackerConfig::default();
        let mut slots = two_slots();
        update_tracks(&mut slots, &[det(0, [0.0, 0.0, 0.5], Handedness::Left)], 0, &cfg).unwrap();
        assert!(slots[0].last_translation.is_some());
        let out = update_tracks(&mut slots, &[], 10, &cfg).unwrap();
        assert_eq!(out.flushed, vec![false, false]);
        let out = update_tracks(&mut slots, &[], 11, &cfg).unwrap();
        assert_eq!(out.flushed, vec![true, false]);
        assert!(slots[0].last_translation.is_none());
        assert_eq!(slots[0].last_seen, Some(0));
    }

    #[test]
    fn gap_of_exactly_tau_keeps_history() {
        let cfg = TrackerConfig::default();
        let mut slots = two_slots();
        update_tracks(&mut slots, &[det(5, [0.0, 0.0, 0.5], Handedness::Left)], 5, &cfg).unwrap();
        let out = update_tracks(&mut slots, &[det(15, [0.3, 0.0, 0.5], Handedness::Left)], 15, &cfg).unwrap();
        assert_eq!(out.flushed, vec![false, false]);
    }

    fn crossing_setup(cfg: &TrackerConfig) -> Vec<TrackSlot> {
        let mut slots = two_slots();
        let first = [det(0, [-0.1, 0.0, 0.5], Handedness::Left), det(0, [0.1, 0.0, 0.5], Handedness::Right)];
        update_tracks(&mut slots, &first, 0, cfg).unwrap();
        slots
    }

    #[test]
    fn small_swap_gain_is_rejected() {
        let cfg = TrackerConfig { lambda_hand: 0.0, tau_swap: 0.02, tau_gap: 10 };
        let mut slots = crossing_setup(&cfg);
        // the label-swapped matching is cheaper than the label-preserving one
        // by tau_swap / 2
        let gain = cfg.tau_swap / 2.0;
        let left = det(1, [(gain - 0.2) / 2.0, 0.0, 0.5], Handedness::Left);
        let right = det(1, [-0.1, 0.0, 0.5], Handedness::Right);
        // sanity: spatial optimum pairs slot L with the right-labeled detection
        let c = assignment_cost(&[left.clone(), right.clone()], &slots, &cfg);
        let keep = c[0][0] + c[1][1];
        let swap = c[1][0] + c[0][1];
        assert!(((keep - swap) - gain).abs() < 1e-12);
        let out = update_tracks(&mut slots, &[left, right], 1, &cfg).unwrap();
        assert_eq!(out.swap, SwapDecision::Rejected);
        assert_eq!(out.assigned, vec![Some(0), Some(1)]);
    }

    #[test]
    fn large_swap_gain_is_accepted() {
        let cfg = TrackerConfig { lambda_hand: 0.0, tau_swap: 0.02, tau_gap: 10 };
        let mut slots = crossing_setup(&cfg);
        let left = det(1, [0.1, 0.0, 0.5], Handedness::Left);
        let right = det(1, [-0.1, 0.0, 0.5], Handedness::Right);
        let out = update_tracks(&mut slots, &[left, right], 1, &cfg).unwrap();
        assert_eq!(out.swap, SwapDecision::Accepted);
        assert_eq!(out.assigned, vec![Some(1), Some(0)]);
    }

    #[test]
    fn rejects_non_increasing_frames() {
        let cfg = TrackerConfig::default();
        let mut slots = two_slots();
        update_tracks(&mut slots, &[det(3, [0.0; 3], Handedness::Left)], 3, &cfg).unwrap();
        assert!(update_tracks(&mut slots, &[], 3, &cfg).is_err());
    }

    #[test]
    fn extra_detections_stay_unassigned() {
        let cfg = TrackerConfig::default();
        let mut slots = two_slots();
        let d = [
            det(0, [0.0; 3], Handedness::Left),
            det(0, [0.2, 0.0, 0.0], Handedness::Right),
            det(0, [0.4, 0.0, 0.0], Handedness::Right),
        ];
        let out = update_tracks(&mut slots, &d, 0, &cfg).unwrap();
        let mut used: Vec<usize> = out.assigned.iter().flatten().copied().collect();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), 2);
    }
}
