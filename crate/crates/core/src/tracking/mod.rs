//! Left/right hand track resolution from per-frame detections, sequence
//! quality filters, and right-hand mirroring.

mod assignment;
mod filter;
mod tracker;

pub use assignment::{solve_assignment, Assignment};
pub use filter::{
    quality_filter, FilterReason, VideoStats, Verdict, MAX_CROWDED_RATIO, MIN_HAND_PRESENCE, MIN_PARAM_DENSITY,
};
pub use tracker::{
    assignment_cost, track_sequence, two_slots, update_tracks, Detection, FrameOutcome, SegmentEntry,
    SwapDecision, TrackSlot, TrackerConfig,
};

/// Reflects joints across the plane `x = 0` by negating x.
pub fn mirror_right_hand(joints: &[[f64; 3]]) -> Vec<[f64; 3]> {
    joints.iter().map(|&[x, y, z]| [-x, y, z]).collect()
}
