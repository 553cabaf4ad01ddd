use std::path::Path;

use egoctl_core::io::load_jsonl;
use egoctl_core::tracking::{mirror_right_hand, quality_filter, track_sequence, Detection, FrameOutcome, VideoStats, Verdict};
use egoctl_core::{Handedness, PipelineConfig};
use serde::Serialize;

use crate::output::{fail, input_hashes, CliResult, Outcome, Writer};

#[derive(Serialize)]
struct TrackEntry {
    frame: u64,
    detection: usize,
    handedness: Handedness,
    translation: [f64; 3],
    /// Right-hand joints are mirrored into the left-hand frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    joints: Option<Vec<[f64; 3]>>,
    has_params: bool,
}

#[derive(Serialize)]
struct SlotOut {
    slot: usize,
    nominal_class: Handedness,
    entries: Vec<TrackEntry>,
}

#[derive(Serialize)]
struct VerdictOut {
    stats: VideoStats,
    #[serde(flatten)]
    verdict: Verdict,
}

pub fn run(detections: &Path, frames: Option<u64>, out: &Path, cfg: &PipelineConfig) -> CliResult<Outcome> {
    let dets: Vec<Detection> = load_jsonl(detections)?;
    for d in &dets {
        d.validate()?;
    }
    if dets.windows(2).any(|w| w[1].frame < w[0].frame) {
        return fail("detections must be sorted by frame");
    }
    let last = dets.last().map_or(0, |d| d.frame + 1);
    let frames_total = frames.unwrap_or(last);
    if frames_total < last {
        return fail(format!("--frames {frames_total} is smaller than the last detected frame {}", last - 1));
    }
    let (slots, outcomes) = track_sequence(&dets, &cfg.tracker)?;
    let verdict = quality_filter(&VideoStats::from_detections(&dets, frames_total))?;

    let slot_out: Vec<SlotOut> = slots
        .iter()
        .enumerate()
        .map(|(s, slot)| SlotOut {
            slot: s,
            nominal_class: slot.nominal_class,
            entries: slot
                .segments
                .iter()
                .map(|seg| {
                    let d = &dets[seg.detection];
                    let joints = d.joints.as_ref().map(|j| match slot.nominal_class {
                        Handedness::Right => mirror_right_hand(j),
                        Handedness::Left => j.clone(),
                    });
                    TrackEntry {
                        frame: d.frame,
                        detection: seg.detection,
                        handedness: d.handedness,
                        translation: d.translation,
                        joints,
                        has_params: d.has_params,
                    }
                })
                .collect(),
        })
        .collect();

    let mut w = Writer::new(out)?;
    w.json("tracks.json", &slot_out)?;
    w.bytes("trace.jsonl", &egoctl_core::io::write_jsonl::<FrameOutcome>(&outcomes)?)?;
    w.json("verdict.json", &VerdictOut { stats: VideoStats::from_detections(&dets, frames_total), verdict: verdict.clone() })?;
    w.finish("track", cfg, input_hashes(&[("detections", detections)])?, serde_json::json!({ "frames_total": frames_total, "keep": verdict.keep }))?;
    Ok(if verdict.keep { Outcome::Done } else { Outcome::Negative })
}
