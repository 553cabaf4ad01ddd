use std::path::Path;

use egoctl_core::clipper::{select_clip, select_clips, smooth_series, visibility_score, ClipIndex};
use egoctl_core::{JointTrajectory, PipelineConfig};
use serde::Serialize;

use crate::output::{input_hashes, CliResult, Outcome, Writer};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClipManifest {
    pub episode: String,
    pub center: usize,
    pub start: usize,
    pub end: usize,
    pub tier: u32,
    pub score: f64,
}

/// Clips chosen for one trajectory under the configured thresholds.
pub fn choose(traj: &JointTrajectory, cfg: &PipelineConfig) -> CliResult<(Vec<u32>, Vec<ClipIndex>)> {
    let in_bounds: Vec<Vec<bool>> = (0..traj.num_frames()).map(|t| traj.in_bounds(t)).collect();
    let raw = visibility_score(&in_bounds);
    let smoothed = smooth_series(&raw, cfg.clip.smoothing_window)?;
    let clips = if cfg.clip.multi {
        select_clips(&raw, &smoothed, &cfg.clip.thresholds, cfg.clip.max_clips)?
    } else {
        select_clip(&raw, &smoothed, &cfg.clip.thresholds)?.into_iter().collect()
    };
    Ok((raw, clips))
}

pub fn run(trajectory: &Path, episode: Option<&str>, out: &Path, cfg: &PipelineConfig) -> CliResult<Outcome> {
    let traj = JointTrajectory::load(trajectory)?;
    let episode = episode
        .map(str::to_string)
        .or_else(|| trajectory.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    let (raw, clips) = choose(&traj, cfg)?;

    let mut w = Writer::new(out)?;
    let manifests: Vec<ClipManifest> = clips
        .iter()
        .map(|c| ClipManifest {
            episode: episode.clone(),
            center: c.center,
            start: c.start,
            end: c.end,
            tier: c.tier,
            score: c.score,
        })
        .collect();
    for (i, c) in clips.iter().enumerate() {
        let mut buf = Vec::new();
        traj.slice(c.start, c.end).write_jsonl(&mut buf)?;
        w.bytes(&format!("clip-{i}.jsonl"), &buf)?;
    }
    w.json("clips.json", &manifests)?;
    w.finish("clip", cfg, input_hashes(&[("trajectory", trajectory)])?, serde_json::json!({ "visibility": raw }))?;
    Ok(if clips.is_empty() { Outcome::Negative } else { Outcome::Done })
}
