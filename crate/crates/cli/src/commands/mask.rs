use std::path::Path;

use egoctl_core::geoembed::{mask_joints, MaskMode};
use egoctl_core::{JointTrajectory, PipelineConfig};

use crate::output::{input_hashes, read_bytes, CliResult, Outcome, Writer};

pub fn run(trajectory: &Path, out: &Path, cfg: &PipelineConfig) -> CliResult<Outcome> {
    let raw = read_bytes(trajectory)?;
    let traj = JointTrajectory::read_jsonl(&raw[..])?;
    let m = &cfg.mask;
    let masked = mask_joints(&traj, m.rate, m.seed, m.mode)?;
    let mut entries = 0usize;
    let mut joints = vec![false; traj.num_joints()];
    for (a, b) in traj.frames.iter().zip(&masked.frames) {
        for (j, (va, vb)) in a.valid.iter().zip(&b.valid).enumerate() {
            if a.positions[j] != b.positions[j] || va != vb {
                entries += 1;
                joints[j] = true;
            }
        }
    }
    let mut w = Writer::new(out)?;
    if entries == 0 {
        // nothing changed: pass the input through untouched
        w.bytes("trajectory.jsonl", &raw)?;
    } else {
        let mut buf = Vec::new();
        masked.write_jsonl(&mut buf)?;
        w.bytes("trajectory.jsonl", &buf)?;
    }
    let selected: Vec<usize> = if m.mode == MaskMode::WholeJoint {
        egoctl_core::geoembed::select_joints(traj.num_joints(), m.rate, m.seed)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(j, _)| j)
            .collect()
    } else {
        joints.iter().enumerate().filter(|(_, &p)| p).map(|(j, _)| j).collect()
    };
    w.finish(
        "mask",
        cfg,
        input_hashes(&[("trajectory", trajectory)])?,
        serde_json::json!({ "rate": m.rate, "seed": m.seed, "mode": m.mode, "selected_joints": selected, "changed_entries": entries }),
    )?;
    Ok(Outcome::Done)
}
