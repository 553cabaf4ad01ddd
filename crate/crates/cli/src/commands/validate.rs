use std::path::Path;

use clap::ValueEnum;
use egoctl_core::calibration::{Annotation, ConfigRecord, KinematicChain};
use egoctl_core::io::load_jsonl;
use egoctl_core::tracking::Detection;
use egoctl_core::{CameraIntrinsics, JointTrajectory, PipelineConfig, Tensor};
use serde_json::{json, Value};

use crate::output::{fail, read_bytes, read_json, CliError, CliResult, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Auto,
    Trajectory,
    Tensor,
    Config,
    Chain,
    Detections,
    Configs,
    Annotations,
    Intrinsics,
}

fn guess(path: &Path) -> CliResult<FileKind> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("egoc") => Ok(FileKind::Tensor),
        Some("toml") => Ok(FileKind::Config),
        Some("jsonl") => Ok(FileKind::Trajectory),
        _ => fail(format!("cannot infer the kind of {}; pass --kind", path.display())),
    }
}

fn utf8(path: &Path) -> CliResult<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| CliError(format!("{} is not UTF-8", path.display())))
}

/// Parses and checks one file, printing a JSON summary on success.
pub fn run(path: &Path, kind: FileKind) -> CliResult<Outcome> {
    let kind = if kind == FileKind::Auto { guess(path)? } else { kind };
    let summary: Value = match kind {
        FileKind::Auto => unreachable!(),
        FileKind::Trajectory => {
            let t = JointTrajectory::load(path)?;
            json!({ "kind": "trajectory", "frames": t.num_frames(), "joints": t.num_joints(), "fps": t.fps })
        }
        FileKind::Tensor => {
            let t = Tensor::load(path)?;
            json!({ "kind": "tensor", "dims": t.dims })
        }
        FileKind::Config => {
            PipelineConfig::load(path)?;
            json!({ "kind": "config" })
        }
        FileKind::Chain => {
            let c = KinematicChain::from_json(&utf8(path)?)?;
            json!({ "kind": "chain", "links": c.links.len(), "dof": c.dof(), "keypoints": c.keypoints.len() })
        }
        FileKind::Detections => {
            let d: Vec<Detection> = load_jsonl(path)?;
            for x in &d {
                x.validate()?;
            }
            json!({ "kind": "detections", "records": d.len() })
        }
        FileKind::Configs => {
            let c: Vec<ConfigRecord> = load_jsonl(path)?;
            json!({ "kind": "configs", "records": c.len() })
        }
        FileKind::Annotations => {
            let a: Vec<Annotation> = read_json(path)?;
            if let Some(bad) = a.iter().find(|a| !a.u_star.iter().all(|v| v.is_finite())) {
                return fail(format!("annotation for joint {} in frame {} is not finite", bad.joint_id, bad.frame));
            }
            json!({ "kind": "annotations", "records": a.len() })
        }
        FileKind::Intrinsics => {
            let k: CameraIntrinsics = read_json(path)?;
            k.validate()?;
            json!({ "kind": "intrinsics", "width": k.width, "height": k.height })
        }
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(Outcome::Done)
}
