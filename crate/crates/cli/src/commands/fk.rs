use std::path::Path;

use egoctl_core::calibration::{forward_kinematics, ConfigRecord, KinematicChain};
use egoctl_core::io::{load_jsonl, write_jsonl};
use egoctl_core::PipelineConfig;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{input_hashes, read_bytes, CliError, CliResult, Outcome, Writer};

#[derive(Serialize)]
pub struct KeypointRecord {
    pub frame: u64,
    pub keypoints: Vec<[f64; 3]>,
}

pub fn load_chain(path: &Path) -> CliResult<KinematicChain> {
    let text = String::from_utf8(read_bytes(path)?).map_err(|_| CliError(format!("{} is not UTF-8", path.display())))?;
    Ok(KinematicChain::from_json(&text)?)
}

/// Root-frame keypoints for every configuration record, in input order.
pub fn keypoint_series(chain: &KinematicChain, configs: &[ConfigRecord]) -> CliResult<Vec<KeypointRecord>> {
    let mut frames: Vec<u64> = configs.iter().map(|c| c.frame).collect();
    frames.sort_unstable();
    if frames.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError("joint configuration file repeats a frame".into()));
    }
    configs
        .par_iter()
        .map(|c| {
            let pts = forward_kinematics(chain, &c.q)
                .map_err(|e| CliError(format!("frame {}: {e}", c.frame)))?;
            Ok(KeypointRecord { frame: c.frame, keypoints: pts.iter().map(|p| [p.x, p.y, p.z]).collect() })
        })
        .collect()
}

pub fn run(chain_path: &Path, configs_path: &Path, out: &Path, cfg: &PipelineConfig) -> CliResult<Outcome> {
    let chain = load_chain(chain_path)?;
    let configs: Vec<ConfigRecord> = load_jsonl(configs_path)?;
    let records = keypoint_series(&chain, &configs)?;
    let mut w = Writer::new(out)?;
    w.bytes("keypoints.jsonl", &write_jsonl(&records)?)?;
    w.finish(
        "fk",
        cfg,
        input_hashes(&[("chain", chain_path), ("configs", configs_path)])?,
        serde_json::json!({ "frames": records.len(), "keypoints": chain.keypoints.len(), "dof": chain.dof() }),
    )?;
    Ok(Outcome::Done)
}
