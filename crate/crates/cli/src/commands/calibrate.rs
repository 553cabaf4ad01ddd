use std::collections::BTreeMap;
use std::path::Path;

use egoctl_core::calibration::{
    batch_project, solve_extrinsics, Annotation, CalibrationResult, ConfigRecord, ConvergenceStatus, ExtrinsicParams,
    KeypointFrames, KinematicChain,
};
use egoctl_core::geometry::Z_MIN;
use egoctl_core::io::load_jsonl;
use egoctl_core::{CameraIntrinsics, Handedness, JointInfo, JointTrajectory, PipelineConfig, Vec3};
use serde::Serialize;

use super::fk::{keypoint_series, load_chain};
use crate::output::{fail, input_hashes, read_json, CliResult, Outcome, Writer};

#[derive(Serialize)]
struct ResidualOut {
    frame: u64,
    joint_id: usize,
    du: f64,
    dv: f64,
}

#[derive(Serialize)]
struct GroupReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    episode: Option<u32>,
    annotations: usize,
    theta: [f64; 6],
    bounds: [[f64; 2]; 6],
    initial_theta: [f64; 6],
    cost: f64,
    initial_cost: f64,
    rms_px: f64,
    status: ConvergenceStatus,
    iterations: usize,
    evaluations: usize,
    residuals: Vec<ResidualOut>,
    trajectory: String,
}

#[derive(Serialize)]
struct Report {
    platform: Option<String>,
    grouping: &'static str,
    groups: Vec<GroupReport>,
}

pub struct CalibrateArgs<'a> {
    pub chain: &'a Path,
    pub configs: &'a Path,
    pub annotations: &'a Path,
    pub intrinsics: &'a Path,
    pub nominal: [f64; 6],
    pub per_episode: bool,
    pub fps: f64,
    pub out: &'a Path,
}

/// Joint table for a chain: each keypoint keeps its side (left when unset)
/// and is numbered within that side.
pub fn chain_joints(chain: &KinematicChain) -> Vec<JointInfo> {
    let mut next = BTreeMap::new();
    chain
        .keypoints
        .iter()
        .map(|k| {
            let side = k.side.unwrap_or(Handedness::Left);
            let id = next.entry(side).or_insert(0u32);
            let info = JointInfo { handedness: side, semantic_id: *id };
            *id += 1;
            info
        })
        .collect()
}

fn projected_trajectory(
    result: &CalibrationResult,
    keypoints: &KeypointFrames,
    k: &CameraIntrinsics,
    joints: &[JointInfo],
    fps: f64,
) -> JointTrajectory {
    let mut traj = JointTrajectory::new(fps, *k, joints.to_vec());
    for (frame, pts) in batch_project(&result.params.theta, keypoints, k) {
        let positions = pts.iter().map(|p| p.p_c).collect();
        let valid = pts.iter().map(|p| p.p_c[2] > Z_MIN).collect();
        traj.push_frame(frame, positions, valid);
    }
    traj
}

pub fn run(args: &CalibrateArgs, cfg: &PipelineConfig) -> CliResult<Outcome> {
    let chain = load_chain(args.chain)?;
    let configs: Vec<ConfigRecord> = load_jsonl(args.configs)?;
    let annotations: Vec<Annotation> = read_json(args.annotations)?;
    let k: CameraIntrinsics = read_json(args.intrinsics)?;
    k.validate()?;
    if !(args.fps > 0.0) {
        return fail("--fps must be positive");
    }
    let keypoints: KeypointFrames = keypoint_series(&chain, &configs)?
        .into_iter()
        .map(|r| (r.frame, r.keypoints.into_iter().map(Vec3::from).collect()))
        .collect();
    egoctl_core::calibration::check_annotations(&annotations, &keypoints)?;

    let mut groups: BTreeMap<Option<u32>, Vec<Annotation>> = BTreeMap::new();
    for a in &annotations {
        let key = if args.per_episode { Some(a.episode.unwrap_or(0)) } else { None };
        groups.entry(key).or_default().push(*a);
    }
    if groups.is_empty() {
        return fail("annotation file lists no annotations");
    }

    let initial = ExtrinsicParams::around(args.nominal);
    let joints = chain_joints(&chain);
    let mut w = Writer::new(args.out)?;
    let mut reports = Vec::new();
    for (episode, anns) in &groups {
        let result = solve_extrinsics(anns, &keypoints, &k, &initial, &cfg.solver)?;
        let traj = projected_trajectory(&result, &keypoints, &k, &joints, args.fps);
        let name = match episode {
            Some(e) => format!("projected-episode-{e}.jsonl"),
            None => "projected.jsonl".to_string(),
        };
        let mut buf = Vec::new();
        traj.write_jsonl(&mut buf)?;
        w.bytes(&name, &buf)?;
        reports.push(GroupReport {
            episode: *episode,
            annotations: anns.len(),
            theta: result.params.theta,
            bounds: result.params.bounds,
            initial_theta: initial.theta,
            cost: result.report.cost,
            initial_cost: result.report.initial_cost,
            rms_px: result.rms_px,
            status: result.report.status,
            iterations: result.report.iterations,
            evaluations: result.report.evaluations,
            residuals: anns
                .iter()
                .zip(result.residuals.chunks_exact(2))
                .map(|(a, r)| ResidualOut { frame: a.frame, joint_id: a.joint_id, du: r[0], dv: r[1] })
                .collect(),
            trajectory: name,
        });
    }
    let report = Report {
        platform: chain.platform.clone(),
        grouping: if args.per_episode { "per-episode" } else { "per-scene" },
        groups: reports,
    };
    w.json("report.json", &report)?;
    w.finish(
        "calibrate",
        cfg,
        input_hashes(&[
            ("chain", args.chain),
            ("configs", args.configs),
            ("annotations", args.annotations),
            ("intrinsics", args.intrinsics),
        ])?,
        serde_json::json!({ "nominal": args.nominal, "fps": args.fps, "per_episode": args.per_episode }),
    )?;
    Ok(Outcome::Done)
}
