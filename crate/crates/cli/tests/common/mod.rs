#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use egoctl_core::calibration::{
    forward_kinematics, Annotation, ConfigRecord, JointKind, JointSpec, Keypoint, KinematicChain, Link, Origin,
};
use egoctl_core::geometry::{project, RigidPose};
use egoctl_core::tracking::Detection;
use egoctl_core::{CameraIntrinsics, FeatureMap, Handedness, JointInfo, JointTrajectory, Tensor, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_egoctl")
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn egoctl(args: &[&str]) -> Run {
    egoctl_env(args, &[])
}

pub fn egoctl_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Small camera whose image maps onto a 12 x 16 latent grid at 8 px per cell.
pub fn small_camera() -> CameraIntrinsics {
    CameraIntrinsics { fx: 100.0, fy: 100.0, cx: 64.0, cy: 48.0, width: 128, height: 96 }
}

pub fn vga_camera() -> CameraIntrinsics {
    CameraIntrinsics { fx: 600.0, fy: 600.0, cx: 320.0, cy: 240.0, width: 640, height: 480 }
}

/// Two 21-joint hands drifting across the view.
pub fn two_hand_trajectory(frames: usize, k: CameraIntrinsics, seed: u64) -> JointTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut joints = Vec::new();
    for hand in [Handedness::Left, Handedness::Right] {
        for id in 0..21 {
            joints.push(JointInfo { handedness: hand, semantic_id: id });
        }
    }
    let offsets: Vec<[f64; 3]> = (0..42)
        .map(|_| [rng.gen_range(-0.04..0.04), rng.gen_range(-0.04..0.04), rng.gen_range(-0.02..0.02)])
        .collect();
    let mut traj = JointTrajectory::new(30.0, k, joints);
    for t in 0..frames {
        let s = t as f64 / frames.max(1) as f64;
        let positions = (0..42)
            .map(|j| {
                let side = if j < 21 { -1.0 } else { 1.0 };
                let o = offsets[j];
                [side * (0.08 - 0.1 * s) + o[0], 0.02 * (6.0 * s).sin() + o[1], 0.45 + 0.05 * side * s + o[2]]
            })
            .collect();
        let valid = (0..42).map(|_| rng.gen::<f64>() > 0.02).collect();
        traj.push_frame(t as u64, positions, valid);
    }
    traj
}

pub fn random_latent(channels: usize, gh: usize, gw: usize, seed: u64) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..channels * gh * gw).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FeatureMap::from_vec(channels, gh, gw, data).unwrap()
}

/// Two tracked hands with label noise and dropouts.
pub fn detection_sequence(frames: u64, seed: u64) -> Vec<Detection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for f in 0..frames {
        let s = f as f64 / frames as f64;
        for (hand, x) in [(Handedness::Left, -0.15 + 0.3 * s), (Handedness::Right, 0.15 - 0.3 * s)] {
            if rng.gen::<f64>() < 0.1 {
                continue;
            }
            let label = if rng.gen::<f64>() < 0.1 { hand.other() } else { hand };
            let t = [x + rng.gen_range(-0.005..0.005), rng.gen_range(-0.005..0.005), 0.5];
            let joints = Some((0..21).map(|j| [t[0] + 0.01 * j as f64, t[1], t[2]]).collect());
            out.push(Detection { frame: f, translation: t, handedness: label, joints, has_params: rng.gen::<f64>() < 0.8 });
        }
    }
    out
}

fn revolute(parent: usize, xyz: [f64; 3], axis: [f64; 3]) -> Link {
    Link {
        name: String::new(),
        parent: Some(parent),
        origin: Origin { xyz, rpy: [0.0; 3] },
        joint: JointSpec { kind: JointKind::Revolute, axis },
    }
}

/// A five-link finger-like chain with twelve keypoints on one side.
pub fn synthetic_chain() -> KinematicChain {
    let links = vec![
        Link { name: "root".into(), parent: None, origin: Origin::default(), joint: JointSpec::fixed() },
        revolute(0, [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        revolute(1, [0.05, 0.0, 0.0], [0.0, 1.0, 0.0]),
        Link {
            name: "slide".into(),
            parent: Some(2),
            origin: Origin { xyz: [0.04, 0.0, 0.0], rpy: [0.0, 0.0, 0.1] },
            joint: JointSpec { kind: JointKind::Prismatic, axis: [1.0, 0.0, 0.0] },
        },
        revolute(3, [0.03, 0.01, 0.0], [1.0, 0.0, 0.0]),
        Link {
            name: "tip".into(),
            parent: Some(4),
            origin: Origin { xyz: [0.02, 0.0, 0.01], rpy: [0.2, 0.0, 0.0] },
            joint: JointSpec::fixed(),
        },
    ];
    let offsets = [
        (0, [0.0, 0.03, 0.0]),
        (0, [0.0, -0.03, 0.02]),
        (1, [0.02, 0.02, 0.0]),
        (1, [0.01, -0.02, -0.02]),
        (2, [0.02, 0.0, 0.03]),
        (2, [0.0, 0.03, -0.01]),
        (3, [0.01, 0.0, 0.0]),
        (3, [0.0, -0.02, 0.02]),
        (4, [0.015, 0.01, 0.0]),
        (4, [0.0, 0.0, -0.025]),
        (5, [0.01, 0.0, 0.0]),
        (5, [0.0, 0.02, 0.02]),
    ];
    let keypoints = offsets
        .iter()
        .enumerate()
        .map(|(i, &(link, offset))| Keypoint { name: format!("k{i}"), link, offset, side: Some(Handedness::Left) })
        .collect();
    let chain = KinematicChain { platform: Some("inspire".into()), links, keypoints };
    chain.validate().unwrap();
    chain
}

pub const TRUE_THETA: [f64; 6] = [0.2, -0.15, 0.1, 0.02, -0.03, 0.45];

pub fn random_configs(chain: &KinematicChain, frames: usize, seed: u64) -> Vec<ConfigRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .map(|f| ConfigRecord { frame: f as u64, q: (0..chain.dof()).map(|_| rng.gen_range(-0.6..0.6)).collect() })
        .collect()
}

/// Exact projections of every keypoint in every annotated frame under `theta`.
pub fn synthetic_annotations(
    chain: &KinematicChain,
    configs: &[ConfigRecord],
    theta: &[f64; 6],
    k: &CameraIntrinsics,
) -> Vec<Annotation> {
    let pose = RigidPose::from_params(theta);
    let mut out = Vec::new();
    for c in configs {
        for (j, p) in forward_kinematics(chain, &c.q).unwrap().iter().enumerate() {
            let pj = project(&pose.apply(p), k);
            assert!(pj.valid);
            out.push(Annotation { frame: c.frame, joint_id: j, u_star: pj.u, episode: None });
        }
    }
    out
}

pub fn keypoint_frames(chain: &KinematicChain, configs: &[ConfigRecord]) -> egoctl_core::calibration::KeypointFrames {
    configs.iter().map(|c| (c.frame, forward_kinematics(chain, &c.q).unwrap())).collect()
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) {
    std::fs::write(path, egoctl_core::io::write_jsonl(items).unwrap()).unwrap();
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    std::fs::write(path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
}

/// Binary PPM (P6) writer for test images.
pub fn write_ppm(path: &Path, width: usize, height: usize, pixel: impl Fn(usize, usize, usize) -> u8) {
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    for r in 0..height {
        for c in 0..width {
            for ch in 0..3 {
                bytes.push(pixel(r, c, ch));
            }
        }
    }
    std::fs::write(path, bytes).unwrap();
}

/// Paths of a complete set of inputs for every subcommand.
pub struct Fixtures {
    pub dir: PathBuf,
    pub detections: PathBuf,
    pub trajectory: PathBuf,
    pub long_trajectory: PathBuf,
    pub latent: PathBuf,
    pub chain: PathBuf,
    pub configs: PathBuf,
    pub annotations: PathBuf,
    pub intrinsics: PathBuf,
    pub pred_images: PathBuf,
    pub ref_images: PathBuf,
    pub pred: PathBuf,
    pub config: PathBuf,
}

pub fn write_fixtures(dir: &Path) -> Fixtures {
    let f = Fixtures {
        dir: dir.to_path_buf(),
        detections: dir.join("detections.jsonl"),
        trajectory: dir.join("trajectory.jsonl"),
        long_trajectory: dir.join("long.jsonl"),
        latent: dir.join("latent.egoc"),
        chain: dir.join("chain.json"),
        configs: dir.join("configs.jsonl"),
        annotations: dir.join("annotations.json"),
        intrinsics: dir.join("intrinsics.json"),
        pred_images: dir.join("pred_frames"),
        ref_images: dir.join("ref_frames"),
        pred: dir.join("pred.jsonl"),
        config: dir.join("config.toml"),
    };
    write_jsonl(&f.detections, &detection_sequence(60, 7));
    let traj = two_hand_trajectory(9, small_camera(), 3);
    traj.save(&f.trajectory).unwrap();
    let mut pred = traj.clone();
    for rec in &mut pred.frames {
        for p in &mut rec.positions {
            p[0] = 1.1 * p[0] + 0.003;
        }
    }
    pred.save(&f.pred).unwrap();
    two_hand_trajectory(150, small_camera(), 4).save(&f.long_trajectory).unwrap();
    Tensor::from_feature_map(&random_latent(4, 12, 16, 5)).unwrap().save(&f.latent).unwrap();

    let chain = synthetic_chain();
    write_json(&f.chain, &chain);
    let configs = random_configs(&chain, 5, 11);
    write_jsonl(&f.configs, &configs);
    let k = vga_camera();
    write_json(&f.intrinsics, &k);
    write_json(&f.annotations, &synthetic_annotations(&chain, &configs, &TRUE_THETA, &k));

    std::fs::create_dir_all(&f.pred_images).unwrap();
    std::fs::create_dir_all(&f.ref_images).unwrap();
    for i in 0..2 {
        let name = format!("{i:04}.ppm");
        write_ppm(&f.ref_images.join(&name), 24, 20, |r, c, ch| ((r * 11 + c * 7 + ch * 50 + i * 13) % 256) as u8);
        write_ppm(&f.pred_images.join(&name), 24, 20, |r, c, ch| ((r * 11 + c * 7 + ch * 50 + i * 13 + (r % 3)) % 256) as u8);
    }
    std::fs::write(&f.config, "[tracker]\ntau_swap = 0.02\n\n[mask]\nseed = 9\n").unwrap();
    f
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out
}

pub fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::from(a)
}
