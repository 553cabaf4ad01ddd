//! Synthetic inputs shared by the benchmarks in `benches/`.

use egoctl_core::calibration::{
    forward_kinematics, Annotation, JointKind, JointSpec, Keypoint, KeypointFrames, KinematicChain, Link, Origin,
};
use egoctl_core::geometry::{project, RigidPose};
use egoctl_core::{CameraIntrinsics, FeatureMap, Handedness, JointInfo, JointTrajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn camera() -> CameraIntrinsics {
    CameraIntrinsics { fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0, width: 640, height: 480 }
}

/// Two 21-joint hands drifting across a 640 x 480 view.
pub fn two_hands(frames: usize, seed: u64) -> JointTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let joints = (0..42)
        .map(|i| JointInfo { handedness: if i < 21 { Handedness::Left } else { Handedness::Right }, semantic_id: i % 21 })
        .collect();
    let mut traj = JointTrajectory::new(30.0, camera(), joints);
    for t in 0..frames {
        let s = t as f64 / frames as f64;
        let positions = (0..42)
            .map(|j| {
                let side = if j < 21 { -1.0 } else { 1.0 };
                [side * (0.1 - 0.1 * s) + rng.gen_range(-0.03..0.03), rng.gen_range(-0.03..0.03), 0.5 + rng.gen_range(-0.02..0.02)]
            })
            .collect();
        traj.push_frame(t as u64, positions, vec![true; 42]);
    }
    traj
}

pub fn random_latent(channels: usize, gh: usize, gw: usize, seed: u64) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureMap::from_vec(channels, gh, gw, (0..channels * gh * gw).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// A four-joint chain with twelve keypoints, five configurations and exact
/// annotations under a known mount.
pub fn annotated_chain() -> (KinematicChain, Vec<f64>, KeypointFrames, Vec<Annotation>, CameraIntrinsics, [f64; 6]) {
    let axes = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let mut links = vec![Link { name: "base".into(), parent: None, origin: Origin::default(), joint: JointSpec::fixed() }];
    for (i, axis) in axes.into_iter().enumerate() {
        links.push(Link {
            name: format!("l{i}"),
            parent: Some(i),
            origin: Origin { xyz: [0.03, 0.0, 0.01], rpy: [0.0; 3] },
            joint: JointSpec { kind: JointKind::Revolute, axis },
        });
    }
    let keypoints = (0..12)
        .map(|k| Keypoint {
            name: format!("k{k}"),
            link: 1 + k % 4,
            offset: [0.01 * (k / 4) as f64, 0.005 * (k % 3) as f64, 0.0],
            side: Some(Handedness::Left),
        })
        .collect();
    let chain = KinematicChain { platform: Some("inspire".into()), links, keypoints };
    let truth = [0.2, -0.1, 0.05, 0.01, -0.02, 0.4];
    let pose = RigidPose::from_params(&truth);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut frames = KeypointFrames::new();
    let mut annotations = Vec::new();
    let mut q0 = Vec::new();
    for f in 0..5u64 {
        let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let pts = forward_kinematics(&chain, &q).unwrap();
        for (j, p) in pts.iter().enumerate() {
            annotations.push(Annotation { frame: f, joint_id: j, u_star: project(&pose.apply(p), &camera()).u, episode: None });
        }
        frames.insert(f, pts);
        if f == 0 {
            q0 = q;
        }
    }
    (chain, q0, frames, annotations, camera(), truth)
}
