use egoctl_core::calibration::{
    batch_project, forward_jacobian, forward_kinematics, numeric_jacobian, reprojection_residuals,
    solve_extrinsics, Annotation, ExtrinsicParams, JointKind, JointSpec, Keypoint, KeypointFrames, KinematicChain,
    Link, Origin, SolverOptions,
};
use egoctl_core::geometry::{apply_pose, project, RigidPose};
use egoctl_core::{CameraIntrinsics, Vec3};
use proptest::prelude::*;

fn camera() -> CameraIntrinsics {
    CameraIntrinsics { fx: 600.0, fy: 600.0, cx: 320.0, cy: 240.0, width: 640, height: 480 }
}

/// Three moving links, each carrying three keypoints.
fn chain() -> KinematicChain {
    let link = |parent: usize, xyz: [f64; 3], kind: JointKind, axis: [f64; 3]| Link {
        name: String::new(),
        parent: Some(parent),
        origin: Origin { xyz, rpy: [0.1, -0.2, 0.05] },
        joint: JointSpec { kind, axis },
    };
    let links = vec![
        Link { name: "base".into(), parent: None, origin: Origin::default(), joint: JointSpec::fixed() },
        link(0, [0.0, 0.0, 0.05], JointKind::Revolute, [0.0, 0.0, 1.0]),
        link(1, [0.04, 0.0, 0.0], JointKind::Prismatic, [1.0, 0.0, 0.0]),
        link(2, [0.03, 0.01, 0.0], JointKind::Revolute, [0.0, 1.0, 0.0]),
    ];
    let keypoints = (1..4)
        .flat_map(|l| {
            [[0.0, 0.0, 0.0], [0.02, 0.01, 0.0], [0.0, -0.015, 0.02]].map(move |offset| Keypoint {
                name: format!("l{l}"),
                link: l,
                offset,
                side: None,
            })
        })
        .collect();
    KinematicChain { platform: None, links, keypoints }
}

fn frames(qs: &[[f64; 3]]) -> KeypointFrames {
    let c = chain();
    qs.iter().enumerate().map(|(f, q)| (f as u64, forward_kinematics(&c, q).unwrap())).collect()
}

fn annotate(theta: &[f64; 6], kp: &KeypointFrames) -> Vec<Annotation> {
    let pose = RigidPose::from_params(theta);
    kp.iter()
        .flat_map(|(&frame, pts)| {
            pts.iter().enumerate().map(move |(j, p)| Annotation {
                frame,
                joint_id: j,
                u_star: project(&pose.apply(p), &camera()).u,
                episode: None,
            })
        })
        .collect()
}

fn q_strategy() -> impl Strategy<Value = [f64; 3]> {
    (-1.5..1.5f64, -0.02..0.02f64, -1.5..1.5f64).prop_map(|(a, b, c)| [a, b, c])
}

const TRUTH: [f64; 6] = [0.15, -0.1, 0.05, 0.01, 0.02, 0.35];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn links_stay_rigid(q1 in q_strategy(), q2 in q_strategy()) {
        let c = chain();
        let a = forward_kinematics(&c, &q1).unwrap();
        let b = forward_kinematics(&c, &q2).unwrap();
        for link in 1..4 {
            let idx: Vec<usize> = (0..c.keypoints.len()).filter(|&k| c.keypoints[k].link == link).collect();
            for &i in &idx {
                for &j in &idx {
                    let da = (a[i] - a[j]).norm();
                    let db = (b[i] - b[j]).norm();
                    prop_assert!((da - db).abs() <= 1e-9 * da.max(1e-12) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn jacobian_stencils_agree(theta in prop::array::uniform6(-0.3..0.3f64), q in q_strategy()) {
        let mut theta = theta;
        theta[5] += 0.4;
        let kp = frames(&[q]);
        let anns = annotate(&TRUTH, &kp);
        let f = |x: &[f64]| {
            let t: [f64; 6] = x.try_into().unwrap();
            reprojection_residuals(&t, &anns, &kp, &camera()).unwrap()
        };
        let central = numeric_jacobian(&f, &theta, 1e-6);
        let forward = forward_jacobian(&f, &theta, 1e-7);
        let scale = central.amax();
        for (a, b) in central.iter().zip(forward.iter()) {
            prop_assert!((a - b).abs() <= 1e-3 * a.abs().max(1e-3 * scale), "{a} vs {b}");
        }
    }

    #[test]
    fn solver_descends_inside_the_box(offset in prop::array::uniform6(-0.2..0.2f64), qs in prop::collection::vec(q_strategy(), 2..4)) {
        let kp = frames(&qs);
        let anns = annotate(&TRUTH, &kp);
        let mut nominal = TRUTH;
        for (n, o) in nominal.iter_mut().zip(offset) {
            *n += o;
        }
        let init = ExtrinsicParams::around(nominal);
        let res = solve_extrinsics(&anns, &kp, &camera(), &init, &SolverOptions::default()).unwrap();
        prop_assert!(res.report.costs.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(res.report.cost <= res.report.initial_cost);
        for it in &res.report.iterates {
            for (v, [lo, hi]) in it.iter().zip(init.bounds) {
                prop_assert!(lo <= *v && *v <= hi);
            }
        }
    }

    #[test]
    fn batch_projection_matches_project(theta in prop::array::uniform6(-0.5..0.5f64), q in q_strategy()) {
        let kp = frames(&[q]);
        let out = batch_project(&theta, &kp, &camera());
        let pose = RigidPose::from_params(&theta);
        for (p, ck) in kp[&0].iter().zip(&out[&0]) {
            let pc = apply_pose(&pose, p);
            let pj = project(&pc, &camera());
            prop_assert_eq!(ck.p_c, [pc.x, pc.y, pc.z]);
            prop_assert_eq!(ck.pixel, pj.u);
            prop_assert_eq!(ck.disparity, pj.d);
        }
    }
}

#[test]
fn truth_is_a_zero_residual_fixed_point() {
    let kp = frames(&[[0.3, 0.01, -0.4], [-0.2, -0.01, 0.6]]);
    let anns = annotate(&TRUTH, &kp);
    let r = reprojection_residuals(&TRUTH, &anns, &kp, &camera()).unwrap();
    assert!(r.iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn prismatic_joint_translates_along_its_axis() {
    let c = chain();
    let a = forward_kinematics(&c, &[0.0, 0.0, 0.0]).unwrap();
    let b = forward_kinematics(&c, &[0.0, 0.01, 0.0]).unwrap();
    // keypoints on the prismatic link and its child shift by the same vector
    let shift: Vec<Vec3> = (3..9).map(|k| b[k] - a[k]).collect();
    for s in &shift {
        assert!((s - shift[0]).norm() < 1e-12);
        assert!((s.norm() - 0.01).abs() < 1e-12);
    }
}
