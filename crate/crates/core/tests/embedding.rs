use egoctl_core::geoembed::{
    causal_head, mask_joints, sincos_encode, splat_geo, CausalConvHead, EncodingSpec, IdentityTable, MaskMode,
    MlpProjector,
};
use egoctl_core::geometry::{gaussian_heatmap, GridSpec};
use egoctl_core::{CameraIntrinsics, FeatureMap, Handedness, JointInfo, JointTrajectory, Volume};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_volume(rng: &mut ChaCha8Rng, t: usize, c: usize) -> Volume {
    Volume::new(
        (0..t)
            .map(|_| FeatureMap::from_vec(c, 4, 5, (0..c * 20).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn splat_is_linear(
        centers in prop::collection::vec((0.0..12.0f64, 0.0..10.0f64), 1..6),
        a in -3.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let grid = GridSpec::new(10, 12, 8.0).unwrap();
        let hm: Vec<_> = centers.iter().map(|&(x, y)| gaussian_heatmap([x, y], 1.5, &grid).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<Vec<f64>> = hm.iter().map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let base = splat_geo(&z, &hm).unwrap();
        let scaled_z: Vec<Vec<f64>> = z.iter().map(|v| v.iter().map(|x| a * x).collect()).collect();
        let scaled = splat_geo(&scaled_z, &hm).unwrap();
        for (s, b) in scaled.data.iter().zip(&base.data) {
            prop_assert!((s - a * b).abs() <= 1e-9);
        }
        // additivity over a split of the joint set
        let k = hm.len() / 2;
        if k > 0 {
            let left = splat_geo(&z[..k], &hm[..k]).unwrap();
            let right = splat_geo(&z[k..], &hm[k..]).unwrap();
            for ((l, r), b) in left.data.iter().zip(&right.data).zip(&base.data) {
                prop_assert!((l + r - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn causal_prefixes_match(seed in any::<u64>(), t in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head = CausalConvHead::new(5, 3, [3, 3, 3], seed).unwrap();
        let geo = random_volume(&mut rng, 10, 3);
        let motion = random_volume(&mut rng, 10, 2);
        let full = causal_head(&geo, &motion, &head).unwrap();
        let prefix = causal_head(
            &Volume::new(geo.frames[..t].to_vec()).unwrap(),
            &Volume::new(motion.frames[..t].to_vec()).unwrap(),
            &head,
        )
        .unwrap();
        for (a, b) in prefix.frames.iter().zip(&full.frames) {
            prop_assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn future_frames_do_not_leak(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head = CausalConvHead::new(4, 2, [3, 3, 3], seed).unwrap();
        let geo = random_volume(&mut rng, 6, 2);
        let motion = random_volume(&mut rng, 6, 2);
        let mut changed = geo.clone();
        for v in &mut changed.frames[4].data {
            *v += 10.0;
        }
        let a = causal_head(&geo, &motion, &head).unwrap();
        let b = causal_head(&changed, &motion, &head).unwrap();
        for t in 0..4 {
            prop_assert_eq!(&a.frames[t].data, &b.frames[t].data);
        }
        prop_assert!(a.frames[4].data != b.frames[4].data);
    }
}

#[test]
fn encoding_separates_every_cell() {
    let spec = EncodingSpec::default();
    // longest period 2*pi/base = 128 cells, well beyond the 60 x 104 diagonal
    let (gh, gw) = (60usize, 104usize);
    let codes: Vec<Vec<f64>> = (0..gh)
        .flat_map(|r| (0..gw).map(move |c| (r, c)))
        .map(|(r, c)| sincos_encode([c as f64, r as f64], 2.0, &spec))
        .collect();
    let mut min_dist = f64::INFINITY;
    for i in 0..codes.len() {
        for j in i + 1..codes.len() {
            let d: f64 = codes[i].iter().zip(&codes[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            min_dist = min_dist.min(d);
        }
    }
    assert!(min_dist > 0.0, "{min_dist}");
}

#[test]
fn seeded_parameters_repeat() {
    assert_eq!(IdentityTable::new(42, 16, 1).entries, IdentityTable::new(42, 16, 1).entries);
    assert_ne!(IdentityTable::new(42, 16, 1).entries, IdentityTable::new(42, 16, 2).entries);
    let a = MlpProjector::new(64, 64, 32, 2);
    let b = MlpProjector::new(64, 64, 32, 2);
    assert_eq!((a.w1, a.b1, a.w2, a.b2), (b.w1, b.b1, b.w2, b.b2));
    let h1 = CausalConvHead::new(48, 16, [3, 3, 3], 3).unwrap();
    let h2 = CausalConvHead::new(48, 16, [3, 3, 3], 3).unwrap();
    assert_eq!(h1.weights, h2.weights);
}

#[test]
fn masking_repeats_and_blanks_whole_joints() {
    let k = CameraIntrinsics { fx: 100.0, fy: 100.0, cx: 64.0, cy: 48.0, width: 128, height: 96 };
    let joints = (0..42)
        .map(|i| JointInfo { handedness: if i < 21 { Handedness::Left } else { Handedness::Right }, semantic_id: i % 21 })
        .collect();
    let mut traj = JointTrajectory::new(30.0, k, joints);
    for t in 0..5 {
        traj.push_frame(t, (0..42).map(|j| [0.01 * j as f64, 0.0, 0.5]).collect(), vec![true; 42]);
    }
    let a = mask_joints(&traj, 0.3, 17, MaskMode::WholeJoint).unwrap();
    let b = mask_joints(&traj, 0.3, 17, MaskMode::WholeJoint).unwrap();
    assert_eq!(a.frames, b.frames);
    for j in 0..42 {
        let states: Vec<bool> = a.frames.iter().map(|f| f.valid[j]).collect();
        assert!(states.iter().all(|&v| v == states[0]), "joint {j} masked in some frames only");
        if !states[0] {
            assert!(a.frames.iter().all(|f| f.positions[j] == [0.0; 3]));
        }
    }
}
