use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::trajectory::JointTrajectory;

pub const DEFAULT_MASK_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// One draw per joint; a selected joint is blanked in every frame.
    #[default]
    WholeJoint,
    /// Independent draw per (frame, joint).
    PerFrame,
}

/// Joint indices picked for blanking in [`MaskMode::WholeJoint`].
pub fn select_joints(num_joints: usize, rate: f64, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_joints).map(|_| rng.gen::<f64>() < rate).collect()
}

/// Zeroes the coordinates and clears validity of randomly selected joints.
pub fn mask_joints(traj: &JointTrajectory, rate: f64, seed: u64, mode: MaskMode) -> Result<JointTrajectory> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(invalid(format!("mask rate must be in [0, 1], got {rate}")));
    }
    let mut out = traj.clone();
    match mode {
        MaskMode::WholeJoint => {
            let picked = select_joints(traj.num_joints(), rate, seed);
            for rec in &mut out.frames {
                for (j, _) in picked.iter().enumerate().filter(|(_, &p)| p) {
                    rec.positions[j] = [0.0; 3];
                    rec.valid[j] = false;
                }
            }
        }
        MaskMode::PerFrame => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for rec in &mut out.frames {
                for j in 0..rec.positions.len() {
                    if rng.gen::<f64>() < rate {
                        rec.positions[j] = [0.0; 3];
                        rec.valid[j] = false;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraIntrinsics;
    use crate::trajectory::{Handedness, JointInfo};

    fn traj() -> JointTrajectory {
        let k = CameraIntrinsics { fx: 1.0, fy: 1.0, cx: 0.5, cy: 0.5, width: 2, height: 2 };
        let joints = (0..42)
            .map(|i| JointInfo {
                handedness: if i < 21 { Handedness::Left } else { Handedness::Right },
                semantic_id: i % 21,
            })
            .collect();
        let mut t = JointTrajectory::new(30.0, k, joints);
        for f in 0..3 {
            t.push_frame(f, (0..42).map(|j| [j as f64, 1.0, 2.0]).collect(), vec![true; 42]);
        }
        t
    }

    #[test]
    fn zero_rate_is_identity() {
        let t = traj();
        assert_eq!(mask_joints(&t, 0.0, 5, MaskMode::WholeJoint).unwrap(), t);
        assert_eq!(mask_joints(&t, 0.0, 5, MaskMode::PerFrame).unwrap(), t);
    }

    #[test]
    fn full_rate_blanks_everything() {
        let m = mask_joints(&traj(), 1.0, 5, MaskMode::WholeJoint).unwrap();
        for rec in &m.frames {
            assert!(rec.positions.iter().all(|p| *p == [0.0; 3]));
            assert!(rec.valid.iter().all(|v| !v));
        }
    }

    #[test]
    fn whole_joint_mode_masks_all_frames() {
        let m = mask_joints(&traj(), 0.3, 17, MaskMode::WholeJoint).unwrap();
        for j in 0..42 {
            let states: Vec<bool> = m.frames.iter().map(|r| r.valid[j]).collect();
            assert!(states.iter().all(|&s| s == states[0]));
        }
    }

    #[test]
    fn same_seed_same_selection() {
        let t = traj();
        assert_eq!(
            mask_joints(&t, 0.2, 99, MaskMode::PerFrame).unwrap(),
            mask_joints(&t, 0.2, 99, MaskMode::PerFrame).unwrap()
        );
    }

    #[test]
    fn rejects_rate_outside_unit_interval() {
        assert!(mask_joints(&traj(), 1.5, 0, MaskMode::WholeJoint).is_err());
    }
}
