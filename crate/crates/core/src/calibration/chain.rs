//! Rigid link chains described in JSON and their forward kinematics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, structure, Result};
use crate::geometry::{axis_angle, RigidPose, Vec3};
use crate::trajectory::Handedness;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    #[serde(rename = "type")]
    pub kind: JointKind,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl JointSpec {
    pub fn fixed() -> Self {
        Self { kind: JointKind::Fixed, axis: default_axis() }
    }
}

/// Fixed transform from the parent link frame to this link's joint frame.
/// `rpy` is `[pitch, yaw, roll]` composed as `Rz(roll) Ry(yaw) Rx(pitch)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Origin {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl Origin {
    pub fn pose(&self) -> RigidPose {
        RigidPose::from_params(&[self.rpy[0], self.rpy[1], self.rpy[2], self.xyz[0], self.xyz[1], self.xyz[2]])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    #[serde(default)]
    pub name: String,
    pub parent: Option<usize>,
    #[serde(default)]
    pub origin: Origin,
    pub joint: JointSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keypoint {
    #[serde(default)]
    pub name: String,
    pub link: usize,
    #[serde(default)]
    pub offset: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Handedness>,
}

/// Known embodiments and their tracked keypoints per hand.
pub fn keypoints_per_side(platform: &str) -> Option<usize> {
    match platform.to_ascii_lowercase().as_str() {
        "inspire" => Some(12),
        "dex3-1" | "dex3" => Some(7),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicChain {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<String>,
    pub links: Vec<Link>,
    pub keypoints: Vec<Keypoint>,
}

impl KinematicChain {
    pub fn from_json(text: &str) -> Result<Self> {
        let chain: Self = serde_json::from_str(text)?;
        chain.validate()?;
        Ok(chain)
    }

    /// Number of actuated (non-fixed) joints, i.e. the length of `q`.
    pub fn dof(&self) -> usize {
        self.links.iter().filter(|l| l.joint.kind != JointKind::Fixed).count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.links.len();
        let roots = self.links.iter().filter(|l| l.parent.is_none()).count();
        if roots != 1 {
            return Err(structure(format!("chain needs exactly one root link, found {roots}")));
        }
        for (i, link) in self.links.iter().enumerate() {
            if let Some(p) = link.parent {
                if p >= n {
                    return Err(structure(format!("link {i} references missing parent {p}")));
                }
            }
            if link.joint.kind != JointKind::Fixed {
                let norm = Vec3::from(link.joint.axis).norm();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("link {i} joint axis has norm {norm}, expected 1")));
                }
            }
        }
        // walking up from any link must reach the root within n steps
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = self.links[cur].parent {
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(structure(format!("link {start} is part of a parent cycle")));
                }
            }
        }
        for (k, kp) in self.keypoints.iter().enumerate() {
            if kp.link >= n {
                return Err(structure(format!("keypoint {k} references missing link {}", kp.link)));
            }
        }
        if let Some(platform) = &self.platform {
            if let Some(expected) = keypoints_per_side(platform) {
                for side in [Handedness::Left, Handedness::Right] {
                    let count = self.keypoints.iter().filter(|k| k.side == Some(side)).count();
                    if count != 0 && count != expected {
                        return Err(invalid(format!(
                            "platform {platform} tracks {expected} keypoints per side, chain lists {count} on the {side:?} side"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Root-frame pose of every link for configuration `q`.
    pub fn link_poses(&self, q: &[f64]) -> Result<Vec<RigidPose>> {
        if q.len() != self.dof() {
            return Err(shape(format!("chain has {} joints, q has {} values", self.dof(), q.len())));
        }
        let mut q_index = vec![None; self.links.len()];
        let mut next = 0;
        for (i, l) in self.links.iter().enumerate() {
            if l.joint.kind != JointKind::Fixed {
                q_index[i] = Some(next);
                next += 1;
            }
        }
        let mut poses: Vec<Option<RigidPose>> = vec![None; self.links.len()];
        for i in 0..self.links.len() {
            self.resolve(i, q, &q_index, &mut poses)?;
        }
        Ok(poses.into_iter().map(|p| p.expect("every link resolved")).collect())
    }

    fn resolve(
        &self,
        i: usize,
        q: &[f64],
        q_index: &[Option<usize>],
        poses: &mut [Option<RigidPose>],
    ) -> Result<RigidPose> {
        // iterative walk to the nearest resolved ancestor, then back down
        let mut path = vec![i];
        let mut cur = i;
        while poses[cur].is_none() {
            match self.links[cur].parent {
                Some(p) if poses[p].is_none() => {
                    if path.len() > self.links.len() {
                        return Err(structure("parent cycle in chain"));
                    }
                    path.push(p);
                    cur = p;
                }
                _ => break,
            }
        }
        for &link in path.iter().rev() {
            if poses[link].is_some() {
                continue;
            }
            let spec = &self.links[link];
            let parent = spec.parent.map_or_else(RigidPose::identity, |p| poses[p].expect("parent resolved"));
            let motion = match (spec.joint.kind, q_index[link]) {
                (JointKind::Revolute, Some(k)) => {
                    RigidPose::new(axis_angle(&Vec3::from(spec.joint.axis), q[k]), Vec3::zeros())
                }
                (JointKind::Prismatic, Some(k)) => RigidPose::from_translation(Vec3::from(spec.joint.axis) * q[k]),
                _ => RigidPose::identity(),
            };
            poses[link] = Some(parent.compose(&spec.origin.pose()).compose(&motion));
        }
        Ok(poses[i].expect("resolved"))
    }
}

/// Root-frame positions of the chain's keypoints for configuration `q`.
pub fn forward_kinematics(chain: &KinematicChain, q: &[f64]) -> Result<Vec<Vec3>> {
    let poses = chain.link_poses(q)?;
    Ok(chain.keypoints.iter().map(|kp| poses[kp.link].apply(&Vec3::from(kp.offset))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn single_revolute() -> KinematicChain {
        KinematicChain {
            platform: None,
            links: vec![Link {
                name: "base".into(),
                parent: None,
                origin: Origin::default(),
                joint: JointSpec { kind: JointKind::Revolute, axis: [0.0, 0.0, 1.0] },
            }],
            keypoints: vec![Keypoint { name: "tip".into(), link: 0, offset: [1.0, 0.0, 0.0], side: None }],
        }
    }

    #[test]
    fn revolute_quarter_turn() {
        let p = forward_kinematics(&single_revolute(), &[FRAC_PI_2]).unwrap();
        assert!((p[0] - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_configuration_composes_offsets() {
        let chain = KinematicChain {
            platform: None,
            links: vec![
                Link { name: "a".into(), parent: None, origin: Origin { xyz: [1.0, 0.0, 0.0], rpy: [0.0; 3] }, joint: JointSpec::fixed() },
                Link {
                    name: "b".into(),
                    parent: Some(0),
                    origin: Origin { xyz: [0.0, 2.0, 0.0], rpy: [0.0, 0.0, FRAC_PI_2] },
                    joint: JointSpec { kind: JointKind::Prismatic, axis: [1.0, 0.0, 0.0] },
                },
            ],
            keypoints: vec![Keypoint { name: "k".into(), link: 1, offset: [1.0, 0.0, 0.0], side: None }],
        };
        let p = forward_kinematics(&chain, &[0.0]).unwrap();
        // roll pi/2 turns the local x offset into +y
        assert!((p[0] - Vec3::new(1.0, 3.0, 0.0)).norm() < 1e-12);
        // prismatic travel along the rotated x axis
        let p = forward_kinematics(&chain, &[0.5]).unwrap();
        assert!((p[0] - Vec3::new(1.0, 3.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_cycles_and_bad_refs() {
        let mut chain = single_revolute();
        chain.links.push(Link { name: "x".into(), parent: Some(2), origin: Origin::default(), joint: JointSpec::fixed() });
        chain.links.push(Link { name: "y".into(), parent: Some(1), origin: Origin::default(), joint: JointSpec::fixed() });
        assert!(chain.validate().is_err());

        let mut chain = single_revolute();
        chain.keypoints[0].link = 3;
        assert!(chain.validate().is_err());

        let mut chain = single_revolute();
        chain.links[0].joint.axis = [0.0, 0.0, 2.0];
        assert!(chain.validate().is_err());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        assert!(forward_kinematics(&single_revolute(), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn platform_keypoint_counts_are_checked() {
        let mut chain = single_revolute();
        chain.platform = Some("inspire".into());
        chain.keypoints[0].side = Some(Handedness::Left);
        assert!(chain.validate().is_err());
        chain.keypoints = (0..12)
            .map(|i| Keypoint { name: format!("k{i}"), link: 0, offset: [i as f64, 0.0, 0.0], side: Some(Handedness::Left) })
            .collect();
        assert!(chain.validate().is_ok());
    }
}
