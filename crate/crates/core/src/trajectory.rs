//! The joint trajectory schema shared by every pipeline stage, and its
//! JSON Lines encoding.
//!
//! A trajectory file is one header object followed by one object per frame:
//!
//! ```text
//! {"kind":"header","version":1,"fps":30.0,"intrinsics":{...},"joints":[{"handedness":"left","semantic_id":0},...]}
//! {"frame":0,"positions":[[x,y,z],...],"valid":[true,...]}
//! ```

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, structure, Error, Result};
use crate::geometry::{project, CameraIntrinsics, ProjectedJoint, Vec3};

/// Upper bound on joints per trajectory (two 21-joint hands).
pub const MAX_JOINTS: usize = 42;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    pub fn other(self) -> Self {
        match self {
            Handedness::Left => Handedness::Right,
            Handedness::Right => Handedness::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointInfo {
    pub handedness: Handedness,
    pub semantic_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    kind: String,
    version: u32,
    fps: f64,
    intrinsics: CameraIntrinsics,
    joints: Vec<JointInfo>,
}

/// One frame record of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame: u64,
    pub positions: Vec<[f64; 3]>,
    pub valid: Vec<bool>,
}

/// Camera-frame joint positions over time (meters) with per-joint validity.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub fps: f64,
    pub intrinsics: CameraIntrinsics,
    pub joints: Vec<JointInfo>,
    pub frames: Vec<FrameRecord>,
}

impl JointTrajectory {
    pub fn new(fps: f64, intrinsics: CameraIntrinsics, joints: Vec<JointInfo>) -> Self {
        Self { fps, intrinsics, joints, frames: Vec::new() }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn position(&self, frame: usize, joint: usize) -> Vec3 {
        Vec3::from(self.frames[frame].positions[joint])
    }

    pub fn push_frame(&mut self, frame: u64, positions: Vec<[f64; 3]>, valid: Vec<bool>) {
        self.frames.push(FrameRecord { frame, positions, valid });
    }

    /// Projects every joint of one frame. Joints flagged invalid in the
    /// trajectory come back invalid whatever their depth.
    pub fn project_frame(&self, frame: usize) -> Vec<ProjectedJoint> {
        let rec = &self.frames[frame];
        rec.positions
            .iter()
            .zip(&rec.valid)
            .map(|(p, &ok)| {
                let mut pj = project(&Vec3::from(*p), &self.intrinsics);
                pj.valid &= ok;
                pj
            })
            .collect()
    }

    /// Per-joint in-image flags for one frame: valid, in front of the camera,
    /// and projecting inside the image bounds.
    pub fn in_bounds(&self, frame: usize) -> Vec<bool> {
        self.project_frame(frame)
            .iter()
            .map(|p| p.valid && self.intrinsics.contains(p.u))
            .collect()
    }

    pub fn slice(&self, start: usize, end_inclusive: usize) -> Self {
        Self { frames: self.frames[start..=end_inclusive].to_vec(), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if !(self.fps > 0.0) {
            return Err(invalid("fps must be positive"));
        }
        if self.joints.len() > MAX_JOINTS {
            return Err(invalid(format!("{} joints exceeds the limit of {MAX_JOINTS}", self.joints.len())));
        }
        let mut seen = HashSet::new();
        for j in &self.joints {
            if !seen.insert((j.handedness, j.semantic_id)) {
                return Err(structure(format!(
                    "duplicate semantic id {} for {:?} hand",
                    j.semantic_id, j.handedness
                )));
            }
        }
        let n = self.joints.len();
        let mut last: Option<u64> = None;
        for rec in &self.frames {
            if rec.positions.len() != n || rec.valid.len() != n {
                return Err(shape(format!("frame {} does not carry {n} joints", rec.frame)));
            }
            if rec.positions.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid(format!("frame {} has non-finite positions", rec.frame)));
            }
            if last.is_some_and(|l| rec.frame <= l) {
                return Err(structure(format!("frame {} is out of order", rec.frame)));
            }
            last = Some(rec.frame);
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            kind: "header".into(),
            version: FORMAT_VERSION,
            fps: self.fps,
            intrinsics: self.intrinsics,
            joints: self.joints.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for rec in &self.frames {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let (_, first) = lines.next().ok_or_else(|| Error::Format("trajectory file is empty".into()))?;
        let header: Header = serde_json::from_str(&first?)
            .map_err(|e| Error::Format(format!("line 1: bad trajectory header: {e}")))?;
        if header.kind != "header" || header.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "expected header kind 'header' version {FORMAT_VERSION}, got '{}' v{}",
                header.kind, header.version
            )));
        }
        let mut traj = JointTrajectory::new(header.fps, header.intrinsics, header.joints);
        for (lineno, line) in lines {
            let rec: FrameRecord = serde_json::from_str(&line?)
                .map_err(|e| Error::Format(format!("line {lineno}: bad frame record: {e}")))?;
            traj.frames.push(rec);
        }
        traj.validate()?;
        Ok(traj)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}
