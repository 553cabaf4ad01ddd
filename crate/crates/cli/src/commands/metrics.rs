use std::path::{Path, PathBuf};

use egoctl_core::io::{load_jsonl, AlignScope, MetricsConfig};
use egoctl_core::metrics::{procrustes_align, psnr, ssim, Image, SimilarityTransform};
use egoctl_core::{Handedness, JointTrajectory, PipelineConfig, Vec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{fail, input_hashes, CliError, CliResult, Outcome, Writer};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub frame: u64,
    pub vertices: Vec<[f64; 3]>,
}

#[derive(Debug, Default, Serialize)]
struct Aggregate {
    #[serde(skip_serializing_if = "Option::is_none")]
    mpjpe_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mpvpe_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psnr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ssim: Option<f64>,
}

#[derive(Serialize)]
struct JointFrame {
    frame: u64,
    mpjpe_mm: Option<f64>,
    joints: usize,
}

#[derive(Serialize)]
struct VertexFrame {
    frame: u64,
    mpvpe_mm: f64,
}

#[derive(Serialize)]
struct ImageFrame {
    index: usize,
    pred: String,
    reference: String,
    psnr_db: f64,
    ssim: f64,
}

#[derive(Serialize)]
struct Report {
    align: bool,
    align_scope: AlignScope,
    /// Distribution metrics that need pretrained networks and are not computed.
    excluded: [&'static str; 2],
    aggregate: Aggregate,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    joints: Vec<JointFrame>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    vertices: Vec<VertexFrame>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    images: Vec<ImageFrame>,
    alignment_failures: usize,
}

pub struct MetricsArgs<'a> {
    pub pred: Option<&'a Path>,
    pub reference: Option<&'a Path>,
    pub pred_vertices: Option<&'a Path>,
    pub ref_vertices: Option<&'a Path>,
    pub pred_images: Option<&'a Path>,
    pub ref_images: Option<&'a Path>,
    pub out: &'a Path,
}

fn pair<'a>(a: Option<&'a Path>, b: Option<&'a Path>, what: &str) -> CliResult<Option<(&'a Path, &'a Path)>> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => fail(format!("{what} need both a prediction and a reference")),
    }
}

fn aligned(t: Option<&SimilarityTransform>, p: &Vec3) -> Vec3 {
    t.map_or(*p, |t| t.apply(p))
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-frame joint errors in millimeters. Each hand is aligned on its own;
/// a hand needs three joints valid in both trajectories to be scored when
/// alignment is on.
fn joint_errors(pred: &JointTrajectory, reference: &JointTrajectory, m: &MetricsConfig) -> CliResult<(Vec<Vec<f64>>, usize)> {
    if pred.num_frames() != reference.num_frames() {
        return fail(format!("prediction has {} frames, reference has {}", pred.num_frames(), reference.num_frames()));
    }
    if pred.joints != reference.joints {
        return fail("prediction and reference list different joints");
    }
    let frames = pred.num_frames();
    let hand_joints = |t: usize, hand: Handedness| -> Vec<usize> {
        (0..pred.num_joints())
            .filter(|&j| pred.joints[j].handedness == hand && pred.frames[t].valid[j] && reference.frames[t].valid[j])
            .collect()
    };
    let mut errors = vec![Vec::new(); frames];
    let mut failures = 0;
    for hand in [Handedness::Left, Handedness::Right] {
        let sets: Vec<Vec<usize>> = (0..frames).map(|t| hand_joints(t, hand)).collect();
        let points = |t: usize, traj: &JointTrajectory| -> Vec<Vec3> { sets[t].iter().map(|&j| traj.position(t, j)).collect() };
        match (m.align, m.align_scope) {
            (false, _) => {
                for t in 0..frames {
                    for (p, r) in points(t, pred).iter().zip(points(t, reference)) {
                        errors[t].push((p - r).norm() * 1000.0);
                    }
                }
            }
            (true, AlignScope::PerFrameHand) => {
                let per: Vec<(Vec<f64>, bool)> = (0..frames)
                    .into_par_iter()
                    .map(|t| {
                        let (p, r) = (points(t, pred), points(t, reference));
                        if p.len() < 3 {
                            return (Vec::new(), false);
                        }
                        match procrustes_align(&p, &r) {
                            Ok(tf) => (p.iter().zip(&r).map(|(a, b)| (aligned(Some(&tf), a) - b).norm() * 1000.0).collect(), false),
                            Err(_) => (Vec::new(), true),
                        }
                    })
                    .collect();
                for (t, (e, failed)) in per.into_iter().enumerate() {
                    errors[t].extend(e);
                    failures += usize::from(failed);
                }
            }
            (true, AlignScope::PerSequence) => {
                let all_p: Vec<Vec3> = (0..frames).flat_map(|t| points(t, pred)).collect();
                let all_r: Vec<Vec3> = (0..frames).flat_map(|t| points(t, reference)).collect();
                if all_p.len() < 3 {
                    continue;
                }
                match procrustes_align(&all_p, &all_r) {
                    Ok(tf) => {
                        for t in 0..frames {
                            for (p, r) in points(t, pred).iter().zip(points(t, reference)) {
                                errors[t].push((aligned(Some(&tf), p) - r).norm() * 1000.0);
                            }
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    Ok((errors, failures))
}

fn vertex_errors(pred: &[VertexRecord], reference: &[VertexRecord], m: &MetricsConfig) -> CliResult<Vec<VertexFrame>> {
    if pred.len() != reference.len() {
        return fail(format!("prediction has {} vertex frames, reference has {}", pred.len(), reference.len()));
    }
    let to_vec = |r: &VertexRecord| -> Vec<Vec3> { r.vertices.iter().map(|&v| Vec3::from(v)).collect() };
    for (p, r) in pred.iter().zip(reference) {
        if p.frame != r.frame || p.vertices.len() != r.vertices.len() {
            return fail(format!("vertex frame {} does not correspond between prediction and reference", p.frame));
        }
    }
    let global = if m.align && m.align_scope == AlignScope::PerSequence {
        let all_p: Vec<Vec3> = pred.iter().flat_map(to_vec).collect();
        let all_r: Vec<Vec3> = reference.iter().flat_map(to_vec).collect();
        Some(procrustes_align(&all_p, &all_r)?)
    } else {
        None
    };
    pred.par_iter()
        .zip(reference)
        .map(|(p, r)| {
            let (pv, rv) = (to_vec(p), to_vec(r));
            let value = match (&global, m.align) {
                (Some(tf), _) => {
                    pv.iter().zip(&rv).map(|(a, b)| (tf.apply(a) - b).norm()).sum::<f64>() / pv.len() as f64 * 1000.0
                }
                (None, align) => egoctl_core::metrics::mpvpe(&pv, &rv, align)?,
            };
            Ok(VertexFrame { frame: p.frame, mpvpe_mm: value })
        })
        .collect::<egoctl_core::Result<Vec<_>>>()
        .map_err(CliError::from)
}

fn list_images(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm" | "pgm" | "pnm"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn image_scores(pred_dir: &Path, ref_dir: &Path) -> CliResult<Vec<ImageFrame>> {
    let (pred, reference) = (list_images(pred_dir)?, list_images(ref_dir)?);
    if pred.len() != reference.len() {
        return fail(format!("{} predicted frames but {} reference frames", pred.len(), reference.len()));
    }
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    pred.par_iter()
        .zip(&reference)
        .enumerate()
        .map(|(index, (p, r))| {
            let (a, b) = (Image::load(p)?, Image::load(r)?);
            Ok(ImageFrame { index, pred: name(p), reference: name(r), psnr_db: psnr(&a, &b)?, ssim: ssim(&a, &b)? })
        })
        .collect::<egoctl_core::Result<Vec<_>>>()
        .map_err(CliError::from)
}

pub fn run(args: &MetricsArgs, cfg: &PipelineConfig) -> CliResult<Outcome> {
    let joints = pair(args.pred, args.reference, "joint metrics")?;
    let verts = pair(args.pred_vertices, args.ref_vertices, "vertex metrics")?;
    let images = pair(args.pred_images, args.ref_images, "image metrics")?;
    if joints.is_none() && verts.is_none() && images.is_none() {
        return fail("nothing to evaluate: pass trajectories, vertex files or image directories");
    }
    let m = &cfg.metrics;
    let mut report = Report {
        align: m.align,
        align_scope: m.align_scope,
        excluded: ["fid", "fvd"],
        aggregate: Aggregate::default(),
        joints: Vec::new(),
        vertices: Vec::new(),
        images: Vec::new(),
        alignment_failures: 0,
    };
    let mut inputs = Vec::new();
    if let Some((p, r)) = joints {
        let (pred, reference) = (JointTrajectory::load(p)?, JointTrajectory::load(r)?);
        let (errors, failures) = joint_errors(&pred, &reference, m)?;
        report.aggregate.mpjpe_mm = mean(&errors.concat());
        report.joints = errors
            .iter()
            .zip(&pred.frames)
            .map(|(e, rec)| JointFrame { frame: rec.frame, mpjpe_mm: mean(e), joints: e.len() })
            .collect();
        report.alignment_failures += failures;
        inputs.extend([("pred", p), ("reference", r)]);
    }
    if let Some((p, r)) = verts {
        let frames = vertex_errors(&load_jsonl(p)?, &load_jsonl(r)?, m)?;
        report.aggregate.mpvpe_mm = mean(&frames.iter().map(|f| f.mpvpe_mm).collect::<Vec<_>>());
        report.vertices = frames;
        inputs.extend([("pred_vertices", p), ("ref_vertices", r)]);
    }
    if let Some((p, r)) = images {
        let frames = image_scores(p, r)?;
        report.aggregate.psnr_db = mean(&frames.iter().map(|f| f.psnr_db).collect::<Vec<_>>());
        report.aggregate.ssim = mean(&frames.iter().map(|f| f.ssim).collect::<Vec<_>>());
        report.images = frames;
    }
    let mut w = Writer::new(args.out)?;
    w.json("metrics.json", &report)?;
    w.finish("metrics", cfg, input_hashes(&inputs)?, serde_json::json!({}))?;
    Ok(Outcome::Done)
}
