use std::path::Path;

use egoctl_core::pipeline::{ConditionPipeline, FrameFields};
use egoctl_core::{FeatureMap, JointTrajectory, PipelineConfig, Tensor};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{input_hashes, sha256_hex, CliResult, Outcome, Writer};

#[derive(Serialize)]
struct Shapes {
    y: Vec<usize>,
    motion: Vec<usize>,
    geo: Vec<usize>,
    c_geo: Vec<usize>,
}

#[derive(Serialize)]
struct Details {
    seeds: Seeds,
    shapes: Shapes,
    parameter_hashes: std::collections::BTreeMap<String, String>,
    parameter_counts: ParamCounts,
    summary: egoctl_core::pipeline::ConditionSummary,
}

#[derive(Serialize)]
struct Seeds {
    identity_table: u64,
    mlp: u64,
    head: u64,
}

#[derive(Serialize)]
struct ParamCounts {
    mlp: usize,
    head: usize,
}

fn load_latent(path: &Path) -> CliResult<FeatureMap> {
    Ok(Tensor::load(path)?.to_feature_map()?)
}

pub fn run(trajectory: &Path, latent_path: &Path, out: &Path, cfg: &PipelineConfig) -> CliResult<Outcome> {
    let traj = JointTrajectory::load(trajectory)?;
    let latent = load_latent(latent_path)?;
    let pipe = ConditionPipeline::new(cfg, latent.channels, latent.gh, latent.gw)?;
    let features = pipe.source_features(&traj, &latent)?;
    let frames = (0..traj.num_frames())
        .into_par_iter()
        .map(|t| pipe.frame(&traj, t, &features))
        .collect::<egoctl_core::Result<Vec<FrameFields>>>()?;
    let result = pipe.finish(&latent, features, frames)?;

    let mut w = Writer::new(out)?;
    let tensors = [
        ("y.egoc", Tensor::from_volume(&result.condition)?),
        ("motion.egoc", Tensor::from_volume(&result.motion)?),
        ("geo.egoc", Tensor::from_volume(&result.geo)?),
        ("c_geo.egoc", Tensor::from_volume(&result.c_geo)?),
    ];
    for (name, t) in &tensors {
        w.bytes(name, &t.encode())?;
    }

    let e = &cfg.embedding;
    let h = &pipe.head;
    let params = [
        ("identity_table", Tensor::from_f64(vec![pipe.table.n_max, pipe.table.dim], &pipe.table.entries)?),
        ("mlp_w1", Tensor::from_f64(vec![pipe.mlp.hidden, pipe.mlp.input], &pipe.mlp.w1)?),
        ("mlp_b1", Tensor::from_f64(vec![pipe.mlp.hidden], &pipe.mlp.b1)?),
        ("mlp_w2", Tensor::from_f64(vec![pipe.mlp.output, pipe.mlp.hidden], &pipe.mlp.w2)?),
        ("mlp_b2", Tensor::from_f64(vec![pipe.mlp.output], &pipe.mlp.b2)?),
        ("head_weight", Tensor::from_f64(vec![h.out_channels, h.in_channels, h.kt, h.kh, h.kw], &h.weights)?),
        ("head_bias", Tensor::from_f64(vec![h.out_channels], &h.bias)?),
        ("ln_gamma", Tensor::from_f64(vec![h.out_channels], &h.ln_gamma)?),
        ("ln_beta", Tensor::from_f64(vec![h.out_channels], &h.ln_beta)?),
    ];
    let mut parameter_hashes = std::collections::BTreeMap::new();
    for (name, t) in &params {
        let bytes = t.encode();
        w.bytes(&format!("params/{name}.egoc"), &bytes)?;
        parameter_hashes.insert(name.to_string(), sha256_hex(&bytes));
    }

    let details = Details {
        seeds: Seeds { identity_table: e.table_seed, mlp: e.mlp_seed, head: e.head_seed },
        shapes: Shapes {
            y: tensors[0].1.dims.clone(),
            motion: tensors[1].1.dims.clone(),
            geo: tensors[2].1.dims.clone(),
            c_geo: tensors[3].1.dims.clone(),
        },
        parameter_hashes,
        parameter_counts: ParamCounts { mlp: pipe.mlp.parameter_count(), head: h.parameter_count() },
        summary: result.summary(traj.num_frames()),
    };
    w.finish(
        "condition",
        cfg,
        input_hashes(&[("trajectory", trajectory), ("latent", latent_path)])?,
        details,
    )?;
    Ok(Outcome::Done)
}
