//! `egoctl`: reproducible pipeline runs over hand trajectories, detections,
//! robot chains and evaluation data.
//!
//! Exit codes: 0 success, 2 invalid input, 3 clean negative result
//! (discarded video, no qualifying clip).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use egoctl_core::geoembed::MaskMode;
use egoctl_core::io::AlignScope;
use egoctl_core::PipelineConfig;

use commands::validate::FileKind;
use output::{fail, CliError, CliResult, Outcome, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "egoctl", version, about = "Hand-trajectory conditioning and data pipeline")]
struct Cli {
    /// Pipeline configuration (TOML). Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assign per-frame hand detections to two track slots and filter the video.
    Track {
        #[arg(long)]
        detections: PathBuf,
        /// Total frames in the video; defaults to one past the last detection.
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        lambda_hand: Option<f64>,
        #[arg(long)]
        tau_swap: Option<f64>,
        #[arg(long)]
        tau_gap: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build condition, motion, geometric and fused tensors from a trajectory and a source latent.
    Condition {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        latent: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        gamma_depth: Option<f64>,
        #[arg(long)]
        lambda_depth: Option<f64>,
        #[arg(long)]
        table_seed: Option<u64>,
        #[arg(long)]
        mlp_seed: Option<u64>,
        #[arg(long)]
        head_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit camera extrinsics to annotated keypoints and project every frame.
    Calibrate {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        configs: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        intrinsics: PathBuf,
        /// Nominal mount `pitch,yaw,roll,tx,ty,tz`; the search box is centered on it.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        nominal: Option<Vec<f64>>,
        /// Solve one transform per annotation episode instead of one per scene.
        #[arg(long)]
        per_episode: bool,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward kinematics for a joint-configuration series.
    Fk {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        configs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select the 121-frame clip anchored on peak keypoint visibility.
    Clip {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        episode: Option<String>,
        /// Allow several non-overlapping clips.
        #[arg(long)]
        multi: bool,
        #[arg(long)]
        max_clips: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Joint, vertex and image metrics between predictions and references.
    Metrics {
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        pred_vertices: Option<PathBuf>,
        #[arg(long)]
        ref_vertices: Option<PathBuf>,
        #[arg(long)]
        pred_images: Option<PathBuf>,
        #[arg(long)]
        ref_images: Option<PathBuf>,
        /// Report errors without similarity alignment.
        #[arg(long)]
        no_align: bool,
        #[arg(long, value_enum)]
        align_scope: Option<ScopeArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomly blank joints of a trajectory.
    Mask {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and check a single input file.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        kind: FileKind,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ScopeArg {
    PerFrameHand,
    PerSequence,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    WholeJoint,
    PerFrame,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("EGOCTL_THREADS") else { return Ok(()) };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return fail(format!("EGOCTL_THREADS must be a positive integer, got '{raw}'")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<Outcome> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let outcome = match cli.command {
        Command::Track { detections, frames, lambda_hand, tau_swap, tau_gap, out } => {
            set(&mut cfg.tracker.lambda_hand, lambda_hand);
            set(&mut cfg.tracker.tau_swap, tau_swap);
            set(&mut cfg.tracker.tau_gap, tau_gap);
            cfg.validate()?;
            commands::track::run(&detections, frames, &out, &cfg)?
        }
        Command::Condition {
            trajectory,
            latent,
            sigma,
            scale,
            tau,
            gamma_depth,
            lambda_depth,
            table_seed,
            mlp_seed,
            head_seed,
            out,
        } => {
            set(&mut cfg.grid.sigma, sigma);
            set(&mut cfg.grid.scale, scale);
            set(&mut cfg.occlusion.tau, tau);
            set(&mut cfg.occlusion.gamma_depth, gamma_depth);
            set(&mut cfg.occlusion.lambda_depth, lambda_depth);
            set(&mut cfg.embedding.table_seed, table_seed);
            set(&mut cfg.embedding.mlp_seed, mlp_seed);
            set(&mut cfg.embedding.head_seed, head_seed);
            cfg.validate()?;
            commands::condition::run(&trajectory, &latent, &out, &cfg)?
        }
        Command::Calibrate { chain, configs, annotations, intrinsics, nominal, per_episode, fps, max_iterations, out } => {
            set(&mut cfg.solver.max_iterations, max_iterations);
            cfg.validate()?;
            let nominal: [f64; 6] = match nominal {
                Some(v) => v.try_into().map_err(|_| CliError("--nominal takes six values".into()))?,
                None => [0.0; 6],
            };
            let args = commands::calibrate::CalibrateArgs {
                chain: &chain,
                configs: &configs,
                annotations: &annotations,
                intrinsics: &intrinsics,
                nominal,
                per_episode,
                fps,
                out: &out,
            };
            commands::calibrate::run(&args, &cfg)?
        }
        Command::Fk { chain, configs, out } => commands::fk::run(&chain, &configs, &out, &cfg)?,
        Command::Clip { trajectory, episode, multi, max_clips, out } => {
            cfg.clip.multi |= multi;
            set(&mut cfg.clip.max_clips, max_clips);
            cfg.validate()?;
            commands::clip::run(&trajectory, episode.as_deref(), &out, &cfg)?
        }
        Command::Metrics { pred, reference, pred_vertices, ref_vertices, pred_images, ref_images, no_align, align_scope, out } => {
            if no_align {
                cfg.metrics.align = false;
            }
            set(
                &mut cfg.metrics.align_scope,
                align_scope.map(|s| match s {
                    ScopeArg::PerFrameHand => AlignScope::PerFrameHand,
                    ScopeArg::PerSequence => AlignScope::PerSequence,
                }),
            );
            let args = commands::metrics::MetricsArgs {
                pred: pred.as_deref(),
                reference: reference.as_deref(),
                pred_vertices: pred_vertices.as_deref(),
                ref_vertices: ref_vertices.as_deref(),
                pred_images: pred_images.as_deref(),
                ref_images: ref_images.as_deref(),
                out: &out,
            };
            commands::metrics::run(&args, &cfg)?
        }
        Command::Mask { trajectory, rate, seed, mode, out } => {
            set(&mut cfg.mask.rate, rate);
            set(&mut cfg.mask.seed, seed);
            set(
                &mut cfg.mask.mode,
                mode.map(|m| match m {
                    ModeArg::WholeJoint => MaskMode::WholeJoint,
                    ModeArg::PerFrame => MaskMode::PerFrame,
                }),
            );
            cfg.validate()?;
            commands::mask::run(&trajectory, &out, &cfg)?
        }
        Command::Validate { file, kind } => commands::validate::run(&file, kind)?,
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
