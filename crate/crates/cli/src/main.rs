//! `texmerge`: file-level driver for the texturing pipeline.

mod commands;
mod config;
mod curate;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{load_config, Overrides, Pipeline};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "texmerge", version, about = "Multiview SVBRDF texture baking pipeline")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    atlas_res: Option<usize>,
    /// Relative depth tolerance for warping.
    #[arg(long, global = true)]
    eps_rel: Option<f64>,
    /// Reserved; every operation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rasterize depth, normal, contour and coverage buffers for every view.
    Gbuffer {
        #[arg(long)]
        contour_depth: Option<f64>,
        /// Normal crease angle in degrees.
        #[arg(long)]
        contour_angle: Option<f64>,
        /// Also write procedural ground-truth material maps into the view directory.
        #[arg(long)]
        procedural_maps: bool,
    },
    /// Warp one view into another and export the disocclusion mask.
    Warp {
        #[arg(long)]
        src: usize,
        #[arg(long)]
        dst: usize,
        /// Image to warp; defaults to the source view's basecolor.
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Merge the per-view material maps into a texture atlas.
    Bake,
    /// Relight the baked atlas.
    Render {
        #[arg(long)]
        view: Option<usize>,
    },
    /// Image metrics and the flicker consistency metric.
    Metrics,
    /// Drop small files, crop to squares and resize.
    Curate {
        dataset: PathBuf,
        #[arg(long, default_value_t = curate::DEFAULT_MIN_BYTES)]
        min_bytes: u64,
        #[arg(long, default_value_t = curate::DEFAULT_TARGET_RES)]
        target_res: usize,
        /// Move small files here instead of only listing them.
        #[arg(long)]
        move_to: Option<PathBuf>,
    },
}

fn pipeline(cli: &Cli) -> Result<Pipeline, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Validation("--config is required for this command".into()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let ov = Overrides { out: cli.out.clone(), atlas_res: cli.atlas_res, eps_rel: cli.eps_rel };
    load_config(path)?.resolve(&base, &ov)
}

fn run(cli: &Cli) -> Result<serde_json::Value, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Gbuffer { contour_depth, contour_angle, procedural_maps } => {
            let p = pipeline(cli)?;
            let mut contour = p.contour;
            if let Some(d) = contour_depth {
                contour.depth_rel_thresh = *d;
            }
            if let Some(a) = contour_angle {
                contour.normal_angle_thresh = *a;
            }
            if !(contour.depth_rel_thresh > 0.0 && contour.normal_angle_thresh > 0.0) {
                return Err(CliError::Validation("contour thresholds must be positive".into()));
            }
            commands::cmd_gbuffer(&p, contour, *procedural_maps)
        }
        Command::Warp { src, dst, image } => commands::cmd_warp(&pipeline(cli)?, *src, *dst, image.as_deref()),
        Command::Bake => commands::cmd_bake(&pipeline(cli)?),
        Command::Render { view } => commands::cmd_render(&pipeline(cli)?, *view),
        Command::Metrics => commands::cmd_metrics(&pipeline(cli)?),
        Command::Curate { dataset, min_bytes, target_res, move_to } => {
            let out = cli.out.clone().unwrap_or_else(|| dataset.join("curated"));
            let report = curate::curate(dataset, *min_bytes, *target_res, &out, move_to.as_deref())?;
            eprintln!("removed {:.2}% of {} files", 100.0 * report.removed_fraction, report.total_files);
            serde_json::to_value(report).map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("json value");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
