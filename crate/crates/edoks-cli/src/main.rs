mod bapps;
mod commands;
mod npy;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edoks::metric::MetricConfig;

use commands::OutputFormat;

#[derive(Parser)]
#[command(
    name = "edoks",
    version,
    about = "Perceptual image similarity: texture transport + Oklab color distance",
    long_about = "Scores image pairs with a two-term perceptual metric (Earth Mover's \
Distance over Gabor texture signatures, plus mean Oklab color distance), emits \
explainability heatmaps, and runs human-judgment evaluation protocols."
)]
struct Cli {
    /// Worker threads (falls back to EDOKS_JOBS, then all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MetricArgs {
    /// Texture term weight in [0, 1]
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,

    /// Patch side in pixels (clamped to the image for small inputs)
    #[arg(long, default_value_t = 128)]
    patch_size: u32,

    /// Constant added before taking the reciprocal similarity
    #[arg(long, default_value_t = 1e-12)]
    c: f64,

    /// Filter frequencies in cycles/pixel, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    scales: Option<Vec<f64>>,

    /// Filter orientations in degrees, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    orientations: Option<Vec<f64>>,
}

impl MetricArgs {
    fn config(&self) -> MetricConfig {
        let mut cfg = MetricConfig {
            alpha: self.alpha,
            patch_size: self.patch_size,
            c: self.c,
            ..MetricConfig::default()
        };
        if let Some(scales) = &self.scales {
            cfg.scales = scales.clone();
        }
        if let Some(orientations) = &self.orientations {
            cfg.orientations = orientations.clone();
        }
        cfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score one image pair and print the report JSON
    Compare {
        path_a: PathBuf,
        path_b: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Also write the three difference maps into this directory
        #[arg(long, value_name = "DIR")]
        emit_maps: Option<PathBuf>,
        /// Additionally render heat-ramp versions of the maps
        #[arg(long)]
        heat: bool,
        /// Additionally dump raw float maps
        #[arg(long)]
        raw_maps: bool,
    },
    /// Score every pair of a manifest CSV (header: path_a,path_b)
    Batch {
        manifest: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Output format on stdout
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Two-alternative-forced-choice accuracy over a triplet manifest
    #[command(name = "eval-2afc")]
    Eval2afc {
        manifest: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Write per-sample scores here
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Same/not-same analysis and MOS correlations over a JND manifest
    #[command(name = "eval-jnd")]
    EvalJnd {
        manifest: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Write per-sample scores here
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// SROCC as a function of alpha over a JND manifest (CSV: alpha,srocc)
    AlphaSweep {
        manifest: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Alpha grid step
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Write the curve to a file instead of stdout
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compute and write the explainability maps for one pair
    Maps {
        path_a: PathBuf,
        path_b: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Output directory for the maps
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        /// Additionally render heat-ramp versions of the maps
        #[arg(long)]
        heat: bool,
        /// Additionally dump raw float maps
        #[arg(long)]
        raw_maps: bool,
    },
    /// Time one comparison at its native resolution (informational)
    Bench {
        path_a: PathBuf,
        path_b: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// Timed repetitions after one warm-up run
        #[arg(long, default_value_t = 5)]
        repeats: u32,
    },
    /// Convert a local BAPPS tree into evaluation manifests
    BappsManifest {
        /// Dataset root (the directory holding 2afc/ and jnd/)
        root: PathBuf,
        /// Where to write the manifest CSVs
        out_dir: PathBuf,
        /// Dataset split to convert
        #[arg(long, default_value = "val")]
        split: String,
    },
}

fn run(cli: Cli) -> edoks::Result<i32> {
    let jobs = cli.jobs.or_else(|| {
        std::env::var("EDOKS_JOBS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .ok();
    }

    match cli.command {
        Command::Compare {
            path_a,
            path_b,
            metric,
            emit_maps,
            heat,
            raw_maps,
        } => commands::compare(
            &path_a,
            &path_b,
            &metric.config(),
            emit_maps.as_deref(),
            heat,
            raw_maps,
        ),
        Command::Batch {
            manifest,
            metric,
            format,
        } => commands::batch(&manifest, &metric.config(), format),
        Command::Eval2afc {
            manifest,
            metric,
            out_dir,
        } => commands::eval_2afc(&manifest, &metric.config(), out_dir.as_deref()),
        Command::EvalJnd {
            manifest,
            metric,
            out_dir,
        } => commands::eval_jnd(&manifest, &metric.config(), out_dir.as_deref()),
        Command::AlphaSweep {
            manifest,
            metric,
            step,
            out,
        } => commands::alpha_sweep_cmd(&manifest, &metric.config(), step, out.as_deref()),
        Command::Maps {
            path_a,
            path_b,
            metric,
            out_dir,
            heat,
            raw_maps,
        } => commands::maps(&path_a, &path_b, &metric.config(), &out_dir, heat, raw_maps),
        Command::Bench {
            path_a,
            path_b,
            metric,
            repeats,
        } => commands::bench(&path_a, &path_b, &metric.config(), repeats),
        Command::BappsManifest {
            root,
            out_dir,
            split,
        } => commands::bapps_manifest(&root, &out_dir, &split),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(commands::exit_code(&err) as u8)
        }
    }
}
