use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topobar::synth::DatasetSpec;
use topobar_cli::commands::{self, Source};
use topobar_cli::{CliError, PipelineArgs, RunConfig};

/// Persistent-homology barcode features for masked grayscale images.
#[derive(Parser)]
#[command(name = "topobar", version)]
struct Cli {
    /// File of `key=value` defaults (border, slices, cap, mode, standardize,
    /// sigmas, cs, seed). Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        n_per_class: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 14)]
        min_diameter: usize,
        #[arg(long, default_value_t = 24)]
        max_diameter: usize,
    },
    /// Compute one barcode panel per manifest image.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Pairwise panel distances as CSV.
    Distmat {
        #[arg(long)]
        panels: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-swept leave-one-out SVM classification.
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, conflicts_with = "panels", required_unless_present = "panels")]
        distmat: Option<PathBuf>,
        #[arg(long)]
        panels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Classical MDS coordinates and scatter plot.
    Embed {
        #[arg(long)]
        distmat: PathBuf,
        /// Optional manifest used to color points by label.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
        k: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw one barcode of a panel.
    Plot {
        #[arg(long)]
        panel: PathBuf,
        /// Barcode key, e.g. `s20_bI_d0` or `i_d1`.
        #[arg(long)]
        key: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cap: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Synth {
            out,
            n_per_class,
            seed,
            noise,
            min_diameter,
            max_diameter,
        } => {
            let cfg = RunConfig::resolve(&PipelineArgs::default(), seed, config)?;
            commands::synth(
                &out,
                &DatasetSpec {
                    n_per_class,
                    seed: cfg.seed,
                    noise,
                    min_diameter,
                    max_diameter,
                },
            )?;
        }
        Command::Extract {
            manifest,
            out,
            pipeline,
        } => {
            let cfg = RunConfig::resolve(&pipeline, None, config)?;
            commands::extract(&manifest, &out, &cfg)?;
        }
        Command::Distmat { panels, out } => {
            commands::distmat(&panels, &out)?;
        }
        Command::Classify {
            manifest,
            distmat,
            panels,
            out,
            pipeline,
        } => {
            let cfg = RunConfig::resolve(&pipeline, None, config)?;
            let source = match (&distmat, &panels) {
                (Some(d), _) => Source::Distmat(d),
                (None, Some(p)) => Source::Panels(p),
                (None, None) => unreachable!("clap requires one source"),
            };
            let report = commands::classify(&manifest, source, &out, &cfg)?;
            print!("{}", report.table());
        }
        Command::Embed {
            distmat,
            manifest,
            k,
            out,
        } => {
            let e = commands::embed(&distmat, manifest.as_deref(), k as usize, &out)?;
            if e.truncated() {
                eprintln!(
                    "warning: only {} of {k} axes have positive eigenvalues",
                    e.axes()
                );
            }
        }
        Command::Plot {
            panel,
            key,
            out,
            cap,
        } => {
            let cfg = RunConfig::resolve(
                &PipelineArgs {
                    cap,
                    ..Default::default()
                },
                None,
                config,
            )?;
            commands::plot(&panel, &key, &out, cfg.cap)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Ok(v) = std::env::var("TOPOBAR_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: cannot size thread pool: {e}");
                    return ExitCode::from(2);
                }
            }
            _ => {
                eprintln!("error: TOPOBAR_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(1);
            }
        }
    }
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(2),
    }
}
