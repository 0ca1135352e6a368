use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gsaug_core::augment::{self, RunConfig};
use gsaug_core::synthetic::{write_synthetic, SynthConfig};
use gsaug_core::{Error, PlacementMode};

#[derive(Parser)]
#[command(name = "gsaug", version, about = "Insert Gaussian-splat agents into driving scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Place agents, render augmented images and write annotations.
    Augment {
        #[arg(long)]
        config: PathBuf,
        /// Augmented copies per input frame.
        #[arg(long)]
        copies: Option<u32>,
        /// Placement mode (random-pose, pose-aligned, min-occlusion, max-occlusion).
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "GSA_THREADS")]
        threads: Option<usize>,
    },
    /// Render the unedited scenes.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "GSA_THREADS")]
        threads: Option<usize>,
    },
    /// Check the config, bundles and assets without writing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a procedural scene bundle, asset library and run config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Preset::Default)]
        preset: Preset,
        #[arg(long)]
        cameras: Option<usize>,
        #[arg(long)]
        assets: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Six cameras, ten assets.
    Default,
    /// Three cameras, about 200 primitives, two assets.
    Small,
}

fn load_config(
    path: &PathBuf,
    copies: Option<u32>,
    mode: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(c) = copies {
        cfg.copies = c;
    }
    if let Some(m) = mode {
        cfg.policy.mode = m.parse::<PlacementMode>()?;
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Augment {
            config,
            copies,
            mode,
            seed,
            out,
            threads,
        } => {
            let cfg = load_config(&config, copies, mode, seed, out)?;
            let s = augment::run_augment(&cfg, threads)?;
            eprintln!(
                "augment: {} frames, {} images, {} agents accepted, {} rejected, {:.2}s -> {}",
                s.manifest.frames.len(),
                s.images_written,
                s.manifest.accepted,
                s.manifest.rejected,
                s.timing.total_seconds,
                cfg.output_dir.display()
            );
        }
        Command::Render { config, out, threads } => {
            let cfg = load_config(&config, None, None, None, out)?;
            let s = augment::run_render(&cfg, threads)?;
            eprintln!(
                "render: {} images, {:.2}s -> {}",
                s.images_written,
                s.timing.total_seconds,
                cfg.output_dir.display()
            );
        }
        Command::Validate { config } => {
            let cfg = load_config(&config, None, None, None, None)?;
            let p = augment::validate(&cfg)?;
            println!(
                "ok: {} bundles, {} assets, {} frames",
                p.scenes.len(),
                p.library.len(),
                p.frame_count(cfg.copies)
            );
        }
        Command::Synth {
            out,
            preset,
            cameras,
            assets,
            seed,
        } => {
            let mut cfg = match preset {
                Preset::Default => SynthConfig::default(),
                Preset::Small => SynthConfig::small(),
            };
            cfg.cameras = cameras.unwrap_or(cfg.cameras);
            cfg.assets = assets.unwrap_or(cfg.assets);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let paths = write_synthetic(&out, &cfg)?;
            println!("{}", paths.run_config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
