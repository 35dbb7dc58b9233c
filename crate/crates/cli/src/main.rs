//! `zeno`: simulate Zeno-protected probes in a noisy channel, reconstruct the
//! noise-event statistics from detector histograms, and regenerate the
//! standard figures.

mod artifacts;
mod commands;
mod config;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use zeno_core::estimator::EstimatorKind;

use commands::{Figure, RecipeOptions, SamplerKind};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "zeno", version, about = "Zeno-protected sensing of stochastic channel noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (flat TOML). Defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run L seeded trials and write histograms, run reports and a manifest.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Photons per trial.
        #[arg(long)]
        photons: Option<usize>,
    },
    /// Reconstruct event multiplicities from histogram CSV files.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        estimator: Option<EstimatorKind>,
        /// Histogram files, or directories holding them.
        #[arg(required = true)]
        histograms: Vec<PathBuf>,
    },
    /// Find the unit shift giving the target protected survival.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Target survival of the reference realization (default from config).
        #[arg(long)]
        target: Option<f64>,
    },
    /// Regenerate a standard figure with its documented seed.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long)]
        photons: Option<usize>,
    },
    /// Ensemble statistics of the Zeno gain versus the number of measurements.
    ScalingReport {
        #[command(flatten)]
        common: Common,
        /// Coupling distributions to sample.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "constant,uniform,alphabet")]
        sampler: Vec<SamplerKind>,
        /// Numbers of measurements.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,100")]
        events: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        ensemble: usize,
    },
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = config::load_or_default(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        Ok(config)
    }
}

fn out_dir(config: &ExperimentConfig) -> &Path {
    &config.output_dir
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { common, photons } => {
            let mut config = common.load()?;
            if let Some(p) = photons {
                config.photons = config::ensure_positive("photons", p)?;
            }
            let resolved = config.resolve()?;
            let failed = commands::simulate(&resolved, out_dir(&config))?;
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Estimate {
            common,
            estimator,
            histograms,
        } => {
            let config = common.load()?;
            let resolved = config.resolve()?;
            let kind = estimator.unwrap_or(config.estimator);
            commands::estimate(&resolved, &histograms, kind, out_dir(&config))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate { common, target } => {
            let config = common.load()?;
            let target = target.unwrap_or(config.calibration_target);
            commands::calibrate(&config, target, common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reproduce {
            common,
            figure,
            photons,
        } => {
            let config = match &common.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::default(),
            };
            let out = common
                .out
                .clone()
                .unwrap_or_else(|| config.output_dir.join(format!("{figure:?}").to_lowercase()));
            let options = RecipeOptions {
                seed: common.seed,
                photons: photons.map(|p| config::ensure_positive("photons", p)).transpose()?,
            };
            commands::reproduce(&config, figure, &options, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ScalingReport {
            common,
            sampler,
            events,
            ensemble,
        } => {
            let config = common.load()?;
            let resolved = config.resolve()?;
            let ensemble = config::ensure_positive("ensemble", ensemble)?;
            commands::scaling_report(&resolved, &sampler, &events, ensemble, out_dir(&config))
                .context("scaling report failed")?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
