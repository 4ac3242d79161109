//! `mdevm` — micro-DE experiment harness.
//!
//! Subcommands: `run` executes a config-driven experiment matrix into an
//! archive directory, `simulate-diversity` runs the Monte-Carlo factor-mode
//! diversity study, `compare` produces a Wilcoxon better/equal/worse report
//! between two cell families of an archive, and `curves` emits a cell's
//! median convergence/diversity curves.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or
//! arguments, 3 completed with failed cells.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mdevm::diversity::{
    monte_carlo_trials_with_cloud, write_cloud_csv, write_samples_csv, DiversitySample,
    TrialDiversityConfig,
};
use mdevm::error::Error;
use mdevm::harness::{self, Archive, ExperimentConfig};
use mdevm::mutation::FactorMode;

/// Constant factor used by `cmf` simulator cells.
const SIMULATOR_CMF: f64 = 0.5;
/// Crossover rate applied by the diversity simulator.
const SIMULATOR_CR: f64 = 0.9;

#[derive(Parser)]
#[command(
    name = "mdevm",
    version,
    about = "Micro differential evolution experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment matrix described by a JSON config file.
    Run {
        /// Path to the JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Archive output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo diversity study over (dimension, population, mode) cells.
    SimulateDiversity {
        /// Dimensions, comma separated (e.g. 2,10,100).
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        /// Population sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        np: Vec<usize>,
        /// Factor modes, comma separated subset of cmf,srmf,vrmf.
        #[arg(long, value_delimiter = ',', required = true)]
        mode: Vec<String>,
        /// Trial vectors per cell.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Random factor range as LO:HI (cmf cells use F=0.5).
        #[arg(long, default_value = "0:2")]
        range: String,
        /// Apply binomial crossover (rate 0.9) to the generated trials.
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        crossover: bool,
        /// RNG seed shared by all cells.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Write the summary CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the raw trial points of the last cell as CSV.
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
    /// Wilcoxon rank-sum comparison between two cell families.
    Compare {
        /// Archive directory produced by `run`.
        #[arg(long)]
        archive: PathBuf,
        /// Reference cell family, e.g. best1_vrmf_np5_d50.
        #[arg(long)]
        reference: String,
        /// Opponent cell family.
        #[arg(long)]
        opponent: String,
        /// Two-sided significance level.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median best-so-far and diversity curves for one cell.
    Curves {
        /// Archive directory produced by `run`.
        #[arg(long)]
        archive: PathBuf,
        /// Cell id, e.g. sphere_best1_vrmf_np5_d50.
        #[arg(long)]
        cell: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(text: &str) -> Result<(f64, f64), Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let parsed = if parts.len() == 2 {
        parts[0].parse::<f64>().ok().zip(parts[1].parse::<f64>().ok())
    } else {
        None
    };
    parsed.ok_or_else(|| {
        Error::InvalidArgument(format!("range must look like LO:HI, got {text:?}"))
    })
}

fn write_or_print(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => Ok(fs::write(path, bytes)?),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { config, workers, out } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            if let Some(workers) = workers {
                config.workers = workers;
            }
            config.validate()?;
            let outcome = harness::run_matrix(&config, &out)?;
            let cells = outcome.archive.manifest().cells.len();
            eprintln!(
                "wrote {cells} cells x {} runs to {}",
                config.n_run,
                out.display()
            );
            if outcome.failed_cells > 0 {
                eprintln!("{} cells failed; see manifest.json", outcome.failed_cells);
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SimulateDiversity {
            d,
            np,
            mode,
            samples,
            range,
            crossover,
            seed,
            out,
            cloud,
        } => {
            let range = parse_range(&range)?;
            let mut results: Vec<DiversitySample> = Vec::new();
            let mut last_cloud: Vec<Vec<f64>> = Vec::new();
            for &dimension in &d {
                for &population_size in &np {
                    for mode_name in &mode {
                        let factor_mode =
                            FactorMode::from_name(mode_name, SIMULATOR_CMF, range)?;
                        let config = TrialDiversityConfig {
                            dimension,
                            population_size,
                            mode: factor_mode,
                            samples,
                            crossover_rate: SIMULATOR_CR,
                            with_crossover: crossover,
                        };
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let (sample, points) = monte_carlo_trials_with_cloud(&config, &mut rng)?;
                        results.push(sample);
                        last_cloud = points;
                    }
                }
            }
            let mut buffer = Vec::new();
            write_samples_csv(&results, &mut buffer)?;
            write_or_print(out.as_ref(), &buffer)?;
            if let Some(cloud_path) = cloud {
                let mut cloud_buffer = Vec::new();
                write_cloud_csv(&last_cloud, &mut cloud_buffer)?;
                fs::write(cloud_path, cloud_buffer)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            archive,
            reference,
            opponent,
            alpha,
            out,
        } => {
            let archive = Archive::load(&archive)?;
            let report = harness::compare(&archive, &reference, &opponent, alpha)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            write_or_print(out.as_ref(), json.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Curves { archive, cell, out } => {
            let archive = Archive::load(&archive)?;
            let rows = harness::emit_curves(&archive, &cell)?;
            let mut buffer = Vec::new();
            harness::write_curves_csv(&rows, &mut buffer)?;
            write_or_print(out.as_ref(), &buffer)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            match error {
                Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Json(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}
