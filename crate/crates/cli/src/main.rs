use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gclab_cli::bench::BenchConfig;
use gclab_cli::commands::{self, TrainArgs};
use gclab_core::models::Arch;

/// Graph convolutional kernel laboratory: generate block-model datasets,
/// inspect kernel spectra, train GCN/SGC classifiers, run the benchmark
/// grid, and verify the library's numerical invariants.
///
/// Kernel strings: laplacian | power:k=<int> | limit | linear |
/// poisson:r=<float> | cheb:r=<float>,K=<int>
#[derive(Parser)]
#[command(name = "gclab", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic SBM dataset directory
    Generate {
        /// Built-in preset: smallgap or smallratio
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// JSON file holding a full SbmConfig
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output dataset directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a kernel's eigenvalues and scalar map as CSV
    Spectrum {
        /// Dataset directory
        #[arg(long)]
        dataset: PathBuf,
        /// Kernel string
        #[arg(long)]
        kernel: String,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a single classifier and report its accuracy
    Train {
        /// Dataset directory
        #[arg(long)]
        dataset: PathBuf,
        /// Kernel string
        #[arg(long)]
        kernel: String,
        /// Architecture: gcn or sgc
        #[arg(long, default_value = "gcn")]
        arch: Arch,
        #[arg(long)]
        hidden_dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        weight_decay: Option<f64>,
        /// Kernel power used by SGC
        #[arg(long)]
        sgc_power: Option<u32>,
        /// Update rule: adam or sgd
        #[arg(long)]
        optimizer: Option<String>,
        /// Weight initialization seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full TrainReport JSON here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the dataset × kernel × model × seed benchmark grid
    Bench {
        /// JSON BenchConfig; the default grid mirrors the paper's table
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated preset names (overrides config datasets)
        #[arg(long)]
        datasets: Option<String>,
        /// Comma-separated kernel strings (overrides config kernels)
        #[arg(long)]
        kernels: Option<String>,
        /// Comma-separated architectures (overrides config models)
        #[arg(long)]
        models: Option<String>,
        /// Comma-separated seeds (overrides config seeds)
        #[arg(long)]
        seeds: Option<String>,
        /// Override every model's epoch count
        #[arg(long)]
        epochs: Option<usize>,
        /// Raw results CSV path; the summary lands next to it
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the numerical invariant suite (exit 2 on any failure)
    Check {
        /// Base seed for the random instances
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} `{tok}`: {e}"))
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Generate {
            preset,
            config,
            seed,
            out,
        } => {
            commands::cmd_generate(preset.as_deref(), config.as_deref(), seed, &out)?;
            Ok(true)
        }
        Command::Spectrum {
            dataset,
            kernel,
            out,
        } => {
            commands::cmd_spectrum(&dataset, &kernel, &out)?;
            Ok(true)
        }
        Command::Train {
            dataset,
            kernel,
            arch,
            hidden_dim,
            epochs,
            learning_rate,
            weight_decay,
            sgc_power,
            optimizer,
            seed,
            out,
        } => {
            commands::cmd_train(&TrainArgs {
                dataset_dir: &dataset,
                kernel: &kernel,
                arch,
                hidden_dim,
                epochs,
                learning_rate,
                weight_decay,
                sgc_power,
                optimizer,
                seed,
                out: out.as_deref(),
            })?;
            Ok(true)
        }
        Command::Bench {
            config,
            datasets,
            kernels,
            models,
            seeds,
            epochs,
            out,
        } => {
            let mut bench_config = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        anyhow::anyhow!("reading bench config {}: {e}", path.display())
                    })?;
                    serde_json::from_str::<BenchConfig>(&text).map_err(|e| {
                        anyhow::anyhow!("parsing bench config {}: {e}", path.display())
                    })?
                }
                None => BenchConfig::default_grid(),
            };
            if let Some(list) = datasets {
                bench_config.datasets = parse_list::<String>(&list, "dataset")?
                    .into_iter()
                    .map(|name| gclab_cli::bench::DatasetRef {
                        name: name.clone(),
                        preset: Some(name),
                        path: None,
                    })
                    .collect();
            }
            if let Some(list) = kernels {
                bench_config.kernels = parse_list::<String>(&list, "kernel")?;
            }
            if let Some(list) = models {
                bench_config.models = parse_list::<Arch>(&list, "model")?
                    .into_iter()
                    .map(|arch| gclab_cli::bench::ModelRef {
                        arch,
                        ..Default::default()
                    })
                    .collect();
            }
            if let Some(list) = seeds {
                bench_config.seeds = parse_list::<u64>(&list, "seed")?;
            }
            if let Some(epochs) = epochs {
                for model in &mut bench_config.models {
                    model.epochs = Some(epochs);
                }
            }
            commands::cmd_bench(&bench_config, &out)?;
            Ok(true)
        }
        Command::Check { seed } => {
            let outcomes = commands::cmd_check(seed);
            Ok(outcomes.iter().all(|o| o.passed))
        }
    }
}

fn main() -> ExitCode {
    // Exit codes: 0 success, 1 usage error, 2 check-suite failure,
    // 3 runtime failure.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successful exits.
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}
