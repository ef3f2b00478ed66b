//! Implementations behind the `gclab` subcommands.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use gclab_core::checks::{self, CheckOutcome};
use gclab_core::models::{train, Arch, ModelConfig, TrainReport};
use gclab_core::numerics::eigh;
use gclab_core::synth::{self, density_stats, SbmConfig};
use gclab_core::KernelSpec;

use crate::bench::{self, preset_by_name, BenchConfig};

/// Generate a dataset directory from a preset or a config file and
/// print its density statistics.
pub fn cmd_generate(
    preset: Option<&str>,
    config_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let mut cfg: SbmConfig = match (preset, config_path) {
        (Some(name), None) => preset_by_name(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        _ => anyhow::bail!("pass exactly one of --preset or --config"),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }

    let dataset = synth::generate(&cfg)?;
    synth::export(&dataset, out)
        .with_context(|| format!("writing dataset to {}", out.display()))?;

    let (rho, eps, label_ratio) = density_stats(&cfg);
    let components = dataset.graph.connected_components().len();
    println!(
        "wrote {} nodes / {} edges to {}",
        dataset.graph.node_count(),
        dataset.graph.edges().len(),
        out.display()
    );
    println!("rho: {rho}");
    println!("epsilon: {eps}");
    println!("label_ratio: {label_ratio}");
    println!("components: {components}");
    Ok(())
}

/// Write a CSV with the kernel's spectrum on a dataset plus a sampled
/// eigenvalue-map curve on [−1, 1] for plotting.
pub fn cmd_spectrum(dataset_dir: &Path, kernel: &str, out: &Path) -> Result<()> {
    let spec: KernelSpec = kernel.parse()?;
    let dataset = synth::ingest(dataset_dir)
        .with_context(|| format!("ingesting dataset {}", dataset_dir.display()))?;
    let lhat = dataset.graph.laplacian_hat();
    let spectrum = eigh(&lhat)?;

    let mut csv = String::from("section,index,lambda,mapped\n");
    for (i, &lambda) in spectrum.eigenvalues.iter().enumerate() {
        csv.push_str(&format!(
            "spectrum,{i},{lambda},{}\n",
            spec.eigenvalue_map(lambda)
        ));
    }
    for j in 0..=200usize {
        let lambda = -1.0 + j as f64 * 0.01;
        csv.push_str(&format!(
            "curve,{j},{lambda},{}\n",
            spec.eigenvalue_map(lambda)
        ));
    }
    fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {} eigenvalues and 201 curve samples to {}",
        spectrum.len(),
        out.display()
    );
    Ok(())
}

pub struct TrainArgs<'a> {
    pub dataset_dir: &'a Path,
    pub kernel: &'a str,
    pub arch: Arch,
    pub hidden_dim: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub sgc_power: Option<u32>,
    pub optimizer: Option<String>,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

/// Run a single training job, optionally writing the JSON report.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainReport> {
    let spec: KernelSpec = args.kernel.parse()?;
    let dataset = synth::ingest(args.dataset_dir)
        .with_context(|| format!("ingesting dataset {}", args.dataset_dir.display()))?;

    let mut config = ModelConfig::defaults(args.arch);
    config.init_seed = args.seed;
    if let Some(h) = args.hidden_dim {
        config.hidden_dim = h;
    }
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        config.learning_rate = lr;
    }
    if let Some(wd) = args.weight_decay {
        config.weight_decay = wd;
    }
    if let Some(k) = args.sgc_power {
        config.sgc_power = k;
    }
    if let Some(opt) = &args.optimizer {
        config.optimizer = opt.parse()?;
    }

    let report = train(&dataset, &spec, &config)?;
    if let Some(out) = args.out {
        let json = serde_json::to_string_pretty(&report)?;
        fs::write(out, json).with_context(|| format!("writing {}", out.display()))?;
    }
    println!(
        "{} {} seed {}: test accuracy {:.4} (val {:.4}, best epoch {})",
        args.arch, spec, args.seed, report.accuracy.test, report.accuracy.val, report.best_epoch
    );
    Ok(report)
}

/// Run a benchmark grid and write raw + summary CSVs.
pub fn cmd_bench(config: &BenchConfig, out: &Path) -> Result<()> {
    let rows = bench::run_grid(config)?;
    fs::write(out, bench::raw_csv(&rows))
        .with_context(|| format!("writing {}", out.display()))?;
    let summary = bench::summarize(config, &rows);
    let summary_out = bench::summary_path(out);
    fs::write(&summary_out, bench::summary_csv(&summary))
        .with_context(|| format!("writing {}", summary_out.display()))?;

    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "ran {} cells ({} failed); raw results in {}, summary in {}",
        rows.len(),
        failures,
        out.display(),
        summary_out.display()
    );
    for row in &summary {
        println!(
            "{:<12} {:<5} {:<16} test {:.4} ± {:.4}",
            row.dataset, row.model, row.kernel, row.test_acc_mean, row.test_acc_std
        );
    }
    Ok(())
}

/// Run the invariant suite, print one line per check, and return the
/// outcomes.
pub fn cmd_check(seed: u64) -> Vec<CheckOutcome> {
    println!("invariant suite seed: {seed} (rerun with --seed {seed} to replay)");
    let outcomes = checks::run_all(seed);
    for outcome in &outcomes {
        println!(
            "{} {} [{}]: observed {:.3e}, bound {:.3e} — {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.reference,
            outcome.observed,
            outcome.bound,
            outcome.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        println!("all {} checks passed", outcomes.len());
    } else {
        println!("{failed} of {} checks FAILED", outcomes.len());
    }
    outcomes
}
