//! Benchmark grid runner: the full cartesian product of
//! dataset × kernel × model × seed, with raw and summary CSV output.
//!
//! Cells are independent: a preset dataset is regenerated from the cell's
//! seed and the model is initialized from the same seed, so results are
//! identical no matter how cells are scheduled. Failures land in the
//! `error` column and the run continues.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gclab_core::models::{train, Arch, ModelConfig};
use gclab_core::synth::{self, generate, ingest, Dataset, SbmConfig};
use gclab_core::KernelSpec;

/// One dataset in the grid: either a named preset (regenerated per seed)
/// or a directory on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// One model column in the grid: an architecture plus config overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModelRef {
    pub arch: Arch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgc_power: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<String>,
}

impl ModelRef {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.arch.to_string())
    }

    pub fn to_config(&self, init_seed: u64) -> Result<ModelConfig> {
        let mut cfg = ModelConfig::defaults(self.arch);
        cfg.init_seed = init_seed;
        if let Some(h) = self.hidden_dim {
            cfg.hidden_dim = h;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(lr) = self.learning_rate {
            cfg.learning_rate = lr;
        }
        if let Some(wd) = self.weight_decay {
            cfg.weight_decay = wd;
        }
        if let Some(k) = self.sgc_power {
            cfg.sgc_power = k;
        }
        if let Some(opt) = &self.optimizer {
            cfg.optimizer = opt.parse()?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetRef>,
    pub kernels: Vec<String>,
    pub models: Vec<ModelRef>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl BenchConfig {
    /// The Table-1-style default grid: both presets, the five kernel
    /// columns, both architectures, five seeds.
    pub fn default_grid() -> Self {
        BenchConfig {
            datasets: vec![
                DatasetRef {
                    name: "smallgap".into(),
                    preset: Some("smallgap".into()),
                    path: None,
                },
                DatasetRef {
                    name: "smallratio".into(),
                    preset: Some("smallratio".into()),
                    path: None,
                },
            ],
            kernels: vec![
                "laplacian".into(),
                "power:k=2".into(),
                "limit".into(),
                "linear".into(),
                "poisson:r=0.5".into(),
            ],
            models: vec![
                ModelRef {
                    arch: Arch::Gcn,
                    ..Default::default()
                },
                ModelRef {
                    arch: Arch::Sgc,
                    ..Default::default()
                },
            ],
            seeds: vec![0, 1, 2, 3, 4],
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.kernels.is_empty() || self.models.is_empty() {
            bail!("bench config needs at least one dataset, kernel, and model");
        }
        if self.seeds.is_empty() {
            bail!("bench config needs at least one seed");
        }
        for dataset in &self.datasets {
            match (&dataset.preset, &dataset.path) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => bail!(
                    "dataset `{}` must set exactly one of `preset` or `path`",
                    dataset.name
                ),
            }
        }
        for kernel in &self.kernels {
            kernel
                .parse::<KernelSpec>()
                .with_context(|| format!("kernel `{kernel}`"))?;
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.datasets.len() * self.kernels.len() * self.models.len() * self.seeds.len()
    }
}

pub fn preset_by_name(name: &str) -> Result<SbmConfig> {
    match name {
        "smallgap" => Ok(synth::preset_smallgap()),
        "smallratio" => Ok(synth::preset_smallratio()),
        other => bail!("unknown preset `{other}` (expected smallgap or smallratio)"),
    }
}

/// One row of the raw results table.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub dataset: String,
    pub model: String,
    pub kernel: String,
    pub seed: u64,
    pub test_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub best_epoch: Option<usize>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

enum DatasetSource {
    Preset(SbmConfig),
    Fixed(Arc<Dataset>),
}

impl DatasetSource {
    fn realize(&self, seed: u64) -> gclab_core::Result<Arc<Dataset>> {
        match self {
            DatasetSource::Preset(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = seed;
                Ok(Arc::new(generate(&cfg)?))
            }
            DatasetSource::Fixed(ds) => Ok(Arc::clone(ds)),
        }
    }
}

/// Run the whole grid. Rows come back in grid order
/// (dataset-major, then kernel, then model, then seed) regardless of
/// how many threads executed them.
pub fn run_grid(config: &BenchConfig) -> Result<Vec<CellResult>> {
    config.validate()?;

    let mut sources = Vec::with_capacity(config.datasets.len());
    for dataset in &config.datasets {
        let source = if let Some(preset) = &dataset.preset {
            DatasetSource::Preset(preset_by_name(preset)?)
        } else {
            let path = dataset.path.as_ref().expect("validated");
            let ds = ingest(path)
                .with_context(|| format!("ingesting dataset `{}`", dataset.name))?;
            DatasetSource::Fixed(Arc::new(ds))
        };
        sources.push(source);
    }

    struct Cell<'a> {
        dataset: &'a DatasetRef,
        source: &'a DatasetSource,
        kernel: KernelSpec,
        kernel_str: &'a str,
        model: &'a ModelRef,
        seed: u64,
    }

    let mut cells = Vec::with_capacity(config.cell_count());
    for (dataset, source) in config.datasets.iter().zip(&sources) {
        for kernel_str in &config.kernels {
            let kernel: KernelSpec = kernel_str.parse()?;
            for model in &config.models {
                for &seed in &config.seeds {
                    cells.push(Cell {
                        dataset,
                        source,
                        kernel,
                        kernel_str,
                        model,
                        seed,
                    });
                }
            }
        }
    }

    let rows: Vec<CellResult> = cells
        .par_iter()
        .map(|cell| {
            let start = Instant::now();
            let outcome = cell
                .source
                .realize(cell.seed)
                .map_err(anyhow::Error::from)
                .and_then(|ds| {
                    let model_cfg = cell.model.to_config(cell.seed)?;
                    Ok(train(&ds, &cell.kernel, &model_cfg)?)
                });
            let wall_time_s = start.elapsed().as_secs_f64();
            match outcome {
                Ok(report) => CellResult {
                    dataset: cell.dataset.name.clone(),
                    model: cell.model.label(),
                    kernel: cell.kernel_str.to_string(),
                    seed: cell.seed,
                    test_accuracy: Some(report.accuracy.test),
                    val_accuracy: Some(report.accuracy.val),
                    best_epoch: Some(report.best_epoch),
                    wall_time_s,
                    error: None,
                },
                Err(err) => CellResult {
                    dataset: cell.dataset.name.clone(),
                    model: cell.model.label(),
                    kernel: cell.kernel_str.to_string(),
                    seed: cell.seed,
                    test_accuracy: None,
                    val_accuracy: None,
                    best_epoch: None,
                    wall_time_s,
                    error: Some(format!("{err:#}")),
                },
            }
        })
        .collect();

    Ok(rows)
}

/// One row of the summary table: statistics over seeds for a
/// (dataset, model, kernel) group, in Table-1 order (dataset-major,
/// then model, then kernel).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub model: String,
    pub kernel: String,
    pub seeds: usize,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub val_acc_mean: f64,
    pub val_acc_std: f64,
    pub errors: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let std = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (values.len() - 1) as f64;
        var.sqrt()
    };
    (mean, std)
}

/// Aggregate raw rows into mean ± std over seeds. Failed cells are
/// excluded from the statistics and counted in `errors`.
pub fn summarize(config: &BenchConfig, rows: &[CellResult]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for dataset in &config.datasets {
        for model in &config.models {
            for kernel in &config.kernels {
                let group: Vec<&CellResult> = rows
                    .iter()
                    .filter(|r| {
                        r.dataset == dataset.name
                            && r.model == model.label()
                            && &r.kernel == kernel
                    })
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let test: Vec<f64> = group.iter().filter_map(|r| r.test_accuracy).collect();
                let val: Vec<f64> = group.iter().filter_map(|r| r.val_accuracy).collect();
                let errors = group.iter().filter(|r| r.error.is_some()).count();
                let (test_mean, test_std) = mean_std(&test);
                let (val_mean, val_std) = mean_std(&val);
                out.push(SummaryRow {
                    dataset: dataset.name.clone(),
                    model: model.label(),
                    kernel: kernel.clone(),
                    seeds: group.len(),
                    test_acc_mean: test_mean,
                    test_acc_std: test_std,
                    val_acc_mean: val_mean,
                    val_acc_std: val_std,
                    errors,
                });
            }
        }
    }
    out
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn opt_f64(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub const RAW_HEADER: &str =
    "dataset,model,kernel,seed,test_accuracy,val_accuracy,best_epoch,wall_time_s,error";

pub fn raw_csv(rows: &[CellResult]) -> String {
    let mut out = String::from(RAW_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.3},{}\n",
            csv_escape(&row.dataset),
            csv_escape(&row.model),
            csv_escape(&row.kernel),
            row.seed,
            opt_f64(row.test_accuracy),
            opt_f64(row.val_accuracy),
            row.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
            row.wall_time_s,
            csv_escape(row.error.as_deref().unwrap_or("")),
        ));
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "dataset,model,kernel,seeds,test_acc_mean,test_acc_std,val_acc_mean,val_acc_std,errors";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_escape(&row.dataset),
            csv_escape(&row.model),
            csv_escape(&row.kernel),
            row.seeds,
            row.test_acc_mean,
            row.test_acc_std,
            row.val_acc_mean,
            row.val_acc_std,
            row.errors,
        ));
    }
    out
}

/// `results.csv` → `results_summary.csv`.
pub fn summary_path(raw: &Path) -> PathBuf {
    let stem = raw
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "bench".into());
    raw.with_file_name(format!("{stem}_summary.csv"))
}
