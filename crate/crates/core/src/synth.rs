//! Stochastic-block-model dataset generation and dataset directory I/O.
//!
//! A dataset is a labelled, featured graph plus a stratified
//! train/val/test split. Generation is a pure function of [`SbmConfig`]
//! (including its seed): labels are assigned in blocks, each unordered
//! node pair is sampled once from Ber(p) or Ber(q), and features are
//! isotropic Gaussians around a per-class mean.
//!
//! RNG stream order is fixed so outputs are reproducible: labels draw
//! nothing, edges consume the ChaCha8 stream in row-major pair order,
//! features follow in node order (coordinate-minor), and the split uses
//! a fresh ChaCha8 stream from the same seed. meta.json records the
//! generator and RNG identifiers.
//!
//! On-disk layout (one directory per dataset):
//!
//! ```text
//! edges.csv      one "i,j" pair per line, 0-based, i<j, no header
//! features.csv   n rows of comma-separated reals
//! labels.csv     one integer per line
//! meta.json      {"n", "d", "classes", "seed", generator parameters}
//! split.json     {"train": [...], "val": [...], "test": [...]}
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::{Error, Result};

/// Default stratified split fractions (train, val, test).
pub const DEFAULT_SPLIT_FRACTIONS: (f64, f64, f64) = (0.1, 0.2, 0.7);

/// RNG algorithm identifier recorded in meta.json.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Block-model parameters.
///
/// Density ρ = (p+q)/2 and density gap ε = |p−q| are derived via
/// [`density_stats`], never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub class_sizes: Vec<usize>,
    pub p_intra: f64,
    pub q_inter: f64,
    pub feature_dim: usize,
    pub feature_mean_scale: f64,
    pub feature_std: f64,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.class_sizes.is_empty() || self.class_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidConfig(
                "class_sizes must be non-empty with every class size >= 1".into(),
            ));
        }
        for (name, value) in [("p_intra", self.p_intra), ("q_inter", self.q_inter)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability {
                    name: if name == "p_intra" { "p" } else { "q" },
                    value,
                    expected: "a probability in [0, 1]",
                });
            }
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be >= 1".into()));
        }
        if !(self.feature_std > 0.0) {
            return Err(Error::InvalidConfig("feature_std must be > 0".into()));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.class_sizes.iter().sum()
    }

    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    /// Per-class feature means: μ times the normalized indicator of
    /// coordinate block c, blocks of size ⌊d/C⌋.
    pub fn class_means(&self) -> Array2<f64> {
        let c = self.num_classes();
        let d = self.feature_dim;
        let block = d / c;
        let mut means = Array2::zeros((c, d));
        if block > 0 {
            let value = self.feature_mean_scale / (block as f64).sqrt();
            for class in 0..c {
                for coord in class * block..(class + 1) * block {
                    means[[class, coord]] = value;
                }
            }
        }
        means
    }
}

/// Disjoint train/val/test node-index sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Generated {
        config: SbmConfig,
        warnings: Vec<String>,
    },
    Ingested {
        source: String,
    },
}

/// A semi-supervised node-classification dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub graph: Graph,
    pub split: Split,
    pub provenance: Provenance,
}

/// Density ρ = (p+q)/2, density gap ε = |p−q|, and the label ratio
/// (smallest class size over largest).
pub fn density_stats(cfg: &SbmConfig) -> (f64, f64, f64) {
    let rho = 0.5 * (cfg.p_intra + cfg.q_inter);
    let eps = (cfg.p_intra - cfg.q_inter).abs();
    let smallest = cfg.class_sizes.iter().copied().min().unwrap_or(0);
    let largest = cfg.class_sizes.iter().copied().max().unwrap_or(1);
    (rho, eps, smallest as f64 / largest as f64)
}

/// Balanced two-block regime with a small density gap: the graph carries
/// almost no class signal, so kernels that shrink features toward the
/// smoothing limit lose badly.
pub fn preset_smallgap() -> SbmConfig {
    SbmConfig {
        class_sizes: vec![200, 200],
        p_intra: 0.05,
        q_inter: 0.045,
        feature_dim: 32,
        feature_mean_scale: 3.0,
        feature_std: 0.6,
        seed: 0,
    }
}

/// Imbalanced two-block regime (label ratio 0.25, majority baseline 0.8).
pub fn preset_smallratio() -> SbmConfig {
    SbmConfig {
        class_sizes: vec![80, 320],
        p_intra: 0.10,
        q_inter: 0.05,
        feature_dim: 32,
        feature_mean_scale: 1.5,
        feature_std: 1.0,
        seed: 0,
    }
}

/// Generate a dataset from block-model parameters. Pure in the config:
/// the same config (seed included) always produces the same dataset.
pub fn generate(cfg: &SbmConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.node_count();

    let mut labels = Vec::with_capacity(n);
    for (class, &size) in cfg.class_sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(class).take(size));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if labels[i] == labels[j] {
                cfg.p_intra
            } else {
                cfg.q_inter
            };
            if rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }

    let means = cfg.class_means();
    let mut features = Array2::zeros((n, cfg.feature_dim));
    for v in 0..n {
        for coord in 0..cfg.feature_dim {
            let noise: f64 = rng.sample(StandardNormal);
            features[[v, coord]] = means[[labels[v], coord]] + cfg.feature_std * noise;
        }
    }

    let graph = Graph::new(n, edges)?
        .with_features(features)?
        .with_labels(labels.clone())?;

    let split = make_split(n, &labels, DEFAULT_SPLIT_FRACTIONS, cfg.seed)?;

    let mut warnings = Vec::new();
    let components = graph.connected_components().len();
    if components > 1 {
        warnings.push(format!(
            "generated graph is disconnected ({components} components)"
        ));
    }

    Ok(Dataset {
        graph,
        split,
        provenance: Provenance::Generated {
            config: cfg.clone(),
            warnings,
        },
    })
}

/// Stratified split: per class, a seeded shuffle followed by
/// floor-then-distribute counts, with at least one train node per class.
///
/// Counts per class are ⌊f·n_c⌋ for each fraction; when the fractions sum
/// to 1, leftover nodes go to the sets with the largest fractional
/// remainders (ties resolved train, val, test). Nodes beyond the
/// fractions stay unassigned.
pub fn make_split(
    n: usize,
    labels: &[usize],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<Split> {
    let (ft, fv, fs) = fractions;
    if !(ft > 0.0) || fv < 0.0 || fs < 0.0 || ft + fv + fs > 1.0 + 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "split fractions ({ft}, {fv}, {fs}) must be nonnegative with train > 0 and sum <= 1"
        )));
    }
    if labels.len() != n {
        return Err(Error::LabelLengthMismatch {
            len: labels.len(),
            n,
        });
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (node, &label) in labels.iter().enumerate() {
        members[label].push(node);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split::default();
    for (class, nodes) in members.iter_mut().enumerate() {
        if nodes.is_empty() {
            return Err(Error::ClassTooSmall { class });
        }
        rand::seq::SliceRandom::shuffle(nodes.as_mut_slice(), &mut rng);
        let nc = nodes.len() as f64;

        let mut counts = [
            ((ft * nc).floor() as usize).max(1),
            (fv * nc).floor() as usize,
            (fs * nc).floor() as usize,
        ];
        // The >=1 train rule can overshoot tiny classes; shrink test
        // then val back into range.
        while counts.iter().sum::<usize>() > nodes.len() {
            if counts[2] > 0 {
                counts[2] -= 1;
            } else {
                counts[1] -= 1;
            }
        }
        if ft + fv + fs >= 1.0 - 1e-9 {
            let mut leftover = nodes.len() - counts.iter().sum::<usize>();
            let mut remainders = [
                (ft * nc - (ft * nc).floor(), 0usize),
                (fv * nc - (fv * nc).floor(), 1),
                (fs * nc - (fs * nc).floor(), 2),
            ];
            remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut cursor = 0;
            while leftover > 0 {
                counts[remainders[cursor % 3].1] += 1;
                cursor += 1;
                leftover -= 1;
            }
        }

        let (t, v) = (counts[0], counts[1]);
        let s = counts[2].min(nodes.len() - t - v);
        split.train.extend(&nodes[..t]);
        split.val.extend(&nodes[t..t + v]);
        split.test.extend(&nodes[t + v..t + v + s]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

// --- dataset directory I/O ------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct MetaJson {
    n: usize,
    d: usize,
    classes: usize,
    seed: u64,
    #[serde(default = "default_generator")]
    generator: String,
    #[serde(default = "default_rng")]
    rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sbm: Option<SbmConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

fn default_generator() -> String {
    "ingested".into()
}

fn default_rng() -> String {
    RNG_ALGORITHM.into()
}

/// Write a dataset to a directory in the documented format.
///
/// The dataset must carry features and labels; `export` followed by
/// [`ingest`] reproduces the dataset exactly.
pub fn export(ds: &Dataset, dir: &Path) -> Result<()> {
    let features = ds.graph.features().ok_or_else(|| {
        Error::InvalidConfig("cannot export a dataset without features".into())
    })?;
    let labels = ds
        .graph
        .labels()
        .ok_or_else(|| Error::InvalidConfig("cannot export a dataset without labels".into()))?;

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let write = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(content.as_bytes())
            .map_err(|e| Error::io(&path, e))
    };

    let mut edges = String::new();
    for &(i, j) in ds.graph.edges() {
        edges.push_str(&format!("{i},{j}\n"));
    }
    write("edges.csv", edges)?;

    let mut feats = String::new();
    for row in features.rows() {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        feats.push_str(&line.join(","));
        feats.push('\n');
    }
    write("features.csv", feats)?;

    let mut labs = String::new();
    for &y in labels {
        labs.push_str(&format!("{y}\n"));
    }
    write("labels.csv", labs)?;

    let split_json = serde_json::to_string_pretty(&ds.split).map_err(|e| Error::Json {
        path: dir.join("split.json").display().to_string(),
        source: e,
    })?;
    write("split.json", split_json)?;

    let (seed, generator, sbm, warnings, source) = match &ds.provenance {
        Provenance::Generated { config, warnings } => (
            config.seed,
            "sbm".to_string(),
            Some(config.clone()),
            warnings.clone(),
            None,
        ),
        Provenance::Ingested { source } => {
            (0, "ingested".to_string(), None, Vec::new(), Some(source.clone()))
        }
    };
    let meta = MetaJson {
        n: ds.graph.node_count(),
        d: features.ncols(),
        classes: ds.graph.num_classes().unwrap_or(0),
        seed,
        generator,
        rng: RNG_ALGORITHM.into(),
        sbm,
        warnings,
        source,
    };
    let meta_json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json {
        path: dir.join("meta.json").display().to_string(),
        source: e,
    })?;
    write("meta.json", meta_json)?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(content.lines().map(str::to_string).collect())
}

/// Read a dataset directory produced by [`export`] (or any conforming
/// source). `split.json` is optional; a default stratified split is
/// derived from the meta seed when it is absent.
pub fn ingest(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: MetaJson = serde_json::from_str(&meta_text).map_err(|e| Error::Json {
        path: meta_path.display().to_string(),
        source: e,
    })?;

    let edges_path = dir.join("edges.csv");
    let mut edges = Vec::new();
    for (idx, line) in read_lines(&edges_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(&edges_path, idx + 1, "expected `i,j`"))?;
        let i: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::parse(&edges_path, idx + 1, format!("bad node index `{a}`")))?;
        let j: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::parse(&edges_path, idx + 1, format!("bad node index `{b}`")))?;
        edges.push((i, j));
    }

    let features_path = dir.join("features.csv");
    let feature_lines = read_lines(&features_path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in feature_lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::parse(&features_path, idx + 1, format!("bad feature value `{tok}`"))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != meta.d {
            return Err(Error::parse(
                &features_path,
                idx + 1,
                format!("expected {} values, found {}", meta.d, row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.len() != meta.n {
        return Err(Error::parse(
            &features_path,
            rows.len() + 1,
            format!("expected {} feature rows, found {}", meta.n, rows.len()),
        ));
    }
    let mut features = Array2::zeros((meta.n, meta.d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            features[[i, j]] = x;
        }
    }

    let labels_path = dir.join("labels.csv");
    let mut labels = Vec::new();
    for (idx, line) in read_lines(&labels_path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let y: usize = line
            .trim()
            .parse()
            .map_err(|_| Error::parse(&labels_path, idx + 1, format!("bad label `{line}`")))?;
        labels.push(y);
    }
    if labels.len() != meta.n {
        return Err(Error::parse(
            &labels_path,
            labels.len() + 1,
            format!("expected {} labels, found {}", meta.n, labels.len()),
        ));
    }

    let graph = Graph::new(meta.n, edges)?
        .with_features(features)?
        .with_labels(labels.clone())?;

    let split_path = dir.join("split.json");
    let split = if split_path.exists() {
        let text = fs::read_to_string(&split_path).map_err(|e| Error::io(&split_path, e))?;
        let split: Split = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: split_path.display().to_string(),
            source: e,
        })?;
        for (name, set) in [
            ("train", &split.train),
            ("val", &split.val),
            ("test", &split.test),
        ] {
            if let Some(&bad) = set.iter().find(|&&v| v >= meta.n) {
                return Err(Error::InvalidConfig(format!(
                    "split.json {name} set references node {bad}, out of range for n={}",
                    meta.n
                )));
            }
        }
        split
    } else {
        make_split(meta.n, &labels, DEFAULT_SPLIT_FRACTIONS, meta.seed)?
    };

    let provenance = match (meta.generator.as_str(), meta.sbm) {
        ("sbm", Some(config)) => Provenance::Generated {
            config,
            warnings: meta.warnings,
        },
        _ => Provenance::Ingested {
            source: meta
                .source
                .unwrap_or_else(|| dir.display().to_string()),
        },
    };

    Ok(Dataset {
        graph,
        split,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SbmConfig {
        SbmConfig {
            class_sizes: vec![3, 3],
            p_intra: 1.0,
            q_inter: 0.0,
            feature_dim: 4,
            feature_mean_scale: 1.0,
            feature_std: 1.0,
            seed: 7,
        }
    }

    #[test]
    fn degenerate_bernoulli_gives_two_cliques() {
        let ds = generate(&tiny_config()).unwrap();
        let components = ds.graph.connected_components();
        assert_eq!(components, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        // Each 3-clique has 3 edges.
        assert_eq!(ds.graph.edges().len(), 6);
        match &ds.provenance {
            Provenance::Generated { warnings, .. } => assert_eq!(warnings.len(), 1),
            other => panic!("unexpected provenance {other:?}"),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&tiny_config()).unwrap();
        let b = generate(&tiny_config()).unwrap();
        assert_eq!(a, b);

        let mut other = tiny_config();
        other.seed = 8;
        other.p_intra = 0.5;
        assert_ne!(generate(&other).unwrap(), a);
    }

    #[test]
    fn mean_edge_count_matches_binomial() {
        // p = q = ρ: every pair is Ber(ρ); the mean count over trials
        // must sit within 4 standard errors of ρ·N(N−1)/2.
        let rho = 0.1;
        let n = 200usize;
        let trials = 30;
        let pairs = (n * (n - 1) / 2) as f64;
        let mut total = 0.0;
        for seed in 0..trials {
            let cfg = SbmConfig {
                class_sizes: vec![n / 2, n / 2],
                p_intra: rho,
                q_inter: rho,
                feature_dim: 2,
                feature_mean_scale: 0.0,
                feature_std: 1.0,
                seed,
            };
            total += generate(&cfg).unwrap().graph.edges().len() as f64;
        }
        let mean = total / trials as f64;
        let expected = rho * pairs;
        let stderr = (pairs * rho * (1.0 - rho)).sqrt() / (trials as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 4.0 * stderr,
            "mean {mean} vs expected {expected} (stderr {stderr})"
        );
    }

    #[test]
    fn split_examples() {
        // All train.
        let labels = vec![0, 0, 1, 1];
        let split = make_split(4, &labels, (1.0, 0.0, 0.0), 0).unwrap();
        assert_eq!(split.train.len(), 4);
        assert!(split.val.is_empty() && split.test.is_empty());

        // 100 balanced 2-class nodes at (0.1, 0.2, 0.7) -> 10/20/70.
        let labels: Vec<usize> = (0..100).map(|i| i / 50).collect();
        let split = make_split(100, &labels, (0.1, 0.2, 0.7), 3).unwrap();
        assert_eq!(split.train.len(), 10);
        assert_eq!(split.val.len(), 20);
        assert_eq!(split.test.len(), 70);

        // A class of size 1 puts its node in train.
        let labels = vec![0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        let split = make_split(11, &labels, (0.1, 0.2, 0.7), 0).unwrap();
        assert!(split.train.contains(&0));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let labels: Vec<usize> = (0..90).map(|i| i / 30).collect();
        let split = make_split(90, &labels, (0.2, 0.3, 0.5), 11).unwrap();
        for set in [&split.train, &split.val, &split.test] {
            for class in 0..3 {
                let count = set.iter().filter(|&&v| labels[v] == class).count();
                let expected = set.len() / 3;
                assert!(count.abs_diff(expected) <= 1, "class {class}: {count}");
            }
        }
        let mut all: Vec<usize> = split
            .train
            .iter()
            .chain(&split.val)
            .chain(&split.test)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), split.len());
    }

    #[test]
    fn split_rejects_empty_class() {
        // Class 1 never appears.
        let labels = vec![0, 0, 2, 2];
        assert!(matches!(
            make_split(4, &labels, (0.5, 0.2, 0.3), 0),
            Err(Error::ClassTooSmall { class: 1 })
        ));
    }

    #[test]
    fn preset_invariants() {
        let gap = preset_smallgap();
        let (rho, eps, ratio) = density_stats(&gap);
        assert!((rho - 0.0475).abs() < 1e-12);
        assert!((eps - 0.005).abs() < 1e-12);
        assert!((eps / rho - 0.105263157894736835).abs() < 1e-12);
        assert!((ratio - 1.0).abs() < 1e-12);

        let ratio_cfg = preset_smallratio();
        let (_, _, label_ratio) = density_stats(&ratio_cfg);
        assert!((label_ratio - 0.25).abs() < 1e-12);
        // Majority-class fraction 320/400 = 0.8.
        let majority = 320.0 / ratio_cfg.node_count() as f64;
        assert!((majority - 0.8).abs() < 1e-12);
    }

    #[test]
    fn density_stats_examples() {
        let mut cfg = tiny_config();
        cfg.p_intra = 0.6;
        cfg.q_inter = 0.4;
        let (rho, eps, _) = density_stats(&cfg);
        assert!((rho - 0.5).abs() < 1e-15);
        assert!((eps - 0.2).abs() < 1e-15);

        cfg.q_inter = 0.6;
        let (_, eps, _) = density_stats(&cfg);
        assert_eq!(eps, 0.0);

        cfg.class_sizes = vec![80, 320];
        let (_, _, ratio) = density_stats(&cfg);
        assert!((ratio - 0.25).abs() < 1e-15);
    }

    #[test]
    fn presets_generate_connected_graphs_at_seed_zero() {
        for cfg in [preset_smallgap(), preset_smallratio()] {
            let ds = generate(&cfg).unwrap();
            assert!(ds.graph.is_connected(), "preset {cfg:?} disconnected");
        }
    }
}
