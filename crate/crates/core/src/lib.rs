//! # gclab-core
//!
//! A small laboratory for graph convolutional kernels: build the kernels,
//! inspect their spectra, detect when they collapse features, and measure
//! what that does to node classification.
//!
//! The crate is organized around five pieces:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graph`] | Undirected graphs, adjacency/degree/Laplacian constructions |
//! | [`numerics`] | Dense symmetric eigensolver, SPD solves, rank diagnostics |
//! | [`kernels`] | The kernel zoo (L̂, L̂ᵏ, S, Li, Poisson, Chebyshev partial sums) and the self-smoothing detector |
//! | [`synth`] | Stochastic-block-model dataset generation and disk I/O |
//! | [`models`] | GCN and SGC classifiers with from-scratch differentiation |
//!
//! [`checks`] bundles the library's numerical invariants into a runnable
//! suite so a binary (or a test) can verify them on fresh random instances.
//!
//! ## Quick start
//!
//! ```rust
//! use gclab_core::{Graph, KernelSpec, kernels};
//!
//! // 2-node path graph
//! let g = Graph::new(2, vec![(0, 1)]).unwrap();
//! let p = kernels::build_kernel(&g, &KernelSpec::Poisson { r: 0.5 }).unwrap();
//! assert!((p[[0, 0]] - 1.8).abs() < 1e-12);
//! assert!((p[[0, 1]] - 1.2).abs() < 1e-12);
//! ```

use thiserror::Error;

pub mod checks;
pub mod graph;
pub mod kernels;
pub mod models;
pub mod numerics;
pub mod synth;

pub use graph::{DegreeVector, Graph};
pub use kernels::{KernelSpec, SelfSmoothingReport};
pub use models::{Accuracy, Arch, ModelConfig, Optimizer, TrainReport};
pub use numerics::Spectrum;
pub use synth::{Dataset, Provenance, SbmConfig, Split};

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node count must be at least 1")]
    EmptyGraph,

    #[error("graph has {n} nodes, exceeding the node cap {cap}")]
    NodeCapExceeded { n: usize, cap: usize },

    #[error("edge ({i}, {j}) has an endpoint outside [0, {n})")]
    EdgeOutOfRange { i: usize, j: usize, n: usize },

    #[error("self-loop ({0}, {0}) is not allowed in the edge set")]
    SelfLoop(usize),

    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },

    #[error("feature matrix has {rows} rows but the graph has {n} nodes")]
    FeatureRowMismatch { rows: usize, n: usize },

    #[error("label vector has length {len} but the graph has {n} nodes")]
    LabelLengthMismatch { len: usize, n: usize },

    #[error("node {0} is isolated; the symmetric-normalized Laplacian is undefined")]
    IsolatedNode(usize),

    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: max |M - M^T| entry is {max_asymmetry:e}")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch in {context}: {left:?} vs {right:?}")]
    DimensionMismatch {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid kernel parameter: {0}")]
    InvalidKernelParameter(String),

    #[error("cannot parse kernel string: bad token `{token}` in `{input}`")]
    KernelParse { input: String, token: String },

    #[error("invalid probability {name}={value}; expected {expected}")]
    InvalidProbability {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class {class} has no nodes; a stratified split needs at least one train node per class")]
    ClassTooSmall { class: usize },

    #[error("mask is empty")]
    EmptyMask,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl AsRef<std::path::Path>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            message: message.into(),
        }
    }
}
