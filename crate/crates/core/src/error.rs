use std::path::PathBuf;

use thiserror::Error;

use crate::network::BusId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("unsupported schema_version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    /// A case or scenario invariant was violated; `field` names the offending entry.
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("unknown bus id {0}")]
    UnknownBus(BusId),

    #[error("bus {0} already hosts a generator")]
    GeneratorExists(BusId),

    #[error("bus {0} does not host a generator")]
    NoGenerator(BusId),

    #[error("network is disconnected into {} components: {components:?}", components.len())]
    Disconnected { components: Vec<Vec<BusId>> },

    #[error("load block is singular; isolated load buses: {island:?}")]
    SingularLoadBlock { island: Vec<BusId> },

    #[error("reduced matrix is reducible; generator components: {components:?}")]
    Reducible { components: Vec<Vec<BusId>> },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },

    #[error("mode count r = {r} out of range 1..={max}")]
    ModeCount { r: usize, max: usize },

    #[error("nodal weight of bus {bus} must be positive, got {value}")]
    NonPositiveWeight { bus: BusId, value: f64 },

    #[error("near-degenerate eigenvalues {a} and {b} (gap below {threshold:e})")]
    DegenerateSpectrum { a: f64, b: f64, threshold: f64 },

    #[error("base eigenvector entry {index} is {value:e}; ratio is ill-posed")]
    IllPosedRatio { index: usize, value: f64 },

    #[error("time step {dt} s violates the stability bound {limit} s")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("invalid disturbance: {0}")]
    Disturbance(String),

    #[error("invalid perturbation: {0}")]
    Perturbation(String),
}

impl Error {
    /// Stable machine-readable identifier for error documents.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::SchemaVersion { .. } => "schema_version",
            Error::Invalid { .. } => "invalid",
            Error::UnknownBus(_) => "unknown_bus",
            Error::GeneratorExists(_) => "generator_exists",
            Error::NoGenerator(_) => "no_generator",
            Error::Disconnected { .. } => "disconnected",
            Error::SingularLoadBlock { .. } => "singular_load_block",
            Error::Reducible { .. } => "reducible",
            Error::NoConvergence { .. } => "no_convergence",
            Error::ModeCount { .. } => "mode_count",
            Error::NonPositiveWeight { .. } => "non_positive_weight",
            Error::DegenerateSpectrum { .. } => "degenerate_spectrum",
            Error::IllPosedRatio { .. } => "ill_posed_ratio",
            Error::UnstableStep { .. } => "unstable_step",
            Error::Disturbance(_) => "disturbance",
            Error::Perturbation(_) => "perturbation",
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), message: message.into() }
    }
}
