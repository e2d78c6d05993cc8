use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("Mandel entry ({row}, {col}) deviates from the cross-tensor pattern by {deviation:e}")]
    StructureViolation { row: usize, col: usize, deviation: f64 },
    #[error("{0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("degenerate spectrum: eigenvalue gap {gap:e} is below the recovery threshold")]
    DegenerateSpectrum { gap: f64 },
    #[error("simplex search did not converge after {iterations} iterations (diameter {diameter:e})")]
    NoConvergence { iterations: usize, diameter: f64 },
    #[error("input tensor has non-finite coefficients")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid smoother configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("vertex {vertex}: averaged boundary normal has magnitude {magnitude:e}")]
    DegenerateNormal { vertex: usize, magnitude: f64 },
    #[error("{path}:{line}: {message}")]
    File {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid smoother configuration: {0}")]
    Config(String),
}
