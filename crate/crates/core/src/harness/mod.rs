//! File formats, CSV exports, and the demonstration solver behind the CLI.

pub mod artifact;
pub mod export;
pub mod solver;
pub mod spec_file;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::mesh::MeshError;
use crate::nesting::NestingError;

pub use artifact::{load_artifact, render_artifact, write_artifact, Artifact};
pub use export::{analysis_report, evaluate_points, slice_rows, write_slice_csv, AnalysisReport, EvalOptions, SliceRow, SliceSource};
pub use solver::{descent_solver, SolverConfig, Trajectory};
pub use spec_file::{parse_spec, serialize_spec, ProblemSpecFile, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{name}: {message}")]
    Validation { name: String, message: String },
    #[error("{0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl HarnessError {
    /// 2 for parse errors, 3 for validation failures, 4 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } => 2,
            HarnessError::Validation { .. } => 3,
            _ => 4,
        }
    }
}

impl From<NestingError> for HarnessError {
    fn from(e: NestingError) -> Self {
        match e {
            NestingError::Mesh(MeshError::OutOfDomain(p)) => HarnessError::Mesh(MeshError::OutOfDomain(p)),
            e => HarnessError::Validation { name: e.name().to_string(), message: e.to_string() },
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
