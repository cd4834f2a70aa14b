//! Problem artifact bundles: a directory with the mesh, vertex values and a
//! metadata file that embeds the canonical spec.
//!
//! Loading recomposes the problem from the embedded spec and checks it
//! against the stored value digest; meshes are never read back.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spec_file::{parse_error, ProblemSpecFile, SpecRepr, SCHEMA_VERSION};
use super::{write_atomic, HarnessError};
use crate::mesh::{fmt_f64, Vec3};
use crate::nesting::{compose_problem, Problem};

pub const METADATA_FILE: &str = "metadata.toml";
pub const VERTICES_FILE: &str = "mesh_vertices.csv";
pub const TETS_FILE: &str = "mesh_tets.csv";
pub const VALUES_FILE: &str = "values.csv";

const FORMAT: &str = "tetmodes-artifact";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Metadata {
    format: String,
    schema_version: String,
    vertex_count: usize,
    tet_count: usize,
    spacing: Vec3,
    values_sha256: String,
    spec: SpecRepr,
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub spec: ProblemSpecFile,
    pub problem: Problem,
}

impl Artifact {
    pub fn compose(spec: ProblemSpecFile) -> Result<Self, HarnessError> {
        let problem = compose_problem(&spec.problem)?;
        Ok(Self { spec, problem })
    }
}

fn values_csv(problem: &Problem) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "x", "y", "z", "psi1", "psi2", "f1", "f2"])?;
    for v in 0..problem.mesh.vertex_count() {
        let p = problem.mesh.vertex(v);
        let psi = problem.psi.value(v);
        let f = problem.objectives.value(v);
        let mut rec = vec![v.to_string()];
        rec.extend([p[0], p[1], p[2], psi[0], psi[1], f[0], f[1]].map(fmt_f64));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| HarnessError::Runtime(e.to_string()))
}

/// File names and contents of the bundle, in write order.
pub fn render_artifact(artifact: &Artifact) -> Result<Vec<(&'static str, Vec<u8>)>, HarnessError> {
    let problem = &artifact.problem;
    let mut vertices = Vec::new();
    problem.mesh.write_vertices_csv(&mut vertices)?;
    let mut tets = Vec::new();
    problem.mesh.write_tets_csv(&mut tets)?;
    let values = values_csv(problem)?;
    let meta = Metadata {
        format: FORMAT.into(),
        schema_version: SCHEMA_VERSION.into(),
        vertex_count: problem.mesh.vertex_count(),
        tet_count: problem.mesh.tet_count(),
        spacing: problem.mesh.spacing(),
        values_sha256: hex::encode(Sha256::digest(&values)),
        spec: SpecRepr::from_spec(&artifact.spec),
    };
    let meta = toml::to_string(&meta).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(vec![
        (VERTICES_FILE, vertices),
        (TETS_FILE, tets),
        (VALUES_FILE, values),
        (METADATA_FILE, meta.into_bytes()),
    ])
}

pub fn write_artifact(dir: &Path, artifact: &Artifact) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in render_artifact(artifact)? {
        write_atomic(&dir.join(name), &bytes)?;
    }
    Ok(())
}

pub fn load_artifact(dir: &Path) -> Result<Artifact, HarnessError> {
    let text = fs::read_to_string(dir.join(METADATA_FILE))?;
    let meta: Metadata = toml::from_str(&text).map_err(|e| parse_error(&text, e))?;
    if meta.format != FORMAT || meta.schema_version != SCHEMA_VERSION {
        return Err(HarnessError::Validation {
            name: "ArtifactFormat".into(),
            message: format!("unsupported artifact {} v{}", meta.format, meta.schema_version),
        });
    }
    let artifact = Artifact::compose(meta.spec.into_spec()?)?;
    let digest = hex::encode(Sha256::digest(values_csv(&artifact.problem)?));
    if digest != meta.values_sha256 || meta.vertex_count != artifact.problem.mesh.vertex_count() {
        return Err(HarnessError::Runtime(format!(
            "artifact in {} does not match its recomposed problem",
            dir.display()
        )));
    }
    Ok(artifact)
}
