//! TOML problem-spec files.
//!
//! ```toml
//! schema_version = "1"
//!
//! [mesh]
//! spacing = [1.0, 1.0, 1.0]
//! refine_limit = 64
//!
//! [transform]
//! rotation_deg = -45.0
//! bake = false
//! f1 = []
//! f2 = [{ kind = "power", gamma = 2.0 }]
//!
//! [solver]
//! seed = 0
//!
//! [root.primitive]
//! box_min = [0.0, -1.0, 0.0]
//! box_max = [4.0, 1.0, 1.0]
//! optima = [
//!   { position = [1.0, 0.0], base_value = 0.0, slope = 1.0, rank = 1, persists_at_top = true },
//!   { position = [3.0, 0.0], base_value = 0.5, slope = 0.5, rank = 0, persists_at_top = false },
//! ]
//!
//! [[root.children]]
//! anchor = "minor"
//! rotation = 90
//! scale = 0.25
//! node.primitive = { ... }
//! ```
//!
//! Unknown keys are rejected. The root primitive takes its grid spacing from
//! `[mesh]`; child primitives carry their own (default `[1, 1, 1]`).

use serde::{Deserialize, Serialize};

use super::solver::SolverConfig;
use super::HarnessError;
use crate::mesh::{Box3, Vec3};
use crate::nesting::{Anchor, ChildPlacement, NestingNode, ProblemSpec, Rotation, DEFAULT_REFINE_LIMIT};
use crate::primitive::{Optimum, PrimitiveSpec};
use crate::transform::{MonotoneMap, ObjectiveMaps, TransformChain};

pub const SCHEMA_VERSION: &str = "1";

/// Parsed contents of a spec file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpecFile {
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
}

impl Default for ProblemSpecFile {
    fn default() -> Self {
        Self { problem: ProblemSpec::standard(), solver: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SpecRepr {
    schema_version: String,
    mesh: MeshRepr,
    #[serde(default)]
    transform: TransformRepr,
    #[serde(default)]
    solver: SolverConfig,
    root: NodeRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshRepr {
    spacing: Vec3,
    #[serde(default = "default_refine_limit")]
    refine_limit: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spacing_override: Option<Vec3>,
}

fn default_refine_limit() -> u32 {
    DEFAULT_REFINE_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformRepr {
    #[serde(default = "default_rotation")]
    rotation_deg: f64,
    #[serde(default)]
    bake: bool,
    #[serde(default)]
    f1: Vec<MonotoneMap>,
    #[serde(default)]
    f2: Vec<MonotoneMap>,
}

fn default_rotation() -> f64 {
    -45.0
}

impl Default for TransformRepr {
    fn default() -> Self {
        Self { rotation_deg: default_rotation(), bake: false, f1: Vec::new(), f2: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRepr {
    primitive: PrimitiveRepr,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<ChildRepr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveRepr {
    box_min: Vec3,
    box_max: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spacing: Option<Vec3>,
    optima: Vec<OptimumRepr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimumRepr {
    position: [f64; 2],
    base_value: f64,
    slope: f64,
    rank: i32,
    persists_at_top: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChildRepr {
    anchor: AnchorRepr,
    #[serde(default)]
    rotation: RotationRepr,
    scale: f64,
    #[serde(default)]
    offset: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value_gain: Option<f64>,
    node: NodeRepr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
struct AnchorRepr(Anchor);

impl TryFrom<String> for AnchorRepr {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse().map(AnchorRepr)
    }
}

impl From<AnchorRepr> for String {
    fn from(a: AnchorRepr) -> String {
        a.0.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
struct RotationRepr(Rotation);

impl TryFrom<i64> for RotationRepr {
    type Error = String;

    fn try_from(d: i64) -> Result<Self, Self::Error> {
        match d {
            0 | 90 | 180 | 270 => Ok(RotationRepr(Rotation::from_degrees(d).expect("listed angle"))),
            _ => Err(format!("rotation must be 0, 90, 180 or 270 degrees, got {d}")),
        }
    }
}

impl From<RotationRepr> for i64 {
    fn from(r: RotationRepr) -> i64 {
        r.0.degrees()
    }
}

impl NodeRepr {
    fn into_node(self, spacing: Vec3) -> NestingNode {
        let p = self.primitive;
        NestingNode {
            primitive: PrimitiveSpec {
                bbox: Box3 { min: p.box_min, max: p.box_max },
                optima: p
                    .optima
                    .into_iter()
                    .map(|o| Optimum {
                        position: o.position,
                        base_value: o.base_value,
                        slope: o.slope,
                        rank: o.rank,
                        persists_at_top: o.persists_at_top,
                    })
                    .collect(),
                spacing,
            },
            children: self
                .children
                .into_iter()
                .map(|c| ChildPlacement {
                    anchor: c.anchor.0,
                    rotation: c.rotation.0,
                    scale: c.scale,
                    offset: c.offset,
                    value_gain: c.value_gain,
                    node: {
                        let s = c.node.primitive.spacing.unwrap_or([1.0; 3]);
                        c.node.into_node(s)
                    },
                })
                .collect(),
        }
    }

    fn from_node(node: &NestingNode, is_root: bool) -> Self {
        let p = &node.primitive;
        NodeRepr {
            primitive: PrimitiveRepr {
                box_min: p.bbox.min,
                box_max: p.bbox.max,
                spacing: (!is_root).then_some(p.spacing),
                optima: p
                    .optima
                    .iter()
                    .map(|o| OptimumRepr {
                        position: o.position,
                        base_value: o.base_value,
                        slope: o.slope,
                        rank: o.rank,
                        persists_at_top: o.persists_at_top,
                    })
                    .collect(),
            },
            children: node
                .children
                .iter()
                .map(|c| ChildRepr {
                    anchor: AnchorRepr(c.anchor),
                    rotation: RotationRepr(c.rotation),
                    scale: c.scale,
                    offset: c.offset,
                    value_gain: c.value_gain,
                    node: NodeRepr::from_node(&c.node, false),
                })
                .collect(),
        }
    }
}

impl SpecRepr {
    pub(crate) fn from_spec(file: &ProblemSpecFile) -> Self {
        let p = &file.problem;
        SpecRepr {
            schema_version: SCHEMA_VERSION.to_string(),
            mesh: MeshRepr {
                spacing: p.root.primitive.spacing,
                refine_limit: p.refine_limit,
                spacing_override: p.spacing_override,
            },
            transform: TransformRepr {
                rotation_deg: p.transform.rotation_deg,
                bake: p.transform.bake,
                f1: p.transform.maps.f1.clone(),
                f2: p.transform.maps.f2.clone(),
            },
            solver: file.solver.clone(),
            root: NodeRepr::from_node(&p.root, true),
        }
    }

    pub(crate) fn into_spec(self) -> Result<ProblemSpecFile, HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Validation {
                name: "SchemaVersion".into(),
                message: format!("unsupported schema_version {:?}, expected \"1\"", self.schema_version),
            });
        }
        if self.root.primitive.spacing.is_some() {
            return Err(HarnessError::Validation {
                name: "RootSpacing".into(),
                message: "the root primitive takes its spacing from [mesh]".into(),
            });
        }
        let root = self.root.into_node(self.mesh.spacing);
        Ok(ProblemSpecFile {
            problem: ProblemSpec {
                root,
                transform: TransformChain {
                    rotation_deg: self.transform.rotation_deg,
                    maps: ObjectiveMaps { f1: self.transform.f1, f2: self.transform.f2 },
                    bake: self.transform.bake,
                },
                refine_limit: self.mesh.refine_limit,
                spacing_override: self.mesh.spacing_override,
            },
            solver: self.solver,
        })
    }
}

/// Converts a byte offset into 1-based line and column.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub(crate) fn parse_error(text: &str, err: toml::de::Error) -> HarnessError {
    let (line, column) = err.span().map_or((1, 1), |s| line_col(text, s.start));
    HarnessError::Parse { line, column, message: err.message().trim().to_string() }
}

/// Parses spec-file text. Structural problems are parse errors; semantic
/// checks of the nesting tree happen when the problem is composed.
pub fn parse_spec(text: &str) -> Result<ProblemSpecFile, HarnessError> {
    let repr: SpecRepr = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    repr.into_spec()
}

/// Canonical TOML form of a spec.
pub fn serialize_spec(spec: &ProblemSpecFile) -> String {
    toml::to_string(&SpecRepr::from_spec(spec)).expect("spec is always representable")
}
