//! Generator and analyzer for multi-modal bi-objective benchmark problems.
//!
//! Problems are piecewise-linear maps on face-centered 24-fold tetrahedral
//! meshes of a 3D box. A base map `psi = (z, psi2)` is built from primitive
//! domains with a major and a minor valley, nested into each other to shape a
//! hierarchy of modes, and then rotated in objective space so the valleys
//! become local Pareto sets.
//!
//! - [`mesh`]: box tetrahedralization, point location, PL evaluation.
//! - [`primitive`]: the two-valley primitive field.
//! - [`nesting`]: composition of primitive trees into one [`nesting::Problem`].
//! - [`transform`]: objective rotation and monotone maps.
//! - [`modes`]: local Pareto vertices, mode sets and their hierarchy.
//! - [`harness`]: spec files, artifacts, CSV exports and a descent solver.

pub mod harness;
pub mod mesh;
pub mod modes;
pub mod nesting;
pub mod primitive;
pub mod transform;

pub use mesh::{build_fc24_mesh, BaryCoords, Box3, PLFieldPair, TetMesh};
pub use modes::{ModeAnalysis, ModeHierarchy, ModeId, ModeSet};
pub use nesting::{compose_problem, NestingNode, Problem, ProblemSpec};
pub use primitive::{build_primitive_field, Optimum, PrimitiveSpec};
pub use transform::{MonotoneMap, TransformChain};
