//! Nesting of rescaled, rotated primitive domains into one PL field.
//!
//! A child primitive is shrunk by `scale` in x and y, rotated by a multiple of
//! 90 degrees about z, centered at one of the parent's optima (plus an
//! optional offset) and stretched over the parent's full z range. Inside the
//! child's rectangle, `psi2` becomes the parent's value on the anchor column
//! plus `value_gain` times the child's `psi2`; across the outermost grid cell
//! of the rectangle it is blended linearly back to the parent's value.
//!
//! The whole tree is sampled on one mesh, refined dyadically until every
//! descendant's corners, optima and saddles are grid corners.

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{build_fc24_mesh, BaryCoords, Box3, MeshError, PLFieldPair, TetMesh, Vec3, LOCATE_TOL};
use crate::primitive::{PrimitiveError, PrimitiveSpec, Vec2};
use crate::transform::{rotate_objectives, apply_monotone, TransformChain, TransformError};

/// Default coarsest refinement: parent spacing divided by this.
pub const DEFAULT_REFINE_LIMIT: u32 = 64;

/// Fraction of the anchor's basin depth used by the default gain.
pub const DEFAULT_GAIN_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NestingError {
    #[error("child {path}: scale must lie in (0, 1), got {scale}")]
    InvalidScale { path: String, scale: f64 },
    #[error("child {path}: value_gain must be positive and finite, got {gain}")]
    NoOpChild { path: String, gain: f64 },
    #[error("child {path}: offset must be finite")]
    InvalidOffset { path: String },
    #[error("child {path}: anchor {anchor} does not exist")]
    UnknownAnchor { path: String, anchor: Anchor },
    #[error("child {path}: region is not strictly inside the parent box")]
    ChildOutsideParent { path: String },
    #[error("children {a} and {b} have overlapping regions")]
    OverlappingChildren { a: String, b: String },
    #[error("child {path}: value_gain {gain} times child range {range} reaches the anchor basin depth {depth}")]
    GainTooLarge { path: String, gain: f64, range: f64, depth: f64 },
    #[error("IrrationalScale: child {path} cannot be aligned to any dyadic spacing down to 1/{limit} of the base spacing")]
    IrrationalScale { path: String, limit: u32 },
    #[error("MisalignedChild: point {point:?} of child {path} is not a mesh vertex")]
    MisalignedChild { path: String, point: Vec2 },
    #[error("refine limit must be a power of two of at least 1, got {0}")]
    InvalidRefineLimit(u32),
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl NestingError {
    /// Short name of the violated invariant.
    pub fn name(&self) -> &'static str {
        match self {
            NestingError::InvalidScale { .. } => "InvalidScale",
            NestingError::NoOpChild { .. } => "NoOpChild",
            NestingError::InvalidOffset { .. } => "InvalidOffset",
            NestingError::UnknownAnchor { .. } => "UnknownAnchor",
            NestingError::ChildOutsideParent { .. } => "ChildOutsideParent",
            NestingError::OverlappingChildren { .. } => "OverlappingChildren",
            NestingError::GainTooLarge { .. } => "GainTooLarge",
            NestingError::IrrationalScale { .. } => "IrrationalScale",
            NestingError::MisalignedChild { .. } => "MisalignedChild",
            NestingError::InvalidRefineLimit(_) => "InvalidRefineLimit",
            NestingError::Primitive(_) => "PrimitiveSpec",
            NestingError::Transform(_) => "TransformChain",
            NestingError::Mesh(_) => "Mesh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Major,
    /// Index into the non-major optima, ordered by descending rank.
    Minor(usize),
}

impl std::fmt::Display for Anchor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Anchor::Major => write!(f, "major"),
            Anchor::Minor(0) => write!(f, "minor"),
            Anchor::Minor(i) => write!(f, "minor:{i}"),
        }
    }
}

impl std::str::FromStr for Anchor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "major" => Ok(Anchor::Major),
            "minor" => Ok(Anchor::Minor(0)),
            _ => s
                .strip_prefix("minor:")
                .and_then(|i| i.parse().ok())
                .map(Anchor::Minor)
                .ok_or_else(|| format!("expected \"major\", \"minor\" or \"minor:<index>\", got {s:?}")),
        }
    }
}

/// Counter-clockwise rotation about the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rotation {
    #[default]
    Deg0,
    Deg90,
    Deg180,
    Deg270,
}

impl Rotation {
    pub fn from_degrees(d: i64) -> Option<Self> {
        match d.rem_euclid(360) {
            0 => Some(Rotation::Deg0),
            90 => Some(Rotation::Deg90),
            180 => Some(Rotation::Deg180),
            270 => Some(Rotation::Deg270),
            _ => None,
        }
    }

    pub fn degrees(self) -> i64 {
        match self {
            Rotation::Deg0 => 0,
            Rotation::Deg90 => 90,
            Rotation::Deg180 => 180,
            Rotation::Deg270 => 270,
        }
    }

    fn apply(self, [x, y]: Vec2) -> Vec2 {
        match self {
            Rotation::Deg0 => [x, y],
            Rotation::Deg90 => [-y, x],
            Rotation::Deg180 => [-x, -y],
            Rotation::Deg270 => [y, -x],
        }
    }

    fn invert(self, [x, y]: Vec2) -> Vec2 {
        match self {
            Rotation::Deg0 => [x, y],
            Rotation::Deg90 => [y, -x],
            Rotation::Deg180 => [-x, -y],
            Rotation::Deg270 => [-y, x],
        }
    }

    fn swaps_axes(self) -> bool {
        matches!(self, Rotation::Deg90 | Rotation::Deg270)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChildPlacement {
    pub anchor: Anchor,
    pub rotation: Rotation,
    pub scale: f64,
    /// Shift of the child's center from the anchor, in parent units.
    pub offset: Vec2,
    /// `None` picks `DEFAULT_GAIN_FRACTION * depth / range`.
    pub value_gain: Option<f64>,
    pub node: NestingNode,
}

impl ChildPlacement {
    pub fn new(anchor: Anchor, scale: f64, node: NestingNode) -> Self {
        Self {
            anchor,
            rotation: Rotation::Deg0,
            scale,
            offset: [0.0, 0.0],
            value_gain: None,
            node,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestingNode {
    pub primitive: PrimitiveSpec,
    pub children: Vec<ChildPlacement>,
}

impl NestingNode {
    pub fn leaf(primitive: PrimitiveSpec) -> Self {
        Self { primitive, children: Vec::new() }
    }

    pub fn standard() -> Self {
        Self::leaf(PrimitiveSpec::standard())
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.node.depth()).max().unwrap_or(0)
    }
}

/// A complete problem description: nesting tree plus range transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub root: NestingNode,
    pub transform: TransformChain,
    /// Finest dyadic refinement tried by `plan_refinement`.
    pub refine_limit: u32,
    /// Use this mesh spacing instead of the planned one.
    pub spacing_override: Option<Vec3>,
}

impl ProblemSpec {
    pub fn new(root: NestingNode) -> Self {
        Self {
            root,
            transform: TransformChain::default(),
            refine_limit: DEFAULT_REFINE_LIMIT,
            spacing_override: None,
        }
    }

    pub fn standard() -> Self {
        Self::new(NestingNode::standard())
    }
}

/// Where a child sits inside its parent, in the parent's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchorage {
    pub path: String,
    pub center: Vec2,
    pub rotation: Rotation,
    pub scale: f64,
    pub gain: f64,
    /// Child-box center in child coordinates.
    child_center: Vec2,
    /// (parent z min, parent z extent, child z min, child z extent)
    zmap: [f64; 4],
    /// Closed rectangle `[min, max]` covered by the child.
    pub region: [Vec2; 2],
    /// Parent `psi2` on the anchor column at the bottom and top.
    anchor_column: [f64; 2],
}

impl Anchorage {
    fn new(parent: &PrimitiveSpec, placement: &ChildPlacement, path: String, gain: f64) -> Result<Self, NestingError> {
        let anchor_idx = anchor_index(parent, placement.anchor).ok_or_else(|| NestingError::UnknownAnchor {
            path: path.clone(),
            anchor: placement.anchor,
        })?;
        let a = parent.optima[anchor_idx].position;
        let center = [a[0] + placement.offset[0], a[1] + placement.offset[1]];
        let cb = placement.node.primitive.bbox;
        let child_center = [0.5 * (cb.min[0] + cb.max[0]), 0.5 * (cb.min[1] + cb.max[1])];
        let ext = cb.extent();
        let mut half = [0.5 * placement.scale * ext[0], 0.5 * placement.scale * ext[1]];
        if placement.rotation.swaps_axes() {
            half.swap(0, 1);
        }
        let pb = parent.bbox;
        let zmap = [pb.min[2], pb.max[2] - pb.min[2], cb.min[2], ext[2]];
        let anchor_column = [parent.psi2([a[0], a[1], pb.min[2]]), parent.psi2([a[0], a[1], pb.max[2]])];
        Ok(Self {
            path,
            center,
            rotation: placement.rotation,
            scale: placement.scale,
            gain,
            child_center,
            zmap,
            region: [[center[0] - half[0], center[1] - half[1]], [center[0] + half[0], center[1] + half[1]]],
            anchor_column,
        })
    }

    /// Parent point to child point.
    pub fn to_child(&self, p: Vec3) -> Vec3 {
        let d = self.rotation.invert([p[0] - self.center[0], p[1] - self.center[1]]);
        let [zp, zpe, zc, zce] = self.zmap;
        [
            self.child_center[0] + d[0] / self.scale,
            self.child_center[1] + d[1] / self.scale,
            zc + (p[2] - zp) * zce / zpe,
        ]
    }

    /// Child point (x, y) to parent point (x, y).
    pub fn to_parent_xy(&self, q: Vec2) -> Vec2 {
        let d = self.rotation.apply([
            self.scale * (q[0] - self.child_center[0]),
            self.scale * (q[1] - self.child_center[1]),
        ]);
        [self.center[0] + d[0], self.center[1] + d[1]]
    }

    /// Distance from `p` to the region boundary if `p` is inside it.
    pub fn inside_distance(&self, p: Vec2) -> Option<f64> {
        let [lo, hi] = self.region;
        let d = (p[0] - lo[0]).min(hi[0] - p[0]).min(p[1] - lo[1]).min(hi[1] - p[1]);
        (d >= 0.0).then_some(d)
    }

    /// Parent `psi2` on the anchor column at height `z`.
    pub fn anchor_value(&self, z: f64) -> f64 {
        let t = (z - self.zmap[0]) / self.zmap[1];
        (1.0 - t) * self.anchor_column[0] + t * self.anchor_column[1]
    }

    /// Blends the parent value with the child's contribution at parent point `p`.
    fn blend(&self, p: Vec3, parent_value: f64, child: &CompositeNode, cell: f64) -> Option<f64> {
        let dist = self.inside_distance([p[0], p[1]])?;
        let inner = self.anchor_value(p[2]) + self.gain * child.psi2(self.to_child(p), cell / self.scale);
        let t = (dist / cell).min(1.0);
        Some(t * inner + (1.0 - t) * parent_value)
    }
}

fn anchor_index(spec: &PrimitiveSpec, anchor: Anchor) -> Option<usize> {
    match anchor {
        Anchor::Major => Some(spec.major_index()),
        Anchor::Minor(i) => spec.minor_indices().get(i).copied(),
    }
}

/// A validated nesting tree with resolved gains, evaluable anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeNode {
    pub primitive: PrimitiveSpec,
    pub children: Vec<(Anchorage, CompositeNode)>,
}

impl CompositeNode {
    /// Validates `node` and resolves default gains bottom-up.
    pub fn compile(node: &NestingNode) -> Result<Self, NestingError> {
        Self::compile_at(node, "root", DEFAULT_REFINE_LIMIT)
    }

    fn compile_at(node: &NestingNode, path: &str, limit: u32) -> Result<Self, NestingError> {
        node.primitive.validate()?;
        let mut children = Vec::with_capacity(node.children.len());
        for (ci, placement) in node.children.iter().enumerate() {
            let cpath = format!("{path}.{ci}");
            let s = placement.scale;
            if !(s.is_finite() && s > 0.0 && s < 1.0) {
                return Err(NestingError::InvalidScale { path: cpath, scale: s });
            }
            if !placement.offset.iter().all(|o| o.is_finite()) {
                return Err(NestingError::InvalidOffset { path: cpath });
            }
            if let Some(g) = placement.value_gain {
                if !(g.is_finite() && g > 0.0) {
                    return Err(NestingError::NoOpChild { path: cpath, gain: g });
                }
            }
            let anchor_idx = anchor_index(&node.primitive, placement.anchor).ok_or_else(|| {
                NestingError::UnknownAnchor { path: cpath.clone(), anchor: placement.anchor }
            })?;
            let child = Self::compile_at(&placement.node, &cpath, limit)?;
            let range = child.value_range(limit)?;
            let depth = node.primitive.basin_depth(anchor_idx);
            let gain = placement
                .value_gain
                .unwrap_or(DEFAULT_GAIN_FRACTION * depth / range.max(f64::MIN_POSITIVE));
            if gain * range >= depth {
                return Err(NestingError::GainTooLarge { path: cpath, gain, range, depth });
            }
            let anchorage = Anchorage::new(&node.primitive, placement, cpath.clone(), gain)?;
            let b = node.primitive.bbox;
            let [lo, hi] = anchorage.region;
            if !(lo[0] > b.min[0] && lo[1] > b.min[1] && hi[0] < b.max[0] && hi[1] < b.max[1]) {
                return Err(NestingError::ChildOutsideParent { path: cpath });
            }
            for (other, _) in &children {
                let other: &Anchorage = other;
                let [olo, ohi] = other.region;
                let apart = hi[0] < olo[0] || ohi[0] < lo[0] || hi[1] < olo[1] || ohi[1] < lo[1];
                if !apart {
                    return Err(NestingError::OverlappingChildren { a: other.path.clone(), b: cpath });
                }
            }
            children.push((anchorage, child));
        }
        Ok(Self { primitive: node.primitive.clone(), children })
    }

    /// Composite `psi2` at `p` (node coordinates); `cell` is the mesh spacing
    /// in the same units, used as the blend width.
    pub fn psi2(&self, p: Vec3, cell: f64) -> f64 {
        let base = self.primitive.psi2(p);
        self.children
            .iter()
            .find_map(|(a, child)| a.blend(p, base, child, cell))
            .unwrap_or(base)
    }

    /// Spread of `psi2` over the vertices of this node's own planned mesh.
    pub fn value_range(&self, limit: u32) -> Result<f64, NestingError> {
        let spacing = plan_composite(self, limit)?;
        let mesh = build_fc24_mesh(self.primitive.bbox, spacing)?;
        let cell = spacing[0].min(spacing[1]);
        let (lo, hi) = mesh.vertices().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            let v = self.psi2(p, cell);
            (lo.min(v), hi.max(v))
        });
        Ok(hi - lo)
    }

    /// Every descendant's box corners, optima and saddles, in this node's
    /// coordinates, tagged with the descendant's path.
    pub fn key_points(&self) -> Vec<(String, Vec2)> {
        let mut out = Vec::new();
        for (a, child) in &self.children {
            for (path, q) in child.own_key_points(&a.path).into_iter().chain(child.key_points()) {
                out.push((path, a.to_parent_xy(q)));
            }
        }
        out
    }

    fn own_key_points(&self, path: &str) -> Vec<(String, Vec2)> {
        let b = self.primitive.bbox;
        let mut pts = vec![
            [b.min[0], b.min[1]],
            [b.max[0], b.min[1]],
            [b.min[0], b.max[1]],
            [b.max[0], b.max[1]],
        ];
        pts.extend(self.primitive.optima.iter().map(|o| o.position));
        pts.extend(self.primitive.saddles().into_iter().map(|(_, _, m)| m));
        pts.into_iter().map(|p| (path.to_string(), p)).collect()
    }
}

fn plan_composite(node: &CompositeNode, limit: u32) -> Result<Vec3, NestingError> {
    if limit == 0 || !limit.is_power_of_two() {
        return Err(NestingError::InvalidRefineLimit(limit));
    }
    let base = node.primitive.spacing;
    let origin = node.primitive.bbox.min;
    let points = node.key_points();
    let aligned = |k: u32, p: &Vec2| {
        (0..2).all(|a| {
            let t = (p[a] - origin[a]) * k as f64 / base[a];
            (t - t.round()).abs() <= LOCATE_TOL * (k as f64).max(1.0)
        })
    };
    let mut k = 1;
    while k <= limit {
        if points.iter().all(|(_, p)| aligned(k, p)) {
            return Ok(base.map(|s| s / k as f64));
        }
        k *= 2;
    }
    let path = points
        .iter()
        .find(|(_, p)| !aligned(limit, p))
        .map(|(path, _)| path.clone())
        .unwrap_or_default();
    Err(NestingError::IrrationalScale { path, limit })
}

/// Coarsest dyadic refinement of the root spacing putting every descendant's
/// box corners, optima and saddles on grid corners. All axes are refined by
/// the same factor so grid cells keep their shape.
pub fn plan_refinement(root: &NestingNode) -> Result<Vec3, NestingError> {
    plan_refinement_with_limit(root, DEFAULT_REFINE_LIMIT)
}

pub fn plan_refinement_with_limit(root: &NestingNode, limit: u32) -> Result<Vec3, NestingError> {
    let compiled = CompositeNode::compile_at(root, "root", limit)?;
    plan_composite(&compiled, limit)
}

/// Overwrites `psi2` inside the child's region of `parent_field` with the
/// gain-scaled child field, blended to the parent across one mesh cell.
///
/// The parent field must live on a mesh that already contains every key
/// point of the child as a vertex.
pub fn embed_child(
    parent_field: &PLFieldPair,
    anchorage: &Anchorage,
    child: &CompositeNode,
) -> Result<PLFieldPair, NestingError> {
    let mesh = parent_field.mesh().clone();
    for (path, q) in child.own_key_points(&anchorage.path).into_iter().chain(child.key_points()) {
        let p = anchorage.to_parent_xy(q);
        let zs = [mesh.bbox().min[2], mesh.bbox().max[2]];
        if zs.iter().any(|&z| mesh.vertex_at([p[0], p[1], z]).is_none()) {
            return Err(NestingError::MisalignedChild { path, point: p });
        }
    }
    let spacing = mesh.spacing();
    let cell = spacing[0].min(spacing[1]);
    let values = mesh
        .vertices()
        .iter()
        .zip(parent_field.values())
        .map(|(&p, &v)| [v[0], anchorage.blend(p, v[1], child, cell).unwrap_or(v[1])])
        .collect();
    Ok(PLFieldPair::new(mesh, values)?)
}

/// The benchmark: mesh, base map `psi`, and objectives `f`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub mesh: Arc<TetMesh>,
    pub psi: PLFieldPair,
    /// `psi` after the rotation only; still exactly PL.
    pub rotated: PLFieldPair,
    /// Fully transformed vertex values.
    pub objectives: PLFieldPair,
}

impl Problem {
    pub fn psi_at(&self, p: Vec3) -> Result<[f64; 2], MeshError> {
        self.psi.interpolate(p)
    }

    /// Objective values at `p`; monotone maps act after interpolation unless
    /// the transform is baked.
    pub fn evaluate(&self, p: Vec3) -> Result<[f64; 2], MeshError> {
        let bary = self.mesh.locate(p)?;
        Ok(self.evaluate_at(&bary))
    }

    pub fn evaluate_at(&self, bary: &BaryCoords) -> [f64; 2] {
        if self.spec.transform.bake {
            self.objectives.interpolate_at(bary)
        } else {
            self.spec.transform.maps.apply(self.rotated.interpolate_at(bary))
        }
    }

    pub fn bbox(&self) -> Box3 {
        self.mesh.bbox()
    }
}

/// Builds the refined mesh, samples the root primitive, embeds every child
/// and applies the transform chain.
pub fn compose_problem(spec: &ProblemSpec) -> Result<Problem, NestingError> {
    spec.transform.validate()?;
    let compiled = CompositeNode::compile_at(&spec.root, "root", spec.refine_limit)?;
    let spacing = match spec.spacing_override {
        Some(s) => s,
        None => plan_composite(&compiled, spec.refine_limit)?,
    };
    let mesh = Arc::new(build_fc24_mesh(compiled.primitive.bbox, spacing)?);
    let root = &compiled.primitive;
    let mut psi = PLFieldPair::from_fn(mesh.clone(), |p| [p[2], root.psi2(p)])?;
    for (anchorage, child) in &compiled.children {
        psi = embed_child(&psi, anchorage, child)?;
    }
    let rotated = rotate_objectives(&psi, spec.transform.rotation_deg)?;
    let objectives = apply_monotone(&rotated, &spec.transform.maps)?;
    Ok(Problem { spec: spec.clone(), mesh, psi, rotated, objectives })
}
