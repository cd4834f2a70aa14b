//! Tetrahedral meshes of axis-aligned boxes.
//!
//! Every grid cube is split with the face-centered 24-fold subdivision: the
//! cube gets a vertex at its body center and one at each face center, every
//! face is cut into four triangles around its center, and each triangle is
//! coned to the body center. Face centers and corners are shared between
//! neighbouring cubes, so the result is conforming.
//!
//! Vertex order is fixed: grid corners (lexicographic in `(i, j, k)`), then
//! x-face, y-face and z-face centers, then body centers. Cube `c` owns tets
//! `24 * c .. 24 * c + 24`.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;

pub type Vec3 = [f64; 3];

/// Relative tolerance for extent divisibility and point location.
pub const LOCATE_TOL: f64 = 1e-9;

/// Weights below this are snapped to zero after location.
const WEIGHT_SNAP: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("spacing must be positive on every axis, got {0:?}")]
    ZeroSpacing(Vec3),
    #[error("box extent {extent} on axis {axis} is not a multiple of spacing {spacing}")]
    NonDivisibleExtent { axis: usize, extent: f64, spacing: f64 },
    #[error("box is degenerate or inverted: min {min:?}, max {max:?}")]
    DegenerateBox { min: Vec3, max: Vec3 },
    #[error("point {0:?} lies outside the mesh domain")]
    OutOfDomain(Vec3),
    #[error("value array has {got} entries, mesh has {expected} vertices")]
    ValueCount { expected: usize, got: usize },
    #[error("non-finite value at vertex {0}")]
    NonFiniteValue(usize),
}

/// Axis-aligned box with `min < max` on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Box3 {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, MeshError> {
        let b = Self { min, max };
        b.validate()?;
        Ok(b)
    }

    /// The primitive domain `[0,4] x [-1,1] x [0,1]`.
    pub fn primitive() -> Self {
        Self {
            min: [0.0, -1.0, 0.0],
            max: [4.0, 1.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let ok = (0..3).all(|a| {
            self.min[a].is_finite() && self.max[a].is_finite() && self.min[a] < self.max[a]
        });
        if ok {
            Ok(())
        } else {
            Err(MeshError::DegenerateBox {
                min: self.min,
                max: self.max,
            })
        }
    }

    pub fn extent(&self) -> Vec3 {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1] * e[2]
    }

    /// Inclusive containment with an absolute slack.
    pub fn contains(&self, p: Vec3, slack: f64) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] - slack && p[a] <= self.max[a] + slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Corner,
    FaceCenter,
    BodyCenter,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Corner => "corner",
            VertexKind::FaceCenter => "face-center",
            VertexKind::BodyCenter => "body-center",
        }
    }
}

/// Barycentric location of a point: containing tet and its four weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaryCoords {
    pub tet: usize,
    pub weights: [f64; 4],
}

impl BaryCoords {
    /// Local slots (0..4) whose weight is nonzero.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..4).filter(move |&i| self.weights[i] > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    bbox: Box3,
    spacing: Vec3,
    dims: [usize; 3],
    vertices: Vec<Vec3>,
    kinds: Vec<VertexKind>,
    tets: Vec<[usize; 4]>,
}

/// Builds the face-centered 24-fold tetrahedralization of `bbox` on a grid of
/// the given spacing.
pub fn build_fc24_mesh(bbox: Box3, spacing: Vec3) -> Result<TetMesh, MeshError> {
    if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(MeshError::ZeroSpacing(spacing));
    }
    bbox.validate()?;
    let extent = bbox.extent();
    let mut dims = [0usize; 3];
    for a in 0..3 {
        let n = (extent[a] / spacing[a]).round();
        if n < 1.0 || (n * spacing[a] - extent[a]).abs() > LOCATE_TOL * extent[a].max(1.0) {
            return Err(MeshError::NonDivisibleExtent {
                axis: a,
                extent: extent[a],
                spacing: spacing[a],
            });
        }
        dims[a] = n as usize;
    }
    Ok(TetMesh::assemble(bbox, spacing, dims))
}

/// Index arithmetic for the fixed vertex layout.
#[derive(Debug, Clone, Copy)]
struct Layout {
    dims: [usize; 3],
    face_offset: [usize; 3],
    body_offset: usize,
}

impl Layout {
    fn new(dims: [usize; 3]) -> Self {
        let [nx, ny, nz] = dims;
        let corners = (nx + 1) * (ny + 1) * (nz + 1);
        let xf = (nx + 1) * ny * nz;
        let yf = nx * (ny + 1) * nz;
        let zf = nx * ny * (nz + 1);
        Self {
            dims,
            face_offset: [corners, corners + xf, corners + xf + yf],
            body_offset: corners + xf + yf + zf,
        }
    }

    fn total(&self) -> usize {
        self.body_offset + self.dims[0] * self.dims[1] * self.dims[2]
    }

    fn corner(&self, i: usize, j: usize, k: usize) -> usize {
        let [_, ny, nz] = self.dims;
        (i * (ny + 1) + j) * (nz + 1) + k
    }

    /// Face center on the plane normal to `axis`; `(i, j, k)` indexes the
    /// plane along `axis` and the cell along the other two axes.
    fn face(&self, axis: usize, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, nz] = self.dims;
        let (sy, sz) = match axis {
            0 => (ny, nz),
            1 => (ny + 1, nz),
            _ => (ny, nz + 1),
        };
        let _ = nx;
        self.face_offset[axis] + (i * sy + j) * sz + k
    }

    fn body(&self, i: usize, j: usize, k: usize) -> usize {
        let [_, ny, nz] = self.dims;
        self.body_offset + (i * ny + j) * nz + k
    }

    fn cube(&self, i: usize, j: usize, k: usize) -> usize {
        let [_, ny, nz] = self.dims;
        (i * ny + j) * nz + k
    }
}

fn signed_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    let u = sub(b, a);
    let v = sub(c, a);
    let w = sub(d, a);
    det3(u, v, w) / 6.0
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(u: Vec3, v: Vec3, w: Vec3) -> f64 {
    u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

impl TetMesh {
    fn assemble(bbox: Box3, spacing: Vec3, dims: [usize; 3]) -> Self {
        let layout = Layout::new(dims);
        let [nx, ny, nz] = dims;
        let mut vertices = Vec::with_capacity(layout.total());
        let mut kinds = Vec::with_capacity(layout.total());
        // Doubled grid coordinates keep half offsets exact.
        let at = |di: usize, dj: usize, dk: usize| -> Vec3 {
            [
                bbox.min[0] + di as f64 * 0.5 * spacing[0],
                bbox.min[1] + dj as f64 * 0.5 * spacing[1],
                bbox.min[2] + dk as f64 * 0.5 * spacing[2],
            ]
        };
        for i in 0..=nx {
            for j in 0..=ny {
                for k in 0..=nz {
                    vertices.push(at(2 * i, 2 * j, 2 * k));
                    kinds.push(VertexKind::Corner);
                }
            }
        }
        for i in 0..=nx {
            for j in 0..ny {
                for k in 0..nz {
                    vertices.push(at(2 * i, 2 * j + 1, 2 * k + 1));
                    kinds.push(VertexKind::FaceCenter);
                }
            }
        }
        for i in 0..nx {
            for j in 0..=ny {
                for k in 0..nz {
                    vertices.push(at(2 * i + 1, 2 * j, 2 * k + 1));
                    kinds.push(VertexKind::FaceCenter);
                }
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..=nz {
                    vertices.push(at(2 * i + 1, 2 * j + 1, 2 * k));
                    kinds.push(VertexKind::FaceCenter);
                }
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    vertices.push(at(2 * i + 1, 2 * j + 1, 2 * k + 1));
                    kinds.push(VertexKind::BodyCenter);
                }
            }
        }
        debug_assert_eq!(vertices.len(), layout.total());

        let mut tets = Vec::with_capacity(24 * nx * ny * nz);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let body = layout.body(i, j, k);
                    let c = |di: usize, dj: usize, dk: usize| layout.corner(i + di, j + dj, k + dk);
                    // (face center, boundary loop) for -x, +x, -y, +y, -z, +z.
                    let faces: [(usize, [usize; 4]); 6] = [
                        (layout.face(0, i, j, k), [c(0, 0, 0), c(0, 1, 0), c(0, 1, 1), c(0, 0, 1)]),
                        (layout.face(0, i + 1, j, k), [c(1, 0, 0), c(1, 1, 0), c(1, 1, 1), c(1, 0, 1)]),
                        (layout.face(1, i, j, k), [c(0, 0, 0), c(1, 0, 0), c(1, 0, 1), c(0, 0, 1)]),
                        (layout.face(1, i, j + 1, k), [c(0, 1, 0), c(1, 1, 0), c(1, 1, 1), c(0, 1, 1)]),
                        (layout.face(2, i, j, k), [c(0, 0, 0), c(1, 0, 0), c(1, 1, 0), c(0, 1, 0)]),
                        (layout.face(2, i, j, k + 1), [c(0, 0, 1), c(1, 0, 1), c(1, 1, 1), c(0, 1, 1)]),
                    ];
                    for (fc, ring) in faces {
                        for e in 0..4 {
                            let (a, b) = (ring[e], ring[(e + 1) % 4]);
                            let mut t = [body, fc, a, b];
                            if signed_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]) < 0.0 {
                                t.swap(2, 3);
                            }
                            tets.push(t);
                        }
                    }
                }
            }
        }

        Self {
            bbox,
            spacing,
            dims,
            vertices,
            kinds,
            tets,
        }
    }

    pub fn bbox(&self) -> Box3 {
        self.bbox
    }

    pub fn spacing(&self) -> Vec3 {
        self.spacing
    }

    /// Number of grid cubes along each axis.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn vertex_kind(&self, v: usize) -> VertexKind {
        self.kinds[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    pub fn cube_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Tet indices belonging to grid cube `(i, j, k)`.
    pub fn cube_tets(&self, i: usize, j: usize, k: usize) -> std::ops::Range<usize> {
        let c = Layout::new(self.dims).cube(i, j, k);
        24 * c..24 * c + 24
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t];
        signed_volume(self.vertices[a], self.vertices[b], self.vertices[c], self.vertices[d])
    }

    pub fn tet_barycenter(&self, t: usize) -> Vec3 {
        let mut p = [0.0; 3];
        for &v in &self.tets[t] {
            for a in 0..3 {
                p[a] += 0.25 * self.vertices[v][a];
            }
        }
        p
    }

    /// Vertex sitting exactly at `p` (up to `LOCATE_TOL` in grid units), if any.
    pub fn vertex_at(&self, p: Vec3) -> Option<usize> {
        let layout = Layout::new(self.dims);
        let mut d = [0usize; 3];
        for a in 0..3 {
            let t = 2.0 * (p[a] - self.bbox.min[a]) / self.spacing[a];
            let r = t.round();
            if (t - r).abs() > LOCATE_TOL || r < 0.0 || r > 2.0 * self.dims[a] as f64 {
                return None;
            }
            d[a] = r as usize;
        }
        let odd = [d[0] % 2 == 1, d[1] % 2 == 1, d[2] % 2 == 1];
        let (i, j, k) = (d[0] / 2, d[1] / 2, d[2] / 2);
        match odd {
            [false, false, false] => Some(layout.corner(i, j, k)),
            [false, true, true] => Some(layout.face(0, i, j, k)),
            [true, false, true] => Some(layout.face(1, i, j, k)),
            [true, true, false] => Some(layout.face(2, i, j, k)),
            [true, true, true] => Some(layout.body(i, j, k)),
            _ => None,
        }
    }

    /// Barycentric weights of `p` with respect to tet `t` (unclamped).
    pub fn barycentric(&self, t: usize, p: Vec3) -> [f64; 4] {
        let [a, b, c, d] = self.tets[t].map(|v| self.vertices[v]);
        let vol = det3(sub(b, a), sub(c, a), sub(d, a));
        let q = sub(p, a);
        let w1 = det3(q, sub(c, a), sub(d, a)) / vol;
        let w2 = det3(sub(b, a), q, sub(d, a)) / vol;
        let w3 = det3(sub(b, a), sub(c, a), q) / vol;
        [1.0 - w1 - w2 - w3, w1, w2, w3]
    }

    /// Finds the lowest-index tet containing `p` and its barycentric weights.
    pub fn locate(&self, p: Vec3) -> Result<BaryCoords, MeshError> {
        let ext = self.bbox.extent();
        let slack = LOCATE_TOL * ext.iter().cloned().fold(1.0, f64::max);
        if !p.iter().all(|c| c.is_finite()) || !self.bbox.contains(p, slack) {
            return Err(MeshError::OutOfDomain(p));
        }
        let mut q = p;
        for a in 0..3 {
            q[a] = q[a].clamp(self.bbox.min[a], self.bbox.max[a]);
        }

        // Candidate cells along each axis: the cell containing q plus its
        // lower neighbour when q sits on the shared plane.
        let mut ranges = [(0usize, 0usize); 3];
        for a in 0..3 {
            let t = (q[a] - self.bbox.min[a]) / self.spacing[a];
            let n = self.dims[a];
            let lo = ((t - LOCATE_TOL).floor().max(0.0) as usize).min(n - 1);
            let hi = ((t + LOCATE_TOL).floor().max(0.0) as usize).min(n - 1);
            ranges[a] = (lo, hi);
        }
        let layout = Layout::new(self.dims);
        let mut cubes = Vec::with_capacity(8);
        for i in ranges[0].0..=ranges[0].1 {
            for j in ranges[1].0..=ranges[1].1 {
                for k in ranges[2].0..=ranges[2].1 {
                    cubes.push(layout.cube(i, j, k));
                }
            }
        }
        cubes.sort_unstable();

        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for c in cubes {
            for t in 24 * c..24 * c + 24 {
                let w = self.barycentric(t, q);
                let worst = w.iter().cloned().fold(f64::INFINITY, f64::min);
                if worst >= -LOCATE_TOL {
                    return Ok(BaryCoords {
                        tet: t,
                        weights: normalize_weights(w),
                    });
                }
                if best.is_none_or(|(_, _, b)| worst > b) {
                    best = Some((t, w, worst));
                }
            }
        }
        // Rounding on a boundary can leave every candidate slightly negative.
        let (t, w, _) = best.expect("at least one candidate cube");
        Ok(BaryCoords {
            tet: t,
            weights: normalize_weights(w),
        })
    }

    /// Symmetric vertex adjacency from tet edges, each list sorted.
    pub fn vertex_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
        for t in &self.tets {
            for a in 0..4 {
                for b in 0..4 {
                    if a != b {
                        adj[t[a]].push(t[b]);
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Unique mesh edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.tets.len() * 6);
        for t in &self.tets {
            for a in 0..4 {
                for b in a + 1..4 {
                    let (u, v) = (t[a].min(t[b]), t[a].max(t[b]));
                    edges.push((u, v));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Per-vertex dual volume: a quarter of every incident tet's volume.
    pub fn dual_volumes(&self) -> Vec<f64> {
        let mut vol = vec![0.0; self.vertices.len()];
        for (t, tet) in self.tets.iter().enumerate() {
            let q = 0.25 * self.tet_volume(t);
            for &v in tet {
                vol[v] += q;
            }
        }
        vol
    }

    pub fn write_vertices_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "x", "y", "z", "kind"])?;
        for (i, p) in self.vertices.iter().enumerate() {
            w.write_record([
                i.to_string(),
                fmt_f64(p[0]),
                fmt_f64(p[1]),
                fmt_f64(p[2]),
                self.kinds[i].as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_tets_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "v0", "v1", "v2", "v3"])?;
        for (i, t) in self.tets.iter().enumerate() {
            w.write_record([
                i.to_string(),
                t[0].to_string(),
                t[1].to_string(),
                t[2].to_string(),
                t[3].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn normalize_weights(mut w: [f64; 4]) -> [f64; 4] {
    for x in &mut w {
        if *x < WEIGHT_SNAP {
            *x = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    w
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A bi-objective piecewise-linear field: one value pair per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PLFieldPair {
    mesh: Arc<TetMesh>,
    values: Vec<[f64; 2]>,
}

impl PLFieldPair {
    pub fn new(mesh: Arc<TetMesh>, values: Vec<[f64; 2]>) -> Result<Self, MeshError> {
        if values.len() != mesh.vertex_count() {
            return Err(MeshError::ValueCount {
                expected: mesh.vertex_count(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(MeshError::NonFiniteValue(v));
        }
        Ok(Self { mesh, values })
    }

    /// Builds a field by evaluating `f` at every vertex position.
    pub fn from_fn(mesh: Arc<TetMesh>, f: impl Fn(Vec3) -> [f64; 2]) -> Result<Self, MeshError> {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<TetMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn value(&self, v: usize) -> [f64; 2] {
        self.values[v]
    }

    /// Applies `f` to every vertex value pair.
    pub fn map_values(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self, MeshError> {
        Self::new(self.mesh.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn interpolate_at(&self, bary: &BaryCoords) -> [f64; 2] {
        let tet = self.mesh.tets()[bary.tet];
        let mut out = [0.0; 2];
        for (slot, &v) in tet.iter().enumerate() {
            let w = bary.weights[slot];
            if w != 0.0 {
                out[0] += w * self.values[v][0];
                out[1] += w * self.values[v][1];
            }
        }
        out
    }

    /// Piecewise-linear evaluation at an arbitrary point of the domain.
    pub fn interpolate(&self, p: Vec3) -> Result<[f64; 2], MeshError> {
        let bary = self.mesh.locate(p)?;
        Ok(self.interpolate_at(&bary))
    }
}
