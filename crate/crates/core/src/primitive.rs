//! The primitive domain: a box carrying a major and one or more minor optima
//! of `psi2`, with `psi1 = z`.
//!
//! At the bottom slice every point takes the value of its dominant optimum's
//! valley, `base + slope * l1(a, position)`. At the top slice only optima that
//! persist contribute. Vertex values between the two slices are the affine
//! blend in normalized height, so the minor optimum fades out along `z`.

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{build_fc24_mesh, Box3, MeshError, PLFieldPair, Vec3, LOCATE_TOL};

pub type Vec2 = [f64; 2];

/// Agreement required between the two valley branches at a saddle.
pub const SADDLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrimitiveError {
    #[error("primitive has no optima")]
    NoOptima,
    #[error("optimum {0} has non-positive or non-finite slope")]
    NonPositiveSlope(usize),
    #[error("optimum {0} has a non-finite base value")]
    NonFiniteBase(usize),
    #[error("optima {0} and {1} share rank")]
    DuplicateRank(usize, usize),
    #[error("optimum {0} is not a grid corner of the bottom slice")]
    OptimumOffGrid(usize),
    #[error("optimum {0} is not strictly inside the slice rectangle")]
    OptimumOnBoundary(usize),
    #[error("no optimum persists to the top slice")]
    NoPersistentOptimum,
    #[error("valley branches of optima {a} and {b} disagree at their midpoint ({left} vs {right})")]
    SaddleInconsistent { a: usize, b: usize, left: f64, right: f64 },
    #[error("midpoint of optima {a} and {b} is not a grid corner")]
    SaddleOffGrid { a: usize, b: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// A valley center in the bottom slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub position: Vec2,
    /// `psi2` at the optimum.
    pub base_value: f64,
    /// Valley steepness `r`.
    pub slope: f64,
    /// Position in the total order on optima; the largest rank is global.
    pub rank: i32,
    pub persists_at_top: bool,
}

impl Optimum {
    /// Value of this optimum's valley at `a`.
    pub fn branch_value(&self, a: Vec2) -> f64 {
        self.base_value + self.slope * l1_distance(a, self.position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSpec {
    pub bbox: Box3,
    pub optima: Vec<Optimum>,
    pub spacing: Vec3,
}

impl Default for PrimitiveSpec {
    fn default() -> Self {
        Self::standard()
    }
}

pub fn l1_distance(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

/// The optimum with the lowest valley value at `a`; ties go to the larger rank.
pub fn dominant_optimum(a: Vec2, optima: &[Optimum]) -> &Optimum {
    dominant_index(a, optima.iter().enumerate()).map(|i| &optima[i]).expect("non-empty optima")
}

fn dominant_index<'a>(a: Vec2, candidates: impl Iterator<Item = (usize, &'a Optimum)>) -> Option<usize> {
    let mut best: Option<(usize, f64, i32)> = None;
    for (i, o) in candidates {
        let v = o.branch_value(a);
        let better = match best {
            None => true,
            Some((_, bv, br)) => v < bv || (v == bv && o.rank > br),
        };
        if better {
            best = Some((i, v, o.rank));
        }
    }
    best.map(|(i, _, _)| i)
}

pub fn slice_value_z0(a: Vec2, optima: &[Optimum]) -> f64 {
    dominant_optimum(a, optima).branch_value(a)
}

/// Top-slice value: only optima that persist to the top take part.
pub fn slice_value_z1(a: Vec2, optima: &[Optimum]) -> Result<f64, PrimitiveError> {
    dominant_index(a, optima.iter().enumerate().filter(|(_, o)| o.persists_at_top))
        .map(|i| optima[i].branch_value(a))
        .ok_or(PrimitiveError::NoPersistentOptimum)
}

impl PrimitiveSpec {
    /// Major optimum at (1, 0) with value 0 and slope 1; minor optimum at
    /// (3, 0) with value 0.5 and slope 0.5, vanishing at the top slice.
    pub fn standard() -> Self {
        Self {
            bbox: Box3::primitive(),
            optima: vec![
                Optimum {
                    position: [1.0, 0.0],
                    base_value: 0.0,
                    slope: 1.0,
                    rank: 1,
                    persists_at_top: true,
                },
                Optimum {
                    position: [3.0, 0.0],
                    base_value: 0.5,
                    slope: 0.5,
                    rank: 0,
                    persists_at_top: false,
                },
            ],
            spacing: [1.0; 3],
        }
    }

    /// Standard geometry with only the major optimum.
    pub fn single_optimum() -> Self {
        let mut s = Self::standard();
        s.optima.truncate(1);
        s
    }

    pub fn validate(&self) -> Result<(), PrimitiveError> {
        self.bbox.validate()?;
        if self.optima.is_empty() {
            return Err(PrimitiveError::NoOptima);
        }
        for (i, o) in self.optima.iter().enumerate() {
            if !(o.slope.is_finite() && o.slope > 0.0) {
                return Err(PrimitiveError::NonPositiveSlope(i));
            }
            if !o.base_value.is_finite() {
                return Err(PrimitiveError::NonFiniteBase(i));
            }
            for (j, p) in self.optima.iter().enumerate().skip(i + 1) {
                if p.rank == o.rank {
                    return Err(PrimitiveError::DuplicateRank(i, j));
                }
            }
            let [x, y] = o.position;
            let b = &self.bbox;
            if !(x > b.min[0] && x < b.max[0] && y > b.min[1] && y < b.max[1]) {
                return Err(PrimitiveError::OptimumOnBoundary(i));
            }
            if !self.on_grid(o.position) {
                return Err(PrimitiveError::OptimumOffGrid(i));
            }
        }
        if !self.optima.iter().any(|o| o.persists_at_top) {
            return Err(PrimitiveError::NoPersistentOptimum);
        }
        for (a, b, mid) in self.saddles() {
            let (oa, ob) = (&self.optima[a], &self.optima[b]);
            let (left, right) = (oa.branch_value(mid), ob.branch_value(mid));
            if (left - right).abs() > SADDLE_TOL * left.abs().max(1.0) {
                return Err(PrimitiveError::SaddleInconsistent { a, b, left, right });
            }
            if !self.on_grid(mid) {
                return Err(PrimitiveError::SaddleOffGrid { a, b });
            }
        }
        Ok(())
    }

    /// Pairs of optima whose valleys meet at their midpoint, with that midpoint.
    ///
    /// A pair is skipped when a third optimum owns the midpoint.
    pub fn saddles(&self) -> Vec<(usize, usize, Vec2)> {
        let mut out = Vec::new();
        for a in 0..self.optima.len() {
            for b in a + 1..self.optima.len() {
                let (pa, pb) = (self.optima[a].position, self.optima[b].position);
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                // The owner is decided with the pair's two branches forced
                // equal, so check whether anyone else is strictly lower.
                let floor = self.optima[a].branch_value(mid).min(self.optima[b].branch_value(mid));
                let foreign = self
                    .optima
                    .iter()
                    .enumerate()
                    .any(|(k, o)| k != a && k != b && o.branch_value(mid) < floor);
                if !foreign {
                    out.push((a, b, mid));
                }
            }
        }
        out
    }

    fn on_grid(&self, p: Vec2) -> bool {
        (0..2).all(|a| {
            let t = (p[a] - self.bbox.min[a]) / self.spacing[a];
            (t - t.round()).abs() <= LOCATE_TOL
        })
    }

    /// Index of the optimum with the greatest rank.
    pub fn major_index(&self) -> usize {
        self.optima
            .iter()
            .enumerate()
            .max_by_key(|(_, o)| o.rank)
            .map(|(i, _)| i)
            .expect("non-empty optima")
    }

    /// Non-major optima ordered by descending rank.
    pub fn minor_indices(&self) -> Vec<usize> {
        let major = self.major_index();
        let mut idx: Vec<usize> = (0..self.optima.len()).filter(|&i| i != major).collect();
        idx.sort_by_key(|&i| std::cmp::Reverse(self.optima[i].rank));
        idx
    }

    /// Normalized height in `[0, 1]`.
    pub fn height(&self, z: f64) -> f64 {
        (z - self.bbox.min[2]) / (self.bbox.max[2] - self.bbox.min[2])
    }

    /// `psi2` from the slice rules, blended affinely in normalized height.
    pub fn psi2(&self, p: Vec3) -> f64 {
        let a = [p[0], p[1]];
        let t = self.height(p[2]);
        let bottom = slice_value_z0(a, &self.optima);
        // validate() guarantees a persistent optimum
        let top = slice_value_z1(a, &self.optima).unwrap_or(bottom);
        (1.0 - t) * bottom + t * top
    }

    /// Depth of optimum `i`'s basin: the rise from its base value to the
    /// lowest point where its valley meets another valley or the box boundary.
    pub fn basin_depth(&self, i: usize) -> f64 {
        let o = &self.optima[i];
        let b = &self.bbox;
        let [x, y] = o.position;
        let to_wall = (x - b.min[0]).min(b.max[0] - x).min(y - b.min[1]).min(b.max[1] - y);
        let mut depth = o.slope * to_wall;
        for (a, c, mid) in self.saddles() {
            if a == i || c == i {
                depth = depth.min(o.branch_value(mid) - o.base_value);
            }
        }
        depth
    }
}

/// Samples `psi = (z, psi2)` at every vertex of the primitive's mesh.
pub fn build_primitive_field(spec: &PrimitiveSpec) -> Result<PLFieldPair, PrimitiveError> {
    spec.validate()?;
    let mesh = Arc::new(build_fc24_mesh(spec.bbox, spec.spacing)?);
    Ok(PLFieldPair::from_fn(mesh, |p| [p[2], spec.psi2(p)])?)
}
