//! Range transforms turning `psi` into benchmark objectives.
//!
//! A rotation of the objective plane comes first; with the default -45
//! degrees, `psi2` valleys crossed with `psi1 = z` become trade-off curves.
//! Strictly increasing per-objective maps may follow. The maps are applied
//! after interpolation when evaluating off-vertex points, unless the chain is
//! set to bake them into vertex values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{MeshError, PLFieldPair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("rotation angle must be finite")]
    NonFiniteAngle,
    #[error("invalid parameter for {0} map")]
    InvalidMap(&'static str),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Strictly increasing scalar maps. `power` and `log1p_scale` act on the
/// magnitude and keep the sign, so they are increasing on the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonotoneMap {
    Identity,
    Power { gamma: f64 },
    Affine { a: f64, b: f64 },
    Log1pScale { k: f64 },
}

impl MonotoneMap {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            MonotoneMap::Identity => x,
            MonotoneMap::Power { gamma } => x.signum() * x.abs().powf(gamma),
            MonotoneMap::Affine { a, b } => a * x + b,
            MonotoneMap::Log1pScale { k } => x.signum() * (k * x.abs()).ln_1p(),
        }
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            MonotoneMap::Identity => Ok(()),
            MonotoneMap::Power { gamma } if ok(gamma) => Ok(()),
            MonotoneMap::Power { .. } => Err(TransformError::InvalidMap("power")),
            MonotoneMap::Affine { a, b } if ok(a) && b.is_finite() => Ok(()),
            MonotoneMap::Affine { .. } => Err(TransformError::InvalidMap("affine")),
            MonotoneMap::Log1pScale { k } if ok(k) => Ok(()),
            MonotoneMap::Log1pScale { .. } => Err(TransformError::InvalidMap("log1p_scale")),
        }
    }
}

/// Maps composed left to right, one chain per objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectiveMaps {
    pub f1: Vec<MonotoneMap>,
    pub f2: Vec<MonotoneMap>,
}

impl ObjectiveMaps {
    pub fn is_identity(&self) -> bool {
        self.f1.iter().chain(&self.f2).all(|m| *m == MonotoneMap::Identity)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.f1.iter().fold(v[0], |x, m| m.apply(x)),
            self.f2.iter().fold(v[1], |x, m| m.apply(x)),
        ]
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        self.f1.iter().chain(&self.f2).try_for_each(|m| m.validate())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformChain {
    pub rotation_deg: f64,
    pub maps: ObjectiveMaps,
    /// Interpolate mapped vertex values instead of mapping interpolated ones.
    pub bake: bool,
}

impl Default for TransformChain {
    fn default() -> Self {
        Self {
            rotation_deg: -45.0,
            maps: ObjectiveMaps::default(),
            bake: false,
        }
    }
}

impl TransformChain {
    pub fn validate(&self) -> Result<(), TransformError> {
        if !self.rotation_deg.is_finite() {
            return Err(TransformError::NonFiniteAngle);
        }
        self.maps.validate()
    }

    pub fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        rotate_pair(v, self.rotation_deg)
    }

    /// Rotation followed by the monotone maps.
    pub fn apply(&self, psi: [f64; 2]) -> [f64; 2] {
        self.maps.apply(self.rotate(psi))
    }
}

/// `(cos t * a - sin t * b, sin t * a + cos t * b)`, exact at multiples of 45 degrees.
pub fn rotate_pair(v: [f64; 2], angle_deg: f64) -> [f64; 2] {
    let (s, c) = sin_cos_deg(angle_deg);
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

fn sin_cos_deg(angle_deg: f64) -> (f64, f64) {
    let r = angle_deg.rem_euclid(360.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match r {
        x if x == 0.0 => (0.0, 1.0),
        x if x == 45.0 => (h, h),
        x if x == 90.0 => (1.0, 0.0),
        x if x == 135.0 => (h, -h),
        x if x == 180.0 => (0.0, -1.0),
        x if x == 225.0 => (-h, -h),
        x if x == 270.0 => (-1.0, 0.0),
        x if x == 315.0 => (-h, h),
        _ => r.to_radians().sin_cos(),
    }
}

pub fn rotate_objectives(psi: &PLFieldPair, angle_deg: f64) -> Result<PLFieldPair, TransformError> {
    if !angle_deg.is_finite() {
        return Err(TransformError::NonFiniteAngle);
    }
    Ok(psi.map_values(|v| rotate_pair(v, angle_deg))?)
}

pub fn apply_monotone(f: &PLFieldPair, maps: &ObjectiveMaps) -> Result<PLFieldPair, TransformError> {
    maps.validate()?;
    Ok(f.map_values(|v| maps.apply(v))?)
}
