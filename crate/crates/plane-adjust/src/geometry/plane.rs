use nalgebra::{Vector3, Vector4};

use crate::error::{Error, Result};

/// An infinite plane `{p : n·p + d = 0}` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vector3<f64>,
    offset: f64,
}

impl Plane {
    /// Builds a plane, checking the unit-norm invariant on `normal`.
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        if (normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "plane normal has norm {}, expected 1",
                normal.norm()
            )));
        }
        Ok(Plane { normal, offset })
    }

    /// Builds a plane from an arbitrary nonzero normal, normalizing it.
    pub fn from_unnormalized(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        let norm = normal.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidConfig("plane normal is zero".into()));
        }
        Ok(Plane {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    pub fn normal(&self) -> &Vector3<f64> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Homogeneous form `[n; d]`.
    pub fn homogeneous(&self) -> Vector4<f64> {
        Vector4::new(self.normal.x, self.normal.y, self.normal.z, self.offset)
    }

    /// Signed point-to-plane distance `n·p + d`.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) + self.offset
    }

    /// Two unit vectors spanning the plane's tangent directions, orthogonal to
    /// the normal and to each other. Deterministic in the normal.
    pub fn tangent_basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal;
        // seed axis: the coordinate direction least aligned with n
        let seed = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let b1 = n.cross(&seed).normalize();
        let b2 = n.cross(&b1);
        (b1, b2)
    }
}
