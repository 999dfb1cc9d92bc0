use nalgebra::{Matrix3, Vector3};

use super::eig::{characteristic_coeffs, smallest_eigenpair, CubicCoeffs, EigenPair};
use super::plane::Plane;
use super::DEGENERACY_EPS;
use crate::error::{Error, Result};

/// Centered second-moment matrix `M = Σ (pᵢ − p̄)(pᵢ − p̄)ᵀ` of a point set.
///
/// The smallest eigenvalue of `M` is the optimal sum of squared point-to-plane
/// distances over all planes, which is what makes plane elimination work.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    matrix: Matrix3<f64>,
    centroid: Option<Vector3<f64>>,
    count: Option<usize>,
}

impl ScatterMatrix {
    /// Wraps a precomputed scatter matrix with optional centroid/count cache.
    pub fn new(matrix: Matrix3<f64>, centroid: Option<Vector3<f64>>, count: Option<usize>) -> Self {
        ScatterMatrix {
            matrix,
            centroid,
            count,
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn centroid(&self) -> Option<&Vector3<f64>> {
        self.centroid.as_ref()
    }

    pub fn count(&self) -> Option<usize> {
        self.count
    }

    pub fn characteristic_coeffs(&self) -> CubicCoeffs {
        characteristic_coeffs(&self.matrix)
    }

    pub fn smallest_eigenpair(&self) -> EigenPair {
        smallest_eigenpair(&self.matrix)
    }
}

/// Scatter matrix of a point set: `M = S − K p̄ p̄ᵀ` with `S = Σ pᵢpᵢᵀ`.
///
/// Accumulated in centered form for numerical robustness; at least three
/// points are required (a plane fit has three degrees of freedom).
pub fn scatter_from_points(points: &[Vector3<f64>]) -> Result<ScatterMatrix> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let k = points.len() as f64;
    let centroid = points.iter().sum::<Vector3<f64>>() / k;
    let mut m = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        m += d * d.transpose();
    }
    Ok(ScatterMatrix {
        matrix: m,
        centroid: Some(centroid),
        count: Some(points.len()),
    })
}

/// Result of a least-squares plane fit.
#[derive(Debug, Clone)]
pub struct PlaneFit {
    pub plane: Plane,
    /// Sum of squared point-to-plane distances at the optimum; equals the
    /// smallest eigenvalue of the scatter matrix.
    pub residual: f64,
    /// Smallest-eigenvalue multiplicity flag from the eigensolver.
    pub degenerate: bool,
}

/// Optimal plane through a scatter matrix: normal is the smallest-eigenvalue
/// eigenvector, offset pins the plane to the centroid.
///
/// Fails with `CollinearPoints` when the middle eigenvalue is too small for
/// the normal to be identifiable (points concentrated on a line).
pub fn fit_plane(scatter: &ScatterMatrix) -> Result<PlaneFit> {
    let centroid = scatter.centroid.ok_or_else(|| {
        Error::InvalidConfig("fit_plane requires a scatter matrix with cached centroid".into())
    })?;
    let pair = scatter.smallest_eigenpair();
    let trace_scale = 1.0_f64.max(scatter.matrix.trace().abs());
    if pair.values[1] < DEGENERACY_EPS * trace_scale {
        return Err(Error::CollinearPoints);
    }
    let normal = pair.vector;
    let offset = -normal.dot(&centroid);
    Ok(PlaneFit {
        plane: Plane::new(normal, offset)?,
        residual: pair.value,
        degenerate: pair.degenerate,
    })
}
