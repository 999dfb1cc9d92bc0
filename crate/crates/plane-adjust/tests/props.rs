//! Property tests for the geometry layer's analytic guarantees.

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plane_adjust::geometry::{
    characteristic_coeffs, cgr_to_rotation, cubic_roots_ascending, rotation_from_axis_angle,
    scatter_from_points, smallest_eigenpair, CgrVector,
};

proptest! {
    #[test]
    fn cgr_rotation_is_orthogonal(
        x in -5.0f64..5.0,
        y in -5.0f64..5.0,
        z in -5.0f64..5.0,
    ) {
        let r = cgr_to_rotation(&CgrVector(Vector3::new(x, y, z)));
        let defect = (r.transpose() * r - Matrix3::identity()).norm();
        prop_assert!(defect < 1e-12, "orthogonality defect {defect}");
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn characteristic_cubic_vanishes_at_eigenvalues(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = Matrix3::from_fn(|_, _| rng.random_range(-3.0..3.0));
        let m = half * half.transpose();
        let coeffs = characteristic_coeffs(&m);
        let scale = 1.0_f64.max(coeffs.a.abs()).powi(3);
        for root in cubic_roots_ascending(&coeffs) {
            prop_assert!(coeffs.eval(root).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn scatter_eigenvalues_are_rotation_invariant(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vector3<f64>> =
            (0..25).map(|_| Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0))).collect();
        let axis = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let rot = rotation_from_axis_angle(&axis);
        let rotated: Vec<Vector3<f64>> = points.iter().map(|p| rot * p).collect();

        let a = scatter_from_points(&points).unwrap();
        let b = scatter_from_points(&rotated).unwrap();
        let ea = a.smallest_eigenpair().values;
        let eb = b.smallest_eigenpair().values;
        let scale = a.matrix().trace().abs().max(1.0);
        for k in 0..3 {
            prop_assert!((ea[k] - eb[k]).abs() < 1e-10 * scale,
                "eigenvalue {k}: {} vs {}", ea[k], eb[k]);
        }
    }
}

/// λ₃ really is the minimum of the quadratic form over the unit sphere,
/// probed with 10⁴ random directions.
#[test]
fn smallest_eigenvalue_bounds_unit_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let half = Matrix3::from_fn(|_, _| rng.random_range(-2.0..2.0));
        let m = half * half.transpose();
        let lambda3 = smallest_eigenpair(&m).value;
        for _ in 0..10_000 {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.norm() < 1e-6 {
                continue;
            }
            let v = v.normalize();
            let quad = (v.transpose() * m * v)[0];
            assert!(
                lambda3 <= quad + 1e-9,
                "lambda3 {lambda3} exceeds quadratic form {quad}"
            );
        }
    }
}
