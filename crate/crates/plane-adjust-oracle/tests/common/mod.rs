use nalgebra::{DVector, Vector6};

use plane_adjust::problem::{
    generate_scene, perturb_poses, GeneratedScene, NoiseSpec, SceneConfig,
};

/// A deterministic random-ish scene plus a perturbed copy of it, sized for
/// derivative checks.
pub fn perturbed_scene(seed: u64, planes: usize, poses: usize, points: usize) -> GeneratedScene {
    let scene = generate_scene(&SceneConfig {
        plane_count: planes,
        pose_count: poses,
        points_per_obs: points,
        visibility_prob: 0.8,
        extent: 10.0,
        point_noise_sigma: 0.02,
        seed,
    })
    .expect("scene generation");
    let noisy = perturb_poses(
        scene.problem.poses(),
        &NoiseSpec {
            sigma_rot_deg: 1.0,
            sigma_trans: 0.1,
            seed: seed ^ 0xbeef,
        },
        false,
    );
    GeneratedScene {
        problem: scene.problem.with_poses(noisy).expect("pose count"),
        raw_points: scene.raw_points,
        planes: scene.planes,
    }
}

#[allow(dead_code)]
pub fn offsets_from_flat(x: &DVector<f64>) -> Vec<Vector6<f64>> {
    assert_eq!(x.len() % 6, 0);
    (0..x.len() / 6)
        .map(|j| Vector6::from_iterator(x.rows(6 * j, 6).iter().copied()))
        .collect()
}

#[allow(dead_code)]
pub fn relative_error(reference: &DVector<f64>, got: &DVector<f64>) -> f64 {
    (reference - got).norm() / reference.norm().max(1e-12)
}
