use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{rotation_from_axis_angle, Pose};

/// Gaussian pose-noise protocol used by the benchmark pipeline: rotations are
/// perturbed by a random angle-axis vector, translations by additive noise.
///
/// The four benchmark noise levels are `(0.1°, 0.01 m)`, `(1°, 0.1 m)`,
/// `(2°, 0.2 m)` and `(3°, 0.3 m)`, see [`NOISE_LEVELS`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Rotation noise std, degrees.
    pub sigma_rot_deg: f64,
    /// Translation noise std, meters.
    pub sigma_trans: f64,
    pub seed: u64,
}

/// `(σ_rot in degrees, σ_trans in meters)` for benchmark levels 1–4.
pub const NOISE_LEVELS: [(f64, f64); 4] = [(0.1, 0.01), (1.0, 0.1), (2.0, 0.2), (3.0, 0.3)];

/// Applies i.i.d. Gaussian noise to each pose.
///
/// Per pose, an angle-axis vector `ω` with i.i.d. `N(0, σ_rot²)` components is
/// drawn and the rotation is left-composed with `exp([ω]ₓ)` (a global-frame
/// perturbation); each translation component gets additive `N(0, σ_trans²)`
/// noise. With `hold_first` the first pose is returned unchanged (its draws
/// are still consumed, so the remaining poses get the same noise either way).
pub fn perturb_poses(poses: &[Pose], noise: &NoiseSpec, hold_first: bool) -> Vec<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let sigma_rad = noise.sigma_rot_deg.to_radians();
    poses
        .iter()
        .enumerate()
        .map(|(j, pose)| {
            let omega = Vector3::new(
                sigma_rad * rng.sample::<f64, _>(StandardNormal),
                sigma_rad * rng.sample::<f64, _>(StandardNormal),
                sigma_rad * rng.sample::<f64, _>(StandardNormal),
            );
            let delta_t = Vector3::new(
                noise.sigma_trans * rng.sample::<f64, _>(StandardNormal),
                noise.sigma_trans * rng.sample::<f64, _>(StandardNormal),
                noise.sigma_trans * rng.sample::<f64, _>(StandardNormal),
            );
            if hold_first && j == 0 {
                return pose.clone();
            }
            Pose::from_parts_unchecked(
                rotation_from_axis_angle(&omega) * pose.rotation(),
                pose.translation() + delta_t,
            )
        })
        .collect()
}
