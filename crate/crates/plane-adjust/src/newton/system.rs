use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use crate::error::{Error, Result};

/// How the 6-DoF gauge freedom of the cost (invariance under a global rigid
/// transform) is handled in the linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeMode {
    /// The first pose's six variables are removed from the system; it stays
    /// bit-identical across iterations. Default.
    FixFirstPose,
    /// Nothing is removed; the damping term alone regularizes the null space.
    Free,
}

impl GaugeMode {
    pub fn name(self) -> &'static str {
        match self {
            GaugeMode::FixFirstPose => "fix-first-pose",
            GaugeMode::Free => "free",
        }
    }
}

impl std::str::FromStr for GaugeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fix-first-pose" | "fix-first" => Ok(GaugeMode::FixFirstPose),
            "free" => Ok(GaugeMode::Free),
            other => Err(Error::InvalidConfig(format!(
                "unknown gauge mode '{other}' (expected fix-first-pose | free)"
            ))),
        }
    }
}

/// Shape of the damping term added to the Hessian.
///
/// Isotropic damping reads the update equation literally (`H + μI`), but one
/// μ must then serve curvatures spanning many orders of magnitude: after an
/// indefiniteness-driven μ escalation it crushes the step in every direction
/// at once. Scaling by the diagonal measures μ relative to each variable's
/// own curvature, which is what production LM implementations do and what
/// keeps the damped Newton method competitive on strongly perturbed starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingForm {
    /// `(H + μI) Δx = −g`
    Isotropic,
    /// `(H + μ·diag(H)) Δx = −g`, diagonal entries clamped to
    /// `[1e-6, 1e32]`.
    ScaledDiagonal,
}

impl DampingForm {
    pub fn name(self) -> &'static str {
        match self {
            DampingForm::Isotropic => "isotropic",
            DampingForm::ScaledDiagonal => "scaled-diagonal",
        }
    }
}

impl std::str::FromStr for DampingForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isotropic" => Ok(DampingForm::Isotropic),
            "scaled-diagonal" | "scaled" => Ok(DampingForm::ScaledDiagonal),
            other => Err(Error::InvalidConfig(format!(
                "unknown damping form '{other}' (expected isotropic | scaled-diagonal)"
            ))),
        }
    }
}

pub(crate) const DIAG_DAMPING_FLOOR: f64 = 1e-6;
pub(crate) const DIAG_DAMPING_CAP: f64 = 1e32;

/// The reduced normal system: a 6N×6N Hessian stored as 6×6 blocks keyed by
/// pose pair (sparse by co-visibility), the 6N gradient, and the gauge mask.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pose_count: usize,
    blocks: BTreeMap<(usize, usize), Matrix6<f64>>,
    gradient: Vec<Vector6<f64>>,
    frozen: BTreeSet<usize>,
}

impl BlockSystem {
    pub fn new(pose_count: usize) -> Self {
        BlockSystem {
            pose_count,
            blocks: BTreeMap::new(),
            gradient: vec![Vector6::zeros(); pose_count],
            frozen: BTreeSet::new(),
        }
    }

    pub fn pose_count(&self) -> usize {
        self.pose_count
    }

    pub fn add_gradient(&mut self, pose: usize, g: &Vector6<f64>) {
        self.gradient[pose] += g;
    }

    pub fn add_block(&mut self, row: usize, col: usize, h: &Matrix6<f64>) {
        *self.blocks.entry((row, col)).or_insert_with(Matrix6::zeros) += h;
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&Matrix6<f64>> {
        self.blocks.get(&(row, col))
    }

    pub fn nonzero_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn gradient(&self) -> &[Vector6<f64>] {
        &self.gradient
    }

    /// Freezes variables according to the gauge mode.
    pub fn fix_gauge(&mut self, mode: GaugeMode) {
        self.frozen.clear();
        if mode == GaugeMode::FixFirstPose {
            self.frozen.insert(0);
        }
    }

    pub fn frozen_poses(&self) -> impl Iterator<Item = usize> + '_ {
        self.frozen.iter().copied()
    }

    /// Infinity norm of the gradient over free (non-frozen) variables.
    pub fn grad_inf_norm(&self) -> f64 {
        self.gradient
            .iter()
            .enumerate()
            .filter(|(j, _)| !self.frozen.contains(j))
            .map(|(_, g)| g.abs().max())
            .fold(0.0, f64::max)
    }

    /// Dense copies of the full (unmasked) Hessian and gradient.
    pub fn to_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let dim = 6 * self.pose_count;
        let mut h = DMatrix::zeros(dim, dim);
        for (&(r, c), block) in &self.blocks {
            h.view_mut((6 * r, 6 * c), (6, 6)).copy_from(block);
        }
        let mut g = DVector::zeros(dim);
        for (j, block) in self.gradient.iter().enumerate() {
            g.rows_mut(6 * j, 6).copy_from(block);
        }
        (h, g)
    }

    /// Solves the damped system over the free variables by Cholesky
    /// factorization; frozen poses get a zero step. Fails with
    /// `FactorizationFailure` when the damped matrix is not positive definite
    /// at this μ (the caller then raises μ and retries).
    pub fn newton_step(&self, mu: f64, damping: DampingForm) -> Result<Vec<Vector6<f64>>> {
        let free: Vec<usize> =
            (0..self.pose_count).filter(|j| !self.frozen.contains(j)).collect();
        let dim = 6 * free.len();
        if dim == 0 {
            return Ok(vec![Vector6::zeros(); self.pose_count]);
        }
        let index_of: BTreeMap<usize, usize> =
            free.iter().enumerate().map(|(i, &j)| (j, i)).collect();

        let mut h = DMatrix::zeros(dim, dim);
        for (&(r, c), block) in &self.blocks {
            if let (Some(&ri), Some(&ci)) = (index_of.get(&r), index_of.get(&c)) {
                h.view_mut((6 * ri, 6 * ci), (6, 6)).copy_from(block);
            }
        }
        for d in 0..dim {
            h[(d, d)] += mu * damping_weight(damping, h[(d, d)]);
        }
        let mut rhs = DVector::zeros(dim);
        for (i, &j) in free.iter().enumerate() {
            rhs.rows_mut(6 * i, 6).copy_from(&(-self.gradient[j]));
        }

        let chol = h.cholesky().ok_or(Error::FactorizationFailure)?;
        let solution = chol.solve(&rhs);

        let mut step = vec![Vector6::zeros(); self.pose_count];
        for (i, &j) in free.iter().enumerate() {
            step[j] = Vector6::from_iterator(solution.rows(6 * i, 6).iter().copied());
        }
        Ok(step)
    }

    /// Like [`newton_step`](Self::newton_step), but when `H + μ·W` is not
    /// positive definite the damping is escalated by doubling until the
    /// factorization succeeds (standard modified-Newton repair). Returns the
    /// step together with the effective damping that produced it. The repair
    /// is per-solve; it does not touch the caller's μ schedule.
    pub fn newton_step_repaired(
        &self,
        mu: f64,
        damping: DampingForm,
    ) -> Result<(Vec<Vector6<f64>>, f64)> {
        let mut mu_eff = mu;
        for _ in 0..64 {
            match self.newton_step(mu_eff, damping) {
                Ok(step) => return Ok((step, mu_eff)),
                Err(Error::FactorizationFailure) => mu_eff *= 2.0,
                Err(other) => return Err(other),
            }
        }
        Err(Error::FactorizationFailure)
    }
}

/// Per-variable multiplier on μ for the chosen damping form.
pub(crate) fn damping_weight(damping: DampingForm, diag: f64) -> f64 {
    match damping {
        DampingForm::Isotropic => 1.0,
        DampingForm::ScaledDiagonal => diag.clamp(DIAG_DAMPING_FLOOR, DIAG_DAMPING_CAP),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_system() -> BlockSystem {
        let mut sys = BlockSystem::new(2);
        sys.add_block(0, 0, &Matrix6::identity());
        sys.add_block(1, 1, &Matrix6::identity());
        sys
    }

    #[test]
    fn identity_hessian_returns_negated_gradient() {
        let mut sys = identity_system();
        sys.add_gradient(0, &Vector6::ith(0, 1.0));
        let step = sys.newton_step(0.0, DampingForm::Isotropic).unwrap();
        assert_relative_eq!(step[0], -Vector6::ith(0, 1.0), epsilon = 1e-14);
        assert_relative_eq!(step[1], Vector6::zeros(), epsilon = 1e-14);
    }

    #[test]
    fn huge_damping_approaches_gradient_descent() {
        let mut sys = identity_system();
        let g = Vector6::new(1.0, -2.0, 0.5, 3.0, -1.0, 0.25);
        sys.add_gradient(1, &g);
        let mu = 1e8;
        let step = sys.newton_step(mu, DampingForm::Isotropic).unwrap();
        let expected = -g / mu;
        let rel = (step[1] - expected).norm() / expected.norm();
        assert!(rel < 1e-6, "relative deviation {rel}");
    }

    #[test]
    fn solve_residual_is_tiny() {
        // SPD H from AᵀA + I, random-ish g
        let mut sys = BlockSystem::new(2);
        let mut a = Matrix6::zeros();
        for i in 0..6 {
            for j in 0..6 {
                a[(i, j)] = ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.3;
            }
        }
        let spd = a.transpose() * a + Matrix6::identity();
        sys.add_block(0, 0, &spd);
        sys.add_block(1, 1, &spd);
        let coupling = Matrix6::identity() * 0.25;
        sys.add_block(0, 1, &coupling);
        sys.add_block(1, 0, &coupling.transpose());
        let g = Vector6::new(0.3, -1.0, 2.0, 0.7, -0.2, 1.1);
        sys.add_gradient(0, &g);
        sys.add_gradient(1, &(g * 0.5));

        let mu = 1e-3;
        let step = sys.newton_step(mu, DampingForm::Isotropic).unwrap();
        let (h, grad) = sys.to_dense();
        let mut x = DVector::zeros(12);
        for j in 0..2 {
            x.rows_mut(6 * j, 6).copy_from(&step[j]);
        }
        let residual = (&h * &x + DMatrix::identity(12, 12) * mu * &x + &grad).norm();
        assert!(residual < 1e-10 * grad.norm(), "residual {residual}");
    }

    #[test]
    fn frozen_pose_gets_zero_step() {
        let mut sys = identity_system();
        sys.add_gradient(0, &Vector6::ith(2, 5.0));
        sys.add_gradient(1, &Vector6::ith(2, 5.0));
        sys.fix_gauge(GaugeMode::FixFirstPose);
        let step = sys.newton_step(1e-6, DampingForm::Isotropic).unwrap();
        assert_eq!(step[0], Vector6::zeros());
        assert!(step[1].norm() > 0.0);
        assert!(sys.grad_inf_norm() > 0.0);
    }

    #[test]
    fn indefinite_system_reports_factorization_failure() {
        let mut sys = BlockSystem::new(1);
        sys.add_block(0, 0, &(-Matrix6::identity()));
        assert!(matches!(
            sys.newton_step(1e-8, DampingForm::Isotropic),
            Err(Error::FactorizationFailure)
        ));
        // enough damping cures it
        assert!(sys.newton_step(2.0, DampingForm::Isotropic).is_ok());
    }
}
