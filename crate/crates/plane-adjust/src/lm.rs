//! Joint Levenberg–Marquardt baseline over poses and planes.
//!
//! Minimizes the full point-to-plane cost with planes as explicit variables
//! (2D tangent update of the unit normal + scalar offset), forming the
//! Gauss-Newton normal equations from the same sufficient statistics the
//! Newton solver consumes: for one observation with pose `X` and plane `π̃`,
//! `Σₖ d²ₖ = π̃ᵀ X U Xᵀ π̃`, and every JᵀJ entry is a quadratic form in `U`.
//! The damped plane blocks are eliminated per step by the Schur complement,
//! leaving a pose-only reduced system; plane updates are back-substituted and
//! normals re-normalized. Damping, acceptance and termination rules are
//! shared with the Newton solver so iteration counts compare the algorithms,
//! not their schedules.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::{
    DMatrix, DVector, Matrix3, Matrix4, Matrix6, Matrix6x3, Vector3, Vector4, Vector6,
};

use crate::error::{Error, Result};
use crate::geometry::{
    cgr_rotation_derivative_at_zero, fit_plane, pose_from_step, Plane, Pose,
};
use crate::newton::{DampingForm, GaugeMode, SolverConfig};
use crate::problem::Problem;
use crate::report::{IterationRecord, SolveReport, TerminationReason};

/// Joint optimization state: poses plus explicit plane parameters.
#[derive(Debug, Clone)]
pub struct JointState {
    pub poses: Vec<Pose>,
    pub planes: Vec<Plane>,
}

/// Planes initialized to their closed-form optimum for the given poses, so
/// the initial joint cost equals the reduced cost `τ` at the same poses.
pub fn initialize_planes(problem: &Problem) -> Result<Vec<Plane>> {
    (0..problem.plane_count())
        .map(|plane_id| Ok(fit_plane(&problem.build_scatter(plane_id)?)?.plane))
        .collect()
}

/// Full joint cost `Σᵢ Σⱼ π̃ᵢᵀ Xⱼ U_ij Xⱼᵀ π̃ᵢ` from sufficient statistics.
pub fn joint_cost(problem: &Problem, poses: &[Pose], planes: &[Plane]) -> f64 {
    let mut cost = 0.0;
    for track in problem.tracks() {
        let w = poses[track.pose_id].homogeneous().transpose()
            * planes[track.plane_id].homogeneous();
        cost += (w.transpose() * track.second_moments() * w)[0];
    }
    cost
}

/// Local step generators of the homogeneous pose at zero: `∂ΔX/∂x_m`.
fn pose_generators() -> [Matrix4<f64>; 6] {
    let mut out = [Matrix4::zeros(); 6];
    for (m, gen) in out.iter_mut().enumerate().take(3) {
        gen.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&cgr_rotation_derivative_at_zero(m));
    }
    for i in 0..3 {
        out[3 + i][(i, 3)] = 1.0;
    }
    out
}

/// Damped Gauss-Newton normal equations of the joint problem, block-wise.
struct NormalEquations {
    pose_diag: Vec<Matrix6<f64>>,
    plane_diag: Vec<Matrix3<f64>>,
    /// `(plane, pose, pose-plane coupling block)` per observation.
    coupling: Vec<(usize, usize, Matrix6x3<f64>)>,
    g_pose: Vec<Vector6<f64>>,
    g_plane: Vec<Vector3<f64>>,
    cost: f64,
}

fn build_normal_equations(problem: &Problem, state: &JointState) -> NormalEquations {
    let generators = pose_generators();
    let mut eqs = NormalEquations {
        pose_diag: vec![Matrix6::zeros(); problem.pose_count()],
        plane_diag: vec![Matrix3::zeros(); problem.plane_count()],
        coupling: Vec::with_capacity(problem.tracks().len()),
        g_pose: vec![Vector6::zeros(); problem.pose_count()],
        g_plane: vec![Vector3::zeros(); problem.plane_count()],
        cost: 0.0,
    };
    for track in problem.tracks() {
        let pose = &state.poses[track.pose_id];
        let plane = &state.planes[track.plane_id];
        let x = pose.homogeneous();
        let xt = x.transpose();
        let pi = plane.homogeneous();
        let u = track.second_moments();

        // residual functional and its derivatives, all as 4-vectors acting on p̃
        let w = xt * pi;
        let pose_dirs: [Vector4<f64>; 6] =
            std::array::from_fn(|m| xt * (generators[m].transpose() * pi));
        let (b1, b2) = plane.tangent_basis();
        let plane_dirs = [
            xt * Vector4::new(b1.x, b1.y, b1.z, 0.0),
            xt * Vector4::new(b2.x, b2.y, b2.z, 0.0),
            xt * Vector4::new(0.0, 0.0, 0.0, 1.0),
        ];

        let uw = u * w;
        let u_pose: [Vector4<f64>; 6] = std::array::from_fn(|m| u * pose_dirs[m]);
        let u_plane: [Vector4<f64>; 3] = std::array::from_fn(|a| u * plane_dirs[a]);

        eqs.cost += w.dot(&uw);

        let pose_block = &mut eqs.pose_diag[track.pose_id];
        let g_pose = &mut eqs.g_pose[track.pose_id];
        let mut b = Matrix6x3::zeros();
        for m in 0..6 {
            g_pose[m] += pose_dirs[m].dot(&uw);
            for n in 0..6 {
                pose_block[(m, n)] += pose_dirs[m].dot(&u_pose[n]);
            }
            for a in 0..3 {
                b[(m, a)] = pose_dirs[m].dot(&u_plane[a]);
            }
        }
        let plane_block = &mut eqs.plane_diag[track.plane_id];
        let g_plane = &mut eqs.g_plane[track.plane_id];
        for a in 0..3 {
            g_plane[a] += plane_dirs[a].dot(&uw);
            for c in 0..3 {
                plane_block[(a, c)] += plane_dirs[a].dot(&u_plane[c]);
            }
        }
        eqs.coupling.push((track.plane_id, track.pose_id, b));
    }
    eqs
}

fn frozen_poses(gauge: GaugeMode) -> BTreeSet<usize> {
    match gauge {
        GaugeMode::FixFirstPose => std::iter::once(0).collect(),
        GaugeMode::Free => BTreeSet::new(),
    }
}

fn grad_inf_norm(eqs: &NormalEquations, frozen: &BTreeSet<usize>) -> f64 {
    let pose_part = eqs
        .g_pose
        .iter()
        .enumerate()
        .filter(|(j, _)| !frozen.contains(j))
        .map(|(_, g)| g.abs().max())
        .fold(0.0, f64::max);
    let plane_part = eqs.g_plane.iter().map(|g| g.abs().max()).fold(0.0, f64::max);
    pose_part.max(plane_part)
}

/// One damped step with the plane blocks eliminated by the Schur complement.
fn schur_step(
    eqs: &NormalEquations,
    problem: &Problem,
    mu: f64,
    frozen: &BTreeSet<usize>,
    damping: DampingForm,
) -> Result<(Vec<Vector6<f64>>, Vec<Vector3<f64>>)> {
    let pose_count = eqs.pose_diag.len();
    let plane_count = eqs.plane_diag.len();

    // damped plane blocks, inverted once
    let mut plane_inv = Vec::with_capacity(plane_count);
    for block in &eqs.plane_diag {
        let damped = damp3(block, mu, damping);
        let inv = damped
            .cholesky()
            .ok_or(Error::FactorizationFailure)?
            .inverse();
        plane_inv.push(inv);
    }

    let free: Vec<usize> = (0..pose_count).filter(|j| !frozen.contains(j)).collect();
    let index_of: std::collections::BTreeMap<usize, usize> =
        free.iter().enumerate().map(|(i, &j)| (j, i)).collect();
    let dim = 6 * free.len();

    let mut reduced = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for (i, &j) in free.iter().enumerate() {
        let damped = damp6(&eqs.pose_diag[j], mu, damping);
        reduced.view_mut((6 * i, 6 * i), (6, 6)).copy_from(&damped);
        rhs.rows_mut(6 * i, 6).copy_from(&(-eqs.g_pose[j]));
    }

    // Schur fill-in: poses co-observing a plane couple through its block
    for plane_id in 0..plane_count {
        let inv = &plane_inv[plane_id];
        let members: Vec<(usize, &Matrix6x3<f64>)> = eqs
            .coupling
            .iter()
            .filter(|(p, _, _)| *p == plane_id)
            .map(|(_, j, b)| (*j, b))
            .collect();
        for &(j, b_j) in &members {
            let Some(&ji) = index_of.get(&j) else { continue };
            let lifted = b_j * inv;
            let mut rhs_view = rhs.rows_mut(6 * ji, 6);
            rhs_view += lifted * eqs.g_plane[plane_id];
            for &(k, b_k) in &members {
                let Some(&ki) = index_of.get(&k) else { continue };
                let fill = lifted * b_k.transpose();
                let mut view = reduced.view_mut((6 * ji, 6 * ki), (6, 6));
                view -= fill;
            }
        }
    }

    let pose_sol = if dim > 0 {
        reduced
            .cholesky()
            .ok_or(Error::FactorizationFailure)?
            .solve(&rhs)
    } else {
        DVector::zeros(0)
    };

    let mut pose_steps = vec![Vector6::zeros(); pose_count];
    for (i, &j) in free.iter().enumerate() {
        pose_steps[j] = Vector6::from_iterator(pose_sol.rows(6 * i, 6).iter().copied());
    }

    // back-substitute plane steps: Δp = −A⁻¹ (g_plane + Bᵀ Δx)
    let mut plane_steps = vec![Vector3::zeros(); plane_count];
    for plane_id in 0..plane_count {
        let mut lifted = eqs.g_plane[plane_id];
        for (p, j, b) in &eqs.coupling {
            if *p == plane_id {
                lifted += b.transpose() * pose_steps[*j];
            }
        }
        plane_steps[plane_id] = -(plane_inv[plane_id] * lifted);
    }
    let _ = problem;
    Ok((pose_steps, plane_steps))
}

/// Reference path: the same damped step solved on the full dense
/// (poses + planes) system, for validating the Schur elimination.
pub fn lm_step_dense(
    problem: &Problem,
    state: &JointState,
    mu: f64,
    gauge: GaugeMode,
    damping: DampingForm,
) -> Result<(Vec<Vector6<f64>>, Vec<Vector3<f64>>)> {
    let eqs = build_normal_equations(problem, state);
    let frozen = frozen_poses(gauge);
    let free: Vec<usize> = (0..problem.pose_count()).filter(|j| !frozen.contains(j)).collect();
    let index_of: std::collections::BTreeMap<usize, usize> =
        free.iter().enumerate().map(|(i, &j)| (j, i)).collect();
    let pose_dim = 6 * free.len();
    let dim = pose_dim + 3 * problem.plane_count();

    let mut h = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for (i, &j) in free.iter().enumerate() {
        h.view_mut((6 * i, 6 * i), (6, 6))
            .copy_from(&damp6(&eqs.pose_diag[j], mu, damping));
        rhs.rows_mut(6 * i, 6).copy_from(&(-eqs.g_pose[j]));
    }
    for plane_id in 0..problem.plane_count() {
        let off = pose_dim + 3 * plane_id;
        h.view_mut((off, off), (3, 3))
            .copy_from(&damp3(&eqs.plane_diag[plane_id], mu, damping));
        rhs.rows_mut(off, 3).copy_from(&(-eqs.g_plane[plane_id]));
    }
    for (plane_id, pose_id, b) in &eqs.coupling {
        let Some(&ji) = index_of.get(pose_id) else { continue };
        let off = pose_dim + 3 * plane_id;
        let mut top = h.view_mut((6 * ji, off), (6, 3));
        top += *b;
        let mut bottom = h.view_mut((off, 6 * ji), (3, 6));
        bottom += b.transpose();
    }

    let sol = h
        .cholesky()
        .ok_or(Error::FactorizationFailure)?
        .solve(&rhs);
    let mut pose_steps = vec![Vector6::zeros(); problem.pose_count()];
    for (i, &j) in free.iter().enumerate() {
        pose_steps[j] = Vector6::from_iterator(sol.rows(6 * i, 6).iter().copied());
    }
    let mut plane_steps = vec![Vector3::zeros(); problem.plane_count()];
    for plane_id in 0..problem.plane_count() {
        let off = pose_dim + 3 * plane_id;
        plane_steps[plane_id] = Vector3::from_iterator(sol.rows(off, 3).iter().copied());
    }
    Ok((pose_steps, plane_steps))
}

/// Production path for one damped LM step (Schur-eliminated).
pub fn lm_step_schur(
    problem: &Problem,
    state: &JointState,
    mu: f64,
    gauge: GaugeMode,
    damping: DampingForm,
) -> Result<(Vec<Vector6<f64>>, Vec<Vector3<f64>>)> {
    let eqs = build_normal_equations(problem, state);
    schur_step(&eqs, problem, mu, &frozen_poses(gauge), damping)
}

fn damp3(block: &Matrix3<f64>, mu: f64, damping: DampingForm) -> Matrix3<f64> {
    let mut out = *block;
    for d in 0..3 {
        out[(d, d)] += mu * crate::newton::damping_weight(damping, block[(d, d)]);
    }
    out
}

fn damp6(block: &Matrix6<f64>, mu: f64, damping: DampingForm) -> Matrix6<f64> {
    let mut out = *block;
    for d in 0..6 {
        out[(d, d)] += mu * crate::newton::damping_weight(damping, block[(d, d)]);
    }
    out
}

fn retract(
    state: &JointState,
    pose_steps: &[Vector6<f64>],
    plane_steps: &[Vector3<f64>],
) -> JointState {
    let poses = state
        .poses
        .iter()
        .zip(pose_steps)
        .map(|(pose, step)| pose_from_step(step).compose(pose))
        .collect();
    let planes = state
        .planes
        .iter()
        .zip(plane_steps)
        .map(|(plane, step)| {
            let (b1, b2) = plane.tangent_basis();
            let normal = plane.normal() + b1 * step[0] + b2 * step[1];
            Plane::from_unnormalized(normal, 0.0)
                .map(|p| Plane::new(*p.normal(), plane.offset() + step[2]).unwrap())
                .unwrap_or(*plane)
        })
        .collect();
    JointState { poses, planes }
}

/// LM result: refined poses and planes plus the iteration report.
#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub poses: Vec<Pose>,
    pub planes: Vec<Plane>,
    pub report: SolveReport,
}

/// Runs the joint LM baseline from the problem's current poses, with planes
/// initialized to their closed-form optimum.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<LmOutcome> {
    config.validate()?;
    let start = Instant::now();
    let frozen = frozen_poses(config.gauge);

    let mut state = JointState {
        poses: problem.poses().to_vec(),
        planes: initialize_planes(problem)?,
    };
    let mut mu = config.initial_damping;
    let mut records = Vec::new();
    let mut cost = f64::NAN;
    let mut initial_cost = f64::NAN;
    let mut termination = TerminationReason::MaxIterations;

    'outer: for iteration in 1..=config.max_iterations {
        let iter_start = Instant::now();
        let eqs = build_normal_equations(problem, &state);
        if iteration == 1 {
            initial_cost = eqs.cost;
            cost = eqs.cost;
        }
        let grad_norm = grad_inf_norm(&eqs, &frozen);
        if grad_norm < config.gradient_tolerance {
            records.push(IterationRecord {
                iteration,
                tau: cost,
                grad_inf_norm: grad_norm,
                mu,
                step_norm: 0.0,
                accepted: false,
                rejected_trials: 0,
                skipped_degenerate_planes: 0,
                time_ms: iter_start.elapsed().as_secs_f64() * 1e3,
            });
            termination = TerminationReason::GradientTolerance;
            break 'outer;
        }

        let mut rejected = 0usize;
        loop {
            let step = schur_step(&eqs, problem, mu, &frozen, config.damping_form);
            let (pose_steps, plane_steps) = match step {
                Ok(step) => step,
                Err(Error::FactorizationFailure) => {
                    rejected += 1;
                    mu *= config.damping_increase;
                    if rejected >= config.max_rejections {
                        records.push(IterationRecord {
                            iteration,
                            tau: cost,
                            grad_inf_norm: grad_norm,
                            mu,
                            step_norm: 0.0,
                            accepted: false,
                            rejected_trials: rejected,
                            skipped_degenerate_planes: 0,
                            time_ms: iter_start.elapsed().as_secs_f64() * 1e3,
                        });
                        termination = TerminationReason::DampingExhausted;
                        break 'outer;
                    }
                    continue;
                }
                Err(other) => return Err(other),
            };

            let trial = retract(&state, &pose_steps, &plane_steps);
            let trial_cost = joint_cost(problem, &trial.poses, &trial.planes);
            if trial_cost < cost {
                let step_norm = pose_steps
                    .iter()
                    .map(|s| s.norm_squared())
                    .chain(plane_steps.iter().map(|s| s.norm_squared()))
                    .sum::<f64>()
                    .sqrt();
                state = trial;
                let previous = cost;
                cost = trial_cost;
                records.push(IterationRecord {
                    iteration,
                    tau: cost,
                    grad_inf_norm: grad_norm,
                    mu,
                    step_norm,
                    accepted: true,
                    rejected_trials: rejected,
                    skipped_degenerate_planes: 0,
                    time_ms: iter_start.elapsed().as_secs_f64() * 1e3,
                });
                mu *= config.damping_decrease;
                if (previous - cost).abs() < config.cost_change_tolerance {
                    termination = TerminationReason::CostChangeTolerance;
                    break 'outer;
                }
                break;
            }

            rejected += 1;
            mu *= config.damping_increase;
            if rejected >= config.max_rejections {
                records.push(IterationRecord {
                    iteration,
                    tau: cost,
                    grad_inf_norm: grad_norm,
                    mu,
                    step_norm: 0.0,
                    accepted: false,
                    rejected_trials: rejected,
                    skipped_degenerate_planes: 0,
                    time_ms: iter_start.elapsed().as_secs_f64() * 1e3,
                });
                termination = TerminationReason::DampingExhausted;
                break 'outer;
            }
        }
    }

    let final_cost = if cost.is_nan() {
        joint_cost(problem, &state.poses, &state.planes)
    } else {
        cost
    };
    let report = SolveReport {
        solver: "lm".into(),
        gauge: config.gauge.name().into(),
        initial_cost: if initial_cost.is_nan() { final_cost } else { initial_cost },
        final_cost,
        termination,
        iterations: records,
        total_time_ms: start.elapsed().as_secs_f64() * 1e3,
        dataset_hash: None,
        label: None,
    };
    Ok(LmOutcome {
        poses: state.poses,
        planes: state.planes,
        report,
    })
}
