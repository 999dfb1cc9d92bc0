//! The exact damped Newton solver over the reduced, pose-only cost.
//!
//! Each outer iteration assembles the full gradient and block Hessian of
//! `τ = Σᵢ λ₃(Mᵢ)` from the closed-form per-plane derivatives, solves
//! `(H + μI) Δx = −g`, and evaluates the trial cost. Accepted steps re-center
//! the statistics (`U ← ΔX U ΔXᵀ`, `p̃ ← ΔX p̃`) so that every pose is again
//! evaluated at the zero local parameterization; the trial-cost evaluation
//! already produces exactly those transformed statistics, so acceptance costs
//! nothing extra. Rejected steps only raise μ and re-solve against the cached
//! system.

mod system;

pub use system::{BlockSystem, DampingForm, GaugeMode};
pub(crate) use system::damping_weight;

use std::time::Instant;

use nalgebra::Vector6;
use rayon::prelude::*;

use crate::derivatives::{plane_grad_hess, PlaneContribution};
use crate::error::{Error, Result};
use crate::geometry::{pose_from_step, Pose};
use crate::problem::Problem;
use crate::report::{IterationRecord, SolveReport, TerminationReason};

/// Damped-Newton solver settings. Defaults: μ₀ = 1e-4, 200 iterations,
/// cost-change and gradient tolerances 1e-7.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub initial_damping: f64,
    pub max_iterations: usize,
    pub cost_change_tolerance: f64,
    pub gradient_tolerance: f64,
    /// Factor applied to μ after an accepted step (μ ← μ/3).
    pub damping_decrease: f64,
    /// Factor applied to μ after a rejected step (μ ← 2μ).
    pub damping_increase: f64,
    /// Consecutive rejections before the iteration gives up.
    pub max_rejections: usize,
    pub gauge: GaugeMode,
    pub damping_form: DampingForm,
    /// Worker threads for per-plane assembly; results are reduced in plane
    /// order, so the outcome is bitwise independent of this setting.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            initial_damping: 1e-4,
            max_iterations: 200,
            cost_change_tolerance: 1e-7,
            gradient_tolerance: 1e-7,
            damping_decrease: 1.0 / 3.0,
            damping_increase: 2.0,
            max_rejections: 32,
            gauge: GaugeMode::FixFirstPose,
            damping_form: DampingForm::Isotropic,
            threads: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_damping <= 0.0 {
            return Err(Error::InvalidConfig("initial damping must be > 0".into()));
        }
        if self.cost_change_tolerance <= 0.0 || self.gradient_tolerance <= 0.0 {
            return Err(Error::InvalidConfig("tolerances must be > 0".into()));
        }
        if self.damping_decrease <= 0.0
            || self.damping_decrease >= 1.0
            || self.damping_increase <= 1.0
        {
            return Err(Error::InvalidConfig(
                "damping factors must satisfy 0 < decrease < 1 < increase".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Assembled gradient/Hessian plus the cost and bookkeeping of one
/// evaluation.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub system: BlockSystem,
    pub cost: f64,
    pub skipped_degenerate: usize,
    /// Largest pre-symmetrization defect over all diagonal blocks.
    pub symmetry_defect: f64,
}

/// Assembles `g` and `H` of the reduced cost over all planes.
///
/// The problem must be re-centered (all poses at identity); `recentered()`
/// produces that representation. Per-plane contributions may be computed in
/// parallel; they are reduced in plane order either way, so results are
/// bitwise reproducible.
pub fn assemble(problem: &Problem, threads: usize) -> Result<Assembly> {
    let contributions: Vec<PlaneContribution> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..problem.plane_count())
                .into_par_iter()
                .map(|plane_id| plane_grad_hess(problem, plane_id))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        (0..problem.plane_count())
            .map(|plane_id| plane_grad_hess(problem, plane_id))
            .collect::<Result<Vec<_>>>()?
    };

    let mut system = BlockSystem::new(problem.pose_count());
    let mut cost = 0.0;
    let mut skipped = 0;
    let mut defect = 0.0_f64;
    for contribution in &contributions {
        cost += contribution.cost;
        if contribution.degenerate {
            skipped += 1;
            continue;
        }
        defect = defect.max(contribution.symmetry_defect);
        for (local, &pose_id) in contribution.pose_ids.iter().enumerate() {
            system.add_gradient(pose_id, &contribution.gradients[local]);
            system.add_block(pose_id, pose_id, &contribution.own_hessians[local]);
        }
        for &(a, b, ref h) in &contribution.cross_hessians {
            let (pj, pk) = (contribution.pose_ids[a], contribution.pose_ids[b]);
            system.add_block(pj, pk, h);
            system.add_block(pk, pj, &h.transpose());
        }
    }
    Ok(Assembly {
        system,
        cost,
        skipped_degenerate: skipped,
        symmetry_defect: defect,
    })
}

/// Applies an accepted step to a re-centered problem: transforms every
/// track's statistics by its pose's step transform and returns the per-pose
/// step transforms for accumulation. Poses in the returned problem remain at
/// identity.
pub fn apply_and_recenter(working: &Problem, step: &[Vector6<f64>]) -> (Problem, Vec<Pose>) {
    let deltas: Vec<Pose> = step.iter().map(pose_from_step).collect();
    let tracks = working
        .tracks()
        .iter()
        .map(|t| t.transformed(&deltas[t.pose_id]))
        .collect();
    let problem = Problem::new(
        working.poses().to_vec(),
        tracks,
        working.plane_count(),
    )
    .expect("step transform preserves problem validity");
    (problem, deltas)
}

/// Solver result: refined poses plus the full iteration report.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub poses: Vec<Pose>,
    pub report: SolveReport,
}

/// Runs the damped Newton method from the problem's current poses.
///
/// Non-convergence is reported through the termination reason, not an error.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<NewtonOutcome> {
    config.validate()?;
    let start = Instant::now();

    let mut working = problem.recentered();
    let mut accumulated: Vec<Pose> = problem.poses().to_vec();
    let mut mu = config.initial_damping;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut initial_cost = f64::NAN;
    let mut cost = f64::NAN;
    let mut termination = TerminationReason::MaxIterations;

    'outer: for iteration in 1..=config.max_iterations {
        let iter_start = Instant::now();
        let assembly = assemble(&working, config.threads)?;
        let mut system = assembly.system;
        system.fix_gauge(config.gauge);
        if iteration == 1 {
            initial_cost = assembly.cost;
            cost = assembly.cost;
        }
        let grad_norm = system.grad_inf_norm();

        if grad_norm < config.gradient_tolerance {
            records.push(IterationRecord {
                iteration,
                tau: cost,
                grad_inf_norm: grad_norm,
                mu,
                step_norm: 0.0,
                accepted: false,
                rejected_trials: 0,
                skipped_degenerate_planes: assembly.skipped_degenerate,
                time_ms: iter_start.elapsed().as_secs_f64() * 1e3,
            });
            termination = TerminationReason::GradientTolerance;
            break 'outer;
        }

        let mut rejected = 0usize;
        loop {
            // positive-definiteness repair is per-solve; only genuine
            // trial rejections move the Marquardt μ
            let (step, mu_eff) = match system.newton_step_repaired(mu, config.damping_form) {
                Ok(out) => out,
                Err(Error::FactorizationFailure) => {
                    records.push(IterationRecord {
                        iteration,
                        tau: cost,
                        grad_inf_norm: grad_norm,
                        mu,
                        step_norm: 0.0,
                        accepted: false,
                        rejected_trials: rejected,
                        skipped_degenerate_planes: assembly.skipped_degenerate,
                        time_ms: iter_start.elapsed().as_secs_f64() * 1e3,
                    });
                    termination = TerminationReason::DampingExhausted;
                    break 'outer;
                }
                Err(other) => return Err(other),
            };

            // the trial evaluation is also the re-centering update on accept
            let (trial, deltas) = apply_and_recenter(&working, &step);
            let trial_cost = trial.cost()?;
            if trial_cost < cost {
                let step_norm = step.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt();
                for (acc, delta) in accumulated.iter_mut().zip(&deltas) {
                    *acc = delta.compose(acc);
                }
                working = trial;
                let previous = cost;
                cost = trial_cost;
                records.push(IterationRecord {
                    iteration,
                    tau: cost,
                    grad_inf_norm: grad_norm,
                    mu: mu_eff,
                    step_norm,
                    accepted: true,
                    rejected_trials: rejected,
                    skipped_degenerate_planes: assembly.skipped_degenerate,
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
            // escalate from the damping that was actually tried
            mu = mu_eff * config.damping_increase;
            if rejected >= config.max_rejections {
                records.push(IterationRecord {
                    iteration,
                    tau: cost,
                    grad_inf_norm: grad_norm,
                    mu,
                    step_norm: 0.0,
                    accepted: false,
                    rejected_trials: rejected,
                    skipped_degenerate_planes: assembly.skipped_degenerate,
                    time_ms: iter_start.elapsed().as_secs_f64() * 1e3,
                });
                termination = TerminationReason::DampingExhausted;
                break 'outer;
            }
        }
    }

    let final_cost = if cost.is_nan() { problem.cost()? } else { cost };
    let report = SolveReport {
        solver: "newton".into(),
        gauge: config.gauge.name().into(),
        initial_cost: if initial_cost.is_nan() { final_cost } else { initial_cost },
        final_cost,
        termination,
        iterations: records,
        total_time_ms: start.elapsed().as_secs_f64() * 1e3,
        dataset_hash: None,
        label: None,
    };
    Ok(NewtonOutcome {
        poses: accumulated,
        report,
    })
}
