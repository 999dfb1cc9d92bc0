//! Acceptance suite: one test per acceptance criterion, each printing a
//! single PASS/FAIL line with the measured numbers (run with
//! `cargo test -p plane-adjust-cli --test acceptance -- --nocapture` to see
//! every line).

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plane_adjust::derivatives::{
    cross_partials_at_identity, m_partials_at_identity, surrogate_pair, surrogate_single,
    PlaneObservations,
};
use plane_adjust::geometry::{fit_plane, pose_from_step, scatter_from_points, Pose};
use plane_adjust::lm;
use plane_adjust::newton::{self, apply_and_recenter, assemble, GaugeMode, SolverConfig};
use plane_adjust::problem::{
    generate_scene, load_problem, perturb_poses, save_problem, NoiseSpec, Problem, SceneConfig,
    NOISE_LEVELS,
};
use plane_adjust_oracle::{fd_gradient, fd_hessian, FdSpec};

/// The benchmark scene shared by the convergence criteria: 20 planes, 50
/// poses, 0.01 m point noise, sparse visibility.
fn benchmark_scene(seed: u64) -> SceneConfig {
    SceneConfig {
        plane_count: 20,
        pose_count: 50,
        points_per_obs: 30,
        visibility_prob: 0.06,
        extent: 10.0,
        point_noise_sigma: 0.01,
        seed,
    }
}

fn offsets_from_flat(x: &DVector<f64>) -> Vec<Vector6<f64>> {
    (0..x.len() / 6)
        .map(|j| Vector6::from_iterator(x.rows(6 * j, 6).iter().copied()))
        .collect()
}

fn report_line(criterion: &str, pass: bool, detail: &str) {
    println!("[{}] {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Criterion 1: on >= 50 random problems (N in [2,5], M in [3,8], 20-200
/// points per observation), the analytic gradient of tau matches central FD
/// within 1e-6 relative and the analytic Hessian within 1e-5 relative, in
/// under 60 s.
#[test]
fn criterion_1_derivative_correctness() {
    let start = Instant::now();
    let mut worst_grad = 0.0_f64;
    let mut worst_hess = 0.0_f64;
    let mut checked = 0;
    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + trial);
        let pose_count = rng.random_range(2..=5);
        let plane_count = rng.random_range(3..=8);
        let points = rng.random_range(20..=200);
        let scene = generate_scene(&SceneConfig {
            plane_count,
            pose_count,
            points_per_obs: points,
            visibility_prob: 0.8,
            extent: 10.0,
            point_noise_sigma: 0.02,
            seed: 20_000 + trial,
        })
        .unwrap();
        let noisy = perturb_poses(
            scene.problem.poses(),
            &NoiseSpec {
                sigma_rot_deg: 1.0,
                sigma_trans: 0.1,
                seed: 30_000 + trial,
            },
            false,
        );
        let problem = scene.problem.with_poses(noisy).unwrap();
        let assembly = assemble(&problem.recentered(), 1).unwrap();
        let (dense_h, dense_g) = assembly.system.to_dense();

        let dim = 6 * problem.pose_count();
        let handle =
            |x: &DVector<f64>| problem.cost_with_local_offsets(&offsets_from_flat(x)).unwrap();
        let x0 = DVector::zeros(dim);

        let fd_g = fd_gradient(&handle, &x0, FdSpec::default());
        worst_grad = worst_grad.max((&fd_g - &dense_g).norm() / dense_g.norm().max(1e-12));

        let fd_h = fd_hessian(&handle, &x0, FdSpec::second_order());
        worst_hess = worst_hess.max((&fd_h - &dense_h).norm() / dense_h.norm().max(1e-12));
        checked += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_grad < 1e-6 && worst_hess < 1e-5 && elapsed < 60.0;
    report_line(
        "criterion 1 (derivative correctness)",
        pass,
        &format!(
            "{checked} problems, worst gradient rel {worst_grad:.3e} (tol 1e-6), \
             worst Hessian rel {worst_hess:.3e} (tol 1e-5), {elapsed:.1} s (cap 60 s)"
        ),
    );
    assert!(pass);
}

/// Criterion 2: per-plane smallest eigenvalue equals the directly evaluated
/// point-to-plane cost at the fitted plane within 1e-10 relative on 10^4
/// random planes, and the joint cost dominates the reduced cost with
/// equality at optimal planes.
#[test]
fn criterion_2_eigen_elimination_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst_identity = 0.0_f64;
    for _ in 0..10_000 {
        let count = rng.random_range(4..60);
        let mut points = Vec::with_capacity(count);
        let normal = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let normal = if normal.norm() < 1e-3 { Vector3::z() } else { normal.normalize() };
        let (b1, b2) = plane_adjust::geometry::Plane::new(normal, 0.0).unwrap().tangent_basis();
        for _ in 0..count {
            points.push(
                b1 * rng.random_range(-2.0..2.0)
                    + b2 * rng.random_range(-2.0..2.0)
                    + normal * rng.random_range(-0.05..0.05)
                    + Vector3::from_fn(|_, _| rng.random_range(-0.01..0.01)),
            );
        }
        let scatter = scatter_from_points(&points).unwrap();
        let Ok(fit) = fit_plane(&scatter) else { continue };
        let direct: f64 = points.iter().map(|p| fit.plane.signed_distance(p).powi(2)).sum();
        // relative, with a floor tied to the point energy: near-exactly
        // coplanar draws push the residual to ~1e-9 where f64 grants only
        // ~1e-15 absolute agreement
        let floor = 1e-4 * scatter.matrix().trace();
        worst_identity =
            worst_identity.max((fit.residual - direct).abs() / direct.max(floor));
    }

    // dominance and equality on a generated problem
    let scene = generate_scene(&benchmark_scene(42)).unwrap();
    let problem = &scene.problem;
    let tau = problem.cost().unwrap();
    let optimal = lm::initialize_planes(problem).unwrap();
    let equality_gap =
        (lm::joint_cost(problem, problem.poses(), &optimal) - tau).abs() / tau.max(1e-12);
    let mut dominance_ok = true;
    for trial in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + trial);
        let tilted: Vec<_> = optimal
            .iter()
            .map(|p| {
                plane_adjust::geometry::Plane::from_unnormalized(
                    p.normal() + Vector3::from_fn(|_, _| rng.random_range(-0.02..0.02)),
                    p.offset() + rng.random_range(-0.02..0.02),
                )
                .unwrap()
            })
            .collect();
        if lm::joint_cost(problem, problem.poses(), &tilted) < tau - 1e-12 * tau.max(1.0) {
            dominance_ok = false;
        }
    }

    let pass = worst_identity < 1e-10 && equality_gap < 1e-10 && dominance_ok;
    report_line(
        "criterion 2 (eigen-elimination identity)",
        pass,
        &format!(
            "10^4 planes, worst residual-vs-direct rel {worst_identity:.3e} (tol 1e-10), \
             joint-vs-reduced equality gap {equality_gap:.3e}, dominance {dominance_ok}"
        ),
    );
    assert!(pass);
}

/// Criterion 3: the surrogate decompositions reproduce the scatter matrix's
/// pose dependence within 1e-10, and the tabulated entry partials match FD
/// within 1e-6.
#[test]
fn criterion_3_surrogate_reconstruction() {
    let mut worst_single = 0.0_f64;
    let mut worst_pair = 0.0_f64;
    let mut worst_partial = 0.0_f64;
    for seed in 0..5u64 {
        let scene = generate_scene(&SceneConfig {
            plane_count: 5,
            pose_count: 4,
            points_per_obs: 40,
            visibility_prob: 0.9,
            extent: 10.0,
            point_noise_sigma: 0.02,
            seed: 5_000 + seed,
        })
        .unwrap();
        let problem = scene.problem.recentered();
        let mut rng = ChaCha8Rng::seed_from_u64(6_000 + seed);
        for plane_id in 0..problem.plane_count() {
            let observers: Vec<usize> = problem.observers(plane_id).collect();
            let obs = PlaneObservations::from_problem(&problem, plane_id);
            let (j, k) = (observers[0], observers[1]);

            // single-pose reconstruction via differencing (constant cancels)
            let single = surrogate_single(&obs, problem.poses(), j).unwrap();
            let scatter_at = |xj: &Vector6<f64>, xk: &Vector6<f64>| -> Matrix3<f64> {
                let mut offsets = vec![Vector6::zeros(); problem.pose_count()];
                offsets[j] = *xj;
                offsets[k] = *xk;
                let poses = problem.poses_with_local_offsets(&offsets).unwrap();
                *problem.build_scatter_with_poses(plane_id, &poses).unwrap().matrix()
            };
            let form = |x: &Vector6<f64>| -> Matrix3<f64> {
                let t = pose_from_step(x).compact();
                t * single.q * t.transpose() + t * single.k + (t * single.k).transpose()
            };
            let x1 = Vector6::from_fn(|_, _| rng.random_range(-0.3..0.3));
            let x2 = Vector6::from_fn(|_, _| rng.random_range(-0.3..0.3));
            let zero = Vector6::zeros();
            let scale = scatter_at(&zero, &zero).norm().max(1.0);
            let gap = ((scatter_at(&x1, &zero) - scatter_at(&x2, &zero))
                - (form(&x1) - form(&x2)))
            .norm()
                / scale;
            worst_single = worst_single.max(gap);

            // cross-pose bilinear part via mixed differencing
            let pair = surrogate_pair(&obs, j, k).unwrap();
            let bilinear = |xj: &Vector6<f64>, xk: &Vector6<f64>| -> Matrix3<f64> {
                let tj = pose_from_step(xj).compact();
                let tk = pose_from_step(xk).compact();
                tj * pair.o * tk.transpose() + tk * pair.o.transpose() * tj.transpose()
            };
            let mixed = (scatter_at(&x1, &x2) - scatter_at(&x1, &zero) - scatter_at(&zero, &x2)
                + scatter_at(&zero, &zero))
                - (bilinear(&x1, &x2) - bilinear(&x1, &zero) - bilinear(&zero, &x2)
                    + bilinear(&zero, &zero));
            worst_pair = worst_pair.max(mixed.norm() / scale);

            // tabulated partials vs FD of the surrogate entries
            let own = m_partials_at_identity(&single);
            let cross = cross_partials_at_identity(&pair);
            for &(e, f) in &plane_adjust::derivatives::ENTRY_ORDER {
                let handle = |x: &DVector<f64>| {
                    form(&Vector6::from_iterator(x.iter().copied()))[(e, f)]
                };
                let fd = fd_gradient(handle, &DVector::zeros(6), FdSpec::default());
                let analytic = own.entry_first(e, f);
                let scale = analytic.abs().max().max(1.0);
                for m in 0..6 {
                    worst_partial = worst_partial.max((fd[m] - analytic[m]).abs() / scale);
                }
                let pair_handle = |x: &DVector<f64>| {
                    let xj = Vector6::from_iterator(x.iter().take(6).copied());
                    let xk = Vector6::from_iterator(x.iter().skip(6).copied());
                    bilinear(&xj, &xk)[(e, f)]
                };
                let fd2 = fd_hessian(pair_handle, &DVector::zeros(12), FdSpec::second_order());
                let analytic2 = cross.entry_second(e, f);
                let scale2 = analytic2.abs().max().max(1.0);
                for r in 0..6 {
                    for c in 0..6 {
                        worst_partial = worst_partial
                            .max((fd2[(r, 6 + c)] - analytic2[(r, c)]).abs() / scale2);
                    }
                }
            }
        }
    }
    let pass = worst_single < 1e-10 && worst_pair < 1e-10 && worst_partial < 1e-6;
    report_line(
        "criterion 3 (surrogate reconstruction)",
        pass,
        &format!(
            "single-pose gap {worst_single:.3e}, cross gap {worst_pair:.3e} (tol 1e-10), \
             entry partials vs FD {worst_partial:.3e} (tol 1e-6)"
        ),
    );
    assert!(pass);
}

/// Criterion 4: transformed-statistics-at-identity and original-statistics-
/// at-accumulated-poses evaluations agree over 100 accepted steps.
#[test]
fn criterion_4_recentering_consistency() {
    let mut accepted_steps = 0;
    let mut worst_gap = 0.0_f64;
    let mut seed = 0u64;
    while accepted_steps < 100 {
        let scene = generate_scene(&benchmark_scene(800 + seed)).unwrap();
        let (sr, st) = NOISE_LEVELS[(seed % 4) as usize];
        let noisy = perturb_poses(
            scene.problem.poses(),
            &NoiseSpec {
                sigma_rot_deg: sr,
                sigma_trans: st,
                seed: 880 + seed,
            },
            false,
        );
        let problem = scene.problem.with_poses(noisy).unwrap();
        let mut working = problem.recentered();
        let mut accumulated: Vec<Pose> = problem.poses().to_vec();
        let mut cost = working.cost().unwrap();
        let mut mu = 1e-4;
        for _ in 0..25 {
            let assembly = assemble(&working, 1).unwrap();
            let mut system = assembly.system;
            system.fix_gauge(GaugeMode::FixFirstPose);
            let Ok((step, mu_eff)) = system
                .newton_step_repaired(mu, plane_adjust::newton::DampingForm::Isotropic)
            else {
                break;
            };
            let (trial, deltas) = apply_and_recenter(&working, &step);
            let trial_cost = trial.cost().unwrap();
            if trial_cost < cost {
                for (acc, delta) in accumulated.iter_mut().zip(&deltas) {
                    *acc = delta.compose(acc);
                }
                working = trial;
                cost = trial_cost;
                mu /= 3.0;
                accepted_steps += 1;

                let accumulated_path = problem.cost_with_poses(&accumulated).unwrap();
                let gap = (cost - accumulated_path).abs() / accumulated_path.max(1.0);
                worst_gap = worst_gap.max(gap);
                if accepted_steps >= 100 {
                    break;
                }
            } else {
                mu = mu_eff * 2.0;
            }
        }
        seed += 1;
    }
    let pass = worst_gap < 1e-9;
    report_line(
        "criterion 4 (re-centering consistency)",
        pass,
        &format!("{accepted_steps} accepted steps, worst dual-path gap {worst_gap:.3e} (tol 1e-9)"),
    );
    assert!(pass);
}

/// Criterion 5: from each benchmark noise level, the Newton solver reaches
/// tau within 1% of the ground-truth-pose tau in <= 50 iterations on >= 9 of
/// 10 seeds, within 5 minutes per level.
#[test]
fn criterion_5_convergence_quality() {
    let mut all_pass = true;
    for (level, &(sr, st)) in NOISE_LEVELS.iter().enumerate() {
        let level_start = Instant::now();
        let mut ok = 0;
        let mut details = String::new();
        for seed in 0..10u64 {
            let scene = generate_scene(&benchmark_scene(3_000 + seed)).unwrap();
            let gt_tau = scene.problem.cost().unwrap();
            let noisy = perturb_poses(
                scene.problem.poses(),
                &NoiseSpec {
                    sigma_rot_deg: sr,
                    sigma_trans: st,
                    seed: 4_000 + seed,
                },
                false,
            );
            let problem = scene.problem.with_poses(noisy).unwrap();
            let outcome = newton::solve(&problem, &SolverConfig::default()).unwrap();
            let target = 1.01 * gt_tau;
            let reached = outcome.report.iterations_to_reach(target);
            match reached {
                Some(iters) if iters <= 50 => ok += 1,
                other => details.push_str(&format!(" seed{seed}:reach={other:?}")),
            }
        }
        let elapsed = level_start.elapsed().as_secs_f64();
        let level_pass = ok >= 9 && elapsed < 300.0;
        all_pass &= level_pass;
        println!(
            "  criterion 5 level {} ({sr}deg/{st}m): {ok}/10 seeds in <=50 iterations, {elapsed:.1} s{}",
            level + 1,
            details
        );
    }
    report_line(
        "criterion 5 (convergence quality)",
        all_pass,
        "four noise levels, 10 seeds each (per-level lines above)",
    );
    assert!(all_pass);
}

/// Criterion 6: at noise levels 2-4, Newton reaches the LM baseline's final
/// cost in strictly fewer iterations on >= 8 of 10 seeds; counterexamples are
/// reported verbatim.
///
/// This criterion is expected to fail against this spec's LM baseline: the
/// Schur-eliminated joint LM with optimal plane initialization converges in a
/// handful of iterations on clean synthetic scenes at every noise level, and
/// benchmarking found no configuration (visibility, scale, perturbation up to
/// 5 deg / 3 m) where the exact-Newton solver reaches its final cost in
/// strictly fewer iterations on 8 of 10 seeds. The comparison is reported
/// honestly rather than tuned.
#[test]
fn criterion_6_comparative_claim() {
    let mut all_pass = true;
    for level in 1..4usize {
        let (sr, st) = NOISE_LEVELS[level];
        let mut wins = 0;
        let mut counterexamples = String::new();
        for seed in 0..10u64 {
            let scene = generate_scene(&benchmark_scene(3_000 + seed)).unwrap();
            let noisy = perturb_poses(
                scene.problem.poses(),
                &NoiseSpec {
                    sigma_rot_deg: sr,
                    sigma_trans: st,
                    seed: 4_000 + seed,
                },
                false,
            );
            let problem = scene.problem.with_poses(noisy).unwrap();
            let config = SolverConfig::default();
            let newton_out = newton::solve(&problem, &config).unwrap();
            let lm_out = lm::solve(&problem, &config).unwrap();
            let lm_iters = lm_out.report.accepted_iterations();
            let reach = newton_out.report.iterations_to_reach(lm_out.report.final_cost);
            match reach {
                Some(iters) if iters < lm_iters => wins += 1,
                _ => counterexamples.push_str(&format!(
                    "\n    counterexample seed {seed}: newton reach={} (final {:.6e}, {} iters), \
                     lm final {:.6e} in {} iters",
                    reach.map(|r| r.to_string()).unwrap_or_else(|| "never".into()),
                    newton_out.report.final_cost,
                    newton_out.report.accepted_iterations(),
                    lm_out.report.final_cost,
                    lm_iters,
                )),
            }
        }
        let level_pass = wins >= 8;
        all_pass &= level_pass;
        println!(
            "  criterion 6 level {} ({sr}deg/{st}m): newton strictly fewer on {wins}/10 seeds{}",
            level + 1,
            counterexamples
        );
    }
    report_line(
        "criterion 6 (comparative claim, Newton vs LM iterations)",
        all_pass,
        "levels 2-4, 10 seeds each (counterexamples above)",
    );
    assert!(all_pass, "comparative claim does not reproduce against this LM baseline");
}

/// Criterion 7: per-iteration assembly time changes by < 10% when
/// points-per-observation grows 10x on the same plane/pose graph.
#[test]
fn criterion_7_complexity_independent_of_point_count() {
    let small = generate_scene(&SceneConfig {
        points_per_obs: 20,
        ..benchmark_scene(91)
    })
    .unwrap()
    .problem
    .recentered();
    let large = generate_scene(&SceneConfig {
        points_per_obs: 200,
        ..benchmark_scene(91)
    })
    .unwrap()
    .problem
    .recentered();
    assert_eq!(small.tracks().len(), large.tracks().len());

    // interleaved timings; medians cancel machine drift
    let mut time_small = Vec::new();
    let mut time_large = Vec::new();
    for _ in 0..40 {
        let t0 = Instant::now();
        let a = assemble(&small, 1).unwrap();
        time_small.push(t0.elapsed().as_secs_f64());
        std::hint::black_box(a.cost);
        let t1 = Instant::now();
        let b = assemble(&large, 1).unwrap();
        time_large.push(t1.elapsed().as_secs_f64());
        std::hint::black_box(b.cost);
    }
    time_small.sort_by(|a, b| a.partial_cmp(b).unwrap());
    time_large.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_small = time_small[time_small.len() / 2];
    let median_large = time_large[time_large.len() / 2];
    let change = (median_large - median_small).abs() / median_small;
    let pass = change < 0.10;
    report_line(
        "criterion 7 (assembly independent of point count)",
        pass,
        &format!(
            "median assembly {:.3} ms at 20 pts vs {:.3} ms at 200 pts ({:+.1}% change, cap 10%)",
            median_small * 1e3,
            median_large * 1e3,
            100.0 * (median_large - median_small) / median_small
        ),
    );
    assert!(pass);
}

/// Criterion 8: accepted-cost monotonicity on every run, gauge invariance of
/// tau under global rigid transforms, and dataset round-trip byte identity.
#[test]
fn criterion_8_solver_hygiene() {
    // monotonicity across a batch of solves at every noise level
    let mut monotone = true;
    for seed in 0..4u64 {
        for (level, &(sr, st)) in NOISE_LEVELS.iter().enumerate() {
            let scene = generate_scene(&benchmark_scene(7_000 + seed)).unwrap();
            let noisy = perturb_poses(
                scene.problem.poses(),
                &NoiseSpec {
                    sigma_rot_deg: sr,
                    sigma_trans: st,
                    seed: 7_100 + seed + level as u64,
                },
                false,
            );
            let problem = scene.problem.with_poses(noisy).unwrap();
            for report in [
                newton::solve(&problem, &SolverConfig::default()).unwrap().report,
                lm::solve(&problem, &SolverConfig::default()).unwrap().report,
            ] {
                let mut last = report.initial_cost;
                for record in report.iterations.iter().filter(|r| r.accepted) {
                    if record.tau >= last {
                        monotone = false;
                    }
                    last = record.tau;
                }
            }
        }
    }

    // gauge invariance
    let scene = generate_scene(&benchmark_scene(7_500)).unwrap();
    let problem = &scene.problem;
    let tau = problem.cost().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7_600);
    let mut worst_gauge = 0.0_f64;
    for _ in 0..100 {
        let transform = pose_from_step(&Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        let moved: Vec<Pose> = problem.poses().iter().map(|p| transform.compose(p)).collect();
        let moved_tau = problem.cost_with_poses(&moved).unwrap();
        worst_gauge = worst_gauge.max((tau - moved_tau).abs() / tau.max(1e-12));
    }

    // dataset round-trip byte identity
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    save_problem(problem, &first).unwrap();
    let reloaded = load_problem(&first).unwrap();
    save_problem(&reloaded, &second).unwrap();
    let bytes_equal = std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap();

    let pass = monotone && worst_gauge < 1e-9 && bytes_equal;
    report_line(
        "criterion 8 (solver hygiene)",
        pass,
        &format!(
            "monotonic accepted costs {monotone}, worst gauge deviation {worst_gauge:.3e} \
             (tol 1e-9), round-trip byte identity {bytes_equal}"
        ),
    );
    assert!(pass);
}
