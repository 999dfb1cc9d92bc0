//! Command-line front end: generate synthetic scenes, perturb poses, run a
//! solver, and compare convergence reports.
//!
//! Exit codes: 0 on success, 1 on usage or I/O errors, 2 when a solver ran
//! but did not converge.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use plane_adjust::error::Error;
use plane_adjust::newton::{DampingForm, GaugeMode, SolverConfig};
use plane_adjust::problem::{
    generate_scene, load_problem, perturb_poses, save_poses, save_problem, save_raw_points,
    NoiseSpec, SceneConfig, NOISE_LEVELS,
};
use plane_adjust::report::SolveReport;
use plane_adjust::{lm, newton};

#[derive(Parser)]
#[command(
    name = "plane-adjust",
    version,
    about = "Plane adjustment: pose refinement against plane landmarks",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene (dataset + ground-truth poses + manifest).
    Generate(GenerateArgs),
    /// Apply Gaussian pose noise to a dataset.
    Perturb(PerturbArgs),
    /// Run a solver on a dataset and write report files.
    Solve(SolveArgs),
    /// Compare two or more solve reports on the same dataset.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of planes (>= 3).
    #[arg(long)]
    planes: usize,
    /// Number of poses (>= 2).
    #[arg(long)]
    poses: usize,
    /// Points per observation (>= 2).
    #[arg(long)]
    pts: usize,
    /// Probability that a (plane, pose) pair is observed.
    #[arg(long, default_value_t = 0.5)]
    visibility: f64,
    /// Scene box edge length, meters.
    #[arg(long, default_value_t = 10.0)]
    extent: f64,
    /// Isotropic point noise std, meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes <output>.json, <output>.gt-poses.json, ...
    #[arg(long)]
    output: PathBuf,
    /// Also write the raw-points side file for oracle checks.
    #[arg(long)]
    raw_points: bool,
}

#[derive(Args)]
struct PerturbArgs {
    /// Input dataset (schema-v1 JSON).
    #[arg(long)]
    input: PathBuf,
    /// Rotation noise std, degrees.
    #[arg(long, conflicts_with = "level")]
    sigma_r: Option<f64>,
    /// Translation noise std, meters.
    #[arg(long, conflicts_with = "level")]
    sigma_t: Option<f64>,
    /// Named preset 1-4: (0.1°, 0.01 m), (1°, 0.1 m), (2°, 0.2 m), (3°, 0.3 m).
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep the first pose unperturbed.
    #[arg(long)]
    hold_first: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Solver: newton | lm.
    #[arg(long, default_value = "newton")]
    solver: String,
    /// Initial damping factor.
    #[arg(long, default_value_t = 1e-4)]
    mu0: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Cost-change and gradient-norm tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Gauge handling: fix-first-pose | free.
    #[arg(long, default_value = "fix-first-pose")]
    gauge: String,
    /// Damping form: isotropic | scaled-diagonal.
    #[arg(long, default_value = "isotropic")]
    damping: String,
    /// Assembly worker threads (results are bitwise thread-count-independent).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Zero out wall-time fields for byte-reproducible outputs.
    #[arg(long)]
    deterministic: bool,
    /// Label recorded in the report (defaults to the input file stem).
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more report JSON files from `solve` runs on the same dataset.
    #[arg(long, num_args = 2.., required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    tool_version: String,
    seed: Option<u64>,
    dataset_hash: Option<String>,
    config: serde_json::Value,
    outputs: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit with its own code; keep 0 for --help/--version,
            // 1 for genuine usage errors
            let is_help = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Perturb(args) => cmd_perturb(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn hash_file(path: &Path) -> Result<String, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), Error> {
    let mut body = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, Error> {
    let config = SceneConfig {
        plane_count: args.planes,
        pose_count: args.poses,
        points_per_obs: args.pts,
        visibility_prob: args.visibility,
        extent: args.extent,
        point_noise_sigma: args.noise,
        seed: args.seed,
    };
    let scene = generate_scene(&config)?;

    let dataset_path = with_suffix(&args.output, ".json");
    let gt_path = with_suffix(&args.output, ".gt-poses.json");
    save_problem(&scene.problem, &dataset_path)?;
    save_poses(scene.problem.poses(), &gt_path)?;
    let mut outputs = vec![
        dataset_path.display().to_string(),
        gt_path.display().to_string(),
    ];
    if args.raw_points {
        let raw_path = with_suffix(&args.output, ".raw.json");
        save_raw_points(&scene.raw_points, &raw_path)?;
        outputs.push(raw_path.display().to_string());
    }

    let manifest_path = with_suffix(&args.output, ".manifest.json");
    write_manifest(
        &manifest_path,
        &RunManifest {
            command: "generate".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: Some(args.seed),
            dataset_hash: Some(hash_file(&dataset_path)?),
            config: serde_json::json!({
                "planes": args.planes,
                "poses": args.poses,
                "pts": args.pts,
                "visibility": args.visibility,
                "extent": args.extent,
                "noise": args.noise,
            }),
            outputs,
        },
    )?;
    println!("wrote {}", dataset_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_perturb(args: PerturbArgs) -> Result<ExitCode, Error> {
    let (sigma_r, sigma_t) = match (args.level, args.sigma_r, args.sigma_t) {
        (Some(level), None, None) => {
            if !(1..=4).contains(&level) {
                return Err(Error::InvalidConfig(format!(
                    "--level must be 1..=4, got {level}"
                )));
            }
            NOISE_LEVELS[level - 1]
        }
        (None, Some(r), Some(t)) => (r, t),
        _ => {
            return Err(Error::InvalidConfig(
                "specify either --level or both --sigma-r and --sigma-t".into(),
            ))
        }
    };

    let problem = load_problem(&args.input)?;
    let noise = NoiseSpec {
        sigma_rot_deg: sigma_r,
        sigma_trans: sigma_t,
        seed: args.seed,
    };
    let perturbed = problem.with_poses(perturb_poses(problem.poses(), &noise, args.hold_first))?;

    let dataset_path = with_suffix(&args.output, ".json");
    save_problem(&perturbed, &dataset_path)?;
    let manifest_path = with_suffix(&args.output, ".manifest.json");
    write_manifest(
        &manifest_path,
        &RunManifest {
            command: "perturb".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: Some(args.seed),
            dataset_hash: Some(hash_file(&dataset_path)?),
            config: serde_json::json!({
                "input": args.input.display().to_string(),
                "sigma_r_deg": sigma_r,
                "sigma_t_m": sigma_t,
                "level": args.level,
                "hold_first": args.hold_first,
            }),
            outputs: vec![dataset_path.display().to_string()],
        },
    )?;
    println!("wrote {}", dataset_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let problem = load_problem(&args.input)?;
    let dataset_hash = hash_file(&args.input)?;
    let config = SolverConfig {
        initial_damping: args.mu0,
        max_iterations: args.max_iters,
        cost_change_tolerance: args.tol,
        gradient_tolerance: args.tol,
        gauge: args.gauge.parse::<GaugeMode>()?,
        damping_form: args.damping.parse::<DampingForm>()?,
        threads: args.threads,
        ..SolverConfig::default()
    };

    let (poses, mut report) = match args.solver.as_str() {
        "newton" => {
            let out = newton::solve(&problem, &config)?;
            (out.poses, out.report)
        }
        "lm" => {
            let out = lm::solve(&problem, &config)?;
            (out.poses, out.report)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown solver '{other}' (expected newton | lm)"
            )))
        }
    };

    report.dataset_hash = Some(dataset_hash.clone());
    report.label = Some(args.label.clone().unwrap_or_else(|| {
        args.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }));
    if args.deterministic {
        report.strip_timings();
    }

    let report_json = with_suffix(&args.output, ".report.json");
    let report_csv = with_suffix(&args.output, ".report.csv");
    let poses_path = with_suffix(&args.output, ".poses.json");
    report.save_json(&report_json)?;
    report.save_csv(&report_csv)?;
    save_poses(&poses, &poses_path)?;
    write_manifest(
        &with_suffix(&args.output, ".manifest.json"),
        &RunManifest {
            command: "solve".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: None,
            dataset_hash: Some(dataset_hash),
            config: serde_json::json!({
                "input": args.input.display().to_string(),
                "solver": args.solver,
                "mu0": args.mu0,
                "max_iters": args.max_iters,
                "tol": args.tol,
                "gauge": args.gauge,
                "damping": args.damping,
                "threads": args.threads,
                "deterministic": args.deterministic,
            }),
            outputs: vec![
                report_json.display().to_string(),
                report_csv.display().to_string(),
                poses_path.display().to_string(),
            ],
        },
    )?;

    println!(
        "{}: {} -> {} in {} iterations ({})",
        args.solver,
        report.initial_cost,
        report.final_cost,
        report.accepted_iterations(),
        if report.converged() { "converged" } else { "did not converge" },
    );
    if report.converged() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

struct LoadedReport {
    label: String,
    report: SolveReport,
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, Error> {
    let mut reports = Vec::new();
    for path in &args.input {
        let report = SolveReport::load_json(path)?;
        let label = report.label.clone().unwrap_or_else(|| {
            path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        });
        reports.push(LoadedReport { label, report });
    }

    // all reports must refer to the same dataset
    let reference = reports[0]
        .report
        .dataset_hash
        .clone()
        .ok_or_else(|| Error::InvalidConfig("report lacks a dataset hash".into()))?;
    for loaded in &reports[1..] {
        let hash = loaded.report.dataset_hash.clone().unwrap_or_default();
        if hash != reference {
            return Err(Error::MismatchedDatasets {
                left: reference,
                right: hash,
            });
        }
    }

    let mut summary = String::new();
    summary.push_str("report summary\n");
    for loaded in &reports {
        summary.push_str(&format!(
            "  {} [{}]: initial {} final {} iterations {} converged {} time_ms {}\n",
            loaded.label,
            loaded.report.solver,
            loaded.report.initial_cost,
            loaded.report.final_cost,
            loaded.report.accepted_iterations(),
            loaded.report.converged(),
            loaded.report.total_time_ms,
        ));
    }

    summary.push_str("pairwise iteration comparison\n");
    for i in 0..reports.len() {
        for j in (i + 1)..reports.len() {
            let (a, b) = (&reports[i], &reports[j]);
            let a_reach = a.report.iterations_to_reach(b.report.final_cost);
            let b_iters = b.report.accepted_iterations();
            let verdict = match a_reach {
                Some(reach) if reach < b_iters => "fewer_iterations=PASS",
                Some(reach) if reach == b_iters => "fewer_iterations=tie",
                _ => "fewer_iterations=FAIL",
            };
            summary.push_str(&format!(
                "  {} [{}] vs {} [{}]: reach_target={} target_iters={} {}\n",
                a.label,
                a.report.solver,
                b.label,
                b.report.solver,
                a_reach.map(|r| r.to_string()).unwrap_or_else(|| "never".into()),
                b_iters,
                verdict,
            ));
        }
    }
    print!("{summary}");

    let summary_path = with_suffix(&args.output, ".summary.txt");
    std::fs::write(&summary_path, &summary)
        .map_err(|e| Error::io(summary_path.display().to_string(), e))?;

    // aligned cost-vs-iteration series (one column per report)
    let iter_path = with_suffix(&args.output, ".cost_vs_iteration.csv");
    let curves: Vec<Vec<f64>> = reports.iter().map(|r| r.report.cost_curve()).collect();
    let longest = curves.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut body = String::from("iteration");
    for loaded in &reports {
        body.push_str(&format!(",{}_{}", loaded.label, loaded.report.solver));
    }
    body.push('\n');
    for row in 0..longest {
        body.push_str(&row.to_string());
        for curve in &curves {
            match curve.get(row) {
                Some(v) => body.push_str(&format!(",{v}")),
                None => body.push(','),
            }
        }
        body.push('\n');
    }
    std::fs::write(&iter_path, body).map_err(|e| Error::io(iter_path.display().to_string(), e))?;

    // cost-vs-time series in long format
    let time_path = with_suffix(&args.output, ".cost_vs_time.csv");
    let mut body = String::from("report,solver,iteration,time_ms_cumulative,tau\n");
    for loaded in &reports {
        let mut elapsed = 0.0;
        body.push_str(&format!(
            "{},{},0,0,{}\n",
            loaded.label, loaded.report.solver, loaded.report.initial_cost
        ));
        for record in &loaded.report.iterations {
            elapsed += record.time_ms;
            body.push_str(&format!(
                "{},{},{},{},{}\n",
                loaded.label, loaded.report.solver, record.iteration, elapsed, record.tau
            ));
        }
    }
    std::fs::write(&time_path, body).map_err(|e| Error::io(time_path.display().to_string(), e))?;

    Ok(ExitCode::SUCCESS)
}
