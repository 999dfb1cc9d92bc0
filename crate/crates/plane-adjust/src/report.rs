//! Per-solve reporting: one record per outer iteration, JSON and CSV
//! serialization, and the curve queries the comparison tooling needs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// Infinity norm of the (gauge-masked) gradient fell below tolerance.
    GradientTolerance,
    /// Accepted-step cost change fell below tolerance.
    CostChangeTolerance,
    /// Iteration budget exhausted without meeting a tolerance.
    MaxIterations,
    /// Too many consecutive rejected trial steps.
    DampingExhausted,
}

impl TerminationReason {
    pub fn converged(self) -> bool {
        matches!(
            self,
            TerminationReason::GradientTolerance | TerminationReason::CostChangeTolerance
        )
    }
}

/// One outer solver iteration (assembly, then trial steps until acceptance or
/// give-up).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based outer iteration index.
    pub iteration: usize,
    /// Cost after this iteration (unchanged if no step was accepted).
    pub tau: f64,
    /// Infinity norm of the gradient at assembly, over free variables.
    pub grad_inf_norm: f64,
    /// Damping value that produced the final trial of this iteration.
    pub mu: f64,
    pub step_norm: f64,
    pub accepted: bool,
    pub rejected_trials: usize,
    pub skipped_degenerate_planes: usize,
    pub time_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    /// `"newton"` or `"lm"`.
    pub solver: String,
    pub gauge: String,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub termination: TerminationReason,
    pub iterations: Vec<IterationRecord>,
    pub total_time_ms: f64,
    /// SHA-256 of the dataset file this run consumed, when known.
    pub dataset_hash: Option<String>,
    /// Free-form run label (e.g. a noise-level name).
    pub label: Option<String>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }

    pub fn accepted_iterations(&self) -> usize {
        self.iterations.iter().filter(|r| r.accepted).count()
    }

    /// Cost trajectory `[initial, after iter 1, after iter 2, ...]`.
    pub fn cost_curve(&self) -> Vec<f64> {
        let mut curve = Vec::with_capacity(self.iterations.len() + 1);
        curve.push(self.initial_cost);
        curve.extend(self.iterations.iter().map(|r| r.tau));
        curve
    }

    /// First iteration index whose cost is at or below `target` (0 = already
    /// there initially).
    pub fn iterations_to_reach(&self, target: f64) -> Option<usize> {
        let slack = target + 1e-12 * target.abs().max(1.0);
        self.cost_curve().iter().position(|&c| c <= slack)
    }

    /// Zeroes all wall-time fields, for byte-reproducible pipelines.
    pub fn strip_timings(&mut self) {
        self.total_time_ms = 0.0;
        for record in &mut self.iterations {
            record.time_ms = 0.0;
        }
    }

    /// CSV with the fixed column schema
    /// `iteration,tau,grad_inf_norm,mu,accepted,time_ms`; floats are written
    /// as shortest round-tripping decimals.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iteration,tau,grad_inf_norm,mu,accepted,time_ms")?;
        for r in &self.iterations {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iteration, r.tau, r.grad_inf_norm, r.mu, r.accepted, r.time_ms
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        body.push('\n');
        std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<SolveReport> {
        let path = path.as_ref();
        let body =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&body)
            .map_err(|e| Error::parse(format!("{}:{}", path.display(), e.line()), e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SolveReport {
        SolveReport {
            solver: "newton".into(),
            gauge: "fix-first-pose".into(),
            initial_cost: 10.0,
            final_cost: 1.25,
            termination: TerminationReason::CostChangeTolerance,
            iterations: vec![
                IterationRecord {
                    iteration: 1,
                    tau: 4.0,
                    grad_inf_norm: 3.0,
                    mu: 1e-4,
                    step_norm: 0.5,
                    accepted: true,
                    rejected_trials: 0,
                    skipped_degenerate_planes: 0,
                    time_ms: 1.5,
                },
                IterationRecord {
                    iteration: 2,
                    tau: 1.25,
                    grad_inf_norm: 0.75,
                    mu: 1e-4 / 3.0,
                    step_norm: 0.25,
                    accepted: true,
                    rejected_trials: 1,
                    skipped_degenerate_planes: 0,
                    time_ms: 1.25,
                },
            ],
            total_time_ms: 2.75,
            dataset_hash: Some("abc".into()),
            label: None,
        }
    }

    #[test]
    fn json_round_trip() {
        let report = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        report.save_json(&path).unwrap();
        let loaded = SolveReport::load_json(&path).unwrap();
        assert_eq!(loaded.final_cost, report.final_cost);
        assert_eq!(loaded.iterations.len(), 2);
        assert_eq!(loaded.termination, report.termination);
    }

    #[test]
    fn csv_schema_is_fixed() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,tau,grad_inf_norm,mu,accepted,time_ms"
        );
        assert_eq!(lines.next().unwrap(), "1,4,3,0.0001,true,1.5");
    }

    #[test]
    fn iterations_to_reach_walks_the_curve() {
        let report = sample();
        assert_eq!(report.iterations_to_reach(10.0), Some(0));
        assert_eq!(report.iterations_to_reach(4.0), Some(1));
        assert_eq!(report.iterations_to_reach(2.0), Some(2));
        assert_eq!(report.iterations_to_reach(0.5), None);
    }
}
