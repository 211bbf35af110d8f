//! Solve, estimate, mark, refine.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::DiscreteField;
use crate::error::{Error, Result};
use crate::estimator::{estimate_for, mark, EstimatorReport};
use crate::export::{export_solution, save_history};
use crate::mesh::{build_rect_mesh, Mesh};
use crate::problem::{quasi_uniformity_ratio, ProblemSpec};
use crate::solver::{cavitated_fraction, fixed_point_solve, multiplier_samples, ActiveState, Method, SolverConfig};
use crate::space::DofMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportOptions {
    pub vtk: bool,
    pub history: bool,
    pub estimator: bool,
    pub iterations: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            vtk: true,
            history: true,
            estimator: false,
            iterations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    pub degree: usize,
    /// Marking fraction.
    pub beta: f64,
    /// Number of refinement rounds; the loop solves `rounds + 1` times.
    pub rounds: usize,
    pub nx: usize,
    pub ny: usize,
    /// Artifacts are written only when set.
    pub output_dir: Option<PathBuf>,
    pub export: ExportOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemSpec::benchmark(),
            solver: SolverConfig::default(),
            degree: 1,
            beta: 0.5,
            rounds: 7,
            nx: 12,
            ny: 8,
            output_dir: None,
            export: ExportOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn benchmark(method: Method, degree: usize, rounds: usize) -> Self {
        RunConfig {
            solver: SolverConfig { method, ..Default::default() },
            degree,
            rounds,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.solver.validate()?;
        if !(self.degree == 1 || self.degree == 2) {
            return Err(Error::invalid(format!("degree must be 1 or 2, got {}", self.degree)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::invalid("initial mesh needs nx, ny >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub ndofs: usize,
    pub eta_total: f64,
    pub p_max: f64,
    pub p_min: f64,
    pub iterations: usize,
    /// Seconds; not exported, so histories stay reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: Method,
    pub degree: usize,
    pub rounds: Vec<RoundRecord>,
    /// Active quadrature weight over `|Omega|` on the last round.
    pub cavitated_fraction: f64,
}

impl RunReport {
    pub fn last(&self) -> Option<&RoundRecord> {
        self.rounds.last()
    }
}

/// Final state of an adaptive run.
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub report: RunReport,
    pub mesh: Mesh,
    pub field: DiscreteField,
    pub state: ActiveState,
    pub estimate: EstimatorReport,
}

pub fn run_adaptive(config: &RunConfig) -> Result<AdaptiveRun> {
    config.validate()?;
    let problem = &config.problem;
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut mesh = build_rect_mesh(problem.domain, config.nx, config.ny)?;
    let ratio = quasi_uniformity_ratio(problem, &mesh);
    if ratio > 4.0 {
        log::warn!("film thickness varies by a factor {ratio:.2} within one element");
    }
    let mut report = RunReport {
        method: config.solver.method,
        degree: config.degree,
        rounds: Vec::new(),
        cavitated_fraction: 0.0,
    };

    let mut round = 0;
    loop {
        let start = Instant::now();
        let dofmap = Arc::new(DofMap::new(&mesh, config.degree)?);
        let sol = match fixed_point_solve(problem, &config.solver, &mesh, dofmap) {
            Ok(sol) => sol,
            Err(e) => {
                return Err(Error::Aborted {
                    round,
                    partial: Box::new(report),
                    source: Box::new(e),
                })
            }
        };
        let estimate = estimate_for(problem, &config.solver, &mesh, &sol.field)?;
        let record = RoundRecord {
            round,
            ndofs: estimate.ndofs,
            eta_total: estimate.total,
            p_max: sol.field.max(),
            p_min: sol.field.min(),
            iterations: sol.log.len(),
            wall_time: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "round {round}: {} dofs, eta {:.4e}, max p {:.4}, {} iterations",
            record.ndofs,
            record.eta_total,
            record.p_max,
            record.iterations
        );
        report.rounds.push(record);

        if let Some(dir) = &config.output_dir {
            if config.export.vtk {
                let lambda = multiplier_samples(problem, &config.solver, &mesh, &sol.field)?;
                export_solution(&dir.join(format!("solution_{round:02}.vtk")), &mesh, &sol.field, &lambda)?;
            }
            if config.export.estimator {
                estimate.save_csv(&dir.join(format!("estimator_{round:02}.csv")))?;
            }
            if config.export.iterations {
                sol.log.save_csv(&dir.join(format!("iterations_{round:02}.csv")))?;
            }
            if config.export.history {
                save_history(&dir.join("history.csv"), &report.rounds)?;
            }
        }

        if round == config.rounds {
            report.cavitated_fraction = cavitated_fraction(&mesh, &sol.state, problem.domain.area());
            return Ok(AdaptiveRun {
                report,
                mesh,
                field: sol.field,
                state: sol.state,
                estimate,
            });
        }
        let marks = mark(&estimate, &mesh, config.beta)?;
        mesh = mesh.refine(&marks);
        round += 1;
    }
}

pub fn adaptive_solve(config: &RunConfig) -> Result<RunReport> {
    Ok(run_adaptive(config)?.report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Alpha,
    PenaltyEps,
}

/// Independent adaptive runs, one per value; results come back in input order.
/// Output directories get a per-run subdirectory.
pub fn sweep(base: &RunConfig, parameter: SweepParameter, values: &[f64]) -> Vec<(f64, Result<RunReport>)> {
    values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut cfg = base.clone();
            match parameter {
                SweepParameter::Alpha => cfg.solver.alpha = v,
                SweepParameter::PenaltyEps => cfg.solver.penalty_eps = v,
            }
            cfg.output_dir = base.output_dir.as_ref().map(|d| d.join(format!("run_{i:02}")));
            (v, adaptive_solve(&cfg))
        })
        .collect()
}
