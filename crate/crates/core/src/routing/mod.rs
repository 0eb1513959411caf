//! Routing phase: solve each subproblem on its own through a pluggable
//! solver, then stitch the route plans back onto the parent instance.

mod baseline;
mod external;

use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::decompose::SubProblem;
use crate::error::{Error, Result};
use crate::instance::{Instance, Solution};
use crate::seed::{derive_seed, STREAM_SOLVER_BASE};

pub use baseline::{baseline_solve, BaselineSolver, BaselineSolverConfig, Construction, StopMode};
pub use external::ExternalSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverCapabilities {
    pub respects_budget: bool,
    pub deterministic: bool,
}

/// Anything that turns a VRPTW into a route plan within a time budget.
pub trait RoutingSolver: Send + Sync {
    fn name(&self) -> &str;
    fn capabilities(&self) -> SolverCapabilities;
    fn solve(&self, instance: &Instance, fleet: usize, budget: Duration, seed: u64) -> Result<Solution>;
}

/// Which solver the pipeline uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSelection {
    Baseline {
        #[serde(default, flatten)]
        config: BaselineSolverConfig,
    },
    External {
        program: std::path::PathBuf,
        #[serde(default)]
        args: Vec<String>,
    },
}

impl Default for SolverSelection {
    fn default() -> Self {
        SolverSelection::Baseline {
            config: BaselineSolverConfig::default(),
        }
    }
}

impl SolverSelection {
    pub fn build(&self) -> Result<Box<dyn RoutingSolver>> {
        Ok(match self {
            SolverSelection::Baseline { config } => Box::new(BaselineSolver::new(config.clone())?),
            SolverSelection::External { program, args } => {
                let mut s = ExternalSolver::new(program);
                s.args.clone_from(args);
                Box::new(s)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub master_seed: u64,
    pub concurrent: bool,
    /// Worker threads when concurrent; defaults to `DRI_WORKERS` or the
    /// available parallelism.
    pub workers: Option<usize>,
}

/// One solved subproblem, in local indices.
#[derive(Debug, Clone)]
pub struct SubSolution {
    pub index: usize,
    pub solution: Solution,
    pub elapsed: Duration,
    pub budget: Duration,
    pub fell_back: bool,
}

/// Per-subproblem budget with the one-second floor.
pub fn effective_budget(sub: &SubProblem) -> Duration {
    if sub.budget < 1.0 {
        info!(
            "subproblem {}: budget {:.3} s raised to 1 s",
            sub.index, sub.budget
        );
        Duration::from_secs(1)
    } else {
        Duration::from_secs_f64(sub.budget)
    }
}

fn solve_one(sub: &SubProblem, solver: &dyn RoutingSolver, master_seed: u64) -> Result<SubSolution> {
    let budget = effective_budget(sub);
    let seed = derive_seed(master_seed, STREAM_SOLVER_BASE + sub.index as u64);
    let start = Instant::now();
    let (solution, fell_back) = match solver.solve(&sub.instance, sub.fleet, budget, seed) {
        Ok(s) if s.feasibility.coverage => (s, false),
        outcome => {
            let why = match outcome {
                Ok(_) => "solution does not cover every customer".to_string(),
                Err(e) => e.to_string(),
            };
            warn!("subproblem {}: {} failed ({why}); using the baseline solver", sub.index, solver.name());
            let s = BaselineSolver::default()
                .solve(&sub.instance, sub.fleet, budget, seed)
                .map_err(|e| Error::Solver {
                    subproblem: sub.index,
                    message: e.to_string(),
                })?;
            (s, true)
        }
    };
    Ok(SubSolution {
        index: sub.index,
        solution,
        elapsed: start.elapsed(),
        budget,
        fell_back,
    })
}

fn worker_count(options: &SolveOptions) -> usize {
    options
        .workers
        .or_else(|| std::env::var("DRI_WORKERS").ok().and_then(|v| v.parse().ok()))
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

/// Solves every subproblem, sequentially or on a worker pool.
pub fn solve_subproblems(
    subproblems: &[SubProblem],
    solver: &dyn RoutingSolver,
    options: &SolveOptions,
) -> Result<Vec<SubSolution>> {
    if !options.concurrent || subproblems.len() < 2 {
        return subproblems.iter().map(|s| solve_one(s, solver, options.master_seed)).collect();
    }
    let workers = worker_count(options).min(subproblems.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<SubSolution>>> = (0..subproblems.len()).map(|_| None).collect();
    let collected = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if k >= subproblems.len() {
                    break;
                }
                let r = solve_one(&subproblems[k], solver, options.master_seed);
                collected.lock().expect("result lock")[k] = Some(r);
            });
        }
    });
    results.into_iter().map(|r| r.expect("every subproblem solved")).collect()
}

/// Re-indexes the subproblem routes to parent ids and re-checks the union
/// on the parent instance. Route origins are the subproblem indices.
pub fn merge_solutions(parent: &Instance, subproblems: &[SubProblem], solutions: &[Solution]) -> Result<Solution> {
    if subproblems.len() != solutions.len() {
        return Err(Error::InvalidConfig(format!(
            "{} subproblems but {} solutions",
            subproblems.len(),
            solutions.len()
        )));
    }
    let mut sequences = Vec::new();
    for (sub, sol) in subproblems.iter().zip(solutions) {
        for route in &sol.routes {
            let visits = route
                .visits
                .iter()
                .map(|&local| {
                    if local == 0 || local > sub.len() {
                        Err(Error::Solver {
                            subproblem: sub.index,
                            message: format!("route visits unknown local customer {local}"),
                        })
                    } else {
                        Ok(sub.to_parent(local))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            sequences.push((visits, sub.index));
        }
    }
    Ok(Solution::from_sequences(parent, sequences))
}
