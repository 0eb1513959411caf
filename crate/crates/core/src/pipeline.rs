//! End-to-end decompose, route, improve.

use std::time::{Duration, Instant};

use log::info;
use serde::{Deserialize, Serialize};

use crate::clustering::{choose_q, cluster, Clustering, ClusteringMethod, ClusteringSpec, QPolicy};
use crate::decompose::{
    budget_time, build_subproblems, build_vicinities, edge_reduction, fleet_overflow, SubProblem, TimeBudget,
    VicinityConfig,
};
use crate::error::{Error, Result};
use crate::improve::{improvement_report, local_search, GapReport, LsContext, MoveRecord, Operator, Pruning, StopReason, Strategy};
use crate::instance::{Instance, Solution};
use crate::routing::{merge_solutions, solve_subproblems, SolveOptions, SolverSelection};
use crate::seed::{derive_seed, STREAM_CLUSTERING, STREAM_SOLVER_BASE};
use crate::similarity::{build_similarity_matrix, Metric, SimilarityConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriConfig {
    pub clustering: ClusteringMethod,
    pub q_policy: QPolicy,
    pub clustering_max_iterations: Option<usize>,
    pub similarity: SimilarityConfig,
    /// Share of the post-decomposition budget given to routing.
    pub alpha: f64,
    /// Total runtime budget in seconds.
    pub theta: f64,
    pub vicinity: VicinityConfig,
    pub strategy: Strategy,
    pub operators: Vec<Operator>,
    pub solver: SolverSelection,
    pub master_seed: u64,
    pub concurrent: bool,
    pub workers: Option<usize>,
    /// Run the improvement phase to a local optimum regardless of its budget.
    pub unlimited_improvement: bool,
    /// Best-known cost for gap reporting.
    pub bks: Option<f64>,
}

impl Default for DriConfig {
    fn default() -> Self {
        DriConfig {
            clustering: ClusteringMethod::KMedoids,
            q_policy: QPolicy::default(),
            clustering_max_iterations: None,
            similarity: SimilarityConfig::default(),
            alpha: 0.8,
            theta: 60.0,
            vicinity: VicinityConfig::default(),
            strategy: Strategy::SteepestDescent,
            operators: Operator::ALL.to_vec(),
            solver: SolverSelection::default(),
            master_seed: 0,
            concurrent: false,
            workers: None,
            unlimited_improvement: false,
            bks: None,
        }
    }
}

impl DriConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: DriConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidConfig(format!("theta must be positive, got {}", self.theta)));
        }
        if self.operators.is_empty() {
            return Err(Error::InvalidConfig("operator set is empty".into()));
        }
        if let Some(rho) = self.vicinity.rho {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::InvalidConfig(format!("rho must lie in [0, 1], got {rho}")));
            }
        }
        if let Some(b) = self.bks {
            if !(b > 0.0) {
                return Err(Error::InvalidConfig(format!("bks must be positive, got {b}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub similarity: f64,
    pub clustering: f64,
    /// Decomposition time: similarity plus clustering.
    pub nu: f64,
    pub routing: f64,
    pub improvement: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemReport {
    pub index: usize,
    pub customers: usize,
    pub fleet: usize,
    pub budget: f64,
    pub elapsed: f64,
    pub cost: f64,
    pub routes: usize,
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub origin: usize,
    pub customers: usize,
    pub load: f64,
    pub utilization: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub instance: String,
    pub customers: usize,
    pub config: DriConfig,
    pub q: usize,
    pub decomposed: bool,
    pub timings: Timings,
    pub budget: Option<TimeBudget>,
    pub subproblems: Vec<SubproblemReport>,
    pub fleet_overflow: bool,
    pub edge_reduction: f64,
    pub z_before: f64,
    pub z_after: f64,
    pub routes_before: usize,
    pub routes_after: usize,
    pub feasible: bool,
    pub fleet_feasible: bool,
    pub gap: Option<GapReport>,
    pub improvement_stop: Option<StopReason>,
    pub improvement_log: Vec<MoveRecord>,
    pub routes: Vec<RouteSummary>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct DriOutcome {
    pub solution: Solution,
    /// Merged routing-phase solution before local search.
    pub routed: Solution,
    pub clustering: Option<Clustering>,
    pub report: RunReport,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

pub fn run_dri(instance: &Instance, config: &DriConfig) -> Result<DriOutcome> {
    config.validate()?;
    let n = instance.num_customers();
    if n == 0 {
        return Err(Error::InvalidInstance("instance has no customers".into()));
    }
    let start = Instant::now();
    let solver = config.solver.build().map_err(|e| e.in_stage("routing"))?;
    let mut timings = Timings::default();

    let similarity = build_similarity_matrix(instance, &config.similarity).map_err(|e| e.in_stage("similarity"))?;
    timings.similarity = secs(start.elapsed());

    let q = choose_q(instance, config.q_policy).map_err(|e| e.in_stage("clustering"))?;
    if q == 1 {
        // No decomposition: the whole routing share goes to one solver call.
        timings.nu = secs(start.elapsed());
        let budget = budget_time(config.theta, timings.nu, config.alpha, &[n]).map_err(|e| e.in_stage("routing"))?;
        let seed = derive_seed(config.master_seed, STREAM_SOLVER_BASE);
        let omega = Duration::from_secs_f64(budget.per_subproblem[0].max(1.0));
        let t = Instant::now();
        let solution = solver
            .solve(instance, instance.fleet_size(), omega, seed)
            .map_err(|e| Error::Solver { subproblem: 0, message: e.to_string() }.in_stage("routing"))?;
        timings.routing = secs(t.elapsed());
        timings.total = secs(start.elapsed());
        let report = build_report(instance, config, q, false, timings, Some(budget), Vec::new(), false, 1.0, &solution, &solution, None)?;
        return Ok(DriOutcome {
            routed: solution.clone(),
            solution,
            clustering: None,
            report,
        });
    }

    let t = Instant::now();
    let spec = ClusteringSpec {
        method: config.clustering,
        q,
        seed: derive_seed(config.master_seed, STREAM_CLUSTERING),
        max_iterations: config.clustering_max_iterations,
    };
    let clustering = cluster(&similarity, &spec).map_err(|e| e.in_stage("clustering"))?;
    timings.clustering = secs(t.elapsed());
    timings.nu = secs(start.elapsed());

    let mut subproblems = build_subproblems(instance, &clustering).map_err(|e| e.in_stage("decomposition"))?;
    let sizes: Vec<usize> = subproblems.iter().map(|s| s.len()).collect();
    let budget = budget_time(config.theta, timings.nu, config.alpha, &sizes).map_err(|e| e.in_stage("decomposition"))?;
    budget.apply(&mut subproblems);
    let overflow = fleet_overflow(&subproblems, instance.fleet_size());
    if overflow {
        info!("subproblem fleets exceed the fleet of {}", instance.fleet_size());
    }

    let t = Instant::now();
    let options = SolveOptions {
        master_seed: config.master_seed,
        concurrent: config.concurrent,
        workers: config.workers,
    };
    let solved = solve_subproblems(&subproblems, solver.as_ref(), &options).map_err(|e| e.in_stage("routing"))?;
    let sub_reports: Vec<SubproblemReport> = solved
        .iter()
        .zip(&subproblems)
        .map(|(s, sub)| SubproblemReport {
            index: sub.index,
            customers: sub.len(),
            fleet: sub.fleet,
            budget: secs(s.budget),
            elapsed: secs(s.elapsed),
            cost: s.solution.total_cost,
            routes: s.solution.route_count(),
            fell_back: s.fell_back,
        })
        .collect();
    let parts: Vec<Solution> = solved.into_iter().map(|s| s.solution).collect();
    let routed = merge_solutions(instance, &subproblems, &parts).map_err(|e| e.in_stage("routing"))?;
    timings.routing = secs(t.elapsed());

    let t = Instant::now();
    let (solution, stop, log) = if budget.improvement <= 0.0 && !config.unlimited_improvement {
        (routed.clone(), None, Vec::new())
    } else {
        let vicinity = build_vicinities(&similarity, &clustering, &config.vicinity).map_err(|e| e.in_stage("improvement"))?;
        let ctx = LsContext {
            operators: config.operators.clone(),
            strategy: config.strategy,
            pruning: Pruning::Vicinity(&vicinity),
            budget: if config.unlimited_improvement {
                None
            } else {
                Some(Duration::from_secs_f64(budget.improvement))
            },
            spare_route: false,
        };
        let out = local_search(instance, &routed, &ctx).map_err(|e| e.in_stage("improvement"))?;
        (out.solution, Some(out.stop), out.log)
    };
    timings.improvement = secs(t.elapsed());
    timings.total = secs(start.elapsed());

    let reduction = edge_reduction(&sizes, n);
    let mut report = build_report(
        instance,
        config,
        q,
        true,
        timings,
        Some(budget),
        sub_reports,
        overflow,
        reduction,
        &routed,
        &solution,
        stop,
    )?;
    report.improvement_log = log;
    Ok(DriOutcome {
        solution,
        routed,
        clustering: Some(clustering),
        report,
    })
}

/// Decomposition only: the clustering and the carved subproblems, with
/// fleets assigned but no time budgets.
pub fn decompose_instance(instance: &Instance, config: &DriConfig) -> Result<(Clustering, Vec<SubProblem>)> {
    config.validate()?;
    let similarity = build_similarity_matrix(instance, &config.similarity).map_err(|e| e.in_stage("similarity"))?;
    let q = choose_q(instance, config.q_policy).map_err(|e| e.in_stage("clustering"))?;
    let clustering = if q == 1 {
        Clustering::trivial(config.clustering, instance.num_customers())
    } else {
        let spec = ClusteringSpec {
            method: config.clustering,
            q,
            seed: derive_seed(config.master_seed, STREAM_CLUSTERING),
            max_iterations: config.clustering_max_iterations,
        };
        cluster(&similarity, &spec).map_err(|e| e.in_stage("clustering"))?
    };
    let subproblems = build_subproblems(instance, &clustering).map_err(|e| e.in_stage("decomposition"))?;
    Ok((clustering, subproblems))
}

/// The same pipeline with plain travel cost as the clustering and pruning metric.
pub fn run_baseline_metric(instance: &Instance, config: &DriConfig) -> Result<DriOutcome> {
    let mut config = config.clone();
    config.similarity.metric = Metric::TravelCost;
    run_dri(instance, &config)
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    instance: &Instance,
    config: &DriConfig,
    q: usize,
    decomposed: bool,
    timings: Timings,
    budget: Option<TimeBudget>,
    subproblems: Vec<SubproblemReport>,
    fleet_overflow: bool,
    edge_reduction: f64,
    before: &Solution,
    after: &Solution,
    stop: Option<StopReason>,
) -> Result<RunReport> {
    let gap = config
        .bks
        .map(|b| improvement_report(before.total_cost, after.total_cost, b))
        .transpose()?;
    let routes = after
        .routes
        .iter()
        .map(|r| RouteSummary {
            origin: r.origin,
            customers: r.visits.len(),
            load: r.load,
            utilization: r.utilization(instance.capacity()),
            distance: r.distance,
        })
        .collect();
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        instance: instance.name().to_string(),
        customers: instance.num_customers(),
        config: config.clone(),
        q,
        decomposed,
        timings,
        budget,
        subproblems,
        fleet_overflow,
        edge_reduction,
        z_before: before.total_cost,
        z_after: after.total_cost,
        routes_before: before.route_count(),
        routes_after: after.route_count(),
        feasible: after.is_feasible(),
        fleet_feasible: after.is_fleet_feasible(),
        gap,
        improvement_stop: stop,
        improvement_log: Vec::new(),
        routes,
    })
}
