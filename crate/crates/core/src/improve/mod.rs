//! Improvement phase: quality-ordered, vicinity-pruned local search across
//! subproblem borders with intra-route repair.

mod moves;

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{evaluate_sequence, sequence_distance, Instance, Solution};

pub use moves::{apply_into, candidate_moves, for_each_candidate, Move, Pruning, WorkRoute};

const IMPROVEMENT_EPS: f64 = 1e-9;

/// Local-search operators, in scan order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    CrossOver,
    Relocate,
    Swap,
    TwoOptInter,
    TwoOptIntra,
    SwapIntra,
}

impl Operator {
    pub const ALL: [Operator; 6] = [
        Operator::CrossOver,
        Operator::Relocate,
        Operator::Swap,
        Operator::TwoOptInter,
        Operator::TwoOptIntra,
        Operator::SwapIntra,
    ];

    pub const INTRA: [Operator; 2] = [Operator::TwoOptIntra, Operator::SwapIntra];

    pub fn is_intra(self) -> bool {
        matches!(self, Operator::TwoOptIntra | Operator::SwapIntra)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    FirstDescent,
    #[default]
    SteepestDescent,
}

/// Per-subproblem cost figures and per-route utilization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteQuality {
    /// `origin -> (Z_p, route count, Z̄_p)`.
    pub subproblems: BTreeMap<usize, (f64, usize, f64)>,
    /// `u_R = load / Q` per route.
    pub utilization: Vec<f64>,
}

pub fn route_quality(instance: &Instance, routes: &[WorkRoute]) -> RouteQuality {
    let mut subproblems: BTreeMap<usize, (f64, usize, f64)> = BTreeMap::new();
    let mut utilization = Vec::with_capacity(routes.len());
    for r in routes {
        let z = sequence_distance(instance, r.visits.iter().copied());
        let entry = subproblems.entry(r.origin).or_insert((0.0, 0, 0.0));
        entry.0 += z;
        entry.1 += 1;
        let load: f64 = r.visits.iter().map(|&c| instance.vertex(c).demand).sum();
        utilization.push(load / instance.capacity());
    }
    for v in subproblems.values_mut() {
        v.2 = v.0 / v.1 as f64;
    }
    RouteQuality { subproblems, utilization }
}

/// Worklist: subproblems by descending average route cost, routes within a
/// subproblem by ascending utilization.
pub fn order_routes(instance: &Instance, routes: &[WorkRoute]) -> Vec<usize> {
    let q = route_quality(instance, routes);
    let mut order: Vec<usize> = (0..routes.len()).collect();
    order.sort_by(|&x, &y| {
        let (rx, ry) = (&routes[x], &routes[y]);
        let zx = q.subproblems[&rx.origin].2;
        let zy = q.subproblems[&ry.origin].2;
        zy.total_cmp(&zx)
            .then(rx.origin.cmp(&ry.origin))
            .then(q.utilization[x].total_cmp(&q.utilization[y]))
            .then_with(|| rx.visits.cmp(&ry.visits))
    });
    order
}

#[derive(Debug, Clone)]
pub struct LsContext<'a> {
    pub operators: Vec<Operator>,
    pub strategy: Strategy,
    pub pruning: Pruning<'a>,
    /// `None` runs to a local optimum.
    pub budget: Option<Duration>,
    /// Keep one empty route as a relocation target while the fleet has room.
    pub spare_route: bool,
}

impl<'a> LsContext<'a> {
    pub fn new(strategy: Strategy, pruning: Pruning<'a>, budget: Option<Duration>) -> Self {
        LsContext {
            operators: Operator::ALL.to_vec(),
            strategy,
            pruning,
            budget,
            spare_route: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.operators.is_empty() {
            return Err(Error::InvalidConfig("local search needs at least one operator".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub iteration: usize,
    pub operator: Operator,
    pub route_origins: (usize, Option<usize>),
    pub delta: f64,
    pub cost_after: f64,
    /// Seconds since the search started.
    pub elapsed: f64,
    /// Intra-route repair following an inter-route move.
    pub repair: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    LocalOptimum,
    Budget,
}

#[derive(Debug, Clone)]
pub struct LsOutcome {
    pub solution: Solution,
    pub log: Vec<MoveRecord>,
    pub stop: StopReason,
    pub elapsed: Duration,
}

impl LsOutcome {
    pub fn accepted(&self) -> usize {
        self.log.len()
    }

    pub fn log_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.log {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

struct Search<'a, 'b> {
    instance: &'a Instance,
    ctx: &'a LsContext<'b>,
    routes: Vec<WorkRoute>,
    costs: Vec<f64>,
    deadline: Option<Instant>,
    start: Instant,
    timed_out: bool,
    first: Vec<usize>,
    second: Vec<usize>,
    log: Vec<MoveRecord>,
}

struct Found {
    mv: Move,
    delta: f64,
    key: (Operator, usize, usize, usize, usize),
}

impl Search<'_, '_> {
    fn out_of_time(&mut self) -> bool {
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.timed_out = true;
            }
        }
        self.timed_out
    }

    fn best_move(&mut self, order: &[usize], operators: &[Operator], pruning: Pruning<'_>) -> Option<Found> {
        let mut rank = vec![0; self.routes.len()];
        for (k, &r) in order.iter().enumerate() {
            rank[r] = k;
        }
        let steepest = self.ctx.strategy == Strategy::SteepestDescent;
        let mut best: Option<Found> = None;
        let mut counter = 0usize;
        let Search {
            instance,
            routes,
            costs,
            first,
            second,
            ..
        } = self;
        let instance = *instance;
        let deadline = self.deadline;
        let mut timed_out = false;
        let _ = for_each_candidate(routes, order, operators, pruning, |mv| {
            counter += 1;
            if counter.is_multiple_of(256) && deadline.is_some_and(|d| Instant::now() >= d) {
                timed_out = true;
                return ControlFlow::Break(());
            }
            apply_into(routes, &mv, first, second);
            let old = costs[mv.r] + mv.s.map_or(0.0, |s| costs[s]);
            let new = sequence_distance(instance, first.iter().copied())
                + sequence_distance(instance, second.iter().copied());
            let delta = new - old;
            if delta >= -IMPROVEMENT_EPS {
                return ControlFlow::Continue(());
            }
            let key = (mv.operator, rank[mv.r], mv.s.map_or(0, |s| rank[s]), mv.a, mv.b);
            if let Some(b) = &best {
                if delta > b.delta || (delta == b.delta && key >= b.key) {
                    return ControlFlow::Continue(());
                }
            }
            let feasible = evaluate_sequence(instance, first.iter().copied()).is_some()
                && evaluate_sequence(instance, second.iter().copied()).is_some();
            if !feasible {
                return ControlFlow::Continue(());
            }
            best = Some(Found { mv, delta, key });
            if steepest {
                ControlFlow::Continue(())
            } else {
                ControlFlow::Break(())
            }
        });
        if timed_out {
            self.timed_out = true;
        }
        best
    }

    /// Applies `mv` and returns the indices of the changed routes.
    fn apply(&mut self, mv: &Move, iteration: usize, delta: f64, repair: bool) -> Vec<usize> {
        apply_into(&self.routes, mv, &mut self.first, &mut self.second);
        let origins = (self.routes[mv.r].origin, mv.s.map(|s| self.routes[s].origin));
        self.routes[mv.r].visits.clone_from(&self.first);
        self.costs[mv.r] = sequence_distance(self.instance, self.first.iter().copied());
        let mut changed = vec![mv.r];
        if let Some(s) = mv.s {
            self.routes[s].visits.clone_from(&self.second);
            self.costs[s] = sequence_distance(self.instance, self.second.iter().copied());
            changed.push(s);
        }
        let record = MoveRecord {
            iteration,
            operator: mv.operator,
            route_origins: origins,
            delta,
            cost_after: self.costs.iter().sum(),
            elapsed: self.start.elapsed().as_secs_f64(),
            repair,
        };
        debug!(target: "dri::improve", "{}", serde_json::to_string(&record).unwrap_or_default());
        self.log.push(record);
        changed
    }

    fn repair(&mut self, routes: &[usize], iteration: usize) {
        let intra: Vec<Operator> = {
            let enabled: Vec<Operator> = self.ctx.operators.iter().copied().filter(|o| o.is_intra()).collect();
            if enabled.is_empty() {
                Operator::INTRA.to_vec()
            } else {
                enabled
            }
        };
        for &r in routes {
            while !self.out_of_time() {
                match self.best_move(&[r], &intra, Pruning::None) {
                    Some(f) => {
                        self.apply(&f.mv, iteration, f.delta, true);
                    }
                    None => break,
                }
            }
        }
    }

    fn drop_empty(&mut self) {
        let mut k = 0;
        while k < self.routes.len() {
            if self.routes[k].visits.is_empty() {
                self.routes.remove(k);
                self.costs.remove(k);
            } else {
                k += 1;
            }
        }
        if self.ctx.spare_route && self.routes.len() < self.instance.fleet_size() {
            let origin = self.routes.first().map_or(0, |r| r.origin);
            self.routes.push(WorkRoute { visits: Vec::new(), origin });
            self.costs.push(0.0);
        }
    }
}

/// Strict-descent local search from `solution` under `ctx`.
///
/// Every accepted move lowers the total distance by more than `1e-9` and
/// keeps both touched routes feasible. After each inter-route move the
/// touched routes are repaired with the intra-route operators.
pub fn local_search(instance: &Instance, solution: &Solution, ctx: &LsContext<'_>) -> Result<LsOutcome> {
    ctx.validate()?;
    let start = Instant::now();
    if ctx.budget == Some(Duration::ZERO) {
        return Ok(LsOutcome {
            solution: solution.clone(),
            log: Vec::new(),
            stop: StopReason::Budget,
            elapsed: start.elapsed(),
        });
    }
    let mut operators = ctx.operators.clone();
    operators.sort();
    operators.dedup();
    let routes: Vec<WorkRoute> = solution
        .routes
        .iter()
        .filter(|r| !r.visits.is_empty())
        .map(|r| WorkRoute {
            visits: r.visits.clone(),
            origin: r.origin,
        })
        .collect();
    let costs = routes
        .iter()
        .map(|r| sequence_distance(instance, r.visits.iter().copied()))
        .collect();
    let mut search = Search {
        instance,
        ctx,
        routes,
        costs,
        deadline: ctx.budget.map(|b| start + b),
        start,
        timed_out: false,
        first: Vec::new(),
        second: Vec::new(),
        log: Vec::new(),
    };
    search.drop_empty();

    let mut iteration = 0;
    while !search.out_of_time() {
        let order = order_routes(instance, &search.routes);
        let Some(found) = search.best_move(&order, &operators, ctx.pruning) else {
            break;
        };
        iteration += 1;
        let changed = search.apply(&found.mv, iteration, found.delta, false);
        if found.mv.s.is_some() {
            search.repair(&changed, iteration);
        }
        search.drop_empty();
    }

    let stop = if search.timed_out {
        StopReason::Budget
    } else {
        StopReason::LocalOptimum
    };
    let improved = if search.log.is_empty() {
        solution.clone()
    } else {
        Solution::from_sequences(
            instance,
            search
                .routes
                .into_iter()
                .filter(|r| !r.visits.is_empty())
                .map(|r| (r.visits, r.origin))
                .collect(),
        )
    };
    Ok(LsOutcome {
        solution: improved,
        log: search.log,
        stop,
        elapsed: start.elapsed(),
    })
}

/// Error gaps against a best-known cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub bks: f64,
    /// `xi = (Z - Z*) / Z*` before improvement.
    pub xi_before: f64,
    pub xi_after: f64,
    /// `(xi' - xi) / xi`; undefined when the starting gap is zero but the
    /// final one is not.
    pub xi_tilde: Option<f64>,
    pub below_bks: bool,
}

pub fn error_gap(z: f64, bks: f64) -> f64 {
    (z - bks) / bks
}

pub fn improvement_report(before: f64, after: f64, bks: f64) -> Result<GapReport> {
    if !(bks > 0.0) {
        return Err(Error::InvalidConfig(format!("best-known cost must be positive, got {bks}")));
    }
    let xi_before = error_gap(before, bks);
    let xi_after = error_gap(after, bks);
    let xi_tilde = if xi_after == xi_before {
        Some(0.0)
    } else if xi_before == 0.0 {
        None
    } else {
        Some((xi_after - xi_before) / xi_before)
    };
    Ok(GapReport {
        bks,
        xi_before,
        xi_after,
        xi_tilde,
        below_bks: before < bks || after < bks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Vertex;

    fn open(id: u32, x: f64, y: f64, demand: f64) -> Vertex {
        Vertex {
            id,
            x,
            y,
            demand,
            ready: 0.0,
            due: 10_000.0,
            service: 0.0,
        }
    }

    #[test]
    fn gap_examples() {
        let g = improvement_report(110.0, 105.0, 100.0).unwrap();
        assert!((g.xi_before - 0.10).abs() < 1e-12);
        assert!((g.xi_after - 0.05).abs() < 1e-12);
        assert!((g.xi_tilde.unwrap() + 0.5).abs() < 1e-9);
        assert_eq!(improvement_report(100.0, 100.0, 100.0).unwrap().xi_before, 0.0);
        assert_eq!(improvement_report(120.0, 120.0, 100.0).unwrap().xi_tilde, Some(0.0));
        assert!(improvement_report(90.0, 90.0, 100.0).unwrap().below_bks);
        assert!(improvement_report(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn worklist_rule() {
        let depot = open(0, 0.0, 0.0, 0.0);
        let cs = vec![
            open(1, 10.0, 0.0, 1.0),  // p0, short route
            open(2, 40.0, 0.0, 9.0),  // p1, util 0.9
            open(3, -40.0, 0.0, 4.0), // p1, util 0.4
        ];
        let inst = Instance::new("w", depot, cs, 3, 10.0).unwrap();
        let routes = vec![
            WorkRoute { visits: vec![1], origin: 0 },
            WorkRoute { visits: vec![2], origin: 1 },
            WorkRoute { visits: vec![3], origin: 1 },
        ];
        assert_eq!(order_routes(&inst, &routes), vec![2, 1, 0]);
        assert_eq!(order_routes(&inst, &routes[..1]), vec![0]);
    }

    #[test]
    fn two_opt_star_merges_crossing_routes() {
        let depot = open(0, 0.0, 0.0, 0.0);
        let cs = vec![
            open(1, 10.0, 1.0, 1.0),
            open(2, 20.0, -1.0, 1.0),
            open(3, 10.0, -1.0, 1.0),
            open(4, 20.0, 1.0, 1.0),
        ];
        let inst = Instance::new("x", depot, cs, 2, 10.0).unwrap();
        let start = Solution::from_sequences(&inst, vec![(vec![1, 2], 0), (vec![3, 4], 1)]);
        let ctx = LsContext {
            operators: vec![Operator::TwoOptInter],
            strategy: Strategy::SteepestDescent,
            pruning: Pruning::CrossBorder,
            budget: None,
            spare_route: false,
        };
        let out = local_search(&inst, &start, &ctx).unwrap();
        assert!(out.solution.is_feasible());
        // 0 -> 1 -> 4 -> 2 -> 3 -> 0 after the merge and its intra repair.
        let expected = 22.0 + 2.0 * 101f64.sqrt();
        assert!((out.solution.total_cost - expected).abs() < 1e-9, "{}", out.solution.total_cost);
        assert!(out.log.iter().any(|r| r.repair));
    }

    #[test]
    fn zero_budget_returns_input() {
        let depot = open(0, 0.0, 0.0, 0.0);
        let cs = vec![open(1, 5.0, 0.0, 1.0), open(2, -5.0, 0.0, 1.0)];
        let inst = Instance::new("z", depot, cs, 2, 10.0).unwrap();
        let start = Solution::from_sequences(&inst, vec![(vec![1, 2], 0)]);
        let ctx = LsContext::new(Strategy::FirstDescent, Pruning::None, Some(Duration::ZERO));
        let out = local_search(&inst, &start, &ctx).unwrap();
        assert_eq!(out.solution, start);
        assert_eq!(out.accepted(), 0);
    }
}
