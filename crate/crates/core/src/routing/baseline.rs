use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RoutingSolver, SolverCapabilities};
use crate::decompose::NeighborLists;
use crate::error::{Error, Result};
use crate::improve::{local_search, LsContext, Operator, Pruning, Strategy};
use crate::instance::{evaluate_sequence, Instance, Solution, DEPOT};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    #[default]
    SolomonI1Like,
    Savings,
}

/// When the restart loop ends. The budget always caps it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StopMode {
    /// Exactly `restarts` restarts.
    #[default]
    Restarts,
    /// Keep restarting until the budget is spent.
    WallClock,
    /// Stop after this many successive restarts without a better plan.
    NoImprovement { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineSolverConfig {
    pub construction: Construction,
    pub intra_operators: bool,
    /// Also run relocate/swap/cross-over/2-opt* between routes.
    pub inter_operators: bool,
    pub restarts: usize,
    pub stop: StopMode,
    /// Granular neighbourhood size for the inter-route operators.
    pub neighbors: usize,
}

impl Default for BaselineSolverConfig {
    fn default() -> Self {
        BaselineSolverConfig {
            construction: Construction::SolomonI1Like,
            intra_operators: true,
            inter_operators: true,
            restarts: 8,
            stop: StopMode::Restarts,
            neighbors: 30,
        }
    }
}

/// Insertion (or savings) construction with perturbed restarts followed by
/// first-descent local search.
#[derive(Debug, Clone, Default)]
pub struct BaselineSolver {
    pub config: BaselineSolverConfig,
}

impl BaselineSolver {
    pub fn new(config: BaselineSolverConfig) -> Result<Self> {
        if config.restarts == 0 {
            return Err(Error::InvalidConfig("baseline solver needs at least one restart".into()));
        }
        Ok(BaselineSolver { config })
    }
}

impl RoutingSolver for BaselineSolver {
    fn name(&self) -> &str {
        "baseline"
    }

    fn capabilities(&self) -> SolverCapabilities {
        SolverCapabilities {
            respects_budget: true,
            deterministic: true,
        }
    }

    fn solve(&self, instance: &Instance, fleet: usize, budget: Duration, seed: u64) -> Result<Solution> {
        baseline_solve(instance, fleet, budget, seed, &self.config)
    }
}

/// Parameters of one construction run.
#[derive(Debug, Clone, Copy)]
struct Params {
    /// Weight of the distance part of the insertion cost.
    alpha1: f64,
    /// Route-shape factor on the removed edge.
    mu: f64,
    /// Preference for customers far from the depot.
    lambda: f64,
    /// Seed customers: farthest first, or earliest deadline first.
    seed_by_deadline: bool,
}

fn restart_params(k: usize, rng: &mut ChaCha8Rng) -> Params {
    const TABLE: [(f64, f64, f64, bool); 4] = [
        (1.0, 1.0, 1.0, false),
        (0.5, 1.0, 2.0, false),
        (1.0, 1.0, 1.0, true),
        (0.0, 1.0, 2.0, true),
    ];
    if k < TABLE.len() {
        let (alpha1, mu, lambda, seed_by_deadline) = TABLE[k];
        return Params { alpha1, mu, lambda, seed_by_deadline };
    }
    Params {
        alpha1: rng.random_range(0.0..=1.0),
        mu: rng.random_range(0.5..=1.5),
        lambda: rng.random_range(0.5..=2.5),
        seed_by_deadline: rng.random_bool(0.5),
    }
}

/// Deterministic per seed as long as `budget` does not cut the work short.
pub fn baseline_solve(
    instance: &Instance,
    fleet: usize,
    budget: Duration,
    seed: u64,
    config: &BaselineSolverConfig,
) -> Result<Solution> {
    if config.restarts == 0 {
        return Err(Error::InvalidConfig("baseline solver needs at least one restart".into()));
    }
    let owned;
    let instance = if fleet == instance.fleet_size() {
        instance
    } else {
        owned = instance.with_fleet_size(fleet)?;
        &owned
    };
    let start = Instant::now();
    let deadline = start + budget;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neighbors = NeighborLists::from_distance(instance.num_customers(), config.neighbors, |i, j| {
        instance.cost(i + 1, j + 1)
    });

    let mut best: Option<Solution> = None;
    let mut stale = 0;
    for k in 0.. {
        let done = match config.stop {
            StopMode::Restarts => k >= config.restarts,
            StopMode::WallClock => false,
            StopMode::NoImprovement { iterations } => stale >= iterations.max(1),
        };
        if k > 0 && (done || Instant::now() >= deadline) {
            break;
        }
        let params = restart_params(k, &mut rng);
        let routes = match config.construction {
            Construction::SolomonI1Like => insertion(instance, params),
            Construction::Savings => savings(instance, params.lambda.clamp(0.5, 2.0)),
        };
        let mut solution = Solution::from_sequences(instance, routes.into_iter().map(|r| (r, 0)).collect());
        let operators: Vec<Operator> = Operator::ALL
            .into_iter()
            .filter(|o| if o.is_intra() { config.intra_operators } else { config.inter_operators })
            .collect();
        if !operators.is_empty() {
            let remaining = deadline.saturating_duration_since(Instant::now());
            let ctx = LsContext {
                operators,
                strategy: Strategy::FirstDescent,
                pruning: Pruning::Granular(&neighbors),
                budget: Some(remaining),
                spare_route: true,
            };
            solution = local_search(instance, &solution, &ctx)?.solution;
        }
        let better = match &best {
            None => true,
            Some(b) => rank(&solution) < rank(b),
        };
        if better {
            best = Some(solution);
            stale = 0;
        } else {
            stale += 1;
        }
    }
    let mut best = best.expect("at least one restart ran");
    for (v, r) in best.routes.iter_mut().enumerate() {
        r.vehicle = v;
    }
    Ok(best)
}

fn rank(s: &Solution) -> (bool, bool, f64) {
    (!s.is_feasible(), !s.is_fleet_feasible(), s.total_cost)
}

/// Forward start times and latest feasible start times along a route.
struct RouteTimes {
    visits: Vec<usize>,
    earliest: Vec<f64>,
    latest: Vec<f64>,
    load: f64,
}

impl RouteTimes {
    fn new(instance: &Instance, visits: Vec<usize>) -> Self {
        let mut r = RouteTimes {
            visits,
            earliest: Vec::new(),
            latest: Vec::new(),
            load: 0.0,
        };
        r.refresh(instance);
        r
    }

    fn refresh(&mut self, instance: &Instance) {
        let depot = instance.depot();
        let len = self.visits.len();
        self.earliest.clear();
        self.latest.clear();
        self.latest.resize(len, 0.0);
        let mut prev = DEPOT;
        let mut leave = depot.ready;
        self.load = 0.0;
        for &c in &self.visits {
            let v = instance.vertex(c);
            let t = (leave + instance.travel_time(prev, c)).max(v.ready);
            self.earliest.push(t);
            leave = t + v.service;
            prev = c;
            self.load += v.demand;
        }
        let mut next_latest = depot.due;
        let mut next = DEPOT;
        for k in (0..len).rev() {
            let c = self.visits[k];
            let v = instance.vertex(c);
            let l = v.due.min(next_latest - v.service - instance.travel_time(c, next));
            self.latest[k] = l;
            next_latest = l;
            next = c;
        }
    }

    /// Start time of `u` and push-forward when inserted before position `k`,
    /// or `None` when infeasible.
    fn try_insert(&self, instance: &Instance, u: usize, k: usize) -> Option<(f64, f64)> {
        let depot = instance.depot();
        let vu = instance.vertex(u);
        let (prev, prev_leave) = if k == 0 {
            (DEPOT, depot.ready)
        } else {
            let p = self.visits[k - 1];
            (p, self.earliest[k - 1] + instance.vertex(p).service)
        };
        let tu = (prev_leave + instance.travel_time(prev, u)).max(vu.ready);
        if tu > vu.due {
            return None;
        }
        let leave_u = tu + vu.service;
        if k == self.visits.len() {
            let back = leave_u + instance.travel_time(u, DEPOT);
            if back > depot.due {
                return None;
            }
            let old_back = if k == 0 {
                depot.ready
            } else {
                prev_leave + instance.travel_time(prev, DEPOT)
            };
            return Some((tu, back - old_back));
        }
        let j = self.visits[k];
        let tj = (leave_u + instance.travel_time(u, j)).max(instance.vertex(j).ready);
        if tj > self.latest[k] {
            return None;
        }
        Some((tu, tj - self.earliest[k]))
    }
}

/// Sequential insertion in the spirit of Solomon's I1 heuristic.
fn insertion(instance: &Instance, params: Params) -> Vec<Vec<usize>> {
    let n = instance.num_customers();
    let q = instance.capacity();
    let mut unrouted: Vec<usize> = (1..=n).collect();
    let mut routes = Vec::new();
    while !unrouted.is_empty() {
        let seed_pos = (0..unrouted.len())
            .max_by(|&a, &b| {
                let (ua, ub) = (unrouted[a], unrouted[b]);
                let key = |u: usize| {
                    if params.seed_by_deadline {
                        -instance.vertex(u).due
                    } else {
                        instance.cost(DEPOT, u)
                    }
                };
                key(ua).total_cmp(&key(ub)).then(ub.cmp(&ua))
            })
            .expect("non-empty");
        let seed = unrouted.remove(seed_pos);
        let mut route = RouteTimes::new(instance, vec![seed]);
        let mut blocked = vec![false; n + 1];
        loop {
            let mut best: Option<(f64, usize, usize)> = None;
            for (idx, &u) in unrouted.iter().enumerate() {
                if blocked[u] || route.load + instance.vertex(u).demand > q {
                    continue;
                }
                let mut best_c1: Option<(f64, usize)> = None;
                for k in 0..=route.visits.len() {
                    let Some((_, push)) = route.try_insert(instance, u, k) else {
                        continue;
                    };
                    let i = if k == 0 { DEPOT } else { route.visits[k - 1] };
                    let j = if k == route.visits.len() { DEPOT } else { route.visits[k] };
                    let c11 = instance.cost(i, u) + instance.cost(u, j) - params.mu * instance.cost(i, j);
                    let c1 = params.alpha1 * c11 + (1.0 - params.alpha1) * push;
                    if best_c1.is_none_or(|(b, _)| c1 < b) {
                        best_c1 = Some((c1, k));
                    }
                }
                if let Some((c1, k)) = best_c1 {
                    let c2 = params.lambda * instance.cost(DEPOT, u) - c1;
                    if best.is_none_or(|(b, _, _)| c2 > b) {
                        best = Some((c2, idx, k));
                    }
                }
            }
            let Some((_, idx, k)) = best else { break };
            let u = unrouted[idx];
            let (head, tail) = route.visits.split_at(k);
            let confirmed = head.iter().chain(std::iter::once(&u)).chain(tail).copied();
            if evaluate_sequence(instance, confirmed).is_none() {
                // Rounding in the slack arithmetic; the exact check decides.
                blocked[u] = true;
                continue;
            }
            unrouted.remove(idx);
            route.visits.insert(k, u);
            route.refresh(instance);
        }
        routes.push(route.visits);
    }
    routes
}

/// Clarke-Wright savings with time-window checks on every merge.
fn savings(instance: &Instance, lambda: f64) -> Vec<Vec<usize>> {
    let n = instance.num_customers();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                let s = instance.cost(i, DEPOT) + instance.cost(DEPOT, j) - lambda * instance.cost(i, j);
                if s > 0.0 {
                    pairs.push((s, i, j));
                }
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut routes: Vec<Option<Vec<usize>>> = (0..=n).map(|c| if c == 0 { None } else { Some(vec![c]) }).collect();
    let mut route_of: Vec<usize> = (0..=n).collect();
    for (_, i, j) in pairs {
        let (ri, rj) = (route_of[i], route_of[j]);
        if ri == rj {
            continue;
        }
        let (Some(a), Some(b)) = (&routes[ri], &routes[rj]) else { continue };
        if a.last() != Some(&i) || b.first() != Some(&j) {
            continue;
        }
        if evaluate_sequence(instance, a.iter().chain(b.iter()).copied()).is_none() {
            continue;
        }
        let b = routes[rj].take().expect("checked");
        for &c in &b {
            route_of[c] = ri;
        }
        routes[ri].as_mut().expect("checked").extend(b);
    }
    routes.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Vertex;
    use crate::synthetic::SyntheticSpec;

    fn v(id: u32, x: f64, y: f64, demand: f64, ready: f64, due: f64) -> Vertex {
        Vertex {
            id,
            x,
            y,
            demand,
            ready,
            due,
            service: 0.0,
        }
    }

    #[test]
    fn compatible_customers_share_a_route() {
        let depot = v(0, 0.0, 0.0, 0.0, 0.0, 1000.0);
        let cs = vec![v(1, 1.0, 0.0, 1.0, 0.0, 1000.0), v(2, 2.0, 0.0, 1.0, 0.0, 1000.0), v(3, 3.0, 0.0, 1.0, 0.0, 1000.0)];
        let inst = Instance::new("t", depot, cs, 3, 100.0).unwrap();
        for construction in [Construction::SolomonI1Like, Construction::Savings] {
            let cfg = BaselineSolverConfig { construction, ..Default::default() };
            let s = baseline_solve(&inst, 3, Duration::from_secs(5), 0, &cfg).unwrap();
            assert_eq!(s.route_count(), 1, "{construction:?}");
            assert!(s.is_feasible());
        }
    }

    #[test]
    fn incompatible_pair_is_split() {
        let depot = v(0, 0.0, 0.0, 0.0, 0.0, 1000.0);
        // Far apart with disjoint narrow windows in both orders, demands > Q/2.
        let cs = vec![v(1, 100.0, 0.0, 60.0, 100.0, 110.0), v(2, -100.0, 0.0, 60.0, 100.0, 110.0)];
        let inst = Instance::new("t", depot, cs, 2, 100.0).unwrap();
        let s = baseline_solve(&inst, 2, Duration::from_secs(5), 0, &BaselineSolverConfig::default()).unwrap();
        assert_eq!(s.route_count(), 2);
        assert!(s.is_feasible() && s.is_fleet_feasible());
    }

    #[test]
    fn overflow_is_flagged_not_rejected() {
        let depot = v(0, 0.0, 0.0, 0.0, 0.0, 1000.0);
        let cs = vec![v(1, 10.0, 0.0, 60.0, 0.0, 1000.0), v(2, -10.0, 0.0, 60.0, 0.0, 1000.0)];
        let inst = Instance::new("t", depot, cs, 1, 100.0).unwrap();
        let s = baseline_solve(&inst, 1, Duration::from_secs(5), 0, &BaselineSolverConfig::default()).unwrap();
        assert_eq!(s.route_count(), 2);
        assert!(s.is_feasible());
        assert!(!s.is_fleet_feasible());
    }

    #[test]
    fn deterministic_and_feasible() {
        let inst = SyntheticSpec::with_customers(60, 11).generate().unwrap();
        let a = baseline_solve(&inst, 60, Duration::from_secs(30), 5, &BaselineSolverConfig::default()).unwrap();
        let b = baseline_solve(&inst, 60, Duration::from_secs(30), 5, &BaselineSolverConfig::default()).unwrap();
        assert!(a.is_feasible());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let cfg = BaselineSolverConfig { construction: Construction::Savings, ..Default::default() };
        let c = baseline_solve(&inst, 60, Duration::from_secs(30), 5, &cfg).unwrap();
        assert!(c.is_feasible());
    }

    #[test]
    fn stop_modes() {
        let inst = SyntheticSpec::with_customers(30, 4).generate().unwrap();
        let wall = BaselineSolverConfig { stop: StopMode::WallClock, ..Default::default() };
        let t = Instant::now();
        let w = baseline_solve(&inst, 30, Duration::from_millis(300), 1, &wall).unwrap();
        assert!(t.elapsed() >= Duration::from_millis(300) && w.is_feasible());

        let stall = BaselineSolverConfig { stop: StopMode::NoImprovement { iterations: 3 }, ..Default::default() };
        let a = baseline_solve(&inst, 30, Duration::from_secs(30), 1, &stall).unwrap();
        let b = baseline_solve(&inst, 30, Duration::from_secs(30), 1, &stall).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let fixed = baseline_solve(&inst, 30, Duration::from_secs(30), 1, &BaselineSolverConfig::default()).unwrap();
        assert!(w.total_cost <= fixed.total_cost + 1e-9);
    }
}
