//! Independent reference implementations used to cross-check the solver
//! components, plus a runnable suite over generated fixtures.
//!
//! Everything here is written for clarity, not speed, and shares no code
//! with the routines it checks beyond the instance accessors.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusteringMethod, ClusteringSpec, Linkage};
use crate::decompose::{build_vicinities, VicinityConfig};
use crate::improve::{candidate_moves, order_routes, Move, Operator, Pruning, WorkRoute};
use crate::instance::{propagate_schedule, Instance, Vertex};
use crate::matrix::DenseMatrix;
use crate::routing::{baseline_solve, BaselineSolverConfig};
use crate::similarity::{build_similarity_matrix, SimilarityConfig};
use crate::synthetic::SyntheticSpec;

/// Forward schedule recomputed from scratch: start times, or the 1-based
/// position of the first visit (or `len + 1` for the depot return) that
/// breaks a time window or the capacity.
pub fn naive_schedule(instance: &Instance, visits: &[usize]) -> Result<Vec<f64>, usize> {
    let vs = instance.vertices();
    let dist = |a: &Vertex, b: &Vertex| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    let mut clock = vs[0].ready;
    let mut here = &vs[0];
    let mut load = 0.0;
    let mut starts = Vec::new();
    for (k, &c) in visits.iter().enumerate() {
        let v = &vs[c];
        load += v.demand;
        let start = f64::max(v.ready, clock + dist(here, v));
        if load > instance.capacity() || start > v.due {
            return Err(k + 1);
        }
        starts.push(start);
        clock = start + v.service;
        here = v;
    }
    if !visits.is_empty() && clock + dist(here, &vs[0]) > vs[0].due {
        return Err(visits.len() + 1);
    }
    Ok(starts)
}

/// Compares the library schedule against expected start times and reports
/// the first mismatching position.
pub fn verify_schedule_fixture(instance: &Instance, visits: &[usize], expected: &[f64]) -> Result<(), String> {
    let route = propagate_schedule(instance, visits).map_err(|e| format!("schedule rejected: {}", e.reason()))?;
    if route.start_times.len() != expected.len() {
        return Err(format!(
            "expected {} start times, schedule has {}",
            expected.len(),
            route.start_times.len()
        ));
    }
    for (k, (&got, &want)) in route.start_times.iter().zip(expected).enumerate() {
        if (got - want).abs() > 1e-9 {
            return Err(format!(
                "start time mismatch at position {k} (customer {}): got {got}, expected {want}",
                visits[k]
            ));
        }
    }
    Ok(())
}

/// One merge of the naive agglomerator: the two member sets and their distance.
pub type NaiveMerge = (Vec<usize>, Vec<usize>, f64);

/// O(n³) agglomerative clustering recomputing every linkage from scratch.
/// Ties resolve to the lexicographically first pair of clusters.
pub fn naive_agglomerative(d: &DenseMatrix, q: usize, linkage: Linkage) -> Vec<NaiveMerge> {
    let n = d.dim();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    while clusters.len() > q {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut vals = Vec::new();
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        vals.push(d.get(i, j));
                    }
                }
                let link = match linkage {
                    Linkage::Single => vals.iter().cloned().fold(f64::INFINITY, f64::min),
                    Linkage::Complete => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    Linkage::Average => vals.iter().sum::<f64>() / vals.len() as f64,
                };
                if link < best.0 {
                    best = (link, a, b);
                }
            }
        }
        let (link, a, b) = best;
        let right = clusters.remove(b);
        let mut left = clusters[a].clone();
        left.sort();
        let mut r = right.clone();
        r.sort();
        merges.push((left, r, link));
        clusters[a].extend(right);
    }
    merges
}

/// Replays the library's merge history as member sets.
pub fn merges_as_sets(merges: &[clustering::Merge], n: usize) -> Vec<NaiveMerge> {
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    for m in merges {
        let mut l = members[m.left].clone();
        let mut r = members[m.right].clone();
        l.sort();
        r.sort();
        let mut joined = l.clone();
        joined.extend(&r);
        members.push(joined);
        out.push((l, r, m.distance));
    }
    out
}

fn same_merges(a: &[NaiveMerge], b: &[NaiveMerge]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let pair_x: BTreeSet<&Vec<usize>> = [&x.0, &x.1].into_iter().collect();
            let pair_y: BTreeSet<&Vec<usize>> = [&y.0, &y.1].into_iter().collect();
            pair_x == pair_y && (x.2 - y.2).abs() <= 1e-9 * x.2.abs().max(1.0)
        })
}

/// Best k-medoids objective over every medoid set of size `q`.
pub fn exhaustive_kmedoids(d: &DenseMatrix, q: usize) -> f64 {
    let n = d.dim();
    let mut best = f64::INFINITY;
    let mut set = Vec::with_capacity(q);
    fn rec(d: &DenseMatrix, n: usize, q: usize, from: usize, set: &mut Vec<usize>, best: &mut f64) {
        if set.len() == q {
            let total: f64 = (0..n)
                .map(|i| {
                    set.iter()
                        .map(|&m| if m == i { 0.0 } else { d.get(i, m) })
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            if total < *best {
                *best = total;
            }
            return;
        }
        for m in from..n {
            set.push(m);
            rec(d, n, q, m + 1, set, best);
            set.pop();
        }
    }
    rec(d, n, q, 0, &mut set, &mut best);
    best
}

/// Optimal VRPTW cost by enumerating every feasible route and combining
/// disjoint routes with a subset dynamic program. Infeasible prefixes are
/// not extended: later customers only delay every arrival. Practical up to about
/// nine customers. Returns `None` when no plan within the fleet exists.
pub fn exhaustive_vrptw(instance: &Instance) -> Option<f64> {
    let n = instance.num_customers();
    assert!(n <= 12, "exhaustive search is limited to tiny instances");
    let full = (1usize << n) - 1;
    let mut route_cost = vec![f64::INFINITY; full + 1];
    route_cost[0] = 0.0;
    let mut path = Vec::new();
    let mut used = vec![false; n + 1];
    fn extend(inst: &Instance, path: &mut Vec<usize>, used: &mut [bool], mask: usize, cost: &mut [f64]) {
        let n = inst.num_customers();
        for c in 1..=n {
            if used[c] {
                continue;
            }
            path.push(c);
            if let Ok(starts) = naive_schedule(inst, path) {
                debug_assert_eq!(starts.len(), path.len());
                let m = mask | (1 << (c - 1));
                let vs = inst.vertices();
                let dist = |a: usize, b: usize| ((vs[a].x - vs[b].x).powi(2) + (vs[a].y - vs[b].y).powi(2)).sqrt();
                let mut total = dist(0, path[0]);
                for w in path.windows(2) {
                    total += dist(w[0], w[1]);
                }
                total += dist(*path.last().unwrap(), 0);
                if total < cost[m] {
                    cost[m] = total;
                }
                used[c] = true;
                extend(inst, path, used, m, cost);
                used[c] = false;
            }
            path.pop();
        }
    }
    extend(instance, &mut path, &mut used, 0, &mut route_cost);

    let m = instance.fleet_size().min(n);
    // best[k][mask]: cheapest cover of `mask` with exactly k routes.
    let mut best = vec![vec![f64::INFINITY; full + 1]; m + 1];
    best[0][0] = 0.0;
    for k in 1..=m {
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let mut sub = mask;
            while sub > 0 {
                if sub & low != 0 && route_cost[sub].is_finite() {
                    let rest = best[k - 1][mask ^ sub];
                    if rest.is_finite() && rest + route_cost[sub] < best[k][mask] {
                        best[k][mask] = rest + route_cost[sub];
                    }
                }
                sub = (sub - 1) & mask;
            }
        }
    }
    let answer = (1..=m).map(|k| best[k][full]).fold(f64::INFINITY, f64::min);
    answer.is_finite().then_some(answer)
}

/// Every inter-route move between routes of different origins plus every
/// intra-route move, listed without any vicinity logic.
pub fn enumerate_moves_unpruned(routes: &[WorkRoute], operators: &[Operator]) -> BTreeSet<Move> {
    let mut out = BTreeSet::new();
    for (r, route) in routes.iter().enumerate() {
        for &op in operators {
            if matches!(op, Operator::TwoOptIntra | Operator::SwapIntra) {
                for a in 0..route.visits.len() {
                    for b in a + 1..route.visits.len() {
                        out.insert(Move { operator: op, r, s: None, a, b });
                    }
                }
                continue;
            }
            for (s, other) in routes.iter().enumerate() {
                if s == r || route.origin == other.origin {
                    continue;
                }
                let (lr, ls) = (route.visits.len(), other.visits.len());
                let (ra, rb) = match op {
                    Operator::CrossOver => (1..lr + 1, 0..ls),
                    Operator::Relocate => (0..lr, 0..ls + 1),
                    Operator::Swap => (0..lr, 0..ls),
                    Operator::TwoOptInter => (1..lr + 1, 1..ls + 1),
                    _ => unreachable!(),
                };
                for a in ra {
                    for b in rb.clone() {
                        out.insert(Move { operator: op, r, s: Some(s), a, b });
                    }
                }
            }
        }
    }
    out
}

/// Worklist order recomputed with an explicit comparator.
pub fn naive_order(instance: &Instance, routes: &[WorkRoute]) -> Vec<usize> {
    let cost = |r: &WorkRoute| {
        let mut prev = 0;
        let mut z = 0.0;
        for &c in &r.visits {
            z += instance.cost(prev, c);
            prev = c;
        }
        z + instance.cost(prev, 0)
    };
    let avg = |origin: usize| {
        let zs: Vec<f64> = routes.iter().filter(|r| r.origin == origin).map(cost).collect();
        zs.iter().sum::<f64>() / zs.len() as f64
    };
    let util = |r: &WorkRoute| r.visits.iter().map(|&c| instance.vertex(c).demand).sum::<f64>() / instance.capacity();
    let mut idx: Vec<usize> = (0..routes.len()).collect();
    // Insertion sort keeps the comparator visible and independent.
    for i in 1..idx.len() {
        let mut k = i;
        while k > 0 {
            let (x, y) = (&routes[idx[k - 1]], &routes[idx[k]]);
            let before = {
                let (ax, ay) = (avg(x.origin), avg(y.origin));
                if ax != ay {
                    ax > ay
                } else if x.origin != y.origin {
                    x.origin < y.origin
                } else if util(x) != util(y) {
                    util(x) < util(y)
                } else {
                    x.visits <= y.visits
                }
            };
            if before {
                break;
            }
            idx.swap(k - 1, k);
            k -= 1;
        }
    }
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub results: Vec<OracleResult>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn render(&self) -> String {
        self.results
            .iter()
            .map(|r| format!("[{}] {}: {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail))
            .collect()
    }
}

fn result(name: &str, failures: Vec<String>, checked: usize) -> OracleResult {
    OracleResult {
        name: name.to_string(),
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{checked} cases agree")
        } else {
            format!("{} of {checked} cases disagree; first: {}", failures.len(), failures[0])
        },
    }
}

/// Random small distance matrix over points in the plane.
pub fn random_points_matrix(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))).collect();
    DenseMatrix::from_fn(n, |i, j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt())
}

/// Small instance with generous fleet for optimality checks.
pub fn tiny_instance(n: usize, seed: u64) -> Instance {
    let mut spec = SyntheticSpec::with_customers(n, seed);
    spec.fleet = n.max(1);
    spec.generate().expect("synthetic instances are valid")
}

pub fn schedule_oracle(cases: usize) -> OracleResult {
    let mut failures = Vec::new();
    for seed in 0..cases as u64 {
        let inst = tiny_instance(20, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool: Vec<usize> = (1..=20).collect();
        let mut seq = Vec::new();
        for _ in 0..5 {
            let k = rng.random_range(0..pool.len());
            seq.push(pool.swap_remove(k));
        }
        let ours = propagate_schedule(&inst, &seq);
        let theirs = naive_schedule(&inst, &seq);
        let agree = match (&ours, &theirs) {
            (Ok(r), Ok(t)) => r.start_times.iter().zip(t).all(|(a, b)| (a - b).abs() <= 1e-9),
            (Err(_), Err(_)) => true,
            _ => false,
        };
        if !agree {
            failures.push(format!("seed {seed} sequence {seq:?}"));
        }
    }
    result("schedule recursion vs second implementation", failures, cases)
}

pub fn clustering_oracles(cases: usize) -> Vec<OracleResult> {
    let mut agg = Vec::new();
    let mut km = Vec::new();
    let mut fcm = Vec::new();
    for seed in 0..cases as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(4..=12);
        let q = rng.random_range(2..=3);
        let d = random_points_matrix(n, &mut rng);
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let spec = ClusteringSpec::new(ClusteringMethod::Agglomerative { linkage }, q, seed);
            let c = clustering::agglomerative(&d, &spec).expect("valid spec");
            let ours = merges_as_sets(c.merges.as_deref().unwrap_or(&[]), n);
            let theirs = naive_agglomerative(&d, q, linkage);
            if !same_merges(&ours, &theirs) {
                agg.push(format!("seed {seed} n {n} q {q} {linkage:?}"));
            }
        }
        let c = clustering::kmedoids(&d, &ClusteringSpec::new(ClusteringMethod::KMedoids, q, seed)).expect("valid");
        let medoids = c.medoids.clone().unwrap_or_default();
        let reevaluated: f64 = c
            .assignment
            .iter()
            .enumerate()
            .map(|(i, &p)| if medoids[p] == i { 0.0 } else { d.get(i, medoids[p]) })
            .sum();
        let reported = c.objective_history.last().copied().unwrap_or(f64::NAN);
        let floor = exhaustive_kmedoids(&d, q);
        if (reported - reevaluated).abs() > 1e-9 || reported < floor - 1e-9 {
            km.push(format!("seed {seed}: reported {reported}, recomputed {reevaluated}, exhaustive {floor}"));
        }

        let inst = tiny_instance(n, 2000 + seed);
        let sim = build_similarity_matrix(&inst, &SimilarityConfig::default()).expect("valid");
        let c = clustering::fuzzy_cmedoids(&sim, &ClusteringSpec::new(ClusteringMethod::fuzzy(), q, seed)).expect("valid");
        let u = c.membership.as_ref().expect("fuzzy membership");
        if let Some((i, row)) = u.iter().enumerate().find(|(_, row)| (row.iter().sum::<f64>() - 1.0).abs() > 1e-9) {
            fcm.push(format!("seed {seed}: row {i} sums to {}", row.iter().sum::<f64>()));
        }
    }
    vec![
        result("agglomerative merges vs naive O(n^3) oracle", agg, cases * 3),
        result("k-medoids objective vs re-evaluation and exhaustive floor", km, cases),
        result("fuzzy membership rows sum to one", fcm, cases),
    ]
}

pub fn optimality_oracle(cases: usize) -> OracleResult {
    let mut failures = Vec::new();
    for seed in 0..cases as u64 {
        let n = 3 + (seed as usize % 6);
        let inst = tiny_instance(n, 5000 + seed);
        let Some(opt) = exhaustive_vrptw(&inst) else {
            failures.push(format!("seed {seed}: no feasible plan"));
            continue;
        };
        let sol = baseline_solve(&inst, inst.fleet_size(), std::time::Duration::from_secs(5), seed, &BaselineSolverConfig::default())
            .expect("baseline solve");
        let z = sol.total_cost;
        if !sol.is_feasible() || z < opt - 1e-6 || z > 1.5 * opt + 1e-9 {
            failures.push(format!("seed {seed}: baseline {z}, optimum {opt}, feasible {}", sol.is_feasible()));
        }
    }
    result("baseline solver within 1.5x of exhaustive optimum", failures, cases)
}

pub fn pruning_oracle(cases: usize) -> OracleResult {
    let mut failures = Vec::new();
    for seed in 0..cases as u64 {
        let n = 10 + (seed as usize % 21);
        let inst = tiny_instance(n, 7000 + seed);
        let sim = build_similarity_matrix(&inst, &SimilarityConfig::default()).expect("valid");
        let q = 2 + (seed as usize % 3);
        let c = clustering::cluster(&sim, &ClusteringSpec::new(ClusteringMethod::fuzzy(), q, seed)).expect("valid");
        let config = VicinityConfig {
            phi: q - 1,
            varphi: n - 1,
            rho: Some(1.0),
            linkage: Linkage::Average,
        };
        let vicinity = build_vicinities(&sim, &c, &config).expect("valid");
        // Routes: customers of each cluster chunked into pieces of three.
        let mut routes = Vec::new();
        for (p, members) in c.members().iter().enumerate() {
            for chunk in members.chunks(3) {
                routes.push(WorkRoute {
                    visits: chunk.iter().map(|&x| x + 1).collect(),
                    origin: p,
                });
            }
        }
        let pruned: BTreeSet<Move> = candidate_moves(&routes, &Operator::ALL, Pruning::Vicinity(&vicinity)).into_iter().collect();
        let full = enumerate_moves_unpruned(&routes, &Operator::ALL);
        if pruned != full {
            failures.push(format!(
                "seed {seed}: {} pruned vs {} exhaustive candidates",
                pruned.len(),
                full.len()
            ));
        }
        let order = order_routes(&inst, &routes);
        if order != naive_order(&inst, &routes) {
            failures.push(format!("seed {seed}: worklist order differs"));
        }
    }
    result("maximal vicinity equals exhaustive move set", failures, cases)
}

/// Feasibility of baseline solutions over many small seeded instances.
pub fn feasibility_sweep(cases: usize) -> OracleResult {
    let mut failures = Vec::new();
    for seed in 0..cases as u64 {
        let inst = tiny_instance(12, 9000 + seed);
        let sol = baseline_solve(&inst, inst.fleet_size(), std::time::Duration::from_secs(5), seed, &BaselineSolverConfig::default())
            .expect("baseline solve");
        if !sol.is_feasible() {
            failures.push(format!("seed {seed}: {:?}", sol.feasibility.violations));
        }
    }
    result("feasibility sweep over small instances", failures, cases)
}

/// Corrupted fixture: the check must fail and point at the bad position.
pub fn negative_control() -> OracleResult {
    let inst = tiny_instance(6, 42);
    let seq = [1, 2, 3];
    let detail = match naive_schedule(&inst, &seq) {
        Ok(mut starts) => {
            starts[1] += 1.0;
            verify_schedule_fixture(&inst, &seq, &starts)
        }
        Err(pos) => Err(format!("fixture sequence infeasible at position {pos}")),
    };
    match detail {
        Err(msg) if msg.contains("position 1") => OracleResult {
            name: "negative control: corrupted schedule fixture is rejected".into(),
            passed: true,
            detail: msg,
        },
        other => OracleResult {
            name: "negative control: corrupted schedule fixture is rejected".into(),
            passed: false,
            detail: format!("corruption not detected as expected: {other:?}"),
        },
    }
}

pub fn oracle_suite() -> OracleReport {
    let mut results = vec![schedule_oracle(50)];
    results.extend(clustering_oracles(50));
    results.push(optimality_oracle(100));
    results.push(pruning_oracle(20));
    results.push(feasibility_sweep(100));
    results.push(negative_control());
    OracleReport { results }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_control_detects_corruption() {
        let r = negative_control();
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn exhaustive_optimum_of_two_customers() {
        let inst = tiny_instance(2, 1);
        let opt = exhaustive_vrptw(&inst).unwrap();
        let c = |a: usize, b: usize| inst.cost(a, b);
        let separate = 2.0 * c(0, 1) + 2.0 * c(0, 2);
        assert!(opt <= separate + 1e-9);
        assert!(opt >= c(0, 1) + c(1, 2) + c(2, 0) - 1e-9 || (opt - separate).abs() < 1e-9);
    }
}
