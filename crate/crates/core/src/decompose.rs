//! Sub-VRPTWs carved from a clustering, runtime budgets and the vicinity
//! structures that prune the improvement phase.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::clustering::{linkage_distance, Clustering, Linkage};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matrix::DenseMatrix;
use crate::similarity::SimilarityMatrix;

/// A stand-alone VRPTW on a duplicated depot and one customer subset.
#[derive(Debug, Clone)]
pub struct SubProblem {
    pub index: usize,
    /// Parent vertex ids, ascending. Local vertex `k + 1` is `customers[k]`.
    pub customers: Vec<usize>,
    pub instance: Instance,
    pub fleet: usize,
    /// Routing budget `Omega_p` in seconds, set by [`TimeBudget::apply`].
    pub budget: f64,
}

impl SubProblem {
    pub fn to_parent(&self, local: usize) -> usize {
        if local == 0 {
            0
        } else {
            self.customers[local - 1]
        }
    }

    pub fn to_local(&self, parent: usize) -> Option<usize> {
        if parent == 0 {
            return Some(0);
        }
        self.customers.binary_search(&parent).ok().map(|k| k + 1)
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }
}

/// Fleet share `K_p = ceil(m * D_p / D)`, at least one vehicle.
///
/// With zero total demand the split follows subproblem sizes instead.
pub fn fleet_shares(fleet: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|&w| {
            let share = if total > 0.0 { fleet as f64 * w / total } else { 0.0 };
            ((share - 1e-9).ceil().max(1.0)) as usize
        })
        .collect()
}

/// One subproblem per cluster, each with its own copy of the depot.
pub fn build_subproblems(instance: &Instance, clustering: &Clustering) -> Result<Vec<SubProblem>> {
    let n = instance.num_customers();
    if clustering.assignment.len() != n {
        return Err(Error::InvalidConfig(format!(
            "clustering covers {} customers, instance has {n}",
            clustering.assignment.len()
        )));
    }
    let groups: Vec<Vec<usize>> = clustering
        .members()
        .into_iter()
        .map(|g| g.into_iter().map(|c| c + 1).collect())
        .collect();
    if let Some(p) = groups.iter().position(|g| g.is_empty()) {
        return Err(Error::InvalidConfig(format!("cluster {p} is empty")));
    }
    let demands: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&c| instance.vertex(c).demand).sum())
        .collect();
    let weights = if demands.iter().sum::<f64>() > 0.0 {
        demands
    } else {
        groups.iter().map(|g| g.len() as f64).collect()
    };
    let fleets = fleet_shares(instance.fleet_size(), &weights);
    groups
        .into_iter()
        .zip(fleets)
        .enumerate()
        .map(|(p, (customers, fleet))| {
            let name = format!("{}_p{p}", instance.name());
            let sub = instance.carve(name, &customers, fleet)?;
            Ok(SubProblem {
                index: p,
                customers,
                instance: sub,
                fleet,
                budget: 0.0,
            })
        })
        .collect()
}

/// `true` when the per-subproblem fleets add up to more than `m`.
pub fn fleet_overflow(subproblems: &[SubProblem], fleet: usize) -> bool {
    subproblems.iter().map(|s| s.fleet).sum::<usize>() > fleet
}

/// Split of the total runtime between routing and improvement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBudget {
    pub theta: f64,
    pub nu: f64,
    /// `Delta = Theta - nu`.
    pub delta: f64,
    /// `Omega = alpha * Delta`.
    pub routing: f64,
    /// `Upsilon = (1 - alpha) * Delta`.
    pub improvement: f64,
    /// `Omega_p` per subproblem, seconds.
    pub per_subproblem: Vec<f64>,
}

impl TimeBudget {
    pub fn apply(&self, subproblems: &mut [SubProblem]) {
        for (sub, &b) in subproblems.iter_mut().zip(&self.per_subproblem) {
            sub.budget = b;
        }
    }
}

/// `Omega_p = floor(Omega * |V_p| / n)`.
pub fn subproblem_budget(routing: f64, size: usize, n: usize) -> f64 {
    (routing * size as f64 / n as f64).floor()
}

pub fn budget_time(theta: f64, nu: f64, alpha: f64, sizes: &[usize]) -> Result<TimeBudget> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(theta > nu) {
        return Err(Error::BudgetExhausted { theta, nu });
    }
    let delta = theta - nu;
    let routing = alpha * delta;
    let improvement = (1.0 - alpha) * delta;
    let n: usize = sizes.iter().sum();
    let per_subproblem = sizes.iter().map(|&s| subproblem_budget(routing, s, n.max(1))).collect();
    Ok(TimeBudget {
        theta,
        nu,
        delta,
        routing,
        improvement,
        per_subproblem,
    })
}

/// `sum_p |V_p|^2 / n^2`.
pub fn edge_reduction(sizes: &[usize], n: usize) -> f64 {
    let edges: f64 = sizes.iter().map(|&s| (s as f64) * (s as f64)).sum();
    edges / ((n as f64) * (n as f64))
}

/// Nearest-neighbour lists over vertex ids together with a membership mask.
#[derive(Debug, Clone)]
pub struct NeighborLists {
    lists: Vec<Vec<usize>>,
    mask: Vec<bool>,
    dim: usize,
}

impl NeighborLists {
    /// `k` closest customers of every customer under `distance`, ordered by
    /// distance then id. `distance` takes customer positions.
    pub fn from_distance(n: usize, k: usize, distance: impl Fn(usize, usize) -> f64) -> Self {
        let dim = n + 1;
        let k = k.min(n.saturating_sub(1));
        let mut lists = vec![Vec::new(); dim];
        let mut mask = vec![false; dim * dim];
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            order.clear();
            order.extend((0..n).filter(|&j| j != i));
            if k < order.len() {
                order.select_nth_unstable_by(k, |&a, &b| distance(i, a).total_cmp(&distance(i, b)).then(a.cmp(&b)));
                order.truncate(k);
            }
            order.sort_by(|&a, &b| distance(i, a).total_cmp(&distance(i, b)).then(a.cmp(&b)));
            let list: Vec<usize> = order.iter().map(|&j| j + 1).collect();
            for &j in &list {
                mask[(i + 1) * dim + j] = true;
            }
            lists[i + 1] = list;
        }
        NeighborLists { lists, mask, dim }
    }

    /// Neighbours of vertex `i`; empty for the depot.
    pub fn of(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.dim + j]
    }
}

/// Subproblem and customer vicinities for pruned local search.
#[derive(Debug, Clone)]
pub struct VicinityIndex {
    subproblem_distance: DenseMatrix,
    subproblem_neighbors: Vec<Vec<usize>>,
    subproblem_mask: Vec<bool>,
    customers: NeighborLists,
    fuzzy: Option<Vec<bool>>,
    subproblem_of: Vec<usize>,
}

impl VicinityIndex {
    pub fn subproblem_count(&self) -> usize {
        self.subproblem_neighbors.len()
    }

    /// `Phi_p`, nearest first.
    pub fn subproblem_neighbors(&self, p: usize) -> &[usize] {
        &self.subproblem_neighbors[p]
    }

    #[inline]
    pub fn is_subproblem_neighbor(&self, p: usize, g: usize) -> bool {
        self.subproblem_mask[p * self.subproblem_count() + g]
    }

    pub fn subproblem_distance(&self) -> &DenseMatrix {
        &self.subproblem_distance
    }

    /// `Phi_i` of vertex `i`, most similar first.
    pub fn customer_neighbors(&self, i: usize) -> &[usize] {
        self.customers.of(i)
    }

    #[inline]
    pub fn is_customer_neighbor(&self, i: usize, j: usize) -> bool {
        self.customers.contains(i, j)
    }

    pub fn customer_lists(&self) -> &NeighborLists {
        &self.customers
    }

    /// Whether vertex `i` may move. Always true without fuzzy flags.
    #[inline]
    pub fn is_fuzzy(&self, i: usize) -> bool {
        self.fuzzy.as_ref().is_none_or(|f| f[i])
    }

    pub fn has_fuzzy_flags(&self) -> bool {
        self.fuzzy.is_some()
    }

    /// Subproblem holding vertex `i` in the clustering.
    pub fn subproblem_of(&self, i: usize) -> usize {
        self.subproblem_of[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VicinityConfig {
    /// Subproblem vicinity size `phi`.
    pub phi: usize,
    /// Customer vicinity size `varphi`.
    pub varphi: usize,
    pub rho: Option<f64>,
    pub linkage: Linkage,
}

impl Default for VicinityConfig {
    fn default() -> Self {
        VicinityConfig {
            phi: 5,
            varphi: 10,
            rho: None,
            linkage: Linkage::Average,
        }
    }
}

pub fn build_vicinities(
    similarity: &SimilarityMatrix,
    clustering: &Clustering,
    config: &VicinityConfig,
) -> Result<VicinityIndex> {
    let n = similarity.len();
    if clustering.assignment.len() != n {
        return Err(Error::InvalidConfig("clustering and similarity sizes differ".into()));
    }
    let s = similarity.symmetric();
    let members = clustering.members();
    let q = members.len();

    let subproblem_distance = DenseMatrix::from_fn(q, |p, g| {
        if p == g {
            0.0
        } else {
            linkage_distance(s, &members[p], &members[g], config.linkage)
        }
    });
    let k = config.phi.min(q.saturating_sub(1));
    let mut subproblem_mask = vec![false; q * q];
    let subproblem_neighbors: Vec<Vec<usize>> = (0..q)
        .map(|p| {
            let mut others: Vec<usize> = (0..q).filter(|&g| g != p).collect();
            others.sort_by(|&a, &b| {
                subproblem_distance
                    .get(p, a)
                    .total_cmp(&subproblem_distance.get(p, b))
                    .then(a.cmp(&b))
            });
            others.truncate(k);
            for &g in &others {
                subproblem_mask[p * q + g] = true;
            }
            others
        })
        .collect();

    let customers = NeighborLists::from_distance(n, config.varphi, |i, j| s.get(i, j));

    let fuzzy = match (config.rho, &clustering.membership) {
        (Some(rho), _) if !(0.0..=1.0).contains(&rho) => {
            return Err(Error::InvalidConfig(format!("rho must lie in [0, 1], got {rho}")));
        }
        (Some(rho), Some(u)) => {
            let mut flags = vec![false; n + 1];
            for (c, row) in u.iter().enumerate() {
                let max = row.iter().copied().fold(0.0, f64::max);
                flags[c + 1] = max <= rho;
            }
            Some(flags)
        }
        (Some(_), None) => {
            warn!("rho is set but the clustering has no membership matrix; ignoring rho");
            None
        }
        (None, _) => None,
    };

    let mut subproblem_of = vec![usize::MAX; n + 1];
    for (c, &p) in clustering.assignment.iter().enumerate() {
        subproblem_of[c + 1] = p;
    }

    Ok(VicinityIndex {
        subproblem_distance,
        subproblem_neighbors,
        subproblem_mask,
        customers,
        fuzzy,
        subproblem_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{cluster, ClusteringMethod, ClusteringSpec};
    use crate::similarity::{build_similarity_matrix, SimilarityConfig};
    use crate::synthetic::SyntheticSpec;

    #[test]
    fn fleet_examples() {
        assert_eq!(fleet_shares(10, &[25.0, 75.0]), vec![3, 8]);
        assert_eq!(fleet_shares(10, &[0.5, 0.3, 0.2]), vec![5, 3, 2]);
        assert_eq!(fleet_shares(10, &[5.0, 3.0, 2.0]), vec![5, 3, 2]);
        assert_eq!(fleet_shares(3, &[0.0, 1.0]), vec![1, 3]);
    }

    #[test]
    fn budgets() {
        assert_eq!(subproblem_budget(60.0, 100, 1000), 6.0);
        assert_eq!(subproblem_budget(60.0, 120, 1000), 7.0);
        let b = budget_time(300.0, 0.4, 0.8, &[500, 500]).unwrap();
        assert!((b.routing - 239.68).abs() < 1e-9);
        assert!((b.improvement - 59.92).abs() < 1e-9);
        assert_eq!(b.per_subproblem, vec![119.0, 119.0]);
        let b = budget_time(60.0, 0.0, 1.0, &[10]).unwrap();
        assert_eq!(b.improvement, 0.0);
        assert!(matches!(budget_time(1.0, 1.0, 0.8, &[1]), Err(Error::BudgetExhausted { .. })));
        assert!(budget_time(10.0, 0.0, 0.0, &[1]).is_err());
    }

    #[test]
    fn edge_reduction_examples() {
        assert_eq!(edge_reduction(&[1000], 1000), 1.0);
        assert!((edge_reduction(&[200; 5], 1000) - 0.2).abs() < 1e-12);
        assert!((edge_reduction(&[901, 33, 33, 33], 1000) - 0.815_068).abs() < 1e-9);
    }

    #[test]
    fn subproblems_and_vicinities() {
        let inst = SyntheticSpec::with_customers(60, 4).generate().unwrap();
        let sim = build_similarity_matrix(&inst, &SimilarityConfig::default()).unwrap();
        let c = cluster(&sim, &ClusteringSpec::new(ClusteringMethod::KMedoids, 4, 0)).unwrap();
        let subs = build_subproblems(&inst, &c).unwrap();
        assert_eq!(subs.iter().map(|s| s.len()).sum::<usize>(), 60);
        for s in &subs {
            assert!(s.fleet >= 1);
            for (k, &parent) in s.customers.iter().enumerate() {
                assert_eq!(s.to_local(parent), Some(k + 1));
                assert_eq!(s.to_parent(k + 1), parent);
                assert_eq!(s.instance.vertex(k + 1), inst.vertex(parent));
            }
        }

        let v = build_vicinities(&sim, &c, &VicinityConfig { phi: 2, varphi: 7, ..Default::default() }).unwrap();
        for p in 0..4 {
            assert_eq!(v.subproblem_neighbors(p).len(), 2);
            assert!(!v.subproblem_neighbors(p).contains(&p));
        }
        for i in 1..=60 {
            let list = v.customer_neighbors(i);
            assert_eq!(list.len(), 7);
            assert!(!list.contains(&i));
            let keys: Vec<f64> = list.iter().map(|&j| sim.symmetric().get(i - 1, j - 1)).collect();
            assert!(keys.windows(2).all(|w| w[0] <= w[1]));
            assert!(v.is_fuzzy(i));
        }
        let all = build_vicinities(&sim, &c, &VicinityConfig { phi: 99, varphi: 999, ..Default::default() }).unwrap();
        assert_eq!(all.subproblem_neighbors(0).len(), 3);
        assert_eq!(all.customer_neighbors(1).len(), 59);
    }

    #[test]
    fn rho_one_flags_everyone() {
        let inst = SyntheticSpec::with_customers(30, 2).generate().unwrap();
        let sim = build_similarity_matrix(&inst, &SimilarityConfig::default()).unwrap();
        let c = cluster(&sim, &ClusteringSpec::new(ClusteringMethod::fuzzy(), 3, 0)).unwrap();
        let cfg = VicinityConfig { rho: Some(1.0), ..Default::default() };
        let v = build_vicinities(&sim, &c, &cfg).unwrap();
        assert!(v.has_fuzzy_flags());
        assert!((1..=30).all(|i| v.is_fuzzy(i)));
        let cfg = VicinityConfig { rho: Some(0.0), ..Default::default() };
        let v = build_vicinities(&sim, &c, &cfg).unwrap();
        assert!((1..=30).all(|i| !v.is_fuzzy(i)));
    }
}
