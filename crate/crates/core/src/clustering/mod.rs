//! Partition customers into `q` groups over the symmetric STD metric.
//!
//! All indices are customer positions (`0..n`); cluster labels are `0..q`.

mod agglomerative;
mod fuzzy;
mod kmedoids;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matrix::DenseMatrix;
use crate::similarity::SimilarityMatrix;

pub use agglomerative::{agglomerative, linkage_distance, Merge};
pub use fuzzy::{fuzzy_cmedoids, membership_row};
pub use kmedoids::{kmedoids, kmedoids_objective, seed_scores};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusteringMethod {
    #[default]
    KMedoids,
    FuzzyCMedoids {
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Agglomerative {
        #[serde(default)]
        linkage: Linkage,
    },
}

fn default_kappa() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    1e-4
}


impl ClusteringMethod {
    pub fn fuzzy() -> Self {
        ClusteringMethod::FuzzyCMedoids {
            kappa: default_kappa(),
            epsilon: default_epsilon(),
        }
    }

    /// Short label used in reports (`k-m`, `fcm`, `ac-average`, ...).
    pub fn label(&self) -> String {
        match self {
            ClusteringMethod::KMedoids => "k-m".into(),
            ClusteringMethod::FuzzyCMedoids { kappa, .. } => format!("fcm-k{kappa}"),
            ClusteringMethod::Agglomerative { linkage } => {
                format!("ac-{}", format!("{linkage:?}").to_lowercase())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSpec {
    pub method: ClusteringMethod,
    pub q: usize,
    pub seed: u64,
    /// Defaults to 100 for k-medoids and 200 for fuzzy c-medoids.
    pub max_iterations: Option<usize>,
}

impl ClusteringSpec {
    pub fn new(method: ClusteringMethod, q: usize, seed: u64) -> Self {
        ClusteringSpec {
            method,
            q,
            seed,
            max_iterations: None,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let min_q = match self.method {
            ClusteringMethod::Agglomerative { .. } => 1,
            _ => 2,
        };
        if self.q < min_q {
            return Err(Error::InvalidConfig(format!("q must be at least {min_q}, got {}", self.q)));
        }
        if self.q > n {
            return Err(Error::InvalidConfig(format!("q = {} exceeds the {n} customers", self.q)));
        }
        if let ClusteringMethod::FuzzyCMedoids { kappa, epsilon } = self.method {
            if !(kappa > 1.0) {
                return Err(Error::InvalidConfig(format!("kappa must exceed 1, got {kappa}")));
            }
            if !(epsilon > 0.0) {
                return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
            }
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// A hard partition plus method-specific byproducts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub method: ClusteringMethod,
    pub q: usize,
    /// Cluster label per customer position.
    pub assignment: Vec<usize>,
    /// Medoid customer position per cluster (partitional methods).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub medoids: Option<Vec<usize>>,
    /// Degrees of membership, one row of `q` values per customer (fuzzy only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub membership: Option<Vec<Vec<f64>>>,
    /// Merge history (agglomerative only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merges: Option<Vec<Merge>>,
    pub iterations: usize,
    /// k-medoids objective after every assignment step.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub objective_history: Vec<f64>,
}

impl Clustering {
    /// Customer positions per cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.q];
        for (c, &p) in self.assignment.iter().enumerate() {
            groups[p].push(c);
        }
        groups
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.q];
        for &p in &self.assignment {
            sizes[p] += 1;
        }
        sizes
    }

    /// Every customer labelled, every label in range, no empty cluster.
    pub fn is_partition(&self, n: usize) -> bool {
        self.assignment.len() == n
            && self.assignment.iter().all(|&p| p < self.q)
            && self.sizes().iter().all(|&s| s > 0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Single cluster holding every customer.
    pub fn trivial(method: ClusteringMethod, n: usize) -> Self {
        Clustering {
            method,
            q: 1,
            assignment: vec![0; n],
            medoids: None,
            membership: None,
            merges: None,
            iterations: 0,
            objective_history: Vec::new(),
        }
    }
}

/// Runs the configured clustering method on a similarity structure.
pub fn cluster(similarity: &SimilarityMatrix, spec: &ClusteringSpec) -> Result<Clustering> {
    let n = similarity.len();
    if spec.q == 1 && n > 0 {
        return Ok(Clustering::trivial(spec.method, n));
    }
    match spec.method {
        ClusteringMethod::KMedoids => kmedoids(similarity.symmetric(), spec),
        ClusteringMethod::FuzzyCMedoids { .. } => fuzzy_cmedoids(similarity, spec),
        ClusteringMethod::Agglomerative { .. } => agglomerative(similarity.symmetric(), spec),
    }
}

/// Distance between two customers as consumed by clustering: self pairs are 0.
#[inline]
pub(crate) fn dist(matrix: &DenseMatrix, i: usize, j: usize) -> f64 {
    if i == j {
        0.0
    } else {
        matrix.get(i, j)
    }
}

/// How the number of subproblems is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QPolicy {
    Fixed { q: usize },
    /// `ceil(n / target_size)`: subproblems sized for the routing backend.
    SolverBased {
        #[serde(default = "default_target_size")]
        target_size: usize,
    },
    /// `ceil(sum d / Q)`: the fleet lower bound.
    FleetBased,
}

fn default_target_size() -> usize {
    500
}

impl Default for QPolicy {
    fn default() -> Self {
        QPolicy::SolverBased {
            target_size: default_target_size(),
        }
    }
}

/// Number of clusters for `instance`, at least 1 and at most `n`.
/// A result of 1 means no decomposition.
pub fn choose_q(instance: &Instance, policy: QPolicy) -> Result<usize> {
    let n = instance.num_customers();
    let q = match policy {
        QPolicy::Fixed { q } => q,
        QPolicy::SolverBased { target_size } => {
            if target_size == 0 {
                return Err(Error::InvalidConfig("target_size must be positive".into()));
            }
            n.div_ceil(target_size)
        }
        QPolicy::FleetBased => {
            let ratio = instance.total_demand() / instance.capacity();
            (ratio - 1e-9).ceil().max(0.0) as usize
        }
    };
    Ok(q.clamp(1, n.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Vertex;
    use crate::synthetic::SyntheticSpec;

    fn demand_instance(n: usize, demand: f64, capacity: f64) -> Instance {
        let depot = Vertex {
            id: 0,
            x: 0.0,
            y: 0.0,
            demand: 0.0,
            ready: 0.0,
            due: 1000.0,
            service: 0.0,
        };
        let cs = (1..=n)
            .map(|i| Vertex {
                id: i as u32,
                x: i as f64,
                demand,
                ..depot
            })
            .collect();
        Instance::new("q", depot, cs, n, capacity).unwrap()
    }

    #[test]
    fn choose_q_policies() {
        let big = SyntheticSpec::with_customers(1000, 1).generate().unwrap();
        assert_eq!(choose_q(&big, QPolicy::SolverBased { target_size: 500 }).unwrap(), 2);
        let small = SyntheticSpec::with_customers(400, 1).generate().unwrap();
        assert_eq!(choose_q(&small, QPolicy::default()).unwrap(), 1);
        // 245 customers x 10 = 2450 demand with Q = 200.
        let inst = demand_instance(245, 10.0, 200.0);
        assert_eq!(choose_q(&inst, QPolicy::FleetBased).unwrap(), 13);
        assert_eq!(choose_q(&inst, QPolicy::Fixed { q: 500 }).unwrap(), 245);
    }

    #[test]
    fn method_json_shape() {
        let m: ClusteringMethod = serde_json::from_str(r#"{"kind":"fuzzy_c_medoids"}"#).unwrap();
        assert_eq!(m, ClusteringMethod::fuzzy());
        let a: ClusteringMethod = serde_json::from_str(r#"{"kind":"agglomerative","linkage":"single"}"#).unwrap();
        assert_eq!(a.label(), "ac-single");
    }

    #[test]
    fn spec_validation() {
        let s = ClusteringSpec::new(ClusteringMethod::KMedoids, 1, 0);
        assert!(s.validate(10).is_err());
        let s = ClusteringSpec::new(ClusteringMethod::KMedoids, 11, 0);
        assert!(s.validate(10).is_err());
        let s = ClusteringSpec::new(ClusteringMethod::FuzzyCMedoids { kappa: 1.0, epsilon: 1e-4 }, 2, 0);
        assert!(s.validate(10).is_err());
        let s = ClusteringSpec::new(ClusteringMethod::Agglomerative { linkage: Linkage::Single }, 1, 0);
        assert!(s.validate(10).is_ok());
    }
}
