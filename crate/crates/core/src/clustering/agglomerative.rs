use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dist, Clustering, ClusteringMethod, ClusteringSpec, Linkage};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// One merge step. Cluster ids follow the usual dendrogram convention:
/// `0..n` are singletons, merge `k` creates id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

/// Linkage distance between two explicit member sets.
pub fn linkage_distance(d: &DenseMatrix, a: &[usize], b: &[usize], linkage: Linkage) -> f64 {
    let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| dist(d, i, j)));
    match linkage {
        Linkage::Single => pairs.fold(f64::INFINITY, f64::min),
        Linkage::Complete => pairs.fold(f64::NEG_INFINITY, f64::max),
        Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
    }
}

type Entry = Reverse<(OrderedFloat<f64>, usize, usize, u32, u32)>;

struct State {
    linkage: Linkage,
    /// Min/max for single/complete, pair-distance sum for average.
    link: DenseMatrix,
    size: Vec<usize>,
    active: Vec<bool>,
    version: Vec<u32>,
    id: Vec<usize>,
}

impl State {
    fn value(&self, a: usize, b: usize) -> f64 {
        let raw = self.link.get(a, b);
        match self.linkage {
            Linkage::Average => raw / (self.size[a] * self.size[b]) as f64,
            Linkage::Single | Linkage::Complete => raw,
        }
    }

    fn entry(&self, a: usize, b: usize) -> Entry {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Reverse((OrderedFloat(self.value(a, b)), a, b, self.version[a], self.version[b]))
    }

    fn is_live(&self, e: &Entry) -> bool {
        let (_, a, b, va, vb) = e.0;
        self.active[a] && self.active[b] && self.version[a] == va && self.version[b] == vb
    }
}

/// Bottom-up merging of the closest cluster pair until `q` clusters remain.
///
/// Uses a lazily invalidated heap of pair distances. Exactly tied pairs are
/// drawn uniformly with the seeded generator.
pub fn agglomerative(d: &DenseMatrix, spec: &ClusteringSpec) -> Result<Clustering> {
    let n = d.dim();
    spec.validate(n)?;
    let ClusteringMethod::Agglomerative { linkage } = spec.method else {
        return Err(Error::InvalidConfig("agglomerative called with another method".into()));
    };
    let q = spec.q;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut state = State {
        linkage,
        link: DenseMatrix::from_fn(n, |i, j| dist(d, i, j)),
        size: vec![1; n],
        active: vec![true; n],
        version: vec![0; n],
        id: (0..n).collect(),
    };
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut heap: BinaryHeap<Entry> = BinaryHeap::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            heap.push(state.entry(a, b));
        }
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(q));
    let mut remaining = n;
    while remaining > q {
        let first = loop {
            let e = heap.pop().expect("heap holds every live pair");
            if state.is_live(&e) {
                break e;
            }
        };
        let mut tied = vec![first];
        while let Some(top) = heap.peek() {
            if top.0 .0 != first.0 .0 {
                break;
            }
            let e = heap.pop().expect("peeked");
            if state.is_live(&e) {
                tied.push(e);
            }
        }
        let pick = if tied.len() > 1 { rng.random_range(0..tied.len()) } else { 0 };
        let chosen = tied.swap_remove(pick);
        heap.extend(tied);

        let (distance, a, b, _, _) = chosen.0;
        for k in 0..n {
            if !state.active[k] || k == a || k == b {
                continue;
            }
            let (la, lb) = (state.link.get(a, k), state.link.get(b, k));
            let merged = match linkage {
                Linkage::Single => la.min(lb),
                Linkage::Complete => la.max(lb),
                Linkage::Average => la + lb,
            };
            state.link.set(a, k, merged);
            state.link.set(k, a, merged);
        }
        state.active[b] = false;
        state.size[a] += state.size[b];
        state.version[a] += 1;
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        merges.push(Merge {
            left: state.id[a],
            right: state.id[b],
            distance: distance.0,
            size: state.size[a],
        });
        state.id[a] = n + merges.len() - 1;
        remaining -= 1;
        for k in 0..n {
            if state.active[k] && k != a {
                heap.push(state.entry(a, k));
            }
        }
    }

    // Label clusters by their smallest member so labels do not depend on slots.
    let mut groups: Vec<Vec<usize>> = members.into_iter().filter(|m| !m.is_empty()).collect();
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort_by_key(|g| g[0]);
    let mut assignment = vec![0; n];
    for (p, g) in groups.iter().enumerate() {
        for &c in g {
            assignment[c] = p;
        }
    }

    Ok(Clustering {
        method: spec.method,
        q,
        assignment,
        medoids: None,
        membership: None,
        merges: Some(merges),
        iterations: n - q,
        objective_history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    fn spec(linkage: Linkage, q: usize, seed: u64) -> ClusteringSpec {
        ClusteringSpec::new(ClusteringMethod::Agglomerative { linkage }, q, seed)
    }

    #[test]
    fn collinear_tie_is_seed_dependent() {
        let d = line(&[0.0, 1.0, 2.0]);
        let mut outcomes = std::collections::BTreeSet::new();
        for seed in 0..32 {
            let c = agglomerative(&d, &spec(Linkage::Single, 2, seed)).unwrap();
            assert!(c.is_partition(3));
            let groups = c.members();
            assert!(groups == vec![vec![0, 1], vec![2]] || groups == vec![vec![0], vec![1, 2]], "{groups:?}");
            outcomes.insert(groups);
            let again = agglomerative(&d, &spec(Linkage::Single, 2, seed)).unwrap();
            assert_eq!(again, c);
        }
        assert_eq!(outcomes.len(), 2, "both tie outcomes reachable");
    }

    #[test]
    fn q_one_collects_everything() {
        let d = line(&[0.0, 4.0, 9.0, 10.0]);
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let c = agglomerative(&d, &spec(linkage, 1, 0)).unwrap();
            assert_eq!(c.assignment, vec![0; 4]);
            assert_eq!(c.merges.as_ref().unwrap().len(), 3);
        }
    }

    #[test]
    fn average_linkage_distance_is_mean_of_pairs() {
        let d = line(&[0.0, 1.0, 10.0, 12.0]);
        let c = agglomerative(&d, &spec(Linkage::Average, 1, 0)).unwrap();
        let merges = c.merges.unwrap();
        assert_eq!(merges[0].distance, 1.0);
        assert_eq!(merges[1].distance, 2.0);
        // {0,1} vs {10,12}: (10 + 12 + 9 + 11) / 4
        assert_eq!(merges[2].distance, 10.5);
        assert_eq!(merges[2].size, 4);
    }

    #[test]
    fn single_linkage_chains() {
        // Gaps grow along the chain, so single linkage keeps absorbing the
        // next point into one cluster.
        let mut xs = vec![0.0];
        for k in 1..20 {
            xs.push(xs[k - 1] + 1.0 + 0.05 * k as f64);
        }
        let d = line(&xs);
        let q = 4;
        let c = agglomerative(&d, &spec(Linkage::Single, q, 0)).unwrap();
        let biggest = *c.sizes().iter().max().unwrap();
        assert!(biggest > xs.len() - q, "sizes {:?}", c.sizes());
    }
}
