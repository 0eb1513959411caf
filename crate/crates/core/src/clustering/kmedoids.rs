use super::{dist, Clustering, ClusteringMethod, ClusteringSpec};
use crate::error::Result;
use crate::matrix::DenseMatrix;

const DEFAULT_MAX_ITERATIONS: usize = 100;

/// Seed scores `v_i = sum_j d(i, j) / sum_l d(j, l)`; low means central.
pub fn seed_scores(d: &DenseMatrix) -> Vec<f64> {
    let n = d.dim();
    let row_sums: Vec<f64> = (0..n).map(|j| (0..n).map(|l| dist(d, j, l)).sum()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| row_sums[j] > 0.0)
                .map(|j| dist(d, i, j) / row_sums[j])
                .sum()
        })
        .collect()
}

/// `sum_i d(i, m_{a(i)})` for a labelled partition.
pub fn kmedoids_objective(d: &DenseMatrix, assignment: &[usize], medoids: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &p)| dist(d, i, medoids[p]))
        .sum()
}

/// Alternating k-medoids seeded with the `q` most central customers.
///
/// Iterates nearest-medoid assignment and per-cluster medoid update until
/// the medoid set repeats or the iteration cap is hit. Ties go to the lowest
/// cluster label and the lowest customer position.
pub fn kmedoids(d: &DenseMatrix, spec: &ClusteringSpec) -> Result<Clustering> {
    let n = d.dim();
    spec.validate(n)?;
    let q = spec.q;
    let max_iterations = spec.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);

    let scores = seed_scores(d);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut medoids: Vec<usize> = order[..q].to_vec();

    let mut history = Vec::new();
    let mut iterations = 0;
    let assignment = loop {
        let assignment = assign(d, &medoids);
        history.push(kmedoids_objective(d, &assignment, &medoids));
        iterations += 1;
        let updated = update_medoids(d, &assignment, q);
        if updated == medoids || iterations >= max_iterations {
            break assignment;
        }
        medoids = updated;
    };

    Ok(Clustering {
        method: ClusteringMethod::KMedoids,
        q,
        assignment,
        medoids: Some(medoids),
        membership: None,
        merges: None,
        iterations,
        objective_history: history,
    })
}

fn assign(d: &DenseMatrix, medoids: &[usize]) -> Vec<usize> {
    let n = d.dim();
    let mut assignment: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (p, &m) in medoids.iter().enumerate() {
                let v = dist(d, i, m);
                if v < best_d {
                    best_d = v;
                    best = p;
                }
            }
            best
        })
        .collect();
    // A medoid always belongs to its own cluster, so no cluster is empty even
    // when two medoids are at distance zero.
    for (p, &m) in medoids.iter().enumerate() {
        assignment[m] = p;
    }
    assignment
}

fn update_medoids(d: &DenseMatrix, assignment: &[usize], q: usize) -> Vec<usize> {
    let mut members = vec![Vec::new(); q];
    for (i, &p) in assignment.iter().enumerate() {
        members[p].push(i);
    }
    members
        .iter()
        .map(|group| {
            let mut best = group[0];
            let mut best_sum = f64::INFINITY;
            for &i in group {
                let s: f64 = group.iter().map(|&j| dist(d, i, j)).sum();
                if s < best_sum {
                    best_sum = s;
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_matrix(xs: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    #[test]
    fn two_distant_pairs() {
        let d = line_matrix(&[0.0, 1.0, 100.0, 101.0]);
        let c = kmedoids(&d, &ClusteringSpec::new(ClusteringMethod::KMedoids, 2, 0)).unwrap();
        assert!(c.is_partition(4));
        assert_eq!(c.assignment[0], c.assignment[1]);
        assert_eq!(c.assignment[2], c.assignment[3]);
        assert_ne!(c.assignment[0], c.assignment[2]);
        let mut meds = c.medoids.clone().unwrap();
        meds.sort();
        assert_eq!(meds, vec![0, 2]);
    }

    #[test]
    fn q_equals_n_gives_singletons() {
        let d = line_matrix(&[0.0, 3.0, 7.0, 8.0, 20.0]);
        let c = kmedoids(&d, &ClusteringSpec::new(ClusteringMethod::KMedoids, 5, 0)).unwrap();
        let meds = c.medoids.unwrap();
        for (i, &p) in c.assignment.iter().enumerate() {
            assert_eq!(meds[p], i);
        }
    }

    #[test]
    fn coincident_medoids_keep_clusters_non_empty() {
        let d = line_matrix(&[0.0, 0.0, 0.0, 5.0]);
        let c = kmedoids(&d, &ClusteringSpec::new(ClusteringMethod::KMedoids, 3, 0)).unwrap();
        assert!(c.is_partition(4));
    }

    #[test]
    fn objective_is_non_increasing() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 101) as f64 + (i as f64).sin()).collect();
        let d = line_matrix(&xs);
        let c = kmedoids(&d, &ClusteringSpec::new(ClusteringMethod::KMedoids, 4, 0)).unwrap();
        for w in c.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let clustering_obj = kmedoids_objective(&d, &c.assignment, c.medoids.as_ref().unwrap());
        assert_eq!(*c.objective_history.last().unwrap(), clustering_obj);
    }
}
