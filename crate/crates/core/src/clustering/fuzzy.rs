use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dist, Clustering, ClusteringMethod, ClusteringSpec};
use crate::error::{Error, Result};
use crate::similarity::{FeatureVector, SimilarityMatrix};

const DEFAULT_MAX_ITERATIONS: usize = 200;

/// Degrees of membership of one customer given its distances to the `q`
/// medoids: `mu_p = 1 / sum_g (d_p / d_g)^(2 / (kappa - 1))`.
///
/// A zero distance takes the whole membership (split evenly when several
/// medoids are at distance zero).
pub fn membership_row(distances: &[f64], kappa: f64) -> Vec<f64> {
    let zeros = distances.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        return distances.iter().map(|&d| if d == 0.0 { share } else { 0.0 }).collect();
    }
    let exponent = 2.0 / (kappa - 1.0);
    let mut row: Vec<f64> = distances
        .iter()
        .map(|&dp| {
            let denom: f64 = distances.iter().map(|&dg| (dp / dg).powf(exponent)).sum();
            1.0 / denom
        })
        .collect();
    let total: f64 = row.iter().sum();
    for mu in &mut row {
        *mu /= total;
    }
    row
}

/// Fuzzy c-medoids over the symmetric STD metric.
///
/// Each iteration forms the membership-weighted mean feature vector of every
/// cluster, picks as medoid the customer closest to it (distinct medoids,
/// lowest position on ties), and recomputes memberships against the medoids.
/// Stops once no membership moves by `epsilon` or more.
pub fn fuzzy_cmedoids(similarity: &SimilarityMatrix, spec: &ClusteringSpec) -> Result<Clustering> {
    let n = similarity.len();
    spec.validate(n)?;
    let ClusteringMethod::FuzzyCMedoids { kappa, epsilon } = spec.method else {
        return Err(Error::InvalidConfig("fuzzy_cmedoids called with a non-fuzzy method".into()));
    };
    let q = spec.q;
    let max_iterations = spec.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);
    let d = similarity.symmetric();
    let features = similarity.features();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut membership: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..q).map(|_| 1.0 - rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|r| r / total).collect()
        })
        .collect();

    let mut medoids = vec![0; q];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut taken = vec![false; n];
        for p in 0..q {
            let tau = cluster_feature(features, &membership, p);
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for i in (0..n).filter(|&i| !taken[i]) {
                let v = similarity.pseudo_distance(&tau, i);
                if v < best_d || best == usize::MAX {
                    best_d = v;
                    best = i;
                }
            }
            taken[best] = true;
            medoids[p] = best;
        }
        let updated: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let ds: Vec<f64> = medoids.iter().map(|&m| dist(d, i, m)).collect();
                membership_row(&ds, kappa)
            })
            .collect();
        let change = membership
            .iter()
            .zip(&updated)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        membership = updated;
        if change < epsilon || iterations >= max_iterations {
            break;
        }
    }

    let mut assignment: Vec<usize> = membership
        .iter()
        .map(|row| {
            let mut best = 0;
            for (p, &mu) in row.iter().enumerate() {
                if mu > row[best] {
                    best = p;
                }
            }
            best
        })
        .collect();
    for (p, &m) in medoids.iter().enumerate() {
        assignment[m] = p;
    }

    Ok(Clustering {
        method: spec.method,
        q,
        assignment,
        medoids: Some(medoids),
        membership: Some(membership),
        merges: None,
        iterations,
        objective_history: Vec::new(),
    })
}

/// Membership-weighted mean of the customer features of cluster `p`.
fn cluster_feature(features: &[FeatureVector], membership: &[Vec<f64>], p: usize) -> FeatureVector {
    let mut acc = [0.0f64; 7];
    let mut weight = 0.0;
    for (f, row) in features.iter().zip(membership) {
        let mu = row[p];
        weight += mu;
        for (a, v) in acc.iter_mut().zip([f.x, f.y, f.theta, f.ready, f.due, f.service, f.demand]) {
            *a += mu * v;
        }
    }
    if weight > 0.0 {
        for a in &mut acc {
            *a /= weight;
        }
    }
    FeatureVector {
        x: acc[0],
        y: acc[1],
        theta: acc[2],
        ready: acc[3],
        due: acc[4],
        service: acc[5],
        demand: acc[6],
    }
}
