//! Customer features and the spatial-temporal-demand (STD) dissimilarity.
//!
//! For a directed customer pair `i -> j` the STD distance penalises the
//! spatial distance by how much scheduling slack the edge leaves, how long a
//! vehicle must at least wait, and how much of a vehicle the pair consumes:
//!
//! ```text
//! S_std(i, j) = S_s(i, j) * (2 - (f_ij - h_ij) / (l_w - e_w) + (d_i + d_j) / Q)
//! f_ij = l_j - (e_i + s_i + t_ij)
//! h_ij = max(e_j - (l_i + s_i + t_ij), 0)
//! S_s(i, j) = sqrt(dx^2 + dy^2 + lambda * dtheta^2)
//! ```
//!
//! Clustering consumes the symmetric `min(S_std(i, j), S_std(j, i))`.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::{Instance, Vertex};
use crate::matrix::DenseMatrix;

/// `tau_i = (x, y, theta, e, l, s, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub ready: f64,
    pub due: f64,
    pub service: f64,
    pub demand: f64,
}

impl FeatureVector {
    pub fn of(vertex: &Vertex, depot: &Vertex) -> Self {
        FeatureVector {
            x: vertex.x,
            y: vertex.y,
            theta: polar_angle(vertex.position(), depot.position()),
            ready: vertex.ready,
            due: vertex.due,
            service: vertex.service,
            demand: vertex.demand,
        }
    }
}

/// Polar angle of `point` around `depot` in `(-pi, pi]`.
///
/// Negative exactly when the point lies below the depot. A point on the
/// depot gets angle 0.
pub fn polar_angle(point: (f64, f64), depot: (f64, f64)) -> f64 {
    let dx = point.0 - depot.0;
    let dy = point.1 - depot.1;
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    // atan2(-0.0, x<0) would give -pi.
    let dy = if dy == 0.0 { 0.0 } else { dy };
    dy.atan2(dx)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleDifference {
    /// `theta_j - theta_i` as is.
    #[default]
    Raw,
    /// Shortest signed arc between the two angles.
    Circular,
}

impl AngleDifference {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let d = b - a;
        match self {
            AngleDifference::Raw => d,
            AngleDifference::Circular => {
                let wrapped = d.rem_euclid(TAU);
                if wrapped > PI {
                    wrapped - TAU
                } else {
                    wrapped
                }
            }
        }
    }
}

/// Which dissimilarity drives clustering and pruning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Spatial-temporal-demand distance.
    #[default]
    Std,
    /// Plain travel cost `c_ij`, the comparison baseline.
    TravelCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    /// Weight of the polar-angle term.
    pub lambda: f64,
    pub angle_difference: AngleDifference,
    pub metric: Metric,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            lambda: 1.0,
            angle_difference: AngleDifference::Raw,
            metric: Metric::Std,
        }
    }
}

pub fn spatial_similarity(a: &FeatureVector, b: &FeatureVector, lambda: f64, angle: AngleDifference) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let dt = angle.apply(a.theta, b.theta);
    (dx * dx + dy * dy + lambda * dt * dt).sqrt()
}

/// `f_ij = l_j - (e_i + s_i + t_ij)`; negative marks an infeasible edge.
#[inline]
pub fn scheduling_flexibility(ready_i: f64, service_i: f64, travel_ij: f64, due_j: f64) -> f64 {
    due_j - (ready_i + service_i + travel_ij)
}

/// `h_ij = max(e_j - (l_i + s_i + t_ij), 0)`.
#[inline]
pub fn min_waiting(due_i: f64, service_i: f64, travel_ij: f64, ready_j: f64) -> f64 {
    (ready_j - (due_i + service_i + travel_ij)).max(0.0)
}

/// Directed STD distance from its parts. Not clamped: a negative `f`
/// pushes the factor above 2.
#[inline]
pub fn std_distance(
    spatial: f64,
    flexibility: f64,
    waiting: f64,
    horizon: f64,
    demand_i: f64,
    demand_j: f64,
    capacity: f64,
) -> f64 {
    spatial * (2.0 - (flexibility - waiting) / horizon + (demand_i + demand_j) / capacity)
}

/// Dense pairwise structure over customer positions `0..n`.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    config: SimilarityConfig,
    horizon: f64,
    capacity: f64,
    features: Vec<FeatureVector>,
    spatial: DenseMatrix,
    flexibility: DenseMatrix,
    waiting: DenseMatrix,
    directed: DenseMatrix,
    symmetric: DenseMatrix,
}

pub fn build_similarity_matrix(instance: &Instance, config: &SimilarityConfig) -> Result<SimilarityMatrix> {
    if !(config.lambda >= 0.0) || !config.lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {}", config.lambda)));
    }
    let horizon = instance.horizon();
    if !(horizon > 0.0) {
        return Err(Error::InvalidInstance(format!("operational period must be positive, got {horizon}")));
    }
    let n = instance.num_customers();
    let depot = instance.depot();
    let features: Vec<FeatureVector> = instance.customers().iter().map(|c| FeatureVector::of(c, depot)).collect();
    let capacity = instance.capacity();

    let mut spatial = DenseMatrix::zeros(n);
    let mut flexibility = DenseMatrix::zeros(n);
    let mut waiting = DenseMatrix::zeros(n);
    let mut directed = DenseMatrix::zeros(n);
    for i in 0..n {
        let a = &features[i];
        for j in 0..n {
            let b = &features[j];
            let t = instance.travel_time(i + 1, j + 1);
            let f = scheduling_flexibility(a.ready, a.service, t, b.due);
            let h = min_waiting(a.due, a.service, t, b.ready);
            let (s, d) = match config.metric {
                Metric::Std => {
                    let s = spatial_similarity(a, b, config.lambda, config.angle_difference);
                    (s, std_distance(s, f, h, horizon, a.demand, b.demand, capacity))
                }
                Metric::TravelCost => {
                    let c = instance.cost(i + 1, j + 1);
                    (c, c)
                }
            };
            spatial.set(i, j, s);
            flexibility.set(i, j, f);
            waiting.set(i, j, h);
            directed.set(i, j, d);
        }
    }
    let symmetric = DenseMatrix::from_fn(n, |i, j| directed.get(i, j).min(directed.get(j, i)));
    Ok(SimilarityMatrix {
        config: *config,
        horizon,
        capacity,
        features,
        spatial,
        flexibility,
        waiting,
        directed,
        symmetric,
    })
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn config(&self) -> &SimilarityConfig {
        &self.config
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn spatial(&self) -> &DenseMatrix {
        &self.spatial
    }

    pub fn flexibility(&self) -> &DenseMatrix {
        &self.flexibility
    }

    pub fn waiting(&self) -> &DenseMatrix {
        &self.waiting
    }

    pub fn directed(&self) -> &DenseMatrix {
        &self.directed
    }

    /// The clustering metric `min(S(i, j), S(j, i))`.
    pub fn symmetric(&self) -> &DenseMatrix {
        &self.symmetric
    }

    /// Symmetric distance between a synthetic feature vector and customer `c`.
    ///
    /// STD terms are evaluated with the pseudo-customer's own window and
    /// demand fields; travel time is the spatial similarity at unit speed.
    pub fn pseudo_distance(&self, pseudo: &FeatureVector, c: usize) -> f64 {
        let real = &self.features[c];
        match self.config.metric {
            Metric::TravelCost => (pseudo.x - real.x).hypot(pseudo.y - real.y),
            Metric::Std => {
                let s = spatial_similarity(pseudo, real, self.config.lambda, self.config.angle_difference);
                let t = s;
                let forward = std_distance(
                    s,
                    scheduling_flexibility(pseudo.ready, pseudo.service, t, real.due),
                    min_waiting(pseudo.due, pseudo.service, t, real.ready),
                    self.horizon,
                    pseudo.demand,
                    real.demand,
                    self.capacity,
                );
                let backward = std_distance(
                    s,
                    scheduling_flexibility(real.ready, real.service, t, pseudo.due),
                    min_waiting(real.due, real.service, t, pseudo.ready),
                    self.horizon,
                    real.demand,
                    pseudo.demand,
                    self.capacity,
                );
                forward.min(backward)
            }
        }
    }

    /// Writes the symmetric matrix as little-endian row-major `f64` to
    /// `path` and a JSON sidecar next to it. Returns the sidecar path.
    pub fn write_dump(&self, path: &Path) -> Result<PathBuf> {
        let bytes: Vec<u8> = self.symmetric.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(path, &bytes).map_err(|e| Error::file(path, e))?;
        let sidecar = DumpSidecar {
            n: self.len(),
            lambda: self.config.lambda,
            metric: self.config.metric,
            checksum: sha256_hex(&bytes),
        };
        let side_path = sidecar_path(path);
        fs::write(&side_path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::file(&side_path, e))?;
        Ok(side_path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpSidecar {
    pub n: usize,
    pub lambda: f64,
    pub metric: Metric,
    /// SHA-256 of the binary payload, lowercase hex.
    pub checksum: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Reads a dump written by [`SimilarityMatrix::write_dump`], verifying size
/// and checksum against the sidecar.
pub fn read_dump(path: &Path) -> Result<(DenseMatrix, DumpSidecar)> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    let side_path = sidecar_path(path);
    let text = fs::read_to_string(&side_path).map_err(|e| Error::file(&side_path, e))?;
    let sidecar: DumpSidecar = serde_json::from_str(&text)?;
    if sha256_hex(&bytes) != sidecar.checksum {
        return Err(Error::InvalidInstance(format!("{}: checksum mismatch", path.display())));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let matrix = DenseMatrix::from_row_major(sidecar.n, values)
        .ok_or_else(|| Error::InvalidInstance(format!("{}: size does not match n = {}", path.display(), sidecar.n)))?;
    Ok((matrix, sidecar))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::SyntheticSpec;
    use approx::assert_abs_diff_eq;

    fn feat(x: f64, y: f64, theta: f64) -> FeatureVector {
        FeatureVector {
            x,
            y,
            theta,
            ready: 0.0,
            due: 100.0,
            service: 0.0,
            demand: 0.0,
        }
    }

    #[test]
    fn polar_angle_quadrants() {
        assert_eq!(polar_angle((6.0, 5.0), (5.0, 5.0)), 0.0);
        assert_abs_diff_eq!(polar_angle((5.0, 6.0), (5.0, 5.0)), PI / 2.0);
        assert_abs_diff_eq!(polar_angle((4.0, 4.0), (5.0, 5.0)), -3.0 * PI / 4.0);
        assert_eq!(polar_angle((4.0, 5.0), (5.0, 5.0)), PI);
        assert_eq!(polar_angle((5.0, 5.0), (5.0, 5.0)), 0.0);
    }

    #[test]
    fn spatial_similarity_cases() {
        let a = feat(0.0, 0.0, 0.0);
        let b = feat(3.0, 0.0, 4.0);
        assert_eq!(spatial_similarity(&a, &b, 1.0, AngleDifference::Raw), 5.0);
        assert_eq!(spatial_similarity(&a, &b, 0.0, AngleDifference::Raw), 3.0);
        assert_eq!(spatial_similarity(&a, &a, 1.0, AngleDifference::Raw), 0.0);
    }

    #[test]
    fn circular_difference_wraps() {
        let d = AngleDifference::Circular.apply(PI - 0.1, -PI + 0.1);
        assert_abs_diff_eq!(d, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(AngleDifference::Raw.apply(PI - 0.1, -PI + 0.1), -2.0 * PI + 0.2, epsilon = 1e-12);
    }

    #[test]
    fn flexibility_and_waiting() {
        assert_eq!(scheduling_flexibility(0.0, 10.0, 5.0, 100.0), 85.0);
        assert!(scheduling_flexibility(50.0, 10.0, 5.0, 60.0) < 0.0);
        assert_eq!(scheduling_flexibility(0.0, 0.0, 0.0, 480.0), 480.0);
        assert_eq!(min_waiting(10.0, 5.0, 5.0, 30.0), 10.0);
        assert_eq!(min_waiting(100.0, 5.0, 5.0, 30.0), 0.0);
    }

    #[test]
    fn std_distance_cases() {
        assert_eq!(std_distance(7.0, 480.0, 0.0, 480.0, 0.0, 0.0, 200.0), 7.0);
        assert_eq!(std_distance(10.0, 0.0, 0.0, 480.0, 120.0, 80.0, 200.0), 30.0);
        assert!(std_distance(10.0, -48.0, 0.0, 480.0, 0.0, 0.0, 200.0) > 20.0);
    }

    #[test]
    fn matrix_is_symmetric_minimum_and_directional() {
        let inst = SyntheticSpec::with_customers(30, 11).generate().unwrap();
        let m = build_similarity_matrix(&inst, &SimilarityConfig::default()).unwrap();
        let mut asymmetric = 0;
        for i in 0..30 {
            for j in 0..30 {
                let s = m.symmetric().get(i, j);
                assert_eq!(s, m.symmetric().get(j, i));
                assert_eq!(s, m.directed().get(i, j).min(m.directed().get(j, i)));
                assert!(m.spatial().get(i, j) >= 0.0);
                if m.directed().get(i, j) != m.directed().get(j, i) {
                    asymmetric += 1;
                }
            }
        }
        assert!(asymmetric > 0);
    }

    #[test]
    fn travel_cost_metric_is_plain_distance() {
        let inst = SyntheticSpec::with_customers(10, 2).generate().unwrap();
        let cfg = SimilarityConfig {
            metric: Metric::TravelCost,
            ..Default::default()
        };
        let m = build_similarity_matrix(&inst, &cfg).unwrap();
        assert_eq!(m.symmetric().get(2, 5), inst.cost(3, 6));
    }

    #[test]
    fn pseudo_distance_of_a_customer_matches_matrix() {
        let inst = SyntheticSpec::with_customers(12, 5).generate().unwrap();
        let m = build_similarity_matrix(&inst, &SimilarityConfig::default()).unwrap();
        // With lambda = 0 unit-speed travel equals the Euclidean travel time.
        let cfg = SimilarityConfig {
            lambda: 0.0,
            ..Default::default()
        };
        let m0 = build_similarity_matrix(&inst, &cfg).unwrap();
        let tau = m0.features()[3];
        assert_abs_diff_eq!(m0.pseudo_distance(&tau, 7), m0.symmetric().get(3, 7), epsilon = 1e-9);
        assert_eq!(m.pseudo_distance(&m.features()[4], 4), 0.0);
    }

    #[test]
    fn dump_round_trip_and_checksum() {
        let inst = SyntheticSpec::with_customers(9, 1).generate().unwrap();
        let m = build_similarity_matrix(&inst, &SimilarityConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.bin");
        m.write_dump(&path).unwrap();
        let (back, side) = read_dump(&path).unwrap();
        assert_eq!(&back, m.symmetric());
        assert_eq!(side.n, 9);
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert!(read_dump(&path).is_err());
    }
}
