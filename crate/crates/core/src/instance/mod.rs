//! VRPTW instances, schedule propagation and solutions.

mod parse;
mod schedule;
mod solution;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub use parse::{parse_instance, parse_instance_with, write_instance};
pub use schedule::{
    evaluate_sequence, propagate_schedule, schedule_lenient, sequence_distance, Infeasibility,
    ScheduledRoute,
};
pub use solution::{solution_cost, FeasibilityReport, Solution, Violation};

pub const DEPOT: usize = 0;

/// A depot or customer location with its demand and service window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// Label from the source file (`CUST NO.`).
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    /// Earliest start of service.
    pub ready: f64,
    /// Latest start of service.
    pub due: f64,
    pub service: f64,
}

impl Vertex {
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// How travel costs are derived from planar coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceConvention {
    /// Full double-precision Euclidean distance.
    #[default]
    Exact,
    /// Euclidean distance truncated to one decimal place.
    TruncatedOneDecimal,
}

impl DistanceConvention {
    pub fn distance(self, a: &Vertex, b: &Vertex) -> f64 {
        let d = (a.x - b.x).hypot(a.y - b.y);
        match self {
            DistanceConvention::Exact => d,
            DistanceConvention::TruncatedOneDecimal => (d * 10.0).floor() / 10.0,
        }
    }
}

/// An immutable VRPTW problem on a complete graph.
///
/// Vertex `0` is the depot. Cost and travel time coincide (planar Euclidean
/// benchmark convention) unless the instance was carved from a parent with
/// explicit matrices.
#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    vertices: Vec<Vertex>,
    fleet_size: usize,
    capacity: f64,
    convention: DistanceConvention,
    cost: DenseMatrix,
    travel_time: DenseMatrix,
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        depot: Vertex,
        customers: Vec<Vertex>,
        fleet_size: usize,
        capacity: f64,
    ) -> Result<Self> {
        Self::with_convention(
            name,
            depot,
            customers,
            fleet_size,
            capacity,
            DistanceConvention::Exact,
        )
    }

    pub fn with_convention(
        name: impl Into<String>,
        depot: Vertex,
        customers: Vec<Vertex>,
        fleet_size: usize,
        capacity: f64,
        convention: DistanceConvention,
    ) -> Result<Self> {
        let mut vertices = Vec::with_capacity(customers.len() + 1);
        vertices.push(depot);
        vertices.extend(customers);
        let n = vertices.len();
        let cost = DenseMatrix::from_fn(n, |i, j| {
            if i == j {
                0.0
            } else {
                convention.distance(&vertices[i], &vertices[j])
            }
        });
        let instance = Instance {
            name: name.into(),
            vertices,
            fleet_size,
            capacity,
            convention,
            travel_time: cost.clone(),
            cost,
        };
        instance.validate()?;
        Ok(instance)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidInstance(msg));
        if self.fleet_size == 0 {
            return invalid("fleet size must be positive".into());
        }
        if !(self.capacity > 0.0) {
            return invalid(format!("capacity must be positive, got {}", self.capacity));
        }
        let depot = &self.vertices[DEPOT];
        if depot.demand != 0.0 || depot.service != 0.0 {
            return invalid("depot must have zero demand and zero service time".into());
        }
        for (idx, v) in self.vertices.iter().enumerate() {
            let fields = [v.x, v.y, v.demand, v.ready, v.due, v.service];
            if fields.iter().any(|f| !f.is_finite()) {
                return invalid(format!("vertex {} has a non-finite field", v.id));
            }
            if v.ready > v.due {
                return invalid(format!("time window inverted for vertex {}", v.id));
            }
            if v.demand < 0.0 || v.service < 0.0 {
                return invalid(format!("vertex {} has negative demand or service", v.id));
            }
            if idx != DEPOT && v.demand > self.capacity {
                return invalid(format!(
                    "customer {} demand {} exceeds capacity {}",
                    v.id, v.demand, self.capacity
                ));
            }
        }
        let mut ids: Vec<u32> = self.vertices.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("duplicate vertex id {}", w[0]));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of customers `n`.
    pub fn num_customers(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> &Vertex {
        &self.vertices[i]
    }

    pub fn depot(&self) -> &Vertex {
        &self.vertices[DEPOT]
    }

    /// Customers in vertex order (`1..=n`).
    pub fn customers(&self) -> &[Vertex] {
        &self.vertices[1..]
    }

    pub fn fleet_size(&self) -> usize {
        self.fleet_size
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn convention(&self) -> DistanceConvention {
        self.convention
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost.get(i, j)
    }

    #[inline]
    pub fn travel_time(&self, i: usize, j: usize) -> f64 {
        self.travel_time.get(i, j)
    }

    pub fn cost_matrix(&self) -> &DenseMatrix {
        &self.cost
    }

    pub fn travel_time_matrix(&self) -> &DenseMatrix {
        &self.travel_time
    }

    /// Length of the depot's operational period `l_w - e_w`.
    pub fn horizon(&self) -> f64 {
        self.depot().due - self.depot().ready
    }

    pub fn total_demand(&self) -> f64 {
        self.customers().iter().map(|c| c.demand).sum()
    }

    /// Stand-alone instance on the depot plus the given parent customers.
    ///
    /// Local vertex `k + 1` is parent vertex `customers[k]`; matrices are
    /// copied from the parent rather than recomputed.
    pub fn carve(&self, name: impl Into<String>, customers: &[usize], fleet_size: usize) -> Result<Self> {
        let mut indices = Vec::with_capacity(customers.len() + 1);
        indices.push(DEPOT);
        for &c in customers {
            if c == DEPOT || c >= self.vertices.len() {
                return Err(Error::InvalidInstance(format!(
                    "cannot carve customer {c} out of an instance with {} customers",
                    self.num_customers()
                )));
            }
            indices.push(c);
        }
        let instance = Instance {
            name: name.into(),
            vertices: indices.iter().map(|&i| self.vertices[i]).collect(),
            fleet_size,
            capacity: self.capacity,
            convention: self.convention,
            cost: self.cost.submatrix(&indices),
            travel_time: self.travel_time.submatrix(&indices),
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Copy of this instance with another fleet size.
    pub fn with_fleet_size(&self, fleet_size: usize) -> Result<Self> {
        let mut copy = self.clone();
        copy.fleet_size = fleet_size;
        copy.validate()?;
        Ok(copy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn vertex(id: u32, x: f64, y: f64, demand: f64, ready: f64, due: f64, service: f64) -> Vertex {
        Vertex {
            id,
            x,
            y,
            demand,
            ready,
            due,
            service,
        }
    }

    #[test]
    fn matrices_have_zero_diagonal_and_euclidean_entries() {
        let depot = vertex(0, 0.0, 0.0, 0.0, 0.0, 100.0, 0.0);
        let inst = Instance::new(
            "t",
            depot,
            vec![vertex(1, 3.0, 4.0, 1.0, 0.0, 100.0, 0.0), vertex(2, 0.0, 1.0, 1.0, 0.0, 100.0, 0.0)],
            1,
            10.0,
        )
        .unwrap();
        assert_eq!(inst.cost(0, 1), 5.0);
        assert_eq!(inst.travel_time(1, 0), 5.0);
        for i in 0..3 {
            assert_eq!(inst.cost(i, i), 0.0);
        }
    }

    #[test]
    fn rejects_oversized_demand_and_bad_depot() {
        let depot = vertex(0, 0.0, 0.0, 0.0, 0.0, 100.0, 0.0);
        let err = Instance::new("t", depot, vec![vertex(1, 1.0, 1.0, 11.0, 0.0, 10.0, 0.0)], 1, 10.0);
        assert!(err.is_err());
        let bad_depot = vertex(0, 0.0, 0.0, 1.0, 0.0, 100.0, 0.0);
        assert!(Instance::new("t", bad_depot, vec![], 1, 10.0).is_err());
    }

    #[test]
    fn truncated_convention() {
        let a = vertex(0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let b = vertex(1, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(DistanceConvention::TruncatedOneDecimal.distance(&a, &b), 1.4);
    }

    #[test]
    fn carve_keeps_parent_matrix_entries() {
        let depot = vertex(0, 0.0, 0.0, 0.0, 0.0, 100.0, 0.0);
        let cs = (1..=4).map(|i| vertex(i, i as f64, 2.0 * i as f64, 1.0, 0.0, 100.0, 1.0)).collect();
        let inst = Instance::new("p", depot, cs, 2, 10.0).unwrap();
        let sub = inst.carve("p.1", &[4, 2], 1).unwrap();
        assert_eq!(sub.num_customers(), 2);
        assert_eq!(sub.cost(1, 2), inst.cost(4, 2));
        assert_eq!(sub.cost(0, 1), inst.cost(0, 4));
        assert_eq!(sub.vertex(2).id, 2);
    }
}
