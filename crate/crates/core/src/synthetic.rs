//! Seeded synthetic VRPTW instances in the style of the Solomon generator.
//!
//! Windows are always reachable: `e_i >= e_w + t_0i` and
//! `l_i + s_i + t_i0 <= l_w`, so every customer can be served on its own
//! route and the only binding constraints of a sequence are those between
//! its customers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{Instance, Vertex};
use crate::seed::{stream_rng, STREAM_SYNTHETIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Uniform over the square.
    Random,
    /// Dense blobs around four random centres.
    Clustered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub customers: usize,
    pub seed: u64,
    pub layout: Layout,
    /// Side length of the square; the depot sits in the centre.
    pub extent: f64,
    pub horizon: f64,
    pub capacity: f64,
    pub fleet: usize,
    /// Demands are drawn uniformly from `1..=max_demand`.
    pub max_demand: u32,
    pub service: f64,
    /// Window widths are drawn uniformly from this range.
    pub window_width: (f64, f64),
    /// Share of customers whose window spans the full reachable horizon.
    pub wide_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            customers: 50,
            seed: 0,
            layout: Layout::Random,
            extent: 100.0,
            horizon: 1000.0,
            capacity: 200.0,
            fleet: 25,
            max_demand: 30,
            service: 10.0,
            window_width: (60.0, 240.0),
            wide_fraction: 0.25,
        }
    }
}

impl SyntheticSpec {
    pub fn with_customers(customers: usize, seed: u64) -> Self {
        SyntheticSpec {
            customers,
            seed,
            fleet: customers.max(1),
            ..Default::default()
        }
    }

    pub fn generate(&self) -> Result<Instance> {
        let mut rng = stream_rng(self.seed, STREAM_SYNTHETIC);
        let centre = self.extent / 2.0;
        let depot = Vertex {
            id: 0,
            x: centre,
            y: centre,
            demand: 0.0,
            ready: 0.0,
            due: self.horizon,
            service: 0.0,
        };
        let blobs: Vec<(f64, f64)> = (0..4)
            .map(|_| (rng.random_range(0.1..0.9) * self.extent, rng.random_range(0.1..0.9) * self.extent))
            .collect();
        let mut customers = Vec::with_capacity(self.customers);
        for id in 1..=self.customers {
            let (x, y) = match self.layout {
                Layout::Random => (
                    rng.random_range(0.0..self.extent),
                    rng.random_range(0.0..self.extent),
                ),
                Layout::Clustered => {
                    let (bx, by) = blobs[rng.random_range(0..blobs.len())];
                    let spread = self.extent * 0.05;
                    let dx: f64 = rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0);
                    let dy: f64 = rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0);
                    (
                        (bx + dx * spread).clamp(0.0, self.extent),
                        (by + dy * spread).clamp(0.0, self.extent),
                    )
                }
            };
            let travel = (x - centre).hypot(y - centre);
            let earliest = depot.ready + travel;
            // Margin keeps `l_i + s_i + t_i0 <= l_w` exact under rounding.
            let latest = (self.horizon - self.service - travel - 1e-6).max(earliest);
            let (ready, due) = if rng.random_bool(self.wide_fraction.clamp(0.0, 1.0)) {
                (earliest, latest)
            } else {
                let mid = rng.random_range(earliest..=latest);
                let half = rng.random_range(self.window_width.0..=self.window_width.1) / 2.0;
                ((mid - half).max(earliest), (mid + half).min(latest))
            };
            customers.push(Vertex {
                id: id as u32,
                x,
                y,
                demand: rng.random_range(1..=self.max_demand) as f64,
                ready,
                due,
                service: self.service,
            });
        }
        Instance::new(
            format!("SYN_{}_{}", self.customers, self.seed),
            depot,
            customers,
            self.fleet,
            self.capacity,
        )
    }
}
