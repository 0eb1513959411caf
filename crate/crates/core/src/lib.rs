//! Decompose-route-improve (DRI) toolkit for large vehicle routing problems
//! with time windows (VRPTW).
//!
//! The pipeline clusters customers with a spatial-temporal-demand (STD)
//! dissimilarity, solves each cluster as a stand-alone sub-VRPTW through a
//! pluggable [`routing::RoutingSolver`], merges the route plans and finally
//! runs a similarity-pruned local search across subproblem borders.
//!
//! Index conventions used throughout the crate:
//!
//! * vertex index `0` is the depot, customers are vertices `1..=n`;
//! * similarity matrices and clusterings are indexed by *customer position*
//!   `0..n`, where position `c` is vertex `c + 1`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod clustering;
pub mod decompose;
pub mod error;
pub mod improve;
pub mod instance;
pub mod matrix;
pub mod pipeline;
pub mod routing;
pub mod seed;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};
pub use instance::{
    parse_instance, propagate_schedule, solution_cost, Infeasibility, Instance, ScheduledRoute,
    Solution, Vertex,
};
pub use pipeline::{decompose_instance, run_baseline_metric, run_dri, DriConfig, DriOutcome, RunReport};
