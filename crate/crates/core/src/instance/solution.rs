use serde::{Deserialize, Serialize};

use super::schedule::{schedule_lenient, Infeasibility, ScheduledRoute};
use super::Instance;
use crate::error::{Error, Result};

/// A constraint violation found while checking a whole solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Route { route: usize, detail: Infeasibility },
    MissingCustomer { customer: usize },
    RepeatedCustomer { customer: usize },
    FleetExceeded { routes: usize, fleet: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub time_windows: bool,
    pub capacity: bool,
    pub depot_closing: bool,
    /// Every customer visited exactly once.
    pub coverage: bool,
    /// Route count does not exceed the fleet.
    pub fleet: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    /// Route-level and coverage feasibility; fleet overflow is reported separately.
    pub fn is_feasible(&self) -> bool {
        self.time_windows && self.capacity && self.depot_closing && self.coverage
    }
}

/// A set of scheduled routes for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub instance: String,
    pub fleet_size: usize,
    pub total_cost: f64,
    pub routes: Vec<ScheduledRoute>,
    pub feasibility: FeasibilityReport,
}

impl Solution {
    /// Schedules every `(visits, origin)` pair and checks the whole plan.
    /// Empty sequences are dropped.
    pub fn from_sequences(instance: &Instance, sequences: Vec<(Vec<usize>, usize)>) -> Self {
        let n = instance.num_customers();
        let mut counts = vec![0usize; n + 1];
        let mut violations = Vec::new();
        let mut routes = Vec::with_capacity(sequences.len());
        for (visits, origin) in sequences.into_iter().filter(|(v, _)| !v.is_empty()) {
            let vehicle = routes.len();
            let (mut route, problems) = schedule_lenient(instance, &visits);
            route.vehicle = vehicle;
            route.origin = origin;
            for &c in &route.visits {
                counts[c] += 1;
            }
            violations.extend(
                problems
                    .into_iter()
                    .filter(|p| !matches!(p, Infeasibility::DuplicateVisit { .. }))
                    .map(|detail| Violation::Route { route: vehicle, detail }),
            );
            routes.push(route);
        }
        for (customer, &count) in counts.iter().enumerate().skip(1) {
            match count {
                0 => violations.push(Violation::MissingCustomer { customer }),
                1 => {}
                _ => violations.push(Violation::RepeatedCustomer { customer }),
            }
        }
        if routes.len() > instance.fleet_size() {
            violations.push(Violation::FleetExceeded {
                routes: routes.len(),
                fleet: instance.fleet_size(),
            });
        }
        let has = |f: &dyn Fn(&Violation) -> bool| violations.iter().any(f);
        let feasibility = FeasibilityReport {
            time_windows: !has(&|v| matches!(v, Violation::Route { detail: Infeasibility::TimeWindow { .. }, .. })),
            capacity: !has(&|v| matches!(v, Violation::Route { detail: Infeasibility::Capacity { .. }, .. })),
            depot_closing: !has(&|v| matches!(v, Violation::Route { detail: Infeasibility::DepotClosing { .. }, .. })),
            coverage: !has(&|v| {
                matches!(
                    v,
                    Violation::MissingCustomer { .. }
                        | Violation::RepeatedCustomer { .. }
                        | Violation::Route { detail: Infeasibility::UnknownCustomer { .. }, .. }
                )
            }),
            fleet: !has(&|v| matches!(v, Violation::FleetExceeded { .. })),
            violations,
        };
        let total_cost = routes.iter().map(|r| r.distance).sum();
        Solution {
            instance: instance.name().to_string(),
            fleet_size: instance.fleet_size(),
            total_cost,
            routes,
            feasibility,
        }
    }

    pub fn empty(instance: &Instance) -> Self {
        Self::from_sequences(instance, Vec::new())
    }

    /// Re-checks this solution's visit sequences against `instance`.
    pub fn reevaluate(&self, instance: &Instance) -> Self {
        Self::from_sequences(
            instance,
            self.routes.iter().map(|r| (r.visits.clone(), r.origin)).collect(),
        )
    }

    pub fn is_feasible(&self) -> bool {
        self.feasibility.is_feasible()
    }

    pub fn is_fleet_feasible(&self) -> bool {
        self.feasibility.fleet
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    /// Total cost rounded to two decimals for reporting.
    pub fn rounded_cost(&self) -> f64 {
        (self.total_cost * 100.0).round() / 100.0
    }

    pub fn sequences(&self) -> Vec<Vec<usize>> {
        self.routes.iter().map(|r| r.visits.clone()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads a solution document and re-evaluates its visit sequences on
    /// `instance`. Only `routes[].visits` (and optional `origin`) are trusted.
    pub fn from_json(instance: &Instance, text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct RouteDoc {
            visits: Vec<usize>,
            #[serde(default)]
            origin: usize,
        }
        #[derive(Deserialize)]
        struct Doc {
            routes: Vec<RouteDoc>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        let n = instance.num_customers();
        if let Some(bad) = doc.routes.iter().flat_map(|r| &r.visits).find(|&&c| c == 0 || c > n) {
            return Err(Error::InvalidInstance(format!("solution visits unknown customer {bad}")));
        }
        Ok(Self::from_sequences(
            instance,
            doc.routes.into_iter().map(|r| (r.visits, r.origin)).collect(),
        ))
    }
}

/// Total distance `Z`, re-summed over the route edges.
pub fn solution_cost(instance: &Instance, solution: &Solution) -> f64 {
    solution
        .routes
        .iter()
        .map(|r| super::schedule::sequence_distance(instance, r.visits.iter().copied()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Vertex;

    fn inst() -> Instance {
        let mk = |id, x: f64, y: f64| Vertex {
            id,
            x,
            y,
            demand: 1.0,
            ready: 0.0,
            due: 100.0,
            service: 0.0,
        };
        let mut depot = mk(0, 0.0, 0.0);
        depot.demand = 0.0;
        Instance::new("s", depot, vec![mk(1, 7.0, 0.0), mk(2, 0.0, 3.0), mk(3, 0.0, -3.0)], 2, 10.0).unwrap()
    }

    #[test]
    fn empty_solution_costs_nothing() {
        let i = inst();
        let s = Solution::empty(&i);
        assert_eq!(s.total_cost, 0.0);
        assert_eq!(solution_cost(&i, &s), 0.0);
        assert!(!s.feasibility.coverage);
    }

    #[test]
    fn single_out_and_back_route() {
        let i = inst();
        let s = Solution::from_sequences(&i, vec![(vec![1], 0), (vec![2, 3], 0)]);
        assert_eq!(s.routes[0].distance, 14.0);
        assert_eq!(s.total_cost, 14.0 + 12.0);
        assert!(s.is_feasible() && s.is_fleet_feasible());
    }

    #[test]
    fn fleet_overflow_is_flagged_not_rejected() {
        let i = inst();
        let s = Solution::from_sequences(&i, vec![(vec![1], 0), (vec![2], 0), (vec![3], 1)]);
        assert!(s.is_feasible());
        assert!(!s.is_fleet_feasible());
        assert_eq!(s.route_count(), 3);
    }

    #[test]
    fn repeated_and_missing_customers() {
        let i = inst();
        let s = Solution::from_sequences(&i, vec![(vec![1, 2], 0), (vec![2], 0)]);
        assert!(!s.feasibility.coverage);
        assert!(s.feasibility.violations.contains(&Violation::MissingCustomer { customer: 3 }));
        assert!(s.feasibility.violations.contains(&Violation::RepeatedCustomer { customer: 2 }));
    }

    #[test]
    fn json_round_trip_reevaluates() {
        let i = inst();
        let s = Solution::from_sequences(&i, vec![(vec![1], 0), (vec![3, 2], 1)]);
        let back = Solution::from_json(&i, &s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(Solution::from_json(&i, r#"{"routes":[{"visits":[9]}]}"#).is_err());
    }
}
