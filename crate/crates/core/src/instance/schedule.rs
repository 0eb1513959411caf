use serde::{Deserialize, Serialize};

use super::{Instance, DEPOT};

/// First constraint a visit sequence violates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Infeasibility {
    TimeWindow {
        customer: usize,
        position: usize,
        start: f64,
        due: f64,
    },
    Capacity {
        customer: usize,
        position: usize,
        load: f64,
        capacity: f64,
    },
    DepotClosing {
        arrival: f64,
        closing: f64,
    },
    DuplicateVisit {
        customer: usize,
    },
    UnknownCustomer {
        customer: usize,
    },
}

impl Infeasibility {
    pub fn reason(&self) -> &'static str {
        match self {
            Infeasibility::TimeWindow { .. } => "time_window",
            Infeasibility::Capacity { .. } => "capacity",
            Infeasibility::DepotClosing { .. } => "depot_closing",
            Infeasibility::DuplicateVisit { .. } => "duplicate_visit",
            Infeasibility::UnknownCustomer { .. } => "unknown_customer",
        }
    }
}

/// A route with its forward schedule. The depot is implicit at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledRoute {
    pub vehicle: usize,
    /// Subproblem that produced the route.
    pub origin: usize,
    pub visits: Vec<usize>,
    /// Start of service per visit.
    pub start_times: Vec<f64>,
    pub load: f64,
    pub distance: f64,
    /// Arrival time back at the depot.
    pub return_time: f64,
}

impl ScheduledRoute {
    pub fn utilization(&self, capacity: f64) -> f64 {
        self.load / capacity
    }
}

/// Forward recursion `T_j = max(e_j, T_i + s_i + t_ij)` from departure `e_w`.
///
/// Returns the schedule, or the first violated constraint in visit order.
/// Within one visit the capacity check precedes the time-window check.
pub fn propagate_schedule(instance: &Instance, visits: &[usize]) -> Result<ScheduledRoute, Infeasibility> {
    let (route, violations) = schedule_lenient(instance, visits);
    match violations.into_iter().next() {
        Some(v) => Err(v),
        None => Ok(route),
    }
}

/// Like [`propagate_schedule`] but keeps going past violations, returning
/// every one of them alongside the (possibly infeasible) schedule.
pub fn schedule_lenient(instance: &Instance, visits: &[usize]) -> (ScheduledRoute, Vec<Infeasibility>) {
    let mut violations = Vec::new();
    let n = instance.num_customers();
    let mut seen = vec![false; n + 1];
    let depot = instance.depot();
    let capacity = instance.capacity();
    let mut start_times = Vec::with_capacity(visits.len());
    let mut leave = depot.ready;
    let mut load = 0.0;
    let mut distance = 0.0;
    let mut prev = DEPOT;
    let mut valid_visits = Vec::with_capacity(visits.len());

    for (position, &customer) in visits.iter().enumerate() {
        if customer == DEPOT || customer > n {
            violations.push(Infeasibility::UnknownCustomer { customer });
            continue;
        }
        if std::mem::replace(&mut seen[customer], true) {
            violations.push(Infeasibility::DuplicateVisit { customer });
        }
        let v = instance.vertex(customer);
        let arrival = leave + instance.travel_time(prev, customer);
        let time = arrival.max(v.ready);
        distance += instance.cost(prev, customer);
        load += v.demand;
        if load > capacity {
            violations.push(Infeasibility::Capacity {
                customer,
                position,
                load,
                capacity,
            });
        }
        if time > v.due {
            violations.push(Infeasibility::TimeWindow {
                customer,
                position,
                start: time,
                due: v.due,
            });
        }
        start_times.push(time);
        valid_visits.push(customer);
        leave = time + v.service;
        prev = customer;
    }
    distance += instance.cost(prev, DEPOT);
    let return_time = leave + instance.travel_time(prev, DEPOT);
    if return_time > depot.due {
        violations.push(Infeasibility::DepotClosing {
            arrival: return_time,
            closing: depot.due,
        });
    }
    let route = ScheduledRoute {
        vehicle: 0,
        origin: 0,
        visits: valid_visits,
        start_times,
        load,
        distance,
        return_time,
    };
    (route, violations)
}

/// Allocation-free feasibility check for local search.
///
/// Returns `(distance, load)` when the sequence is time-window, capacity and
/// depot-closing feasible; the empty sequence costs nothing. Distinctness of
/// the visits is the caller's responsibility.
pub fn evaluate_sequence<I>(instance: &Instance, visits: I) -> Option<(f64, f64)>
where
    I: IntoIterator<Item = usize>,
{
    let depot = instance.depot();
    let capacity = instance.capacity();
    let mut leave = depot.ready;
    let mut load = 0.0;
    let mut distance = 0.0;
    let mut prev = DEPOT;
    let mut empty = true;
    for customer in visits {
        empty = false;
        let v = instance.vertex(customer);
        load += v.demand;
        if load > capacity {
            return None;
        }
        let time = (leave + instance.travel_time(prev, customer)).max(v.ready);
        if time > v.due {
            return None;
        }
        distance += instance.cost(prev, customer);
        leave = time + v.service;
        prev = customer;
    }
    if empty {
        return Some((0.0, 0.0));
    }
    if leave + instance.travel_time(prev, DEPOT) > depot.due {
        return None;
    }
    Some((distance + instance.cost(prev, DEPOT), load))
}

/// Distance of a sequence without any feasibility checks.
pub fn sequence_distance<I>(instance: &Instance, visits: I) -> f64
where
    I: IntoIterator<Item = usize>,
{
    let mut prev = DEPOT;
    let mut distance = 0.0;
    for customer in visits {
        distance += instance.cost(prev, customer);
        prev = customer;
    }
    if prev == DEPOT {
        0.0
    } else {
        distance + instance.cost(prev, DEPOT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Vertex;

    fn v(id: u32, x: f64, demand: f64, ready: f64, due: f64, service: f64) -> Vertex {
        Vertex {
            id,
            x,
            y: 0.0,
            demand,
            ready,
            due,
            service,
        }
    }

    fn line_instance(customers: Vec<Vertex>, capacity: f64) -> Instance {
        Instance::new("line", v(0, 0.0, 0.0, 0.0, 1000.0, 0.0), customers, 3, capacity).unwrap()
    }

    #[test]
    fn waits_for_window_opening() {
        let inst = line_instance(vec![v(1, 4.0, 1.0, 10.0, 20.0, 0.0)], 10.0);
        let r = propagate_schedule(&inst, &[1]).unwrap();
        assert_eq!(r.start_times, vec![10.0]);
        assert_eq!(r.distance, 8.0);
        assert_eq!(r.return_time, 14.0);
    }

    #[test]
    fn capacity_violation_is_reported() {
        let inst = line_instance(vec![v(1, 1.0, 6.0, 0.0, 100.0, 0.0), v(2, 2.0, 6.0, 0.0, 100.0, 0.0)], 10.0);
        let err = propagate_schedule(&inst, &[1, 2]).unwrap_err();
        assert_eq!(err.reason(), "capacity");
    }

    #[test]
    fn late_arrival_and_depot_closing() {
        let inst = line_instance(vec![v(1, 10.0, 1.0, 0.0, 5.0, 0.0), v(2, 400.0, 1.0, 0.0, 900.0, 300.0)], 10.0);
        assert!(matches!(
            propagate_schedule(&inst, &[1]),
            Err(Infeasibility::TimeWindow { customer: 1, .. })
        ));
        assert!(matches!(
            propagate_schedule(&inst, &[2]),
            Err(Infeasibility::DepotClosing { .. })
        ));
        assert!(evaluate_sequence(&inst, [2]).is_none());
    }

    #[test]
    fn duplicates_and_unknown_ids_are_structured_errors() {
        let inst = line_instance(vec![v(1, 1.0, 1.0, 0.0, 100.0, 0.0)], 10.0);
        assert!(matches!(
            propagate_schedule(&inst, &[1, 1]),
            Err(Infeasibility::DuplicateVisit { customer: 1 })
        ));
        assert!(matches!(
            propagate_schedule(&inst, &[7]),
            Err(Infeasibility::UnknownCustomer { customer: 7 })
        ));
    }

    #[test]
    fn fast_path_agrees_with_full_propagation() {
        let inst = line_instance(
            vec![
                v(1, 3.0, 2.0, 0.0, 50.0, 2.0),
                v(2, 6.0, 2.0, 20.0, 30.0, 2.0),
                v(3, 1.0, 2.0, 0.0, 40.0, 2.0),
            ],
            10.0,
        );
        for seq in [vec![1, 2, 3], vec![3, 1, 2], vec![2, 3, 1], vec![2, 1, 3]] {
            let fast = evaluate_sequence(&inst, seq.iter().copied());
            let full = propagate_schedule(&inst, &seq);
            assert_eq!(fast.is_some(), full.is_ok(), "{seq:?}");
            if let (Some((d, _)), Ok(r)) = (fast, full) {
                assert_eq!(d, r.distance);
            }
        }
        assert_eq!(evaluate_sequence(&inst, std::iter::empty()), Some((0.0, 0.0)));
    }
}
