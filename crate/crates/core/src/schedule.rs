//! Forward time simulation of a single route.
//!
//! Standard Solomon semantics: the vehicle leaves the depot at time 0,
//! waiting before a customer's ready time is allowed and costs nothing,
//! and an arrival after a due time is a violation. Infeasible routes are
//! simulated to the end so the repair heuristic can rank candidates by
//! violation count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Ordered customer visits for one vehicle; the depot is implicit at both
/// ends. Invariants: no duplicates, never contains the depot id 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Route {
    customers: Vec<usize>,
}

impl Route {
    pub fn new(customers: Vec<usize>) -> Result<Self> {
        if customers.contains(&0) {
            return Err(Error::InvalidRoute("route contains the depot id 0".into()));
        }
        let mut seen = customers.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRoute("route contains a duplicate customer".into()));
        }
        Ok(Route { customers })
    }

    pub fn empty() -> Self {
        Route { customers: Vec::new() }
    }

    /// Builds without checking invariants; callers guarantee the input is a
    /// permutation of an already-valid route.
    pub(crate) fn from_permutation(customers: Vec<usize>) -> Self {
        debug_assert!(Route::new(customers.clone()).is_ok());
        Route { customers }
    }

    pub fn customers(&self) -> &[usize] {
        &self.customers
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }
}

/// Timing record for one customer stop.
#[derive(Debug, Clone, Serialize)]
pub struct Stop {
    pub node: usize,
    pub arrival: f64,
    pub wait: f64,
    pub departure: f64,
}

/// Result of simulating a route forward in time.
///
/// `violations` counts every stop whose arrival exceeds its due time,
/// including the final depot return; `time_feasible` holds exactly when
/// that count is zero.
#[derive(Debug, Clone, Serialize)]
pub struct Schedule {
    pub stops: Vec<Stop>,
    pub total_distance: f64,
    pub return_arrival: f64,
    pub violations: usize,
    pub time_feasible: bool,
}

impl Schedule {
    /// Arrival events per route: one per customer plus the depot return.
    pub fn stop_count(&self) -> usize {
        self.stops.len() + 1
    }

    /// Share of arrival events that violated their window.
    pub fn violation_proportion(&self) -> f64 {
        self.violations as f64 / self.stop_count() as f64
    }
}

/// Simulates `route` on `instance` starting from the depot at time 0.
pub fn simulate_route(route: &Route, instance: &Instance) -> Result<Schedule> {
    let n = instance.len();
    if let Some(&bad) = route.customers().iter().find(|&&c| c >= n) {
        return Err(Error::UnknownNode(bad));
    }

    let mut stops = Vec::with_capacity(route.len());
    let mut violations = 0usize;
    let mut total_distance = 0.0;
    let mut time = 0.0;
    let mut current = 0usize;

    for &next in route.customers() {
        let leg = instance.cost(current, next);
        total_distance += leg;
        let node = &instance.nodes[next];
        let arrival = time + leg;
        if arrival > node.due_time {
            violations += 1;
        }
        let wait = (node.ready_time - arrival).max(0.0);
        let departure = arrival.max(node.ready_time) + node.service_time;
        stops.push(Stop { node: next, arrival, wait, departure });
        time = departure;
        current = next;
    }

    let mut return_arrival = 0.0;
    if !route.is_empty() {
        let leg = instance.cost(current, 0);
        total_distance += leg;
        return_arrival = time + leg;
        if return_arrival > instance.nodes[0].due_time {
            violations += 1;
        }
    }

    Ok(Schedule {
        stops,
        total_distance,
        return_arrival,
        violations,
        time_feasible: violations == 0,
    })
}

/// Allocation-free cost/violation walk used by the search loops. Must stay
/// in exact agreement with [`simulate_route`]; a unit test enforces this.
pub(crate) fn evaluate_order(instance: &Instance, order: &[usize]) -> (f64, usize) {
    if order.is_empty() {
        return (0.0, 0);
    }
    let mut total_distance = 0.0;
    let mut violations = 0usize;
    let mut time = 0.0;
    let mut current = 0usize;
    for &next in order {
        let leg = instance.cost(current, next);
        total_distance += leg;
        let node = &instance.nodes[next];
        let arrival = time + leg;
        if arrival > node.due_time {
            violations += 1;
        }
        time = arrival.max(node.ready_time) + node.service_time;
        current = next;
    }
    let leg = instance.cost(current, 0);
    total_distance += leg;
    if time + leg > instance.nodes[0].due_time {
        violations += 1;
    }
    (total_distance, violations)
}

/// Distance of the closed tour depot → customers → depot; 0 for the empty
/// route.
pub fn route_cost(route: &Route, instance: &Instance) -> f64 {
    let customers = route.customers();
    if customers.is_empty() {
        return 0.0;
    }
    let mut cost = instance.cost(0, customers[0]);
    for pair in customers.windows(2) {
        cost += instance.cost(pair[0], pair[1]);
    }
    cost + instance.cost(customers[customers.len() - 1], 0)
}

/// Total demand over the route's customers.
pub fn route_demand(route: &Route, instance: &Instance) -> f64 {
    route.customers().iter().map(|&c| instance.nodes[c].demand).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{load_instance, Instance};
    use crate::testutil::{node, solomon_path};
    use proptest::prelude::*;

    fn windowed_instance() -> Instance {
        // one customer 5 away with ready 10, service 2
        let nodes = vec![
            node(0, 0.0, 0.0, 0.0, 0.0, 100.0, 0.0),
            node(1, 5.0, 0.0, 1.0, 10.0, 30.0, 2.0),
        ];
        Instance::new("W".into(), 1, 10.0, nodes)
    }

    #[test]
    fn empty_route() {
        let instance = windowed_instance();
        let schedule = simulate_route(&Route::empty(), &instance).unwrap();
        assert_eq!(schedule.total_distance, 0.0);
        assert_eq!(schedule.violations, 0);
        assert!(schedule.time_feasible);
        assert_eq!(route_cost(&Route::empty(), &instance), 0.0);
        assert_eq!(route_demand(&Route::empty(), &instance), 0.0);
    }

    #[test]
    fn waiting_before_ready_time() {
        let instance = windowed_instance();
        let route = Route::new(vec![1]).unwrap();
        let schedule = simulate_route(&route, &instance).unwrap();
        let stop = &schedule.stops[0];
        assert_eq!(stop.arrival, 5.0);
        assert_eq!(stop.wait, 5.0);
        assert_eq!(stop.departure, 12.0);
        assert_eq!(schedule.return_arrival, 17.0);
        assert!(schedule.time_feasible);
    }

    #[test]
    fn single_customer_out_and_back() {
        let instance = windowed_instance();
        let route = Route::new(vec![1]).unwrap();
        assert_eq!(route_cost(&route, &instance), 10.0);
        assert_eq!(route_demand(&route, &instance), 1.0);
    }

    #[test]
    fn unknown_node_rejected() {
        let instance = windowed_instance();
        let route = Route::new(vec![7]).unwrap();
        assert!(matches!(simulate_route(&route, &instance), Err(crate::error::Error::UnknownNode(7))));
    }

    #[test]
    fn route_invariants_enforced() {
        assert!(Route::new(vec![1, 2, 1]).is_err());
        assert!(Route::new(vec![0, 1]).is_err());
    }

    // Frozen from a spreadsheet-style recomputation of the published C101
    // rows: visit order 5, 3, 4, 2, 1 waits twice and stays feasible; the
    // reverse order misses four windows and the depot horizon.
    #[test]
    fn c101_five_stop_schedule_matches_recomputation() {
        let instance = load_instance(&solomon_path("C101")).unwrap();
        let route = Route::new(vec![5, 3, 4, 2, 1]).unwrap();
        let schedule = simulate_route(&route, &instance).unwrap();
        let expected = [
            (5, 15.132745950421556, 0.0, 105.13274595042155),
            (3, 106.13274595042155, 0.0, 196.13274595042157),
            (4, 198.13274595042157, 528.8672540495784, 817.0),
            (2, 820.605551275464, 4.394448724536005, 915.0),
            (1, 917.0, 0.0, 1007.0),
        ];
        for (stop, (node, arrival, wait, departure)) in schedule.stops.iter().zip(expected) {
            assert_eq!(stop.node, node);
            assert_eq!(stop.arrival, arrival);
            assert_eq!(stop.wait, wait);
            assert_eq!(stop.departure, departure);
        }
        assert_eq!(schedule.return_arrival, 1025.6815416922693);
        assert_eq!(schedule.total_distance, 42.41983891815495);
        assert_eq!(schedule.violations, 0);

        let reversed = Route::new(vec![1, 2, 4, 3, 5]).unwrap();
        let bad = simulate_route(&reversed, &instance).unwrap();
        assert_eq!(bad.violations, 5);
        assert!(!bad.time_feasible);
        // reversal keeps the distance (symmetric matrix)
        assert_eq!(bad.total_distance, schedule.total_distance);
    }

    #[test]
    fn c101_total_demand_is_1810() {
        let instance = load_instance(&solomon_path("C101")).unwrap();
        let all: Vec<usize> = instance.customers().collect();
        let route = Route::new(all).unwrap();
        assert_eq!(route_demand(&route, &instance), 1810.0);
    }

    #[test]
    fn three_customer_cost_matches_edge_summation() {
        let instance = load_instance(&solomon_path("C101")).unwrap();
        let route = Route::new(vec![7, 2, 9]).unwrap();
        let expected =
            instance.cost(0, 7) + instance.cost(7, 2) + instance.cost(2, 9) + instance.cost(9, 0);
        assert_eq!(route_cost(&route, &instance), expected);
    }

    /// Brute-force simulator written independently of `simulate_route`:
    /// recursive instead of iterative, tracking only feasibility.
    fn brute_force_feasible(order: &[usize], instance: &Instance) -> bool {
        fn go(order: &[usize], k: usize, prev: usize, depart: f64, instance: &Instance) -> bool {
            if k == order.len() {
                return depart + instance.cost(prev, 0) <= instance.nodes[0].due_time;
            }
            let c = order[k];
            let arrive = depart + instance.cost(prev, c);
            if arrive > instance.nodes[c].due_time {
                return false;
            }
            let leave = arrive.max(instance.nodes[c].ready_time) + instance.nodes[c].service_time;
            go(order, k + 1, c, leave, instance)
        }
        go(order, 0, 0, 0.0, instance)
    }

    #[test]
    fn feasibility_agrees_with_brute_force_on_all_permutations() {
        let instance = load_instance(&solomon_path("R101")).unwrap();
        let customers = [1usize, 2, 3, 4, 5, 6];
        let mut checked = 0;
        permute(&customers, &mut |order| {
            let route = Route::new(order.to_vec()).unwrap();
            let schedule = simulate_route(&route, &instance).unwrap();
            assert_eq!(schedule.time_feasible, brute_force_feasible(order, &instance));
            checked += 1;
        });
        assert_eq!(checked, 720);
    }

    /// Heap's algorithm, test-local.
    fn permute(items: &[usize], visit: &mut impl FnMut(&[usize])) {
        fn heap(k: usize, arr: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
            if k <= 1 {
                visit(arr);
                return;
            }
            for i in 0..k {
                heap(k - 1, arr, visit);
                if k % 2 == 0 {
                    arr.swap(i, k - 1);
                } else {
                    arr.swap(0, k - 1);
                }
            }
        }
        let mut arr = items.to_vec();
        heap(arr.len(), &mut arr, visit);
    }

    proptest! {
        #[test]
        fn evaluate_order_agrees_with_simulation(indices in proptest::collection::vec(1usize..=100, 0..20)) {
            let instance = load_instance(&solomon_path("R105")).unwrap();
            let mut unique = indices;
            unique.sort_unstable();
            unique.dedup();
            let route = Route::new(unique.clone()).unwrap();
            let schedule = simulate_route(&route, &instance).unwrap();
            let (cost, violations) = evaluate_order(&instance, &unique);
            prop_assert_eq!(cost, schedule.total_distance);
            prop_assert_eq!(violations, schedule.violations);
        }

        #[test]
        fn cost_invariant_under_reversal(indices in proptest::collection::vec(1usize..=100, 1..12)) {
            let instance = load_instance(&solomon_path("RC101")).unwrap();
            let mut unique = indices;
            unique.sort_unstable();
            unique.dedup();
            let forward = Route::new(unique.clone()).unwrap();
            unique.reverse();
            let backward = Route::new(unique).unwrap();
            // summation order flips with the route, so allow rounding slack
            let f = route_cost(&forward, &instance);
            let b = route_cost(&backward, &instance);
            prop_assert!((f - b).abs() <= 1e-9 * f.max(1.0));
        }

        #[test]
        fn simulated_distance_equals_route_cost(indices in proptest::collection::vec(1usize..=100, 0..15)) {
            let instance = load_instance(&solomon_path("C207")).unwrap();
            let mut unique = indices;
            unique.sort_unstable();
            unique.dedup();
            let route = Route::new(unique).unwrap();
            let schedule = simulate_route(&route, &instance).unwrap();
            prop_assert_eq!(schedule.total_distance, route_cost(&route, &instance));
        }

        #[test]
        fn raising_ready_time_never_lowers_arrivals(
            indices in proptest::collection::vec(1usize..=100, 2..10),
            bump_pos in 0usize..8,
            bump in 1.0f64..200.0,
        ) {
            let instance = load_instance(&solomon_path("C102")).unwrap();
            let mut unique = indices;
            unique.sort_unstable();
            unique.dedup();
            prop_assume!(unique.len() >= 2);
            let route = Route::new(unique.clone()).unwrap();
            let before = simulate_route(&route, &instance).unwrap();

            let mut bumped = instance.clone();
            let victim = unique[bump_pos % unique.len()];
            bumped.nodes[victim].ready_time += bump;
            bumped.nodes[victim].due_time = bumped.nodes[victim].due_time.max(bumped.nodes[victim].ready_time);
            let after = simulate_route(&route, &bumped).unwrap();

            for (s_before, s_after) in before.stops.iter().zip(after.stops.iter()) {
                prop_assert!(s_after.arrival >= s_before.arrival - 1e-12);
            }
            prop_assert!(after.return_arrival >= before.return_arrival - 1e-12);
        }
    }
}
