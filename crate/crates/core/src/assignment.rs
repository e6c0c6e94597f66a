//! The assignment phase: which customers share a vehicle.
//!
//! An initial solution comes from parallel Clarke-Wright savings merges that
//! respect both capacity and time windows. Tabu search then moves customers
//! between routes (relocate and pairwise exchange, best feasible insertion
//! position per move), keeping every touched route strictly feasible;
//! diversification through infeasibility is delegated entirely to the
//! sequencing/repair path, which is invoked periodically on the incumbent
//! best solution's routes.

use serde::Serialize;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::report::ViolationReport;
use crate::schedule::{evaluate_order, route_cost, route_demand, Route};
use crate::sequencer::{sequence_route, RouteCache, SequencerBackend};

/// Set of routes covering every customer exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub total_distance: f64,
    pub capacity_feasible: bool,
    pub time_feasible: bool,
}

impl Solution {
    /// Computes distance and feasibility flags from the routes.
    pub fn evaluate(routes: Vec<Route>, instance: &Instance) -> Solution {
        let mut total_distance = 0.0;
        let mut capacity_feasible = true;
        let mut time_feasible = true;
        for route in &routes {
            let (cost, violations) = evaluate_order(instance, route.customers());
            total_distance += cost;
            if violations > 0 {
                time_feasible = false;
            }
            if route_demand(route, instance) > instance.capacity {
                capacity_feasible = false;
            }
        }
        Solution { routes, total_distance, capacity_feasible, time_feasible }
    }

    pub fn is_feasible(&self) -> bool {
        self.capacity_feasible && self.time_feasible
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }
}

/// Tabu search knobs. The search itself is deterministic given its inputs;
/// `seed` is the root seed the caller uses to derive backend randomness.
#[derive(Debug, Clone)]
pub struct TabuParams {
    pub tenure: usize,
    pub max_iterations: usize,
    pub no_improve_limit: usize,
    pub seed: u64,
    /// Iterations between sequencing passes over the best solution's routes.
    pub sequence_period: usize,
}

impl Default for TabuParams {
    fn default() -> Self {
        TabuParams {
            tenure: 15,
            max_iterations: 2000,
            no_improve_limit: 400,
            seed: 1,
            sequence_period: 50,
        }
    }
}

/// A candidate neighborhood step. Positions refer to the state the move is
/// applied to: removal positions first, then insertion positions after the
/// removals. Applying and undoing a move restores the route lists exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Relocate {
        customer: usize,
        from_route: usize,
        from_pos: usize,
        to_route: usize,
        to_pos: usize,
    },
    Exchange {
        first: usize,
        first_route: usize,
        first_pos: usize,
        /// insertion position of `second` in `first_route` after removal
        first_insert: usize,
        second: usize,
        second_route: usize,
        second_pos: usize,
        /// insertion position of `first` in `second_route` after removal
        second_insert: usize,
    },
}

impl Move {
    pub fn kind(&self) -> &'static str {
        match self {
            Move::Relocate { .. } => "relocate",
            Move::Exchange { .. } => "exchange",
        }
    }
}

/// Applies `mv` to raw route lists.
pub fn apply_move(routes: &mut [Vec<usize>], mv: &Move) {
    match *mv {
        Move::Relocate { customer, from_route, from_pos, to_route, to_pos } => {
            let removed = routes[from_route].remove(from_pos);
            debug_assert_eq!(removed, customer);
            routes[to_route].insert(to_pos, customer);
        }
        Move::Exchange {
            first,
            first_route,
            first_pos,
            first_insert,
            second,
            second_route,
            second_pos,
            second_insert,
        } => {
            let removed = routes[first_route].remove(first_pos);
            debug_assert_eq!(removed, first);
            let removed = routes[second_route].remove(second_pos);
            debug_assert_eq!(removed, second);
            routes[first_route].insert(first_insert, second);
            routes[second_route].insert(second_insert, first);
        }
    }
}

/// Reverses [`apply_move`], restoring the lists bit-exactly.
pub fn undo_move(routes: &mut [Vec<usize>], mv: &Move) {
    match *mv {
        Move::Relocate { customer, from_route, from_pos, to_route, to_pos } => {
            let removed = routes[to_route].remove(to_pos);
            debug_assert_eq!(removed, customer);
            routes[from_route].insert(from_pos, customer);
        }
        Move::Exchange {
            first,
            first_route,
            first_pos,
            first_insert,
            second,
            second_route,
            second_pos,
            second_insert,
        } => {
            let removed = routes[second_route].remove(second_insert);
            debug_assert_eq!(removed, first);
            let removed = routes[first_route].remove(first_insert);
            debug_assert_eq!(removed, second);
            routes[second_route].insert(second_pos, second);
            routes[first_route].insert(first_pos, first);
        }
    }
}

/// Parallel savings construction.
///
/// Starts with one out-and-back route per customer and repeatedly applies
/// the largest-savings merge `s(i,j) = c(0,i) + c(0,j) − c(i,j)` whose merged
/// route stays capacity- and time-feasible. Merges only join a route tail to
/// a route head (no segment reversal), so the single sorted pass is
/// equivalent to repeated best-merge selection: skipped pairs can never
/// become feasible later.
pub fn clarke_wright(instance: &Instance) -> Result<Solution> {
    let n = instance.len();
    let mut routes: Vec<Vec<usize>> = Vec::with_capacity(n.saturating_sub(1));
    for c in 1..n {
        if instance.nodes[c].demand > instance.capacity {
            return Err(Error::InstanceInfeasible {
                customer: c,
                reason: format!(
                    "demand {} exceeds capacity {}",
                    instance.nodes[c].demand, instance.capacity
                ),
            });
        }
        let (_, violations) = evaluate_order(instance, &[c]);
        if violations > 0 {
            return Err(Error::InstanceInfeasible {
                customer: c,
                reason: "out-and-back route violates its time window".into(),
            });
        }
        routes.push(vec![c]);
    }

    struct Saving {
        i: usize,
        j: usize,
        value: f64,
    }
    let mut savings = Vec::with_capacity((n - 1) * n.saturating_sub(2) / 2);
    for i in 1..n {
        for j in (i + 1)..n {
            savings.push(Saving {
                i,
                j,
                value: instance.cost(0, i) + instance.cost(0, j) - instance.cost(i, j),
            });
        }
    }
    savings.sort_by(|a, b| {
        b.value.total_cmp(&a.value).then_with(|| (a.i, a.j).cmp(&(b.i, b.j)))
    });

    let mut route_of: Vec<usize> = (0..n).map(|c| c.saturating_sub(1)).collect();
    let mut loads: Vec<f64> = routes.iter().map(|r| instance.nodes[r[0]].demand).collect();
    let mut alive: Vec<bool> = vec![true; routes.len()];
    let mut merged = Vec::new();

    for saving in &savings {
        let ri = route_of[saving.i];
        let rj = route_of[saving.j];
        if ri == rj {
            continue;
        }
        if loads[ri] + loads[rj] > instance.capacity {
            continue;
        }
        // orientation: connect a route tail to a route head
        let attempts: [(usize, usize); 2] =
            if routes[ri].last() == Some(&saving.i) && routes[rj].first() == Some(&saving.j) {
                [(ri, rj), (rj, ri)]
            } else {
                [(rj, ri), (ri, rj)]
            };
        let mut applied = false;
        for (head, tail) in attempts {
            let (end, start) = if head == ri { (saving.i, saving.j) } else { (saving.j, saving.i) };
            if routes[head].last() != Some(&end) || routes[tail].first() != Some(&start) {
                continue;
            }
            merged.clear();
            merged.extend_from_slice(&routes[head]);
            merged.extend_from_slice(&routes[tail]);
            let (_, violations) = evaluate_order(instance, &merged);
            if violations > 0 {
                continue;
            }
            let absorbed = std::mem::take(&mut routes[tail]);
            for &c in &absorbed {
                route_of[c] = head;
            }
            routes[head].extend_from_slice(&absorbed);
            loads[head] += loads[tail];
            alive[tail] = false;
            applied = true;
            break;
        }
        let _ = applied;
    }

    let final_routes: Vec<Route> = routes
        .into_iter()
        .zip(alive)
        .filter(|(r, alive)| *alive && !r.is_empty())
        .map(|(r, _)| Route::new(r).expect("merge preserves route invariants"))
        .collect();
    let solution = Solution::evaluate(final_routes, instance);
    debug_assert!(solution.is_feasible());
    Ok(solution)
}

/// One line of the `--trace` stream.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub best_distance: f64,
    pub move_kind: &'static str,
    pub sequencer_adoption: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum TabuAttr {
    /// customer returning to a route (stable route id)
    Reenter(usize, u32),
    /// exchanged customer pair (smaller id first)
    Pair(usize, usize),
}

struct SearchState {
    routes: Vec<Vec<usize>>,
    ids: Vec<u32>,
    loads: Vec<f64>,
    costs: Vec<f64>,
}

impl SearchState {
    fn total(&self) -> f64 {
        self.costs.iter().sum()
    }
}

/// Improves the customer-to-route assignment by tabu search.
///
/// Best-admissible relocate/exchange steps restricted to moves that keep
/// every touched route capacity- and time-feasible; the reverse of an
/// applied move stays tabu for `tenure` iterations unless it would beat the
/// global best (aspiration). Every `sequence_period` iterations each route
/// of the incumbent best is passed through the sequencer and improvements
/// are adopted. Returns the best feasible solution found, never worse than
/// the initial one.
pub fn tabu_search(
    initial: &Solution,
    instance: &Instance,
    backend: &dyn SequencerBackend,
    cache: &RouteCache,
    params: &TabuParams,
    mut trace: Option<&mut dyn FnMut(&TraceRecord)>,
) -> Result<Solution> {
    if !initial.is_feasible() {
        return Err(Error::Model("tabu search requires a feasible initial solution".into()));
    }

    let mut state = SearchState {
        routes: initial.routes.iter().map(|r| r.customers().to_vec()).collect(),
        ids: (0..initial.routes.len() as u32).collect(),
        loads: initial
            .routes
            .iter()
            .map(|r| route_demand(r, instance))
            .collect(),
        costs: initial
            .routes
            .iter()
            .map(|r| route_cost(r, instance))
            .collect(),
    };

    let mut best_routes = state.routes.clone();
    let mut best_total = state.total();
    let mut current_total = best_total;
    let mut tabu: HashMap<TabuAttr, usize> = HashMap::new();
    let mut no_improve = 0usize;

    for iteration in 0..params.max_iterations {
        let mut adopted = false;
        if params.sequence_period > 0 && iteration > 0 && iteration % params.sequence_period == 0 {
            adopted = sequencer_pass(&mut best_routes, instance, backend, cache)?;
            if adopted {
                let new_total: f64 = best_routes
                    .iter()
                    .map(|r| evaluate_order(instance, r).0)
                    .sum();
                debug_assert!(new_total <= best_total + 1e-9);
                best_total = new_total;
                no_improve = 0;
            }
        }

        let chosen = select_move(&state, instance, &tabu, iteration, current_total, best_total);
        let Some((delta, mv)) = chosen else {
            if let Some(t) = trace.as_deref_mut() {
                t(&TraceRecord {
                    iteration,
                    best_distance: best_total,
                    move_kind: "none",
                    sequencer_adoption: adopted,
                });
            }
            break;
        };

        // reverse-move attributes become tabu
        match mv {
            Move::Relocate { customer, from_route, .. } => {
                tabu.insert(
                    TabuAttr::Reenter(customer, state.ids[from_route]),
                    iteration + params.tenure,
                );
            }
            Move::Exchange { first, second, .. } => {
                tabu.insert(
                    TabuAttr::Pair(first.min(second), first.max(second)),
                    iteration + params.tenure,
                );
            }
        }

        let before_total = current_total;
        apply_move(&mut state.routes, &mv);
        match mv {
            Move::Relocate { from_route, to_route, customer, .. } => {
                let demand = instance.nodes[customer].demand;
                state.loads[from_route] -= demand;
                state.loads[to_route] += demand;
                state.costs[from_route] = evaluate_order(instance, &state.routes[from_route]).0;
                state.costs[to_route] = evaluate_order(instance, &state.routes[to_route]).0;
            }
            Move::Exchange { first_route, second_route, first, second, .. } => {
                let d1 = instance.nodes[first].demand;
                let d2 = instance.nodes[second].demand;
                state.loads[first_route] += d2 - d1;
                state.loads[second_route] += d1 - d2;
                state.costs[first_route] = evaluate_order(instance, &state.routes[first_route]).0;
                state.costs[second_route] = evaluate_order(instance, &state.routes[second_route]).0;
            }
        }
        // emptied routes are deleted; no move ever opens a new route
        if let Some(empty_idx) = state.routes.iter().position(|r| r.is_empty()) {
            state.routes.remove(empty_idx);
            state.ids.remove(empty_idx);
            state.loads.remove(empty_idx);
            state.costs.remove(empty_idx);
        }
        current_total = state.total();
        debug_assert!((current_total - (before_total + delta)).abs() < 1e-6);

        if current_total < best_total - 1e-9 {
            best_total = current_total;
            best_routes = state.routes.clone();
            no_improve = 0;
        } else {
            no_improve += 1;
        }

        if let Some(t) = trace.as_deref_mut() {
            t(&TraceRecord {
                iteration,
                best_distance: best_total,
                move_kind: mv.kind(),
                sequencer_adoption: adopted,
            });
        }

        if no_improve >= params.no_improve_limit {
            break;
        }
        tabu.retain(|_, expiry| *expiry > iteration);
    }

    let routes: Vec<Route> = best_routes
        .into_iter()
        .map(|r| Route::new(r).expect("search preserves route invariants"))
        .collect();
    let solution = Solution::evaluate(routes, instance);
    debug_assert!(solution.is_feasible());
    Ok(solution)
}

/// Runs the sequencer over each route of `routes`, adopting strict
/// improvements. Returns whether anything was adopted.
fn sequencer_pass(
    routes: &mut [Vec<usize>],
    instance: &Instance,
    backend: &dyn SequencerBackend,
    cache: &RouteCache,
) -> Result<bool> {
    let mut adopted = false;
    for route_vec in routes.iter_mut() {
        let route = Route::new(route_vec.clone()).expect("best routes stay valid");
        let (old_cost, _) = evaluate_order(instance, route.customers());
        let sequenced = sequence_route(&route, instance, backend, cache)?;
        let (new_cost, new_violations) = evaluate_order(instance, sequenced.customers());
        if new_violations == 0 && new_cost < old_cost - 1e-9 {
            *route_vec = sequenced.customers().to_vec();
            adopted = true;
        }
    }
    Ok(adopted)
}

/// Scans the relocate and exchange neighborhoods and returns the best
/// admissible feasible move with its distance delta. Ties resolve to the
/// first move in enumeration order.
fn select_move(
    state: &SearchState,
    instance: &Instance,
    tabu: &HashMap<TabuAttr, usize>,
    iteration: usize,
    current_total: f64,
    best_total: f64,
) -> Option<(f64, Move)> {
    let k = state.routes.len();
    let is_tabu = |attr: TabuAttr| tabu.get(&attr).is_some_and(|&expiry| expiry > iteration);
    let mut best: Option<(f64, Move)> = None;
    let mut scratch: Vec<usize> = Vec::new();
    let mut removed: Vec<usize> = Vec::new();

    // relocate: move one customer to its best feasible position in another
    // route
    for from in 0..k {
        for pos in 0..state.routes[from].len() {
            let customer = state.routes[from][pos];
            removed.clear();
            removed.extend_from_slice(&state.routes[from]);
            removed.remove(pos);
            // dropping a stop keeps a feasible route feasible (triangle
            // inequality), only the cost changes
            let (from_cost, _) = evaluate_order(instance, &removed);
            let demand = instance.nodes[customer].demand;

            for to in 0..k {
                if to == from {
                    continue;
                }
                if state.loads[to] + demand > instance.capacity {
                    continue;
                }
                let tabu_move = is_tabu(TabuAttr::Reenter(customer, state.ids[to]));
                let target = &state.routes[to];
                let mut best_insert: Option<(f64, usize)> = None;
                for insert_pos in 0..=target.len() {
                    scratch.clear();
                    scratch.extend_from_slice(&target[..insert_pos]);
                    scratch.push(customer);
                    scratch.extend_from_slice(&target[insert_pos..]);
                    let (to_cost, violations) = evaluate_order(instance, &scratch);
                    if violations > 0 {
                        continue;
                    }
                    if best_insert.is_none() || to_cost < best_insert.unwrap().0 {
                        best_insert = Some((to_cost, insert_pos));
                    }
                }
                let Some((to_cost, insert_pos)) = best_insert else { continue };
                let delta =
                    from_cost + to_cost - state.costs[from] - state.costs[to];
                if tabu_move && current_total + delta >= best_total - 1e-9 {
                    continue;
                }
                if best.is_none() || delta < best.as_ref().unwrap().0 {
                    best = Some((
                        delta,
                        Move::Relocate {
                            customer,
                            from_route: from,
                            from_pos: pos,
                            to_route: to,
                            to_pos: insert_pos,
                        },
                    ));
                }
            }
        }
    }

    // exchange: swap a customer pair between two routes, each landing at its
    // best feasible position in the other route
    let mut first_removed: Vec<usize> = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            for p1 in 0..state.routes[a].len() {
                let c1 = state.routes[a][p1];
                let d1 = instance.nodes[c1].demand;
                first_removed.clear();
                first_removed.extend_from_slice(&state.routes[a]);
                first_removed.remove(p1);
                for p2 in 0..state.routes[b].len() {
                    let c2 = state.routes[b][p2];
                    let d2 = instance.nodes[c2].demand;
                    if state.loads[a] - d1 + d2 > instance.capacity
                        || state.loads[b] - d2 + d1 > instance.capacity
                    {
                        continue;
                    }
                    let tabu_move = is_tabu(TabuAttr::Pair(c1.min(c2), c1.max(c2)));

                    let inserted_a =
                        best_insertion(instance, &first_removed, c2, &mut scratch);
                    let Some((cost_a, q1)) = inserted_a else { continue };

                    removed.clear();
                    removed.extend_from_slice(&state.routes[b]);
                    removed.remove(p2);
                    let inserted_b = best_insertion(instance, &removed, c1, &mut scratch);
                    let Some((cost_b, q2)) = inserted_b else { continue };

                    let delta = cost_a + cost_b - state.costs[a] - state.costs[b];
                    if tabu_move && current_total + delta >= best_total - 1e-9 {
                        continue;
                    }
                    if best.is_none() || delta < best.as_ref().unwrap().0 {
                        best = Some((
                            delta,
                            Move::Exchange {
                                first: c1,
                                first_route: a,
                                first_pos: p1,
                                first_insert: q1,
                                second: c2,
                                second_route: b,
                                second_pos: p2,
                                second_insert: q2,
                            },
                        ));
                    }
                }
            }
        }
    }

    best
}

/// Cheapest time-feasible insertion of `customer` into `base`.
fn best_insertion(
    instance: &Instance,
    base: &[usize],
    customer: usize,
    scratch: &mut Vec<usize>,
) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for pos in 0..=base.len() {
        scratch.clear();
        scratch.extend_from_slice(&base[..pos]);
        scratch.push(customer);
        scratch.extend_from_slice(&base[pos..]);
        let (cost, violations) = evaluate_order(instance, scratch);
        if violations > 0 {
            continue;
        }
        if best.is_none() || cost < best.unwrap().0 {
            best = Some((cost, pos));
        }
    }
    best
}

/// Checks coverage, capacity, time feasibility, and distance-sum
/// consistency. Empty report ⇔ the solution is valid for the instance.
pub fn verify_solution(solution: &Solution, instance: &Instance) -> ViolationReport {
    let mut report = ViolationReport::default();

    let mut seen = vec![0usize; instance.len()];
    for route in &solution.routes {
        for &c in route.customers() {
            if c >= instance.len() {
                report.push("coverage", 1.0, format!("unknown customer {c}"));
            } else {
                seen[c] += 1;
            }
        }
    }
    for c in 1..instance.len() {
        if seen[c] != 1 {
            report.push(
                format!("coverage_c{c}"),
                (seen[c] as f64 - 1.0).abs(),
                format!("customer {c} appears {} times", seen[c]),
            );
        }
    }

    let mut distance = 0.0;
    for (idx, route) in solution.routes.iter().enumerate() {
        let demand = route_demand(route, instance);
        if demand > instance.capacity {
            report.push(
                format!("capacity_r{idx}"),
                demand - instance.capacity,
                format!("route {idx} demand {} exceeds capacity {}", demand, instance.capacity),
            );
        }
        let (cost, violations) = evaluate_order(instance, route.customers());
        distance += cost;
        if violations > 0 {
            report.push(
                format!("time_r{idx}"),
                violations as f64,
                format!("route {idx} misses {violations} window(s)"),
            );
        }
    }

    if (distance - solution.total_distance).abs() > 1e-6 {
        report.push(
            "distance_sum",
            (distance - solution.total_distance).abs(),
            format!("stored total {} but routes sum to {}", solution.total_distance, distance),
        );
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::load_instance;
    use crate::sequencer::{held_karp_tsptw, CacheKeyMode, ExactBackend};
    use crate::testutil::{node, solomon_path, tiny_instance};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clarke_wright_merges_two_customers() {
        let nodes = vec![
            node(0, 0.0, 0.0, 0.0, 0.0, 1000.0, 0.0),
            node(1, 3.0, 0.0, 5.0, 0.0, 1000.0, 0.0),
            node(2, 4.0, 0.0, 5.0, 0.0, 1000.0, 0.0),
        ];
        let instance = Instance::new("TWO".into(), 2, 100.0, nodes);
        // s(1,2) = 3 + 4 - 1 = 6 > 0
        let solution = clarke_wright(&instance).unwrap();
        assert_eq!(solution.route_count(), 1);
        assert_eq!(solution.total_distance, 8.0);
        assert!(solution.is_feasible());
    }

    #[test]
    fn clarke_wright_respects_disjoint_tight_windows() {
        // both reachable alone at t = 10, but 20 units apart: whichever is
        // served first, the other's window has closed on arrival
        let nodes = vec![
            node(0, 0.0, 0.0, 0.0, 0.0, 100.0, 0.0),
            node(1, 10.0, 0.0, 5.0, 10.0, 10.5, 0.0),
            node(2, -10.0, 0.0, 5.0, 10.0, 10.5, 0.0),
        ];
        let instance = Instance::new("SPLIT".into(), 2, 100.0, nodes);
        let solution = clarke_wright(&instance).unwrap();
        assert_eq!(solution.route_count(), 2);
        assert!(solution.is_feasible());
    }

    #[test]
    fn clarke_wright_rejects_unroutable_customer() {
        let nodes = vec![
            node(0, 0.0, 0.0, 0.0, 0.0, 1000.0, 0.0),
            node(1, 10.0, 0.0, 5.0, 0.0, 4.0, 0.0),
        ];
        let instance = Instance::new("BAD".into(), 1, 100.0, nodes);
        assert!(matches!(
            clarke_wright(&instance),
            Err(Error::InstanceInfeasible { customer: 1, .. })
        ));
    }

    #[test]
    fn clarke_wright_c101_is_clean() {
        let instance = load_instance(&solomon_path("C101")).unwrap();
        let solution = clarke_wright(&instance).unwrap();
        assert!(solution.is_feasible());
        assert!(verify_solution(&solution, &instance).is_empty());
    }

    #[test]
    fn moves_apply_then_undo_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut routes: Vec<Vec<usize>> = Vec::new();
            let mut next_customer = 1usize;
            for _ in 0..rng.gen_range(2..5) {
                let len = rng.gen_range(1..6);
                routes.push((next_customer..next_customer + len).collect());
                next_customer += len;
            }
            let original = routes.clone();
            let a = rng.gen_range(0..routes.len());
            let mut b = rng.gen_range(0..routes.len());
            while b == a {
                b = rng.gen_range(0..routes.len());
            }
            let mv = if rng.gen_bool(0.5) {
                let from_pos = rng.gen_range(0..routes[a].len());
                Move::Relocate {
                    customer: routes[a][from_pos],
                    from_route: a,
                    from_pos,
                    to_route: b,
                    to_pos: rng.gen_range(0..=routes[b].len()),
                }
            } else {
                let p1 = rng.gen_range(0..routes[a].len());
                let p2 = rng.gen_range(0..routes[b].len());
                Move::Exchange {
                    first: routes[a][p1],
                    first_route: a,
                    first_pos: p1,
                    first_insert: rng.gen_range(0..routes[a].len()),
                    second: routes[b][p2],
                    second_route: b,
                    second_pos: p2,
                    second_insert: rng.gen_range(0..routes[b].len()),
                }
            };
            apply_move(&mut routes, &mv);
            undo_move(&mut routes, &mv);
            assert_eq!(routes, original, "move {mv:?}");
        }
    }

    #[test]
    fn zero_iterations_returns_initial() {
        let instance = tiny_instance();
        let initial = clarke_wright(&instance).unwrap();
        let cache = RouteCache::new(CacheKeyMode::Sorted);
        let params = TabuParams { max_iterations: 0, ..TabuParams::default() };
        let result =
            tabu_search(&initial, &instance, &ExactBackend, &cache, &params, None).unwrap();
        assert_eq!(result, initial);
    }

    #[test]
    fn tabu_rejects_infeasible_initial() {
        let instance = tiny_instance();
        let bad = Solution {
            routes: vec![Route::new(vec![1, 2, 3, 4]).unwrap()],
            total_distance: 0.0,
            capacity_feasible: false,
            time_feasible: true,
        };
        let cache = RouteCache::new(CacheKeyMode::Sorted);
        assert!(tabu_search(&bad, &instance, &ExactBackend, &cache, &TabuParams::default(), None)
            .is_err());
    }

    /// Exhaustive optimum over every partition of the customers into routes
    /// and every feasible sequence (via the exact sequencer), respecting
    /// capacity.
    fn exhaustive_optimum(instance: &Instance) -> f64 {
        let customers: Vec<usize> = instance.customers().collect();
        let mut best = f64::INFINITY;
        let mut assignment = vec![0usize; customers.len()];
        fn go(
            k: usize,
            groups: usize,
            assignment: &mut Vec<usize>,
            customers: &[usize],
            instance: &Instance,
            best: &mut f64,
        ) {
            if k == customers.len() {
                let mut total = 0.0;
                for g in 0..groups {
                    let members: Vec<usize> = customers
                        .iter()
                        .zip(assignment.iter())
                        .filter(|(_, &a)| a == g)
                        .map(|(&c, _)| c)
                        .collect();
                    if members.is_empty() {
                        continue;
                    }
                    let demand: f64 = members.iter().map(|&c| instance.nodes[c].demand).sum();
                    if demand > instance.capacity {
                        return;
                    }
                    match held_karp_tsptw(instance, &members).unwrap() {
                        Some((_, cost)) => total += cost,
                        None => return,
                    }
                }
                if total < *best {
                    *best = total;
                }
                return;
            }
            for g in 0..=groups.min(customers.len() - 1) {
                assignment[k] = g;
                go(k + 1, groups.max(g + 1), assignment, customers, instance, best);
            }
        }
        go(0, 0, &mut assignment, &customers, instance, &mut best);
        best
    }

    #[test]
    fn tabu_matches_exhaustive_optimum_on_tiny_instances() {
        // windows force customer 3 apart from 1 and 2, so the best solution
        // needs two vehicles even though capacity would allow one
        let nodes = vec![
            node(0, 0.0, 0.0, 0.0, 0.0, 1000.0, 0.0),
            node(1, 2.0, 1.0, 10.0, 0.0, 10.0, 0.0),
            node(2, 2.0, -1.0, 10.0, 0.0, 10.0, 0.0),
            node(3, 8.0, 0.0, 10.0, 0.0, 9.0, 0.0),
        ];
        let instance = Instance::new("TRIO".into(), 3, 100.0, nodes);
        let optimum = exhaustive_optimum(&instance);
        let initial = clarke_wright(&instance).unwrap();
        let cache = RouteCache::new(CacheKeyMode::Sorted);
        let params = TabuParams { max_iterations: 200, no_improve_limit: 100, ..TabuParams::default() };
        let solution =
            tabu_search(&initial, &instance, &ExactBackend, &cache, &params, None).unwrap();
        assert!(solution.is_feasible());
        assert!(
            (solution.total_distance - optimum).abs() < 1e-9,
            "tabu {} vs optimum {optimum}",
            solution.total_distance
        );
    }

    #[test]
    fn incumbent_distance_is_monotone_and_never_worse_than_initial() {
        let instance = load_instance(&solomon_path("R101")).unwrap().truncate(40);
        let initial = clarke_wright(&instance).unwrap();
        let cache = RouteCache::new(CacheKeyMode::Sorted);
        let params = TabuParams {
            max_iterations: 120,
            no_improve_limit: 60,
            sequence_period: 25,
            ..TabuParams::default()
        };
        let mut incumbents = Vec::new();
        let mut sink = |r: &TraceRecord| incumbents.push(r.best_distance);
        let solution =
            tabu_search(&initial, &instance, &ExactBackend, &cache, &params, Some(&mut sink))
                .unwrap();
        assert!(solution.is_feasible());
        assert!(solution.total_distance <= initial.total_distance + 1e-9);
        assert!(incumbents.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(verify_solution(&solution, &instance).is_empty());
    }

    #[test]
    fn exact_sequencer_adoption_never_hurts() {
        let instance = load_instance(&solomon_path("RC101")).unwrap().truncate(30);
        let initial = clarke_wright(&instance).unwrap();
        let cache = RouteCache::new(CacheKeyMode::Sorted);
        let params = TabuParams {
            max_iterations: 60,
            no_improve_limit: 60,
            sequence_period: 10,
            ..TabuParams::default()
        };
        let solution =
            tabu_search(&initial, &instance, &ExactBackend, &cache, &params, None).unwrap();
        assert!(solution.total_distance <= initial.total_distance + 1e-9);
        assert!(verify_solution(&solution, &instance).is_empty());
    }

    #[test]
    fn verify_flags_duplicate_and_capacity() {
        let instance = tiny_instance();
        let duplicated = Solution::evaluate(
            vec![Route::new(vec![1, 2]).unwrap(), Route::new(vec![2, 3]).unwrap()],
            &instance,
        );
        let report = verify_solution(&duplicated, &instance);
        assert!(report.labels().any(|l| l == "coverage_c2"));
        assert!(report.labels().any(|l| l == "coverage_c4"));

        let mut heavy = tiny_instance();
        heavy.capacity = 15.0;
        let solution = Solution::evaluate(
            vec![Route::new(vec![1, 2]).unwrap(), Route::new(vec![3, 4]).unwrap()],
            &heavy,
        );
        let report = verify_solution(&solution, &heavy);
        assert!(report.labels().any(|l| l == "capacity_r0"));
        assert!(report.labels().any(|l| l == "capacity_r1"));
    }

    #[test]
    fn verify_flags_distance_mismatch() {
        let instance = tiny_instance();
        let mut solution = clarke_wright(&instance).unwrap();
        solution.total_distance += 5.0;
        let report = verify_solution(&solution, &instance);
        assert!(report.labels().any(|l| l == "distance_sum"));
    }

    #[test]
    fn shuffled_routes_still_verify_coverage() {
        let instance = load_instance(&solomon_path("C102")).unwrap().truncate(20);
        let solution = clarke_wright(&instance).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut routes = solution.routes.clone();
        routes.shuffle(&mut rng);
        let shuffled = Solution::evaluate(routes, &instance);
        assert!(verify_solution(&shuffled, &instance)
            .labels()
            .all(|l| !l.starts_with("coverage")));
    }
}
