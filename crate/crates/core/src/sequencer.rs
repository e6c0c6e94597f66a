//! Per-route sequencing: pluggable backends, violation repair, and a result
//! cache keyed by customer set.
//!
//! Backends return a permutation of the requested customers but make no
//! feasibility promise. [`sequence_route`] wraps a backend call with the
//! escalating repair stages (simple swap, then 2-opt, then 3-opt) and caches
//! the outcome: a feasible or repaired result is cached as-is, and when
//! repair fails the pre-optimization input is cached instead, so sequencing
//! never worsens a feasible route.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{evaluate_order, Route};

/// Exact solver state-space limit; beyond this the bitmask DP is refused.
pub const HELD_KARP_MAX_CUSTOMERS: usize = 16;

/// Proposes visit orders for one route's customer set.
pub trait SequencerBackend: Sync {
    /// Returns a permutation of `initial`'s customers, warm-started from the
    /// incoming order. Time feasibility of the result is not guaranteed.
    fn solve(&self, instance: &Instance, initial: &Route) -> Result<Route>;

    fn name(&self) -> &'static str;
}

/// Minimum-distance time-feasible tour by label-correcting dynamic
/// programming over (visited set, last node) states, keeping
/// Pareto-nondominated (cost, earliest completion time) labels.
///
/// Returns `None` when no permutation is time-feasible.
pub fn held_karp_tsptw(
    instance: &Instance,
    customers: &[usize],
) -> Result<Option<(Route, f64)>> {
    let m = customers.len();
    if m > HELD_KARP_MAX_CUSTOMERS {
        return Err(Error::SizeLimit { n: m, max: HELD_KARP_MAX_CUSTOMERS });
    }
    if m == 0 {
        return Ok(Some((Route::empty(), 0.0)));
    }
    // validates uniqueness and absence of the depot
    let as_route = Route::new(customers.to_vec())?;
    if let Some(&bad) = customers.iter().find(|&&c| c >= instance.len()) {
        return Err(Error::UnknownNode(bad));
    }
    drop(as_route);

    #[derive(Clone, Copy)]
    struct Label {
        cost: f64,
        time: f64,
        parent: u32,
        customer: u8,
    }

    let depot_due = instance.nodes[0].due_time;
    let full: usize = (1 << m) - 1;
    let mut arena: Vec<Label> = Vec::new();
    // labels[mask * m + last] holds arena indices of nondominated states
    let mut labels: Vec<Vec<u32>> = vec![Vec::new(); (full + 1) * m];

    let push_label = |arena: &mut Vec<Label>,
                          slot: &mut Vec<u32>,
                          cost: f64,
                          time: f64,
                          parent: u32,
                          customer: u8|
     -> bool {
        for &idx in slot.iter() {
            let l = &arena[idx as usize];
            if l.cost <= cost && l.time <= time {
                return false;
            }
        }
        slot.retain(|&idx| {
            let l = &arena[idx as usize];
            !(cost <= l.cost && time <= l.time)
        });
        arena.push(Label { cost, time, parent, customer });
        slot.push((arena.len() - 1) as u32);
        true
    };

    for (k, &c) in customers.iter().enumerate() {
        let node = &instance.nodes[c];
        let arrival = instance.cost(0, c);
        if arrival > node.due_time {
            continue;
        }
        let time = arrival.max(node.ready_time) + node.service_time;
        // any continuation returns no earlier than time + c(c, 0)
        if time + instance.cost(c, 0) > depot_due {
            continue;
        }
        let mask = 1usize << k;
        push_label(&mut arena, &mut labels[mask * m + k], arrival, time, u32::MAX, k as u8);
    }

    for mask in 1..=full {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let slot = std::mem::take(&mut labels[mask * m + last]);
            for &label_idx in &slot {
                let label = arena[label_idx as usize];
                for (next, &c) in customers.iter().enumerate() {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let node = &instance.nodes[c];
                    let arrival = label.time + instance.cost(customers[last], c);
                    if arrival > node.due_time {
                        continue;
                    }
                    let time = arrival.max(node.ready_time) + node.service_time;
                    if time + instance.cost(c, 0) > depot_due {
                        continue;
                    }
                    let cost = label.cost + instance.cost(customers[last], c);
                    let new_mask = mask | (1 << next);
                    push_label(
                        &mut arena,
                        &mut labels[new_mask * m + next],
                        cost,
                        time,
                        label_idx,
                        next as u8,
                    );
                }
            }
            labels[mask * m + last] = slot;
        }
    }

    let mut best: Option<(f64, f64, u32)> = None;
    for last in 0..m {
        for &label_idx in &labels[full * m + last] {
            let label = arena[label_idx as usize];
            let back = instance.cost(customers[last], 0);
            if label.time + back > depot_due {
                continue;
            }
            let total = label.cost + back;
            let better = match best {
                None => true,
                Some((bc, bt, _)) => {
                    total < bc || (total == bc && label.time < bt)
                }
            };
            if better {
                best = Some((total, label.time, label_idx));
            }
        }
    }

    let Some((total, _, mut idx)) = best else {
        return Ok(None);
    };
    let mut order = Vec::with_capacity(m);
    while idx != u32::MAX {
        let label = arena[idx as usize];
        order.push(customers[label.customer as usize]);
        idx = label.parent;
    }
    order.reverse();
    Ok(Some((Route::from_permutation(order), total)))
}

/// Simulated-annealing schedule for one sequencing subproblem.
#[derive(Debug, Clone)]
pub struct AnnealParams {
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    pub sweeps: usize,
    pub moves_per_sweep: usize,
    /// λ weighting of window violations in the annealing objective.
    pub violation_penalty: f64,
    pub seed: u64,
}

impl AnnealParams {
    /// Defaults scaled to the subproblem: temperature and penalty are the
    /// mean cost-matrix entry times the customer count, with n² proposals
    /// per sweep.
    pub fn for_subproblem(instance: &Instance, customers: usize, seed: u64) -> Self {
        let n = customers.max(1);
        let scale = instance.mean_cost() * n as f64;
        AnnealParams {
            initial_temperature: scale.max(1e-9),
            cooling_rate: 0.995,
            sweeps: 2000,
            moves_per_sweep: n * n,
            violation_penalty: scale,
            seed,
        }
    }
}

/// Anneals over permutations with swap and segment-reversal moves, scoring
/// `route_cost + λ · violations`. Deterministic given the seed.
pub fn anneal_sequence(
    instance: &Instance,
    customers: &[usize],
    initial: &Route,
    params: &AnnealParams,
) -> Result<Route> {
    let mut expected = customers.to_vec();
    expected.sort_unstable();
    let mut got = initial.customers().to_vec();
    got.sort_unstable();
    if expected != got {
        return Err(Error::Model("initial route is not a permutation of the customers".into()));
    }
    assert!(params.cooling_rate > 0.0 && params.cooling_rate < 1.0, "cooling_rate must be in (0,1)");
    assert!(params.sweeps >= 1, "sweeps must be positive");

    let n = initial.len();
    if n <= 1 {
        return Ok(initial.clone());
    }

    let lambda = params.violation_penalty;
    let objective = |order: &[usize]| {
        let (cost, violations) = evaluate_order(instance, order);
        cost + lambda * violations as f64
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut current: Vec<usize> = initial.customers().to_vec();
    let mut current_obj = objective(&current);
    let mut best = current.clone();
    let mut best_obj = current_obj;
    let mut temperature = params.initial_temperature.max(1e-12);

    for _ in 0..params.sweeps {
        for _ in 0..params.moves_per_sweep {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let (i, j) = (a.min(b), a.max(b));
            let reversal = rng.gen_bool(0.5);
            // both move kinds are self-inverse: apply, score, revert on reject
            if reversal {
                current[i..=j].reverse();
            } else {
                current.swap(i, j);
            }
            let candidate_obj = objective(&current);
            let delta = candidate_obj - current_obj;
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if accept {
                current_obj = candidate_obj;
                if candidate_obj < best_obj {
                    best_obj = candidate_obj;
                    best.clone_from(&current);
                }
            } else if reversal {
                current[i..=j].reverse();
            } else {
                current.swap(i, j);
            }
        }
        temperature *= params.cooling_rate;
    }

    Ok(Route::from_permutation(best))
}

/// How a repair attempt ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairOutcome {
    AlreadyFeasible,
    FixedBySimple,
    FixedBy2Opt,
    FixedBy3Opt,
    Unfixable,
}

impl RepairOutcome {
    pub fn fixed(self) -> bool {
        matches!(
            self,
            RepairOutcome::AlreadyFeasible
                | RepairOutcome::FixedBySimple
                | RepairOutcome::FixedBy2Opt
                | RepairOutcome::FixedBy3Opt
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RepairOutcome::AlreadyFeasible => "already_feasible",
            RepairOutcome::FixedBySimple => "fixed_by_simple",
            RepairOutcome::FixedBy2Opt => "fixed_by_2opt",
            RepairOutcome::FixedBy3Opt => "fixed_by_3opt",
            RepairOutcome::Unfixable => "unfixable",
        }
    }
}

/// Escalating feasibility repair: simple position swaps, then 2-opt
/// reversals, then 3-opt reconnections.
///
/// Each stage repeatedly applies the move that lexicographically minimizes
/// (violations, cost), accepting only strict violation decreases, and hands
/// its current order to the next stage. The first stage to reach zero
/// violations wins; if all three fail the ORIGINAL input route is returned.
pub fn fix_route(route: &Route, instance: &Instance) -> (Route, RepairOutcome) {
    let (cost, violations) = evaluate_order(instance, route.customers());
    if violations == 0 {
        return (route.clone(), RepairOutcome::AlreadyFeasible);
    }

    let mut current = route.customers().to_vec();
    let mut state = (violations, cost);

    if run_stage(instance, &mut current, &mut state, Stage::Swap) {
        return (Route::from_permutation(current), RepairOutcome::FixedBySimple);
    }
    if run_stage(instance, &mut current, &mut state, Stage::TwoOpt) {
        return (Route::from_permutation(current), RepairOutcome::FixedBy2Opt);
    }
    if run_stage(instance, &mut current, &mut state, Stage::ThreeOpt) {
        return (Route::from_permutation(current), RepairOutcome::FixedBy3Opt);
    }
    (route.clone(), RepairOutcome::Unfixable)
}

#[derive(Clone, Copy)]
enum Stage {
    Swap,
    TwoOpt,
    ThreeOpt,
}

/// Best-improvement loop for one stage. Returns true once violations hit 0.
/// Every accepted move strictly decreases the violation count, which bounds
/// the number of iterations.
fn run_stage(
    instance: &Instance,
    current: &mut Vec<usize>,
    state: &mut (usize, f64),
    stage: Stage,
) -> bool {
    loop {
        let mut best: Option<(usize, f64, Vec<usize>)> = None;
        let mut consider = |order: &[usize]| {
            let (cost, violations) = evaluate_order(instance, order);
            let better = match &best {
                None => true,
                Some((bv, bc, _)) => violations < *bv || (violations == *bv && cost < *bc),
            };
            if better {
                best = Some((violations, cost, order.to_vec()));
            }
        };

        let n = current.len();
        match stage {
            Stage::Swap => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        current.swap(i, j);
                        consider(current);
                        current.swap(i, j);
                    }
                }
            }
            Stage::TwoOpt => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        current[i..=j].reverse();
                        consider(current);
                        current[i..=j].reverse();
                    }
                }
            }
            Stage::ThreeOpt => {
                let mut scratch = Vec::with_capacity(n);
                for a in 0..n {
                    for b in (a + 1)..n {
                        for c in (b + 1)..=n {
                            for variant in 0..7 {
                                scratch.clear();
                                scratch.extend_from_slice(&current[..a]);
                                reconnect(&mut scratch, &current[a..b], &current[b..c], variant);
                                scratch.extend_from_slice(&current[c..]);
                                consider(&scratch);
                            }
                        }
                    }
                }
            }
        }

        match best {
            Some((violations, cost, order)) if violations < state.0 => {
                *current = order;
                *state = (violations, cost);
                if violations == 0 {
                    return true;
                }
            }
            _ => return false,
        }
    }
}

/// The seven reconnections of two adjacent segments (reversals and/or
/// exchange); variants are enumerated in a fixed order so ties resolve to
/// the lowest-index move.
fn reconnect(out: &mut Vec<usize>, x: &[usize], y: &[usize], variant: usize) {
    let fwd = |out: &mut Vec<usize>, s: &[usize]| out.extend_from_slice(s);
    let rev = |out: &mut Vec<usize>, s: &[usize]| out.extend(s.iter().rev().copied());
    match variant {
        0 => {
            rev(out, x);
            fwd(out, y);
        }
        1 => {
            fwd(out, x);
            rev(out, y);
        }
        2 => {
            rev(out, x);
            rev(out, y);
        }
        3 => {
            fwd(out, y);
            fwd(out, x);
        }
        4 => {
            fwd(out, y);
            rev(out, x);
        }
        5 => {
            rev(out, y);
            fwd(out, x);
        }
        _ => {
            rev(out, y);
            rev(out, x);
        }
    }
}

/// Exact sequencing backend; falls back to the warm-start order when no
/// time-feasible permutation exists.
#[derive(Debug, Default)]
pub struct ExactBackend;

impl SequencerBackend for ExactBackend {
    fn solve(&self, instance: &Instance, initial: &Route) -> Result<Route> {
        match held_karp_tsptw(instance, initial.customers())? {
            Some((route, _)) => Ok(route),
            None => Ok(initial.clone()),
        }
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}

/// Optional per-field overrides applied on top of the scaled defaults.
#[derive(Debug, Clone, Default)]
pub struct AnnealOverrides {
    pub initial_temperature: Option<f64>,
    pub cooling_rate: Option<f64>,
    pub sweeps: Option<usize>,
    pub moves_per_sweep: Option<usize>,
    pub violation_penalty: Option<f64>,
}

/// Annealing backend. Every route's parameters derive from the root seed and
/// the customer set, so results do not depend on call order.
#[derive(Debug, Clone)]
pub struct AnnealBackend {
    pub root_seed: u64,
    pub overrides: AnnealOverrides,
}

impl AnnealBackend {
    pub fn new(root_seed: u64) -> Self {
        AnnealBackend { root_seed, overrides: AnnealOverrides::default() }
    }

    pub fn with_overrides(root_seed: u64, overrides: AnnealOverrides) -> Self {
        AnnealBackend { root_seed, overrides }
    }

    pub fn params_for(&self, instance: &Instance, customers: &[usize]) -> AnnealParams {
        let seed = derive_seed(self.root_seed, customers);
        let mut params = AnnealParams::for_subproblem(instance, customers.len(), seed);
        let o = &self.overrides;
        if let Some(v) = o.initial_temperature {
            params.initial_temperature = v;
        }
        if let Some(v) = o.cooling_rate {
            params.cooling_rate = v;
        }
        if let Some(v) = o.sweeps {
            params.sweeps = v;
        }
        if let Some(v) = o.moves_per_sweep {
            params.moves_per_sweep = v;
        }
        if let Some(v) = o.violation_penalty {
            params.violation_penalty = v;
        }
        params
    }
}

impl SequencerBackend for AnnealBackend {
    fn solve(&self, instance: &Instance, initial: &Route) -> Result<Route> {
        let params = self.params_for(instance, initial.customers());
        anneal_sequence(instance, initial.customers(), initial, &params)
    }

    fn name(&self) -> &'static str {
        "anneal"
    }
}

/// Stable seed derivation from the root seed and the (sorted) customer set;
/// FNV-1a over the ids with a splitmix finalizer. Hand-rolled so seeds stay
/// identical across platforms and releases.
fn derive_seed(root: u64, customers: &[usize]) -> u64 {
    let mut sorted: Vec<usize> = customers.to_vec();
    sorted.sort_unstable();
    let mut hash: u64 = 0xcbf29ce484222325 ^ root;
    for id in sorted {
        hash ^= id as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    let mut z = hash.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Cache key derivation mode. `Sorted` memoizes per customer set;
/// `Ordered` keys on the incoming visit order instead, for studying how
/// results depend on the warm start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CacheKeyMode {
    #[default]
    Sorted,
    Ordered,
}

#[derive(Debug, Clone)]
pub struct CachedRoute {
    pub route: Route,
    pub cost: f64,
    pub time_feasible: bool,
}

/// Best-known sequencing results per key. A feasible entry is never
/// displaced by an infeasible one, and within the same feasibility class the
/// cheaper route wins; unbounded (problem sizes cap at 100 customers).
#[derive(Debug, Default)]
pub struct RouteCache {
    entries: RwLock<HashMap<Vec<usize>, CachedRoute>>,
    mode: CacheKeyMode,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl RouteCache {
    pub fn new(mode: CacheKeyMode) -> Self {
        RouteCache { entries: RwLock::new(HashMap::new()), mode, hits: AtomicU64::new(0), misses: AtomicU64::new(0) }
    }

    pub fn key_for(&self, route: &Route) -> Vec<usize> {
        let mut key = route.customers().to_vec();
        if self.mode == CacheKeyMode::Sorted {
            key.sort_unstable();
        }
        key
    }

    pub fn lookup(&self, route: &Route) -> Option<CachedRoute> {
        let key = self.key_for(route);
        let found = self.entries.read().unwrap().get(&key).cloned();
        match &found {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        found
    }

    /// Inserts under the winner-keeps rule and returns the entry that ended
    /// up cached, which may be a concurrent writer's better result.
    pub fn offer(&self, key: Vec<usize>, candidate: CachedRoute) -> CachedRoute {
        let mut entries = self.entries.write().unwrap();
        match entries.get_mut(&key) {
            Some(existing) => {
                let wins = (candidate.time_feasible && !existing.time_feasible)
                    || (candidate.time_feasible == existing.time_feasible
                        && candidate.cost < existing.cost);
                if wins {
                    *existing = candidate;
                }
                existing.clone()
            }
            None => {
                entries.insert(key, candidate.clone());
                candidate
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

/// How a [`sequence_route`] call produced its result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceOutcome {
    CacheHit,
    Solved(RepairOutcome),
}

/// Full record of one sequencing call; pre- and post-optimization costs are
/// both kept since outcomes depend on the warm start.
#[derive(Debug, Clone)]
pub struct SequenceReport {
    pub route: Route,
    pub outcome: SequenceOutcome,
    pub input_cost: f64,
    pub input_violations: usize,
    pub backend_cost: Option<f64>,
    pub backend_violations: Option<usize>,
    pub final_cost: f64,
    pub final_violations: usize,
}

/// Backend call plus repair plus caching for one route.
///
/// Cache hit: the cached route is returned without invoking the backend.
/// Miss: the backend solves from the incoming order, the result is repaired,
/// and the repaired route (or on unfixable failure the original input) is
/// offered to the cache; whichever entry wins the cache is returned.
pub fn sequence_route_detailed(
    route: &Route,
    instance: &Instance,
    backend: &dyn SequencerBackend,
    cache: &RouteCache,
) -> Result<SequenceReport> {
    let (input_cost, input_violations) = evaluate_order(instance, route.customers());

    if let Some(cached) = cache.lookup(route) {
        let (final_cost, final_violations) = evaluate_order(instance, cached.route.customers());
        return Ok(SequenceReport {
            route: cached.route,
            outcome: SequenceOutcome::CacheHit,
            input_cost,
            input_violations,
            backend_cost: None,
            backend_violations: None,
            final_cost,
            final_violations,
        });
    }

    let key = cache.key_for(route);
    let candidate = backend.solve(instance, route)?;
    let mut expected = route.customers().to_vec();
    expected.sort_unstable();
    let mut got = candidate.customers().to_vec();
    got.sort_unstable();
    if expected != got {
        return Err(Error::Model(format!(
            "backend `{}` returned a route that is not a permutation of its input",
            backend.name()
        )));
    }
    let (backend_cost, backend_violations) = evaluate_order(instance, candidate.customers());

    let (repaired, outcome) = fix_route(&candidate, instance);
    let selected = if outcome == RepairOutcome::Unfixable { route.clone() } else { repaired };
    let (cost, violations) = evaluate_order(instance, selected.customers());
    let winner = cache.offer(
        key,
        CachedRoute { route: selected, cost, time_feasible: violations == 0 },
    );
    let (final_cost, final_violations) = evaluate_order(instance, winner.route.customers());

    Ok(SequenceReport {
        route: winner.route,
        outcome: SequenceOutcome::Solved(outcome),
        input_cost,
        input_violations,
        backend_cost: Some(backend_cost),
        backend_violations: Some(backend_violations),
        final_cost,
        final_violations,
    })
}

/// See [`sequence_route_detailed`].
pub fn sequence_route(
    route: &Route,
    instance: &Instance,
    backend: &dyn SequencerBackend,
    cache: &RouteCache,
) -> Result<Route> {
    sequence_route_detailed(route, instance, backend, cache).map(|r| r.route)
}
