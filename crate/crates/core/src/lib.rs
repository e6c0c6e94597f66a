//! Phased metaheuristic solver for the capacitated vehicle routing problem
//! with time windows (CVRPTW).
//!
//! The solver splits the problem into an assignment phase (which customers
//! share a vehicle) handled by tabu search over relocate/exchange moves, and
//! a per-route sequencing phase handled by pluggable backends (an exact
//! dynamic program or a simulated annealer) plus a swap-based repair
//! heuristic for time-window violations. A constrained-quadratic-model
//! builder exports each route's sequencing subproblem for external solvers,
//! and a benchmark harness reproduces gap tables and scaling studies over
//! the Solomon instances.

pub mod assignment;
pub mod bench;
pub mod cqm;
pub mod error;
pub mod instance;
pub mod report;
pub mod schedule;
pub mod sequencer;

#[cfg(test)]
pub(crate) mod testutil;

pub use assignment::{
    clarke_wright, tabu_search, verify_solution, Move, Solution, TabuParams, TraceRecord,
};
pub use bench::{
    emit_csv, emit_report, optimality_gap, run_benchmark, scaling_study, solve_instance,
    BackendChoice, BenchRow, BksTable, ScalingPoint, SolverConfig, REFERENCE_COMPARISON,
};
pub use cqm::{
    build_tsptw_model, check_assignment, decode_route, encode_route, export_lp, Assignment,
    CqmModel, LinearConstraint, Sense, VarKind, Variable,
};
pub use error::{Error, Result};
pub use instance::{build_cost_matrix, euclidean_cost, load_instance, parse_solomon, Instance, Node};
pub use report::{Violation, ViolationReport};
pub use schedule::{route_cost, route_demand, simulate_route, Route, Schedule, Stop};
pub use sequencer::{
    anneal_sequence, fix_route, held_karp_tsptw, sequence_route, sequence_route_detailed,
    AnnealBackend, AnnealOverrides, AnnealParams, CacheKeyMode, ExactBackend, RepairOutcome,
    RouteCache, SequenceOutcome, SequenceReport, SequencerBackend,
};
