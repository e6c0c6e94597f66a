//! Shared fixtures for unit tests.

use std::path::PathBuf;

use crate::instance::{Instance, Node};

pub const ALL_INSTANCES: &[&str] = &[
    "C101", "C102", "C103", "C104", "C105", "C106", "C107", "C108", "C109", "C201", "C202",
    "C203", "C204", "C205", "C206", "C207", "C208", "R101", "R102", "R103", "R104", "R105",
    "R106", "R107", "R108", "R109", "R110", "R111", "R112", "R201", "R202", "R203", "R204",
    "R205", "R206", "R207", "R208", "R209", "R210", "R211", "RC101", "RC102", "RC103", "RC104",
    "RC105", "RC106", "RC107", "RC108", "RC201", "RC202", "RC203", "RC204", "RC205", "RC206",
    "RC207", "RC208",
];

pub fn solomon_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/solomon")
        .join(format!("{name}.txt"))
}

pub fn node(id: usize, x: f64, y: f64, demand: f64, ready: f64, due: f64, service: f64) -> Node {
    Node { id, x, y, demand, ready_time: ready, due_time: due, service_time: service }
}

/// Four customers on a line, wide-open windows, plenty of capacity.
pub fn tiny_instance() -> Instance {
    let nodes = vec![
        node(0, 0.0, 0.0, 0.0, 0.0, 1000.0, 0.0),
        node(1, 1.0, 0.0, 10.0, 0.0, 1000.0, 0.0),
        node(2, 2.0, 0.0, 10.0, 0.0, 1000.0, 0.0),
        node(3, 3.0, 0.0, 10.0, 0.0, 1000.0, 0.0),
        node(4, 4.0, 0.0, 10.0, 0.0, 1000.0, 0.0),
    ];
    Instance::new("TINY".to_string(), 4, 100.0, nodes)
}

/// Instance where the windows admit only the visit order 1, 2, 3.
pub fn forced_order_instance() -> Instance {
    let nodes = vec![
        node(0, 0.0, 0.0, 0.0, 0.0, 1000.0, 0.0),
        node(1, 1.0, 0.0, 1.0, 0.0, 5.0, 0.0),
        node(2, 2.0, 0.0, 1.0, 10.0, 15.0, 0.0),
        node(3, 3.0, 0.0, 1.0, 20.0, 25.0, 0.0),
    ];
    Instance::new("FORCED".to_string(), 3, 100.0, nodes)
}
