//! Solomon-format benchmark instances.
//!
//! A file holds one depot plus customers, each with coordinates, demand,
//! a `[ready_time, due_time]` service window and a service duration. The
//! instance owns a dense Euclidean cost matrix over all node pairs.

use std::path::Path;

use crate::error::{Error, Result};

/// One location: the depot (id 0) or a customer.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    pub ready_time: f64,
    pub due_time: f64,
    pub service_time: f64,
}

/// Immutable problem data shared by every solver component.
///
/// `vehicle_count` is an upper bound on the fleet size, not a target;
/// reported quality is distance-only.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub vehicle_count: usize,
    pub capacity: f64,
    pub nodes: Vec<Node>,
    cost: Vec<f64>,
}

impl Instance {
    pub fn new(name: String, vehicle_count: usize, capacity: f64, nodes: Vec<Node>) -> Self {
        let cost = build_cost_matrix(&nodes);
        Instance { name, vehicle_count, capacity, nodes, cost }
    }

    /// Number of nodes including the depot.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Euclidean distance between nodes `i` and `j`.
    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.nodes.len() + j]
    }

    /// Customer ids, i.e. every node id except the depot.
    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        1..self.nodes.len()
    }

    /// Mean entry of the cost matrix, used to scale annealing defaults.
    pub fn mean_cost(&self) -> f64 {
        if self.cost.is_empty() {
            return 0.0;
        }
        self.cost.iter().sum::<f64>() / self.cost.len() as f64
    }

    /// Copy of this instance restricted to the depot and the first
    /// `customers` customers. Cost matrix is rebuilt.
    pub fn truncate(&self, customers: usize) -> Instance {
        let keep = customers.min(self.nodes.len().saturating_sub(1));
        let nodes: Vec<Node> = self.nodes[..=keep].to_vec();
        Instance::new(self.name.clone(), self.vehicle_count, self.capacity, nodes)
    }
}

/// `√((a.x−b.x)² + (a.y−b.y)²)`, full double precision.
pub fn euclidean_cost(a: &Node, b: &Node) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Dense symmetric matrix of [`euclidean_cost`] over all node pairs,
/// row-major.
pub fn build_cost_matrix(nodes: &[Node]) -> Vec<f64> {
    let n = nodes.len();
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean_cost(&nodes[i], &nodes[j]);
            cost[i * n + j] = d;
            cost[j * n + i] = d;
        }
    }
    cost
}

/// Parses the Solomon text layout.
///
/// Layout: the instance name on the first non-blank line; a `VEHICLE`
/// section with a `NUMBER CAPACITY` header and one data row; a `CUSTOMER`
/// section with a column header followed by one row per node, depot (id 0)
/// first. Blank lines are tolerated anywhere; column alignment is not
/// significant.
pub fn parse_solomon(text: &str) -> Result<Instance> {
    let err = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };

    let mut name = None;
    let mut vehicle_row: Option<(usize, f64)> = None;
    let mut rows: Vec<(usize, Node)> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Vehicle,
        Customer,
    }
    let mut section = Section::Preamble;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        match fields[0] {
            "VEHICLE" => {
                section = Section::Vehicle;
                continue;
            }
            "CUSTOMER" => {
                section = Section::Customer;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Preamble => {
                if name.is_none() {
                    name = Some(raw.trim().to_string());
                }
            }
            Section::Vehicle => {
                if fields[0] == "NUMBER" {
                    continue;
                }
                if vehicle_row.is_some() {
                    continue;
                }
                if fields.len() != 2 {
                    return Err(err(line_no, "expected `<number> <capacity>`"));
                }
                let count: usize = fields[0]
                    .parse()
                    .map_err(|_| err(line_no, "non-numeric vehicle count"))?;
                let capacity: f64 = fields[1]
                    .parse()
                    .map_err(|_| err(line_no, "non-numeric vehicle capacity"))?;
                if count == 0 {
                    return Err(err(line_no, "vehicle count must be positive"));
                }
                if capacity <= 0.0 {
                    return Err(err(line_no, "vehicle capacity must be positive"));
                }
                vehicle_row = Some((count, capacity));
            }
            Section::Customer => {
                // Column header tokens are non-numeric; skip them.
                if fields[0].parse::<f64>().is_err() {
                    continue;
                }
                if fields.len() != 7 {
                    return Err(err(line_no, "expected 7 fields per customer row"));
                }
                let num = |s: &str| -> Result<f64> {
                    s.parse::<f64>().map_err(|_| err(line_no, "non-numeric field"))
                };
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| err(line_no, "non-integer customer id"))?;
                let node = Node {
                    id,
                    x: num(fields[1])?,
                    y: num(fields[2])?,
                    demand: num(fields[3])?,
                    ready_time: num(fields[4])?,
                    due_time: num(fields[5])?,
                    service_time: num(fields[6])?,
                };
                if node.demand < 0.0 {
                    return Err(err(line_no, "negative demand"));
                }
                if node.ready_time > node.due_time {
                    return Err(err(line_no, "ready time exceeds due time"));
                }
                rows.push((line_no, node));
            }
        }
    }

    let name = name.ok_or_else(|| err(1, "missing instance name"))?;
    let (vehicle_count, capacity) =
        vehicle_row.ok_or_else(|| err(1, "malformed header: missing VEHICLE data row"))?;
    if rows.is_empty() {
        return Err(err(1, "missing depot row"));
    }

    // Nodes must be indexed contiguously from 0, depot first.
    for (pos, (line_no, node)) in rows.iter().enumerate() {
        if node.id != pos {
            let msg = if rows.iter().filter(|(_, n)| n.id == node.id).count() > 1 {
                format!("duplicate customer id {}", node.id)
            } else if pos == 0 {
                "missing depot row (first row must have id 0)".to_string()
            } else {
                format!("non-contiguous customer id {} at position {}", node.id, pos)
            };
            return Err(err(*line_no, &msg));
        }
    }
    if rows.len() < 2 {
        return Err(err(rows[0].0, "no customers"));
    }
    let depot_line = rows[0].0;
    let nodes: Vec<Node> = rows.into_iter().map(|(_, n)| n).collect();
    if nodes[0].demand != 0.0 || nodes[0].service_time != 0.0 {
        return Err(err(depot_line, "depot must have zero demand and service time"));
    }

    Ok(Instance::new(name, vehicle_count, capacity, nodes))
}

/// Reads and parses an instance file.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_solomon(&text)
}
