//! Constrained quadratic model for one route's sequencing subproblem.
//!
//! The model is linear in practice: binary arc variables `x_i_j`, continuous
//! flow variables `z_i_j`, a distance objective, degree constraints, flow
//! subtour elimination, linking rows, and conditional precedence rows
//! generated per node pair from the time-window data. A quadratic term slot
//! exists but stays empty so the export format stays honest about its name.
//!
//! Constraint labels embed the source equation family and node indices
//! (`eq2_j3`, `eq6_i2_j7`) so violation reports map back to the formulation.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::report::ViolationReport;
use crate::schedule::Route;

const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn lp_symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// `Σ terms (sense) rhs`; terms refer to variables by index and never repeat
/// a variable.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub label: String,
}

/// Sequencing model over the depot plus one route's customers.
#[derive(Debug, Clone)]
pub struct CqmModel {
    pub variables: Vec<Variable>,
    pub objective: Vec<(usize, f64)>,
    /// Always empty for this formulation; kept so the model type matches the
    /// constrained-quadratic export format.
    pub quadratic_objective: Vec<(usize, usize, f64)>,
    pub constraints: Vec<LinearConstraint>,
    /// Subproblem nodes in model order: depot first, then the customers.
    pub node_ids: Vec<usize>,
    x_index: HashMap<(usize, usize), usize>,
    z_index: HashMap<(usize, usize), usize>,
}

impl CqmModel {
    /// Index of `x_{from}_{to}` if the arc exists in the model.
    pub fn x_var(&self, from: usize, to: usize) -> Option<usize> {
        self.x_index.get(&(from, to)).copied()
    }

    /// Index of `z_{from}_{to}` if the arc exists in the model.
    pub fn z_var(&self, from: usize, to: usize) -> Option<usize> {
        self.z_index.get(&(from, to)).copied()
    }

    pub fn var_name(&self, idx: usize) -> &str {
        &self.variables[idx].name
    }
}

/// Variable values keyed by variable name.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    values: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(String, f64)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        Assignment { values: iter.into_iter().collect() }
    }
}

/// Builds the sequencing model for the depot plus `customers`.
///
/// With `n = customers.len() + 1` nodes the model has `n(n−1)` binary arc
/// variables, `n(n−1)` continuous flow variables, `n` visit rows, `n`
/// departure rows, `n−1` flow rows, `(n−1)²` linking rows, and one
/// precedence row per ordered pair `(i, j)` whose earliest departure from
/// `i` plus travel already reaches `j`'s due time.
pub fn build_tsptw_model(instance: &Instance, customers: &[usize]) -> Result<CqmModel> {
    if customers.is_empty() {
        return Err(Error::Model("customer set is empty".into()));
    }
    let mut seen = customers.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Model("duplicate customer id".into()));
    }
    if customers.contains(&0) {
        return Err(Error::Model("customer set contains the depot".into()));
    }
    if let Some(&bad) = customers.iter().find(|&&c| c >= instance.len()) {
        return Err(Error::UnknownNode(bad));
    }

    let mut node_ids = Vec::with_capacity(customers.len() + 1);
    node_ids.push(0);
    node_ids.extend_from_slice(customers);
    let n = node_ids.len();
    let z_upper = (n - 1) as f64;

    let mut variables = Vec::with_capacity(2 * n * (n - 1));
    let mut x_index = HashMap::new();
    let mut z_index = HashMap::new();
    let mut objective = Vec::with_capacity(n * (n - 1));

    for &i in &node_ids {
        for &j in &node_ids {
            if i == j {
                continue;
            }
            x_index.insert((i, j), variables.len());
            objective.push((variables.len(), instance.cost(i, j)));
            variables.push(Variable {
                name: format!("x_{i}_{j}"),
                kind: VarKind::Binary,
                lower: 0.0,
                upper: 1.0,
            });
        }
    }
    for &i in &node_ids {
        for &j in &node_ids {
            if i == j {
                continue;
            }
            z_index.insert((i, j), variables.len());
            variables.push(Variable {
                name: format!("z_{i}_{j}"),
                kind: VarKind::Continuous,
                lower: 0.0,
                upper: z_upper,
            });
        }
    }

    let mut constraints = Vec::new();

    // visit each node exactly once (one incoming arc)
    for &j in &node_ids {
        let terms: Vec<(usize, f64)> = node_ids
            .iter()
            .filter(|&&i| i != j)
            .map(|&i| (x_index[&(i, j)], 1.0))
            .collect();
        constraints.push(LinearConstraint {
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
            label: format!("eq2_j{j}"),
        });
    }

    // leave each node exactly once (one outgoing arc)
    for &i in &node_ids {
        let terms: Vec<(usize, f64)> = node_ids
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| (x_index[&(i, j)], 1.0))
            .collect();
        constraints.push(LinearConstraint {
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
            label: format!("eq3_i{i}"),
        });
    }

    // flow balance: each non-depot node gains one unit of flow
    for &i in &node_ids {
        if i == 0 {
            continue;
        }
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for &j in &node_ids {
            if j != i {
                terms.push((z_index[&(i, j)], 1.0));
            }
        }
        for &j in &node_ids {
            if j != 0 && j != i {
                terms.push((z_index[&(j, i)], -1.0));
            }
        }
        constraints.push(LinearConstraint {
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
            label: format!("eq4_i{i}"),
        });
    }

    // flow only on used arcs
    for &i in &node_ids {
        if i == 0 {
            continue;
        }
        for &j in &node_ids {
            if j == i {
                continue;
            }
            constraints.push(LinearConstraint {
                terms: vec![(z_index[&(i, j)], 1.0), (x_index[&(i, j)], -z_upper)],
                sense: Sense::Le,
                rhs: 0.0,
                label: format!("eq5_i{i}_j{j}"),
            });
        }
    }

    // conditional precedence: generated when the earliest departure from i
    // plus travel already reaches j's due time
    for &i in &node_ids {
        for &j in &node_ids {
            if i == j {
                continue;
            }
            let ni = &instance.nodes[i];
            let nj = &instance.nodes[j];
            if ni.ready_time + ni.service_time + instance.cost(i, j) >= nj.due_time {
                constraints.push(LinearConstraint {
                    terms: vec![(z_index[&(i, j)], 1.0), (z_index[&(j, i)], -1.0)],
                    sense: Sense::Ge,
                    rhs: 0.0,
                    label: format!("eq6_i{i}_j{j}"),
                });
            }
        }
    }

    Ok(CqmModel {
        variables,
        objective,
        quadratic_objective: Vec::new(),
        constraints,
        node_ids,
        x_index,
        z_index,
    })
}

/// Canonical assignment for a route over the model's customer set: tour arcs
/// carry `x = 1`, and the flow value on the arc leaving the k-th customer
/// (1-based) is `k`, which satisfies the flow rows exactly. All other
/// variables are 0.
pub fn encode_route(model: &CqmModel, route: &Route) -> Result<Assignment> {
    let mut expected: Vec<usize> = model.node_ids[1..].to_vec();
    expected.sort_unstable();
    let mut got: Vec<usize> = route.customers().to_vec();
    got.sort_unstable();
    if expected != got {
        return Err(Error::Model(
            "route customers do not match the model's node set".into(),
        ));
    }

    let mut assignment = Assignment::default();
    for var in &model.variables {
        assignment.set(var.name.clone(), 0.0);
    }

    let mut prev = 0usize;
    for (pos, &c) in route.customers().iter().enumerate() {
        assignment.set(model.var_name(model.x_var(prev, c).unwrap()), 1.0);
        if prev != 0 {
            assignment.set(model.var_name(model.z_var(prev, c).unwrap()), pos as f64);
        }
        prev = c;
    }
    let last = prev;
    assignment.set(model.var_name(model.x_var(last, 0).unwrap()), 1.0);
    assignment.set(model.var_name(model.z_var(last, 0).unwrap()), route.len() as f64);
    Ok(assignment)
}

/// Evaluates every constraint; returns the violated labels with the amount
/// by which each is off. Empty report ⇔ the assignment is feasible.
pub fn check_assignment(model: &CqmModel, assignment: &Assignment) -> Result<ViolationReport> {
    let mut report = ViolationReport::default();
    for constraint in &model.constraints {
        let mut lhs = 0.0;
        for &(var, coeff) in &constraint.terms {
            let name = model.var_name(var);
            let value = assignment
                .get(name)
                .ok_or_else(|| Error::MissingVariable(name.to_string()))?;
            lhs += coeff * value;
        }
        let overshoot = match constraint.sense {
            Sense::Le => lhs - constraint.rhs,
            Sense::Ge => constraint.rhs - lhs,
            Sense::Eq => (lhs - constraint.rhs).abs(),
        };
        if overshoot > FEASIBILITY_TOL {
            report.push(
                constraint.label.clone(),
                overshoot,
                format!("lhs {} {} rhs {}", lhs, constraint.sense.lp_symbol(), constraint.rhs),
            );
        }
    }
    Ok(report)
}

/// Follows the successor arcs from the depot and returns the visit order.
///
/// Requires each node to have exactly one outgoing arc set; fails when the
/// successor chain closes before covering every node, naming the stranded
/// nodes.
pub fn decode_route(model: &CqmModel, assignment: &Assignment) -> Result<Route> {
    let mut successor: HashMap<usize, usize> = HashMap::new();
    for &i in &model.node_ids {
        let mut outgoing = Vec::new();
        for &j in &model.node_ids {
            if i == j {
                continue;
            }
            let name = model.var_name(model.x_var(i, j).unwrap());
            let value = assignment
                .get(name)
                .ok_or_else(|| Error::MissingVariable(name.to_string()))?;
            if value > 0.5 {
                outgoing.push(j);
            }
        }
        if outgoing.len() != 1 {
            return Err(Error::Model(format!(
                "node {i} has {} outgoing arcs set, expected exactly 1",
                outgoing.len()
            )));
        }
        successor.insert(i, outgoing[0]);
    }

    let mut order = Vec::with_capacity(model.node_ids.len() - 1);
    let mut current = successor[&0];
    while current != 0 {
        if order.contains(&current) {
            break;
        }
        order.push(current);
        current = successor[&current];
    }
    if order.len() != model.node_ids.len() - 1 {
        let mut stranded: Vec<usize> = model.node_ids[1..]
            .iter()
            .copied()
            .filter(|c| !order.contains(c))
            .collect();
        stranded.sort_unstable();
        return Err(Error::Subtour(stranded));
    }
    Route::new(order)
}

/// Renders the model in the LP file dialect. Output is byte-identical for
/// identical models.
pub fn export_lp(model: &CqmModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    for (k, &(var, coeff)) in model.objective.iter().enumerate() {
        push_term(&mut out, k == 0, coeff, model.var_name(var));
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for constraint in &model.constraints {
        out.push_str(" ");
        out.push_str(&constraint.label);
        out.push(':');
        for (k, &(var, coeff)) in constraint.terms.iter().enumerate() {
            push_term(&mut out, k == 0, coeff, model.var_name(var));
        }
        out.push_str(&format!(" {} {}\n", constraint.sense.lp_symbol(), constraint.rhs));
    }

    out.push_str("Bounds\n");
    for var in &model.variables {
        if var.kind == VarKind::Continuous {
            out.push_str(&format!(" {} <= {} <= {}\n", var.lower, var.name, var.upper));
        }
    }

    out.push_str("Binary\n");
    for var in &model.variables {
        if var.kind == VarKind::Binary {
            out.push_str(&format!(" {}\n", var.name));
        }
    }

    out.push_str("End\n");
    out
}

fn push_term(out: &mut String, first: bool, coeff: f64, name: &str) {
    if first {
        if coeff < 0.0 {
            out.push_str(&format!(" -{} {}", -coeff, name));
        } else {
            out.push_str(&format!(" {} {}", coeff, name));
        }
    } else if coeff < 0.0 {
        out.push_str(&format!(" - {} {}", -coeff, name));
    } else {
        out.push_str(&format!(" + {} {}", coeff, name));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{forced_order_instance, tiny_instance};

    #[test]
    fn four_node_model_counts() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1, 2, 3]).unwrap();
        let n = 4;
        let binaries = model.variables.iter().filter(|v| v.kind == VarKind::Binary).count();
        let continuous = model.variables.iter().filter(|v| v.kind == VarKind::Continuous).count();
        assert_eq!(binaries, n * (n - 1));
        assert_eq!(continuous, n * (n - 1));
        // wide-open windows trigger no precedence rows
        let core = model.constraints.iter().filter(|c| !c.label.starts_with("eq6")).count();
        assert_eq!(core, n + n + (n - 1) + (n - 1) * (n - 1));
        assert_eq!(model.constraints.len(), core);
        assert!(model.quadratic_objective.is_empty());
        // objective covers exactly the arc variables with nonnegative costs
        assert_eq!(model.objective.len(), n * (n - 1));
        assert!(model.objective.iter().all(|&(_, c)| c >= 0.0));
    }

    #[test]
    fn one_customer_model() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1]).unwrap();
        assert_eq!(model.variables.iter().filter(|v| v.kind == VarKind::Binary).count(), 2);
        assert_eq!(model.variables.iter().filter(|v| v.kind == VarKind::Continuous).count(), 2);
        let route = Route::new(vec![1]).unwrap();
        let assignment = encode_route(&model, &route).unwrap();
        let report = check_assignment(&model, &assignment).unwrap();
        assert!(report.is_empty(), "{report}");
        assert_eq!(decode_route(&model, &assignment).unwrap(), route);
    }

    #[test]
    fn rejects_bad_customer_sets() {
        let instance = tiny_instance();
        assert!(build_tsptw_model(&instance, &[]).is_err());
        assert!(build_tsptw_model(&instance, &[1, 1]).is_err());
        assert!(build_tsptw_model(&instance, &[0, 1]).is_err());
        assert!(build_tsptw_model(&instance, &[99]).is_err());
    }

    #[test]
    fn all_zero_assignment_violates_every_degree_row() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1, 2, 3]).unwrap();
        let zeros: Assignment =
            model.variables.iter().map(|v| (v.name.clone(), 0.0)).collect();
        let report = check_assignment(&model, &zeros).unwrap();
        let degree_violations = report
            .labels()
            .filter(|l| l.starts_with("eq2") || l.starts_with("eq3"))
            .count();
        assert_eq!(degree_violations, 2 * 4);
    }

    #[test]
    fn missing_variable_is_an_error() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1]).unwrap();
        let partial = Assignment::default();
        assert!(matches!(
            check_assignment(&model, &partial),
            Err(crate::error::Error::MissingVariable(_))
        ));
    }

    /// Two disjoint cycles (0→1→2→0 and 3→4→3) satisfy the degree rows but
    /// not the flow rows, and decoding names the stranded nodes.
    fn two_subtour_assignment(model: &CqmModel) -> Assignment {
        let mut assignment: Assignment =
            model.variables.iter().map(|v| (v.name.clone(), 0.0)).collect();
        for (i, j) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 3)] {
            assignment.set(model.var_name(model.x_var(i, j).unwrap()), 1.0);
        }
        // canonical flow on the depot cycle; the detached cycle has no flow
        assignment.set(model.var_name(model.z_var(1, 2).unwrap()), 1.0);
        assignment.set(model.var_name(model.z_var(2, 0).unwrap()), 2.0);
        assignment
    }

    #[test]
    fn subtours_violate_flow_rows() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1, 2, 3, 4]).unwrap();
        let assignment = two_subtour_assignment(&model);
        let report = check_assignment(&model, &assignment).unwrap();
        assert!(
            report.labels().any(|l| l.starts_with("eq4") || l.starts_with("eq5")),
            "{report}"
        );
    }

    #[test]
    fn subtours_fail_decoding_with_stranded_set() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1, 2, 3, 4]).unwrap();
        let assignment = two_subtour_assignment(&model);
        match decode_route(&model, &assignment) {
            Err(crate::error::Error::Subtour(stranded)) => assert_eq!(stranded, vec![3, 4]),
            other => panic!("expected subtour error, got {other:?}"),
        }
    }

    #[test]
    fn precedence_rows_follow_the_trigger() {
        let instance = forced_order_instance();
        let model = build_tsptw_model(&instance, &[1, 2, 3]).unwrap();
        let eq6: Vec<&str> = model
            .constraints
            .iter()
            .filter(|c| c.label.starts_with("eq6"))
            .map(|c| c.label.as_str())
            .collect();
        assert_eq!(eq6, vec!["eq6_i2_j1", "eq6_i3_j1", "eq6_i3_j2"]);
    }

    #[test]
    fn feasible_order_still_trips_precedence_rows() {
        // The time-feasible order 1,2,3 runs each triggered pair's reverse
        // arc, so its canonical flow values sit on the penalized side of the
        // precedence rows while the core rows all pass. This is the known
        // model/schedule feasibility gap the repair stage exists for.
        let instance = forced_order_instance();
        let model = build_tsptw_model(&instance, &[1, 2, 3]).unwrap();
        let route = Route::new(vec![1, 2, 3]).unwrap();
        let assignment = encode_route(&model, &route).unwrap();
        let report = check_assignment(&model, &assignment).unwrap();
        assert!(report.labels().all(|l| l.starts_with("eq6")), "{report}");
        assert!(report.labels().any(|l| l == "eq6_i2_j1"));
    }

    #[test]
    fn decode_rejects_multiple_successors() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1, 2]).unwrap();
        let mut assignment: Assignment =
            model.variables.iter().map(|v| (v.name.clone(), 0.0)).collect();
        assignment.set("x_0_1", 1.0);
        assignment.set("x_0_2", 1.0);
        assert!(decode_route(&model, &assignment).is_err());
    }

    #[test]
    fn encode_decode_round_trip() {
        let instance = tiny_instance();
        let model = build_tsptw_model(&instance, &[1, 2, 3, 4]).unwrap();
        for order in [vec![1, 2, 3, 4], vec![4, 2, 1, 3], vec![3, 1, 4, 2]] {
            let route = Route::new(order).unwrap();
            let assignment = encode_route(&model, &route).unwrap();
            assert_eq!(decode_route(&model, &assignment).unwrap(), route);
            // core rows always hold for a canonical tour encoding
            let report = check_assignment(&model, &assignment).unwrap();
            assert!(report.labels().all(|l| l.starts_with("eq6")));
        }
    }

    #[test]
    fn lp_export_is_deterministic() {
        let instance = forced_order_instance();
        let a = export_lp(&build_tsptw_model(&instance, &[1, 2, 3]).unwrap());
        let b = export_lp(&build_tsptw_model(&instance, &[1, 2, 3]).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("Minimize\n obj:"));
        assert!(a.ends_with("End\n"));
    }
}
