//! Solution JSON schema. Field order is stable so identical runs produce
//! byte-identical files.

use serde::{Deserialize, Serialize};

use twrouter_core::{route_cost, route_demand, simulate_route, Instance, Route, Solution};

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionJson {
    pub instance: String,
    pub seed: u64,
    pub total_distance: f64,
    pub routes: Vec<RouteJson>,
    pub feasible: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RouteJson {
    pub customers: Vec<usize>,
    pub distance: f64,
    pub demand: f64,
    pub schedule: Vec<StopJson>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StopJson {
    pub node: usize,
    pub arrival: f64,
    pub wait: f64,
    pub departure: f64,
}

pub fn solution_to_json(
    solution: &Solution,
    instance: &Instance,
    seed: u64,
) -> twrouter_core::Result<String> {
    let mut routes = Vec::with_capacity(solution.routes.len());
    for route in &solution.routes {
        let schedule = simulate_route(route, instance)?;
        routes.push(RouteJson {
            customers: route.customers().to_vec(),
            distance: route_cost(route, instance),
            demand: route_demand(route, instance),
            schedule: schedule
                .stops
                .iter()
                .map(|s| StopJson {
                    node: s.node,
                    arrival: s.arrival,
                    wait: s.wait,
                    departure: s.departure,
                })
                .collect(),
        });
    }
    let doc = SolutionJson {
        instance: instance.name.clone(),
        seed,
        total_distance: solution.total_distance,
        routes,
        feasible: solution.is_feasible(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("schema serializes");
    text.push('\n');
    Ok(text)
}

/// Rebuilds a [`Solution`] from a parsed JSON document, keeping the stored
/// totals so the validator can cross-check them.
pub fn solution_from_json(doc: &SolutionJson, instance: &Instance) -> twrouter_core::Result<Solution> {
    let mut routes = Vec::with_capacity(doc.routes.len());
    for route in &doc.routes {
        routes.push(Route::new(route.customers.clone())?);
    }
    let evaluated = Solution::evaluate(routes, instance);
    Ok(Solution { total_distance: doc.total_distance, ..evaluated })
}
