//! Benchmark harness: per-instance gap rows, the published comparison
//! series, the violations-vs-stops scaling study, and CSV/SVG emission.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::{clarke_wright, tabu_search, verify_solution, Solution, TabuParams};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{simulate_route, Route};
use crate::sequencer::{
    fix_route, AnnealBackend, AnnealOverrides, CacheKeyMode, ExactBackend, RouteCache,
    SequencerBackend,
};

/// Published reference series for the six tight-window Solomon instances:
/// best-known distances and the two solvers' reported distances and gaps.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceRow {
    pub instance: &'static str,
    pub bks: f64,
    pub ortools_distance: f64,
    pub ortools_gap: f64,
    pub hqts_distance: f64,
    pub hqts_gap: f64,
}

pub const REFERENCE_COMPARISON: [ReferenceRow; 6] = [
    ReferenceRow { instance: "R101", bks: 1637.7, ortools_distance: 1651.2, ortools_gap: 0.82, hqts_distance: 1675.9, hqts_gap: 2.33 },
    ReferenceRow { instance: "R102", bks: 1466.6, ortools_distance: 1487.0, ortools_gap: 1.39, hqts_distance: 1512.6, hqts_gap: 3.13 },
    ReferenceRow { instance: "R103", bks: 1208.7, ortools_distance: 1303.5, ortools_gap: 7.84, hqts_distance: 1247.6, hqts_gap: 3.22 },
    ReferenceRow { instance: "RC101", bks: 1619.8, ortools_distance: 1632.0, ortools_gap: 0.75, hqts_distance: 1674.3, hqts_gap: 3.37 },
    ReferenceRow { instance: "RC102", bks: 1457.4, ortools_distance: 1528.8, ortools_gap: 4.89, hqts_distance: 1510.4, hqts_gap: 3.64 },
    ReferenceRow { instance: "RC103", bks: 1258.0, ortools_distance: 1326.1, ortools_gap: 5.41, hqts_distance: 1351.9, hqts_gap: 7.46 },
];

/// Best-known-solution distances by instance name.
#[derive(Debug, Clone, Default)]
pub struct BksTable {
    entries: BTreeMap<String, f64>,
}

impl BksTable {
    /// The reference rows every shipped table contains.
    pub fn builtin() -> Self {
        let entries = REFERENCE_COMPARISON
            .iter()
            .map(|r| (r.instance.to_string(), r.bks))
            .collect();
        BksTable { entries }
    }

    /// Parses `instance,bks` CSV text; a header line is tolerated.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("instance") {
                continue;
            }
            let mut parts = line.split(',');
            let name = parts.next().unwrap_or_default().trim();
            let value = parts.next().unwrap_or_default().trim();
            let bks: f64 = value.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad bks value `{value}`"),
            })?;
            if bks <= 0.0 {
                return Err(Error::InvalidBks(bks));
            }
            entries.insert(name.to_string(), bks);
        }
        Ok(BksTable { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, instance: &str) -> Option<f64> {
        self.entries.get(instance).copied()
    }

    pub fn insert(&mut self, instance: String, bks: f64) {
        self.entries.insert(instance, bks);
    }

    /// Overlays `other`'s rows on top of this table.
    pub fn merge(&mut self, other: BksTable) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `100 × (distance − bks) / bks`. The value is full precision; reports
/// round to two decimals at presentation time.
pub fn optimality_gap(distance: f64, bks: f64) -> Result<f64> {
    if bks <= 0.0 {
        return Err(Error::InvalidBks(bks));
    }
    Ok(100.0 * (distance - bks) / bks)
}

/// One benchmark result line; `seed` is `None` for per-instance averages.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub instance: String,
    pub solver: String,
    pub seed: Option<u64>,
    pub distance: Option<f64>,
    pub gap_percent: Option<f64>,
    pub feasible: bool,
    pub runtime_s: f64,
}

/// Which sequencing backend a benchmark run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Exact,
    Anneal,
}

/// Full solver configuration for benchmark runs.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub backend: BackendChoice,
    pub anneal: AnnealOverrides,
    pub tabu: TabuParams,
    pub cache_mode: CacheKeyMode,
    pub solver_tag: String,
    /// When false the runtime column is reported as 0.0, which makes the
    /// emitted CSV byte-reproducible across runs (wall-clock time is the one
    /// quantity seeds cannot pin down).
    pub measure_runtime: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: BackendChoice::Anneal,
            anneal: AnnealOverrides::default(),
            tabu: TabuParams::default(),
            cache_mode: CacheKeyMode::Sorted,
            solver_tag: "twrouter".to_string(),
            measure_runtime: true,
        }
    }
}

pub fn make_backend(config: &SolverConfig, seed: u64) -> Box<dyn SequencerBackend> {
    match config.backend {
        BackendChoice::Exact => Box::new(ExactBackend),
        BackendChoice::Anneal => {
            Box::new(AnnealBackend::with_overrides(seed, config.anneal.clone()))
        }
    }
}

/// Runs the construction + tabu pipeline once.
pub fn solve_instance(
    instance: &Instance,
    config: &SolverConfig,
    seed: u64,
) -> Result<Solution> {
    let backend = make_backend(config, seed);
    let cache = RouteCache::new(config.cache_mode);
    let initial = clarke_wright(instance)?;
    let mut tabu = config.tabu.clone();
    tabu.seed = seed;
    tabu_search(&initial, instance, backend.as_ref(), &cache, &tabu, None)
}

/// One row per (instance, seed) plus an averaged row per instance, in input
/// order. Deterministic given the seeds, runtime column aside; a solver
/// failure is recorded as an infeasible row and the run continues.
pub fn run_benchmark(
    instances: &[Instance],
    config: &SolverConfig,
    seeds: &[u64],
    bks: &BksTable,
) -> Vec<BenchRow> {
    let jobs: Vec<(usize, u64)> = (0..instances.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();

    let mut detail: Vec<((usize, u64), BenchRow)> = jobs
        .into_par_iter()
        .map(|(idx, seed)| {
            let instance = &instances[idx];
            let start = Instant::now();
            let outcome = solve_instance(instance, config, seed);
            let runtime = if config.measure_runtime { start.elapsed().as_secs_f64() } else { 0.0 };
            let row = match outcome {
                Ok(solution) => {
                    let valid = verify_solution(&solution, instance).is_empty();
                    let gap = bks
                        .get(&instance.name)
                        .map(|b| optimality_gap(solution.total_distance, b).expect("bks > 0"));
                    BenchRow {
                        instance: instance.name.clone(),
                        solver: config.solver_tag.clone(),
                        seed: Some(seed),
                        distance: Some(solution.total_distance),
                        gap_percent: gap,
                        feasible: solution.is_feasible() && valid,
                        runtime_s: runtime,
                    }
                }
                Err(_) => BenchRow {
                    instance: instance.name.clone(),
                    solver: config.solver_tag.clone(),
                    seed: Some(seed),
                    distance: None,
                    gap_percent: None,
                    feasible: false,
                    runtime_s: runtime,
                },
            };
            ((idx, seed), row)
        })
        .collect();
    detail.sort_by(|a, b| {
        a.0 .0.cmp(&b.0 .0).then_with(|| {
            let pa = seeds.iter().position(|&s| s == a.0 .1);
            let pb = seeds.iter().position(|&s| s == b.0 .1);
            pa.cmp(&pb)
        })
    });

    let mut rows = Vec::with_capacity(detail.len() + instances.len());
    for idx in 0..instances.len() {
        let group: Vec<&BenchRow> =
            detail.iter().filter(|((i, _), _)| *i == idx).map(|(_, r)| r).collect();
        rows.extend(group.iter().map(|r| (*r).clone()));
        if group.is_empty() {
            continue;
        }
        let solved: Vec<f64> = group.iter().filter_map(|r| r.distance).collect();
        let mean_distance = if solved.len() == group.len() && !solved.is_empty() {
            Some(solved.iter().sum::<f64>() / solved.len() as f64)
        } else {
            None
        };
        let gap = match (mean_distance, bks.get(&instances[idx].name)) {
            (Some(d), Some(b)) => Some(optimality_gap(d, b).expect("bks > 0")),
            _ => None,
        };
        rows.push(BenchRow {
            instance: instances[idx].name.clone(),
            solver: config.solver_tag.clone(),
            seed: None,
            distance: mean_distance,
            gap_percent: gap,
            feasible: group.iter().all(|r| r.feasible),
            runtime_s: group.iter().map(|r| r.runtime_s).sum::<f64>() / group.len() as f64,
        });
    }
    rows
}

/// One measured point of the violations-vs-stops study.
#[derive(Debug, Clone)]
pub struct ScalingPoint {
    pub stops: usize,
    pub runs: usize,
    pub violated_runs: usize,
    pub mean_violation_proportion: f64,
}

impl ScalingPoint {
    pub fn violated_fraction(&self) -> f64 {
        self.violated_runs as f64 / self.runs.max(1) as f64
    }
}

/// Measures raw backend feasibility as route length grows.
///
/// Sample routes are prefixes of concatenated Clarke-Wright routes, with the
/// seed shuffling the concatenation order. The backend output is evaluated
/// raw by default, matching how the upstream solver was measured; with
/// `repair` the escalating swap stages run first.
pub fn scaling_study(
    instance: &Instance,
    stop_counts: &[usize],
    seeds: &[u64],
    backend: &dyn SequencerBackend,
    repair: bool,
) -> Result<Vec<ScalingPoint>> {
    let base = clarke_wright(instance)?;
    let mut points = Vec::with_capacity(stop_counts.len());
    for &stops in stop_counts {
        assert!(
            stops <= instance.len() - 1,
            "stop count {stops} exceeds customer count"
        );
        let mut violated_runs = 0usize;
        let mut proportion_sum = 0.0;
        for &seed in seeds {
            let mut order: Vec<usize> = (0..base.routes.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
            let mut customers = Vec::with_capacity(stops);
            'outer: for &r in &order {
                for &c in base.routes[r].customers() {
                    customers.push(c);
                    if customers.len() == stops {
                        break 'outer;
                    }
                }
            }
            let start = Route::new(customers).expect("prefix of disjoint routes");
            let mut candidate = backend.solve(instance, &start)?;
            if repair {
                candidate = fix_route(&candidate, instance).0;
            }
            let schedule = simulate_route(&candidate, instance)?;
            if schedule.violations > 0 {
                violated_runs += 1;
            }
            proportion_sum += schedule.violation_proportion();
        }
        points.push(ScalingPoint {
            stops,
            runs: seeds.len(),
            violated_runs,
            mean_violation_proportion: proportion_sum / seeds.len().max(1) as f64,
        });
    }
    Ok(points)
}

/// Fixed-schema CSV; byte-deterministic for identical rows.
pub fn emit_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("instance,solver,seed,distance,gap_percent,feasible,runtime_s\n");
    for row in rows {
        let seed = row.seed.map_or_else(|| "avg".to_string(), |s| s.to_string());
        let distance = row.distance.map_or_else(String::new, |d| format!("{d:.2}"));
        let gap = row.gap_percent.map_or_else(String::new, |g| format!("{g:.2}"));
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.3}\n",
            row.instance, row.solver, seed, distance, gap, row.feasible, row.runtime_s
        ));
    }
    out
}

/// `stops,runs,violated_runs,violated_fraction,mean_violation_proportion`
pub fn emit_scaling_csv(points: &[ScalingPoint]) -> String {
    let mut out = String::from("stops,runs,violated_runs,violated_fraction,mean_violation_proportion\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4}\n",
            p.stops,
            p.runs,
            p.violated_runs,
            p.violated_fraction(),
            p.mean_violation_proportion
        ));
    }
    out
}

/// Writes the CSV and optionally a paired-bar gap chart next to it.
pub fn emit_report(rows: &[BenchRow], csv_path: &Path, plot_path: Option<&Path>) -> Result<()> {
    std::fs::write(csv_path, emit_csv(rows))?;
    if let Some(path) = plot_path {
        let averaged: Vec<(&str, f64)> = rows
            .iter()
            .filter(|r| r.seed.is_none())
            .filter_map(|r| r.gap_percent.map(|g| (r.instance.as_str(), g)))
            .collect();
        std::fs::write(path, gap_chart_svg(&averaged))?;
    }
    Ok(())
}

/// Paired bars: measured gap next to the published series for the same
/// instance where available.
pub fn gap_chart_svg(measured: &[(&str, f64)]) -> String {
    let width = 640.0;
    let height = 360.0;
    let margin = 48.0;
    let mut pairs: Vec<(&str, f64, Option<f64>)> = measured
        .iter()
        .map(|&(name, gap)| {
            let reference = REFERENCE_COMPARISON
                .iter()
                .find(|r| r.instance == name)
                .map(|r| r.hqts_gap);
            (name, gap, reference)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(b.0));

    let max_gap = pairs
        .iter()
        .flat_map(|p| [Some(p.1), p.2])
        .flatten()
        .fold(1.0_f64, f64::max);
    let plot_h = height - 2.0 * margin;
    let group_w = (width - 2.0 * margin) / pairs.len().max(1) as f64;
    let bar_w = group_w * 0.35;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    );
    svg.push_str(&format!(
        "<line x1=\"{margin}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        height - margin,
        width - margin
    ));
    for (k, (name, gap, reference)) in pairs.iter().enumerate() {
        let x0 = margin + k as f64 * group_w + group_w * 0.15;
        let h = plot_h * gap / max_gap;
        svg.push_str(&format!(
            "<rect class=\"measured\" x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#4477aa\"/>\n",
            x0,
            height - margin - h,
            bar_w,
            h
        ));
        if let Some(reference) = reference {
            let h = plot_h * reference / max_gap;
            svg.push_str(&format!(
                "<rect class=\"reference\" x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#ee6677\"/>\n",
                x0 + bar_w,
                height - margin - h,
                bar_w,
                h
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            x0 + bar_w,
            height - margin + 16.0,
            name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Line chart of mean violation proportion against stop count.
pub fn scaling_chart_svg(points: &[ScalingPoint]) -> String {
    let width = 640.0;
    let height = 360.0;
    let margin = 48.0;
    let max_stops = points.iter().map(|p| p.stops).max().unwrap_or(1) as f64;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    );
    let coords: Vec<String> = points
        .iter()
        .map(|p| {
            let x = margin + (width - 2.0 * margin) * p.stops as f64 / max_stops;
            let y = height - margin - (height - 2.0 * margin) * p.mean_violation_proportion;
            format!("{x:.1},{y:.1}")
        })
        .collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#4477aa\" stroke-width=\"2\"/>\n",
        coords.join(" ")
    ));
    for (p, c) in points.iter().zip(&coords) {
        let (x, y) = c.split_once(',').unwrap();
        svg.push_str(&format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"#4477aa\"/>\n"));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            height - margin + 16.0,
            p.stops
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Route map: customer dots plus one polyline per route through the depot.
pub fn routes_svg(instance: &Instance, solution: &Solution) -> String {
    const PALETTE: [&str; 8] =
        ["#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377", "#bbbbbb", "#000000"];
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for node in &instance.nodes {
        min_x = min_x.min(node.x);
        max_x = max_x.max(node.x);
        min_y = min_y.min(node.y);
        max_y = max_y.max(node.y);
    }
    let span_x = (max_x - min_x).max(1.0);
    let span_y = (max_y - min_y).max(1.0);
    let size = 640.0;
    let margin = 24.0;
    let sx = |x: f64| margin + (x - min_x) / span_x * (size - 2.0 * margin);
    let sy = |y: f64| size - margin - (y - min_y) / span_y * (size - 2.0 * margin);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    for (idx, route) in solution.routes.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut pts = vec![format!("{:.1},{:.1}", sx(instance.nodes[0].x), sy(instance.nodes[0].y))];
        for &c in route.customers() {
            pts.push(format!("{:.1},{:.1}", sx(instance.nodes[c].x), sy(instance.nodes[c].y)));
        }
        pts.push(pts[0].clone());
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }
    for node in &instance.nodes[1..] {
        svg.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"#333333\"/>\n",
            sx(node.x),
            sy(node.y)
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"8\" height=\"8\" fill=\"#d62728\"/>\n",
        sx(instance.nodes[0].x) - 4.0,
        sy(instance.nodes[0].y) - 4.0
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::load_instance;
    use crate::testutil::solomon_path;

    #[test]
    fn gap_formula_reproduces_reference_cells() {
        for row in REFERENCE_COMPARISON {
            let ortools = optimality_gap(row.ortools_distance, row.bks).unwrap();
            let ours = optimality_gap(row.hqts_distance, row.bks).unwrap();
            assert!((ortools - row.ortools_gap).abs() < 0.01, "{}", row.instance);
            assert!((ours - row.hqts_gap).abs() < 0.01, "{}", row.instance);
        }
    }

    #[test]
    fn gap_examples() {
        assert_eq!(
            format!("{:.2}", optimality_gap(1675.9, 1637.7).unwrap()),
            "2.33"
        );
        assert_eq!(
            format!("{:.2}", optimality_gap(1247.6, 1208.7).unwrap()),
            "3.22"
        );
        assert_eq!(optimality_gap(1000.0, 1000.0).unwrap(), 0.0);
        assert!(optimality_gap(1.0, 0.0).is_err());
        assert!(optimality_gap(1.0, -5.0).is_err());
    }

    #[test]
    fn reference_gap_means_match_published_averages() {
        let hqts: f64 =
            REFERENCE_COMPARISON.iter().map(|r| r.hqts_gap).sum::<f64>() / 6.0;
        let ortools: f64 =
            REFERENCE_COMPARISON.iter().map(|r| r.ortools_gap).sum::<f64>() / 6.0;
        assert!((hqts - 3.86).abs() < 0.01, "{hqts}");
        assert!((ortools - 3.52).abs() < 0.01, "{ortools}");
    }

    #[test]
    fn bks_csv_round_trip() {
        let table = BksTable::builtin();
        assert_eq!(table.get("R101"), Some(1637.7));
        let parsed = BksTable::from_csv("instance,bks\nR101,1637.7\nX1,100.5\n").unwrap();
        assert_eq!(parsed.get("X1"), Some(100.5));
        assert!(BksTable::from_csv("R1,abc\n").is_err());
        assert!(BksTable::from_csv("R1,-3\n").is_err());
    }

    #[test]
    fn empty_rows_give_header_only_csv() {
        assert_eq!(
            emit_csv(&[]),
            "instance,solver,seed,distance,gap_percent,feasible,runtime_s\n"
        );
    }

    #[test]
    fn six_average_rows_give_seven_lines() {
        let rows: Vec<BenchRow> = REFERENCE_COMPARISON
            .iter()
            .map(|r| BenchRow {
                instance: r.instance.to_string(),
                solver: "hqts-ref".into(),
                seed: None,
                distance: Some(r.hqts_distance),
                gap_percent: Some(r.hqts_gap),
                feasible: true,
                runtime_s: 0.0,
            })
            .collect();
        let csv = emit_csv(&rows);
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.contains("R101,hqts-ref,avg,1675.90,2.33,true,0.000"));
    }

    #[test]
    fn csv_emission_is_byte_deterministic() {
        let rows = vec![BenchRow {
            instance: "R101".into(),
            solver: "twrouter".into(),
            seed: Some(3),
            distance: Some(1700.123456),
            gap_percent: Some(3.811),
            feasible: true,
            runtime_s: 1.23456,
        }];
        assert_eq!(emit_csv(&rows), emit_csv(&rows));
        assert_eq!(
            emit_csv(&rows),
            "instance,solver,seed,distance,gap_percent,feasible,runtime_s\nR101,twrouter,3,1700.12,3.81,true,1.235\n"
        );
    }

    #[test]
    fn run_benchmark_row_counts() {
        let instance = load_instance(&solomon_path("R101")).unwrap().truncate(12);
        let mut config = SolverConfig {
            backend: BackendChoice::Exact,
            measure_runtime: false,
            ..SolverConfig::default()
        };
        config.tabu.max_iterations = 20;
        config.tabu.no_improve_limit = 10;
        let rows = run_benchmark(
            &[instance.clone(), instance],
            &config,
            &[1, 2, 3],
            &BksTable::builtin(),
        );
        // 2 instances x 3 seeds + 2 averages
        assert_eq!(rows.len(), 8);
        assert_eq!(rows.iter().filter(|r| r.seed.is_none()).count(), 2);
        assert!(rows.iter().all(|r| r.feasible));

        let empty = run_benchmark(&[], &config, &[1], &BksTable::builtin());
        assert!(empty.is_empty());
    }

    #[test]
    fn scaling_single_stop_is_clean() {
        let instance = load_instance(&solomon_path("C207")).unwrap();
        let backend = ExactBackend;
        let points = scaling_study(&instance, &[1], &[1, 2, 3], &backend, false).unwrap();
        assert_eq!(points[0].stops, 1);
        assert_eq!(points[0].violated_runs, 0);
        assert_eq!(points[0].mean_violation_proportion, 0.0);
    }

    #[test]
    fn gap_chart_has_paired_bars() {
        let measured: Vec<(&str, f64)> =
            REFERENCE_COMPARISON.iter().map(|r| (r.instance, r.hqts_gap + 1.0)).collect();
        let svg = gap_chart_svg(&measured);
        assert_eq!(svg.matches("class=\"measured\"").count(), 6);
        assert_eq!(svg.matches("class=\"reference\"").count(), 6);
        assert_eq!(svg.matches("<text").count(), 6);
    }

    #[test]
    fn emit_report_writes_files() {
        let rows = vec![];
        let dir = std::env::temp_dir().join("twrouter_bench_test");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("out.csv");
        emit_report(&rows, &csv, None).unwrap();
        assert!(csv.exists());
        let bad = Path::new("/nonexistent-dir-xyz/out.csv");
        assert!(emit_report(&rows, bad, None).is_err());
    }
}
