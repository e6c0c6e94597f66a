//! `twrouter` — solve, sequence, export, benchmark, and validate CVRPTW
//! instances in the Solomon format.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use twrouter_core::bench::{
    emit_csv, emit_scaling_csv, gap_chart_svg, make_backend, routes_svg, run_benchmark,
    scaling_chart_svg, scaling_study, BackendChoice, BksTable, SolverConfig,
};
use twrouter_core::{
    build_tsptw_model, clarke_wright, export_lp, load_instance, optimality_gap, route_cost,
    sequence_route_detailed, simulate_route, tabu_search, verify_solution, AnnealOverrides,
    CacheKeyMode, Instance, Route, RouteCache, SequenceOutcome, TabuParams, TraceRecord,
};

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "twrouter", version, about = "Phased CVRPTW solver over Solomon instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an initial solution and improve it with tabu search.
    Solve(SolveArgs),
    /// Sequence a single route through the backend and repair stages.
    Sequence(SequenceArgs),
    /// Export one route subproblem as an LP file.
    Model(ModelArgs),
    /// Run the benchmark protocol and emit the CSV report.
    Bench(BenchArgs),
    /// Re-check a solution JSON against its instance.
    Validate(ValidateArgs),
    /// Measure raw backend feasibility against route length.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Exact,
    Anneal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CacheKeyArg {
    /// key routes by customer set
    Sorted,
    /// key routes by exact visit order
    Ordered,
}

#[derive(Args)]
struct BackendOpts {
    /// Sequencing backend; `exact` is limited to 16 customers per route.
    #[arg(long, value_enum, default_value_t = BackendKind::Anneal)]
    backend: BackendKind,
    #[arg(long, help = "annealer sweeps")]
    sweeps: Option<usize>,
    #[arg(long, help = "annealer cooling rate in (0,1)")]
    cooling_rate: Option<f64>,
    #[arg(long, help = "annealer initial temperature")]
    initial_temperature: Option<f64>,
    #[arg(long, help = "annealer proposals per sweep")]
    moves_per_sweep: Option<usize>,
    #[arg(long, help = "annealer window-violation penalty (lambda)")]
    violation_penalty: Option<f64>,
    #[arg(long, value_enum, default_value_t = CacheKeyArg::Sorted)]
    cache_key: CacheKeyArg,
}

impl BackendOpts {
    fn choice(&self) -> BackendChoice {
        match self.backend {
            BackendKind::Exact => BackendChoice::Exact,
            BackendKind::Anneal => BackendChoice::Anneal,
        }
    }

    fn overrides(&self) -> AnnealOverrides {
        AnnealOverrides {
            initial_temperature: self.initial_temperature,
            cooling_rate: self.cooling_rate,
            sweeps: self.sweeps,
            moves_per_sweep: self.moves_per_sweep,
            violation_penalty: self.violation_penalty,
        }
    }

    fn cache_mode(&self) -> CacheKeyMode {
        match self.cache_key {
            CacheKeyArg::Sorted => CacheKeyMode::Sorted,
            CacheKeyArg::Ordered => CacheKeyMode::Ordered,
        }
    }
}

#[derive(Args)]
struct TabuOpts {
    #[arg(long)]
    tenure: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    no_improve_limit: Option<usize>,
    #[arg(long, help = "iterations between sequencer passes")]
    sequence_period: Option<usize>,
}

impl TabuOpts {
    fn params(&self, seed: u64) -> TabuParams {
        let mut params = TabuParams { seed, ..TabuParams::default() };
        if let Some(v) = self.tenure {
            params.tenure = v;
        }
        if let Some(v) = self.max_iterations {
            params.max_iterations = v;
        }
        if let Some(v) = self.no_improve_limit {
            params.no_improve_limit = v;
        }
        if let Some(v) = self.sequence_period {
            params.sequence_period = v;
        }
        params
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance path or name (resolved under TWROUTER_DATA).
    instance: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep only the first N customers.
    #[arg(long)]
    customers: Option<usize>,
    #[command(flatten)]
    backend: BackendOpts,
    #[command(flatten)]
    tabu: TabuOpts,
    /// Solution JSON path (default `<instance>.solution.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a route map SVG here.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Emit per-iteration trace records to stderr as JSON lines.
    #[arg(long)]
    trace: bool,
    /// Merge extra `instance,bks` rows from this CSV.
    #[arg(long)]
    bks: Option<PathBuf>,
}

#[derive(Args)]
struct SequenceArgs {
    instance: String,
    /// Comma-separated customer ids, e.g. `5,3,7`.
    #[arg(long)]
    route: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip the repair stages and report the raw backend output.
    #[arg(long)]
    no_repair: bool,
    #[command(flatten)]
    backend: BackendOpts,
}

#[derive(Args)]
struct ModelArgs {
    instance: String,
    /// Comma-separated customer ids forming the subproblem.
    #[arg(long)]
    customers: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance paths or names.
    instances: Vec<String>,
    /// Number of seeds; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep only the first N customers of each instance.
    #[arg(long)]
    customers: Option<usize>,
    #[command(flatten)]
    backend: BackendOpts,
    #[command(flatten)]
    tabu: TabuOpts,
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    /// Write a gap chart SVG here.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Worker threads for parallel runs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Report runtime_s as 0.0 so the CSV is byte-reproducible.
    #[arg(long)]
    zero_runtime: bool,
    #[arg(long)]
    bks: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    instance: String,
    /// Solution JSON produced by `solve`.
    solution: PathBuf,
}

#[derive(Args)]
struct ScalingArgs {
    instance: String,
    /// Comma-separated stop counts, e.g. `10,13,35`.
    #[arg(long, default_value = "10,13,35")]
    stops: String,
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run the repair stages on each backend result before measuring.
    #[arg(long)]
    repair: bool,
    #[command(flatten)]
    backend: BackendOpts,
    #[arg(long, default_value = "scaling.csv")]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<twrouter_core::Error> for Failure {
    fn from(e: twrouter_core::Error) -> Self {
        let code = match &e {
            twrouter_core::Error::InstanceInfeasible { .. } => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sequence(args) => cmd_sequence(args),
        Command::Model(args) => cmd_model(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Scaling(args) => cmd_scaling(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

/// Resolves an instance argument: an existing path wins, then
/// `$TWROUTER_DATA/<name>` and `$TWROUTER_DATA/<name>.txt`.
fn resolve_instance(arg: &str) -> Result<PathBuf, Failure> {
    let direct = PathBuf::from(arg);
    if direct.exists() {
        return Ok(direct);
    }
    if let Ok(dir) = std::env::var("TWROUTER_DATA") {
        for candidate in [PathBuf::from(&dir).join(arg), PathBuf::from(&dir).join(format!("{arg}.txt"))] {
            if candidate.exists() {
                return Ok(candidate);
            }
        }
    }
    Err(Failure::usage(format!(
        "instance `{arg}` not found (set TWROUTER_DATA to the instance directory)"
    )))
}

fn load(arg: &str, truncate: Option<usize>) -> Result<Instance, Failure> {
    let path = resolve_instance(arg)?;
    let instance = load_instance(&path)?;
    Ok(match truncate {
        Some(n) => instance.truncate(n),
        None => instance,
    })
}

fn parse_id_list(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Failure::usage(format!("bad id `{part}` in list")))
        })
        .collect()
}

fn load_bks(extra: Option<&Path>) -> Result<BksTable, Failure> {
    let mut table = BksTable::builtin();
    if let Some(path) = extra {
        let loaded = BksTable::from_path(path)?;
        table.merge(loaded);
    }
    Ok(table)
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Failure> {
    let instance = load(&args.instance, args.customers)?;
    let bks = load_bks(args.bks.as_deref())?;

    let config = SolverConfig {
        backend: args.backend.choice(),
        anneal: args.backend.overrides(),
        tabu: args.tabu.params(args.seed),
        cache_mode: args.backend.cache_mode(),
        ..SolverConfig::default()
    };
    let backend = make_backend(&config, args.seed);
    let cache = RouteCache::new(config.cache_mode);
    let initial = clarke_wright(&instance)?;

    let mut trace_sink = |record: &TraceRecord| {
        eprintln!("{}", serde_json::to_string(record).expect("trace serializes"));
    };
    let trace: Option<&mut dyn FnMut(&TraceRecord)> =
        if args.trace { Some(&mut trace_sink) } else { None };

    let solution =
        tabu_search(&initial, &instance, backend.as_ref(), &cache, &config.tabu, trace)?;
    let report = verify_solution(&solution, &instance);
    if !report.is_empty() {
        return Err(Failure { code: EXIT_INFEASIBLE, message: format!("solver produced an invalid solution:\n{report}") });
    }

    println!(
        "{}: {} customers, capacity {}, backend {}",
        instance.name,
        instance.len() - 1,
        instance.capacity,
        backend.name()
    );
    for (idx, route) in solution.routes.iter().enumerate() {
        let schedule = simulate_route(route, &instance)?;
        println!(
            "route {:>2}: distance {:>8.2}  demand {:>6.1}  return {:>8.1}  stops {:?}",
            idx,
            route_cost(route, &instance),
            twrouter_core::route_demand(route, &instance),
            schedule.return_arrival,
            route.customers()
        );
    }
    println!(
        "total distance {:.2} over {} routes (initial {:.2})",
        solution.total_distance,
        solution.route_count(),
        initial.total_distance
    );
    if let Some(bks_value) = bks.get(&instance.name) {
        let gap = optimality_gap(solution.total_distance, bks_value)?;
        println!("gap vs best known {bks_value}: {gap:.2}%");
    }

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.solution.json", instance.name)));
    std::fs::write(&out, output::solution_to_json(&solution, &instance, args.seed)?)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", out.display())))?;
    println!("solution written to {}", out.display());

    if let Some(plot) = args.plot {
        std::fs::write(&plot, routes_svg(&instance, &solution))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", plot.display())))?;
        println!("route map written to {}", plot.display());
    }
    Ok(0)
}

fn cmd_sequence(args: SequenceArgs) -> Result<u8, Failure> {
    let instance = load(&args.instance, None)?;
    let ids = parse_id_list(&args.route)?;
    if let Some(&bad) = ids.iter().find(|&&c| c == 0 || c >= instance.len()) {
        return Err(Failure::usage(format!("unknown customer id {bad}")));
    }
    let route = Route::new(ids)?;

    let config = SolverConfig {
        backend: args.backend.choice(),
        anneal: args.backend.overrides(),
        cache_mode: args.backend.cache_mode(),
        ..SolverConfig::default()
    };
    let backend = make_backend(&config, args.seed);

    let (pre_cost, pre_violations) =
        (route_cost(&route, &instance), simulate_route(&route, &instance)?.violations);

    let (result, outcome_text) = if args.no_repair {
        let raw = backend.solve(&instance, &route)?;
        (raw, "raw".to_string())
    } else {
        let cache = RouteCache::new(config.cache_mode);
        let report = sequence_route_detailed(&route, &instance, backend.as_ref(), &cache)?;
        let text = match report.outcome {
            SequenceOutcome::CacheHit => "cache_hit".to_string(),
            SequenceOutcome::Solved(r) => r.as_str().to_string(),
        };
        (report.route, text)
    };

    let schedule = simulate_route(&result, &instance)?;
    let post_cost = schedule.total_distance;
    println!("pre_cost opt_cost time_violated improved outcome");
    println!(
        "{:.1} {:.1} {} {} {}",
        pre_cost,
        post_cost,
        if schedule.time_feasible { "No" } else { "Yes" },
        if post_cost < pre_cost - 1e-9 { "Yes" } else { "No" },
        outcome_text
    );
    println!("order: {:?}", result.customers());
    println!("pre_violations {} post_violations {}", pre_violations, schedule.violations);
    Ok(0)
}

fn cmd_model(args: ModelArgs) -> Result<u8, Failure> {
    let instance = load(&args.instance, None)?;
    let customers = parse_id_list(&args.customers)?;
    let model = build_tsptw_model(&instance, &customers)?;
    let text = export_lp(&model);
    match args.out {
        Some(path) => {
            std::fs::write(&path, text)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            println!(
                "model with {} variables, {} constraints written to {}",
                model.variables.len(),
                model.constraints.len(),
                path.display()
            );
        }
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<u8, Failure> {
    if args.instances.is_empty() {
        return Err(Failure::usage("bench needs at least one instance"));
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot size thread pool: {e}")))?;
    }
    let bks = load_bks(args.bks.as_deref())?;
    let mut instances = Vec::with_capacity(args.instances.len());
    for arg in &args.instances {
        instances.push(load(arg, args.customers)?);
    }
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let config = SolverConfig {
        backend: args.backend.choice(),
        anneal: args.backend.overrides(),
        tabu: args.tabu.params(args.seed),
        cache_mode: args.backend.cache_mode(),
        measure_runtime: !args.zero_runtime,
        ..SolverConfig::default()
    };

    let rows = run_benchmark(&instances, &config, &seeds, &bks);
    std::fs::write(&args.out, emit_csv(&rows))
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", args.out.display())))?;
    println!("{} rows written to {}", rows.len(), args.out.display());

    for row in rows.iter().filter(|r| r.seed.is_none()) {
        match (row.distance, row.gap_percent) {
            (Some(d), Some(g)) => {
                println!("{}: mean distance {:.2}, gap {:.2}%, feasible {}", row.instance, d, g, row.feasible)
            }
            (Some(d), None) => println!("{}: mean distance {:.2}, feasible {}", row.instance, d, row.feasible),
            _ => println!("{}: failed", row.instance),
        }
    }

    if let Some(plot) = args.plot {
        let averaged: Vec<(&str, f64)> = rows
            .iter()
            .filter(|r| r.seed.is_none())
            .filter_map(|r| r.gap_percent.map(|g| (r.instance.as_str(), g)))
            .collect();
        std::fs::write(&plot, gap_chart_svg(&averaged))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", plot.display())))?;
        println!("gap chart written to {}", plot.display());
    }
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> Result<u8, Failure> {
    let instance = load(&args.instance, None)?;
    let text = std::fs::read_to_string(&args.solution)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.solution.display())))?;
    let doc: output::SolutionJson = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("bad solution JSON: {e}")))?;
    if doc.instance != instance.name {
        return Err(Failure::usage(format!(
            "solution is for `{}`, instance is `{}`",
            doc.instance, instance.name
        )));
    }
    let solution = output::solution_from_json(&doc, &instance)?;
    let mut report = verify_solution(&solution, &instance);
    if doc.feasible != solution.is_feasible() {
        report.push(
            "feasible_flag",
            1.0,
            format!("stored feasible={} but recomputed {}", doc.feasible, solution.is_feasible()),
        );
    }
    if report.is_empty() {
        println!("ok: {} routes, total distance {:.2}", solution.route_count(), solution.total_distance);
        Ok(0)
    } else {
        eprintln!("{report}");
        Ok(EXIT_VIOLATIONS)
    }
}

fn cmd_scaling(args: ScalingArgs) -> Result<u8, Failure> {
    let instance = load(&args.instance, None)?;
    let stops = parse_id_list(&args.stops)?;
    if let Some(&bad) = stops.iter().find(|&&s| s == 0 || s > instance.len() - 1) {
        return Err(Failure::usage(format!("stop count {bad} out of range")));
    }
    let seeds: Vec<u64> = (args.seed..args.seed + args.seeds).collect();
    let config = SolverConfig {
        backend: args.backend.choice(),
        anneal: args.backend.overrides(),
        cache_mode: args.backend.cache_mode(),
        ..SolverConfig::default()
    };
    let backend = make_backend(&config, args.seed);
    let points = scaling_study(&instance, &stops, &seeds, backend.as_ref(), args.repair)?;

    println!("stops violated/runs mean_violation_proportion");
    for p in &points {
        println!("{:>5} {:>8}/{} {:>8.4}", p.stops, p.violated_runs, p.runs, p.mean_violation_proportion);
    }
    std::fs::write(&args.out, emit_scaling_csv(&points))
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", args.out.display())))?;
    println!("scaling series written to {}", args.out.display());
    if let Some(plot) = args.plot {
        std::fs::write(&plot, scaling_chart_svg(&points))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", plot.display())))?;
    }
    Ok(0)
}
