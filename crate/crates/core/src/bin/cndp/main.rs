use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cndp::approx::{self, ApproxParams};
use cndp::equilibrium::{evaluate, solve_wardrop, WardropOptions, DEFAULT_MAX_ITERS, DEFAULT_TOL_GAP};
use cndp::gadgets::{compile, parse_dimacs, verify_witness, DEFAULT_EPSILON};
use cndp::generate::{random_instance, GeneratorConfig};
use cndp::json::{instance_to_json, parse_instance, SolutionFile};
use cndp::oracle::oracle_with;
use cndp::relaxation::solve_budgeted_relaxation;
use cndp::{Algorithm, ClassTag, FunctionClass, Instance};

#[derive(Parser)]
#[command(name = "cndp", version, about = "Capacity design for selfish-routing networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an approximation algorithm and emit a certified solution.
    Solve(SolveArgs),
    /// Solve the capacity relaxation (a lower bound).
    Relax(InstanceArgs),
    /// Exact solution for instances whose commodities share one sink.
    SingleSink(InstanceArgs),
    /// Wardrop equilibrium for given capacities.
    Equilibrium(EquilibriumArgs),
    /// Evaluate costs and equilibrium gaps of a solution.
    Verify(VerifyArgs),
    /// Compile a 3-CNF formula into a network design instance.
    Gadget(GadgetArgs),
    /// Relaxation of the budget-constrained problem.
    BudgetRelax(BudgetArgs),
    /// Guarantee constants of a latency class.
    Constants(ConstantsArgs),
    /// Exhaustive capacity grid search on tiny instances.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Output {
    /// Write JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    class: Option<ClassTag>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative equilibrium gap at which the solver stops.
    #[arg(long, default_value_t = DEFAULT_TOL_GAP)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> WardropOptions {
        WardropOptions { tol_gap: self.tol, max_iters: self.max_iters }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Bte,
    Su,
    Best2,
    Budgeted,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Bte => Algorithm::Bte,
            AlgorithmArg::Su => Algorithm::Su,
            AlgorithmArg::Best2 => Algorithm::Best2,
            AlgorithmArg::Budgeted => Algorithm::Budgeted,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "best2")]
    algorithm: AlgorithmArg,
    /// Run only the algorithm chosen by the routing-fraction rule.
    #[arg(long)]
    dispatch_only: bool,
    /// Latency class the certificate is stated for: poly:<degree>, concave or convex.
    #[arg(long)]
    class: Option<ClassTag>,
    /// Overrides the instance budget for the budgeted algorithm.
    #[arg(long)]
    budget: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Solution JSON whose `capacities` are used.
    #[arg(long)]
    caps: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Solution JSON providing `capacities`.
    #[arg(long)]
    caps: PathBuf,
    /// Solution JSON providing `flows`; defaults to the capacities file.
    #[arg(long)]
    flow: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GadgetArgs {
    /// Formula in DIMACS CNF format.
    #[arg(long)]
    cnf: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Where to write the compiled instance; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Assignment JSON (array of booleans, or an object keyed by variable).
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Where to write the witness solution; standard output if absent.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    budget: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value = "poly:1")]
    class: ClassTag,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, required_unless_present = "random", conflicts_with = "random")]
    instance: Option<PathBuf>,
    /// Use a random single-sink instance with at most three edges.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: Output,
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(path: &Path) -> anyhow::Result<Instance> {
    parse_instance(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_solution(path: &Path) -> anyhow::Result<SolutionFile> {
    SolutionFile::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    emit(out, &serde_json::to_string_pretty(value)?)
}

/// Adds the fields of `extra` to a serialized solution file.
fn merged(file: &SolutionFile, extra: Value) -> anyhow::Result<Value> {
    let mut value = serde_json::to_value(file)?;
    if let (Value::Object(map), Value::Object(extra)) = (&mut value, extra) {
        map.extend(extra);
    }
    Ok(value)
}

fn budgeted(inst: Instance, budget: Option<f64>) -> anyhow::Result<Instance> {
    Ok(match budget {
        Some(b) => inst.with_budget(b)?,
        None => inst,
    })
}

fn parse_assignment(text: &str, num_vars: usize) -> anyhow::Result<Vec<bool>> {
    let value: Value = serde_json::from_str(text)?;
    let assignment = match value {
        Value::Array(items) => items
            .iter()
            .map(|v| v.as_bool().context("assignment arrays hold booleans"))
            .collect::<anyhow::Result<Vec<_>>>()?,
        Value::Object(map) => {
            let mut values = vec![None; num_vars];
            for (key, v) in map {
                let index: usize = key
                    .trim_start_matches('x')
                    .parse()
                    .with_context(|| format!("bad variable key `{key}`"))?;
                if index == 0 || index > num_vars {
                    bail!("variable {index} outside 1..={num_vars}");
                }
                values[index - 1] = Some(v.as_bool().context("assignment values are booleans")?);
            }
            values
                .into_iter()
                .enumerate()
                .map(|(i, v)| v.with_context(|| format!("variable {} has no value", i + 1)))
                .collect::<anyhow::Result<Vec<_>>>()?
        }
        _ => bail!("assignment must be an array or an object"),
    };
    if assignment.len() != num_vars {
        bail!("assignment has {} values for {num_vars} variables", assignment.len());
    }
    Ok(assignment)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let inst = budgeted(load_instance(&args.instance)?, args.budget)?;
            let params = ApproxParams {
                class: args.class,
                wardrop: args.solver.options(),
                dispatch_only: args.dispatch_only,
            };
            let sol = approx::solve(&inst, args.algorithm.into(), &params)?;
            let file = SolutionFile::new(&inst, &sol.flow, &sol.caps).with_certificate(sol.certificate);
            emit(args.output.out.as_deref(), &file.to_json())
        }
        Command::Relax(args) => relaxed(args, Algorithm::Relax),
        Command::SingleSink(args) => relaxed(args, Algorithm::SingleSink),
        Command::Equilibrium(args) => {
            let inst = load_instance(&args.instance)?;
            let caps = load_solution(&args.caps)?.capacities_for(&inst)?;
            let eq = solve_wardrop(&inst, &caps, args.solver.options())?;
            let mut file = SolutionFile::new(&inst, &eq.flow, &caps);
            let mut report = evaluate(&inst, &caps, &eq.flow);
            report.iterations = Some(eq.iterations);
            file.report = Some(report);
            emit(args.output.out.as_deref(), &file.to_json())
        }
        Command::Verify(args) => {
            let inst = load_instance(&args.instance)?;
            let caps = load_solution(&args.caps)?.capacities_for(&inst)?;
            let flow_file = match &args.flow {
                Some(path) => load_solution(path)?,
                None => load_solution(&args.caps)?,
            };
            let flow = flow_file.flows_for(&inst)?;
            emit_json(args.output.out.as_deref(), &evaluate(&inst, &caps, &flow))
        }
        Command::Gadget(args) => {
            let formula = parse_dimacs(&read(&args.cnf)?)
                .with_context(|| format!("in {}", args.cnf.display()))?;
            let gadget = compile(&formula, args.epsilon)?;
            emit(args.out.as_deref(), &instance_to_json(&gadget.instance))?;
            if let Some(path) = &args.witness {
                let assignment = parse_assignment(&read(path)?, formula.num_vars())
                    .with_context(|| format!("in {}", path.display()))?;
                let (flow, caps) = gadget.witness(&assignment)?;
                let report = verify_witness(&gadget, &flow, &caps);
                log::info!("witness {report}");
                let file = SolutionFile::new(&gadget.instance, &flow, &caps);
                let value = merged(
                    &file,
                    json!({
                        "witness": {
                            "pass": report.pass(),
                            "total": report.total,
                            "expected": report.expected,
                            "cost_error": report.cost_error,
                            "equilibrium_gap": report.equilibrium_gap,
                            "unsatisfiable_lower_bound": gadget.unsatisfiable_lower_bound(),
                        }
                    }),
                )?;
                emit_json(args.witness_out.as_deref(), &value)?;
            }
            Ok(())
        }
        Command::BudgetRelax(args) => {
            let inst = budgeted(load_instance(&args.instance)?, args.budget)?;
            let relax = solve_budgeted_relaxation(&inst)?;
            let file = SolutionFile::new(&inst, &relax.flow, &relax.caps);
            let value = merged(
                &file,
                json!({
                    "routing_cost": relax.routing_cost,
                    "spent": relax.spent,
                    "budget": relax.budget,
                    "multiplier": relax.multiplier,
                    "dual_bound": relax.dual_bound,
                    "candidates": relax.candidates,
                    "slack_warning": relax.slack_warning,
                }),
            )?;
            emit_json(args.output.out.as_deref(), &value)
        }
        Command::Constants(args) => {
            let class = FunctionClass::new(args.class);
            let mut out = BTreeMap::new();
            out.insert("mu", json!(class.mu));
            out.insert("gamma", json!(class.gamma));
            out.insert("guarantee_single", json!(class.guarantee_single()));
            out.insert("guarantee_best2", json!(class.guarantee_best2()));
            out.insert("p_star", json!(class.p_star()));
            out.insert("guarantee_budget", json!(class.guarantee_budget()));
            out.insert("class", json!(class.tag.to_string()));
            emit_json(None, &out)
        }
        Command::Oracle(args) => {
            let (inst, random) = match &args.instance {
                Some(path) => (load_instance(path)?, false),
                None => {
                    let cfg = GeneratorConfig {
                        max_nodes: 3,
                        max_edges: 3,
                        max_commodities: 2,
                        single_sink: true,
                        strict_only: true,
                        ..Default::default()
                    };
                    (random_instance(args.seed, &cfg)?, true)
                }
            };
            let res = oracle_with(&inst, args.resolution, args.solver.options())?;
            let file = SolutionFile::new(&inst, &res.flow, &res.caps);
            let mut extra = json!({
                "cost": res.cost,
                "z_max": res.z_max,
                "evaluated": res.evaluated,
                "resolution": args.resolution,
            });
            if random {
                extra["instance"] = serde_json::from_str(&instance_to_json(&inst))?;
            }
            emit_json(args.output.out.as_deref(), &merged(&file, extra)?)
        }
    }
}

fn relaxed(args: InstanceArgs, algorithm: Algorithm) -> anyhow::Result<()> {
    let inst = load_instance(&args.instance)?;
    let params = ApproxParams { class: args.class, ..Default::default() };
    let sol = approx::solve(&inst, algorithm, &params)?;
    let file = SolutionFile::new(&inst, &sol.flow, &sol.caps).with_certificate(sol.certificate);
    emit(args.output.out.as_deref(), &file.to_json())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CNDP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
