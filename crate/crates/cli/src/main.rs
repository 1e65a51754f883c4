use clap::{Args, Parser, Subcommand};
use errdom::biorth::pairing_matrix;
use errdom::driver::{
    base_mesh, cached_reference, demo_csv, overestimation_demo, parse_load, run_with, table_csv, write_outputs,
    DemoConfig, ExperimentConfig, Preset,
};
use errdom::estimators::{
    discretized_residual_on_bubbles, equilibrated_flux, estimate, oscillation_hz, residual_on_bubbles,
    CONSTRAINT_TOLERANCE,
};
use errdom::fem::{assemble, energy_norm_diff, solve_galerkin};
use errdom::mesh::unit_square;
use errdom::projection::discretized_residual;
use errdom::{EstimatorFamily, Load, Mesh, P1Function};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

const FAMILIES: [&str; 4] = ["hier", "res", "local", "equil"];

#[derive(Parser)]
#[command(name = "errdom", version, about = "A-posteriori error estimation experiments for P1 Poisson problems")]
struct Cli {
    /// Flat `key = value` configuration file. Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON outputs. Without it the CSV goes to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Problem {
    /// Built-in load: sine, discrete_laplacian or face_dirac.
    #[arg(long)]
    preset: Option<String>,
    /// JSON load description on the initial mesh; replaces the preset.
    #[arg(long)]
    load: Option<PathBuf>,
    /// Uniform refinements of the initial mesh for the reference solution.
    #[arg(long)]
    reference_level: Option<usize>,
    /// Refinement depth of the oscillation oracle (0 skips it).
    #[arg(long)]
    oracle_depth: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Galerkin solution on the initial mesh refined `level` times.
    Solve {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Indicators of one estimator family.
    Estimate {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_parser = FAMILIES)]
        family: Option<String>,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// The adaptive loop with Dörfler marking.
    Adapt {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_parser = FAMILIES)]
        family: Option<String>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        max_dofs: Option<usize>,
    },
    /// Classical against error-dominated oscillation for mollified line loads.
    DemoOverestimation {
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        mesh_level: Option<usize>,
        #[arg(long)]
        line: Option<f64>,
        #[arg(long)]
        reference_level: Option<usize>,
        #[arg(long)]
        oracle_depth: Option<usize>,
    },
    /// Biorthogonality of the test functions on the square and its refinements.
    ValidateBiorth {
        #[arg(long, default_value_t = 3)]
        rounds: usize,
    },
}

/// One asserted inequality `value <= bound`.
struct Check {
    name: String,
    value: f64,
    bound: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound }
    }

    fn holds(&self) -> bool {
        self.value <= self.bound
    }

    fn to_json(&self) -> Value {
        json!({ "name": self.name, "value": self.value, "bound": self.bound, "holds": self.holds() })
    }
}

/// What a command produced: a table, a summary and its checks.
struct Outcome {
    stem: &'static str,
    csv: String,
    summary: Value,
    checks: Vec<Check>,
}

fn base_config(cli: &Cli) -> errdom::Result<ExperimentConfig> {
    match &cli.config {
        Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: Option<impl ToString>) -> errdom::Result<()> {
    match value {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn apply_problem(cfg: &mut ExperimentConfig, p: &Problem) -> errdom::Result<()> {
    apply(cfg, "preset", p.preset.as_ref())?;
    apply(cfg, "reference_level", p.reference_level)?;
    apply(cfg, "oracle_depth", p.oracle_depth)
}

/// The load, its cache key and whether it is the exact discrete Laplacian.
fn resolve_load(cfg: &ExperimentConfig, p: &Problem) -> errdom::Result<(Arc<Load>, String, bool)> {
    match &p.load {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let dir = path.parent().unwrap_or(Path::new("."));
            let load = parse_load(&text, &base_mesh(), dir)?;
            Ok((Arc::new(load), format!("file:{}", path.display()), false))
        }
        None => Ok((cfg.preset.load(), cfg.preset.name().to_owned(), cfg.preset == Preset::DiscreteLaplacian)),
    }
}

fn reference(cfg: &ExperimentConfig, p: &Problem, load: &Load, key: &str) -> errdom::Result<Arc<P1Function>> {
    if p.load.is_none() {
        return cfg.preset.reference(cfg.reference_level);
    }
    cached_reference(&format!("{key}:{}", cfg.reference_level), cfg.reference_level, load)
}

fn mesh_at(level: usize) -> Arc<Mesh> {
    Arc::new(base_mesh().refine_uniform_times(level))
}

fn solve(cli: &Cli, problem: &Problem, level: usize) -> errdom::Result<Outcome> {
    let mut cfg = base_config(cli)?;
    apply_problem(&mut cfg, problem)?;
    let (load, key, exact) = resolve_load(&cfg, problem)?;
    let mesh = mesh_at(level);
    let u = solve_galerkin(&mesh, &load)?;
    let sys = assemble(&mesh, &load)?;
    let x: Vec<f64> = sys.dof_vertex.iter().map(|&z| u.values[z]).collect();
    let mut ax = vec![0.0; x.len()];
    sys.matrix.matvec(&x, &mut ax);
    let scale = sys.rhs.iter().map(|b| b * b).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let defect = ax.iter().zip(&sys.rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / scale;
    let u_ref = reference(&cfg, problem, &load, &key)?;
    let error = energy_norm_diff(&u_ref, &u)?;
    let mut checks = vec![Check::new("relative algebraic residual", defect, 1e-10)];
    if exact {
        checks.push(Check::new("error of the exact discrete solution", error, 1e-10));
    }
    let mut csv = String::from("vertex,x,y,u\n");
    for (z, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(csv, "{z},{},{},{:.15e}", v.coords[0], v.coords[1], u.values[z]);
    }
    let summary = json!({
        "load": key,
        "level": level,
        "elements": mesh.num_elements(),
        "interior_vertices": mesh.num_interior_vertices(),
        "energy_error": error,
        "reference_level": cfg.reference_level,
    });
    Ok(Outcome { stem: "solution", csv, summary, checks })
}

fn estimate_cmd(cli: &Cli, problem: &Problem, family: Option<&String>, level: usize) -> errdom::Result<Outcome> {
    let mut cfg = base_config(cli)?;
    apply_problem(&mut cfg, problem)?;
    apply(&mut cfg, "family", family)?;
    let (load, key, exact) = resolve_load(&cfg, problem)?;
    let mesh = mesh_at(level);
    let u = solve_galerkin(&mesh, &load)?;
    let report = estimate(cfg.family, &load, &u)?;
    let sum: f64 = report.values.iter().map(|v| v.2 * v.2).sum();
    let mut checks =
        vec![Check::new("|global^2 - sum of squares|", (report.global.powi(2) - sum).abs(), 1e-12 * sum.max(1.0))];
    if exact {
        checks.push(Check::new("largest indicator for the exact discrete solution", report.max_value(), 1e-10));
    }
    let u_ref = reference(&cfg, problem, &load, &key)?;
    let error = energy_norm_diff(&u_ref, &u)?;
    match cfg.family {
        EstimatorFamily::Hierarchical => {
            let direct = residual_on_bubbles(&load, &u)?;
            let via = discretized_residual_on_bubbles(&discretized_residual(&load, &u)?);
            let scale = direct.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
            let gap = direct.iter().zip(&via).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            checks.push(Check::new("bubble pairings, direct against discretized", gap, 1e-12 * scale));
        }
        EstimatorFamily::Equilibrated => {
            let flux = equilibrated_flux(&load, &u)?;
            checks.push(Check::new("flux constraint residual", flux.max_constraint_residual, CONSTRAINT_TOLERANCE));
            if cfg.oracle_depth > 0 {
                let osc = oscillation_hz(&load, &mesh, cfg.oracle_depth)?;
                let bound: f64 = 3.0 * flux.report.values.iter().map(|&(_, z, xi)| (xi + osc[z]).powi(2)).sum::<f64>();
                checks.push(Check::new("error^2 against 3 sum (|Xi_z| + osc_z)^2", error * error, 1.1 * bound));
            }
        }
        _ => {}
    }
    let summary = json!({
        "load": key,
        "family": cfg.family.name(),
        "level": level,
        "global": report.global,
        "energy_error": error,
        "efficiency_index": if error > 0.0 { report.global / error } else { f64::NAN },
    });
    Ok(Outcome { stem: "estimate", csv: report.to_csv(), summary, checks })
}

struct AdaptFlags<'a> {
    family: Option<&'a String>,
    theta: Option<f64>,
    rounds: Option<usize>,
    max_dofs: Option<usize>,
}

fn adapt(cli: &Cli, problem: &Problem, flags: AdaptFlags<'_>) -> errdom::Result<Outcome> {
    let mut cfg = base_config(cli)?;
    apply_problem(&mut cfg, problem)?;
    apply(&mut cfg, "family", flags.family)?;
    apply(&mut cfg, "theta", flags.theta)?;
    apply(&mut cfg, "rounds", flags.rounds)?;
    apply(&mut cfg, "max_dofs", flags.max_dofs)?;
    cfg.validate()?;
    let (load, key, exact) = resolve_load(&cfg, problem)?;
    let u_ref = reference(&cfg, problem, &load, &key)?;
    let outcome = run_with(&cfg, &load, &u_ref)?;
    if let Some(dir) = output_dir(cli, &cfg) {
        write_outputs(&outcome, &dir, "adapt")?;
    }
    let rows = &outcome.rows;
    let shrinking = rows.windows(2).filter(|w| w[1].interior_vertices < w[0].interior_vertices).count();
    let mut checks = vec![Check::new("rounds with fewer vertices than the previous", shrinking as f64, 0.0)];
    if exact {
        let worst = rows.iter().map(|r| r.error.max(r.estimator)).fold(0.0, f64::max);
        checks.push(Check::new("largest error or estimator for the exact discrete solution", worst, 1e-10));
    }
    let summary = json!({
        "load": key,
        "family": cfg.family.name(),
        "theta": cfg.theta,
        "rounds": rows.len(),
        "budget_exhausted": outcome.budget_exhausted,
    });
    Ok(Outcome { stem: "adapt", csv: table_csv(rows), summary, checks })
}

fn demo(cli: &Cli, cmd: &Command) -> errdom::Result<Outcome> {
    let Command::DemoOverestimation { steps, mesh_level, line, reference_level, oracle_depth } = cmd else {
        unreachable!()
    };
    let base = base_config(cli)?;
    let mut cfg = DemoConfig::default();
    if cli.config.is_some() {
        cfg.reference_level = base.reference_level;
        cfg.oracle_depth = base.oracle_depth;
    }
    cfg.steps = steps.unwrap_or(cfg.steps);
    cfg.mesh_level = mesh_level.unwrap_or(cfg.mesh_level);
    cfg.line = line.unwrap_or(cfg.line);
    cfg.reference_level = reference_level.unwrap_or(cfg.reference_level);
    cfg.oracle_depth = oracle_depth.unwrap_or(cfg.oracle_depth);
    if cfg.steps < 2 {
        return Err(errdom::Error::Config("the demonstration needs at least two steps".into()));
    }
    let rows = overestimation_demo(&cfg)?;
    let classical: Vec<f64> = rows.iter().map(|r| r.classical_ratio).collect();
    let dominated: Vec<f64> = rows.iter().map(|r| r.dominated_ratio).collect();
    let growth = classical[classical.len() - 1] / classical[0];
    let band = dominated.iter().cloned().fold(0.0, f64::max) / dominated.iter().cloned().fold(f64::INFINITY, f64::min);
    let drops = classical.windows(2).filter(|w| w[1] <= w[0]).count();
    let checks = vec![
        Check::new("steps where osc0/error does not grow", drops as f64, 0.0),
        Check::new("1 / growth of osc0/error", 1.0 / growth, 0.1),
        Check::new("band factor of the error-dominated ratio", band, 2.0),
    ];
    let summary = json!({
        "steps": cfg.steps,
        "mesh_level": cfg.mesh_level,
        "line": cfg.line,
        "reference_level": cfg.reference_level,
        "oracle_depth": cfg.oracle_depth,
        "classical_growth": growth,
        "dominated_band": band,
    });
    Ok(Outcome { stem: "demo_overestimation", csv: demo_csv(&rows), summary, checks })
}

fn validate_biorth(rounds: usize) -> Outcome {
    let mut mesh = unit_square();
    let mut csv = String::from("round,elements,indices,max_identity_deviation\n");
    let mut checks = Vec::new();
    for round in 0..=rounds {
        if round > 0 {
            let all: Vec<usize> = (0..mesh.num_elements()).collect();
            mesh = mesh.refine_nvb(&all).expect("every element index is valid").mesh;
        }
        let pm = pairing_matrix(&mesh);
        let dev = pm.max_identity_deviation();
        let _ = writeln!(csv, "{round},{},{},{dev:e}", mesh.num_elements(), pm.size);
        checks.push(Check::new(format!("round {round}: max |<chi_i, psi_j> - delta_ij|"), dev, 1e-12));
    }
    Outcome { stem: "biorth", csv, summary: json!({ "rounds": rounds }), checks }
}

fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> Option<PathBuf> {
    cli.output.clone().or_else(|| cfg.output.clone())
}

fn execute(cli: &Cli) -> errdom::Result<Outcome> {
    match &cli.command {
        Command::Solve { problem, level } => solve(cli, problem, *level),
        Command::Estimate { problem, family, level } => estimate_cmd(cli, problem, family.as_ref(), *level),
        Command::Adapt { problem, family, theta, rounds, max_dofs } => adapt(
            cli,
            problem,
            AdaptFlags { family: family.as_ref(), theta: *theta, rounds: *rounds, max_dofs: *max_dofs },
        ),
        cmd @ Command::DemoOverestimation { .. } => demo(cli, cmd),
        Command::ValidateBiorth { rounds } => Ok(validate_biorth(*rounds)),
    }
}

fn report(cli: &Cli, outcome: &Outcome) -> errdom::Result<()> {
    let cfg = base_config(cli)?;
    let checks: Vec<Value> = outcome.checks.iter().map(Check::to_json).collect();
    let mut summary = outcome.summary.clone();
    summary["checks"] = Value::Array(checks);
    summary["all_hold"] = Value::Bool(outcome.checks.iter().all(Check::holds));
    match output_dir(cli, &cfg) {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join(format!("{}.csv", outcome.stem)), &outcome.csv)?;
            std::fs::write(dir.join(format!("{}.json", outcome.stem)), serde_json::to_string_pretty(&summary)?)?;
        }
        None => print!("{}", outcome.csv),
    }
    for c in &outcome.checks {
        eprintln!("{} {}: {:.6e} <= {:.6e}", if c.holds() { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match execute(&cli).and_then(|o| report(&cli, &o).map(|()| o)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if outcome.checks.iter().all(Check::holds) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
