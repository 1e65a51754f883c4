//! Experiments: the adaptive loop, convergence tables and the demonstration
//! that classical oscillation can dwarf the error.

mod config;
mod description;
mod presets;

pub use config::{ExperimentConfig, KEYS as CONFIG_KEYS};
pub use description::parse_load;
pub use presets::{base_mesh, cached_reference, square_mesh, Preset, BASE_LEVEL, DEFAULT_REFERENCE_LEVEL};

use crate::error::{Error, Result};
use crate::estimators::{classical_osc0, estimate, oscillation};
use crate::fem::{energy_norm_diff, solve_galerkin, P1Function};
use crate::load::Load;
use crate::mesh::Mesh;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// One round of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub round: usize,
    pub elements: usize,
    pub interior_vertices: usize,
    /// `‖∇(u_ref − U)‖`.
    pub error: f64,
    pub estimator: f64,
    /// `(Σ_z osc_z²)^{1/2}`, absent when the oracle depth is zero.
    pub oscillation: Option<f64>,
    /// Slope of `log error` against `log interior_vertices` since the previous round.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub rows: Vec<ConvergenceRow>,
    /// Set when the DOF budget stopped the loop before `rounds` rows.
    pub budget_exhausted: bool,
}

/// Indices of a minimal set of elements whose squared indicators sum to at
/// least `theta` times the total. Ties are broken by element index.
pub fn dorfler_mark(squared: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = squared.iter().sum();
    let mut order: Vec<usize> = (0..squared.len()).collect();
    order.sort_by(|&a, &b| squared[b].total_cmp(&squared[a]).then(a.cmp(&b)));
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for k in order {
        if acc >= theta * total {
            break;
        }
        acc += squared[k];
        marked.push(k);
    }
    marked
}

/// The refined mesh for the next round. `theta = 1` and indicators that
/// vanish everywhere both lead to uniform refinement.
fn refine(mesh: &Mesh, squared: &[f64], theta: f64) -> Result<Mesh> {
    if theta >= 1.0 || squared.iter().all(|&v| v == 0.0) {
        return Ok(mesh.refine_uniform().mesh);
    }
    Ok(mesh.refine_nvb(&dorfler_mark(squared, theta))?.mesh)
}

/// SOLVE, ESTIMATE, MARK and REFINE for the configured preset.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let load = config.preset.load();
    let reference = config.preset.reference(config.reference_level)?;
    run_with(config, &load, &reference)
}

/// [`run`] with an explicit load and reference solution on the family of [`base_mesh`].
pub fn run_with(config: &ExperimentConfig, load: &Load, reference: &P1Function) -> Result<RunOutcome> {
    config.validate()?;
    let mut mesh = base_mesh();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(config.rounds);
    let mut budget_exhausted = false;
    for round in 0..config.rounds {
        if mesh.num_interior_vertices() > config.max_dofs {
            budget_exhausted = true;
            break;
        }
        let u = solve_galerkin(&mesh, load)?;
        let report = estimate(config.family, load, &u)?;
        let osc = if config.oracle_depth > 0 {
            Some(oscillation(load, &mesh, config.oracle_depth)?.iter().map(|x| x * x).sum::<f64>().sqrt())
        } else {
            None
        };
        let error = energy_norm_diff(reference, &u)?;
        let dofs = mesh.num_interior_vertices();
        let rate = rows.last().and_then(|prev| observed_rate(prev.error, prev.interior_vertices, error, dofs));
        rows.push(ConvergenceRow {
            round,
            elements: mesh.num_elements(),
            interior_vertices: dofs,
            error,
            estimator: report.global,
            oscillation: osc,
            rate,
        });
        if round + 1 < config.rounds {
            mesh = Arc::new(refine(&mesh, &report.element_indicators(&mesh), config.theta)?);
        }
    }
    Ok(RunOutcome { rows, budget_exhausted })
}

fn observed_rate(e0: f64, n0: usize, e1: f64, n1: usize) -> Option<f64> {
    (e0 > 0.0 && e1 > 0.0 && n1 > n0).then(|| (e1 / e0).ln() / (n1 as f64 / n0 as f64).ln())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.12e}"))
}

pub const TABLE_HEADER: &str = "round,elements,interior_vertices,error,estimator,oscillation,rate";

pub fn table_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = format!("{TABLE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.12e},{:.12e},{},{}",
            r.round,
            r.elements,
            r.interior_vertices,
            r.error,
            r.estimator,
            opt(r.oscillation),
            opt(r.rate)
        );
    }
    s
}

/// Writes `<stem>.csv` and a gnuplot script `<stem>.gp` that draws error and
/// estimator against interior vertices on log-log axes. Returns both paths.
pub fn emit_plots(rows: &[ConvergenceRow], dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let script = dir.join(format!("{stem}.gp"));
    std::fs::write(&csv, table_csv(rows))?;
    let name = csv.file_name().and_then(|n| n.to_str()).unwrap_or("table.csv");
    let text = format!(
        "# columns: {TABLE_HEADER}\n\
         set datafile separator ','\n\
         set logscale xy\n\
         set key autotitle columnhead\n\
         set xlabel 'interior vertices'\n\
         set terminal pngcairo size 800,600\n\
         set output '{stem}.png'\n\
         plot '{name}' using 3:4 with linespoints title 'error', \\\n\
         \x20    '{name}' using 3:5 with linespoints title 'estimator'\n"
    );
    std::fs::write(&script, text)?;
    Ok((csv, script))
}

/// Writes the table, the plot script and a JSON copy of the outcome.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path, stem: &str) -> Result<()> {
    emit_plots(&outcome.rows, dir, stem)?;
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(outcome)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub steps: usize,
    /// Uniform refinements of the unit square giving the fixed mesh.
    pub mesh_level: usize,
    /// The surface load sits on the line `x = line`.
    pub line: f64,
    pub reference_level: usize,
    pub oracle_depth: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self { steps: 6, mesh_level: 0, line: 0.5, reference_level: 6, oracle_depth: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoRow {
    pub k: usize,
    pub width: f64,
    pub background_elements: usize,
    pub error: f64,
    pub osc0: f64,
    /// `(Σ_z ‖f_k − P_M f_k‖²_{H⁻¹(ω_z)})^{1/2}`.
    pub oscillation: f64,
    pub classical_ratio: f64,
    pub dominated_ratio: f64,
}

/// Refinement of `mesh` on which the strip `|x − line| < width/2` is a
/// union of elements, obtained by bisecting every element the strip edges cut.
pub fn strip_background(mesh: &Arc<Mesh>, line: f64, width: f64) -> Result<Arc<Mesh>> {
    let edges = [line - width / 2.0, line + width / 2.0];
    let mut mesh = mesh.clone();
    loop {
        let cut: Vec<usize> = (0..mesh.num_elements())
            .filter(|&k| {
                let p = mesh.coords(k);
                edges.iter().any(|&e| p.iter().any(|v| v[0] < e - 1e-12) && p.iter().any(|v| v[0] > e + 1e-12))
            })
            .collect();
        if cut.is_empty() {
            return Ok(mesh);
        }
        mesh = Arc::new(mesh.refine_nvb(&cut)?.mesh);
    }
}

/// Density `1/width` on the strip of the given width around `x = line`.
pub fn mollified_line_load(mesh: &Arc<Mesh>, line: f64, width: f64) -> Result<Load> {
    let bg = strip_background(mesh, line, width)?;
    let values: Vec<f64> = (0..bg.num_elements())
        .map(|k| {
            let p = bg.coords(k);
            let cx = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
            if (cx - line).abs() < width / 2.0 {
                1.0 / width
            } else {
                0.0
            }
        })
        .collect();
    Ok(Load::element_constants(&bg, &values))
}

/// For `k = 1..=steps` and `width = 2^{-k}`, compares classical and
/// error-dominated oscillation of the mollified line load on a fixed mesh.
pub fn overestimation_demo(cfg: &DemoConfig) -> Result<Vec<DemoRow>> {
    let mesh = square_mesh(cfg.mesh_level);
    (1..=cfg.steps)
        .map(|k| {
            let width = 0.5f64.powi(k as i32);
            let f = mollified_line_load(&mesh, cfg.line, width)?;
            let background_elements = f.terms()[0].background().num_elements();
            let key = format!("strip:{}:{}:{k}:{}", cfg.mesh_level, cfg.line, cfg.reference_level);
            let reference = cached_reference(&key, cfg.reference_level, &f)?;
            let u = solve_galerkin(&mesh, &f)?;
            let error = energy_norm_diff(&reference, &u)?;
            let (osc0, _) = classical_osc0(&f, &mesh)?;
            let osc = oscillation(&f, &mesh, cfg.oracle_depth)?.iter().map(|x| x * x).sum::<f64>().sqrt();
            if error == 0.0 {
                return Err(Error::Config("demo error vanished; reference level too coarse".into()));
            }
            Ok(DemoRow {
                k,
                width,
                background_elements,
                error,
                osc0,
                oscillation: osc,
                classical_ratio: osc0 / error,
                dominated_ratio: (osc * osc) / (error * error),
            })
        })
        .collect()
}

pub fn demo_csv(rows: &[DemoRow]) -> String {
    let mut s = String::from("k,width,background_elements,error,osc0,oscillation,classical_ratio,dominated_ratio\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.k, r.width, r.background_elements, r.error, r.osc0, r.oscillation, r.classical_ratio, r.dominated_ratio
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dorfler_picks_minimal_prefix() {
        assert_eq!(dorfler_mark(&[1.0, 4.0, 2.0, 3.0], 0.5), vec![1, 3]);
        assert_eq!(dorfler_mark(&[1.0, 1.0], 1.0), vec![0, 1]);
        assert!(dorfler_mark(&[0.0, 0.0], 0.5).is_empty());
    }

    #[test]
    fn strip_is_resolved() {
        let bg = strip_background(&base_mesh(), 0.3125, 0.125).unwrap();
        for k in 0..bg.num_elements() {
            for e in [0.3125 - 0.0625, 0.3125 + 0.0625] {
                let p = bg.coords(k);
                assert!(!(p.iter().any(|v| v[0] < e - 1e-12) && p.iter().any(|v| v[0] > e + 1e-12)));
            }
        }
    }

    #[test]
    fn rates() {
        assert!((observed_rate(1.0, 10, 0.5, 40).unwrap() + 0.5).abs() < 1e-14);
        assert!(observed_rate(1.0, 10, 0.5, 10).is_none());
    }
}
