//! Estimator families and the oscillation term.
//!
//! Every family is computed from the load `f` and the Galerkin solution
//! `U`; hierarchical and residual indicators are indexed by elements and
//! interior faces, local-problem and equilibrated ones by vertices.

mod flux;

pub use flux::{equilibrated_flux, flux_from, FluxReport, CONSTRAINT_TOLERANCE};

use crate::biorth::{chi_pairings, lambda, star_indices, Index, TestFunction};
use crate::dualnorm::{oracle_dual_norm, oracle_hz_norm, Region};
use crate::error::{Error, LoadError, SolveError};
use crate::fem::P1Function;
use crate::load::Load;
use crate::mesh::Mesh;
use crate::parallel::par_map;
use crate::poly::grad_inner_integral;
use crate::projection::{discretized_residual, project, DiscretizedResidual};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorFamily {
    Hierarchical,
    Residual,
    LocalProblem,
    Equilibrated,
}

impl EstimatorFamily {
    pub const ALL: [EstimatorFamily; 4] = [
        EstimatorFamily::Hierarchical,
        EstimatorFamily::Residual,
        EstimatorFamily::LocalProblem,
        EstimatorFamily::Equilibrated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorFamily::Hierarchical => "hierarchical",
            EstimatorFamily::Residual => "residual",
            EstimatorFamily::LocalProblem => "local_problem",
            EstimatorFamily::Equilibrated => "equilibrated",
        }
    }
}

impl FromStr for EstimatorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "hier" | "hierarchical" => Ok(EstimatorFamily::Hierarchical),
            "res" | "residual" => Ok(EstimatorFamily::Residual),
            "local" | "local_problem" => Ok(EstimatorFamily::LocalProblem),
            "equil" | "equilibrated" => Ok(EstimatorFamily::Equilibrated),
            other => Err(Error::Config(format!("unknown estimator family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Element,
    Face,
    Vertex,
}

impl IndexKind {
    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Element => "element",
            IndexKind::Face => "face",
            IndexKind::Vertex => "vertex",
        }
    }
}

/// Local indicators of one family and their square-sum root.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub family: EstimatorFamily,
    /// `(kind, entity index, indicator ≥ 0)`.
    pub values: Vec<(IndexKind, usize, f64)>,
    pub global: f64,
    /// Per-vertex oscillation, when computed.
    pub oscillation: Option<Vec<f64>>,
}

impl EstimatorReport {
    fn new(family: EstimatorFamily, values: Vec<(IndexKind, usize, f64)>) -> Self {
        let global = values.iter().map(|v| v.2 * v.2).sum::<f64>().sqrt();
        Self { family, values, global, oscillation: None }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.2))
    }

    pub fn oscillation_global(&self) -> Option<f64> {
        self.oscillation.as_ref().map(|o| o.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// Squared indicators distributed to elements: an index shared by `n`
    /// elements gives each of them `1/n` of its square.
    pub fn element_indicators(&self, mesh: &Mesh) -> Vec<f64> {
        let mut out = vec![0.0; mesh.num_elements()];
        for &(kind, i, v) in &self.values {
            let owners: &[usize] = match kind {
                IndexKind::Element => std::slice::from_ref(&i),
                IndexKind::Face => mesh.faces()[i].adjacent(),
                IndexKind::Vertex => mesh.star_elements(i),
            };
            let share = v * v / owners.len() as f64;
            for &k in owners {
                out[k] += share;
            }
        }
        out
    }

    /// CSV with header `family,index_kind,index,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,index_kind,index,value\n");
        for &(kind, i, v) in &self.values {
            let _ = writeln!(s, "{},{},{},{:e}", self.family.name(), kind.name(), i, v);
        }
        if let Some(osc) = &self.oscillation {
            for (z, v) in osc.iter().enumerate() {
                let _ = writeln!(s, "oscillation,vertex,{z},{v:e}");
            }
        }
        s
    }
}

fn index_kind(i: Index) -> IndexKind {
    match i {
        Index::Element(_) => IndexKind::Element,
        Index::Face(_) => IndexKind::Face,
    }
}

fn all_indices(mesh: &Mesh) -> impl Iterator<Item = Index> + '_ {
    (0..mesh.num_elements()).map(Index::Element).chain(mesh.interior_faces().iter().map(|&f| Index::Face(f)))
}

/// `(∇U, ∇v)` for a local function `v`.
fn stiffness_pairing(u: &P1Function, v: &TestFunction) -> f64 {
    let mesh = &u.mesh;
    v.parts.iter().map(|(k, p)| grad_inner_integral(&u.local_poly(*k), p, &mesh.bary_grads(*k), mesh.area(*k))).sum()
}

/// `⟨f + ΔU, λ_i⟩ = ⟨f, λ_i⟩ − (∇U, ∇λ_i)` for every `i ∈ ℐ`, in `ℐ` order.
pub fn residual_on_bubbles(f: &Load, u: &P1Function) -> Result<Vec<f64>, LoadError> {
    let mesh = &u.mesh;
    let ev = f.evaluator(mesh)?;
    all_indices(mesh)
        .map(|i| {
            let l = lambda(mesh, i);
            Ok(ev.pair_local(&l.parts)? - stiffness_pairing(u, &l))
        })
        .collect()
}

/// The same pairings computed as `⟨P_M f + ΔU, λ_i⟩` from the discretized residual.
pub fn discretized_residual_on_bubbles(r: &DiscretizedResidual) -> Vec<f64> {
    let mesh = &r.mesh;
    all_indices(mesh)
        .map(|i| chi_pairings(mesh, &lambda(mesh, i)).iter().map(|&(j, v)| r.coefficient(j) * v).sum())
        .collect()
}

/// `E_H(i) = |⟨f + ΔU, λ_i⟩| / ‖∇λ_i‖`.
pub fn hierarchical(f: &Load, u: &P1Function) -> Result<EstimatorReport, Error> {
    let mesh = &u.mesh;
    let pairs = residual_on_bubbles(f, u)?;
    let values = all_indices(mesh)
        .zip(pairs)
        .map(|(i, p)| (index_kind(i), i.entity(), p.abs() / lambda(mesh, i).grad_norm))
        .collect();
    Ok(EstimatorReport::new(EstimatorFamily::Hierarchical, values))
}

/// `E_R(F) = |F| |c_F|` and `E_R(K) = h_K |c_K| |K|^{1/2}` from the
/// discretized residual `c`.
pub fn residual(f: &Load, u: &P1Function) -> Result<EstimatorReport, Error> {
    let r = discretized_residual(f, u)?;
    Ok(residual_from(&r))
}

pub fn residual_from(r: &DiscretizedResidual) -> EstimatorReport {
    let mesh = &r.mesh;
    let mut values = Vec::with_capacity(r.element.len() + r.face.len());
    for (k, c) in r.element.iter().enumerate() {
        let g = mesh.geometry(k);
        values.push((IndexKind::Element, k, g.diameter * c.abs() * g.area.sqrt()));
    }
    for (&fc, c) in mesh.interior_faces().iter().zip(&r.face) {
        let len = mesh.face_length(fc);
        values.push((IndexKind::Face, fc, len.sqrt() * c.abs() * len.sqrt()));
    }
    EstimatorReport::new(EstimatorFamily::Residual, values)
}

/// `E_L(z) = ‖∇ν_z‖` where `ν_z ∈ span{λ_i : i ∈ ℐ_z}` solves
/// `(∇ν_z, ∇λ) = ⟨f + ΔU, λ⟩`.
pub fn local_problems(f: &Load, u: &P1Function) -> Result<EstimatorReport, Error> {
    let mesh = &u.mesh;
    let pairs = residual_on_bubbles(f, u)?;
    let mut values = Vec::with_capacity(mesh.num_vertices());
    for z in 0..mesh.num_vertices() {
        let idx = star_indices(mesh, z);
        let funcs: Vec<TestFunction> = idx.iter().map(|&i| lambda(mesh, i)).collect();
        let n = funcs.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut v = 0.0;
                for (k, p) in &funcs[i].parts {
                    if let Some((_, q)) = funcs[j].parts.iter().find(|(e, _)| e == k) {
                        v += grad_inner_integral(p, q, &mesh.bary_grads(*k), mesh.area(*k));
                    }
                }
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let b = DVector::from_iterator(n, idx.iter().map(|&i| pairs[i.ordinal(mesh)]));
        let chol = a.cholesky().ok_or(SolveError::Singular)?;
        let nu = chol.solve(&b);
        values.push((IndexKind::Vertex, z, b.dot(&nu).max(0.0).sqrt()));
    }
    Ok(EstimatorReport::new(EstimatorFamily::LocalProblem, values))
}

/// Runs one family; the equilibrated family fails if a patch problem does.
pub fn estimate(family: EstimatorFamily, f: &Load, u: &P1Function) -> Result<EstimatorReport, Error> {
    match family {
        EstimatorFamily::Hierarchical => hierarchical(f, u),
        EstimatorFamily::Residual => residual(f, u),
        EstimatorFamily::LocalProblem => local_problems(f, u),
        EstimatorFamily::Equilibrated => Ok(equilibrated_flux(f, u)?.report),
    }
}

/// `f − P_M f`.
pub fn oscillation_load(f: &Load, mesh: &Arc<Mesh>) -> Result<Load, LoadError> {
    Ok(f.minus(&project(f, mesh)?.as_load()))
}

/// Oracle values of `‖f − P_M f‖_{H⁻¹(ω_z)}` for every vertex.
pub fn oscillation(f: &Load, mesh: &Arc<Mesh>, depth: usize) -> Result<Vec<f64>, Error> {
    let g = oscillation_load(f, mesh)?;
    par_map(mesh.num_vertices(), |z| Ok(oracle_dual_norm(&g, mesh, Region::Star(z), depth, 1)?.value))
        .into_iter()
        .collect()
}

/// Oracle values of `‖φ_z (f − P_M f)‖_{H_z*}` for every vertex.
pub fn oscillation_hz(f: &Load, mesh: &Arc<Mesh>, depth: usize) -> Result<Vec<f64>, Error> {
    let g = oscillation_load(f, mesh)?;
    par_map(mesh.num_vertices(), |z| Ok(oracle_hz_norm(&g, mesh, z, depth, 1)?.value)).into_iter().collect()
}

/// `osc₀² = Σ_K h_K² ‖f − f_K‖²_K` with `f_K` the mean over `K`; returns
/// the global value and the per-element terms (not squared).
pub fn classical_osc0(f: &Load, mesh: &Mesh) -> Result<(f64, Vec<f64>), Error> {
    if let Some(t) = f.terms().iter().find(|t| !matches!(t, crate::load::LoadTerm::ElementDensity { .. })) {
        return Err(LoadError::NotL2(t.kind()).into());
    }
    let ev = f.evaluator(mesh)?;
    let mut local = Vec::with_capacity(mesh.num_elements());
    for k in 0..mesh.num_elements() {
        let (m1, m2) = ev.density_moments(k)?;
        let g = mesh.geometry(k);
        let variance = (m2 - m1 * m1 / g.area).max(0.0);
        local.push(g.diameter * variance.sqrt());
    }
    let global = local.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((global, local))
}
