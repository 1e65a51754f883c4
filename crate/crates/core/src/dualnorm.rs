//! Local dual norms: the two-sided bracket for discretized residuals and a
//! brute-force Riesz oracle for general loads.

use crate::biorth::{chi_pairings, psi, star_indices};
use crate::error::{Error, LoadError, SolveError};
use crate::linalg::{dot, pcg, CsrMatrix};
use crate::load::Load;
use crate::mesh::{Mesh, NONE};
use crate::parallel::par_map;
use crate::poly::{BaryPoly, D};
use crate::projection::DiscretizedResidual;
use std::fmt::Write as _;
use std::sync::OnceLock;

/// Default number of uniform refinements of an oracle submesh.
pub const DEFAULT_DEPTH: usize = 4;

/// Relative residual for oracle solves. Norms are read off as `wᵀF`, which
/// is accurate to the square of the solver error.
const ORACLE_TOLERANCE: f64 = 1e-10;

/// Bounds on `‖r‖²_{H⁻¹(ω_z)}`: `lower = S/(d+1)` and `upper_raw = S`, with
/// `S = Σ_{i∈ℐ_z} ⟨r, ψ_i/‖∇ψ_i‖⟩²`. The upper bound holds up to a
/// shape-dependent constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub vertex: usize,
    pub lower: f64,
    pub upper_raw: f64,
}

impl Bracket {
    /// Geometric mean of the two bounds, for reporting.
    pub fn midpoint(&self) -> f64 {
        (self.lower * self.upper_raw).sqrt()
    }
}

pub fn quantify_local(r: &DiscretizedResidual, z: usize) -> Bracket {
    let mesh = &r.mesh;
    let s: f64 = star_indices(mesh, z)
        .into_iter()
        .map(|i| {
            let p = psi(mesh, i);
            let pairing: f64 = chi_pairings(mesh, &p).iter().map(|&(j, v)| r.coefficient(j) * v).sum();
            (pairing / p.grad_norm).powi(2)
        })
        .sum();
    Bracket { vertex: z, lower: s / (D as f64 + 1.0), upper_raw: s }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub depth: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Star(usize),
    Domain,
}

/// Boundary treatment of a Riesz problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Zero trace on the whole region boundary.
    Dirichlet,
    /// Zero trace on the part of the boundary that lies on the domain boundary.
    Mixed,
    /// Natural boundary conditions and zero mean.
    MeanFree,
}

/// Lagrange basis of degree 1 or 2 on the reference triangle: vertex
/// functions first, then one function per edge (opposite local vertex j).
fn basis(degree: usize) -> &'static [BaryPoly] {
    static P1: OnceLock<Vec<BaryPoly>> = OnceLock::new();
    static P2: OnceLock<Vec<BaryPoly>> = OnceLock::new();
    match degree {
        1 => P1.get_or_init(|| (0..3).map(BaryPoly::lambda).collect()),
        2 => P2.get_or_init(|| {
            let mut b: Vec<BaryPoly> = (0..3)
                .map(|i| {
                    let l = BaryPoly::lambda(i);
                    l.mul(&l.scale(2.0).add(&BaryPoly::constant(-1.0)))
                })
                .collect();
            for j in 0..3 {
                b.push(BaryPoly::lambda((j + 1) % 3).mul(&BaryPoly::lambda((j + 2) % 3)).scale(4.0));
            }
            b
        }),
        _ => panic!("oracle degree must be 1 or 2"),
    }
}

/// `∫_K̂ ∂_i φ_a ∂_j φ_b / |K̂|`, so that local stiffness entries are
/// `|K| Σ_ij (∇λ_i·∇λ_j) T[a][b][i][j]`.
fn derivative_products(degree: usize) -> &'static Vec<[[f64; 3]; 3]> {
    static T1: OnceLock<Vec<[[f64; 3]; 3]>> = OnceLock::new();
    static T2: OnceLock<Vec<[[f64; 3]; 3]>> = OnceLock::new();
    let build = || {
        let b = basis(degree);
        let n = b.len();
        let mut t = vec![[[0.0; 3]; 3]; n * n];
        for a in 0..n {
            for c in 0..n {
                for i in 0..3 {
                    for j in 0..3 {
                        t[a * n + c][i][j] = b[a].derivative(i).mul(&b[c].derivative(j)).integrate(1.0);
                    }
                }
            }
        }
        t
    };
    match degree {
        1 => T1.get_or_init(build),
        _ => T2.get_or_init(build),
    }
}

/// A Riesz problem `(∇w, ∇v) = ⟨ℓ, v⟩` on a uniformly refined copy of a
/// star or of the whole mesh.
pub struct RieszProblem {
    fine: Mesh,
    depth: usize,
    degree: usize,
    kind: Kind,
    /// Global dofs of each fine element, in basis order.
    elem_dofs: Vec<Vec<usize>>,
    /// Row of each dof in the reduced system, or [`NONE`].
    row: Vec<usize>,
    matrix: CsrMatrix,
    /// `∫ φ_j` for each dof, only for the mean-free kind.
    masses: Vec<f64>,
    /// Nodal values of the weight `φ_z` on each fine element, for the `H_z` kinds.
    weight: Option<Vec<[f64; 3]>>,
}

impl RieszProblem {
    /// Riesz problem in `H¹₀` of the region.
    pub fn dirichlet(mesh: &Mesh, region: Region, depth: usize, degree: usize) -> Self {
        let coarse = match region {
            Region::Star(z) => mesh.submesh(mesh.star_elements(z)).0,
            Region::Domain => mesh.clone(),
        };
        Self::build(coarse.refine_uniform_times(depth), depth, degree, Kind::Dirichlet, None)
    }

    /// Riesz problem in `H_z` for the functional `φ_z ℓ`.
    pub fn hz(mesh: &Mesh, z: usize, depth: usize, degree: usize) -> Self {
        let (sub, _) = mesh.submesh(mesh.star_elements(z));
        let fine = sub.refine_uniform_times(depth);
        let weight = (0..fine.num_elements())
            .map(|k| {
                let c = mesh.element_containing(fine.elements()[k].addr).expect("fine star refines the mesh");
                let iz = mesh.local_index(c, z).expect("star element contains z");
                fine.coords(k).map(|p| mesh.barycentric(c, p)[iz])
            })
            .collect();
        let kind = if mesh.vertices()[z].on_boundary { Kind::Mixed } else { Kind::MeanFree };
        Self::build(fine, depth, degree, kind, Some(weight))
    }

    fn build(fine: Mesh, depth: usize, degree: usize, kind: Kind, weight: Option<Vec<[f64; 3]>>) -> Self {
        let nv = fine.num_vertices();
        let ndofs = if degree == 1 { nv } else { nv + fine.faces().len() };
        let elem_dofs: Vec<Vec<usize>> = (0..fine.num_elements())
            .map(|k| {
                let mut d: Vec<usize> = fine.elements()[k].vertices.to_vec();
                if degree == 2 {
                    d.extend(fine.element_faces(k).iter().map(|&f| nv + f));
                }
                d
            })
            .collect();
        let mut fixed = vec![false; ndofs];
        match kind {
            Kind::Dirichlet => {
                for (v, vert) in fine.vertices().iter().enumerate() {
                    fixed[v] = vert.on_boundary;
                }
                if degree == 2 {
                    for (f, face) in fine.faces().iter().enumerate() {
                        fixed[nv + f] = !face.is_interior();
                    }
                }
            }
            Kind::Mixed => {
                for (v, vert) in fine.vertices().iter().enumerate() {
                    fixed[v] = vert.on_domain_boundary;
                }
                if degree == 2 {
                    for (f, face) in fine.faces().iter().enumerate() {
                        fixed[nv + f] = face.domain_boundary;
                    }
                }
            }
            Kind::MeanFree => fixed[0] = true,
        }
        let mut row = vec![NONE; ndofs];
        let mut nrows = 0;
        for d in 0..ndofs {
            if !fixed[d] {
                row[d] = nrows;
                nrows += 1;
            }
        }
        let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); nrows];
        for dofs in &elem_dofs {
            for &a in dofs {
                if row[a] == NONE {
                    continue;
                }
                pattern[row[a]].extend(dofs.iter().filter(|&&b| row[b] != NONE).map(|&b| row[b]));
            }
        }
        for p in &mut pattern {
            p.sort_unstable();
            p.dedup();
        }
        let mut matrix = CsrMatrix::from_pattern(pattern);
        let t = derivative_products(degree);
        let nb = basis(degree).len();
        let mut masses = vec![0.0; if kind == Kind::MeanFree { ndofs } else { 0 }];
        let mass_ref: Vec<f64> = basis(degree).iter().map(|b| b.integrate(1.0)).collect();
        for (k, dofs) in elem_dofs.iter().enumerate() {
            let g = fine.bary_grads(k);
            let area = fine.area(k);
            let mut gg = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    gg[i][j] = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                }
            }
            for a in 0..nb {
                if !masses.is_empty() {
                    masses[dofs[a]] += area * mass_ref[a];
                }
                let ra = row[dofs[a]];
                if ra == NONE {
                    continue;
                }
                for c in 0..nb {
                    let rc = row[dofs[c]];
                    if rc == NONE {
                        continue;
                    }
                    let tt = &t[a * nb + c];
                    let mut v = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            v += gg[i][j] * tt[i][j];
                        }
                    }
                    matrix.add(ra, rc, area * v);
                }
            }
        }
        Self { fine, depth, degree, kind, elem_dofs, row, matrix, masses, weight }
    }

    pub fn fine_mesh(&self) -> &Mesh {
        &self.fine
    }

    pub fn num_unknowns(&self) -> usize {
        self.matrix.n
    }

    /// `⟨ℓ, v_j⟩` (or `⟨φ_z ℓ, v_j⟩`) for every dof `j`.
    pub fn load_vector(&self, load: &Load) -> Result<Vec<f64>, LoadError> {
        let ev = load.evaluator(&self.fine)?;
        let b = basis(self.degree);
        let mut out = vec![0.0; self.row.len()];
        let mut local = vec![0.0; b.len()];
        let mut weighted: Vec<BaryPoly> = Vec::new();
        for (k, dofs) in self.elem_dofs.iter().enumerate() {
            let tests: &[BaryPoly] = match &self.weight {
                Some(w) => {
                    if w[k].iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    let wk = BaryPoly::affine(w[k]);
                    weighted.clear();
                    weighted.extend(b.iter().map(|p| p.mul(&wk)));
                    &weighted
                }
                None => b,
            };
            ev.pair_element(k, tests, &mut local)?;
            for (a, &d) in dofs.iter().enumerate() {
                out[d] += local[a];
            }
        }
        Ok(out)
    }

    /// Reduced right-hand side; for the mean-free kind the mean is removed first.
    fn reduce(&self, full: &[f64]) -> Result<Vec<f64>, SolveError> {
        let mut f = full.to_vec();
        if self.kind == Kind::MeanFree {
            let total: f64 = f.iter().sum();
            let measure: f64 = self.masses.iter().sum();
            for (x, m) in f.iter_mut().zip(&self.masses) {
                *x -= total * m / measure;
            }
            let scale: f64 = full.iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
            let defect: f64 = f.iter().sum();
            if defect.abs() > 1e-10 * scale {
                return Err(SolveError::Incompatible(defect));
            }
        }
        let mut reduced = vec![0.0; self.matrix.n];
        for (d, &r) in self.row.iter().enumerate() {
            if r != NONE {
                reduced[r] = f[d];
            }
        }
        Ok(reduced)
    }

    /// `‖∇w‖` for the representer of the functional with dof vector `full`.
    pub fn representer_norm(&self, full: &[f64]) -> Result<f64, SolveError> {
        let rhs = self.reduce(full)?;
        if rhs.iter().all(|&x| x == 0.0) {
            return Ok(0.0);
        }
        let w = pcg(&self.matrix, &rhs, ORACLE_TOLERANCE)?;
        Ok(dot(&w, &rhs).max(0.0).sqrt())
    }

    /// Gram matrix `G_ij = F_iᵀ A⁻¹ F_j` of several functionals.
    pub fn gram(&self, fulls: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SolveError> {
        let rhs: Vec<Vec<f64>> = fulls.iter().map(|f| self.reduce(f)).collect::<Result<_, _>>()?;
        let sols: Vec<Vec<f64>> =
            rhs.iter().map(|b| pcg(&self.matrix, b, ORACLE_TOLERANCE)).collect::<Result<_, _>>()?;
        let n = fulls.len();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let v = 0.5 * (dot(&sols[i], &rhs[j]) + dot(&sols[j], &rhs[i]));
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        Ok(g)
    }

    pub fn norm(&self, load: &Load) -> Result<OracleResult, Error> {
        let full = self.load_vector(load)?;
        let value = self.representer_norm(&full)?;
        Ok(OracleResult { value, depth: self.depth, degree: self.degree })
    }
}

fn region_elements(mesh: &Mesh, region: Region) -> Vec<usize> {
    match region {
        Region::Star(z) => mesh.star_elements(z).to_vec(),
        Region::Domain => (0..mesh.num_elements()).collect(),
    }
}

/// Approximates `‖ℓ‖_{H⁻¹(region)}` from below by a Riesz solve on the region
/// refined `depth` times with elements of the given degree.
pub fn oracle_dual_norm(
    load: &Load,
    mesh: &Mesh,
    region: Region,
    depth: usize,
    degree: usize,
) -> Result<OracleResult, Error> {
    if let Region::Star(_) = region {
        if !load.evaluator(mesh)?.touches(&region_elements(mesh, region))? {
            return Ok(OracleResult { value: 0.0, depth, degree });
        }
    }
    RieszProblem::dirichlet(mesh, region, depth, degree).norm(load)
}

/// Approximates `‖φ_z ℓ‖_{H_z*}`: mean-free Neumann problem for interior
/// `z`, zero trace only on the domain boundary otherwise.
pub fn oracle_hz_norm(load: &Load, mesh: &Mesh, z: usize, depth: usize, degree: usize) -> Result<OracleResult, Error> {
    if !load.evaluator(mesh)?.touches(mesh.star_elements(z))? {
        return Ok(OracleResult { value: 0.0, depth, degree });
    }
    RieszProblem::hz(mesh, z, depth, degree).norm(load)
}

/// `(Σ_z midpoint_z)^{1/2}` over all vertex brackets.
pub fn localized_norm_discrete(r: &DiscretizedResidual) -> f64 {
    (0..r.mesh.num_vertices()).map(|z| quantify_local(r, z).midpoint()).sum::<f64>().sqrt()
}

/// `(Σ_z oracle_z²)^{1/2}` and the per-vertex oracle values.
pub fn localized_norm_oracle(load: &Load, mesh: &Mesh, depth: usize) -> Result<(f64, Vec<f64>), Error> {
    let values: Vec<f64> =
        par_map(mesh.num_vertices(), |z| oracle_dual_norm(load, mesh, Region::Star(z), depth, 1).map(|o| o.value))
            .into_iter()
            .collect::<Result<_, _>>()?;
    Ok((values.iter().map(|v| v * v).sum::<f64>().sqrt(), values))
}

/// CSV with header `vertex,value,depth,degree`.
pub fn oracle_csv(rows: &[(usize, OracleResult)]) -> String {
    let mut s = String::from("vertex,value,depth,degree\n");
    for (z, r) in rows {
        let _ = writeln!(s, "{z},{:e},{},{}", r.value, r.depth, r.degree);
    }
    s
}
