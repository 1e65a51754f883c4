//! P1 Galerkin assembly and solve, normal-flux jumps and energy norms.

use crate::error::{Error, LoadError, SolveError};
use crate::linalg::{pcg, CsrMatrix, CG_TOLERANCE};
use crate::load::{Load, PiecewisePoly};
use crate::mesh::{Mesh, Point, NONE};
use crate::poly::BaryPoly;
use std::sync::Arc;

/// A continuous piecewise affine function given by nodal values.
#[derive(Debug, Clone)]
pub struct P1Function {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl P1Function {
    pub fn zero(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_vertices();
        Self { mesh, values: vec![0.0; n] }
    }

    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.num_vertices());
        Self { mesh, values }
    }

    /// Nodal interpolant of `g`; boundary values are kept as given.
    pub fn interpolate(mesh: Arc<Mesh>, g: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|v| g(v.coords)).collect();
        Self { mesh, values }
    }

    pub fn gradient(&self, k: usize) -> [f64; 2] {
        let grads = self.mesh.bary_grads(k);
        let v = self.mesh.elements()[k].vertices;
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += self.values[v[i]] * grads[i][0];
            g[1] += self.values[v[i]] * grads[i][1];
        }
        g
    }

    pub fn local_poly(&self, k: usize) -> BaryPoly {
        BaryPoly::affine(self.mesh.elements()[k].vertices.map(|v| self.values[v]))
    }

    pub fn to_piecewise(&self) -> PiecewisePoly {
        PiecewisePoly::from_nodal(self.mesh.clone(), &self.values)
    }

    pub fn sub(&self, other: &P1Function) -> P1Function {
        assert!(Arc::ptr_eq(&self.mesh, &other.mesh));
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { mesh: self.mesh.clone(), values }
    }
}

/// Stiffness matrix restricted to interior vertices, with its right-hand side.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Vertex of each unknown.
    pub dof_vertex: Vec<usize>,
    /// Unknown of each vertex, or [`NONE`] for boundary vertices.
    pub vertex_dof: Vec<usize>,
}

/// `|K| ∇λ_i · ∇λ_j`.
pub fn local_stiffness(mesh: &Mesh, k: usize) -> [[f64; 3]; 3] {
    let g = mesh.bary_grads(k);
    let a = mesh.area(k);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = a * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    s
}

/// Stiffness matrix over the vertices with a dof number in `vertex_dof`.
pub fn stiffness_matrix(mesh: &Mesh, vertex_dof: &[usize], ndofs: usize) -> CsrMatrix {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); ndofs];
    for (v, &d) in vertex_dof.iter().enumerate() {
        if d == NONE {
            continue;
        }
        let row = &mut rows[d];
        for &k in mesh.star_elements(v) {
            for &w in &mesh.elements()[k].vertices {
                if vertex_dof[w] != NONE {
                    row.push(vertex_dof[w]);
                }
            }
        }
        row.sort_unstable();
        row.dedup();
    }
    let mut a = CsrMatrix::from_pattern(rows);
    for k in 0..mesh.num_elements() {
        let s = local_stiffness(mesh, k);
        let v = mesh.elements()[k].vertices;
        for i in 0..3 {
            let di = vertex_dof[v[i]];
            if di == NONE {
                continue;
            }
            for j in 0..3 {
                let dj = vertex_dof[v[j]];
                if dj != NONE {
                    a.add(di, dj, s[i][j]);
                }
            }
        }
    }
    a
}

/// Unknown numbering of the interior vertices.
pub fn interior_dofs(mesh: &Mesh) -> (Vec<usize>, Vec<usize>) {
    let mut vertex_dof = vec![NONE; mesh.num_vertices()];
    let mut dof_vertex = Vec::new();
    for v in mesh.interior_vertices() {
        vertex_dof[v] = dof_vertex.len();
        dof_vertex.push(v);
    }
    (vertex_dof, dof_vertex)
}

/// `⟨f, φ_y⟩` for every vertex `y`.
pub fn load_vector(mesh: &Mesh, f: &Load) -> Result<Vec<f64>, LoadError> {
    let ev = f.evaluator(mesh)?;
    let hats = [BaryPoly::lambda(0), BaryPoly::lambda(1), BaryPoly::lambda(2)];
    let mut out = vec![0.0; mesh.num_vertices()];
    let mut local = [0.0; 3];
    for k in 0..mesh.num_elements() {
        ev.pair_element(k, &hats, &mut local)?;
        for (i, &v) in mesh.elements()[k].vertices.iter().enumerate() {
            out[v] += local[i];
        }
    }
    Ok(out)
}

pub fn assemble(mesh: &Mesh, f: &Load) -> Result<LinearSystem, LoadError> {
    let (vertex_dof, dof_vertex) = interior_dofs(mesh);
    let matrix = stiffness_matrix(mesh, &vertex_dof, dof_vertex.len());
    let full = load_vector(mesh, f)?;
    let rhs = dof_vertex.iter().map(|&v| full[v]).collect();
    Ok(LinearSystem { matrix, rhs, dof_vertex, vertex_dof })
}

pub fn solve_galerkin(mesh: &Arc<Mesh>, f: &Load) -> Result<P1Function, Error> {
    let sys = assemble(mesh, f)?;
    let mut u = P1Function::zero(mesh.clone());
    if sys.dof_vertex.is_empty() {
        return Ok(u);
    }
    let x = pcg(&sys.matrix, &sys.rhs, CG_TOLERANCE)?;
    for (d, &v) in sys.dof_vertex.iter().enumerate() {
        u.values[v] = x[d];
    }
    Ok(u)
}

/// `J(U)|_F = ∇U|K₁·n₁ + ∇U|K₂·n₂` for each interior face, in interior-face order.
pub fn normal_jumps(u: &P1Function) -> Vec<f64> {
    let mesh = &u.mesh;
    mesh.interior_faces()
        .iter()
        .map(|&f| {
            let face = mesh.faces()[f];
            (0..2)
                .map(|s| {
                    let k = face.elements[s];
                    let g = u.gradient(k);
                    let n = mesh.outward_normal(k, face.local[s] as usize);
                    g[0] * n[0] + g[1] * n[1]
                })
                .sum()
        })
        .collect()
}

/// The distribution `ΔV`. Integrating by parts elementwise with outward
/// normals gives `⟨ΔV, v⟩ = −Σ_F ∫_F J(V) v`.
pub fn laplacian(v: &P1Function) -> Load {
    let jumps = normal_jumps(v);
    let faces = v.mesh.interior_faces();
    Load::face_constants(&v.mesh, faces.iter().zip(jumps).map(|(&f, j)| (f, -j)))
        .expect("interior faces belong to the mesh")
}

pub fn energy_norm(u: &P1Function) -> f64 {
    (0..u.mesh.num_elements())
        .map(|k| {
            let g = u.gradient(k);
            u.mesh.area(k) * (g[0] * g[0] + g[1] * g[1])
        })
        .sum::<f64>()
        .sqrt()
}

/// Exact representation of a coarse function on a refinement of its mesh.
pub fn prolongate(coarse: &P1Function, fine: &Arc<Mesh>) -> Result<P1Function, SolveError> {
    if Arc::ptr_eq(&coarse.mesh, fine) {
        return Ok(coarse.clone());
    }
    if coarse.mesh.family() != fine.family() {
        return Err(SolveError::MeshMismatch);
    }
    let mut values = vec![f64::NAN; fine.num_vertices()];
    for (k, e) in fine.elements().iter().enumerate() {
        let c = coarse.mesh.element_containing(e.addr).ok_or(SolveError::MeshMismatch)?;
        let poly = coarse.local_poly(c);
        for (i, &v) in e.vertices.iter().enumerate() {
            if values[v].is_nan() {
                values[v] = poly.eval(coarse.mesh.barycentric(c, fine.coords(k)[i]));
            }
        }
    }
    Ok(P1Function { mesh: fine.clone(), values })
}

/// `‖∇(a − b)‖`, prolongating whichever function lives on the coarser mesh.
pub fn energy_norm_diff(a: &P1Function, b: &P1Function) -> Result<f64, SolveError> {
    if a.mesh.num_elements() >= b.mesh.num_elements() {
        Ok(energy_norm(&a.sub(&prolongate(b, &a.mesh)?)))
    } else {
        Ok(energy_norm(&prolongate(a, &b.mesh)?.sub(b)))
    }
}
