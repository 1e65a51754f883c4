//! Patchwise equilibrated fluxes in the broken Raviart–Thomas space of degree one.

use super::{EstimatorFamily, EstimatorReport, IndexKind};
use crate::error::{Error, SolveError};
use crate::fem::P1Function;
use crate::load::Load;
use crate::mesh::{Mesh, Point};
use crate::projection::{discretized_residual, DiscretizedResidual};
use crate::quadrature::triangle_rule_for;
use nalgebra::{DMatrix, DVector};

/// Unknowns per element. In coordinates `x̂ = (x − c_K)/h_K` the field is
/// `(a0 + a1 x̂ + a2 ŷ, a3 + a4 x̂ + a5 ŷ) + (b1 x̂ + b2 ŷ)(x̂, ŷ)`.
const NLOC: usize = 8;

/// Allowed constraint defect relative to the largest constraint datum.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-10;

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FluxReport {
    /// `‖Ξ_z‖` per vertex.
    pub report: EstimatorReport,
    /// Largest relative constraint defect over all patches.
    pub max_constraint_residual: f64,
}

struct LocalFrame {
    center: Point,
    scale: f64,
}

impl LocalFrame {
    fn new(mesh: &Mesh, k: usize) -> Self {
        let p = mesh.coords(k);
        let center = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        Self { center, scale: mesh.geometry(k).diameter }
    }

    /// Values of the eight basis fields at `x`.
    fn basis(&self, x: Point) -> [[f64; 2]; NLOC] {
        let (u, v) = ((x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale);
        [[1.0, 0.0], [u, 0.0], [v, 0.0], [0.0, 1.0], [0.0, u], [0.0, v], [u * u, u * v], [u * v, v * v]]
    }

    /// Divergences of the eight basis fields at `x`.
    fn divergence(&self, x: Point) -> [f64; NLOC] {
        let (u, v) = ((x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale);
        let h = self.scale;
        [0.0, 1.0 / h, 0.0, 0.0, 0.0, 1.0 / h, 3.0 * u / h, 3.0 * v / h]
    }
}

/// `‖Ξ_z‖` for every vertex, where `Ξ_z` has minimal L² norm among broken
/// RT fields on `ω_z` with `div Ξ_z = π_z(φ_z r)` elementwise,
/// `−[Ξ_z·n] = φ_z c_F` on interior faces of the patch and zero normal trace
/// on the patch boundary away from the domain boundary. Here `r` is the
/// discretized residual `P_M f + ΔU`.
pub fn equilibrated_flux(f: &Load, u: &P1Function) -> Result<FluxReport, Error> {
    let r = discretized_residual(f, u)?;
    flux_from(&r)
}

pub fn flux_from(r: &DiscretizedResidual) -> Result<FluxReport, Error> {
    let mesh = &r.mesh;
    let mut values = Vec::with_capacity(mesh.num_vertices());
    let mut worst: f64 = 0.0;
    for z in 0..mesh.num_vertices() {
        let (norm, defect) = patch_flux(r, z)?;
        worst = worst.max(defect);
        values.push((IndexKind::Vertex, z, norm));
    }
    Ok(FluxReport {
        report: EstimatorReport::new(EstimatorFamily::Equilibrated, values),
        max_constraint_residual: worst,
    })
}

/// Returns `‖Ξ_z‖` and the relative constraint defect.
fn patch_flux(r: &DiscretizedResidual, z: usize) -> Result<(f64, f64), Error> {
    let mesh = &r.mesh;
    let elems = mesh.star_elements(z);
    let n = elems.len() * NLOC;
    let frames: Vec<LocalFrame> = elems.iter().map(|&k| LocalFrame::new(mesh, k)).collect();
    let slot = |k: usize| elems.iter().position(|&e| e == k);
    let zc = mesh.vertices()[z].coords;
    let phi_z = |x: Point| if x == zc { 1.0 } else { 0.0 };

    let mu = if mesh.vertices()[z].on_boundary {
        0.0
    } else {
        let mut total = 0.0;
        let mut measure = 0.0;
        for &k in elems {
            let a = mesh.area(k);
            total += r.element[k] * a / 3.0;
            measure += a;
        }
        for &fc in mesh.star_interior_faces(z) {
            total += r.face[mesh.interior_ordinal(fc)] * mesh.face_length(fc) / 2.0;
        }
        total / measure
    };

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (s, &k) in elems.iter().enumerate() {
        for p in mesh.coords(k) {
            let d = frames[s].divergence(p);
            rows.push((0..NLOC).map(|m| (s * NLOC + m, d[m])).collect());
            rhs.push(r.element[k] * phi_z(p) - mu);
        }
    }
    // Faces of the patch: shared ones carry jumps, the others are either
    // free (domain boundary) or closed.
    for (s, &k) in elems.iter().enumerate() {
        for (j, &fc) in mesh.element_faces(k).iter().enumerate() {
            let face = mesh.faces()[fc];
            let ends = [mesh.vertices()[face.vertices[0]].coords, mesh.vertices()[face.vertices[1]].coords];
            let n_k = mesh.outward_normal(k, j);
            let other = face.adjacent().iter().copied().find(|&e| e != k).and_then(|e| slot(e).map(|t| (e, t)));
            match other {
                Some((e, t)) => {
                    if e < k {
                        continue;
                    }
                    let je = face.local[if face.elements[0] == e { 0 } else { 1 }] as usize;
                    let n_e = mesh.outward_normal(e, je);
                    let c_f = r.face[mesh.interior_ordinal(fc)];
                    for p in ends {
                        let (bk, be) = (frames[s].basis(p), frames[t].basis(p));
                        let mut row: Vec<(usize, f64)> =
                            (0..NLOC).map(|m| (s * NLOC + m, bk[m][0] * n_k[0] + bk[m][1] * n_k[1])).collect();
                        row.extend((0..NLOC).map(|m| (t * NLOC + m, be[m][0] * n_e[0] + be[m][1] * n_e[1])));
                        rows.push(row);
                        rhs.push(-c_f * phi_z(p));
                    }
                }
                None if face.domain_boundary => {}
                None => {
                    for p in ends {
                        let b = frames[s].basis(p);
                        rows.push((0..NLOC).map(|m| (s * NLOC + m, b[m][0] * n_k[0] + b[m][1] * n_k[1])).collect());
                        rhs.push(0.0);
                    }
                }
            }
        }
    }

    let dmax = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if dmax == 0.0 {
        return Ok((0.0, 0.0));
    }
    let nc = rows.len();
    let mut c = DMatrix::<f64>::zeros(nc, n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            c[(i, j)] += v;
        }
    }
    let d = DVector::from_vec(rhs);

    // With M = L Lᵀ blockwise and a = L⁻ᵀ b the problem becomes the
    // minimum-norm solution of (C L⁻ᵀ) b = d, and ‖a‖_M = ‖b‖. The
    // constraints are dependent (one divergence relation per element), so
    // the rows are equilibrated and a truncated SVD gives the pseudo-inverse.
    // The basis is quadratic, so the mass integrand has degree four.
    let rule = triangle_rule_for(4);
    let mut l_inv_t = DMatrix::<f64>::zeros(n, n);
    for (s, &k) in elems.iter().enumerate() {
        let p = mesh.coords(k);
        let area = mesh.area(k);
        let mut m = DMatrix::<f64>::zeros(NLOC, NLOC);
        for (l, &w) in rule.points.iter().zip(&rule.weights) {
            let x =
                [l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0], l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1]];
            let b = frames[s].basis(x);
            for i in 0..NLOC {
                for j in 0..NLOC {
                    m[(i, j)] += w * area * (b[i][0] * b[j][0] + b[i][1] * b[j][1]);
                }
            }
        }
        let chol = m.cholesky().ok_or(SolveError::Singular)?;
        let inv_t = chol.l().try_inverse().ok_or(SolveError::Singular)?.transpose();
        l_inv_t.view_mut((s * NLOC, s * NLOC), (NLOC, NLOC)).copy_from(&inv_t);
    }
    let mut b_mat = &c * &l_inv_t;
    let mut d_scaled = d.clone();
    for i in 0..nc {
        let norm = b_mat.row(i).norm();
        if norm > 0.0 {
            b_mat.row_mut(i).scale_mut(1.0 / norm);
            d_scaled[i] /= norm;
        }
    }
    let svd = b_mat.svd(true, true);
    let smax = svd.singular_values.max();
    let b = svd.solve(&d_scaled, RANK_TOLERANCE * smax).map_err(|_| SolveError::Singular)?;
    let a = &l_inv_t * &b;
    let defect = (&c * &a - &d).amax() / dmax;
    if defect > CONSTRAINT_TOLERANCE {
        return Err(SolveError::Infeasible { residual: defect, tolerance: CONSTRAINT_TOLERANCE }.into());
    }
    Ok((b.norm(), defect))
}
