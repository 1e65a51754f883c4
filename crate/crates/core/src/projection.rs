//! Discretized residuals: functionals that are a constant density on each
//! element plus a constant surface density on each interior face.

use crate::biorth::{psi, Index};
use crate::error::LoadError;
use crate::fem::{normal_jumps, P1Function};
use crate::load::{Load, LoadEvaluator};
use crate::mesh::Mesh;
use std::fmt::Write as _;
use std::sync::Arc;

/// `Σ_K c_K χ_K + Σ_F c_F χ_F`. Coefficients are raw densities, never
/// multiplied by measures.
#[derive(Debug, Clone)]
pub struct DiscretizedResidual {
    pub mesh: Arc<Mesh>,
    pub element: Vec<f64>,
    /// Indexed like [`Mesh::interior_faces`].
    pub face: Vec<f64>,
}

impl DiscretizedResidual {
    pub fn zero(mesh: Arc<Mesh>) -> Self {
        let (ne, nf) = (mesh.num_elements(), mesh.interior_faces().len());
        Self { mesh, element: vec![0.0; ne], face: vec![0.0; nf] }
    }

    pub fn coefficient(&self, i: Index) -> f64 {
        match i {
            Index::Element(k) => self.element[k],
            Index::Face(f) => self.face[self.mesh.interior_ordinal(f)],
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.mesh, &other.mesh));
        Self {
            mesh: self.mesh.clone(),
            element: self.element.iter().zip(&other.element).map(|(a, b)| a + b).collect(),
            face: self.face.iter().zip(&other.face).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            element: self.element.iter().map(|a| a * s).collect(),
            face: self.face.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.element.iter().chain(&self.face).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn as_load(&self) -> Load {
        let faces = self.mesh.interior_faces();
        Load::element_constants(&self.mesh, &self.element).plus(
            &Load::face_constants(&self.mesh, faces.iter().zip(&self.face).map(|(&f, &c)| (f, c)))
                .expect("interior faces belong to the mesh"),
        )
    }

    /// CSV with header `kind,index,coefficient`; faces use mesh face indices.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,index,coefficient\n");
        for (k, c) in self.element.iter().enumerate() {
            let _ = writeln!(s, "element,{k},{c:e}");
        }
        for (&f, c) in self.mesh.interior_faces().iter().zip(&self.face) {
            let _ = writeln!(s, "face,{f},{c:e}");
        }
        s
    }
}

/// A linear map from loads onto discretized residuals.
pub trait ResidualProjector {
    fn project(&self, f: &Load, mesh: &Arc<Mesh>) -> Result<DiscretizedResidual, LoadError>;
}

/// `c_i = ⟨f, ψ_i⟩` for every element and interior face.
#[derive(Debug, Clone, Copy, Default)]
pub struct Biorthogonal;

/// Element coefficients as for [`Biorthogonal`], face coefficients forced to zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NaiveElementwise;

fn element_coefficients(ev: &LoadEvaluator<'_>, mesh: &Mesh) -> Result<Vec<f64>, LoadError> {
    (0..mesh.num_elements()).map(|k| ev.pair_local(&psi(mesh, Index::Element(k)).parts)).collect()
}

impl ResidualProjector for Biorthogonal {
    fn project(&self, f: &Load, mesh: &Arc<Mesh>) -> Result<DiscretizedResidual, LoadError> {
        let ev = f.evaluator(mesh)?;
        let element = element_coefficients(&ev, mesh)?;
        let face = mesh
            .interior_faces()
            .iter()
            .map(|&g| ev.pair_local(&psi(mesh, Index::Face(g)).parts))
            .collect::<Result<_, _>>()?;
        Ok(DiscretizedResidual { mesh: mesh.clone(), element, face })
    }
}

impl ResidualProjector for NaiveElementwise {
    fn project(&self, f: &Load, mesh: &Arc<Mesh>) -> Result<DiscretizedResidual, LoadError> {
        let ev = f.evaluator(mesh)?;
        let element = element_coefficients(&ev, mesh)?;
        Ok(DiscretizedResidual { mesh: mesh.clone(), element, face: vec![0.0; mesh.interior_faces().len()] })
    }
}

/// `P_M f`.
pub fn project(f: &Load, mesh: &Arc<Mesh>) -> Result<DiscretizedResidual, LoadError> {
    Biorthogonal.project(f, mesh)
}

/// The naive projection with vanishing face part.
pub fn tprog0(f: &Load, mesh: &Arc<Mesh>) -> Result<DiscretizedResidual, LoadError> {
    NaiveElementwise.project(f, mesh)
}

/// `P_M f + ΔU`: each face coefficient loses the normal-flux jump of `U`.
pub fn discretized_residual(f: &Load, u: &P1Function) -> Result<DiscretizedResidual, LoadError> {
    let mut r = project(f, &u.mesh)?;
    for (c, j) in r.face.iter_mut().zip(normal_jumps(u)) {
        *c -= j;
    }
    Ok(r)
}

/// The residual functional `f + ΔU` itself.
pub fn residual_load(f: &Load, u: &P1Function) -> Load {
    f.plus(&crate::fem::laplacian(u))
}
