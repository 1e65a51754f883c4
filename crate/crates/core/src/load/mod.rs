//! Loads in H⁻¹ that can be paired exactly with piecewise polynomials.

mod eval;

pub use eval::LoadEvaluator;

use crate::error::LoadError;
use crate::mesh::Mesh;
use crate::poly::{BaryPoly, SegmentPoly};
use std::sync::Arc;

/// One summand of a [`Load`]. Densities are stored per entity of the term's
/// own background mesh, in that entity's barycentric coordinates.
#[derive(Debug, Clone)]
pub enum LoadTerm {
    /// `v ↦ Σ_K ∫_K g v`.
    ElementDensity { background: Arc<Mesh>, densities: Vec<Option<BaryPoly>> },
    /// `v ↦ Σ_F ∫_F j v ds`, with `j` in the barycentrics of the face's two
    /// vertices in stored order.
    FaceDensity { background: Arc<Mesh>, densities: Vec<Option<SegmentPoly>> },
    /// `v ↦ -Σ_K ∫_K G · ∇v`.
    DivergenceField { background: Arc<Mesh>, fields: Vec<Option<[BaryPoly; 2]>> },
}

impl LoadTerm {
    pub fn background(&self) -> &Arc<Mesh> {
        match self {
            LoadTerm::ElementDensity { background, .. }
            | LoadTerm::FaceDensity { background, .. }
            | LoadTerm::DivergenceField { background, .. } => background,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            LoadTerm::ElementDensity { densities, .. } => {
                densities.iter().flatten().map(BaryPoly::degree).max().unwrap_or(0)
            }
            LoadTerm::FaceDensity { densities, .. } => {
                densities.iter().flatten().map(SegmentPoly::degree).max().unwrap_or(0)
            }
            LoadTerm::DivergenceField { fields, .. } => {
                fields.iter().flatten().flat_map(|g| g.iter().map(BaryPoly::degree)).max().unwrap_or(0)
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LoadTerm::ElementDensity { .. } => "element density",
            LoadTerm::FaceDensity { .. } => "face density",
            LoadTerm::DivergenceField { .. } => "divergence field",
        }
    }

    fn scaled(&self, s: f64) -> LoadTerm {
        match self {
            LoadTerm::ElementDensity { background, densities } => LoadTerm::ElementDensity {
                background: background.clone(),
                densities: densities.iter().map(|p| p.as_ref().map(|p| p.scale(s))).collect(),
            },
            LoadTerm::FaceDensity { background, densities } => LoadTerm::FaceDensity {
                background: background.clone(),
                densities: densities.iter().map(|p| p.as_ref().map(|p| p.scale(s))).collect(),
            },
            LoadTerm::DivergenceField { background, fields } => LoadTerm::DivergenceField {
                background: background.clone(),
                fields: fields.iter().map(|g| g.as_ref().map(|[a, b]| [a.scale(s), b.scale(s)])).collect(),
            },
        }
    }
}

/// A finite sum of load terms.
#[derive(Debug, Clone, Default)]
pub struct Load {
    terms: Vec<LoadTerm>,
}

impl Load {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[LoadTerm] {
        &self.terms
    }

    pub fn from_term(term: LoadTerm) -> Self {
        Self { terms: vec![term] }
    }

    pub fn element_density(
        background: &Arc<Mesh>,
        densities: impl IntoIterator<Item = (usize, BaryPoly)>,
    ) -> Result<Self, LoadError> {
        let mut d = vec![None; background.num_elements()];
        for (k, p) in densities {
            let slot: &mut Option<BaryPoly> = d.get_mut(k).ok_or(LoadError::BadIndex { kind: "element", index: k })?;
            *slot = Some(match slot.take() {
                Some(q) => q.add(&p),
                None => p,
            });
        }
        Ok(Self::from_term(LoadTerm::ElementDensity { background: background.clone(), densities: d }))
    }

    /// Piecewise constant density with one value per element.
    pub fn element_constants(background: &Arc<Mesh>, values: &[f64]) -> Self {
        assert_eq!(values.len(), background.num_elements());
        Self::from_term(LoadTerm::ElementDensity {
            background: background.clone(),
            densities: values.iter().map(|&c| (c != 0.0).then(|| BaryPoly::constant(c))).collect(),
        })
    }

    pub fn face_density(
        background: &Arc<Mesh>,
        densities: impl IntoIterator<Item = (usize, SegmentPoly)>,
    ) -> Result<Self, LoadError> {
        let mut d = vec![None; background.faces().len()];
        for (f, p) in densities {
            let slot: &mut Option<SegmentPoly> = d.get_mut(f).ok_or(LoadError::BadIndex { kind: "face", index: f })?;
            *slot = Some(match slot.take() {
                Some(q) => q.add(&p),
                None => p,
            });
        }
        Ok(Self::from_term(LoadTerm::FaceDensity { background: background.clone(), densities: d }))
    }

    /// Constant face densities `c χ_F`, indexed by face.
    pub fn face_constants(
        background: &Arc<Mesh>,
        values: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self, LoadError> {
        Self::face_density(
            background,
            values.into_iter().filter(|(_, c)| *c != 0.0).map(|(f, c)| (f, SegmentPoly::constant(c))),
        )
    }

    pub fn divergence(
        background: &Arc<Mesh>,
        fields: impl IntoIterator<Item = (usize, [BaryPoly; 2])>,
    ) -> Result<Self, LoadError> {
        let mut d = vec![None; background.num_elements()];
        for (k, g) in fields {
            *d.get_mut(k).ok_or(LoadError::BadIndex { kind: "element", index: k })? = Some(g);
        }
        Ok(Self::from_term(LoadTerm::DivergenceField { background: background.clone(), fields: d }))
    }

    pub fn plus(&self, other: &Load) -> Load {
        Load { terms: self.terms.iter().chain(&other.terms).cloned().collect() }
    }

    pub fn scaled(&self, s: f64) -> Load {
        Load { terms: self.terms.iter().map(|t| t.scaled(s)).collect() }
    }

    pub fn minus(&self, other: &Load) -> Load {
        self.plus(&other.scaled(-1.0))
    }

    /// Whether every term is an element density.
    pub fn is_l2(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, LoadTerm::ElementDensity { .. }))
    }

    pub fn evaluator<'a>(&'a self, mesh: &'a Mesh) -> Result<LoadEvaluator<'a>, LoadError> {
        LoadEvaluator::new(self, mesh)
    }
}

/// A function that is polynomial on each element of a mesh. Continuity is
/// the caller's responsibility when pairing with divergence terms.
#[derive(Debug, Clone)]
pub struct PiecewisePoly {
    pub mesh: Arc<Mesh>,
    pub polys: Vec<BaryPoly>,
}

/// Highest polynomial degree accepted for [`PiecewisePoly`].
pub const MAX_PIECEWISE_DEGREE: usize = 4;

impl PiecewisePoly {
    pub fn new(mesh: Arc<Mesh>, polys: Vec<BaryPoly>) -> Self {
        assert_eq!(polys.len(), mesh.num_elements());
        assert!(polys.iter().all(|p| p.degree() <= MAX_PIECEWISE_DEGREE), "degree above {MAX_PIECEWISE_DEGREE}");
        Self { mesh, polys }
    }

    /// The continuous piecewise affine function with the given nodal values.
    pub fn from_nodal(mesh: Arc<Mesh>, values: &[f64]) -> Self {
        let polys = mesh.elements().iter().map(|e| BaryPoly::affine(e.vertices.map(|v| values[v]))).collect();
        Self { mesh, polys }
    }

    pub fn degree(&self) -> usize {
        self.polys.iter().map(BaryPoly::degree).max().unwrap_or(0)
    }
}

/// The dual pairing `⟨f, v⟩`.
pub fn evaluate(f: &Load, v: &PiecewisePoly) -> Result<f64, LoadError> {
    let ev = f.evaluator(&v.mesh)?;
    let mut total = 0.0;
    let mut out = [0.0];
    for (k, p) in v.polys.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        ev.pair_element(k, std::slice::from_ref(p), &mut out)?;
        total += out[0];
    }
    Ok(total)
}
