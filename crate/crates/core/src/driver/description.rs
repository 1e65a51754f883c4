//! JSON load descriptions.
//!
//! ```json
//! { "terms": [
//!     { "kind": "element_density", "entities": [ { "index": 0, "monomials": [ [[1,0,0], 2.0] ] } ] },
//!     { "kind": "face_density", "degree": 0, "entities": [ { "index": 4, "monomials": [ [[0,0], 1.0] ] } ] },
//!     { "kind": "divergence_field", "entities": [ { "index": 1, "x": [ [[0,0,0], 1.0] ], "y": [] } ] },
//!     { "kind": "preset", "name": "face_dirac", "faces": [4, 7] },
//!     { "kind": "preset", "name": "discrete_laplacian", "values_file": "v.txt" }
//! ] }
//! ```
//!
//! Entity indices refer to the background mesh handed to [`parse_load`].
//! A `degree`, when given, is an upper bound that the data must respect.

use super::presets::Preset;
use crate::error::{Error, LoadError, Result};
use crate::fem::{laplacian, P1Function};
use crate::load::Load;
use crate::mesh::Mesh;
use crate::poly::{BaryPoly, SegmentPoly};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Description {
    terms: Vec<TermSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TermSpec {
    ElementDensity {
        degree: Option<usize>,
        entities: Vec<ElementEntity>,
    },
    FaceDensity {
        degree: Option<usize>,
        entities: Vec<FaceEntity>,
    },
    DivergenceField {
        degree: Option<usize>,
        entities: Vec<FieldEntity>,
    },
    Preset {
        name: String,
        #[serde(default)]
        faces: Vec<usize>,
        values: Option<Vec<f64>>,
        values_file: Option<String>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementEntity {
    index: usize,
    monomials: Vec<([u8; 3], f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaceEntity {
    index: usize,
    monomials: Vec<([u8; 2], f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldEntity {
    index: usize,
    x: Vec<([u8; 3], f64)>,
    y: Vec<([u8; 3], f64)>,
}

fn check_degree(declared: Option<usize>, actual: usize) -> Result<()> {
    match declared {
        Some(d) if actual > d => {
            Err(LoadError::Description(format!("declared degree {d} but data has degree {actual}")).into())
        }
        _ => Ok(()),
    }
}

/// Builds a load on `background` from its JSON description. Relative
/// `values_file` paths are resolved against `base_dir`.
pub fn parse_load(json: &str, background: &Arc<Mesh>, base_dir: &Path) -> Result<Load> {
    let desc: Description = serde_json::from_str(json)?;
    let mut load = Load::zero();
    for term in desc.terms {
        let next = match term {
            TermSpec::ElementDensity { degree, entities } => {
                let polys: Vec<(usize, BaryPoly)> =
                    entities.into_iter().map(|e| (e.index, BaryPoly::from_terms(e.monomials))).collect();
                check_degree(degree, polys.iter().map(|(_, p)| p.degree()).max().unwrap_or(0))?;
                Load::element_density(background, polys)?
            }
            TermSpec::FaceDensity { degree, entities } => {
                let polys: Vec<(usize, SegmentPoly)> =
                    entities.into_iter().map(|e| (e.index, SegmentPoly::from_terms(e.monomials))).collect();
                check_degree(degree, polys.iter().map(|(_, p)| p.degree()).max().unwrap_or(0))?;
                Load::face_density(background, polys)?
            }
            TermSpec::DivergenceField { degree, entities } => {
                let fields: Vec<(usize, [BaryPoly; 2])> = entities
                    .into_iter()
                    .map(|e| (e.index, [BaryPoly::from_terms(e.x), BaryPoly::from_terms(e.y)]))
                    .collect();
                let actual = fields.iter().flat_map(|(_, g)| g.iter().map(BaryPoly::degree)).max().unwrap_or(0);
                check_degree(degree, actual)?;
                Load::divergence(background, fields)?
            }
            TermSpec::Preset { name, faces, values, values_file } => {
                preset_term(&name, background, &faces, values, values_file.as_deref(), base_dir)?
            }
        };
        load = load.plus(&next);
    }
    Ok(load)
}

fn preset_term(
    name: &str,
    background: &Arc<Mesh>,
    faces: &[usize],
    values: Option<Vec<f64>>,
    values_file: Option<&str>,
    base_dir: &Path,
) -> Result<Load> {
    match name {
        "face_dirac" => {
            for &f in faces {
                if f >= background.faces().len() {
                    return Err(LoadError::BadIndex { kind: "face", index: f }.into());
                }
            }
            Ok(Load::face_constants(background, faces.iter().map(|&f| (f, 1.0)))?)
        }
        "discrete_laplacian" => {
            let values = match (values, values_file) {
                (Some(v), _) => v,
                (None, Some(file)) => read_values(&base_dir.join(file))?,
                (None, None) => return Err(Error::Config("discrete_laplacian needs `values` or `values_file`".into())),
            };
            if values.len() != background.num_vertices() {
                return Err(LoadError::Description(format!(
                    "{} nodal values for a mesh with {} vertices",
                    values.len(),
                    background.num_vertices()
                ))
                .into());
            }
            Ok(laplacian(&P1Function::new(background.clone(), values)).scaled(-1.0))
        }
        "sine" => {
            let base = super::presets::base_mesh();
            if background.family() != base.family() {
                return Err(LoadError::IncompatibleMesh.into());
            }
            Ok((*Preset::Sine.load()).clone())
        }
        other => Err(LoadError::Description(format!("unknown preset `{other}`")).into()),
    }
}

/// Whitespace separated numbers.
fn read_values(path: &Path) -> Result<Vec<f64>> {
    std::fs::read_to_string(path)?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| LoadError::Description(format!("bad nodal value `{t}`")).into()))
        .collect()
}
