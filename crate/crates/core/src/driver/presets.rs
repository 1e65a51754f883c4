//! Benchmark loads on the unit square and their cached reference solutions.

use crate::error::{Error, Result};
use crate::fem::{laplacian, solve_galerkin, P1Function};
use crate::load::Load;
use crate::mesh::{unit_square, Mesh, Point};
use crate::poly::{BaryPoly, SegmentPoly};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

/// Number of uniform refinements of the unit square that give the initial
/// mesh of every experiment.
pub const BASE_LEVEL: usize = 2;

/// Uniform refinements of the initial mesh used for reference solutions.
pub const DEFAULT_REFERENCE_LEVEL: usize = 7;

/// The unit square refined uniformly `level` times. All such meshes come
/// from one process-wide root, so every load and every refinement belongs
/// to a single mesh family.
pub fn square_mesh(level: usize) -> Arc<Mesh> {
    static LEVELS: OnceLock<Mutex<Vec<Arc<Mesh>>>> = OnceLock::new();
    let mut levels =
        LEVELS.get_or_init(|| Mutex::new(vec![Arc::new(unit_square())])).lock().expect("mesh cache poisoned");
    while levels.len() <= level {
        let next = levels.last().expect("root present").refine_uniform().mesh;
        levels.push(Arc::new(next));
    }
    levels[level].clone()
}

/// The initial mesh of every experiment.
pub fn base_mesh() -> Arc<Mesh> {
    square_mesh(BASE_LEVEL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Degree-four interpolant of `2π² sin(πx) sin(πy)`.
    Sine,
    /// `−ΔV` for a discrete `V` on the initial mesh, so `U = V` exactly.
    DiscreteLaplacian,
    /// A quadratic surface density on the diagonal `y = x`.
    FaceDirac,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Sine, Preset::DiscreteLaplacian, Preset::FaceDirac];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Sine => "sine",
            Preset::DiscreteLaplacian => "discrete_laplacian",
            Preset::FaceDirac => "face_dirac",
        }
    }

    /// The load, built once per process on [`base_mesh`].
    pub fn load(self) -> Arc<Load> {
        static LOADS: OnceLock<Mutex<HashMap<Preset, Arc<Load>>>> = OnceLock::new();
        let mut map = LOADS.get_or_init(Default::default).lock().expect("preset cache poisoned");
        map.entry(self)
            .or_insert_with(|| {
                let base = base_mesh();
                Arc::new(match self {
                    Preset::Sine => sine_load(&base),
                    Preset::DiscreteLaplacian => laplacian(&discrete_potential(&base)).scaled(-1.0),
                    Preset::FaceDirac => diagonal_dirac(&base),
                })
            })
            .clone()
    }

    /// The exact solution when it is discrete, otherwise a Galerkin solution
    /// on the initial mesh refined `level` times. Both are cached.
    pub fn reference(self, level: usize) -> Result<Arc<P1Function>> {
        if self == Preset::DiscreteLaplacian {
            static EXACT: OnceLock<Arc<P1Function>> = OnceLock::new();
            return Ok(EXACT.get_or_init(|| Arc::new(discrete_potential(&base_mesh()))).clone());
        }
        let load = self.load();
        cached_reference(&format!("{}:{level}", self.name()), level, &load)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}

/// Galerkin solution for `load` on the initial mesh refined `level` times,
/// computed once per key. The reference mesh itself is not cached.
pub fn cached_reference(key: &str, level: usize, load: &Load) -> Result<Arc<P1Function>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<P1Function>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(u) = cache.lock().expect("reference cache poisoned").get(key) {
        return Ok(u.clone());
    }
    let mesh = Arc::new(base_mesh().refine_uniform_times(level));
    let u = Arc::new(solve_galerkin(&mesh, load)?);
    Ok(cache.lock().expect("reference cache poisoned").entry(key.to_owned()).or_insert(u).clone())
}

fn sine(x: Point) -> f64 {
    2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()
}

/// Per-element interpolant of degree four at the points with barycentrics in `{0, ¼, ½, ¾, 1}`.
fn sine_load(mesh: &Arc<Mesh>) -> Load {
    let powers: Vec<[u8; 3]> = (0..=4u8).flat_map(|i| (0..=4 - i).map(move |j| [i, j, 4 - i - j])).collect();
    let nodes: Vec<[f64; 3]> = powers.iter().map(|p| p.map(|a| f64::from(a) / 4.0)).collect();
    let vandermonde =
        DMatrix::from_fn(nodes.len(), powers.len(), |r, c| BaryPoly::monomial(powers[c], 1.0).eval(nodes[r]));
    let lu = vandermonde.lu();
    let densities = (0..mesh.num_elements()).map(|k| {
        let p = mesh.coords(k);
        let values = DVector::from_iterator(
            nodes.len(),
            nodes.iter().map(|l| {
                sine([
                    l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                    l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
                ])
            }),
        );
        let c = lu.solve(&values).expect("unisolvent nodes");
        (k, BaryPoly::from_terms(powers.iter().copied().zip(c.iter().copied())))
    });
    Load::element_density(mesh, densities).expect("indices come from the mesh")
}

/// Nodal interpolant of `16 x(1−x) y(1−y)`.
fn discrete_potential(mesh: &Arc<Mesh>) -> P1Function {
    P1Function::interpolate(mesh.clone(), |x| 16.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]))
}

/// `j(x, y) = 1 + 8x(1−x)` on every face of the diagonal `y = x`.
fn diagonal_dirac(mesh: &Arc<Mesh>) -> Load {
    let faces = mesh.faces().iter().enumerate().filter_map(|(f, face)| {
        let [a, b] = face.vertices.map(|v| mesh.vertices()[v].coords);
        let on_diagonal = (a[0] - a[1]).abs() < 1e-12 && (b[0] - b[1]).abs() < 1e-12;
        on_diagonal.then(|| (f, quadratic_density(a[0], b[0])))
    });
    Load::face_density(mesh, faces).expect("indices come from the mesh")
}

/// `1 + 8x − 8x²` with `x = μ₀ xa + μ₁ xb`, homogenised with `μ₀ + μ₁ = 1`.
fn quadratic_density(xa: f64, xb: f64) -> SegmentPoly {
    SegmentPoly::from_terms([
        ([2, 0], 1.0 + 8.0 * xa - 8.0 * xa * xa),
        ([1, 1], 2.0 + 8.0 * (xa + xb) - 16.0 * xa * xb),
        ([0, 2], 1.0 + 8.0 * xb - 8.0 * xb * xb),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::LoadTerm;

    #[test]
    fn base_mesh_is_shared() {
        assert!(Arc::ptr_eq(&base_mesh(), &base_mesh()));
        assert_eq!(base_mesh().num_elements(), 32);
    }

    #[test]
    fn sine_interpolant_matches_at_centroids() {
        let load = Preset::Sine.load();
        let LoadTerm::ElementDensity { densities, background } = &load.terms()[0] else { panic!() };
        for (k, d) in densities.iter().enumerate() {
            let p = background.coords(k);
            let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            let v = d.as_ref().unwrap().eval([1.0 / 3.0; 3]);
            assert!((v - sine(c)).abs() < 5e-3 * 2.0 * PI * PI);
        }
    }

    #[test]
    fn quadratic_density_endpoints() {
        let j = quadratic_density(0.25, 0.5);
        assert!((j.eval(1.0, 0.0) - (1.0 + 8.0 * 0.25 * 0.75)).abs() < 1e-14);
        assert!((j.eval(0.0, 1.0) - 3.0).abs() < 1e-14);
        assert!((j.eval(0.5, 0.5) - (1.0 + 8.0 * 0.375 * 0.625)).abs() < 1e-14);
    }
}
