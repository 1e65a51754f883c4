use super::{Load, LoadTerm};
use crate::error::LoadError;
use crate::mesh::{barycentric_of, triangle_area, Mesh, Point, NONE};
use crate::poly::BaryPoly;
use crate::quadrature::{segment_rule, triangle_rule_for, SEGMENT_DEGREE, TRIANGLE_DEGREE};
use std::sync::Arc;

/// Tolerance for deciding that a point lies on an edge of a background element.
const ON_EDGE: f64 = 1e-10;

/// Pairs a load with test polynomials living on the elements of a target
/// mesh.
///
/// Each target element is cut into pieces on which both the target element
/// and a background element are single polynomials. Because both meshes
/// descend from one initial mesh by bisection, a piece is always either the
/// target element itself or a background element inside it.
pub struct LoadEvaluator<'a> {
    mesh: &'a Mesh,
    groups: Vec<(&'a Arc<Mesh>, Vec<&'a LoadTerm>)>,
    /// Polynomial degree of each term, in group order.
    degrees: Vec<Vec<usize>>,
}

struct Piece {
    tri: [Point; 3],
    bg: usize,
    /// Background face under each piece edge and its weight: interior
    /// faces are visited from both sides and count half each time.
    edges: [(usize, f64); 3],
}

impl<'a> LoadEvaluator<'a> {
    pub fn new(load: &'a Load, mesh: &'a Mesh) -> Result<Self, LoadError> {
        let mut groups: Vec<(&'a Arc<Mesh>, Vec<&'a LoadTerm>)> = Vec::new();
        for t in &load.terms {
            let bg = t.background();
            if bg.family() != mesh.family() {
                return Err(LoadError::IncompatibleMesh);
            }
            match groups.iter_mut().find(|(b, _)| Arc::ptr_eq(b, bg)) {
                Some((_, v)) => v.push(t),
                None => groups.push((bg, vec![t])),
            }
        }
        let degrees = groups.iter().map(|(_, terms)| terms.iter().map(|t| t.degree()).collect()).collect();
        Ok(Self { mesh, groups, degrees })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    fn pieces(&self, bg: &Mesh, k: usize) -> Result<Vec<Piece>, LoadError> {
        let addr = self.mesh.elements()[k].addr;
        let weight = |f: usize| if bg.faces()[f].is_interior() { 0.5 } else { 1.0 };
        if let Some(b) = bg.element_containing(addr) {
            let tri = self.mesh.coords(k);
            let mut edges = [(NONE, 0.0); 3];
            for (j, slot) in edges.iter_mut().enumerate() {
                let lp = bg.barycentric(b, tri[(j + 1) % 3]);
                let lq = bg.barycentric(b, tri[(j + 2) % 3]);
                if let Some(i) = (0..3).find(|&i| lp[i].abs() < ON_EDGE && lq[i].abs() < ON_EDGE) {
                    let f = bg.element_faces(b)[i];
                    *slot = (f, weight(f));
                }
            }
            return Ok(vec![Piece { tri, bg: b, edges }]);
        }
        let inside = bg.elements_within(addr);
        if inside.is_empty() {
            return Err(LoadError::NotNested { element: k });
        }
        Ok(inside
            .into_iter()
            .map(|b| {
                let ef = bg.element_faces(b);
                Piece { tri: bg.coords(b), bg: b, edges: ef.map(|f| (f, weight(f))) }
            })
            .collect())
    }

    fn check_degree(&self, test_degree: usize) -> Result<(), LoadError> {
        for ((_, terms), degrees) in self.groups.iter().zip(&self.degrees) {
            for (t, &d) in terms.iter().zip(degrees) {
                let (deg, max) = match t {
                    LoadTerm::ElementDensity { .. } => (d + test_degree, TRIANGLE_DEGREE),
                    LoadTerm::FaceDensity { .. } => (d + test_degree, SEGMENT_DEGREE),
                    LoadTerm::DivergenceField { .. } => (d + test_degree.saturating_sub(1), TRIANGLE_DEGREE),
                };
                if deg > max {
                    return Err(LoadError::DegreeOverflow { degree: deg, max });
                }
            }
        }
        Ok(())
    }

    /// Writes `⟨f, tests[t] on element k⟩` into `out[t]`. The test
    /// polynomials are in the barycentrics of element `k` and vanish
    /// outside it.
    pub fn pair_element(&self, k: usize, tests: &[BaryPoly], out: &mut [f64]) -> Result<(), LoadError> {
        out[..tests.len()].iter_mut().for_each(|x| *x = 0.0);
        if self.groups.is_empty() {
            return Ok(());
        }
        let test_degree = tests.iter().map(BaryPoly::degree).max().unwrap_or(0);
        self.check_degree(test_degree)?;
        let xtri = self.mesh.coords(k);
        let grads = self.mesh.bary_grads(k);
        let seg_rule = segment_rule();
        let mut values = vec![0.0; tests.len()];
        let mut tgrads = vec![[0.0; 2]; tests.len()];
        for ((bg, terms), degrees) in self.groups.iter().zip(&self.degrees) {
            let has_cells = terms.iter().any(|t| !matches!(t, LoadTerm::FaceDensity { .. }));
            let has_faces = terms.iter().any(|t| matches!(t, LoadTerm::FaceDensity { .. }));
            let has_fields = terms.iter().any(|t| matches!(t, LoadTerm::DivergenceField { .. }));
            let cell_degree = terms
                .iter()
                .zip(degrees)
                .map(|(t, &d)| match t {
                    LoadTerm::ElementDensity { .. } => d + test_degree,
                    LoadTerm::DivergenceField { .. } => d + test_degree.saturating_sub(1),
                    LoadTerm::FaceDensity { .. } => 0,
                })
                .max()
                .unwrap_or(0);
            let tri_rule = triangle_rule_for(cell_degree);
            for piece in self.pieces(bg, k)? {
                let b = piece.bg;
                let area = triangle_area(&piece.tri);
                let cell_active = has_cells
                    && terms.iter().any(|t| match t {
                        LoadTerm::ElementDensity { densities, .. } => densities[b].is_some(),
                        LoadTerm::DivergenceField { fields, .. } => fields[b].is_some(),
                        LoadTerm::FaceDensity { .. } => false,
                    });
                if cell_active {
                    let btri = bg.coords(b);
                    for (xi, &w) in tri_rule.points.iter().zip(&tri_rule.weights) {
                        let x = combine(&piece.tri, xi);
                        let lx = barycentric_of(&xtri, x);
                        let lb = barycentric_of(&btri, x);
                        let wa = w * area;
                        for (i, p) in tests.iter().enumerate() {
                            values[i] = p.eval(lx);
                            if has_fields {
                                tgrads[i] = p.gradient(lx, &grads);
                            }
                        }
                        for t in terms {
                            match t {
                                LoadTerm::ElementDensity { densities, .. } => {
                                    if let Some(g) = &densities[b] {
                                        let gv = wa * g.eval(lb);
                                        for i in 0..tests.len() {
                                            out[i] += gv * values[i];
                                        }
                                    }
                                }
                                LoadTerm::DivergenceField { fields, .. } => {
                                    if let Some([g0, g1]) = &fields[b] {
                                        let (gx, gy) = (wa * g0.eval(lb), wa * g1.eval(lb));
                                        for i in 0..tests.len() {
                                            out[i] -= gx * tgrads[i][0] + gy * tgrads[i][1];
                                        }
                                    }
                                }
                                LoadTerm::FaceDensity { .. } => {}
                            }
                        }
                    }
                }
                if !has_faces {
                    continue;
                }
                for j in 0..3 {
                    let (f, weight) = piece.edges[j];
                    if f == NONE {
                        continue;
                    }
                    let face = bg.faces()[f];
                    let fa = bg.vertices()[face.vertices[0]].coords;
                    let fb = bg.vertices()[face.vertices[1]].coords;
                    let fl2 = (fb[0] - fa[0]).powi(2) + (fb[1] - fa[1]).powi(2);
                    let (p, q) = (piece.tri[(j + 1) % 3], piece.tri[(j + 2) % 3]);
                    let len = (q[0] - p[0]).hypot(q[1] - p[1]);
                    for t in terms {
                        let LoadTerm::FaceDensity { densities, .. } = t else { continue };
                        let Some(dens) = &densities[f] else { continue };
                        for (&s, &w) in seg_rule.points.iter().zip(&seg_rule.weights) {
                            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                            let mu1 = ((x[0] - fa[0]) * (fb[0] - fa[0]) + (x[1] - fa[1]) * (fb[1] - fa[1])) / fl2;
                            let jv = weight * w * len * dens.eval(1.0 - mu1, mu1);
                            let lx = barycentric_of(&xtri, x);
                            for (i, poly) in tests.iter().enumerate() {
                                out[i] += jv * poly.eval(lx);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `(∫_K f, ∫_K f²)` over target element `k` for loads made only of
    /// element densities on one background.
    pub fn density_moments(&self, k: usize) -> Result<(f64, f64), LoadError> {
        if self.groups.len() > 1 {
            return Err(LoadError::Description("squared densities need a single background".into()));
        }
        let Some((bg, terms)) = self.groups.first() else { return Ok((0.0, 0.0)) };
        if let Some(t) = terms.iter().find(|t| !matches!(t, LoadTerm::ElementDensity { .. })) {
            return Err(LoadError::NotL2(t.kind()));
        }
        let deg = self.degrees[0].iter().copied().max().unwrap_or(0);
        if 2 * deg > TRIANGLE_DEGREE {
            return Err(LoadError::DegreeOverflow { degree: 2 * deg, max: TRIANGLE_DEGREE });
        }
        let rule = triangle_rule_for(2 * deg);
        let (mut m1, mut m2) = (0.0, 0.0);
        for piece in self.pieces(bg, k)? {
            let area = triangle_area(&piece.tri);
            let btri = bg.coords(piece.bg);
            for (xi, &w) in rule.points.iter().zip(&rule.weights) {
                let lb = barycentric_of(&btri, combine(&piece.tri, xi));
                let g: f64 = terms
                    .iter()
                    .map(|t| match t {
                        LoadTerm::ElementDensity { densities, .. } => {
                            densities[piece.bg].as_ref().map_or(0.0, |p| p.eval(lb))
                        }
                        _ => 0.0,
                    })
                    .sum();
                m1 += w * area * g;
                m2 += w * area * g * g;
            }
        }
        Ok((m1, m2))
    }

    /// `⟨f, v⟩` for a function given by its pieces on a few elements.
    pub fn pair_local(&self, parts: &[(usize, BaryPoly)]) -> Result<f64, LoadError> {
        let mut out = [0.0];
        let mut total = 0.0;
        for (k, p) in parts {
            self.pair_element(*k, std::slice::from_ref(p), &mut out)?;
            total += out[0];
        }
        Ok(total)
    }

    /// Whether any term may be nonzero on the closure of the given elements.
    /// Conservative: it can answer `true` for loads that vanish there.
    pub fn touches(&self, elements: &[usize]) -> Result<bool, LoadError> {
        for (bg, terms) in &self.groups {
            for &k in elements {
                for piece in self.pieces(bg, k)? {
                    let b = piece.bg;
                    for t in terms {
                        let hit = match t {
                            LoadTerm::ElementDensity { densities, .. } => densities[b].is_some(),
                            LoadTerm::DivergenceField { fields, .. } => fields[b].is_some(),
                            LoadTerm::FaceDensity { densities, .. } => {
                                piece.edges.iter().any(|&(f, _)| f != NONE && densities[f].is_some())
                            }
                        };
                        if hit {
                            return Ok(true);
                        }
                    }
                }
            }
        }
        Ok(false)
    }
}

fn combine(tri: &[Point; 3], l: &[f64; 3]) -> Point {
    [l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0], l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1]]
}
