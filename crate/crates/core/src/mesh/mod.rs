//! Conforming triangulations, patches and newest-vertex bisection.

mod io;
mod refine;

pub use io::{read_mesh, write_mesh};
pub use refine::Refinement;

use crate::error::MeshError;
use crate::poly::D;
use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

pub type Point = [f64; 2];

/// Marker for an absent index.
pub const NONE: usize = usize::MAX;

static NEXT_FAMILY: AtomicU64 = AtomicU64::new(1);

/// Position of an element in the bisection forest of its initial mesh.
///
/// Bit `k` of `path` records which child was taken at level `k`. Two
/// elements of the same family are nested exactly when one address is a
/// prefix of the other, and disjoint otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Addr {
    pub root: u32,
    pub depth: u8,
    pub path: u128,
}

impl Addr {
    pub fn root(root: u32) -> Self {
        Self { root, depth: 0, path: 0 }
    }

    pub fn child(self, which: u8) -> Self {
        assert!(self.depth < 127, "bisection depth limit reached");
        Self { root: self.root, depth: self.depth + 1, path: self.path | (u128::from(which) << self.depth) }
    }

    pub fn ancestor(self, depth: u8) -> Self {
        debug_assert!(depth <= self.depth);
        let mask = if depth == 0 { 0 } else { u128::MAX >> (128 - u32::from(depth)) };
        Self { root: self.root, depth, path: self.path & mask }
    }

    pub fn contains(self, other: Addr) -> bool {
        self.root == other.root && self.depth <= other.depth && other.ancestor(self.depth) == self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub coords: Point,
    /// Lies on a boundary face of this mesh.
    pub on_boundary: bool,
    /// Lies on the boundary of the original computational domain. Differs
    /// from `on_boundary` only for submeshes.
    pub on_domain_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    /// Counter-clockwise vertex indices.
    pub vertices: [usize; 3],
    /// Local index of the vertex opposite the refinement edge.
    pub refinement_edge: u8,
    pub addr: Addr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    /// Adjacent elements; the second is [`NONE`] on the boundary.
    pub elements: [usize; 2],
    /// Local index of the face (opposite vertex) within each adjacent element.
    pub local: [u8; 2],
    pub domain_boundary: bool,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.elements[1] != NONE
    }

    pub fn adjacent(&self) -> &[usize] {
        if self.is_interior() {
            &self.elements
        } else {
            &self.elements[..1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    /// Longest edge.
    pub diameter: f64,
    /// Diameter of the inscribed circle.
    pub inball_diameter: f64,
    /// Length of the face opposite each local vertex.
    pub face_lengths: [f64; 3],
    /// Height over the face opposite each local vertex, `2|K| / |F|`.
    pub heights: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
pub struct Star<'a> {
    pub vertex: usize,
    pub elements: &'a [usize],
    /// Interior faces of the mesh that contain the vertex.
    pub interior_faces: &'a [usize],
    pub diameter: f64,
}

/// Lookup structure over element addresses, built on first use.
#[derive(Debug, Clone, Default)]
pub(crate) struct TreeIndex {
    leaves: HashMap<Addr, usize>,
    internal: HashSet<Addr>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    family: u64,
    vertices: Vec<Vertex>,
    elements: Vec<Element>,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 3]>,
    interior_faces: Vec<usize>,
    interior_ordinal: Vec<usize>,
    star_el_off: Vec<usize>,
    star_el: Vec<usize>,
    star_f_off: Vec<usize>,
    star_f: Vec<usize>,
    tree: OnceLock<TreeIndex>,
}

fn signed_area(p: [Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds and validates a mesh from raw coordinates and vertex triples.
///
/// Negatively oriented triples are reoriented. Every boundary face is taken
/// to be part of the domain boundary.
pub fn build_mesh(coords: &[Point], triples: &[[usize; 3]]) -> Result<Mesh, MeshError> {
    if triples.is_empty() {
        return Err(MeshError::Empty);
    }
    for (v, c) in coords.iter().enumerate() {
        if !c[0].is_finite() || !c[1].is_finite() {
            return Err(MeshError::NonFiniteCoordinate { vertex: v });
        }
    }
    let mut seen: HashMap<[usize; 3], usize> = HashMap::new();
    let mut elements = Vec::with_capacity(triples.len());
    for (k, t) in triples.iter().enumerate() {
        for &v in t {
            if v >= coords.len() {
                return Err(MeshError::VertexOutOfRange { element: k, vertex: v });
            }
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(MeshError::RepeatedVertex { element: k });
        }
        let mut sorted = *t;
        sorted.sort_unstable();
        if let Some(&first) = seen.get(&sorted) {
            return Err(MeshError::DuplicateElement { first, second: k });
        }
        seen.insert(sorted, k);
        let p = [coords[t[0]], coords[t[1]], coords[t[2]]];
        let a = signed_area(p);
        let scale = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
        if a.abs() <= 1e-12 * scale * scale {
            return Err(MeshError::ZeroArea { element: k });
        }
        let v = if a > 0.0 { *t } else { [t[0], t[2], t[1]] };
        elements.push(Element {
            vertices: v,
            refinement_edge: initial_refinement_edge(coords, v),
            addr: Addr::root(u32::try_from(k).expect("too many elements")),
        });
    }
    let family = NEXT_FAMILY.fetch_add(1, Ordering::Relaxed);
    let mesh = Mesh::from_parts(family, coords.to_vec(), elements, |_, _| true)?;
    if let Some(v) = (0..mesh.vertices.len()).find(|&v| mesh.star_el_off[v] == mesh.star_el_off[v + 1]) {
        return Err(MeshError::UnusedVertex { vertex: v });
    }
    mesh.check_conformity()?;
    Ok(mesh)
}

/// Longest edge, ties broken by the lexicographically smallest sorted
/// vertex-id pair.
fn initial_refinement_edge(coords: &[Point], v: [usize; 3]) -> u8 {
    let mut best = 0usize;
    let mut best_len = -1.0;
    let mut best_key = (NONE, NONE);
    for j in 0..3 {
        let (a, b) = (v[(j + 1) % 3], v[(j + 2) % 3]);
        let len = dist(coords[a], coords[b]);
        let k = key(a, b);
        let tie = (len - best_len).abs() <= 1e-12 * len.max(best_len);
        if (!tie && len > best_len) || (tie && k < best_key) {
            best = j;
            best_len = len;
            best_key = k;
        }
    }
    best as u8
}

impl Mesh {
    /// Assembles topology for already oriented elements. Boundary faces are
    /// tagged as domain boundary when `domain_boundary(a, b)` holds.
    pub(crate) fn from_parts(
        family: u64,
        coords: Vec<Point>,
        elements: Vec<Element>,
        domain_boundary: impl Fn(usize, usize) -> bool,
    ) -> Result<Mesh, MeshError> {
        let nv = coords.len();
        let mut faces: Vec<Face> = Vec::with_capacity(elements.len() * 3 / 2 + nv);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(elements.len() * 2);
        let mut element_faces = Vec::with_capacity(elements.len());
        for (k, e) in elements.iter().enumerate() {
            let mut ef = [NONE; 3];
            for j in 0..3 {
                let (a, b) = (e.vertices[(j + 1) % 3], e.vertices[(j + 2) % 3]);
                let f = *lookup.entry(key(a, b)).or_insert_with(|| {
                    faces.push(Face {
                        vertices: [a, b],
                        elements: [NONE, NONE],
                        local: [0, 0],
                        domain_boundary: false,
                    });
                    faces.len() - 1
                });
                let face = &mut faces[f];
                if face.elements[0] == NONE {
                    face.elements[0] = k;
                    face.local[0] = j as u8;
                } else if face.elements[1] == NONE {
                    face.elements[1] = k;
                    face.local[1] = j as u8;
                } else {
                    return Err(MeshError::NonManifoldEdge { a, b });
                }
                ef[j] = f;
            }
            element_faces.push(ef);
        }
        let mut vertices: Vec<Vertex> =
            coords.iter().map(|&c| Vertex { coords: c, on_boundary: false, on_domain_boundary: false }).collect();
        let mut interior_faces = Vec::new();
        let mut interior_ordinal = vec![NONE; faces.len()];
        for (f, face) in faces.iter_mut().enumerate() {
            if face.is_interior() {
                interior_ordinal[f] = interior_faces.len();
                interior_faces.push(f);
            } else {
                face.domain_boundary = domain_boundary(face.vertices[0], face.vertices[1]);
                for &v in &face.vertices {
                    vertices[v].on_boundary = true;
                    vertices[v].on_domain_boundary |= face.domain_boundary;
                }
            }
        }
        let (star_el_off, star_el) =
            csr(nv, elements.iter().enumerate().flat_map(|(k, e)| e.vertices.iter().map(move |&v| (v, k))));
        let (star_f_off, star_f) =
            csr(nv, interior_faces.iter().flat_map(|&f| faces[f].vertices.iter().map(move |&v| (v, f))));
        Ok(Mesh {
            family,
            vertices,
            elements,
            faces,
            element_faces,
            interior_faces,
            interior_ordinal,
            star_el_off,
            star_el,
            star_f_off,
            star_f,
            tree: OnceLock::new(),
        })
    }

    /// Identifier shared by an initial mesh and everything derived from it.
    pub fn family(&self) -> u64 {
        self.family
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Faces of element `k`, the `j`-th opposite local vertex `j`.
    pub fn element_faces(&self, k: usize) -> [usize; 3] {
        self.element_faces[k]
    }

    pub fn interior_faces(&self) -> &[usize] {
        &self.interior_faces
    }

    /// Position of face `f` among the interior faces, or [`NONE`].
    pub fn interior_ordinal(&self, f: usize) -> usize {
        self.interior_ordinal[f]
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| !self.vertices[v].on_boundary)
    }

    pub fn num_interior_vertices(&self) -> usize {
        self.vertices.iter().filter(|v| !v.on_boundary).count()
    }

    pub fn coords(&self, k: usize) -> [Point; 3] {
        let v = self.elements[k].vertices;
        [self.vertices[v[0]].coords, self.vertices[v[1]].coords, self.vertices[v[2]].coords]
    }

    pub fn area(&self, k: usize) -> f64 {
        signed_area(self.coords(k))
    }

    pub fn face_length(&self, f: usize) -> f64 {
        let [a, b] = self.faces[f].vertices;
        dist(self.vertices[a].coords, self.vertices[b].coords)
    }

    /// Gradients of the three barycentric coordinates of element `k`.
    pub fn bary_grads(&self, k: usize) -> [[f64; 2]; 3] {
        let p = self.coords(k);
        let two_a = 2.0 * signed_area(p);
        let mut g = [[0.0; 2]; 3];
        for i in 0..3 {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            g[i] = [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a];
        }
        g
    }

    /// Barycentric coordinates of `x` with respect to element `k`.
    pub fn barycentric(&self, k: usize, x: Point) -> [f64; 3] {
        barycentric_of(&self.coords(k), x)
    }

    /// Outward unit normal of the face opposite local vertex `j` of element `k`.
    pub fn outward_normal(&self, k: usize, j: usize) -> [f64; 2] {
        let p = self.coords(k);
        let (a, b) = (p[(j + 1) % 3], p[(j + 2) % 3]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    }

    pub fn geometry(&self, k: usize) -> ElementGeometry {
        let p = self.coords(k);
        let area = signed_area(p);
        let mut face_lengths = [0.0; 3];
        for j in 0..3 {
            face_lengths[j] = dist(p[(j + 1) % 3], p[(j + 2) % 3]);
        }
        let perimeter: f64 = face_lengths.iter().sum();
        ElementGeometry {
            area,
            diameter: face_lengths.iter().cloned().fold(0.0, f64::max),
            inball_diameter: 2.0 * (2.0 * area / perimeter),
            face_lengths,
            heights: face_lengths.map(|l| D as f64 * area / l),
        }
    }

    /// `σ(M) = max_K h_K / ρ_K`.
    pub fn shape_coefficient(&self) -> f64 {
        (0..self.elements.len())
            .map(|k| {
                let g = self.geometry(k);
                g.diameter / g.inball_diameter
            })
            .fold(0.0, f64::max)
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.elements.len()).map(|k| self.geometry(k).diameter).fold(0.0, f64::max)
    }

    pub fn star_elements(&self, z: usize) -> &[usize] {
        &self.star_el[self.star_el_off[z]..self.star_el_off[z + 1]]
    }

    pub fn star_interior_faces(&self, z: usize) -> &[usize] {
        &self.star_f[self.star_f_off[z]..self.star_f_off[z + 1]]
    }

    pub fn star(&self, z: usize) -> Star<'_> {
        let elements = self.star_elements(z);
        let mut pts: Vec<Point> = Vec::new();
        for &k in elements {
            for &v in &self.elements[k].vertices {
                pts.push(self.vertices[v].coords);
            }
        }
        let mut diameter: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                diameter = diameter.max(dist(*a, *b));
            }
        }
        Star { vertex: z, elements, interior_faces: self.star_interior_faces(z), diameter }
    }

    /// Local index of vertex `v` in element `k`.
    pub fn local_index(&self, k: usize, v: usize) -> Option<usize> {
        self.elements[k].vertices.iter().position(|&w| w == v)
    }

    /// The submesh formed by `elements`, together with the map from its
    /// vertices to vertices of `self`. Addresses and refinement edges are
    /// kept, so the submesh stays in the same family.
    pub fn submesh(&self, elements: &[usize]) -> (Mesh, Vec<usize>) {
        let mut map = HashMap::new();
        let mut parent_vertex = Vec::new();
        let mut sub_elements = Vec::with_capacity(elements.len());
        let mut boundary_pairs = HashSet::new();
        for &k in elements {
            let e = self.elements[k];
            let mut v = [0usize; 3];
            for i in 0..3 {
                v[i] = *map.entry(e.vertices[i]).or_insert_with(|| {
                    parent_vertex.push(e.vertices[i]);
                    parent_vertex.len() - 1
                });
            }
            for j in 0..3 {
                if self.faces[self.element_faces[k][j]].domain_boundary {
                    boundary_pairs.insert(key(v[(j + 1) % 3], v[(j + 2) % 3]));
                }
            }
            sub_elements.push(Element { vertices: v, ..e });
        }
        let coords = parent_vertex.iter().map(|&v| self.vertices[v].coords).collect();
        let mesh = Mesh::from_parts(self.family, coords, sub_elements, |a, b| boundary_pairs.contains(&key(a, b)))
            .expect("a subset of a conforming mesh is conforming");
        (mesh, parent_vertex)
    }

    /// Checks conformity: no vertex hangs on a boundary face and the
    /// elements tile the region enclosed by the boundary without overlap.
    pub fn check_conformity(&self) -> Result<(), MeshError> {
        let boundary: Vec<usize> = (0..self.faces.len()).filter(|&f| !self.faces[f].is_interior()).collect();
        // Bucket vertices on a grid to avoid a quadratic scan.
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v.coords[d]);
                hi[d] = hi[d].max(v.coords[d]);
            }
        }
        let n = ((self.vertices.len() as f64).sqrt().ceil() as usize).max(1);
        let cell = [((hi[0] - lo[0]) / n as f64).max(1e-300), ((hi[1] - lo[1]) / n as f64).max(1e-300)];
        let cell_of = |x: f64, d: usize| (((x - lo[d]) / cell[d]).floor().max(0.0) as usize).min(n - 1);
        let mut grid: Vec<Vec<usize>> = vec![Vec::new(); n * n];
        for (i, v) in self.vertices.iter().enumerate() {
            grid[cell_of(v.coords[0], 0) * n + cell_of(v.coords[1], 1)].push(i);
        }
        for &f in &boundary {
            let [a, b] = self.faces[f].vertices;
            let (pa, pb) = (self.vertices[a].coords, self.vertices[b].coords);
            let len2 = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
            let (i0, i1) = (cell_of(pa[0].min(pb[0]), 0), cell_of(pa[0].max(pb[0]), 0));
            let (j0, j1) = (cell_of(pa[1].min(pb[1]), 1), cell_of(pa[1].max(pb[1]), 1));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    for &v in &grid[i * n + j] {
                        if v == a || v == b {
                            continue;
                        }
                        let p = self.vertices[v].coords;
                        let t = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1])) / len2;
                        let cross = (p[0] - pa[0]) * (pb[1] - pa[1]) - (p[1] - pa[1]) * (pb[0] - pa[0]);
                        if t > 1e-10 && t < 1.0 - 1e-10 && cross.abs() <= 1e-10 * len2 {
                            return Err(MeshError::HangingVertex { vertex: v, a, b });
                        }
                    }
                }
            }
        }
        let element_area: f64 = (0..self.elements.len()).map(|k| self.area(k)).sum();
        let mut enclosed = 0.0;
        for &f in &boundary {
            let face = self.faces[f];
            let k = face.elements[0];
            let j = face.local[0] as usize;
            let v = self.elements[k].vertices;
            let (p, q) = (self.vertices[v[(j + 1) % 3]].coords, self.vertices[v[(j + 2) % 3]].coords);
            enclosed += 0.5 * (p[0] * q[1] - q[0] * p[1]);
        }
        if (element_area - enclosed).abs() > 1e-10 * element_area {
            return Err(MeshError::Overlap { element_area, enclosed_area: enclosed });
        }
        Ok(())
    }

    pub(crate) fn tree(&self) -> &TreeIndex {
        self.tree.get_or_init(|| {
            let mut t = TreeIndex::default();
            t.leaves.reserve(self.elements.len());
            for (k, e) in self.elements.iter().enumerate() {
                t.leaves.insert(e.addr, k);
                for d in (0..e.addr.depth).rev() {
                    if !t.internal.insert(e.addr.ancestor(d)) {
                        // Every shallower ancestor is already present.
                        break;
                    }
                }
            }
            t
        })
    }

    /// The element of `self` equal to or containing the region `addr`.
    pub fn element_containing(&self, addr: Addr) -> Option<usize> {
        let t = self.tree();
        (0..=addr.depth).rev().find_map(|d| t.leaves.get(&addr.ancestor(d)).copied())
    }

    /// Elements of `self` strictly inside the region `addr`, in tree order.
    pub fn elements_within(&self, addr: Addr) -> Vec<usize> {
        let t = self.tree();
        let mut out = Vec::new();
        if !t.internal.contains(&addr) {
            return out;
        }
        let mut stack = vec![addr.child(1), addr.child(0)];
        while let Some(a) = stack.pop() {
            if let Some(&k) = t.leaves.get(&a) {
                out.push(k);
            } else if t.internal.contains(&a) {
                stack.push(a.child(1));
                stack.push(a.child(0));
            }
        }
        out
    }

    /// Whether every element of `self` lies inside an element of `coarse`.
    pub fn refines(&self, coarse: &Mesh) -> bool {
        self.family == coarse.family && self.elements.iter().all(|e| coarse.element_containing(e.addr).is_some())
    }
}

/// Barycentric coordinates of `x` in the triangle `p`.
pub fn barycentric_of(p: &[Point; 3], x: Point) -> [f64; 3] {
    let two_a = 2.0 * signed_area(*p);
    let mut l = [0.0; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        l[i] = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / two_a;
    }
    l
}

pub(crate) fn triangle_area(p: &[Point; 3]) -> f64 {
    signed_area(*p).abs()
}

fn csr(n: usize, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> (Vec<usize>, Vec<usize>) {
    let mut off = vec![0usize; n + 1];
    for (v, _) in pairs.clone() {
        off[v + 1] += 1;
    }
    for i in 0..n {
        off[i + 1] += off[i];
    }
    let mut fill = off.clone();
    let mut data = vec![0usize; off[n]];
    for (v, x) in pairs {
        data[fill[v]] = x;
        fill[v] += 1;
    }
    (off, data)
}

/// The unit square split along the diagonal from (0,0) to (1,1).
pub fn unit_square() -> Mesh {
    build_mesh(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], &[[0, 1, 2], [0, 2, 3]]).expect("valid built-in mesh")
}
