//! Element and face functionals `χ_i` with their biorthogonal test
//! functions `ψ_i` and the bubbles `λ_i`.
//!
//! The index set `ℐ` holds every element followed by every interior face.

use crate::mesh::Mesh;
use crate::poly::{grad_inner_integral, BaryPoly};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Element(usize),
    /// A face, by its index in the mesh face list. Only interior faces belong to `ℐ`.
    Face(usize),
}

impl Index {
    /// Position in `ℐ`: elements first, then interior faces in mesh order.
    pub fn ordinal(self, mesh: &Mesh) -> usize {
        match self {
            Index::Element(k) => k,
            Index::Face(f) => mesh.num_elements() + mesh.interior_ordinal(f),
        }
    }

    pub fn from_ordinal(mesh: &Mesh, i: usize) -> Index {
        if i < mesh.num_elements() {
            Index::Element(i)
        } else {
            Index::Face(mesh.interior_faces()[i - mesh.num_elements()])
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            Index::Element(_) => "element",
            Index::Face(_) => "face",
        }
    }

    pub fn entity(self) -> usize {
        match self {
            Index::Element(k) | Index::Face(k) => k,
        }
    }
}

pub fn index_count(mesh: &Mesh) -> usize {
    mesh.num_elements() + mesh.interior_faces().len()
}

/// `ℐ_z`: the elements of the star of `z` and the interior faces containing `z`.
pub fn star_indices(mesh: &Mesh, z: usize) -> Vec<Index> {
    mesh.star_elements(z)
        .iter()
        .map(|&k| Index::Element(k))
        .chain(mesh.star_interior_faces(z).iter().map(|&f| Index::Face(f)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Psi,
    Lambda,
}

/// A function supported on one element or one face patch, stored as a
/// polynomial in the barycentrics of each element of its support.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub family: Family,
    pub index: Index,
    pub parts: Vec<(usize, BaryPoly)>,
    pub grad_norm: f64,
}

/// Bubbles share the representation of test functions.
pub type BubbleFunction = TestFunction;

impl TestFunction {
    fn new(mesh: &Mesh, family: Family, index: Index, parts: Vec<(usize, BaryPoly)>) -> Self {
        let grad_norm = parts
            .iter()
            .map(|(k, p)| grad_inner_integral(p, p, &mesh.bary_grads(*k), mesh.area(*k)))
            .sum::<f64>()
            .sqrt();
        Self { family, index, parts, grad_norm }
    }

    /// Value at barycentric point `l` of element `k`; zero off the support.
    pub fn eval(&self, k: usize, l: [f64; 3]) -> f64 {
        self.parts.iter().find(|(e, _)| *e == k).map(|(_, p)| p.eval(l)).unwrap_or(0.0)
    }
}

fn face_locals(mesh: &Mesh, f: usize, k: usize) -> (usize, usize, usize) {
    let [a, b] = mesh.faces()[f].vertices;
    let ia = mesh.local_index(k, a).expect("face vertex in element");
    let ib = mesh.local_index(k, b).expect("face vertex in element");
    (ia, ib, 3 - ia - ib)
}

/// `ψ_K = 60/|K| λ_K` and `ψ_F = 6/|F| λ_F (1 − 5 φ_c)` on each element of `ω_F`.
pub fn psi(mesh: &Mesh, i: Index) -> TestFunction {
    match i {
        Index::Element(k) => {
            let a = mesh.area(k);
            TestFunction::new(mesh, Family::Psi, i, vec![(k, BaryPoly::monomial([1, 1, 1], 60.0 / a))])
        }
        Index::Face(f) => {
            let s = 6.0 / mesh.face_length(f);
            let parts = mesh.faces()[f]
                .adjacent()
                .iter()
                .map(|&k| {
                    let (ia, ib, ic) = face_locals(mesh, f, k);
                    let lf = BaryPoly::lambda(ia).mul(&BaryPoly::lambda(ib));
                    let mut cut = [0.0; 3];
                    cut[ic] = -5.0;
                    let factor = BaryPoly::constant(1.0).add(&BaryPoly::affine(cut));
                    (k, lf.mul(&factor).scale(s))
                })
                .collect();
            TestFunction::new(mesh, Family::Psi, i, parts)
        }
    }
}

/// `λ_K = Π_{z∈K} φ_z` and `λ_F = Π_{z∈F} φ_z`.
pub fn lambda(mesh: &Mesh, i: Index) -> BubbleFunction {
    match i {
        Index::Element(k) => TestFunction::new(mesh, Family::Lambda, i, vec![(k, BaryPoly::monomial([1, 1, 1], 1.0))]),
        Index::Face(f) => {
            let parts = mesh.faces()[f]
                .adjacent()
                .iter()
                .map(|&k| {
                    let (ia, ib, _) = face_locals(mesh, f, k);
                    (k, BaryPoly::lambda(ia).mul(&BaryPoly::lambda(ib)))
                })
                .collect();
            TestFunction::new(mesh, Family::Lambda, i, parts)
        }
    }
}

/// `ψ` rebuilt from bubbles: `ψ_K = 60/|K| λ_K`, `ψ_F = 6/|F| (λ_F − 5 Σ_{K⊂ω_F} λ_K)`.
pub fn psi_from_lambdas(mesh: &Mesh, i: Index) -> TestFunction {
    match i {
        Index::Element(k) => {
            let l = lambda(mesh, i);
            let s = 60.0 / mesh.area(k);
            TestFunction::new(mesh, Family::Psi, i, l.parts.iter().map(|(e, p)| (*e, p.scale(s))).collect())
        }
        Index::Face(f) => {
            let s = 6.0 / mesh.face_length(f);
            let lf = lambda(mesh, i);
            let parts = lf
                .parts
                .iter()
                .map(|(k, p)| {
                    let lk = &lambda(mesh, Index::Element(*k)).parts[0].1;
                    (*k, p.add(&lk.scale(-5.0)).scale(s))
                })
                .collect();
            TestFunction::new(mesh, Family::Psi, i, parts)
        }
    }
}

/// `⟨χ_row, v⟩` for every row functional whose support meets `v`.
pub fn chi_pairings(mesh: &Mesh, v: &TestFunction) -> Vec<(Index, f64)> {
    let mut out: BTreeMap<Index, f64> = BTreeMap::new();
    for (k, p) in &v.parts {
        out.insert(Index::Element(*k), p.integrate(mesh.area(*k)));
        for (j, &f) in mesh.element_faces(*k).iter().enumerate() {
            if mesh.faces()[f].is_interior() {
                // v is continuous, so either adjacent part gives the trace.
                out.entry(Index::Face(f)).or_insert_with(|| p.integrate_edge(j, mesh.face_length(f)));
            }
        }
    }
    out.into_iter().collect()
}

/// Sparse matrix of `⟨χ_i, ψ_j⟩` restricted to overlapping supports.
#[derive(Debug, Clone)]
pub struct PairingMatrix {
    /// `(row ordinal, column ordinal, value)`, sorted by column then row.
    pub entries: Vec<(usize, usize, f64)>,
    pub size: usize,
}

impl PairingMatrix {
    /// `max |⟨χ_i, ψ_j⟩ − δ_ij|`, counting absent diagonal entries as zero.
    pub fn max_identity_deviation(&self) -> f64 {
        let mut diag = vec![false; self.size];
        let mut dev: f64 = 0.0;
        for &(r, c, v) in &self.entries {
            if r == c {
                diag[r] = true;
                dev = dev.max((v - 1.0).abs());
            } else {
                dev = dev.max(v.abs());
            }
        }
        if diag.iter().any(|d| !d) {
            dev = dev.max(1.0);
        }
        dev
    }

    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut s = String::from("row_kind,row,col_kind,col,value\n");
        for &(r, c, v) in &self.entries {
            let (ri, ci) = (Index::from_ordinal(mesh, r), Index::from_ordinal(mesh, c));
            let _ = writeln!(s, "{},{},{},{},{:e}", ri.kind(), ri.entity(), ci.kind(), ci.entity(), v);
        }
        s
    }
}

pub fn pairing_matrix(mesh: &Mesh) -> PairingMatrix {
    let n = index_count(mesh);
    let mut entries = Vec::new();
    for j in 0..n {
        let col = Index::from_ordinal(mesh, j);
        let p = psi(mesh, col);
        for (row, v) in chi_pairings(mesh, &p) {
            entries.push((row.ordinal(mesh), j, v));
        }
    }
    PairingMatrix { entries, size: n }
}
