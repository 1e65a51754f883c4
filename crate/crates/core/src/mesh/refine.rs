use super::{key, Element, Mesh, Point, NONE};
use crate::error::MeshError;
use std::collections::{HashMap, HashSet};

/// A refined mesh and, for each of its elements, the index of the element
/// of the coarse mesh that contains it.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    pub parent: Vec<usize>,
}

impl Mesh {
    /// Newest-vertex bisection: every marked element is bisected at least
    /// once and the closure keeps the result conforming.
    pub fn refine_nvb(&self, marked: &[usize]) -> Result<Refinement, MeshError> {
        let mut edges = vec![false; self.faces.len()];
        for &k in marked {
            if k >= self.elements.len() {
                return Err(MeshError::UnknownElement { element: k });
            }
            let e = self.elements[k];
            edges[self.element_faces[k][e.refinement_edge as usize]] = true;
        }
        Ok(self.refine_edges(edges))
    }

    /// Bisects every edge once, so each element splits into four.
    pub fn refine_uniform(&self) -> Refinement {
        self.refine_edges(vec![true; self.faces.len()])
    }

    pub fn refine_uniform_times(&self, times: usize) -> Mesh {
        let mut m = self.clone();
        for _ in 0..times {
            m = m.refine_uniform().mesh;
        }
        m
    }

    fn refine_edges(&self, mut marked: Vec<bool>) -> Refinement {
        // Closure: an element with any marked edge must bisect its
        // refinement edge first.
        let mut queue: Vec<usize> =
            (0..self.elements.len()).filter(|&k| self.element_faces[k].iter().any(|&f| marked[f])).collect();
        let bound = 3 * self.elements.len();
        let mut generations = 0usize;
        while let Some(k) = queue.pop() {
            let rf = self.element_faces[k][self.elements[k].refinement_edge as usize];
            if marked[rf] || !self.element_faces[k].iter().any(|&f| marked[f]) {
                continue;
            }
            marked[rf] = true;
            generations += 1;
            assert!(generations <= bound, "bisection closure exceeded its generation bound");
            queue.extend(self.faces[rf].adjacent().iter().copied());
        }

        let mut coords: Vec<Point> = self.vertices.iter().map(|v| v.coords).collect();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, face) in self.faces.iter().enumerate() {
            if marked[f] {
                let [a, b] = face.vertices;
                let (pa, pb) = (coords[a], coords[b]);
                coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                mids.insert(key(a, b), coords.len() - 1);
            }
        }
        let mut boundary: HashSet<(usize, usize)> = HashSet::new();
        for face in self.faces.iter().filter(|f| f.domain_boundary) {
            let [a, b] = face.vertices;
            match mids.get(&key(a, b)) {
                Some(&m) => {
                    boundary.insert(key(a, m));
                    boundary.insert(key(m, b));
                }
                None => {
                    boundary.insert(key(a, b));
                }
            }
        }

        let mut elements = Vec::with_capacity(self.elements.len() + 3 * mids.len());
        let mut parent = Vec::with_capacity(elements.capacity());
        for (k, e) in self.elements.iter().enumerate() {
            let before = elements.len();
            split(&mut elements, *e, &mids);
            parent.resize(parent.len() + elements.len() - before, k);
        }
        let mesh = Mesh::from_parts(self.family, coords, elements, |a, b| boundary.contains(&key(a, b)))
            .expect("bisection preserves conformity");
        debug_assert!(mesh.elements.iter().all(|e| e.vertices.iter().all(|&v| v != NONE)));
        Refinement { mesh, parent }
    }
}

fn split(out: &mut Vec<Element>, e: Element, mids: &HashMap<(usize, usize), usize>) {
    let i = e.refinement_edge as usize;
    let (p, q, r) = (e.vertices[i], e.vertices[(i + 1) % 3], e.vertices[(i + 2) % 3]);
    match mids.get(&key(q, r)) {
        Some(&m) => {
            split(out, Element { vertices: [p, q, m], refinement_edge: 2, addr: e.addr.child(0) }, mids);
            split(out, Element { vertices: [p, m, r], refinement_edge: 1, addr: e.addr.child(1) }, mids);
        }
        None => out.push(e),
    }
}
