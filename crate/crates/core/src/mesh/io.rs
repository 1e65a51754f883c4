//! Plain-text mesh format: a header `vertices N elements M`, then `N`
//! lines `x y`, then `M` lines `i j k` with zero-based vertex indices.

use super::{build_mesh, Mesh, Point};
use crate::error::MeshError;
use std::fmt::Write as _;

pub fn read_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let parse_err = |line: usize, message: &str| MeshError::Parse { line, message: message.to_string() };

    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() != 4 || words[0] != "vertices" || words[2] != "elements" {
        return Err(parse_err(line, "expected `vertices N elements M`"));
    }
    let nv: usize = words[1].parse().map_err(|_| parse_err(line, "bad vertex count"))?;
    let ne: usize = words[3].parse().map_err(|_| parse_err(line, "bad element count"))?;

    let mut coords: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| parse_err(line, "too few vertex lines"))?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(line, "bad coordinate"))?;
        if xs.len() != 2 {
            return Err(parse_err(line, "expected two coordinates"));
        }
        coords.push([xs[0], xs[1]]);
    }
    let mut triples = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (line, l) = lines.next().ok_or_else(|| parse_err(line, "too few element lines"))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(line, "bad vertex index"))?;
        if ids.len() != 3 {
            return Err(parse_err(line, "expected three vertex indices"));
        }
        triples.push([ids[0], ids[1], ids[2]]);
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "trailing content"));
    }
    build_mesh(&coords, &triples)
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = format!("vertices {} elements {}\n", mesh.num_vertices(), mesh.num_elements());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?}", v.coords[0], v.coords[1]);
    }
    for e in mesh.elements() {
        let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.vertices[2]);
    }
    s
}
