mod common;

use common::{gauss_legendre, random_mesh, rel, segment_integral, square, triangle_integral, uniform};
use errdom::biorth::{index_count, lambda, pairing_matrix, psi, psi_from_lambdas, star_indices};
use errdom::dualnorm::oracle_dual_norm;
use errdom::mesh::unit_square;
use errdom::{Index, Load, Mesh, Region, TestFunction};
use std::sync::Arc;

fn grad_norm_sq_independent(mesh: &Mesh, v: &TestFunction) -> f64 {
    v.parts
        .iter()
        .map(|(k, p)| {
            let grads = mesh.bary_grads(*k);
            triangle_integral(&mesh.coords(*k), 5, |l| {
                let g = p.gradient(l, &grads);
                g[0] * g[0] + g[1] * g[1]
            })
        })
        .sum()
}

#[test]
fn element_test_functions_have_unit_mass() {
    let m = random_mesh(1, 1, 2);
    for k in 0..m.num_elements() {
        let p = psi(&m, Index::Element(k));
        assert_eq!(p.parts.len(), 1);
        let mass = triangle_integral(&m.coords(k), 4, |l| p.eval(k, l));
        assert!((mass - 1.0).abs() < 1e-12);
    }
}

#[test]
fn face_test_functions_have_unit_face_mass_and_no_element_mass() {
    let m = random_mesh(2, 1, 2);
    for &f in m.interior_faces() {
        let p = psi(&m, Index::Face(f));
        assert_eq!(p.parts.len(), 2);
        for &(k, _) in &p.parts {
            assert!(triangle_integral(&m.coords(k), 4, |l| p.eval(k, l)).abs() < 1e-12);
        }
        // Integrate along the face from the first adjacent element.
        let k = p.parts[0].0;
        let [a, b] = m.faces()[f].vertices;
        let (ia, ib) = (m.local_index(k, a).unwrap(), m.local_index(k, b).unwrap());
        let on_face = segment_integral(m.face_length(f), 5, |t| {
            let mut l = [0.0; 3];
            l[ia] = 1.0 - t;
            l[ib] = t;
            p.eval(k, l)
        });
        assert!((on_face - 1.0).abs() < 1e-12);
    }
}

#[test]
fn test_functions_vanish_on_their_support_boundary() {
    let m = uniform(1);
    for i in (0..index_count(&m)).map(|i| Index::from_ordinal(&m, i)) {
        let p = psi(&m, i);
        for &(k, _) in &p.parts {
            for j in 0..3 {
                let face = m.element_faces(k)[j];
                if i == Index::Face(face) {
                    continue;
                }
                for &(t, _) in &gauss_legendre(4) {
                    let mut l = [0.0; 3];
                    l[(j + 1) % 3] = 1.0 - t;
                    l[(j + 2) % 3] = t;
                    assert!(p.eval(k, l).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn pairing_matrix_on_the_square_is_the_identity() {
    let m = square();
    let pm = pairing_matrix(&m);
    assert_eq!(pm.size, 3);
    assert!(pm.max_identity_deviation() <= 1e-12);
    // The two element functions never meet, so their cross pairings are never computed.
    assert_eq!(pm.entries.len(), 7);
    assert!(!pm.entries.iter().any(|&(r, c, _)| r < 2 && c < 2 && r != c));
}

#[test]
fn pairing_matrix_after_bisections() {
    let mut m = unit_square();
    for round in 0..3 {
        let marked: Vec<usize> = (0..m.num_elements()).filter(|k| (k + round) % 2 == 0).collect();
        m = m.refine_nvb(&marked).unwrap().mesh;
        let pm = pairing_matrix(&m);
        assert!(pm.max_identity_deviation() <= 1e-12);
        // Sparsity: entries only where supports overlap.
        assert!(pm.entries.len() < pm.size * 8);
    }
}

#[test]
fn gradient_norms_match_independent_quadrature() {
    let m = random_mesh(4, 1, 2);
    for i in (0..index_count(&m)).map(|i| Index::from_ordinal(&m, i)) {
        for v in [psi(&m, i), lambda(&m, i)] {
            let independent = grad_norm_sq_independent(&m, &v).sqrt();
            assert!(rel(v.grad_norm, independent, 1e-14) < 1e-12);
        }
    }
}

#[test]
fn element_gradient_norms_scale_within_a_similarity_class() {
    // After uniform refinement of the square every element is a right isosceles triangle.
    let mut products = Vec::new();
    for level in 0..4 {
        let m = uniform(level);
        for k in 0..m.num_elements() {
            let g = m.geometry(k);
            products.push(psi(&m, Index::Element(k)).grad_norm * g.area.sqrt() * g.inball_diameter);
        }
    }
    let first = products[0];
    assert!(products.iter().all(|p| rel(*p, first, 1e-14) < 1e-10));
}

#[test]
fn test_functions_are_spanned_by_bubbles() {
    let m = random_mesh(7, 1, 2);
    let probe = gauss_legendre(3);
    for i in (0..index_count(&m)).map(|i| Index::from_ordinal(&m, i)) {
        let (a, b) = (psi(&m, i), psi_from_lambdas(&m, i));
        for &(k, _) in &a.parts {
            for &(u, _) in &probe {
                for &(v, _) in &probe {
                    let l = [u * (1.0 - v), v, (1.0 - u) * (1.0 - v)];
                    assert!((a.eval(k, l) - b.eval(k, l)).abs() < 1e-12 * a.grad_norm.max(1.0));
                }
            }
        }
    }
}

#[test]
fn bubbles_are_bounded_by_one() {
    let m = uniform(1);
    for i in (0..index_count(&m)).map(|i| Index::from_ordinal(&m, i)) {
        let l = lambda(&m, i);
        for &(k, _) in &l.parts {
            for &(u, _) in &gauss_legendre(5) {
                for &(v, _) in &gauss_legendre(5) {
                    let x = l.eval(k, [u * (1.0 - v), v, (1.0 - u) * (1.0 - v)]);
                    assert!((0.0..=1.0).contains(&x));
                }
            }
        }
    }
}

/// The vertex nearest to the centre of the square.
fn centre(m: &Mesh) -> usize {
    (0..m.num_vertices())
        .min_by(|&a, &b| {
            let d = |v: usize| {
                let c = m.vertices()[v].coords;
                (c[0] - 0.5).powi(2) + (c[1] - 0.5).powi(2)
            };
            d(a).total_cmp(&d(b))
        })
        .unwrap()
}

#[test]
fn stability_products_and_scaling_bounds() {
    let mut worst = Vec::new();
    for level in 1..7 {
        let m = Arc::new(unit_square().refine_uniform_times(level));
        let z = centre(&m);
        let hz = m.star(z).diameter;
        let mut c: f64 = 0.0;
        for i in star_indices(&m, z) {
            let load = match i {
                Index::Element(k) => Load::element_constants(&m, &{
                    let mut v = vec![0.0; m.num_elements()];
                    v[k] = 1.0;
                    v
                }),
                Index::Face(f) => Load::face_constants(&m, [(f, 1.0)]).unwrap(),
            };
            let norm = oracle_dual_norm(&load, &m, Region::Star(z), 3, 1).unwrap().value;
            match i {
                Index::Element(k) => assert!(norm <= m.area(k).sqrt() * hz),
                Index::Face(f) => assert!(norm <= 2.0 * (m.face_length(f) * hz).sqrt()),
            }
            c = c.max(norm * psi(&m, i).grad_norm);
        }
        worst.push(c);
    }
    let (lo, hi) = worst.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 1.1, "stability products {worst:?}");
}
