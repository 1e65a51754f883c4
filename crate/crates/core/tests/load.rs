mod common;

use common::{point_at, random_mesh, rel, rng, segment_integral, square, triangle_integral, uniform};
use errdom::fem::{assemble, laplacian, P1Function};
use errdom::load::evaluate;
use errdom::poly::integrate_barycentric;
use errdom::{BaryPoly, Load, LoadError, PiecewisePoly, SegmentPoly};
use rand::Rng;
use std::sync::Arc;

fn hat(mesh: &Arc<errdom::Mesh>, z: usize) -> PiecewisePoly {
    let mut values = vec![0.0; mesh.num_vertices()];
    values[z] = 1.0;
    PiecewisePoly::from_nodal(mesh.clone(), &values)
}

#[test]
fn unit_density_against_a_hat() {
    let m = square();
    let f = Load::element_constants(&m, &[1.0, 0.0]);
    let z = m.elements()[0].vertices[1];
    let got = evaluate(&f, &hat(&m, z)).unwrap();
    assert!((got - m.area(0) / 3.0).abs() < 1e-15);
}

#[test]
fn face_density_against_a_function_vanishing_there() {
    let m = uniform(1);
    let f_idx = m.interior_faces()[0];
    let f = Load::face_constants(&m, [(f_idx, 1.0)]).unwrap();
    let on_face = m.faces()[f_idx].vertices;
    let z = m.interior_vertices().chain(0..m.num_vertices()).find(|v| !on_face.contains(v)).unwrap();
    let mut values = vec![0.0; m.num_vertices()];
    values[z] = 1.0;
    // Only vertices off the face carry values, so the function vanishes on it.
    let v = PiecewisePoly::from_nodal(m.clone(), &values);
    assert!(evaluate(&f, &v).unwrap().abs() < 1e-15);
}

#[test]
fn divergence_of_a_discrete_gradient_matches_the_stiffness_form() {
    let m = random_mesh(2, 2, 2);
    let mut r = rng(7);
    let values = m.vertices().iter().map(|v| if v.on_boundary { 0.0 } else { r.random_range(-1.0..1.0) }).collect();
    let v = P1Function::new(m.clone(), values);
    let fields = (0..m.num_elements()).map(|k| {
        let g = v.gradient(k);
        (k, [BaryPoly::constant(g[0]), BaryPoly::constant(g[1])])
    });
    let f = Load::divergence(&m, fields).unwrap();
    let got = evaluate(&f, &v.to_piecewise()).unwrap();
    let sys = assemble(&m, &Load::zero()).unwrap();
    let x: Vec<f64> = sys.dof_vertex.iter().map(|&z| v.values[z]).collect();
    let expected = -sys.matrix.quadratic_form(&x);
    assert!(rel(got, expected, 1e-14) < 1e-12, "{got} vs {expected}");
}

#[test]
fn barycentric_integrals() {
    assert!((integrate_barycentric(3.0, [1, 0, 0]) - 1.0).abs() < 1e-15);
    assert!((integrate_barycentric(3.0, [0, 0, 0]) - 3.0).abs() < 1e-15);
    assert!((integrate_barycentric(30.0, [2, 1, 0]) - 1.0).abs() < 1e-14);
    let p = [[0.0, 0.0], [2.0, 0.5], [0.3, 1.7]];
    for powers in [[2u32, 1, 0], [1, 1, 1], [3, 0, 2], [0, 4, 1]] {
        let q = triangle_integral(&p, 5, |l| {
            l[0].powi(powers[0] as i32) * l[1].powi(powers[1] as i32) * l[2].powi(powers[2] as i32)
        });
        let area = common::signed_area(&p).abs();
        assert!(rel(integrate_barycentric(area, powers), q, 1e-14) < 1e-13);
    }
}

fn random_poly(r: &mut impl Rng, degree: u8) -> BaryPoly {
    let mut terms = Vec::new();
    for a in 0..=degree {
        for b in 0..=degree - a {
            terms.push(([a, b, degree - a - b], r.random_range(-1.0..1.0)));
        }
    }
    BaryPoly::from_terms(terms)
}

#[test]
fn densities_agree_with_independent_quadrature() {
    let m = random_mesh(9, 1, 2);
    let mut r = rng(21);
    let dens: Vec<BaryPoly> = (0..m.num_elements()).map(|_| random_poly(&mut r, 3)).collect();
    let tests: Vec<BaryPoly> = (0..m.num_elements()).map(|_| random_poly(&mut r, 3)).collect();
    let f = Load::element_density(&m, dens.iter().cloned().enumerate()).unwrap();
    let got = evaluate(&f, &PiecewisePoly::new(m.clone(), tests.clone())).unwrap();
    let expected: f64 =
        (0..m.num_elements()).map(|k| triangle_integral(&m.coords(k), 6, |l| dens[k].eval(l) * tests[k].eval(l))).sum();
    assert!(rel(got, expected, 1e-14) < 1e-12);
}

#[test]
fn face_densities_agree_with_independent_quadrature() {
    let m = uniform(1);
    let f_idx = m.interior_faces()[1];
    let j = SegmentPoly::from_terms([([2, 0], 1.5), ([1, 1], -0.5), ([0, 2], 2.0)]);
    let f = Load::face_density(&m, [(f_idx, j.clone())]).unwrap();
    let z = m.faces()[f_idx].vertices[0];
    let got = evaluate(&f, &hat(&m, z)).unwrap();
    // The hat is 1 at the first face vertex and decays linearly along the face.
    let expected = segment_integral(m.face_length(f_idx), 5, |t| j.eval(1.0 - t, t) * (1.0 - t));
    assert!(rel(got, expected, 1e-14) < 1e-12);
}

#[test]
fn pairing_is_bilinear() {
    let m = random_mesh(4, 1, 2);
    let mut r = rng(8);
    let a: Vec<f64> = (0..m.num_elements()).map(|_| r.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..m.num_elements()).map(|_| r.random_range(-1.0..1.0)).collect();
    let fa = Load::element_constants(&m, &a).plus(&laplacian(&P1Function::interpolate(m.clone(), |x| x[0] * x[1])));
    let fb = Load::element_constants(&m, &b);
    let nodal1: Vec<f64> = (0..m.num_vertices()).map(|_| r.random_range(-1.0..1.0)).collect();
    let nodal2: Vec<f64> = (0..m.num_vertices()).map(|_| r.random_range(-1.0..1.0)).collect();
    let v1 = PiecewisePoly::from_nodal(m.clone(), &nodal1);
    let v2 = PiecewisePoly::from_nodal(m.clone(), &nodal2);
    let (s, t) = (0.7, -1.3);
    let combo = fa.scaled(s).plus(&fb.scaled(t));
    let lhs = evaluate(&combo, &v1).unwrap();
    let rhs = s * evaluate(&fa, &v1).unwrap() + t * evaluate(&fb, &v1).unwrap();
    assert!(rel(lhs, rhs, 1.0) < 1e-12);
    let sum: Vec<f64> = nodal1.iter().zip(&nodal2).map(|(x, y)| s * x + t * y).collect();
    let lhs = evaluate(&fa, &PiecewisePoly::from_nodal(m.clone(), &sum)).unwrap();
    let rhs = s * evaluate(&fa, &v1).unwrap() + t * evaluate(&fa, &v2).unwrap();
    assert!(rel(lhs, rhs, 1.0) < 1e-12);
}

#[test]
fn refinement_consistency() {
    let coarse = uniform(1);
    let fine = Arc::new(coarse.refine_nvb(&[0, 3, 5]).unwrap().mesh.refine_uniform().mesh);
    let mut r = rng(3);
    let dens: Vec<(usize, BaryPoly)> = (0..coarse.num_elements()).map(|k| (k, random_poly(&mut r, 2))).collect();
    let faces: Vec<(usize, f64)> = coarse.interior_faces().iter().map(|&f| (f, r.random_range(-1.0..1.0))).collect();
    let f = Load::element_density(&coarse, dens).unwrap().plus(&Load::face_constants(&coarse, faces).unwrap());
    let g = |x: [f64; 2]| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * 16.0;
    let vc = P1Function::interpolate(coarse.clone(), g);
    let prolonged = errdom::fem::prolongate(&vc, &fine).unwrap();
    let a = evaluate(&f, &vc.to_piecewise()).unwrap();
    let b = evaluate(&f, &prolonged.to_piecewise()).unwrap();
    assert!(rel(a, b, 1e-14) < 1e-12);
}

#[test]
fn loads_on_a_finer_background_integrate_exactly() {
    let coarse = uniform(1);
    let fine = Arc::new(coarse.refine_uniform().mesh);
    let values: Vec<f64> = (0..fine.num_elements()).map(|k| (k % 3) as f64).collect();
    let f = Load::element_constants(&fine, &values);
    let nodal: Vec<f64> = (0..coarse.num_vertices()).map(|v| coarse.vertices()[v].coords[0]).collect();
    let got = evaluate(&f, &PiecewisePoly::from_nodal(coarse.clone(), &nodal)).unwrap();
    let expected: f64 = (0..fine.num_elements())
        .map(|k| {
            let p = fine.coords(k);
            values[k] * triangle_integral(&p, 3, |l| point_at(&p, l)[0])
        })
        .sum();
    assert!(rel(got, expected, 1e-14) < 1e-12);
}

#[test]
fn foreign_meshes_are_rejected() {
    let a = square();
    let b = square();
    let f = Load::element_constants(&a, &[1.0, 1.0]);
    let v = PiecewisePoly::from_nodal(b.clone(), &[0.0; 4]);
    assert_eq!(evaluate(&f, &v), Err(LoadError::IncompatibleMesh));
}

#[test]
fn degree_overflow_is_reported() {
    let m = square();
    let f = Load::element_density(&m, [(0, BaryPoly::monomial([4, 3, 0], 1.0))]).unwrap();
    let v = PiecewisePoly::new(m.clone(), vec![BaryPoly::monomial([2, 2, 0], 1.0), BaryPoly::zero()]);
    assert!(matches!(evaluate(&f, &v), Err(LoadError::DegreeOverflow { .. })));
}
