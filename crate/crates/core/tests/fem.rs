#![allow(clippy::needless_range_loop)]

mod common;

use common::{random_mesh, rel, rng, square, uniform};
use errdom::dualnorm::oracle_dual_norm;
use errdom::fem::{
    assemble, energy_norm, energy_norm_diff, laplacian, local_stiffness, normal_jumps, prolongate, solve_galerkin,
    P1Function,
};
use errdom::load::evaluate;
use errdom::projection::residual_load;
use errdom::{build_mesh, Load, PiecewisePoly, Region};
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn random_discrete(mesh: &Arc<errdom::Mesh>, seed: u64) -> P1Function {
    let mut r = rng(seed);
    let values = mesh.vertices().iter().map(|v| if v.on_boundary { 0.0 } else { r.random_range(-1.0..1.0) }).collect();
    P1Function::new(mesh.clone(), values)
}

#[test]
fn reference_triangle_stiffness() {
    let m = build_mesh(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &[[0, 1, 2]]).unwrap();
    let a = local_stiffness(&m, 0);
    // Constant gradients (−1,−1), (1,0), (0,1) times the area 1/2.
    let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((a[i][j] - expected[i][j]).abs() < 1e-15);
        }
    }
}

#[test]
fn zero_load_gives_zero_rhs_and_solution() {
    let m = uniform(2);
    let sys = assemble(&m, &Load::zero()).unwrap();
    assert!(sys.rhs.iter().all(|&b| b == 0.0));
    assert!(solve_galerkin(&m, &Load::zero()).unwrap().values.iter().all(|&v| v == 0.0));
}

#[test]
fn unit_load_rhs_on_the_square() {
    let m = uniform(1);
    let f = Load::element_constants(&m, &vec![1.0; m.num_elements()]);
    let sys = assemble(&m, &f).unwrap();
    for (d, &z) in sys.dof_vertex.iter().enumerate() {
        let expected: f64 = m.star_elements(z).iter().map(|&k| m.area(k) / 3.0).sum();
        assert!((sys.rhs[d] - expected).abs() < 1e-15);
    }
}

#[test]
fn stiffness_is_symmetric_with_vanishing_full_row_sums() {
    let m = random_mesh(1, 1, 3);
    let mut full = vec![vec![0.0; m.num_vertices()]; m.num_vertices()];
    for k in 0..m.num_elements() {
        let a = local_stiffness(&m, k);
        let v = m.elements()[k].vertices;
        for i in 0..3 {
            for j in 0..3 {
                full[v[i]][v[j]] += a[i][j];
            }
        }
    }
    for i in 0..m.num_vertices() {
        assert!(full[i].iter().sum::<f64>().abs() < 1e-14);
        for j in 0..m.num_vertices() {
            assert!((full[i][j] - full[j][i]).abs() < 1e-14);
        }
    }
    let sys = assemble(&m, &Load::zero()).unwrap();
    for (a, &za) in sys.dof_vertex.iter().enumerate() {
        for (b, &zb) in sys.dof_vertex.iter().enumerate() {
            assert!((sys.matrix.get(a, b) - full[za][zb]).abs() < 1e-14);
        }
    }
}

#[test]
fn discrete_laplacian_is_reproduced() {
    let m = random_mesh(6, 2, 2);
    let v = random_discrete(&m, 12);
    let u = solve_galerkin(&m, &laplacian(&v).scaled(-1.0)).unwrap();
    for (a, b) in u.values.iter().zip(&v.values) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn galerkin_orthogonality() {
    let m = random_mesh(2, 2, 2);
    let faces: Vec<(usize, f64)> = m.interior_faces().iter().step_by(3).map(|&f| (f, 1.0)).collect();
    let f = Load::element_constants(&m, &vec![1.0; m.num_elements()]).plus(&Load::face_constants(&m, faces).unwrap());
    let sys = assemble(&m, &f).unwrap();
    let u = solve_galerkin(&m, &f).unwrap();
    let x: Vec<f64> = sys.dof_vertex.iter().map(|&z| u.values[z]).collect();
    let mut ax = vec![0.0; x.len()];
    sys.matrix.matvec(&x, &mut ax);
    let scale = sys.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    assert!(ax.iter().zip(&sys.rhs).all(|(a, b)| (a - b).abs() <= 1e-10 * scale));
}

/// `2π² sin(πx) sin(πy)` interpolated by P2 on each background element, which is
/// enough to see first-order convergence.
fn sine_proxy(mesh: &Arc<errdom::Mesh>) -> Load {
    let s = |x: [f64; 2]| 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin();
    let densities = (0..mesh.num_elements()).map(|k| {
        let p = mesh.coords(k);
        let mid = |i: usize, j: usize| [(p[i][0] + p[j][0]) / 2.0, (p[i][1] + p[j][1]) / 2.0];
        let v = [s(p[0]), s(p[1]), s(p[2])];
        let e = [s(mid(1, 2)), s(mid(0, 2)), s(mid(0, 1))];
        let mut terms = Vec::new();
        for i in 0..3 {
            let mut sq = [0u8; 3];
            sq[i] = 2;
            let mut lin = [0u8; 3];
            lin[i] = 1;
            terms.push((sq, 2.0 * v[i]));
            terms.push((lin, -v[i]));
            let mut cross = [1u8; 3];
            cross[i] = 0;
            terms.push((cross, 4.0 * e[i]));
        }
        (k, errdom::BaryPoly::from_terms(terms))
    });
    Load::element_density(mesh, densities).unwrap()
}

#[test]
fn smooth_problem_converges_at_first_order() {
    let base = uniform(2);
    let f = sine_proxy(&base);
    let reference = solve_galerkin(&Arc::new(base.refine_uniform_times(5)), &f).unwrap();
    let errors: Vec<f64> = (0..3)
        .map(|l| {
            let m = Arc::new(base.refine_uniform_times(l));
            energy_norm_diff(&reference, &solve_galerkin(&m, &f).unwrap()).unwrap()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..2.3).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn affine_functions_have_no_jumps() {
    let m = random_mesh(3, 1, 3);
    let u = P1Function::interpolate(m.clone(), |x| 2.0 * x[0] - 0.5 * x[1] + 1.0);
    assert!(normal_jumps(&u).iter().all(|j| j.abs() < 1e-13));
}

#[test]
fn jumps_represent_the_laplacian() {
    let m = square();
    let u = P1Function::new(m.clone(), vec![0.0, 1.0, 0.0, 0.0]);
    let j = normal_jumps(&u);
    assert_eq!(j.len(), 1);
    // Outward normal derivatives across the diagonal: from K0 (0,0),(1,0),(1,1) the
    // gradient of φ₁ is (1,−1), normal (−1,1)/√2; K1 has zero gradient.
    assert!((j[0] + 2f64.sqrt()).abs() < 1e-14);
    let mut r = rng(4);
    let f = laplacian(&u);
    for _ in 0..5 {
        let nodal: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let v = P1Function::new(m.clone(), nodal.clone());
        // Only the diagonal carries a jump, and v is affine along it.
        let direct = -j[0] * m.face_length(m.interior_faces()[0]) * {
            let [a, b] = m.faces()[m.interior_faces()[0]].vertices;
            (nodal[a] + nodal[b]) / 2.0
        };
        let got = evaluate(&f, &v.to_piecewise()).unwrap();
        assert!((got - direct).abs() < 1e-14);
    }
}

#[test]
fn residual_vanishes_on_hats_for_discretized_loads() {
    let m = random_mesh(8, 2, 1);
    let faces: Vec<(usize, f64)> = m.interior_faces().iter().map(|&f| (f, (f % 7) as f64 - 3.0)).collect();
    let elems: Vec<f64> = (0..m.num_elements()).map(|k| (k % 5) as f64).collect();
    let f = Load::element_constants(&m, &elems).plus(&Load::face_constants(&m, faces).unwrap());
    let u = solve_galerkin(&m, &f).unwrap();
    let res = residual_load(&f, &u);
    for z in m.interior_vertices() {
        let mut values = vec![0.0; m.num_vertices()];
        values[z] = 1.0;
        let v = PiecewisePoly::from_nodal(m.clone(), &values);
        assert!(evaluate(&res, &v).unwrap().abs() < 1e-9);
    }
}

#[test]
fn energy_norms() {
    let m = uniform(1);
    assert_eq!(energy_norm(&P1Function::zero(m.clone())), 0.0);
    let z = m.interior_vertices().next().unwrap();
    let mut values = vec![0.0; m.num_vertices()];
    values[z] = 1.0;
    let hat = P1Function::new(m.clone(), values);
    let sys = assemble(&m, &Load::zero()).unwrap();
    let d = sys.vertex_dof[z];
    assert!((energy_norm(&hat).powi(2) - sys.matrix.get(d, d)).abs() < 1e-14);
    let fine = Arc::new(m.refine_uniform_times(2));
    let v = random_discrete(&m, 5);
    assert!((energy_norm(&prolongate(&v, &fine).unwrap()) - energy_norm(&v)).abs() < 1e-12);
}

#[test]
fn best_approximation() {
    let base = uniform(1);
    let faces: Vec<(usize, f64)> = base.interior_faces().iter().map(|&f| (f, 1.0)).collect();
    let f = Load::face_constants(&base, faces).unwrap();
    let reference = solve_galerkin(&Arc::new(base.refine_uniform_times(5)), &f).unwrap();
    let m = Arc::new(base.refine_uniform_times(1));
    let u = solve_galerkin(&m, &f).unwrap();
    let err = energy_norm_diff(&reference, &u).unwrap();
    for seed in 0..20 {
        let noise = random_discrete(&m, 100 + seed);
        let scale = 0.05 * (seed as f64 + 1.0) / 20.0;
        let v = P1Function::new(m.clone(), u.values.iter().zip(&noise.values).map(|(a, b)| a + scale * b).collect());
        assert!(err <= energy_norm_diff(&reference, &v).unwrap() + 1e-12);
    }
}

#[test]
fn error_equals_residual_norm() {
    let base = uniform(2);
    let faces: Vec<(usize, f64)> = base.interior_faces().iter().step_by(2).map(|&f| (f, 1.0)).collect();
    let f = Load::face_constants(&base, faces).unwrap().plus(&sine_proxy(&base));
    let reference = solve_galerkin(&Arc::new(base.refine_uniform_times(5)), &f).unwrap();
    let u = solve_galerkin(&base, &f).unwrap();
    let err = energy_norm_diff(&reference, &u).unwrap();
    let oracle = oracle_dual_norm(&residual_load(&f, &u), &base, Region::Domain, 4, 1).unwrap().value;
    assert!(rel(err, oracle, 1e-12) < 0.1, "error {err}, residual norm {oracle}");
}
