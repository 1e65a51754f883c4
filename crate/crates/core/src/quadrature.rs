//! Quadrature rules on the unit segment and on triangles.
//!
//! Weights are normalised to sum to one, so an integral over a cell of
//! measure `m` is `m * Σ w_q g(x_q)`.

use std::sync::OnceLock;

/// Five-point Gauss–Legendre nodes on [-1, 1] in closed form.
fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let s = (10.0_f64 / 7.0).sqrt();
    let inner = (5.0 - 2.0 * s).sqrt() / 3.0;
    let outer = (5.0 + 2.0 * s).sqrt() / 3.0;
    let r70 = 70.0_f64.sqrt();
    let w_inner = (322.0 + 13.0 * r70) / 900.0;
    let w_outer = (322.0 - 13.0 * r70) / 900.0;
    ([-outer, -inner, 0.0, inner, outer], [w_outer, w_inner, 128.0 / 225.0, w_inner, w_outer])
}

/// Gauss–Legendre nodes and weights on [-1, 1] with `n ≤ 5` points.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let x = 1.0 / 3.0_f64.sqrt();
            (vec![-x, x], vec![1.0, 1.0])
        }
        3 => {
            let x = 0.6_f64.sqrt();
            (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let r = (6.0_f64 / 5.0).sqrt();
            let inner = (3.0 / 7.0 - 2.0 / 7.0 * r).sqrt();
            let outer = (3.0 / 7.0 + 2.0 / 7.0 * r).sqrt();
            let r30 = 30.0_f64.sqrt();
            let (wi, wo) = ((18.0 + r30) / 36.0, (18.0 - r30) / 36.0);
            (vec![-outer, -inner, inner, outer], vec![wo, wi, wi, wo])
        }
        5 => {
            let (x, w) = gauss_legendre_5();
            (x.to_vec(), w.to_vec())
        }
        _ => panic!("Gauss–Legendre rules are tabulated up to five points"),
    }
}

/// A rule on [0, 1]; exact for polynomials of degree 9.
#[derive(Debug, Clone)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// A rule in barycentric coordinates; exact for polynomials of degree 8.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Highest polynomial degree integrated exactly on triangles.
pub const TRIANGLE_DEGREE: usize = 8;
/// Highest polynomial degree integrated exactly on segments.
pub const SEGMENT_DEGREE: usize = 9;

pub fn segment_rule() -> &'static SegmentRule {
    static RULE: OnceLock<SegmentRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre_5();
        SegmentRule {
            points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
        }
    })
}

/// Collapsed tensor Gauss rule with `n` points per direction: the square
/// is mapped onto the triangle by `(u, v) -> (u, v (1 - u))`, whose
/// Jacobian adds one degree in `u`, so the rule is exact up to degree `2n − 2`.
fn collapsed_rule(n: usize) -> TriangleRule {
    let (x, w) = gauss_legendre(n);
    let nodes: Vec<(f64, f64)> = x.iter().zip(&w).map(|(t, v)| (0.5 * (t + 1.0), 0.5 * v)).collect();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for &(u, wu) in &nodes {
        for &(v, wv) in &nodes {
            let y = v * (1.0 - u);
            points.push([1.0 - u - y, u, y]);
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    TriangleRule { points, weights }
}

/// The rule exact to [`TRIANGLE_DEGREE`].
pub fn triangle_rule() -> &'static TriangleRule {
    triangle_rule_for(TRIANGLE_DEGREE)
}

/// The cheapest collapsed rule exact for polynomials of the given degree.
pub fn triangle_rule_for(degree: usize) -> &'static TriangleRule {
    static RULES: [OnceLock<TriangleRule>; 5] = [const { OnceLock::new() }; 5];
    assert!(degree <= TRIANGLE_DEGREE, "no tabulated triangle rule of degree {degree}");
    let n = degree.div_ceil(2) + 1;
    RULES[n - 1].get_or_init(|| collapsed_rule(n))
}
