//! Helpers shared by the integration tests. The quadrature here is built
//! from scratch so that reference values do not reuse library rules.
#![allow(dead_code)]

use errdom::mesh::{unit_square, Point};
use errdom::{build_mesh, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gauss–Legendre nodes and weights on `[0, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            ((1.0 - x) / 2.0, 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫_K g` over a triangle through the Duffy map with `n × n` points.
pub fn triangle_integral(p: &[Point; 3], n: usize, g: impl Fn([f64; 3]) -> f64) -> f64 {
    let area = signed_area(p).abs();
    let rule = gauss_legendre(n);
    let mut s = 0.0;
    for &(u, wu) in &rule {
        for &(v, wv) in &rule {
            let l1 = u;
            let l2 = v * (1.0 - u);
            s += wu * wv * (1.0 - u) * g([1.0 - l1 - l2, l1, l2]);
        }
    }
    2.0 * area * s
}

pub fn segment_integral(length: f64, n: usize, g: impl Fn(f64) -> f64) -> f64 {
    gauss_legendre(n).iter().map(|&(t, w)| w * g(t)).sum::<f64>() * length
}

pub fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

pub fn point_at(p: &[Point; 3], l: [f64; 3]) -> Point {
    [l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0], l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1]]
}

pub fn square() -> Arc<Mesh> {
    Arc::new(unit_square())
}

pub fn uniform(level: usize) -> Arc<Mesh> {
    Arc::new(unit_square().refine_uniform_times(level))
}

/// The unit square refined uniformly `level` times, then `rounds` times
/// with random markings.
pub fn random_mesh(seed: u64, level: usize, rounds: usize) -> Arc<Mesh> {
    let mut r = rng(seed);
    let mut m = unit_square().refine_uniform_times(level);
    for _ in 0..rounds {
        let marked: Vec<usize> = (0..m.num_elements()).filter(|_| r.random_bool(0.3)).collect();
        m = m.refine_nvb(&marked).unwrap().mesh;
    }
    Arc::new(m)
}

/// An L-shaped domain made of three unit squares, each split in two.
pub fn l_shape() -> Mesh {
    let coords = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0], [0.0, 2.0], [1.0, 2.0]];
    build_mesh(&coords, &[[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4], [3, 4, 7], [3, 7, 6]]).unwrap()
}

/// Relative distance `|a − b| / max(|a|, |b|, floor)`.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
