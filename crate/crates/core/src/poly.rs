//! Polynomials in barycentric coordinates.
//!
//! A [`BaryPoly`] lives on one triangle and is a sum of monomials
//! `c λ0^a λ1^b λ2^e`. Integrals close exactly through
//! [`integrate_barycentric`]; restrictions to an edge become
//! [`SegmentPoly`] values in the two edge barycentrics.

use std::collections::BTreeMap;

/// Spatial dimension. Formulas are written with `D` to keep them readable.
pub const D: usize = 2;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫_K λ^α = d! Π α_i! / (|α| + d)! · |K|` for a triangle of area `area`.
pub fn integrate_barycentric(area: f64, powers: [u32; 3]) -> f64 {
    let num = factorial(D as u32) * powers.iter().map(|&a| factorial(a)).product::<f64>();
    let den = factorial(powers.iter().sum::<u32>() + D as u32);
    num / den * area
}

/// `∫_F μ0^a μ1^b ds = a! b! / (a + b + 1)! · |F|` on a segment.
pub fn integrate_segment(length: f64, powers: [u32; 2]) -> f64 {
    factorial(powers[0]) * factorial(powers[1]) / factorial(powers[0] + powers[1] + 1) * length
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaryPoly {
    terms: Vec<([u8; 3], f64)>,
}

impl BaryPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(powers: [u8; 3], coeff: f64) -> Self {
        Self::from_terms(vec![(powers, coeff)])
    }

    /// The barycentric coordinate of local vertex `i`.
    pub fn lambda(i: usize) -> Self {
        let mut e = [0u8; 3];
        e[i] = 1;
        Self::monomial(e, 1.0)
    }

    /// `Σ a_i λ_i`, the affine function with vertex values `a`.
    pub fn affine(a: [f64; 3]) -> Self {
        Self::from_terms((0..3).map(|i| {
            let mut e = [0u8; 3];
            e[i] = 1;
            (e, a[i])
        }))
    }

    /// Builds a polynomial, merging repeated monomials and dropping exact zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = ([u8; 3], f64)>) -> Self {
        let mut map: BTreeMap<[u8; 3], f64> = BTreeMap::new();
        for (e, c) in terms {
            *map.entry(e).or_insert(0.0) += c;
        }
        Self { terms: map.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn terms(&self) -> &[([u8; 3], f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(e, _)| e.iter().map(|&x| x as usize).sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).copied())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|&(e, c)| (e, c * s)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().flat_map(|&(e1, c1)| {
            other.terms.iter().map(move |&(e2, c2)| ([e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]], c1 * c2))
        }))
    }

    pub fn eval(&self, l: [f64; 3]) -> f64 {
        const TABLE: usize = 9;
        let top = self.terms.iter().flat_map(|(e, _)| e.iter()).copied().max().unwrap_or(0) as usize;
        if top >= TABLE {
            return self
                .terms
                .iter()
                .map(|(e, c)| c * l[0].powi(e[0] as i32) * l[1].powi(e[1] as i32) * l[2].powi(e[2] as i32))
                .sum();
        }
        let mut pw = [[1.0; TABLE]; 3];
        for (row, &x) in pw.iter_mut().zip(&l) {
            for j in 1..=top {
                row[j] = row[j - 1] * x;
            }
        }
        self.terms.iter().map(|(e, c)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize]).sum()
    }

    /// Partial derivatives with respect to the three barycentrics, treated as
    /// independent variables.
    pub fn partials(&self, l: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (e, c) in &self.terms {
            for i in 0..3 {
                if e[i] == 0 {
                    continue;
                }
                let mut v = c * f64::from(e[i]);
                for j in 0..3 {
                    let p = if i == j { e[j] - 1 } else { e[j] };
                    v *= l[j].powi(p as i32);
                }
                out[i] += v;
            }
        }
        out
    }

    /// Physical gradient at `l`, given the (constant) gradients of the barycentrics.
    pub fn gradient(&self, l: [f64; 3], grads: &[[f64; 2]; 3]) -> [f64; 2] {
        let p = self.partials(l);
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += p[i] * grads[i][0];
            g[1] += p[i] * grads[i][1];
        }
        g
    }

    pub fn derivative(&self, i: usize) -> Self {
        Self::from_terms(self.terms.iter().filter(|(e, _)| e[i] > 0).map(|&(e, c)| {
            let mut e2 = e;
            e2[i] -= 1;
            (e2, c * f64::from(e[i]))
        }))
    }

    pub fn integrate(&self, area: f64) -> f64 {
        self.terms.iter().map(|(e, c)| c * integrate_barycentric(area, [e[0] as u32, e[1] as u32, e[2] as u32])).sum()
    }

    /// Restriction to the edge opposite local vertex `j`, parametrised by the
    /// barycentrics of vertices `j+1` and `j+2` (mod 3).
    pub fn restrict_edge(&self, j: usize) -> SegmentPoly {
        let (a, b) = ((j + 1) % 3, (j + 2) % 3);
        SegmentPoly::from_terms(self.terms.iter().filter(|(e, _)| e[j] == 0).map(|&(e, c)| ([e[a], e[b]], c)))
    }

    pub fn integrate_edge(&self, j: usize, length: f64) -> f64 {
        self.restrict_edge(j).integrate(length)
    }
}

/// `∫_K ∇p · ∇q` in closed form.
pub fn grad_inner_integral(p: &BaryPoly, q: &BaryPoly, grads: &[[f64; 2]; 3], area: f64) -> f64 {
    let dp: Vec<BaryPoly> = (0..3).map(|i| p.derivative(i)).collect();
    let dq: Vec<BaryPoly> = (0..3).map(|i| q.derivative(i)).collect();
    let mut total = 0.0;
    for i in 0..3 {
        if dp[i].is_zero() {
            continue;
        }
        for j in 0..3 {
            if dq[j].is_zero() {
                continue;
            }
            let g = grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1];
            total += g * dp[i].mul(&dq[j]).integrate(area);
        }
    }
    total
}

/// A polynomial on a segment in the two endpoint barycentrics `(μ0, μ1)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentPoly {
    terms: Vec<([u8; 2], f64)>,
}

impl SegmentPoly {
    pub fn constant(c: f64) -> Self {
        Self::from_terms([([0, 0], c)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ([u8; 2], f64)>) -> Self {
        let mut map: BTreeMap<[u8; 2], f64> = BTreeMap::new();
        for (e, c) in terms {
            *map.entry(e).or_insert(0.0) += c;
        }
        Self { terms: map.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn terms(&self) -> &[([u8; 2], f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(e, _)| (e[0] + e[1]) as usize).max().unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|&(e, c)| (e, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).copied())
    }

    /// The same polynomial with the endpoints swapped.
    pub fn reversed(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|&(e, c)| ([e[1], e[0]], c)))
    }

    pub fn eval(&self, mu0: f64, mu1: f64) -> f64 {
        self.terms.iter().map(|(e, c)| c * mu0.powi(e[0] as i32) * mu1.powi(e[1] as i32)).sum()
    }

    pub fn integrate(&self, length: f64) -> f64 {
        self.terms.iter().map(|(e, c)| c * integrate_segment(length, [e[0] as u32, e[1] as u32])).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::triangle_rule;

    #[test]
    fn barycentric_integrals() {
        assert!((integrate_barycentric(1.0, [1, 0, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(integrate_barycentric(0.7, [0, 0, 0]), 0.7);
        assert!((integrate_barycentric(1.0, [2, 1, 0]) - 1.0 / 30.0).abs() < 1e-15);
        // Same value from a degree-3-capable rule.
        let r = triangle_rule();
        let q: f64 = r.points.iter().zip(&r.weights).map(|(l, w)| w * l[0] * l[0] * l[1]).sum();
        assert!((q - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn partials_match_derivative_polys() {
        let p = BaryPoly::from_terms([([2, 1, 0], 3.0), ([0, 1, 3], -1.5), ([0, 0, 0], 2.0)]);
        let l = [0.2, 0.3, 0.5];
        let d = p.partials(l);
        for i in 0..3 {
            assert!((d[i] - p.derivative(i).eval(l)).abs() < 1e-14);
        }
    }

    #[test]
    fn edge_restriction_drops_opposite_vertex() {
        let p = BaryPoly::lambda(1).mul(&BaryPoly::lambda(2));
        // On the edge opposite vertex 0 this is μ0 μ1, integral |F|/6.
        assert!((p.integrate_edge(0, 2.0) - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.integrate_edge(1, 2.0), 0.0);
    }

    #[test]
    fn merging_cancels_terms() {
        let p = BaryPoly::lambda(0).add(&BaryPoly::lambda(0).scale(-1.0));
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
    }
}
