//! Gauss-Legendre quadrature on intervals and on the rectangular aperture.
//!
//! Nodes are the roots of the Legendre polynomial `P_N`, found by Newton
//! iteration from the standard Chebyshev-like initial guess. Complex
//! integrands are integrated with the same real rule.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::em::ApertureGeometry;
use crate::{Error, Result, SurfacePoint};

/// Default quadrature order per axis.
pub const DEFAULT_ORDER: usize = 20;

/// Order used wherever a result is cross-checked against a closed form.
pub const VALIDATION_ORDER: usize = 40;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// A Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in strictly increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`; the weights include the `(b-a)/2` Jacobian.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let xs = self.nodes.iter().map(|z| half * z + mid).collect();
        let ws = self.weights.iter().map(|w| half * w).collect();
        (xs, ws)
    }
}

/// Evaluates `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let nf = n as f64;
    let dp = nf * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Builds the `order`-point Gauss-Legendre rule.
pub fn gauss_legendre_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::ZeroQuadratureOrder);
    }
    if order == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        });
    }

    let n = order;
    let half = n / 2;
    // positive roots, largest first
    let mut pos_nodes = Vec::with_capacity(half);
    let mut pos_weights = Vec::with_capacity(half);
    for i in 1..=half {
        let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                break;
            }
        }
        // derivative at the converged root
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        pos_nodes.push(x);
        pos_weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (x, w) in pos_nodes.iter().zip(&pos_weights) {
        nodes.push(-x);
        weights.push(*w);
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        nodes.push(0.0);
        weights.push(2.0 / (d * d));
    }
    for (x, w) in pos_nodes.iter().zip(&pos_weights).rev() {
        nodes.push(*x);
        weights.push(*w);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `∫_a^b f(x) dx ≈ (b-a)/2 Σ ν_n f((b-a)/2 ζ_n + (a+b)/2)`.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, rule: &QuadratureRule) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let sum: Complex64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(z, w)| f(half * z + mid) * *w)
        .sum();
    sum * half
}

/// Tensor-product rule over the centered aperture
/// `[-L_x/2, L_x/2] × [-L_y/2, L_y/2]`.
pub fn integrate_aperture<F>(f: F, aperture: &ApertureGeometry, rule: &QuadratureRule) -> Complex64
where
    F: Fn(SurfacePoint) -> Complex64,
{
    ApertureGrid::new(aperture, rule).integrate(f)
}

/// Flattened tensor-product nodes over the aperture with their combined weights.
///
/// Points are ordered with `y` varying fastest. Reusing one grid lets several
/// integrals share channel samples.
#[derive(Debug, Clone)]
pub struct ApertureGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
}

impl ApertureGrid {
    pub fn new(aperture: &ApertureGeometry, rule: &QuadratureRule) -> Self {
        let (xs, wx) = rule.mapped(-0.5 * aperture.lx(), 0.5 * aperture.lx());
        let (ys, wy) = rule.mapped(-0.5 * aperture.ly(), 0.5 * aperture.ly());
        Self { xs, ys, wx, wy }
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.ys
    }

    pub fn x_weights(&self) -> &[f64] {
        &self.wx
    }

    pub fn y_weights(&self) -> &[f64] {
        &self.wy
    }

    pub fn points(&self) -> impl Iterator<Item = SurfacePoint> + '_ {
        self.xs
            .iter()
            .flat_map(move |&x| self.ys.iter().map(move |&y| SurfacePoint::new(x, y)))
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.wx
            .iter()
            .flat_map(move |&wx| self.wy.iter().map(move |&wy| wx * wy))
    }

    pub fn integrate<F>(&self, f: F) -> Complex64
    where
        F: Fn(SurfacePoint) -> Complex64,
    {
        self.points().zip(self.weights()).map(|(s, w)| f(s) * w).sum()
    }

    /// Weighted sum of pre-sampled values, `Σ_n w_n v_n`.
    pub fn integrate_samples(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(self.weights()).map(|(v, w)| v * w).sum()
    }

    /// `Σ_n w_n |v_n|²`.
    pub fn integrate_norm_sqr(&self, values: &[Complex64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(self.weights()).map(|(v, w)| v.norm_sqr() * w).sum()
    }

    /// `Σ_n w_n a_n b_n`.
    pub fn integrate_product(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        a.iter().zip(b).zip(self.weights()).map(|((x, y), w)| x * y * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_zero_order() {
        assert!(matches!(gauss_legendre_rule(0), Err(Error::ZeroQuadratureOrder)));
    }

    #[test]
    fn single_point_is_midpoint_rule() {
        let r = gauss_legendre_rule(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[2.0]);
    }

    #[test]
    fn two_point_rule_matches_p2_roots() {
        // roots of P2(x) = (3x^2 - 1)/2, via the quadratic formula
        let root = (1.0f64 / 3.0).sqrt();
        let r = gauss_legendre_rule(2).unwrap();
        assert!((r.nodes()[0] + root).abs() < 1e-15);
        assert!((r.nodes()[1] - root).abs() < 1e-15);
        assert!((r.nodes()[1] - 0.5773502692).abs() < 1e-10);
        for w in r.weights() {
            assert!((w - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn three_point_rule_integrates_x4_exactly() {
        let r = gauss_legendre_rule(3).unwrap();
        let v = integrate_interval(|x| c(x.powi(4)), -1.0, 1.0, &r);
        assert!((v.re - 0.4).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn rule_invariants_hold_up_to_high_order() {
        for n in 1..=64 {
            let r = gauss_legendre_rule(n).unwrap();
            assert_eq!(r.order(), n);
            let sum: f64 = r.weights().iter().sum();
            assert!((sum - 2.0).abs() < 1e-12, "n={n} weight sum {sum}");
            for i in 0..n {
                assert!(r.weights()[i] > 0.0);
                assert!(r.nodes()[i] > -1.0 && r.nodes()[i] < 1.0);
                assert_eq!(r.nodes()[i], -r.nodes()[n - 1 - i]);
                assert_eq!(r.weights()[i], r.weights()[n - 1 - i]);
                if i > 0 {
                    assert!(r.nodes()[i] > r.nodes()[i - 1]);
                }
            }
        }
    }

    #[test]
    fn monomials_up_to_degree_2n_minus_1_are_exact() {
        for n in [1usize, 2, 5, 20, 40] {
            let r = gauss_legendre_rule(n).unwrap();
            for p in 0..(2 * n) {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let v = integrate_interval(|x| c(x.powi(p as i32)), -1.0, 1.0, &r).re;
                let scale = exact.abs().max(1.0);
                assert!((v - exact).abs() <= 1e-10 * scale, "n={n} p={p}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn interval_examples() {
        let r = gauss_legendre_rule(7).unwrap();
        let v = integrate_interval(|_| c(1.0), 0.0, 3.0, &r);
        assert!((v.re - 3.0).abs() < 1e-14);

        let r2 = gauss_legendre_rule(2).unwrap();
        let v = integrate_interval(|x| c(x.powi(3)), 0.0, 1.0, &r2);
        assert!((v.re - 0.25).abs() < 1e-15);

        let r20 = gauss_legendre_rule(20).unwrap();
        let v = integrate_interval(|x| Complex64::from_polar(1.0, PI * x), -1.0, 1.0, &r20);
        assert!(v.norm() < 1e-12, "{v}");
    }

    #[test]
    fn aperture_area_and_odd_symmetry() {
        let ap = ApertureGeometry::new(0.6, 0.6).unwrap();
        let r = gauss_legendre_rule(DEFAULT_ORDER).unwrap();
        let area = integrate_aperture(|_| c(1.0), &ap, &r);
        assert!((area.re - 0.36).abs() < 1e-13);

        let ap2 = ApertureGeometry::new(0.8, 0.3).unwrap();
        let odd = integrate_aperture(|s| c(s.x), &ap2, &r);
        assert!(odd.norm() < 1e-15);
    }

    #[test]
    fn grid_matches_closure_integration() {
        let ap = ApertureGeometry::new(0.5, 0.7).unwrap();
        let r = gauss_legendre_rule(9).unwrap();
        let grid = ApertureGrid::new(&ap, &r);
        assert_eq!(grid.len(), 81);
        let f = |s: SurfacePoint| Complex64::new(s.x * s.x, s.y);
        let samples: Vec<_> = grid.points().map(f).collect();
        let a = grid.integrate(f);
        let b = grid.integrate_samples(&samples);
        assert!((a - b).norm() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Random polynomial of total degree <= 2N-1 in (s_x, s_y), compared
            // against its analytic integral over the aperture.
            #[test]
            fn tensor_rule_is_exact_for_polynomials(
                n in 1usize..8,
                lx in 0.1f64..2.0,
                ly in 0.1f64..2.0,
                seed_coeffs in proptest::collection::vec(-1.0f64..1.0, 64),
            ) {
                let ap = ApertureGeometry::new(lx, ly).unwrap();
                let rule = gauss_legendre_rule(n).unwrap();
                let deg = 2 * n - 1;
                let mut terms = Vec::new();
                let mut idx = 0;
                for p in 0..=deg {
                    for q in 0..=(deg - p) {
                        terms.push((p, q, seed_coeffs[idx % seed_coeffs.len()]));
                        idx += 1;
                    }
                }
                let mono = |p: usize, l: f64| {
                    if p % 2 == 1 { 0.0 } else { 2.0 * (l / 2.0).powi(p as i32 + 1) / (p as f64 + 1.0) }
                };
                let exact: f64 = terms.iter().map(|&(p, q, a)| a * mono(p, lx) * mono(q, ly)).sum();
                let scale: f64 = terms.iter().map(|&(p, q, a)| a.abs() * mono(p, lx).abs().max(0.0) * mono(q, ly).abs()).sum::<f64>().max(1e-300);
                let v = integrate_aperture(
                    |s| Complex64::new(terms.iter().map(|&(p, q, a)| a * s.x.powi(p as i32) * s.y.powi(q as i32)).sum(), 0.0),
                    &ap,
                    &rule,
                );
                prop_assert!((v.re - exact).abs() <= 1e-9 * scale.max(exact.abs()), "{} vs {}", v.re, exact);
            }
        }
    }
}
