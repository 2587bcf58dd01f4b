//! Gauss-Legendre rules and collapsed tensor rules on triangles.

use std::f64::consts::PI;

use super::PolyError;

/// Highest total degree for which [`gauss_triangle`] builds a rule.
pub const MAX_TRIANGLE_DEGREE: usize = 80;

/// Gauss-Legendre nodes and weights on `[-1, 1]` with `n` points.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess followed by Newton on P_n.
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        let wi = 2.0 / ((1.0 - t * t) * d * d);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Quadrature on a triangle in barycentric coordinates. Weights sum to 1, so
/// `∫_K f ≈ |K| Σ_q w_q f(x_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Rule exact for polynomials of total degree `degree`, built from a Gauss-Legendre
/// tensor rule on the square collapsed onto the triangle.
pub fn gauss_triangle(degree: usize) -> Result<QuadratureRule, PolyError> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(PolyError::UnsupportedDegree {
            degree,
            max: MAX_TRIANGLE_DEGREE,
        });
    }
    // x = s, y = t (1 - s): the Jacobian (1 - s) raises the degree in s by one.
    let ns = (degree + 2).div_ceil(2);
    let nt = (degree + 1).div_ceil(2);
    let (xs, ws) = gauss_legendre(ns);
    let (xt, wt) = gauss_legendre(nt);
    let mut points = Vec::with_capacity(ns * nt);
    let mut weights = Vec::with_capacity(ns * nt);
    for (&s, &wsi) in xs.iter().zip(&ws) {
        let s = 0.5 * (s + 1.0);
        for (&t, &wti) in xt.iter().zip(&wt) {
            let t = 0.5 * (t + 1.0);
            let (x, y) = (s, t * (1.0 - s));
            points.push([1.0 - x - y, x, y]);
            // Square weights carry 1/4, the reference area is 1/2.
            weights.push(0.5 * wsi * wti * (1.0 - s));
        }
    }
    Ok(QuadratureRule {
        degree,
        points,
        weights,
    })
}
