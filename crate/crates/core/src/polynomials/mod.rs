//! Polynomial machinery on triangles: Jacobi polynomials, quadrature, nodal Lagrange
//! bases and the alternating patch functions.

mod basis;
mod bubble;
mod jacobi;
mod quadrature;

use thiserror::Error;

use crate::mesh::{Mesh, Point2};

pub use basis::{NodeKind, ReferenceBasis};
pub use bubble::{eval_patch_bubble, patch_bubble_on_triangle};
pub use jacobi::{jacobi_p02, weighted_moment, zeta};
pub use quadrature::{gauss_legendre, gauss_triangle, QuadratureRule, MAX_TRIANGLE_DEGREE};

#[derive(Debug, Error, PartialEq)]
pub enum PolyError {
    #[error("quadrature of degree {degree} is not supported (maximum {max})")]
    UnsupportedDegree { degree: usize, max: usize },
    #[error("triangle {triangle} is not in the patch of vertex {vertex}")]
    TriangleNotInPatch { triangle: usize, vertex: usize },
}

/// Affine data of one mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub corners: [Point2; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(corners: [Point2; 3]) -> Self {
        let [p0, p1, p2] = corners;
        let area = 0.5 * p1.sub(p0).cross(p2.sub(p0));
        let mut grad_lambda = [[0.0; 2]; 3];
        for (i, g) in grad_lambda.iter_mut().enumerate() {
            let e = corners[(i + 2) % 3].sub(corners[(i + 1) % 3]);
            *g = [-e.y / (2.0 * area), e.x / (2.0 * area)];
        }
        Self {
            corners,
            area,
            grad_lambda,
        }
    }

    pub fn of(mesh: &Mesh, t: usize) -> Self {
        Self::new(mesh.corners(t))
    }

    /// Physical point of barycentric coordinates `lam`.
    pub fn point(&self, lam: &[f64; 3]) -> Point2 {
        let [a, b, c] = self.corners;
        Point2::new(
            lam[0] * a.x + lam[1] * b.x + lam[2] * c.x,
            lam[0] * a.y + lam[1] * b.y + lam[2] * c.y,
        )
    }

    /// Physical gradient from derivatives with respect to the three barycentric coordinates.
    pub fn gradient(&self, dlam: &[f64; 3]) -> [f64; 2] {
        let g = &self.grad_lambda;
        [
            dlam[0] * g[0][0] + dlam[1] * g[1][0] + dlam[2] * g[2][0],
            dlam[0] * g[0][1] + dlam[1] * g[1][1] + dlam[2] * g[2][1],
        ]
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, p: Point2) -> [f64; 3] {
        let [a, b, c] = self.corners;
        let l1 = 0.5 * a.sub(c).cross(p.sub(c)) / self.area;
        let l2 = 0.5 * b.sub(a).cross(p.sub(a)) / self.area;
        [1.0 - l1 - l2, l1, l2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_gradients() {
        let g = TriangleGeometry::new([Point2::new(0.2, 0.1), Point2::new(1.3, 0.4), Point2::new(0.5, 0.9)]);
        for i in 0..3 {
            for j in 0..3 {
                // λ_i(p_j) - λ_i(p_0) = ∇λ_i · (p_j - p_0)
                let d = g.corners[j].sub(g.corners[0]);
                let got = g.grad_lambda[i][0] * d.x + g.grad_lambda[i][1] * d.y;
                let want = (i == j) as u8 as f64 - (i == 0) as u8 as f64;
                assert!((got - want).abs() < 1e-14);
            }
        }
        let p = Point2::new(0.6, 0.45);
        let lam = g.barycentric(p);
        let q = g.point(&lam);
        assert!(p.dist(q) < 1e-15);
    }
}
