//! Alternating patch functions built from `P_k^{(0,2)}`.
//!
//! On the `j`-th triangle `K_j` of the counterclockwise patch of `z` the function is
//! `(-1)^j |K_j|^{-1} P_k^{(0,2)}(1 - 2λ_z)`; it vanishes outside the patch.

use super::{jacobi_p02, PolyError};
use crate::mesh::Mesh;

/// Value on a triangle of area `area` at the `position`-th (1-based) place of the patch,
/// where `lambda_z` is the barycentric coordinate of the patch centre.
pub fn patch_bubble_on_triangle(position: usize, area: f64, k: usize, lambda_z: f64) -> f64 {
    let sign = if position.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / area * jacobi_p02(k, 1.0 - 2.0 * lambda_z)
}

/// Evaluates the degree-`k` patch function of vertex `z` on `triangle` at barycentric
/// point `lam` (ordered like the triangle's vertices).
pub fn eval_patch_bubble(mesh: &Mesh, z: usize, k: usize, triangle: usize, lam: &[f64; 3]) -> Result<f64, PolyError> {
    let patch = mesh.vertex_patch(z);
    let (pos, local) = patch
        .position(triangle)
        .zip(mesh.local_index(triangle, z))
        .ok_or(PolyError::TriangleNotInPatch { triangle, vertex: z })?;
    Ok(patch_bubble_on_triangle(pos + 1, mesh.area(triangle), k, lam[local]))
}
