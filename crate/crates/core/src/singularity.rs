//! The singular-distance measure `Θ(z)` of a vertex and the alternating pressure
//! functional used to wire pressures at (nearly) singular vertices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Mesh, VertexPatch};

/// Values of `Θ` at or below this are rounding noise of an exactly singular vertex.
pub const THETA_ROUNDOFF: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum SingularityError {
    #[error("every vertex is singular; the minimal positive singular distance is undefined")]
    AllSingular,
    #[error("expected {expected} traces, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("eta must be a non-negative number, got {0}")]
    InvalidEta(f64),
}

/// `|sin(θ_i + θ_j)|` from per-angle sine and cosine, avoiding `θ_i + θ_j - π` cancellation.
fn sin_of_sum((si, ci): (f64, f64), (sj, cj): (f64, f64)) -> f64 {
    (si * cj + ci * sj).abs()
}

/// Singular distance of the vertex at the centre of `patch`, a value in `[0, 1]`.
///
/// Interior vertices take the maximum over all cyclically consecutive angle pairs,
/// boundary vertices over the non-wrapping pairs. A boundary vertex in a single
/// triangle has distance 0.
pub fn theta_of_vertex(patch: &VertexPatch) -> f64 {
    let sc = &patch.sin_cos;
    let n = sc.len();
    if n <= 1 {
        return 0.0;
    }
    let pairs = if patch.is_boundary { n - 1 } else { n };
    (0..pairs)
        .map(|i| sin_of_sum(sc[i], sc[(i + 1) % n]))
        .fold(0.0, f64::max)
        .min(1.0)
}

/// `Θ` for every vertex of `mesh`, indexed by vertex id.
pub fn theta_values(mesh: &Mesh) -> Vec<f64> {
    mesh.patches().iter().map(theta_of_vertex).collect()
}

/// Whether a vertex with singular distance `theta` is `eta`-critical.
pub fn is_critical(theta: f64, eta: f64) -> bool {
    theta <= eta + THETA_ROUNDOFF
}

fn check_eta(eta: f64) -> Result<(), SingularityError> {
    if eta.is_nan() || eta < 0.0 {
        return Err(SingularityError::InvalidEta(eta));
    }
    Ok(())
}

/// Vertices with `Θ(z) ≤ eta`, in increasing id order.
pub fn eta_critical_set(mesh: &Mesh, eta: f64) -> Result<Vec<usize>, SingularityError> {
    check_eta(eta)?;
    Ok(theta_values(mesh)
        .iter()
        .enumerate()
        .filter(|(_, &t)| is_critical(t, eta))
        .map(|(z, _)| z)
        .collect())
}

fn min_positive(theta: &[f64]) -> Result<f64, SingularityError> {
    theta
        .iter()
        .copied()
        .filter(|&t| !is_critical(t, 0.0))
        .reduce(f64::min)
        .ok_or(SingularityError::AllSingular)
}

/// Smallest singular distance among the vertices that are not exactly singular.
pub fn theta_min(mesh: &Mesh) -> Result<f64, SingularityError> {
    min_positive(&theta_values(mesh))
}

/// `Σ_ℓ (-1)^ℓ q_ℓ` for traces `q_ℓ = q|_{K_ℓ}(z)` listed in patch order, `ℓ = 1..N`.
pub fn alternating_functional(patch: &VertexPatch, traces: &[f64]) -> Result<f64, SingularityError> {
    if traces.len() != patch.len() {
        return Err(SingularityError::LengthMismatch {
            expected: patch.len(),
            got: traces.len(),
        });
    }
    Ok(alternating_sum(traces))
}

/// The alternating sum `-q_1 + q_2 - q_3 + ...`.
pub fn alternating_sum(traces: &[f64]) -> f64 {
    traces
        .iter()
        .enumerate()
        .map(|(i, q)| if i % 2 == 0 { -q } else { *q })
        .sum()
}

/// Per-vertex singular distances of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub theta: Vec<f64>,
    /// Minimal distance over non-singular vertices, `None` if all are singular.
    pub theta_min: Option<f64>,
}

impl SingularityReport {
    pub fn new(mesh: &Mesh) -> Self {
        let theta = theta_values(mesh);
        let theta_min = min_positive(&theta).ok();
        Self { theta, theta_min }
    }

    pub fn critical_set(&self, eta: f64) -> Result<Vec<usize>, SingularityError> {
        check_eta(eta)?;
        Ok((0..self.theta.len())
            .filter(|&z| is_critical(self.theta[z], eta))
            .collect())
    }

    /// CSV rows `vertex_id,x,y,n_z,is_boundary,theta`, header included.
    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut out = String::from("vertex_id,x,y,n_z,is_boundary,theta\n");
        for (z, p) in mesh.vertices().iter().enumerate() {
            out.push_str(&format!(
                "{z},{:?},{:?},{},{},{:?}\n",
                p.x,
                p.y,
                mesh.vertex_patch(z).len(),
                mesh.is_boundary_vertex(z) as u8,
                self.theta[z]
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point2;

    #[test]
    fn criss_cross_centre() {
        assert_eq!(theta_of_vertex(Mesh::criss_cross(0.0).unwrap().vertex_patch(4)), 0.0);
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let m = Mesh::criss_cross(eps).unwrap();
            let t = theta_of_vertex(m.vertex_patch(4));
            assert!((t / (2.0 * eps) - 1.0).abs() < 0.05, "eps {eps}: {t}");
        }
    }

    #[test]
    fn critical_sets_of_the_criss_cross() {
        // Corners sit in two triangles with angles summing to π/2, so Θ = 1 there.
        let m = Mesh::criss_cross(0.0).unwrap();
        assert!((theta_of_vertex(m.vertex_patch(0)) - 1.0).abs() < 1e-15);
        assert_eq!(eta_critical_set(&m, 0.0).unwrap(), vec![4]);
        let m = Mesh::criss_cross(0.01).unwrap();
        assert!(eta_critical_set(&m, 0.0).unwrap().is_empty());
        assert_eq!(eta_critical_set(&m, 0.05).unwrap(), vec![4]);
        assert_eq!(eta_critical_set(&m, 1.0).unwrap().len(), 5);
        assert!(eta_critical_set(&m, -1.0).is_err());
    }

    #[test]
    fn single_triangle_corner_is_singular() {
        let m = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            &[[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(eta_critical_set(&m, 0.0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn theta_min_cases() {
        let m = Mesh::criss_cross(0.01).unwrap();
        let t = theta_min(&m).unwrap();
        assert_eq!(t, theta_of_vertex(m.vertex_patch(4)));
        assert!((theta_min(&Mesh::criss_cross(0.0).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        let tri = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            &[[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(theta_min(&tri), Err(SingularityError::AllSingular));
        let fine = Mesh::criss_cross(0.0).unwrap().red_refine().unwrap();
        assert!(theta_min(&fine).unwrap() > 0.1);
    }

    #[test]
    fn refinement_keeps_theta() {
        let m = Mesh::criss_cross(0.01).unwrap();
        let f = m.red_refine().unwrap();
        let coarse = theta_values(&m);
        let fine = theta_values(&f);
        for z in 0..m.num_vertices() {
            assert!((coarse[z] - fine[z]).abs() < 1e-13);
        }
    }

    #[test]
    fn alternating_examples() {
        let m = Mesh::criss_cross(0.0).unwrap();
        let p = m.vertex_patch(4);
        assert_eq!(alternating_functional(p, &[3.0; 4]).unwrap(), 0.0);
        assert_eq!(alternating_functional(p, &[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.0);
        assert_eq!(alternating_functional(p, &[1.0, 2.0, 2.0, 1.0]).unwrap(), 0.0);
        assert_eq!(
            alternating_functional(p, &[1.0]),
            Err(SingularityError::LengthMismatch { expected: 4, got: 1 })
        );
    }

    #[test]
    fn skewed_exact_cross_is_singular() {
        // Two straight lines through the origin at a non-right angle.
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.3, 0.8),
            Point2::new(-1.0, 0.0),
            Point2::new(-0.3, -0.8),
        ];
        let m = Mesh::new(v, &[[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]]).unwrap();
        assert!(theta_of_vertex(m.vertex_patch(0)) < 1e-15);
    }

    #[test]
    fn csv_dump() {
        let m = Mesh::criss_cross(0.0).unwrap();
        let csv = SingularityReport::new(&m).to_csv(&m);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[5], "4,0.5,0.5,4,0,0.0");
    }
}
