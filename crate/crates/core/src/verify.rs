//! Executable checks of the geometric identities and inequalities behind the element:
//! the rotation identity, the condition bound for two unit vectors, the four-direction
//! divergence inequality, the edge-vector construction for a single vertex patch, the
//! patch-divergence bound and the identities of the alternating patch functions.
//!
//! Each check returns the quantities it compares; [`run_suite`] samples them on random
//! inputs and summarises the worst cases.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::null_space;
use crate::mesh::{Mesh, MeshError, Point2};
use crate::polynomials::{eval_patch_bubble, gauss_triangle, zeta, PolyError, ReferenceBasis, TriangleGeometry};
use crate::singularity::{alternating_sum, is_critical, theta_of_vertex};
use crate::spaces::VelocityDofMap;

/// Below this `|sin θ|` two directions are treated as parallel.
pub const DEGENERATE_SINE: f64 = 1e-12;

/// Frozen ratio bound for the patch-divergence check, calibrated on random discrete
/// fields of degree 4 on criss-cross(1e-6) with `η = 1e-5` (observed maximum 0.047 over
/// 100 fields) and rounded up tenfold.
pub const PATCH_DIVERGENCE_CONSTANT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("directions are parallel: |sin θ| = {0:e}")]
    DegenerateAngle(f64),
    #[error("fields violate the edge-derivative matching by {0:e}")]
    IncompatibleFields(f64),
    #[error("edge-vector system has no solution: residual {0:e}")]
    InfeasibleSystem(f64),
    #[error("traces have nonzero alternating sum {0:e}")]
    ConditionViolated(f64),
    #[error("vertex {vertex} is not critical: Θ = {theta:e} > η = {eta:e}")]
    NotCritical { vertex: usize, theta: f64, eta: f64 },
    #[error("vertex {0} is on the boundary; the construction needs a closed patch")]
    BoundaryVertex(usize),
    #[error("expected {expected} traces, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Counterclockwise rotation by `theta`.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Largest entry of `sin(α−β) R(γ) − sin(γ−β) R(α) − sin(α−γ) R(β)`.
pub fn check_rotation_identity(alpha: f64, beta: f64, gamma: f64) -> f64 {
    let d = (alpha - beta).sin() * rotation(gamma)
        - (gamma - beta).sin() * rotation(alpha)
        - (alpha - gamma).sin() * rotation(beta);
    d.amax()
}

/// Condition number of `(t₁, t₂)` for unit vectors at angle `theta`, and the bound
/// `2 / |sin θ|`.
pub fn check_cond_bound(theta: f64) -> Result<(f64, f64), VerifyError> {
    let s = theta.sin().abs();
    if s < DEGENERATE_SINE {
        return Err(VerifyError::DegenerateAngle(s));
    }
    let t1 = Vector2::new(1.0, 0.0);
    let t2 = Vector2::new(theta.cos(), theta.sin());
    let m = Matrix2::from_columns(&[t1, t2]);
    let sv = m.singular_values();
    let cond = sv.max() / sv.min();
    Ok((cond, 2.0 / s))
}

/// A vector field `v(x) = c + J (x − z) + ½ [(x − z)ᵀ H₀ (x − z), (x − z)ᵀ H₁ (x − z)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticField {
    pub value: Vector2<f64>,
    pub jacobian: Matrix2<f64>,
    pub hessians: [Matrix2<f64>; 2],
}

impl QuadraticField {
    pub fn linear(jacobian: Matrix2<f64>) -> Self {
        Self {
            value: Vector2::zeros(),
            jacobian,
            hessians: [Matrix2::zeros(); 2],
        }
    }

    /// Jacobian at offset `x` from the base point.
    pub fn jacobian_at(&self, x: Vector2<f64>) -> Matrix2<f64> {
        let r0 = self.hessians[0] * x;
        let r1 = self.hessians[1] * x;
        self.jacobian + Matrix2::new(r0.x, r0.y, r1.x, r1.y)
    }

    pub fn eval(&self, x: Vector2<f64>) -> Vector2<f64> {
        let q = Vector2::new(x.dot(&(self.hessians[0] * x)), x.dot(&(self.hessians[1] * x)));
        self.value + self.jacobian * x + 0.5 * q
    }
}

/// Four directions around a point with one field per sector; sector `j` lies between
/// `t_j` and `t_{j+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourDirectionPatch {
    pub directions: [Vector2<f64>; 4],
    /// Counterclockwise angle from `t_j` to `t_{j+1}`, in `(0, 2π)`; they sum to `2π`.
    pub angles: [f64; 4],
    pub fields: [QuadraticField; 4],
}

impl FourDirectionPatch {
    /// Normalises the directions and measures the angles between them.
    pub fn new(directions: [Vector2<f64>; 4], fields: [QuadraticField; 4]) -> Self {
        let directions = directions.map(|t| t.normalize());
        let angles = std::array::from_fn(|j| {
            let (a, b) = (directions[j], directions[(j + 1) % 4]);
            let ang = (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
            if ang < 0.0 {
                ang + 2.0 * PI
            } else {
                ang
            }
        });
        Self {
            directions,
            angles,
            fields,
        }
    }

    /// A perturbed cross (each direction moved by at most `wobble` radians) with random
    /// fields whose derivatives along every direction match across it.
    pub fn random_compatible<R: Rng>(rng: &mut R, wobble: f64) -> Self {
        let start = rng.gen_range(0.0..2.0 * PI);
        let directions: [Vector2<f64>; 4] = std::array::from_fn(|j| {
            let a = start + j as f64 * PI / 2.0 + rng.gen_range(-wobble..=wobble);
            Vector2::new(a.cos(), a.sin())
        });
        Self::compatible_fields(directions, rng)
    }

    /// Random fields on the given directions satisfying the matching conditions
    /// `(J_{j−1} − J_j) t_j = 0`, found by projecting a random guess onto the solution
    /// space of the eight linear conditions.
    pub fn compatible_fields<R: Rng>(directions: [Vector2<f64>; 4], rng: &mut R) -> Self {
        let t = directions.map(|t| t.normalize());
        // Unknowns: the four Jacobians, row-major.
        let mut c = DMatrix::zeros(8, 16);
        for (j, tj) in t.iter().enumerate() {
            let prev = (j + 3) % 4;
            for comp in 0..2 {
                for d in 0..2 {
                    c[(2 * j + comp, 4 * prev + 2 * comp + d)] += tj[d];
                    c[(2 * j + comp, 4 * j + 2 * comp + d)] -= tj[d];
                }
            }
        }
        let (z, _, _) = null_space(&c, 1e-12);
        let coef = DVector::from_fn(z.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        let x = z * coef;
        let mut random_matrix = || Matrix2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let fields = std::array::from_fn(|j| {
            let mut f = QuadraticField::linear(Matrix2::new(x[4 * j], x[4 * j + 1], x[4 * j + 2], x[4 * j + 3]));
            f.value = Vector2::zeros();
            let h0 = random_matrix();
            let h1 = random_matrix();
            f.hessians = [h0 + h0.transpose(), h1 + h1.transpose()];
            f
        });
        Self::new(directions, fields)
    }

    /// Largest `|∂_{t_j}(v_{j−1} − v_j)(z)|` over the four directions.
    pub fn compatibility_residual(&self) -> f64 {
        (0..4)
            .map(|j| {
                let d = (self.fields[(j + 3) % 4].jacobian - self.fields[j].jacobian) * self.directions[j];
                d.norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max(|sin(θ₁+θ₂)|, |sin(θ₂+θ₃)|)`.
    pub fn singular_distance(&self) -> f64 {
        let a = &self.angles;
        (a[0] + a[1]).sin().abs().max((a[1] + a[2]).sin().abs())
    }
}

/// Both sides of `μ |sin θ₁| |Σ_j (−1)^j div v_j(z)| ≤ √8 Θ Σ_j |∇v_j(z)|`, with
/// `μ = min(|sin θ₂|, |sin θ₄|)` and Frobenius norms.
pub fn check_four_direction_inequality(patch: &FourDirectionPatch) -> Result<(f64, f64), VerifyError> {
    let scale: f64 = patch.fields.iter().map(|f| f.jacobian.norm()).sum::<f64>().max(1.0);
    let res = patch.compatibility_residual();
    if res > 1e-12 * scale {
        return Err(VerifyError::IncompatibleFields(res));
    }
    let a = &patch.angles;
    let mu = a[1].sin().abs().min(a[3].sin().abs());
    let alt: f64 = patch
        .fields
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let s = if j % 2 == 0 { -1.0 } else { 1.0 };
            s * f.jacobian.trace()
        })
        .sum();
    let lhs = mu * a[0].sin().abs() * alt.abs();
    let rhs = 8f64.sqrt() * patch.singular_distance() * patch.fields.iter().map(|f| f.jacobian.norm()).sum::<f64>();
    Ok((lhs, rhs))
}

/// Edge vectors solving the compatibility system of one interior vertex patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCompatibility {
    /// One vector per patch edge, in patch order.
    pub vectors: Vec<[f64; 2]>,
    /// Largest violation of `q_i sin θ_i = ⟨d_i, n_{i+1}⟩ − ⟨d_{i+1}, n_i⟩`.
    pub residual: f64,
    /// `Σ |d_i|² / Σ q_i²` (0 for zero traces).
    pub ratio: f64,
    /// The constant the ratio is compared against: `N(N−1)/2` for the critical branch,
    /// `2 (1 + N/ξ)²` with `ξ = Σ |sin(θ_i + θ_{i+1})|` otherwise.
    pub bound: f64,
}

impl PatchCompatibility {
    pub fn bound_holds(&self) -> bool {
        self.ratio <= self.bound * (1.0 + 1e-12)
    }
}

/// Unit tangents of the patch edges, pointing away from the centre.
fn patch_tangents(mesh: &Mesh, z: usize) -> Vec<Vector2<f64>> {
    let c = mesh.vertices()[z];
    mesh.vertex_patch(z)
        .edges
        .iter()
        .map(|&e| {
            let d = mesh.vertices()[e].sub(c);
            Vector2::new(d.x, d.y).normalize()
        })
        .collect()
}

/// Normal of an edge: the tangent turned clockwise, so that `d_i = δ_i t_i` turns the
/// system into `q_i = δ_i + δ_{i+1}`.
fn edge_normal(t: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(t.y, -t.x)
}

/// Solves the edge-vector compatibility system around interior vertex `z` for the
/// per-triangle traces `q|_{K_i}(z)` (patch order).
///
/// The critical branch uses `d_i = δ_i t_i` with `δ_1 = 0`,
/// `δ_{i+1} = Σ_{j≤i} (−1)^{i−j} q_j` and needs a zero alternating sum. The other branch
/// takes the minimum-norm least-squares solution.
pub fn solve_patch_compatibility(
    mesh: &Mesh,
    z: usize,
    traces: &[f64],
    eta_critical: bool,
) -> Result<PatchCompatibility, VerifyError> {
    let patch = mesh.vertex_patch(z);
    if patch.is_boundary {
        return Err(VerifyError::BoundaryVertex(z));
    }
    let n = patch.len();
    if traces.len() != n {
        return Err(VerifyError::LengthMismatch {
            expected: n,
            got: traces.len(),
        });
    }
    let t = patch_tangents(mesh, z);
    let normals: Vec<Vector2<f64>> = t.iter().map(edge_normal).collect();
    let sines: Vec<f64> = patch.sin_cos.iter().map(|sc| sc.0).collect();
    let scale = traces.iter().fold(0.0f64, |m, q| m.max(q.abs())).max(1.0);
    let q2: f64 = traces.iter().map(|q| q * q).sum();

    let (vectors, bound): (Vec<Vector2<f64>>, f64) = if eta_critical {
        let alt = alternating_sum(traces);
        if alt.abs() > 1e-12 * scale {
            return Err(VerifyError::ConditionViolated(alt));
        }
        let mut delta = vec![0.0; n];
        for i in 1..n {
            delta[i] = traces[i - 1] - delta[i - 1];
        }
        let d = delta.iter().zip(&t).map(|(&s, ti)| s * ti).collect();
        (d, (n * (n - 1)) as f64 / 2.0)
    } else {
        let mut m = DMatrix::zeros(n, 2 * n);
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            let next = (i + 1) % n;
            for c in 0..2 {
                m[(i, 2 * i + c)] += normals[next][c];
                m[(i, 2 * next + c)] -= normals[i][c];
            }
            rhs[i] = traces[i] * sines[i];
        }
        let svd = m.svd(true, true);
        let x = svd
            .solve(&rhs, 1e-12 * svd.singular_values.max())
            .map_err(|_| VerifyError::InfeasibleSystem(f64::NAN))?;
        let d = (0..n).map(|i| Vector2::new(x[2 * i], x[2 * i + 1])).collect();
        let xi: f64 = (0..n)
            .map(|i| (patch.angles[i] + patch.angles[(i + 1) % n]).sin().abs())
            .sum();
        (d, 2.0 * (1.0 + n as f64 / xi).powi(2))
    };

    let residual = (0..n)
        .map(|i| {
            let next = (i + 1) % n;
            (traces[i] * sines[i] - vectors[i].dot(&normals[next]) + vectors[next].dot(&normals[i])).abs()
        })
        .fold(0.0, f64::max);
    if residual > 1e-10 * scale {
        return Err(VerifyError::InfeasibleSystem(residual));
    }
    let d2: f64 = vectors.iter().map(|d| d.norm_squared()).sum();
    Ok(PatchCompatibility {
        vectors: vectors.iter().map(|d| [d.x, d.y]).collect(),
        residual,
        ratio: if q2 > 0.0 { d2 / q2 } else { 0.0 },
        bound,
    })
}

/// Outcome of the patch-divergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchDivergence {
    /// `sin²(φ) |Σ_ℓ (−1)^ℓ div v|_{K_ℓ}(z)|` with `φ` the smallest mesh angle.
    pub lhs: f64,
    /// `h_z⁻¹ k² η ‖∇v‖_{L²(ω_z)}`.
    pub scale: f64,
}

impl PatchDivergence {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.scale
        }
    }
}

/// Jacobian of the discrete field `v` on triangle `t` at barycentric point `lam`.
fn discrete_jacobian(mesh: &Mesh, vel: &VelocityDofMap, v: &[f64], t: usize, lam: &[f64; 3]) -> Matrix2<f64> {
    let geo = TriangleGeometry::of(mesh, t);
    let coef = vel.local_coefficients(t, v);
    let grads = vel.basis().eval_grad_bary(lam);
    let mut j = Matrix2::zeros();
    for (c, g) in coef.iter().zip(&grads) {
        let g = geo.gradient(g);
        for comp in 0..2 {
            j[(comp, 0)] += c[comp] * g[0];
            j[(comp, 1)] += c[comp] * g[1];
        }
    }
    j
}

/// Compares the alternating sum of the divergence of `v` around the `eta`-critical
/// vertex `z` with `h_z⁻¹ k² η ‖∇v‖_{L²(ω_z)}`.
pub fn check_patch_divergence(
    mesh: &Mesh,
    vel: &VelocityDofMap,
    v: &[f64],
    z: usize,
    eta: f64,
) -> Result<PatchDivergence, VerifyError> {
    let patch = mesh.vertex_patch(z);
    let theta = theta_of_vertex(patch);
    if !is_critical(theta, eta) {
        return Err(VerifyError::NotCritical { vertex: z, theta, eta });
    }
    let k = vel.degree();
    let rule = gauss_triangle(2 * k)?;
    let mut traces = Vec::with_capacity(patch.len());
    let mut grad2 = 0.0;
    for &t in &patch.triangles {
        let mut lam = [0.0; 3];
        lam[mesh.local_index(t, z).expect("patch triangle contains its centre")] = 1.0;
        traces.push(discrete_jacobian(mesh, vel, v, t, &lam).trace());
        let area = mesh.area(t);
        for (l, w) in rule.iter() {
            grad2 += area * w * discrete_jacobian(mesh, vel, v, t, l).norm_squared();
        }
    }
    let phi = mesh.min_angle();
    Ok(PatchDivergence {
        lhs: phi.sin().powi(2) * alternating_sum(&traces).abs(),
        scale: (k * k) as f64 * eta * grad2.sqrt() / mesh.patch_width(z),
    })
}

/// Worst relative deviation of the patch function of `z` from its vertex values
/// `(−1)^j |K_j|⁻¹ · ((−1)^k ζ_k at z, 1 elsewhere)`.
pub fn bubble_vertex_deviation(mesh: &Mesh, z: usize, k: usize) -> Result<f64, VerifyError> {
    let patch = mesh.vertex_patch(z);
    let mut worst: f64 = 0.0;
    for (pos, &t) in patch.triangles.iter().enumerate() {
        let sign = if (pos + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let zl = mesh.local_index(t, z).expect("patch triangle contains its centre");
        for v in 0..3 {
            let mut lam = [0.0; 3];
            lam[v] = 1.0;
            let at_z = if k.is_multiple_of(2) { zeta(k) } else { -zeta(k) };
            let expected = sign / mesh.area(t) * if v == zl { at_z } else { 1.0 };
            let got = eval_patch_bubble(mesh, z, k, t, &lam)?;
            worst = worst.max((got - expected).abs() / expected.abs());
        }
    }
    Ok(worst)
}

/// Worst deviation of `(b, 1)_{K_j}` from `(−1)^{j+k} / ζ_k` over the patch of `z`.
pub fn bubble_mean_deviation(mesh: &Mesh, z: usize, k: usize) -> Result<f64, VerifyError> {
    let patch = mesh.vertex_patch(z);
    let rule = gauss_triangle(k)?;
    let mut worst: f64 = 0.0;
    for (pos, &t) in patch.triangles.iter().enumerate() {
        let mut integral = 0.0;
        for (l, w) in rule.iter() {
            integral += w * mesh.area(t) * eval_patch_bubble(mesh, z, k, t, l)?;
        }
        let expected = if (pos + 1 + k).is_multiple_of(2) { 1.0 } else { -1.0 } / zeta(k);
        worst = worst.max((integral - expected).abs() * zeta(k));
    }
    Ok(worst)
}

/// Worst deviation of `(b, q)_{K_j} − q(z) (b, 1)_{K_j}` over the patch of `z` for a
/// random `q` of degree `k` on each triangle, relative to `‖b‖ ‖q‖`.
pub fn bubble_orthogonality_deviation<R: Rng>(
    mesh: &Mesh,
    z: usize,
    k: usize,
    rng: &mut R,
) -> Result<f64, VerifyError> {
    let patch = mesh.vertex_patch(z);
    let basis = ReferenceBasis::new(k);
    let rule = gauss_triangle(2 * k)?;
    let mut worst: f64 = 0.0;
    for &t in &patch.triangles {
        let coef: Vec<f64> = (0..basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = |l: &[f64; 3]| basis.eval(l).iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let mut lam_z = [0.0; 3];
        lam_z[mesh.local_index(t, z).expect("patch triangle contains its centre")] = 1.0;
        let qz = q(&lam_z);
        let area = mesh.area(t);
        let (mut bq, mut b1, mut bb, mut qq) = (0.0, 0.0, 0.0, 0.0);
        for (l, w) in rule.iter() {
            let b = eval_patch_bubble(mesh, z, k, t, l)?;
            let ql = q(l);
            bq += area * w * b * ql;
            b1 += area * w * b;
            bb += area * w * b * b;
            qq += area * w * ql * ql;
        }
        worst = worst.max((bq - qz * b1).abs() / (bb * qq).sqrt());
    }
    Ok(worst)
}

/// Both sides of `|K|⁻¹ Σ c_z² ≤ (12/7) min_C ‖Σ c_z b_z − C‖²_{L²(K)}` on triangle `t`,
/// where `b_z` is the patch function of each vertex of `t`.
pub fn gram_bound(mesh: &Mesh, t: usize, k: usize, c: [f64; 3]) -> Result<(f64, f64), VerifyError> {
    let rule = gauss_triangle(2 * k)?;
    let verts = mesh.triangles()[t].vertices;
    let area = mesh.area(t);
    let (mut s1, mut s2) = (0.0, 0.0);
    for (l, w) in rule.iter() {
        let mut f = 0.0;
        for (ci, &z) in c.iter().zip(&verts) {
            f += ci * eval_patch_bubble(mesh, z, k, t, l)?;
        }
        s1 += area * w * f;
        s2 += area * w * f * f;
    }
    let min_dist = s2 - s1 * s1 / area;
    let lhs = c.iter().map(|x| x * x).sum::<f64>() / area;
    Ok((lhs, 12.0 / 7.0 * min_dist))
}

/// A star of `n` triangles around vertex 0 with random gaps between the spokes
/// (each in `[min_angle, π − min_angle]`) and random spoke lengths in `[0.5, 1.5]`.
pub fn random_star<R: Rng>(rng: &mut R, n: usize, min_angle: f64) -> Result<Mesh, VerifyError> {
    assert!(n >= 3, "a closed star needs at least three triangles");
    let gaps = loop {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = w.iter().sum();
        let gaps: Vec<f64> = w.iter().map(|x| x / total * 2.0 * PI).collect();
        if gaps.iter().all(|&g| g >= min_angle && g <= PI - min_angle) {
            break gaps;
        }
    };
    let mut vertices = vec![Point2::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1))];
    let mut a = rng.gen_range(0.0..2.0 * PI);
    for g in &gaps {
        let r = rng.gen_range(0.5..1.5);
        vertices.push(Point2::new(vertices[0].x + r * a.cos(), vertices[0].y + r * a.sin()));
        a += g;
    }
    let tris: Vec<[usize; 3]> = (0..n).map(|i| [0, 1 + i, 1 + (i + 1) % n]).collect();
    Ok(Mesh::new(vertices, &tris)?)
}

/// One line of the suite summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub samples: usize,
    /// Worst deviation, or worst `lhs / rhs` for inequalities.
    pub worst: f64,
    pub limit: f64,
    pub failures: usize,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.worst <= self.limit
    }
}

/// Sample sizes and tolerances of [`run_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub identity_tol: f64,
    pub rotation_samples: usize,
    pub cond_samples: usize,
    pub four_direction_samples: usize,
    pub compatibility_samples: usize,
    pub bubble_patches: usize,
    pub gram_samples: usize,
    pub divergence_samples: usize,
    pub degrees: std::ops::RangeInclusive<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            identity_tol: 1e-12,
            rotation_samples: 1000,
            cond_samples: 1000,
            four_direction_samples: 500,
            compatibility_samples: 1000,
            bubble_patches: 50,
            gram_samples: 50,
            divergence_samples: 100,
            degrees: 2..=8,
        }
    }
}

struct Tally {
    summary: CheckSummary,
}

impl Tally {
    fn new(name: &str, limit: f64) -> Self {
        Self {
            summary: CheckSummary {
                name: name.to_string(),
                samples: 0,
                worst: 0.0,
                limit,
                failures: 0,
            },
        }
    }

    fn record(&mut self, value: f64) {
        self.summary.samples += 1;
        if value.is_nan() {
            self.summary.failures += 1;
        } else {
            self.summary.worst = self.summary.worst.max(value);
        }
    }

    fn fail(&mut self) {
        self.summary.samples += 1;
        self.summary.failures += 1;
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Rotation identity, condition bound, four-direction inequality and the edge-vector
/// construction on random inputs.
pub fn run_lemma_checks(opts: &SuiteOptions) -> Vec<CheckSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rot = Tally::new("rotation identity", opts.identity_tol);
    for _ in 0..opts.rotation_samples {
        let [a, b, c]: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-10.0..10.0));
        rot.record(check_rotation_identity(a, b, c));
    }

    let mut cond = Tally::new("condition bound (cond / bound)", 1.0 + 1e-12);
    for _ in 0..opts.cond_samples {
        let theta = loop {
            let t = rng.gen_range(-2.0 * PI..2.0 * PI);
            if t.sin().abs() >= 1e-3 {
                break t;
            }
        };
        match check_cond_bound(theta) {
            Ok((c, b)) => cond.record(c / b),
            Err(_) => cond.fail(),
        }
    }

    let mut four = Tally::new("four-direction inequality (lhs / rhs)", 1.0 + 1e-9);
    let mut cross = Tally::new("four-direction exact cross (|alternating div|)", opts.identity_tol);
    for i in 0..opts.four_direction_samples {
        let p = FourDirectionPatch::random_compatible(&mut rng, 0.6);
        match check_four_direction_inequality(&p) {
            Ok((l, r)) => four.record(ratio(l, r)),
            Err(_) => four.fail(),
        }
        if i % 10 == 0 {
            let start = rng.gen_range(0.0..2.0 * PI);
            let dirs = std::array::from_fn(|j| {
                let a = start + j as f64 * PI / 2.0;
                Vector2::new(a.cos(), a.sin())
            });
            let p = FourDirectionPatch::compatible_fields(dirs, &mut rng);
            match check_four_direction_inequality(&p) {
                Ok((l, _)) => cross.record(l),
                Err(_) => cross.fail(),
            }
        }
    }

    let mut delta = Tally::new("edge-vector construction (residual)", opts.identity_tol);
    let mut delta_bound = Tally::new("edge-vector construction (ratio / bound)", 1.0 + 1e-12);
    for _ in 0..opts.compatibility_samples {
        let n = rng.gen_range(3..=8);
        let mesh = match random_star(&mut rng, n, 0.15) {
            Ok(m) => m,
            Err(_) => {
                delta.fail();
                continue;
            }
        };
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Make the alternating sum vanish through the last trace.
        let alt = alternating_sum(&q);
        let last_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        q[n - 1] -= alt * last_sign;
        match solve_patch_compatibility(&mesh, 0, &q, true) {
            Ok(s) => {
                delta.record(s.residual);
                delta_bound.record(s.ratio / s.bound);
            }
            Err(_) => delta.fail(),
        }
    }
    vec![
        rot.summary,
        cond.summary,
        four.summary,
        cross.summary,
        delta.summary,
        delta_bound.summary,
    ]
}

/// Vertex values, means and orthogonality of the patch functions on random stars for
/// every degree in the range, and the Gram bound on random triangles.
pub fn run_bubble_checks(opts: &SuiteOptions) -> Vec<CheckSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let tol = 1e-11;
    let mut values = Tally::new("patch function vertex values", tol);
    let mut means = Tally::new("patch function means", tol);
    let mut ortho = Tally::new("patch function orthogonality", tol);
    let mut gram = Tally::new("Gram bound (lhs / rhs)", 1.0 + 1e-12);
    for _ in 0..opts.bubble_patches {
        let n = rng.gen_range(3..=8);
        let Ok(mesh) = random_star(&mut rng, n, 0.15) else {
            values.fail();
            continue;
        };
        for k in opts.degrees.clone() {
            for z in [0, 1] {
                let run = |rng: &mut ChaCha8Rng| -> Result<(f64, f64, f64), VerifyError> {
                    Ok((
                        bubble_vertex_deviation(&mesh, z, k)?,
                        bubble_mean_deviation(&mesh, z, k)?,
                        bubble_orthogonality_deviation(&mesh, z, k, rng)?,
                    ))
                };
                match run(&mut rng) {
                    Ok((a, b, c)) => {
                        values.record(a);
                        means.record(b);
                        ortho.record(c);
                    }
                    Err(_) => values.fail(),
                }
            }
        }
    }
    for _ in 0..opts.gram_samples {
        let Ok(mesh) = random_star(&mut rng, 3, 0.3) else {
            gram.fail();
            continue;
        };
        let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        for k in opts.degrees.clone() {
            match gram_bound(&mesh, 0, k, c) {
                Ok((l, r)) => gram.record(ratio(l, r)),
                Err(_) => gram.fail(),
            }
        }
    }
    vec![values.summary, means.summary, ortho.summary, gram.summary]
}

/// Ratio of the patch-divergence check for random degree-4 fields on criss-cross(1e-6)
/// at the centre, with `η = 1e-5`.
pub fn run_divergence_checks(opts: &SuiteOptions) -> Vec<CheckSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let mut tally = Tally::new("patch divergence (ratio / constant)", 1.0);
    let mut smooth = Tally::new("patch divergence, smooth field (ratio / constant)", 1.0);
    let setup = || -> Result<(Mesh, VelocityDofMap), VerifyError> {
        let mesh = Mesh::criss_cross(1e-6)?;
        let vel = VelocityDofMap::new(&mesh, 4);
        Ok((mesh, vel))
    };
    let Ok((mesh, vel)) = setup() else {
        tally.fail();
        return vec![tally.summary];
    };
    let eta = 1e-5;
    for _ in 0..opts.divergence_samples {
        let v: Vec<f64> = (0..vel.ndof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        match check_patch_divergence(&mesh, &vel, &v, 4, eta) {
            Ok(r) => tally.record(r.ratio() / PATCH_DIVERGENCE_CONSTANT),
            Err(_) => tally.fail(),
        }
    }
    // Interpolant of a smooth divergence-free field.
    let v = vel.interpolate(|p| {
        let (s, c) = (PI * p.x, PI * p.y);
        [s.sin().powi(2) * (2.0 * c).sin(), -(2.0 * s).sin() * c.sin().powi(2)]
    });
    match check_patch_divergence(&mesh, &vel, &v, 4, eta) {
        Ok(r) => smooth.record(r.ratio() / PATCH_DIVERGENCE_CONSTANT),
        Err(_) => smooth.fail(),
    }
    vec![tally.summary, smooth.summary]
}

/// Every check of the module.
pub fn run_suite(opts: &SuiteOptions) -> Vec<CheckSummary> {
    let mut out = run_bubble_checks(opts);
    out.extend(run_lemma_checks(opts));
    out.extend(run_divergence_checks(opts));
    out
}

/// Plain-text table of a suite run.
pub fn format_table(rows: &[CheckSummary]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!(
        "{:<width$}  {:>7}  {:>11}  {:>9}  result\n",
        "check", "samples", "worst", "limit"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<width$}  {:>7}  {:>11.3e}  {:>9.1e}  {}\n",
            r.name,
            r.samples,
            r.worst,
            r.limit,
            if r.passed() { "PASS" } else { "FAIL" }
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_identity_examples() {
        assert_eq!(check_rotation_identity(0.7, 0.7, 0.7), 0.0);
        assert!(check_rotation_identity(PI / 3.0, 0.0, PI / 6.0) <= 1e-14);
    }

    #[test]
    fn cond_bound_examples() {
        let (c, b) = check_cond_bound(PI / 2.0).unwrap();
        assert!((c - 1.0).abs() < 1e-14 && b == 2.0);
        let (c, b) = check_cond_bound(PI / 6.0).unwrap();
        assert!((c - 1.0 / (PI / 12.0).tan()).abs() < 1e-12, "{c}");
        assert!((b - 4.0).abs() < 1e-12 && c <= b);
        assert!(matches!(check_cond_bound(0.0), Err(VerifyError::DegenerateAngle(_))));
    }

    #[test]
    fn four_direction_equal_fields_give_zero() {
        let j = Matrix2::new(1.0, 2.0, -3.0, 0.5);
        let dirs = [0.1f64, 1.9, 3.0, 4.4].map(|a| Vector2::new(a.cos(), a.sin()));
        let p = FourDirectionPatch::new(dirs, std::array::from_fn(|_| QuadraticField::linear(j)));
        assert!((p.angles.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        let (lhs, rhs) = check_four_direction_inequality(&p).unwrap();
        assert_eq!(lhs, 0.0);
        assert!(rhs > 0.0);
    }

    #[test]
    fn four_direction_rejects_incompatible() {
        let dirs = [0.0f64, 1.5, 3.1, 4.7].map(|a| Vector2::new(a.cos(), a.sin()));
        let fields = std::array::from_fn(|j| QuadraticField::linear(Matrix2::identity() * j as f64));
        let p = FourDirectionPatch::new(dirs, fields);
        assert!(matches!(
            check_four_direction_inequality(&p),
            Err(VerifyError::IncompatibleFields(_))
        ));
    }

    #[test]
    fn exact_cross_has_no_alternating_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dirs = [0.0, 0.5, 1.0, 1.5].map(|a: f64| Vector2::new((a * PI).cos(), (a * PI).sin()));
        for _ in 0..20 {
            let p = FourDirectionPatch::compatible_fields(dirs, &mut rng);
            assert!(p.singular_distance() < 1e-15);
            let (lhs, _) = check_four_direction_inequality(&p).unwrap();
            assert!(lhs < 1e-14, "{lhs}");
        }
    }

    #[test]
    fn quadratic_field_jacobian_matches_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = FourDirectionPatch::random_compatible(&mut rng, 0.3);
        let f = &p.fields[2];
        let x = Vector2::new(0.3, -0.2);
        let h = 1e-6;
        let fd0 = (f.eval(x + Vector2::new(h, 0.0)) - f.eval(x - Vector2::new(h, 0.0))) / (2.0 * h);
        let j = f.jacobian_at(x);
        assert!((fd0 - j.column(0)).norm() < 1e-8);
    }

    fn cross_star() -> Mesh {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(-1.0, 0.0),
            Point2::new(0.0, -1.0),
        ];
        Mesh::new(v, &[[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]]).unwrap()
    }

    #[test]
    fn edge_vector_example() {
        let m = cross_star();
        let s = solve_patch_compatibility(&m, 0, &[1.0, 2.0, 2.0, 1.0], true).unwrap();
        let t = patch_tangents(&m, 0);
        let delta: Vec<f64> = s.vectors.iter().zip(&t).map(|(d, t)| d[0] * t.x + d[1] * t.y).collect();
        for (a, b) in delta.iter().zip([0.0, 1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(s.residual < 1e-14);
        assert!(s.bound_holds());
    }

    #[test]
    fn edge_vector_zero_and_violated() {
        let m = cross_star();
        let s = solve_patch_compatibility(&m, 0, &[0.0; 4], true).unwrap();
        assert!(s.vectors.iter().all(|d| d == &[0.0, 0.0]));
        assert!(matches!(
            solve_patch_compatibility(&m, 0, &[1.0, 2.0, 3.0, 4.0], true),
            Err(VerifyError::ConditionViolated(a)) if (a - 2.0).abs() < 1e-15
        ));
        assert!(matches!(
            solve_patch_compatibility(&m, 1, &[1.0; 2], true),
            Err(VerifyError::BoundaryVertex(1))
        ));
    }

    #[test]
    fn edge_vector_least_squares_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3, 5, 6] {
            let m = random_star(&mut rng, n, 0.3).unwrap();
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = solve_patch_compatibility(&m, 0, &q, false).unwrap();
            assert!(s.residual < 1e-12);
            assert!(s.bound_holds(), "{} > {}", s.ratio, s.bound);
        }
        // On an exact cross the general system is singular for traces with a nonzero
        // alternating sum.
        let m = cross_star();
        assert!(matches!(
            solve_patch_compatibility(&m, 0, &[1.0, 0.0, 0.0, 0.0], false),
            Err(VerifyError::InfeasibleSystem(_))
        ));
    }

    #[test]
    fn patch_divergence_of_zero_and_not_critical() {
        let m = Mesh::criss_cross(1e-6).unwrap();
        let vel = VelocityDofMap::new(&m, 4);
        let r = check_patch_divergence(&m, &vel, &vec![0.0; vel.ndof()], 4, 1e-5).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.ratio(), 0.0);
        assert!(matches!(
            check_patch_divergence(&m, &vel, &vec![0.0; vel.ndof()], 4, 1e-7),
            Err(VerifyError::NotCritical { vertex: 4, .. })
        ));
    }

    #[test]
    fn small_suite_passes() {
        let opts = SuiteOptions {
            rotation_samples: 50,
            cond_samples: 50,
            four_direction_samples: 30,
            compatibility_samples: 30,
            bubble_patches: 2,
            gram_samples: 3,
            divergence_samples: 5,
            degrees: 2..=5,
            ..Default::default()
        };
        let rows = run_suite(&opts);
        let table = format_table(&rows);
        assert!(rows.iter().all(|r| r.passed()), "{table}");
        assert_eq!(table.lines().count(), rows.len() + 1);
    }
}
