//! Direct solution of the constrained saddle-point system, error and divergence norms,
//! and a dense estimator of the inf-sup constant.
//!
//! The unknowns `(u, p, λ)` solve
//!
//! ```text
//! [  A  -Bᵀ  0 ] [u]   [f]
//! [ -B   0   Cᵀ] [p] = [0]
//! [  0   C   0 ] [λ]   [0]
//! ```
//!
//! so that `C p = 0` and `B u` is orthogonal to every pressure satisfying the
//! constraints.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{BasisTable, SaddleSystem};
use crate::linalg::{nested_dissection, norm2, norm_inf, null_space, CscMatrix, LuError, SparseLu, TripletMatrix};
use crate::mesh::{Mesh, Point2};
use crate::polynomials::{gauss_triangle, PolyError, QuadratureRule, TriangleGeometry};
use crate::spaces::{ConstraintLabel, ConstraintSet, CONSTRAINT_RANK_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("saddle-point system is singular: {0}")]
    SingularSystem(#[from] LuError),
    #[error("the constrained pressure space is empty")]
    EmptyPressureSpace,
    #[error("eigen solver failure: {0}")]
    EigSolverFailure(String),
    #[error(transparent)]
    Quadrature(#[from] PolyError),
}

/// Diagnostics of one direct solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub kkt_size: usize,
    pub constraint_rank: usize,
    pub dropped_constraints: Vec<ConstraintLabel>,
    pub factor_nnz: usize,
    pub pivot_ratio: f64,
    /// `‖A u - Bᵀ p - f‖ / max(‖f‖, ‖A u‖)`.
    pub momentum_residual: f64,
    /// `‖B u - Cᵀ λ‖ / ‖B‖_max‖u‖`.
    pub mass_residual: f64,
    /// `‖C p‖_∞ / ‖p‖_∞`.
    pub constraint_residual: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

/// Assembles the symmetric indefinite block matrix for the given constraint rows.
pub fn kkt_matrix(system: &SaddleSystem, constraints: &ConstraintSet) -> CscMatrix {
    let (nu, np, nc) = (system.a.ncols(), system.b.nrows(), constraints.len());
    let n = nu + np + nc;
    let nnz = system.a.nnz() + 2 * system.b.nnz() + 2 * system.pressure.ndof();
    let mut t = TripletMatrix::with_capacity(n, n, nnz);
    t.push_block(&system.a, 0, 0, 1.0);
    t.push_block_transposed(&system.b, 0, nu, -1.0);
    t.push_block(&system.b, nu, 0, -1.0);
    for (r, row) in constraints.rows.iter().enumerate() {
        for &(j, v) in &row.entries {
            t.push(nu + j, nu + np + r, v);
            t.push(nu + np + r, nu + j, v);
        }
    }
    t.to_csc()
}

/// Threshold for keeping diagonal pivots in the saddle-point factorisation. The ordering
/// already places every multiplier after a partner, so a small value keeps its fill;
/// iterative refinement recovers the accuracy.
const KKT_PIVOT_TOLERANCE: f64 = 1e-4;

/// Solves the system with its own constraint rows. Linearly dependent rows are
/// removed first.
pub fn solve_stokes(system: &SaddleSystem) -> Result<DiscreteSolution, SolveError> {
    let report = system.constraints.rank_report(system.pressure.ndof());
    let constraints = &report.independent;
    let (nu, np, nc) = (system.a.ncols(), system.b.nrows(), constraints.len());
    let kkt = kkt_matrix(system, constraints);
    let order = nested_dissection(&kkt);
    let lu = SparseLu::factor(&kkt, Some(&order), KKT_PIVOT_TOLERANCE)?;
    let mut rhs = vec![0.0; nu + np + nc];
    rhs[..nu].copy_from_slice(&system.f);
    let x = lu.solve_refined(&kkt, &rhs, 3);
    let u = x[..nu].to_vec();
    let p = x[nu..nu + np].to_vec();
    let lambda = x[nu + np..].to_vec();

    let au = system.a.mul_vec(&u);
    let btp = system.b.tr_mul_vec(&p);
    let mom: Vec<f64> = (0..nu).map(|i| au[i] - btp[i] - system.f[i]).collect();
    let bu = system.b.mul_vec(&u);
    let mut ct_l = vec![0.0; np];
    for (row, l) in constraints.rows.iter().zip(&lambda) {
        for &(j, v) in &row.entries {
            ct_l[j] += v * l;
        }
    }
    let mass: Vec<f64> = (0..np).map(|i| bu[i] - ct_l[i]).collect();
    let cp = constraints.apply(&p);
    let diagnostics = SolveDiagnostics {
        kkt_size: nu + np + nc,
        constraint_rank: report.rank,
        dropped_constraints: report.dropped,
        factor_nnz: lu.nnz(),
        pivot_ratio: lu.pivot_ratio(),
        momentum_residual: ratio(norm2(&mom), norm2(&system.f).max(norm2(&au))),
        mass_residual: ratio(norm2(&mass), system.b.max_abs() * norm2(&u)),
        constraint_residual: ratio(norm_inf(&cp), norm_inf(&p)),
    };
    log::debug!(
        "kkt n={} factor nnz={} pivot ratio={:e} residuals momentum={:e} mass={:e} constraint={:e}",
        diagnostics.kkt_size,
        diagnostics.factor_nnz,
        diagnostics.pivot_ratio,
        diagnostics.momentum_residual,
        diagnostics.mass_residual,
        diagnostics.constraint_residual
    );
    Ok(DiscreteSolution {
        u,
        p,
        lambda,
        diagnostics,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Evaluates discrete fields of one system on the points of a rule.
pub struct FieldEvaluator<'a> {
    system: &'a SaddleSystem,
    rule: QuadratureRule,
    velocity: BasisTable,
    pressure: BasisTable,
}

/// Values of the discrete velocity, its gradient and the pressure at one point.
#[derive(Debug, Clone, Copy)]
pub struct PointValues {
    pub point: Point2,
    pub weight: f64,
    pub u: [f64; 2],
    pub grad_u: [[f64; 2]; 2],
    pub p: f64,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(system: &'a SaddleSystem, degree: usize) -> Result<Self, PolyError> {
        let rule = gauss_triangle(degree)?;
        Ok(Self {
            velocity: BasisTable::new(system.velocity.basis(), &rule),
            pressure: BasisTable::new(system.pressure.basis(), &rule),
            system,
            rule,
        })
    }

    /// Calls `visit` at every rule point of triangle `t` with the physical weight.
    pub fn for_each_point(&self, mesh: &Mesh, t: usize, u: &[f64], p: &[f64], mut visit: impl FnMut(&PointValues)) {
        let geo = TriangleGeometry::of(mesh, t);
        let coef = self.system.velocity.local_coefficients(t, u);
        let pres = &self.system.pressure;
        let pc: Vec<f64> = (0..pres.local_dim()).map(|i| p[pres.dof(t, i)]).collect();
        for (q, (l, w)) in self.rule.iter().enumerate() {
            let mut val = [0.0; 2];
            let mut grad = [[0.0; 2]; 2];
            for (i, c) in coef.iter().enumerate() {
                let phi = self.velocity.values[q][i];
                let g = geo.gradient(&self.velocity.dlambda[q][i]);
                for comp in 0..2 {
                    val[comp] += c[comp] * phi;
                    grad[comp][0] += c[comp] * g[0];
                    grad[comp][1] += c[comp] * g[1];
                }
            }
            let pv: f64 = pc.iter().zip(&self.pressure.values[q]).map(|(a, b)| a * b).sum();
            visit(&PointValues {
                point: geo.point(l),
                weight: w * geo.area,
                u: val,
                grad_u: grad,
                p: pv,
            });
        }
    }
}

/// `‖div u_h‖_{L²(Ω)}`.
pub fn divergence_norm(mesh: &Mesh, system: &SaddleSystem, u: &[f64]) -> Result<f64, PolyError> {
    let ev = FieldEvaluator::new(system, 2 * system.degree)?;
    let zero = vec![0.0; system.pressure.ndof()];
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        ev.for_each_point(mesh, t, u, &zero, |v| {
            total += v.weight * (v.grad_u[0][0] + v.grad_u[1][1]).powi(2);
        });
    }
    Ok(total.sqrt())
}

/// `‖∇u_h‖_{L²(Ω)}`.
pub fn gradient_norm(mesh: &Mesh, system: &SaddleSystem, u: &[f64]) -> Result<f64, PolyError> {
    let ev = FieldEvaluator::new(system, 2 * system.degree)?;
    let zero = vec![0.0; system.pressure.ndof()];
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        ev.for_each_point(mesh, t, u, &zero, |v| {
            total += v.weight * v.grad_u.iter().flatten().map(|g| g * g).sum::<f64>();
        });
    }
    Ok(total.sqrt())
}

/// `(‖∇(u - u_h)‖, ‖p - p_h‖)` with the load quadrature of the system.
pub fn error_norms(
    mesh: &Mesh,
    system: &SaddleSystem,
    u: &[f64],
    p: &[f64],
    exact_grad_u: impl Fn(Point2) -> [[f64; 2]; 2],
    exact_p: impl Fn(Point2) -> f64,
) -> Result<(f64, f64), PolyError> {
    let ev = FieldEvaluator::new(system, system.load_degree)?;
    let (mut eu, mut ep) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        ev.for_each_point(mesh, t, u, p, |v| {
            let g = exact_grad_u(v.point);
            let mut s = 0.0;
            for c in 0..2 {
                for d in 0..2 {
                    s += (g[c][d] - v.grad_u[c][d]).powi(2);
                }
            }
            eu += v.weight * s;
            ep += v.weight * (exact_p(v.point) - v.p).powi(2);
        });
    }
    Ok((eu.sqrt(), ep.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupEstimate {
    pub beta: f64,
    /// Smallest eigenvalue of the pressure Schur complement on the constrained space.
    pub min_eigenvalue: f64,
    pub velocity_dim: usize,
    pub pressure_dim: usize,
}

/// Dense estimate of `inf_q sup_v b(v, q) / (‖v‖_{H¹} ‖q‖_{L²})` over pressures with
/// `C q = 0`.
pub fn estimate_infsup(system: &SaddleSystem, constraints: &ConstraintSet) -> Result<InfSupEstimate, SolveError> {
    let np = system.pressure.ndof();
    let (z, _, _) = null_space(&constraints.to_dense(np), CONSTRAINT_RANK_TOL);
    let m = z.ncols();
    if m == 0 {
        return Err(SolveError::EmptyPressureSpace);
    }
    let h = system.a.to_dense() + system.mu.to_dense();
    let l = h
        .cholesky()
        .ok_or_else(|| SolveError::EigSolverFailure("velocity Gram matrix is not positive definite".into()))?;
    let btz = system.b.to_dense().transpose() * &z;
    let w = l
        .l_dirty()
        .clone()
        .lower_triangle()
        .solve_lower_triangular(&btz)
        .ok_or_else(|| SolveError::EigSolverFailure("triangular solve failed".into()))?;
    let s = w.transpose() * &w;
    let mz = z.transpose() * system.mp.to_dense() * &z;
    let r = mz
        .cholesky()
        .ok_or_else(|| SolveError::EigSolverFailure("pressure Gram matrix is not positive definite".into()))?
        .l();
    // R⁻¹ S R⁻ᵀ
    let x = r
        .solve_lower_triangular(&s)
        .ok_or_else(|| SolveError::EigSolverFailure("triangular solve failed".into()))?;
    let t = r
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| SolveError::EigSolverFailure("triangular solve failed".into()))?;
    let t = 0.5 * (&t + t.transpose());
    let eig = SymmetricEigen::try_new(t, f64::EPSILON, 10_000)
        .ok_or_else(|| SolveError::EigSolverFailure("symmetric eigensolver did not converge".into()))?;
    let mu = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InfSupEstimate {
        beta: mu.max(0.0).sqrt(),
        min_eigenvalue: mu,
        velocity_dim: system.a.ncols(),
        pressure_dim: m,
    })
}

/// `Zᵀ B u` for an orthonormal basis `Z` of the constrained pressures, in the max norm.
pub fn constrained_mass_residual(system: &SaddleSystem, constraints: &ConstraintSet, u: &[f64]) -> f64 {
    let (z, _, _) = null_space(&constraints.to_dense(system.pressure.ndof()), CONSTRAINT_RANK_TOL);
    let bu = nalgebra::DVector::from_vec(system.b.mul_vec(u));
    let r: DMatrix<f64> = z.transpose() * DMatrix::from_column_slice(bu.len(), 1, bu.as_slice());
    r.amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::AssemblyOptions;
    use crate::bench::ManufacturedSolution;

    fn zero(_: Point2) -> [f64; 2] {
        [0.0, 0.0]
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let m = Mesh::criss_cross(0.01).unwrap().red_refine().unwrap();
        let s = SaddleSystem::assemble(&m, 4, &[4], &zero, AssemblyOptions::default()).unwrap();
        let sol = solve_stokes(&s).unwrap();
        assert!(norm_inf(&sol.u) == 0.0 && norm_inf(&sol.p) == 0.0);
    }

    #[test]
    fn manufactured_solve_residuals() {
        let ms = ManufacturedSolution::new();
        let m = Mesh::criss_cross(0.01).unwrap().refined(2).unwrap();
        let s = SaddleSystem::assemble(&m, 4, &[4], &|p| ms.force(p), AssemblyOptions::default()).unwrap();
        let sol = solve_stokes(&s).unwrap();
        let d = &sol.diagnostics;
        assert!(d.momentum_residual <= 1e-10, "{d:?}");
        assert!(d.constraint_residual <= 1e-10, "{d:?}");
        assert!(constrained_mass_residual(&s, &s.constraints, &sol.u) <= 1e-10 * norm_inf(&sol.u).max(1.0));
    }

    #[test]
    fn zero_velocity_error_is_the_gradient_norm() {
        // ‖∇u‖² = Σ_c ∫|∇u_c|²; for this field it equals 3π²/16 · ... computed by a fine
        // tensor rule instead of trusting the closed form.
        let ms = ManufacturedSolution::new();
        let m = Mesh::criss_cross(0.0).unwrap().refined(1).unwrap();
        let s = SaddleSystem::assemble(&m, 4, &[], &zero, AssemblyOptions::default()).unwrap();
        let (eu, _) = error_norms(
            &m,
            &s,
            &vec![0.0; s.a.ncols()],
            &vec![0.0; s.b.nrows()],
            |p| ms.velocity_gradient(p),
            |p| ms.pressure(p),
        )
        .unwrap();
        let (x, w) = crate::polynomials::gauss_legendre(40);
        let mut exact = 0.0;
        for (xa, wa) in x.iter().zip(&w) {
            for (xb, wb) in x.iter().zip(&w) {
                let g = ms.velocity_gradient(Point2::new(0.5 * (xa + 1.0), 0.5 * (xb + 1.0)));
                exact += 0.25 * wa * wb * g.iter().flatten().map(|v| v * v).sum::<f64>();
            }
        }
        assert!((eu - exact.sqrt()).abs() < 1e-10, "{eu} vs {}", exact.sqrt());
    }

    #[test]
    fn empty_pressure_space() {
        let m = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            &[[0, 1, 2]],
        )
        .unwrap();
        let s = SaddleSystem::assemble(&m, 1, &[0, 1, 2], &zero, AssemblyOptions::default()).unwrap();
        assert_eq!(estimate_infsup(&s, &s.constraints), Err(SolveError::EmptyPressureSpace));
    }
}
