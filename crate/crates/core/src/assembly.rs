//! Assembly of the velocity, divergence and mass blocks and the load vector.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{CscMatrix, TripletMatrix};
use crate::mesh::{Mesh, Point2};
use crate::polynomials::{gauss_triangle, PolyError, QuadratureRule, ReferenceBasis, TriangleGeometry};
use crate::spaces::{build_constraints, ConstraintSet, PressureDofMap, VelocityDofMap};

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("quadrature unsupported: {0}")]
    QuadratureUnsupported(#[from] PolyError),
    #[error("velocity degree must be at least 1, got {0}")]
    InvalidDegree(usize),
}

/// Basis values and barycentric derivatives at the points of a rule.
pub struct BasisTable {
    pub values: Vec<Vec<f64>>,
    pub dlambda: Vec<Vec<[f64; 3]>>,
}

impl BasisTable {
    pub fn new(basis: &ReferenceBasis, rule: &QuadratureRule) -> Self {
        Self {
            values: rule.points.iter().map(|l| basis.eval(l)).collect(),
            dlambda: rule.points.iter().map(|l| basis.eval_grad_bary(l)).collect(),
        }
    }
}

/// Physical gradients of all basis functions at each rule point of one triangle.
fn physical_gradients(table: &BasisTable, geo: &TriangleGeometry) -> Vec<Vec<[f64; 2]>> {
    table
        .dlambda
        .iter()
        .map(|row| row.iter().map(|d| geo.gradient(d)).collect())
        .collect()
}

/// Scalar element stiffness and mass of the velocity basis on triangle `t`.
fn scalar_element(table: &BasisTable, rule: &QuadratureRule, geo: &TriangleGeometry, want_stiffness: bool) -> Vec<f64> {
    let n = table.values[0].len();
    let mut m = vec![0.0; n * n];
    if want_stiffness {
        let grads = physical_gradients(table, geo);
        for (q, w) in rule.weights.iter().enumerate() {
            let w = w * geo.area;
            let g = &grads[q];
            for i in 0..n {
                for j in i..n {
                    m[i * n + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
    } else {
        for (q, w) in rule.weights.iter().enumerate() {
            let w = w * geo.area;
            let v = &table.values[q];
            for i in 0..n {
                for j in i..n {
                    m[i * n + j] += w * v[i] * v[j];
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    m
}

fn assemble_vector_operator(mesh: &Mesh, vel: &VelocityDofMap, rule: &QuadratureRule, stiffness: bool) -> CscMatrix {
    let table = BasisTable::new(vel.basis(), rule);
    let nf = vel.num_free_nodes();
    let blocks: Vec<(Vec<Option<usize>>, Vec<f64>)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let geo = TriangleGeometry::of(mesh, t);
            (
                vel.cell_free(t).collect(),
                scalar_element(&table, rule, &geo, stiffness),
            )
        })
        .collect();
    let mut trip = TripletMatrix::new(2 * nf, 2 * nf);
    for (free, m) in &blocks {
        let n = free.len();
        for (i, fi) in free.iter().enumerate() {
            let Some(fi) = fi else { continue };
            for (j, fj) in free.iter().enumerate() {
                let Some(fj) = fj else { continue };
                let v = m[i * n + j];
                trip.push(*fi, *fj, v);
                trip.push(nf + fi, nf + fj, v);
            }
        }
    }
    trip.to_csc()
}

/// `∫ ∇φ_i : ∇φ_j` over the free velocity dofs.
pub fn assemble_stiffness(mesh: &Mesh, vel: &VelocityDofMap, rule: &QuadratureRule) -> CscMatrix {
    assemble_vector_operator(mesh, vel, rule, true)
}

/// `∫ φ_i · φ_j` over the free velocity dofs.
pub fn assemble_velocity_mass(mesh: &Mesh, vel: &VelocityDofMap, rule: &QuadratureRule) -> CscMatrix {
    assemble_vector_operator(mesh, vel, rule, false)
}

/// `B[m][i] = ∫ ψ_m div φ_i`, rows indexed by pressure dofs.
pub fn assemble_divergence(
    mesh: &Mesh,
    vel: &VelocityDofMap,
    pres: &PressureDofMap,
    rule: &QuadratureRule,
) -> CscMatrix {
    let vt = BasisTable::new(vel.basis(), rule);
    let pt = BasisTable::new(pres.basis(), rule);
    let nf = vel.num_free_nodes();
    let (nv, np) = (vel.basis().dim(), pres.local_dim());
    let blocks: Vec<Vec<f64>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let geo = TriangleGeometry::of(mesh, t);
            let grads = physical_gradients(&vt, &geo);
            // Layout: [m][c][i] for pressure m, component c, velocity node i.
            let mut b = vec![0.0; np * 2 * nv];
            for (q, w) in rule.weights.iter().enumerate() {
                let w = w * geo.area;
                for (m, psi) in pt.values[q].iter().enumerate() {
                    let wp = w * psi;
                    for (i, g) in grads[q].iter().enumerate() {
                        b[(m * 2) * nv + i] += wp * g[0];
                        b[(m * 2 + 1) * nv + i] += wp * g[1];
                    }
                }
            }
            b
        })
        .collect();
    let mut trip = TripletMatrix::new(pres.ndof(), 2 * nf);
    for (t, b) in blocks.iter().enumerate() {
        let free: Vec<Option<usize>> = vel.cell_free(t).collect();
        for m in 0..np {
            let row = pres.dof(t, m);
            for c in 0..2 {
                for (i, f) in free.iter().enumerate() {
                    if let Some(s) = f {
                        trip.push(row, c * nf + s, b[(m * 2 + c) * nv + i]);
                    }
                }
            }
        }
    }
    trip.to_csc()
}

/// Block-diagonal `∫ ψ_m ψ_n`.
pub fn assemble_pressure_mass(mesh: &Mesh, pres: &PressureDofMap, rule: &QuadratureRule) -> CscMatrix {
    let table = BasisTable::new(pres.basis(), rule);
    let n = pres.local_dim();
    let mut trip = TripletMatrix::new(pres.ndof(), pres.ndof());
    for t in 0..mesh.num_triangles() {
        let geo = TriangleGeometry::of(mesh, t);
        let m = scalar_element(&table, rule, &geo, false);
        for i in 0..n {
            for j in 0..n {
                trip.push(pres.dof(t, i), pres.dof(t, j), m[i * n + j]);
            }
        }
    }
    trip.to_csc()
}

/// `f_i = ∫ f · φ_i` over the free velocity dofs.
pub fn assemble_load<F>(mesh: &Mesh, vel: &VelocityDofMap, rule: &QuadratureRule, f: &F) -> Vec<f64>
where
    F: Fn(Point2) -> [f64; 2] + Sync,
{
    let table = BasisTable::new(vel.basis(), rule);
    let nf = vel.num_free_nodes();
    let n = vel.basis().dim();
    let locals: Vec<Vec<[f64; 2]>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let geo = TriangleGeometry::of(mesh, t);
            let mut loc = vec![[0.0; 2]; n];
            for (q, (l, w)) in rule.iter().enumerate() {
                let fv = f(geo.point(l));
                let w = w * geo.area;
                for (i, phi) in table.values[q].iter().enumerate() {
                    loc[i][0] += w * fv[0] * phi;
                    loc[i][1] += w * fv[1] * phi;
                }
            }
            loc
        })
        .collect();
    let mut out = vec![0.0; 2 * nf];
    for (t, loc) in locals.iter().enumerate() {
        for (i, fr) in vel.cell_free(t).enumerate() {
            if let Some(s) = fr {
                out[s] += loc[i][0];
                out[nf + s] += loc[i][1];
            }
        }
    }
    out
}

/// The blocks of the discrete Stokes problem for velocity degree `k` and pressure
/// degree `k - 1`, with alternating constraints at the given vertices.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub degree: usize,
    pub velocity: VelocityDofMap,
    pub pressure: PressureDofMap,
    pub a: CscMatrix,
    pub b: CscMatrix,
    pub mu: CscMatrix,
    pub mp: CscMatrix,
    pub f: Vec<f64>,
    pub constraints: ConstraintSet,
    /// Degree of the rule used for the load and for error norms.
    pub load_degree: usize,
}

/// Options for [`SaddleSystem::assemble`].
#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    /// Extra degree on top of `2k` for the load integration.
    pub quad_bump: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quad_bump: 6 }
    }
}

impl SaddleSystem {
    pub fn assemble<F>(
        mesh: &Mesh,
        k: usize,
        critical: &[usize],
        force: &F,
        opts: AssemblyOptions,
    ) -> Result<Self, AssemblyError>
    where
        F: Fn(Point2) -> [f64; 2] + Sync,
    {
        if k == 0 {
            return Err(AssemblyError::InvalidDegree(k));
        }
        let velocity = VelocityDofMap::new(mesh, k);
        let pressure = PressureDofMap::new(mesh, k);
        let rule = gauss_triangle(2 * k)?;
        let load_degree = 2 * k + opts.quad_bump;
        let load_rule = gauss_triangle(load_degree)?;
        let a = assemble_stiffness(mesh, &velocity, &rule);
        let mu = assemble_velocity_mass(mesh, &velocity, &rule);
        let b = assemble_divergence(mesh, &velocity, &pressure, &rule);
        let mp = assemble_pressure_mass(mesh, &pressure, &rule);
        let f = assemble_load(mesh, &velocity, &load_rule, force);
        let constraints = build_constraints(mesh, &pressure, critical);
        Ok(Self {
            degree: k,
            velocity,
            pressure,
            a,
            b,
            mu,
            mp,
            f,
            constraints,
            load_degree,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_force(_: Point2) -> [f64; 2] {
        [0.0, 0.0]
    }

    #[test]
    fn stiffness_is_symmetric_positive() {
        let m = Mesh::criss_cross(0.1).unwrap().red_refine().unwrap();
        let s = SaddleSystem::assemble(&m, 4, &[], &zero_force, AssemblyOptions::default()).unwrap();
        assert!(s.a.asymmetry() <= 1e-12 * s.a.max_abs());
        assert!(s.mp.asymmetry() <= 1e-12 * s.mp.max_abs());
        let x: Vec<f64> = (0..s.a.ncols()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let ax = s.a.mul_vec(&x);
        assert!(x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>() > 0.0);
        assert!(s.f.iter().all(|&v| v == 0.0));
        assert!(s.mp.to_dense().cholesky().is_some());
    }

    #[test]
    fn constants_and_rotations_before_boundary_elimination() {
        let m = Mesh::criss_cross(0.07).unwrap().red_refine().unwrap();
        let vel = VelocityDofMap::without_boundary_conditions(&m, 4);
        let pres = PressureDofMap::new(&m, 4);
        let rule = gauss_triangle(8).unwrap();
        let a = assemble_stiffness(&m, &vel, &rule);
        let b = assemble_divergence(&m, &vel, &pres, &rule);

        let c = vel.interpolate(|_| [1.0, -2.0]);
        assert!(a.mul_vec(&c).iter().all(|v| v.abs() < 1e-12));

        let rot = vel.interpolate(|p| [-p.y, p.x]);
        assert!(b.mul_vec(&rot).iter().all(|v| v.abs() < 1e-12));

        // Pairing div(x, 0) = 1 with the constant pressure gives |Ω|.
        let stretch = vel.interpolate(|p| [p.x, 0.0]);
        // Lagrange bases sum to one, so the all-ones coefficient vector is the constant 1.
        let one = vec![1.0; pres.ndof()];
        let total: f64 = b.mul_vec(&stretch).iter().zip(&one).map(|(a, b)| a * b).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_linear_stiffness() {
        let m = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            &[[0, 1, 2]],
        )
        .unwrap();
        let vel = VelocityDofMap::without_boundary_conditions(&m, 1);
        let a = assemble_stiffness(&m, &vel, &gauss_triangle(2).unwrap());
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.get(i, j) - want[i][j]).abs() < 1e-15);
                assert!((a.get(3 + i, 3 + j) - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn load_partition_of_unity() {
        // Σ_i ∫φ_i over all nodes equals |Ω|; restricted to a triangle fully inside the
        // domain the free dofs see the full element integral.
        let m = Mesh::criss_cross(0.0).unwrap().red_refine().unwrap();
        let vel = VelocityDofMap::new(&m, 3);
        let f = assemble_load(&m, &vel, &gauss_triangle(6).unwrap(), &|_| [1.0, 0.0]);
        let nf = vel.num_free_nodes();
        assert!(f[nf..].iter().all(|&v| v == 0.0));
        let total: f64 = f[..nf].iter().sum();
        // Boundary nodes carry the missing mass, so the free total is below |Ω|.
        assert!(total > 0.0 && total < 1.0);
    }
}
