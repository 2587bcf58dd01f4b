//! Degree-of-freedom maps for continuous velocities and discontinuous pressures, and
//! the linear constraints that select the wired pressure subspace.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::null_space;
use crate::mesh::{Mesh, Point2};
use crate::polynomials::{gauss_triangle, NodeKind, ReferenceBasis, TriangleGeometry};
use crate::singularity::{eta_critical_set, SingularityError};

/// Relative threshold on the pivots of the constraint factorisation below which a row
/// is treated as a combination of the others.
pub const CONSTRAINT_RANK_TOL: f64 = 1e-10;

/// Continuous vector-valued Lagrange space of degree `k` with homogeneous Dirichlet
/// conditions. Free scalar nodes are numbered `0..n_free`; velocity dof `c * n_free + s`
/// is component `c` of free node `s`.
#[derive(Debug, Clone)]
pub struct VelocityDofMap {
    degree: usize,
    basis: ReferenceBasis,
    /// Global scalar node of each (triangle, local node).
    cell_nodes: Vec<Vec<usize>>,
    /// Free index of every global scalar node, `None` on the boundary.
    free: Vec<Option<usize>>,
    n_free: usize,
    node_points: Vec<Point2>,
}

impl VelocityDofMap {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        Self::build(mesh, degree, true)
    }

    /// The same space without boundary conditions: every node is free.
    pub fn without_boundary_conditions(mesh: &Mesh, degree: usize) -> Self {
        Self::build(mesh, degree, false)
    }

    fn build(mesh: &Mesh, degree: usize, dirichlet: bool) -> Self {
        assert!(degree >= 1, "continuous velocities need degree at least 1");
        if degree < 4 {
            log::warn!("velocity degree {degree} is below 4; the pair may be unstable");
        }
        let k = degree;
        let basis = ReferenceBasis::new(k);
        let (nv, ne, nt) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles());
        let n_int = basis.num_interior();
        let n_nodes = nv + ne * (k - 1) + nt * n_int;
        let mut cell_nodes = Vec::with_capacity(nt);
        let mut on_boundary = vec![false; n_nodes];
        let mut node_points = vec![Point2::new(0.0, 0.0); n_nodes];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let te = mesh.triangle_edges(t);
            let geo = TriangleGeometry::of(mesh, t);
            let nodes: Vec<usize> = basis
                .kinds()
                .iter()
                .enumerate()
                .map(|(i, kind)| {
                    let g = match *kind {
                        NodeKind::Vertex(v) => {
                            let g = tri.vertices[v];
                            on_boundary[g] = mesh.is_boundary_vertex(g);
                            g
                        }
                        NodeKind::Edge { edge, position } => {
                            let ge = te[edge];
                            let e = &mesh.edges()[ge];
                            let start = tri.vertices[(edge + 1) % 3];
                            let gp = if start == e.vertices[0] { position } else { k - position };
                            let g = nv + ge * (k - 1) + gp - 1;
                            on_boundary[g] = e.is_boundary;
                            g
                        }
                        NodeKind::Interior(n) => nv + ne * (k - 1) + t * n_int + n,
                    };
                    node_points[g] = geo.point(&basis.node(i));
                    g
                })
                .collect();
            cell_nodes.push(nodes);
        }
        let mut free = vec![None; n_nodes];
        let mut n_free = 0;
        for (g, f) in free.iter_mut().enumerate() {
            if !(dirichlet && on_boundary[g]) {
                *f = Some(n_free);
                n_free += 1;
            }
        }
        Self {
            degree,
            basis,
            cell_nodes,
            free,
            n_free,
            node_points,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    /// Number of free scalar nodes.
    pub fn num_free_nodes(&self) -> usize {
        self.n_free
    }

    /// Number of velocity unknowns (two components per free node).
    pub fn ndof(&self) -> usize {
        2 * self.n_free
    }

    pub fn num_nodes(&self) -> usize {
        self.free.len()
    }

    /// Global scalar nodes of triangle `t`.
    pub fn cell_nodes(&self, t: usize) -> &[usize] {
        &self.cell_nodes[t]
    }

    /// Free index of each local node of triangle `t`.
    pub fn cell_free(&self, t: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        self.cell_nodes[t].iter().map(|&g| self.free[g])
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free[node]
    }

    /// Global scalar nodes on the boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.free.len()).filter(|&g| self.free[g].is_none()).collect()
    }

    pub fn node_point(&self, node: usize) -> Point2 {
        self.node_points[node]
    }

    /// Nodal interpolant of `f` as a free-dof vector. Boundary values are dropped.
    pub fn interpolate(&self, f: impl Fn(Point2) -> [f64; 2]) -> Vec<f64> {
        let mut u = vec![0.0; self.ndof()];
        for (g, free) in self.free.iter().enumerate() {
            if let Some(s) = free {
                let v = f(self.node_points[g]);
                u[*s] = v[0];
                u[self.n_free + s] = v[1];
            }
        }
        u
    }

    /// Local coefficients `[u_x, u_y]` of triangle `t` for the free-dof vector `u`.
    pub fn local_coefficients(&self, t: usize, u: &[f64]) -> Vec<[f64; 2]> {
        self.cell_free(t)
            .map(|f| match f {
                Some(s) => [u[s], u[self.n_free + s]],
                None => [0.0, 0.0],
            })
            .collect()
    }
}

/// Discontinuous Lagrange space of degree `k - 1`; dof `t * n_loc + i`.
#[derive(Debug, Clone)]
pub struct PressureDofMap {
    degree: usize,
    basis: ReferenceBasis,
    num_triangles: usize,
}

impl PressureDofMap {
    /// Pressures paired with velocities of degree `velocity_degree ≥ 1`.
    pub fn new(mesh: &Mesh, velocity_degree: usize) -> Self {
        assert!(velocity_degree >= 1);
        let degree = velocity_degree - 1;
        Self {
            degree,
            basis: ReferenceBasis::new(degree),
            num_triangles: mesh.num_triangles(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    /// `k (k + 1) / 2` for velocity degree `k`.
    pub fn local_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn ndof(&self) -> usize {
        self.num_triangles * self.local_dim()
    }

    pub fn dof(&self, t: usize, i: usize) -> usize {
        t * self.local_dim() + i
    }
}

/// Origin of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintLabel {
    MeanZero,
    Vertex(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub label: ConstraintLabel,
    /// `(pressure dof, coefficient)` pairs.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub rows: Vec<ConstraintRow>,
}

/// Outcome of checking the constraint rows for linear dependence.
#[derive(Debug, Clone)]
pub struct ConstraintRank {
    pub rank: usize,
    pub independent: ConstraintSet,
    pub dropped: Vec<ConstraintLabel>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<ConstraintLabel> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn to_dense(&self, ncols: usize) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.rows.len(), ncols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, v) in &row.entries {
                c[(r, j)] += v;
            }
        }
        c
    }

    /// `C p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.entries.iter().map(|&(j, v)| v * p[j]).sum())
            .collect()
    }

    /// Rank of the rows and a maximal independent subset. Dependent rows are dropped
    /// with a warning.
    pub fn rank_report(&self, ncols: usize) -> ConstraintRank {
        let (_, rank, keep) = null_space(&self.to_dense(ncols), CONSTRAINT_RANK_TOL);
        let mut kept = vec![false; self.rows.len()];
        for &r in &keep {
            kept[r] = true;
        }
        let dropped: Vec<ConstraintLabel> = self
            .rows
            .iter()
            .zip(&kept)
            .filter(|(_, k)| !**k)
            .map(|(r, _)| r.label)
            .collect();
        for label in &dropped {
            log::warn!("dropping linearly dependent pressure constraint {label:?}");
        }
        ConstraintRank {
            rank,
            independent: ConstraintSet {
                rows: keep.iter().map(|&r| self.rows[r].clone()).collect(),
            },
            dropped,
        }
    }
}

/// Mean-value row plus one alternating row for each vertex in `critical`.
pub fn build_constraints(mesh: &Mesh, pressure: &PressureDofMap, critical: &[usize]) -> ConstraintSet {
    let basis = pressure.basis();
    let rule = gauss_triangle(pressure.degree()).expect("low-degree rule exists");
    let ref_integrals: Vec<f64> = (0..basis.dim())
        .map(|i| rule.iter().map(|(l, w)| w * basis.eval(l)[i]).sum())
        .collect();
    let mut mean = Vec::with_capacity(pressure.ndof());
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        for (i, r) in ref_integrals.iter().enumerate() {
            mean.push((pressure.dof(t, i), area * r));
        }
    }
    let mut rows = vec![ConstraintRow {
        label: ConstraintLabel::MeanZero,
        entries: mean,
    }];
    for &z in critical {
        let patch = mesh.vertex_patch(z);
        let mut entries = Vec::new();
        for (pos, &t) in patch.triangles.iter().enumerate() {
            let sign = if pos % 2 == 0 { -1.0 } else { 1.0 };
            let mut lam = [0.0; 3];
            lam[mesh.local_index(t, z).expect("patch triangle contains z")] = 1.0;
            for (i, v) in basis.eval(&lam).into_iter().enumerate() {
                if v.abs() > 1e-14 {
                    entries.push((pressure.dof(t, i), sign * v));
                }
            }
        }
        rows.push(ConstraintRow {
            label: ConstraintLabel::Vertex(z),
            entries,
        });
    }
    ConstraintSet { rows }
}

/// [`build_constraints`] for the `eta`-critical vertices of `mesh`.
pub fn build_constraints_eta(
    mesh: &Mesh,
    pressure: &PressureDofMap,
    eta: f64,
) -> Result<ConstraintSet, SingularityError> {
    Ok(build_constraints(mesh, pressure, &eta_critical_set(mesh, eta)?))
}

/// Dimension of the constrained pressure space.
pub fn pressure_subspace_dim(constraints: &ConstraintSet, pressure: &PressureDofMap) -> usize {
    pressure.ndof() - constraints.rank_report(pressure.ndof()).rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> Mesh {
        Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            &[[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn velocity_counts() {
        let cc = Mesh::criss_cross(0.0).unwrap();
        assert_eq!(VelocityDofMap::new(&cc, 4).ndof(), 50);
        assert_eq!(VelocityDofMap::new(&reference(), 4).ndof(), 6);
        assert_eq!(VelocityDofMap::without_boundary_conditions(&reference(), 4).ndof(), 30);
        let fine = cc.refined(2).unwrap();
        for k in 1..=6 {
            let v = VelocityDofMap::new(&fine, k);
            let nodes = fine.num_vertices()
                + (k - 1) * fine.num_edges()
                + (k - 1) * (k.saturating_sub(2)) / 2 * fine.num_triangles();
            assert_eq!(v.num_nodes(), nodes);
            let boundary = fine.num_boundary_edges() * k;
            assert_eq!(v.ndof(), 2 * (nodes - boundary));
        }
    }

    #[test]
    fn shared_nodes_have_one_position() {
        let m = Mesh::criss_cross(0.13).unwrap().red_refine().unwrap();
        let v = VelocityDofMap::new(&m, 5);
        for t in 0..m.num_triangles() {
            let geo = TriangleGeometry::of(&m, t);
            for (i, &g) in v.cell_nodes(t).iter().enumerate() {
                assert!(geo.point(&v.basis().node(i)).dist(v.node_point(g)) < 1e-14);
            }
        }
    }

    #[test]
    fn pressure_counts() {
        let cc = Mesh::criss_cross(0.0).unwrap();
        assert_eq!(PressureDofMap::new(&cc, 4).ndof(), 40);
        assert_eq!(PressureDofMap::new(&reference(), 4).ndof(), 10);
        assert_eq!(PressureDofMap::new(&cc.red_refine().unwrap(), 4).ndof(), 160);
    }

    #[test]
    fn constraint_rows() {
        let cc = Mesh::criss_cross(0.0).unwrap();
        let p = PressureDofMap::new(&cc, 4);
        let c = build_constraints_eta(&cc, &p, 0.0).unwrap();
        assert_eq!(c.labels(), vec![ConstraintLabel::MeanZero, ConstraintLabel::Vertex(4)]);
        assert_eq!(c.rows[1].entries.len(), 4);
        assert_eq!(pressure_subspace_dim(&c, &p), 38);

        let tri = reference();
        let pt = PressureDofMap::new(&tri, 4);
        let c = build_constraints_eta(&tri, &pt, 0.0).unwrap();
        // A corner in a single triangle forces the pressure to vanish there.
        for row in &c.rows[1..] {
            assert_eq!(row.entries.len(), 1);
            assert_eq!(row.entries[0].1, -1.0);
        }
        assert_eq!(pressure_subspace_dim(&c, &pt), 6);
    }

    #[test]
    fn eta_monotone_dimension() {
        let m = Mesh::criss_cross(0.01).unwrap();
        let p = PressureDofMap::new(&m, 4);
        let d0 = pressure_subspace_dim(&build_constraints_eta(&m, &p, 0.0).unwrap(), &p);
        let d1 = pressure_subspace_dim(&build_constraints_eta(&m, &p, 0.05).unwrap(), &p);
        assert_eq!(d0, p.ndof() - 1);
        assert_eq!(d0 - d1, 1);
    }

    #[test]
    fn dependent_rows_are_dropped() {
        // With k = 1 the pressure is piecewise constant on one triangle: the mean row
        // and all three corner rows constrain the same single dof.
        let tri = reference();
        let p = PressureDofMap::new(&tri, 1);
        let c = build_constraints_eta(&tri, &p, 0.0).unwrap();
        let r = c.rank_report(p.ndof());
        assert_eq!(r.rank, 1);
        assert_eq!(r.dropped.len(), 3);
        assert_eq!(r.independent.len(), 1);
    }
}
