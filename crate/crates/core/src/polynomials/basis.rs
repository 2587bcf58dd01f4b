//! Nodal Lagrange bases on the principal lattice of a triangle.

/// Where a lattice node sits on the reference triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(usize),
    /// Node `position` (1-based) on local edge `edge`, counted from vertex
    /// `(edge + 1) % 3` towards vertex `(edge + 2) % 3`.
    Edge {
        edge: usize,
        position: usize,
    },
    Interior(usize),
}

/// Lagrange basis of degree `k` on the equispaced lattice `λ = a / k`.
///
/// Nodes are ordered vertices first, then the `k - 1` nodes of each local edge
/// (edge `e` is opposite vertex `e`), then interior nodes.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    degree: usize,
    indices: Vec<[usize; 3]>,
    kinds: Vec<NodeKind>,
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Self {
        let k = degree;
        let mut indices = Vec::new();
        let mut kinds = Vec::new();
        if k == 0 {
            indices.push([0, 0, 0]);
            kinds.push(NodeKind::Interior(0));
            return Self { degree, indices, kinds };
        }
        for v in 0..3 {
            let mut a = [0; 3];
            a[v] = k;
            indices.push(a);
            kinds.push(NodeKind::Vertex(v));
        }
        for edge in 0..3 {
            let (s, f) = ((edge + 1) % 3, (edge + 2) % 3);
            for position in 1..k {
                let mut a = [0; 3];
                a[s] = k - position;
                a[f] = position;
                indices.push(a);
                kinds.push(NodeKind::Edge { edge, position });
            }
        }
        let mut n = 0;
        for a1 in 1..k {
            for a2 in 1..k - a1 {
                indices.push([k - a1 - a2, a1, a2]);
                kinds.push(NodeKind::Interior(n));
                n += 1;
            }
        }
        Self { degree, indices, kinds }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions, `(k + 1)(k + 2) / 2`.
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn num_interior(&self) -> usize {
        if self.degree == 0 {
            1
        } else {
            (self.degree - 1) * (self.degree.saturating_sub(2)) / 2
        }
    }

    /// Barycentric coordinates of node `i`.
    pub fn node(&self, i: usize) -> [f64; 3] {
        if self.degree == 0 {
            return [1.0 / 3.0; 3];
        }
        let k = self.degree as f64;
        self.indices[i].map(|a| a as f64 / k)
    }

    /// `R_a(λ) = Π_{m<a} (kλ - m) / (m + 1)` and its derivative in `λ`.
    fn factor(&self, a: usize, lam: f64) -> (f64, f64) {
        let k = self.degree as f64;
        let mut val = 1.0;
        let mut der = 0.0;
        for m in 0..a {
            let m = m as f64;
            let f = (k * lam - m) / (m + 1.0);
            let df = k / (m + 1.0);
            der = der * f + val * df;
            val *= f;
        }
        (val, der)
    }

    /// Values of all basis functions at barycentric point `lam`.
    pub fn eval(&self, lam: &[f64; 3]) -> Vec<f64> {
        self.indices
            .iter()
            .map(|a| (0..3).map(|c| self.factor(a[c], lam[c]).0).product())
            .collect()
    }

    /// Partial derivatives of all basis functions with respect to the three barycentric
    /// coordinates, treated as independent variables.
    pub fn eval_grad_bary(&self, lam: &[f64; 3]) -> Vec<[f64; 3]> {
        self.indices
            .iter()
            .map(|a| {
                let f: [(f64, f64); 3] = [0, 1, 2].map(|c| self.factor(a[c], lam[c]));
                [
                    f[0].1 * f[1].0 * f[2].0,
                    f[0].0 * f[1].1 * f[2].0,
                    f[0].0 * f[1].0 * f[2].1,
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point2;
    use crate::polynomials::TriangleGeometry;

    fn lattice_dim(k: usize) -> usize {
        (k + 1) * (k + 2) / 2
    }

    #[test]
    fn cardinality_and_kronecker() {
        for k in 0..=8 {
            let b = ReferenceBasis::new(k);
            assert_eq!(b.dim(), lattice_dim(k));
            for i in 0..b.dim() {
                let v = b.eval(&b.node(i));
                for (j, x) in v.iter().enumerate() {
                    let want = (i == j) as u8 as f64;
                    assert!((x - want).abs() < 1e-12, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn node_layout() {
        let b = ReferenceBasis::new(4);
        assert_eq!(b.num_interior(), 3);
        assert_eq!(b.kinds()[0], NodeKind::Vertex(0));
        assert_eq!(b.kinds()[3], NodeKind::Edge { edge: 0, position: 1 });
        // First node of edge 0 is next to vertex 1.
        assert_eq!(b.node(3), [0.0, 0.75, 0.25]);
        assert_eq!(
            b.kinds().iter().filter(|k| matches!(k, NodeKind::Interior(_))).count(),
            3
        );
    }

    #[test]
    fn linear_stiffness_on_reference_triangle() {
        let b = ReferenceBasis::new(1);
        let g = TriangleGeometry::new([Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]);
        let grads: Vec<[f64; 2]> = b
            .eval_grad_bary(&[1.0 / 3.0; 3])
            .iter()
            .map(|d| g.gradient(d))
            .collect();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                let a = g.area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                assert!((a - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = ReferenceBasis::new(5);
        let g = TriangleGeometry::new([Point2::new(0.1, 0.0), Point2::new(1.0, 0.3), Point2::new(0.2, 0.8)]);
        let lam = [0.2, 0.5, 0.3];
        let p = g.point(&lam);
        let h = 1e-6;
        let grads: Vec<[f64; 2]> = b.eval_grad_bary(&lam).iter().map(|d| g.gradient(d)).collect();
        let px = b.eval(&g.barycentric(Point2::new(p.x + h, p.y)));
        let mx = b.eval(&g.barycentric(Point2::new(p.x - h, p.y)));
        let py = b.eval(&g.barycentric(Point2::new(p.x, p.y + h)));
        let my = b.eval(&g.barycentric(Point2::new(p.x, p.y - h)));
        for i in 0..b.dim() {
            assert!(((px[i] - mx[i]) / (2.0 * h) - grads[i][0]).abs() < 1e-6);
            assert!(((py[i] - my[i]) / (2.0 * h) - grads[i][1]).abs() < 1e-6);
        }
    }
}
