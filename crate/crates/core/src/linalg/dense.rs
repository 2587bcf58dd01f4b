//! Householder QR with column pivoting.

use nalgebra::{DMatrix, DVector};

/// `A P = Q R` with Householder reflectors kept in factored form.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    nrows: usize,
    /// Reflector `j` is `I - beta_j v_j v_jᵀ` acting on rows `j..`.
    reflectors: Vec<(DVector<f64>, f64)>,
    r_diag: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (n, m) = a.shape();
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut reflectors = Vec::new();
        let mut r_diag = Vec::new();
        for j in 0..n.min(m) {
            let (p, _) = (j..m)
                .map(|c| (c, w.view((j, c), (n - j, 1)).norm_squared()))
                .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            w.swap_columns(j, p);
            perm.swap(j, p);
            let x = w.view((j, j), (n - j, 1)).clone_owned();
            let norm = x.norm();
            if norm == 0.0 {
                r_diag.push(0.0);
                reflectors.push((DVector::zeros(n - j), 0.0));
                continue;
            }
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            let mut v = DVector::from_iterator(n - j, x.iter().copied());
            v[0] -= alpha;
            let beta = 2.0 / v.norm_squared();
            for c in j..m {
                reflect(&v, beta, &mut w, j, c);
            }
            r_diag.push(alpha);
            reflectors.push((v, beta));
        }
        Self {
            nrows: n,
            reflectors,
            r_diag,
            perm,
        }
    }

    /// Diagonal of `R`, non-increasing in magnitude.
    pub fn r_diag(&self) -> &[f64] {
        &self.r_diag
    }

    /// Column permutation: column `j` of `A P` is column `perm[j]` of `A`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Number of diagonal entries of `R` above `rel_tol · |r_00|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let Some(first) = self.r_diag.first() else {
            return 0;
        };
        let cut = rel_tol * first.abs();
        self.r_diag.iter().take_while(|d| d.abs() > cut).count()
    }

    /// Columns `from..` of the full orthogonal factor `Q`.
    pub fn q_columns(&self, from: usize) -> DMatrix<f64> {
        let n = self.nrows;
        let mut e = DMatrix::zeros(n, n - from);
        for c in 0..n - from {
            e[(from + c, c)] = 1.0;
        }
        for (j, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            for c in 0..n - from {
                reflect(v, *beta, &mut e, j, c);
            }
        }
        e
    }
}

/// Applies `I - beta v vᵀ` to rows `r0..` of column `c`.
fn reflect(v: &DVector<f64>, beta: f64, m: &mut DMatrix<f64>, r0: usize, c: usize) {
    let s: f64 = beta * (0..v.len()).map(|i| v[i] * m[(r0 + i, c)]).sum::<f64>();
    if s != 0.0 {
        for i in 0..v.len() {
            m[(r0 + i, c)] -= s * v[i];
        }
    }
}

/// Orthonormal basis of `{x : C x = 0}` for `C` of size `m × n`.
///
/// Returns the basis (as columns), the numerical rank of `C` and the ids of a maximal
/// set of linearly independent rows, in increasing order.
pub fn null_space(c: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize, Vec<usize>) {
    if c.nrows() == 0 {
        return (DMatrix::identity(c.ncols(), c.ncols()), 0, Vec::new());
    }
    let qr = PivotedQr::new(&c.transpose());
    let rank = qr.rank(rel_tol);
    let mut rows: Vec<usize> = qr.perm()[..rank].to_vec();
    rows.sort_unstable();
    (qr.q_columns(rank), rank, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_redundant_rows() {
        let c = DMatrix::from_row_slice(3, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let (z, rank, rows) = null_space(&c, 1e-12);
        assert_eq!(rank, 2);
        assert_eq!(rows.len(), 2);
        assert_eq!(z.ncols(), 2);
        assert!((&c * &z).amax() < 1e-14);
        assert!((z.transpose() * &z - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn full_q_is_orthogonal_and_reproduces_a() {
        let a = DMatrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * i as f64);
        let qr = PivotedQr::new(&a);
        let q = qr.q_columns(0);
        assert!((q.transpose() * &q - DMatrix::identity(6, 6)).amax() < 1e-14);
        // Qᵀ A P is upper triangular with the stored diagonal.
        let mut ap = DMatrix::zeros(6, 3);
        for (j, &p) in qr.perm().iter().enumerate() {
            ap.set_column(j, &a.column(p));
        }
        let r = q.transpose() * ap;
        for j in 0..3 {
            assert!((r[(j, j)] - qr.r_diag()[j]).abs() < 1e-12);
            for i in j + 1..6 {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
        assert_eq!(qr.rank(1e-12), 3);
    }

    #[test]
    fn empty_constraints() {
        let (z, rank, rows) = null_space(&DMatrix::zeros(0, 3), 1e-12);
        assert_eq!((z.ncols(), rank, rows.len()), (3, 0, 0));
    }
}
