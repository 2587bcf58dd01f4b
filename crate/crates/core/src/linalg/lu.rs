//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Column `k` of the factors is obtained by a sparse triangular solve with the columns
//! already computed; the nonzero pattern of that solve is found by a depth-first
//! search in the graph of `L`. Rows are pivoted on the fly, columns follow a fixed
//! fill-reducing order supplied by the caller.

use thiserror::Error;

use super::norm_inf;
use super::sparse::CscMatrix;

/// A diagonal candidate is kept as pivot when `|a_kk| ≥ tol · max_i |a_ik|`.
pub const DEFAULT_PIVOT_TOLERANCE: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum LuError {
    #[error("matrix is not square ({0} x {1})")]
    NotSquare(usize, usize),
    #[error("matrix is structurally or numerically singular at step {step} of {n}")]
    Singular { step: usize, n: usize },
    #[error("column ordering has length {got}, expected {expected}")]
    BadOrdering { got: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    /// `pinv[i]` is the pivot step at which original row `i` was eliminated.
    pinv: Vec<usize>,
    /// Column `k` of the factorisation is original column `q[k]`.
    q: Vec<usize>,
}

const UNSET: usize = usize::MAX;

impl SparseLu {
    /// Factorises `P A Q = L U` with `Q` given by `order` (identity if `None`).
    pub fn factor(a: &CscMatrix, order: Option<&[usize]>, tol: f64) -> Result<Self, LuError> {
        let n = a.ncols();
        if a.nrows() != n {
            return Err(LuError::NotSquare(a.nrows(), n));
        }
        let q: Vec<usize> = match order {
            Some(o) if o.len() != n => {
                return Err(LuError::BadOrdering {
                    got: o.len(),
                    expected: n,
                })
            }
            Some(o) => o.to_vec(),
            None => (0..n).collect(),
        };
        let guess = 4 * a.nnz() + n;
        let mut f = SparseLu {
            n,
            lp: vec![0; n + 1],
            li: Vec::with_capacity(guess),
            lx: Vec::with_capacity(guess),
            up: vec![0; n + 1],
            ui: Vec::with_capacity(guess),
            ux: Vec::with_capacity(guess),
            pinv: vec![UNSET; n],
            q,
        };
        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut work = DfsWork::new(n);
        let (ap, ai, ax) = (a.colptr(), a.rowind(), a.values());

        for k in 0..n {
            f.lp[k] = f.li.len();
            f.up[k] = f.ui.len();
            let col = f.q[k];

            // x = L \ A(:, col) on the reach of the column pattern.
            let top = f.reach(&ai[ap[col]..ap[col + 1]], &mut xi, &mut work);
            for &i in &xi[top..] {
                x[i] = 0.0;
            }
            for p in ap[col]..ap[col + 1] {
                x[ai[p]] = ax[p];
            }
            for px in top..n {
                let j = xi[px];
                let jj = f.pinv[j];
                if jj == UNSET {
                    continue;
                }
                let xj = x[j];
                for p in f.lp[jj] + 1..f.lp[jj + 1] {
                    x[f.li[p]] -= f.lx[p] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut amax = -1.0;
            for &i in &xi[top..] {
                if f.pinv[i] == UNSET {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    f.ui.push(f.pinv[i]);
                    f.ux.push(x[i]);
                }
            }
            if ipiv == UNSET || amax <= 0.0 || !amax.is_finite() {
                return Err(LuError::Singular { step: k, n });
            }
            if f.pinv[col] == UNSET && x[col].abs() >= amax * tol {
                ipiv = col;
            }
            let pivot = x[ipiv];
            f.ui.push(k);
            f.ux.push(pivot);
            f.pinv[ipiv] = k;
            f.li.push(ipiv);
            f.lx.push(1.0);
            for &i in &xi[top..] {
                if f.pinv[i] == UNSET {
                    f.li.push(i);
                    f.lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        f.lp[n] = f.li.len();
        f.up[n] = f.ui.len();
        for i in f.li.iter_mut() {
            *i = f.pinv[*i];
        }
        Ok(f)
    }

    /// Nonzero pattern of `L \ b` for `b` with pattern `bi`, returned in `xi[top..]` in
    /// topological order.
    fn reach(&self, bi: &[usize], xi: &mut [usize], w: &mut DfsWork) -> usize {
        let n = self.n;
        let mut top = n;
        for &start in bi {
            if w.marked[start] {
                continue;
            }
            w.stack.clear();
            w.stack.push(start);
            while let Some(&j) = w.stack.last() {
                let jj = self.pinv[j];
                if !w.marked[j] {
                    w.marked[j] = true;
                    w.pstack[j] = if jj == UNSET { 0 } else { self.lp[jj] };
                }
                let end = if jj == UNSET { 0 } else { self.lp[jj + 1] };
                let mut pushed = false;
                let mut p = w.pstack[j];
                while p < end {
                    let i = self.li[p];
                    p += 1;
                    if !w.marked[i] {
                        w.pstack[j] = p;
                        w.stack.push(i);
                        pushed = true;
                        break;
                    }
                }
                if !pushed {
                    w.stack.pop();
                    top -= 1;
                    xi[top] = j;
                }
            }
        }
        for &j in &xi[top..] {
            w.marked[j] = false;
        }
        top
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` plus `U`.
    pub fn nnz(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    /// `min |u_kk| / max |u_kk|`, a cheap indicator of near-singularity.
    pub fn pivot_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in 0..self.n {
            let d = self.ux[self.up[k + 1] - 1].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if self.n == 0 {
            1.0
        } else {
            lo / hi
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in (0..n).rev() {
            let last = self.up[j + 1] - 1;
            x[j] /= self.ux[last];
            let xj = x[j];
            for p in self.up[j]..last {
                x[self.ui[p]] -= self.ux[p] * xj;
            }
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.q[k]] = x[k];
        }
        out
    }

    /// Solves `A x = b` followed by up to `steps` rounds of iterative refinement
    /// against `a`. Stops once the residual no longer decreases.
    pub fn solve_refined(&self, a: &CscMatrix, b: &[f64], steps: usize) -> Vec<f64> {
        let mut x = self.solve(b);
        let mut res = residual(a, &x, b);
        let mut rn = norm_inf(&res);
        for _ in 0..steps {
            if rn == 0.0 {
                break;
            }
            let dx = self.solve(&res);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let cres = residual(a, &cand, b);
            let cn = norm_inf(&cres);
            if cn >= rn {
                break;
            }
            x = cand;
            res = cres;
            rn = cn;
        }
        x
    }
}

fn residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
}

struct DfsWork {
    marked: Vec<bool>,
    pstack: Vec<usize>,
    stack: Vec<usize>,
}

impl DfsWork {
    fn new(n: usize) -> Self {
        Self {
            marked: vec![false; n],
            pstack: vec![0; n],
            stack: Vec::new(),
        }
    }
}
