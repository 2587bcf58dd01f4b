use std::io::Write;

use nalgebra::DMatrix;

/// Coordinate-format accumulator. Duplicate entries are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct TripletMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            ..Default::default()
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.rows.push(i);
        self.cols.push(j);
        self.vals.push(v);
    }

    /// Adds every entry of `m`, scaled by `scale`, at offset `(r0, c0)`.
    pub fn push_block(&mut self, m: &CscMatrix, r0: usize, c0: usize, scale: f64) {
        for j in 0..m.ncols() {
            for (i, v) in m.col(j) {
                self.push(r0 + i, c0 + j, scale * v);
            }
        }
    }

    /// Like [`push_block`](Self::push_block) with the block transposed.
    pub fn push_block_transposed(&mut self, m: &CscMatrix, r0: usize, c0: usize, scale: f64) {
        for j in 0..m.ncols() {
            for (i, v) in m.col(j) {
                self.push(r0 + j, c0 + i, scale * v);
            }
        }
    }

    pub fn to_csc(&self) -> CscMatrix {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.cols {
            count[j + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let nnz = self.vals.len();
        let mut rowind = vec![0; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = count.clone();
        for k in 0..nnz {
            let j = self.cols[k];
            rowind[next[j]] = self.rows[k];
            values[next[j]] = self.vals[k];
            next[j] += 1;
        }
        // Sort each column by row and merge duplicates.
        let mut colptr = vec![0usize; self.ncols + 1];
        let mut out_rows = Vec::with_capacity(nnz);
        let mut out_vals = Vec::with_capacity(nnz);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..self.ncols {
            scratch.clear();
            scratch.extend((count[j]..count[j + 1]).map(|p| (rowind[p], values[p])));
            scratch.sort_unstable_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(i, v) in &scratch {
                if i == last {
                    *out_vals.last_mut().unwrap() += v;
                } else {
                    out_rows.push(i);
                    out_vals.push(v);
                    last = i;
                }
            }
            colptr[j + 1] = out_rows.len();
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            colptr,
            rowind: out_rows,
            values: out_vals,
        }
    }
}

/// Compressed sparse column matrix with sorted, unique row indices per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = TripletMatrix::new(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != 0.0 {
                    t.push(i, j, m[(i, j)]);
                }
            }
        }
        t.to_csc()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowind(&self) -> &[usize] {
        &self.rowind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(row, value)` pairs of column `j`.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.colptr[j]..self.colptr[j + 1];
        self.rowind[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.colptr[j]..self.colptr[j + 1];
        match self.rowind[r.clone()].binary_search(&i) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (i, v) in self.col(j) {
                    y[i] += v * xj;
                }
            }
        }
        y
    }

    /// `y = Aᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.col(j).map(|(i, v)| v * x[i]).sum())
            .collect()
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut t = TripletMatrix::with_capacity(self.ncols, self.nrows, self.nnz());
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                t.push(j, i, v);
            }
        }
        t.to_csc()
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CscMatrix {
        let mut map = vec![usize::MAX; self.nrows];
        for (new, &old) in rows.iter().enumerate() {
            map[old] = new;
        }
        let mut t = TripletMatrix::new(rows.len(), cols.len());
        for (jn, &j) in cols.iter().enumerate() {
            for (i, v) in self.col(j) {
                if map[i] != usize::MAX {
                    t.push(map[i], jn, v);
                }
            }
        }
        t.to_csc()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
            for (i, v) in t.col(j) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `rows cols nnz`, then one `i j value` line per stored entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                writeln!(w, "{i} {j} {v:e}")?;
            }
        }
        Ok(())
    }
}
