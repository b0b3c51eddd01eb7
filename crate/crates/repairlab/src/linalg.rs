//! Dense exact linear algebra over any `Field`: rank, determinant, solving,
//! row reduction, and block-structured assembly.
//!
//! Matrices are 0-indexed and row-major. Node labels in construction code are
//! 1-indexed and converted at module boundaries (i_label = i_internal + 1).

use crate::field::{Elem, Field};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("block shapes are inconsistent")]
    ShapeMismatch,
    #[error("linear system is inconsistent")]
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub field: Field,
    entries: Vec<Elem>,
}

impl Matrix {
    pub fn zero(field: &Field, rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            field: field.clone(),
            entries: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        let mut m = Matrix::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_fn(
        field: &Field,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Elem,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Matrix { rows, cols, field: field.clone(), entries }
    }

    pub fn at(&self, i: usize, j: usize) -> &Elem {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Elem) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(&self.field, self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let f = &self.field;
        let mut out = Matrix::zero(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                // selector matrices are mostly zero; skipping keeps the
                // composed-instance checks fast
                if f.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if f.is_zero(b) {
                        continue;
                    }
                    let t = f.mul(a, b);
                    let s = f.add(out.at(i, j), &t);
                    out.set(i, j, s);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(&self.field, self.rows, self.cols, |i, j| {
            self.field.add(self.at(i, j), other.at(i, j))
        })
    }

    pub fn neg(&self) -> Matrix {
        Matrix::from_fn(&self.field, self.rows, self.cols, |i, j| self.field.neg(self.at(i, j)))
    }

    pub fn scale(&self, c: &Elem) -> Matrix {
        Matrix::from_fn(&self.field, self.rows, self.cols, |i, j| self.field.mul(self.at(i, j), c))
    }

    /// Columns [lo, hi) as a new matrix.
    pub fn col_slice(&self, lo: usize, hi: usize) -> Matrix {
        assert!(lo <= hi && hi <= self.cols);
        Matrix::from_fn(&self.field, self.rows, hi - lo, |i, j| self.at(i, lo + j).clone())
    }

    pub fn hstack(blocks: &[&Matrix]) -> Result<Matrix, LinalgError> {
        let rows = blocks[0].rows;
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(LinalgError::ShapeMismatch);
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let field = blocks[0].field.clone();
        let mut out = Matrix::zero(&field, rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, off + j, b.at(i, j).clone());
                }
            }
            off += b.cols;
        }
        Ok(out)
    }

    pub fn vstack(blocks: &[&Matrix]) -> Result<Matrix, LinalgError> {
        let cols = blocks[0].cols;
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(LinalgError::ShapeMismatch);
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let field = blocks[0].field.clone();
        let mut out = Matrix::zero(&field, rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..cols {
                    out.set(off + i, j, b.at(i, j).clone());
                }
            }
            off += b.rows;
        }
        Ok(out)
    }

    /// Dense grid concatenation; every row of blocks must agree on heights,
    /// every column on widths.
    pub fn from_grid(grid: &[Vec<Matrix>]) -> Result<Matrix, LinalgError> {
        let mut rows = Vec::with_capacity(grid.len());
        for band in grid {
            let refs: Vec<&Matrix> = band.iter().collect();
            rows.push(Matrix::hstack(&refs)?);
        }
        let refs: Vec<&Matrix> = rows.iter().collect();
        Matrix::vstack(&refs)
    }

    pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
        let field = blocks[0].field.clone();
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zero(&field, rows, cols);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(ro + i, co + j, b.at(i, j).clone());
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        out
    }

    pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
        let f = &a.field;
        Matrix::from_fn(f, a.rows * b.rows, a.cols * b.cols, |i, j| {
            let (ai, bi) = (i / b.rows, i % b.rows);
            let (aj, bj) = (j / b.cols, j % b.cols);
            f.mul(a.at(ai, aj), b.at(bi, bj))
        })
    }

    /// Row echelon form in place; returns pivot column indices. Pivot choice
    /// is the first nonzero entry in column order, so the result is
    /// deterministic.
    fn echelonize(&mut self, reduced: bool) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut pr = 0;
        for col in 0..self.cols {
            if pr == self.rows {
                break;
            }
            let Some(sel) = (pr..self.rows).find(|&i| !f.is_zero(self.at(i, col))) else {
                continue;
            };
            if sel != pr {
                for j in 0..self.cols {
                    let a = self.at(pr, j).clone();
                    let b = self.at(sel, j).clone();
                    self.set(pr, j, b);
                    self.set(sel, j, a);
                }
            }
            let inv = f.inv(self.at(pr, col)).unwrap();
            for j in col..self.cols {
                let v = f.mul(self.at(pr, j), &inv);
                self.set(pr, j, v);
            }
            let lo = if reduced { 0 } else { pr + 1 };
            for i in lo..self.rows {
                if i == pr || f.is_zero(self.at(i, col)) {
                    continue;
                }
                let factor = self.at(i, col).clone();
                for j in col..self.cols {
                    let t = f.mul(&factor, self.at(pr, j));
                    let v = f.sub(self.at(i, j), &t);
                    self.set(i, j, v);
                }
            }
            pivots.push(col);
            pr += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.echelonize(false).len()
    }

    /// Reduced row-echelon form.
    pub fn rref(&self) -> Matrix {
        let mut work = self.clone();
        work.echelonize(true);
        work
    }

    pub fn det(&self) -> Result<Elem, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let f = self.field.clone();
        let n = self.rows;
        let mut work = self.clone();
        let mut det = f.one();
        for col in 0..n {
            let Some(sel) = (col..n).find(|&i| !f.is_zero(work.at(i, col))) else {
                return Ok(f.zero());
            };
            if sel != col {
                det = f.neg(&det);
                for j in 0..n {
                    let a = work.at(col, j).clone();
                    let b = work.at(sel, j).clone();
                    work.set(col, j, b);
                    work.set(sel, j, a);
                }
            }
            let pivot = work.at(col, col).clone();
            det = f.mul(&det, &pivot);
            let inv = f.inv(&pivot).unwrap();
            for i in col + 1..n {
                if f.is_zero(work.at(i, col)) {
                    continue;
                }
                let factor = f.mul(work.at(i, col), &inv);
                for j in col..n {
                    let t = f.mul(&factor, work.at(col, j));
                    let v = f.sub(work.at(i, j), &t);
                    work.set(i, j, v);
                }
            }
        }
        Ok(det)
    }

    /// Solves a·x = b for square invertible a.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        match self.solve_general(b)? {
            Some(x) => Ok(x),
            None => Err(LinalgError::Inconsistent),
        }
    }

    /// Solves a·x = b for a with full column rank and at least as many rows.
    /// Returns Ok(None) if the rank is deficient (no unique solution),
    /// Err(Inconsistent) if the system is contradictory.
    pub fn solve_general(&self, b: &Matrix) -> Result<Option<Matrix>, LinalgError> {
        assert_eq!(self.rows, b.rows);
        let f = &self.field;
        let aug = Matrix::hstack(&[self, b])?;
        let red = aug.rref();
        // detect inconsistency: pivot in the b-part
        let mut pivots = Vec::new();
        for i in 0..red.rows {
            if let Some(j) = (0..red.cols).find(|&j| !f.is_zero(red.at(i, j))) {
                if j >= self.cols {
                    return Err(LinalgError::Inconsistent);
                }
                pivots.push((i, j));
            }
        }
        if pivots.len() < self.cols {
            return Ok(None);
        }
        let mut x = Matrix::zero(f, self.cols, b.cols);
        for (i, j) in pivots {
            for col in 0..b.cols {
                x.set(j, col, red.at(i, self.cols + col).clone());
            }
        }
        Ok(Some(x))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| self.field.is_zero(e))
    }

    /// Fixture dump: header "rows cols field-descriptor", then one row per
    /// line, entries as coefficient lists over the prime base.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "{} {} {}\n",
            self.rows,
            self.cols,
            crate::field::field_descriptor(&self.field)
        );
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|e| {
                    let cs: Vec<String> = e.coeffs().iter().map(|c| c.to_string()).collect();
                    format!("[{}]", cs.join(","))
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// An rℓ × nℓ parity-check matrix organized as n thick columns of width ℓ.
#[derive(Debug, Clone)]
pub struct BlockParityCheck {
    pub n: usize,
    pub ell: usize,
    pub r: usize,
    pub matrix: Matrix,
    pub meta: String,
}

impl BlockParityCheck {
    pub fn new(n: usize, ell: usize, r: usize, matrix: Matrix, meta: impl Into<String>) -> Self {
        assert_eq!(matrix.rows, r * ell);
        assert_eq!(matrix.cols, n * ell);
        BlockParityCheck { n, ell, r, matrix, meta: meta.into() }
    }

    /// Thick column of block i (0-indexed): columns [iℓ, (i+1)ℓ).
    pub fn thick_column(&self, i: usize) -> Matrix {
        assert!(i < self.n);
        self.matrix.col_slice(i * self.ell, (i + 1) * self.ell)
    }

    pub fn field(&self) -> &Field {
        &self.matrix.field
    }
}
