use super::{Field, FieldElement};
use crate::{Error, Result};
use std::ops::{Index, IndexMut};

/// A dense matrix over a prime field, stored row-major.
///
/// Elimination uses first-nonzero pivoting: the pivot row for a column is
/// the first remaining row with a nonzero entry, so every reduction is
/// deterministic. All arithmetic is exact.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl FieldMatrix {
    /// Zero matrix of the given shape.
    pub fn zero(field: Field, rows: usize, cols: usize) -> FieldMatrix {
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    /// Builds a matrix from rows; fails on ragged input.
    pub fn from_rows(field: Field, rows: Vec<Vec<FieldElement>>) -> Result<FieldMatrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Invalid("ragged rows".into()));
        }
        Ok(FieldMatrix {
            field,
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(field: Field, n: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zero(field, n, n);
        for i in 0..n {
            m[(i, i)] = field.one();
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[FieldElement] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut m = FieldMatrix::zero(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    /// Matrix product; fails on shape mismatch.
    pub fn mul(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.cols != other.rows {
            return Err(Error::Invalid(format!(
                "shape mismatch {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = FieldMatrix::zero(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self[(i, t)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    m[(i, j)] += a * other[(t, j)];
                }
            }
        }
        Ok(m)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if v.len() != self.cols {
            return Err(Error::Invalid("vector length mismatch".into()));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = self.field.zero();
                for j in 0..self.cols {
                    acc += self[(i, j)] * v[j];
                }
                acc
            })
            .collect())
    }

    /// Reduced row echelon form; returns (reduced matrix, pivot columns).
    pub fn rref(&self) -> (FieldMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m[(i, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, pr);
            let inv = m[(r, col)].inv().expect("pivot is nonzero");
            for j in col..m.cols {
                m[(r, j)] *= inv;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, col)].is_zero() {
                    let factor = m[(i, col)];
                    for j in col..m.cols {
                        let sub = factor * m[(r, j)];
                        m[(i, j)] -= sub;
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel {v : Mv = 0}.
    ///
    /// One basis vector per free column, in ascending column order, each
    /// scaled so its first nonzero coordinate is 1.
    pub fn kernel_basis(&self) -> Vec<Vec<FieldElement>> {
        let (m, pivots) = self.rref();
        let mut basis = Vec::new();
        let mut piv_iter = pivots.iter().copied().peekable();
        let mut free_cols = Vec::new();
        for col in 0..self.cols {
            if piv_iter.peek() == Some(&col) {
                piv_iter.next();
            } else {
                free_cols.push(col);
            }
        }
        for &fc in &free_cols {
            let mut v = vec![self.field.zero(); self.cols];
            v[fc] = self.field.one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(row, fc)];
            }
            let lead = v
                .iter()
                .find(|e| !e.is_zero())
                .expect("kernel vector is nonzero")
                .inv()
                .expect("nonzero leading entry");
            for e in v.iter_mut() {
                *e *= lead;
            }
            basis.push(v);
        }
        basis
    }

    /// Inverse of a square matrix; fails when singular.
    pub fn inverse(&self) -> Result<FieldMatrix> {
        if self.rows != self.cols {
            return Err(Error::Invalid("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = FieldMatrix::zero(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, n + i)] = self.field.one();
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return Err(Error::Singular(format!("{n}x{n} matrix has rank < {n}")));
        }
        let mut inv = FieldMatrix::zero(self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = red[(i, n + j)];
            }
        }
        Ok(inv)
    }

    /// Solves Mx = rhs. Returns `None` when the system is inconsistent;
    /// otherwise the particular solution with all free variables set to 0.
    pub fn solve(&self, rhs: &[FieldElement]) -> Result<Option<Vec<FieldElement>>> {
        if rhs.len() != self.rows {
            return Err(Error::Invalid("rhs length mismatch".into()));
        }
        let mut aug = FieldMatrix::zero(self.field, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, self.cols)] = rhs[i];
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![self.field.zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = red[(row, self.cols)];
        }
        Ok(Some(x))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for FieldMatrix {
    type Output = FieldElement;
    fn index(&self, (i, j): (usize, usize)) -> &FieldElement {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for FieldMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut FieldElement {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl std::fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "FieldMatrix {}x{} mod {}", self.rows, self.cols, self.field.prime())?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}
