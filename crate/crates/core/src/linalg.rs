//! Dense matrices over GF(2^w).
//!
//! Elimination is fully deterministic: columns are processed left to right
//! and the pivot is the first row (lowest index) with a nonzero entry.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::{Field, FieldWidth, Symbol};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: &'static Field,
    rows: usize,
    cols: usize,
    data: Vec<Symbol>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {}", self.rows, self.cols, self.field.width())?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(width: FieldWidth, rows: usize, cols: usize) -> Self {
        Matrix {
            field: width.field(),
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(width: FieldWidth, size: usize) -> Self {
        let mut m = Self::zeros(width, size, size);
        for i in 0..size {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_vec(width: FieldWidth, rows: usize, cols: usize, data: Vec<Symbol>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Length {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix {
            field: width.field(),
            rows,
            cols,
            data,
        })
    }

    /// Builds from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[Symbol]>>(width: FieldWidth, rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Length {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(width, rows.len(), cols, data)
    }

    /// Matrix with entries drawn uniformly at random.
    pub fn random<R: rand::Rng + ?Sized>(width: FieldWidth, rows: usize, cols: usize, rng: &mut R) -> Self {
        let field = width.field();
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        Matrix {
            field,
            rows,
            cols,
            data,
        }
    }

    pub fn field(&self) -> &'static Field {
        self.field
    }

    pub fn width(&self) -> FieldWidth {
        self.field.width()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Symbol {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Symbol) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Symbol] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Symbol] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Symbol> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn data(&self) -> &[Symbol] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Symbol> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix {
            field: self.field,
            rows: self.cols,
            cols: self.rows,
            data: vec![0; self.data.len()],
        };
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Length {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix {
            field: self.field,
            rows: self.rows,
            cols: other.cols,
            data: vec![0; self.rows * other.cols],
        };
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                self.field.axpy(dst, self.get(r, k), other.row(k));
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `v * self`.
    pub fn left_mul_vec(&self, v: &[Symbol]) -> Result<Vec<Symbol>> {
        if v.len() != self.rows {
            return Err(Error::Length {
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![0; self.cols];
        for (k, &c) in v.iter().enumerate() {
            self.field.axpy(&mut out, c, self.row(k));
        }
        Ok(out)
    }

    /// Matrix times column vector: `self * v`.
    pub fn mul_vec(&self, v: &[Symbol]) -> Result<Vec<Symbol>> {
        if v.len() != self.cols {
            return Err(Error::Length {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|r| self.field.dot(self.row(r), v)).collect())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            field: self.field,
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for r in 0..self.rows {
            for &c in idx {
                data.push(self.get(r, c));
            }
        }
        Matrix {
            field: self.field,
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// Stacks `others` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::Length {
                expected: self.cols,
                got: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            field: self.field,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn vstack_all<'a, I: IntoIterator<Item = &'a Matrix>>(width: FieldWidth, cols: usize, parts: I) -> Result<Matrix> {
        let mut out = Matrix::zeros(width, 0, cols);
        for p in parts {
            if p.cols != cols {
                return Err(Error::Length {
                    expected: cols,
                    got: p.cols,
                });
            }
            out.data.extend_from_slice(&p.data);
            out.rows += p.rows;
        }
        Ok(out)
    }

    /// Reduces to row echelon form in place and returns the pivot columns.
    fn eliminate(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..self.cols {
            if lead == self.rows {
                break;
            }
            let Some(p) = (lead..self.rows).find(|&r| self.get(r, c) != 0) else {
                continue;
            };
            if p != lead {
                for k in 0..self.cols {
                    self.data.swap(p * self.cols + k, lead * self.cols + k);
                }
            }
            let inv = f.inv(self.get(lead, c)).expect("pivot is nonzero");
            f.scale(self.row_mut(lead), inv);
            let pivot_row = self.row(lead).to_vec();
            for r in lead + 1..self.rows {
                let factor = self.get(r, c);
                if factor != 0 {
                    f.axpy(self.row_mut(r), factor, &pivot_row);
                }
            }
            pivots.push(c);
            lead += 1;
        }
        pivots
    }

    /// Columns holding the pivots of the row-echelon form, in order.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.clone().eliminate()
    }

    pub fn rank(&self) -> usize {
        self.clone().eliminate().len()
    }

    /// Inverse of a square matrix by Gauss-Jordan on `[M | I]`.
    pub fn invert(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Length {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        let f = self.field;
        let mut aug = Matrix::zeros(self.width(), n, 2 * n);
        for r in 0..n {
            aug.row_mut(r)[..n].copy_from_slice(self.row(r));
            aug.set(r, n + r, 1);
        }
        let pivots = aug.eliminate();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Singular);
        }
        for lead in (0..n).rev() {
            let pivot_row = aug.row(lead).to_vec();
            for r in 0..lead {
                let factor = aug.get(r, lead);
                if factor != 0 {
                    f.axpy(aug.row_mut(r), factor, &pivot_row);
                }
            }
        }
        Ok(aug.select_cols(&(n..2 * n).collect::<Vec<_>>()))
    }

    /// Solves `x * self = b` for a row vector `x`, where `self` has full row
    /// rank. Returns an error when the system is rank deficient in the rows.
    pub fn solve_left(&self, b: &[Symbol]) -> Result<Vec<Symbol>> {
        // x * M = b  <=>  M^T x^T = b^T
        self.transpose().solve_right(b)
    }

    /// Solves `self * x = b` for a column vector `x` when `self` has full
    /// column rank (extra consistent rows are allowed).
    pub fn solve_right(&self, b: &[Symbol]) -> Result<Vec<Symbol>> {
        if b.len() != self.rows {
            return Err(Error::Length {
                expected: self.rows,
                got: b.len(),
            });
        }
        let n = self.cols;
        let mut aug = Matrix::zeros(self.width(), self.rows, n + 1);
        for r in 0..self.rows {
            aug.row_mut(r)[..n].copy_from_slice(self.row(r));
            aug.set(r, n, b[r]);
        }
        let pivots = aug.eliminate();
        if pivots.len() < n || pivots.contains(&n) {
            return Err(Error::Singular);
        }
        let f = self.field;
        let mut x = vec![0; n];
        for lead in (0..n).rev() {
            let row = aug.row(lead);
            let mut acc = row[n];
            for c in lead + 1..n {
                acc ^= f.mul(row[c], x[c]);
            }
            x[lead] = acc;
        }
        Ok(x)
    }

    /// Vandermonde matrix with entry (i, j) = points[j]^i for i in [0, rows).
    pub fn vandermonde(width: FieldWidth, points: &[Symbol], rows: usize) -> Result<Matrix> {
        let f = width.field();
        for (i, &p) in points.iter().enumerate() {
            if p == 0 || p as usize >= f.size() {
                return Err(Error::InvalidParams(format!(
                    "evaluation point {p} must be a nonzero element of {width}"
                )));
            }
            if points[..i].contains(&p) {
                return Err(Error::DuplicatePoint(p));
            }
        }
        let mut m = Matrix::zeros(width, rows, points.len());
        for (j, &p) in points.iter().enumerate() {
            let mut acc = 1;
            for i in 0..rows {
                m.set(i, j, acc);
                acc = f.mul(acc, p);
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const W8: FieldWidth = FieldWidth::W8;
    const W16: FieldWidth = FieldWidth::W16;

    #[test]
    fn rank_of_identity_and_zero() {
        for r in 1..6 {
            assert_eq!(Matrix::identity(W8, r).rank(), r);
            assert_eq!(Matrix::zeros(W8, r, r + 2).rank(), 0);
        }
    }

    #[test]
    fn self_inverse_upper_unit() {
        let m = Matrix::from_rows(W8, &[[1u16, 1], [0, 1]]).unwrap();
        assert_eq!(m.invert().unwrap(), m);
        let i = Matrix::identity(W16, 4);
        assert_eq!(i.invert().unwrap(), i);
    }

    #[test]
    fn singular_is_reported() {
        let m = Matrix::from_rows(W8, &[[1u16, 2], [1, 2]]).unwrap();
        assert!(matches!(m.invert(), Err(Error::Singular)));
    }

    #[test]
    fn random_invertible_multiplies_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 20 {
            let m = Matrix::random(W8, 5, 5, &mut rng);
            if let Ok(inv) = m.invert() {
                assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(W8, 5));
                assert_eq!(inv.mul(&m).unwrap(), Matrix::identity(W8, 5));
                checked += 1;
            } else {
                assert!(m.rank() < 5);
            }
        }
    }

    #[test]
    fn random_rank_full_with_high_probability() {
        // Union bound: P(rank < r) <= r * c / 2^16 for an r x c matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (r, c) = (8, 12);
        let deficient = (0..1000)
            .filter(|_| Matrix::random(W16, r, c, &mut rng).rank() < r)
            .count();
        assert!(deficient <= 2, "{deficient} rank-deficient draws");
    }

    #[test]
    fn rank_equals_transpose_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            // Low rank products make this informative.
            let a = Matrix::random(W8, 6, 3, &mut rng);
            let b = Matrix::random(W8, 3, 7, &mut rng);
            let m = a.mul(&b).unwrap();
            assert_eq!(m.rank(), m.transpose().rank());
        }
    }

    #[test]
    fn vandermonde_rows_one_is_all_ones() {
        let v = Matrix::vandermonde(W8, &[3, 5, 9], 1).unwrap();
        assert_eq!(v.row(0), &[1, 1, 1]);
    }

    #[test]
    fn vandermonde_rejects_duplicates_and_zero() {
        assert!(matches!(
            Matrix::vandermonde(W8, &[1, 2, 2], 2),
            Err(Error::DuplicatePoint(2))
        ));
        assert!(Matrix::vandermonde(W8, &[0, 2], 2).is_err());
    }

    #[test]
    fn vandermonde_square_invertible_and_top_rows_mds() {
        for m in 1..=6usize {
            let pts: Vec<u16> = (1..=m as u16).collect();
            let v = Matrix::vandermonde(W8, &pts, m).unwrap();
            assert_eq!(v.rank(), m);
            for ell in 1..m {
                let top = v.select_rows(&(0..ell).collect::<Vec<_>>());
                for cols in (0..m).combinations(ell) {
                    assert_eq!(top.select_cols(&cols).rank(), ell);
                }
            }
        }
    }

    #[test]
    fn solve_left_and_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = Matrix::random(W16, 4, 6, &mut rng);
        let x: Vec<u16> = vec![7, 0, 300, 65000];
        let b = m.left_mul_vec(&x).unwrap();
        assert_eq!(m.solve_left(&b).unwrap(), x);
        let y: Vec<u16> = vec![1, 2, 3, 4];
        let t = m.transpose();
        let b2 = t.mul_vec(&y).unwrap();
        assert_eq!(t.solve_right(&b2).unwrap(), y);
    }
}
