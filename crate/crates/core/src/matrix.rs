use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real symmetric matrix stored as its packed upper triangle.
///
/// Symmetry is exact by construction: `(i, j)` and `(j, i)` read the same
/// storage slot.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    order: usize,
    upper: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    r * n - r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        assert!(order >= 1, "matrix order must be at least 1");
        Self {
            order,
            upper: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::from_fn(order, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in i..order {
                m.upper[packed_index(order, i, j)] = f(i, j);
            }
        }
        m
    }

    /// Row-major upper triangle, `order * (order + 1) / 2` entries.
    pub fn from_upper(order: usize, upper: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Dimension("order must be at least 1".into()));
        }
        let expected = order * (order + 1) / 2;
        if upper.len() != expected {
            return Err(Error::Dimension(format!(
                "order {order} needs {expected} upper-triangle entries, got {}",
                upper.len()
            )));
        }
        Ok(Self { order, upper })
    }

    /// Builds from full rows. The upper triangle wins; the lower triangle
    /// must mirror it within `1e-12` relative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {r} has {} entries, expected {n}",
                rows[r].len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Dimension(format!(
                        "not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    /// Diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// `u uᵀ`.
    pub fn outer(u: &[f64]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * u[j])
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(self.order, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = packed_index(self.order, i, j);
        self.upper[k] = value;
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.order).map(|j| self.get(i, j)).collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.get(i, j) * y[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Symmetric relabeling: `B[i][j] = A[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.order, "permutation length mismatch");
        Self::from_fn(self.order, |i, j| self.get(perm[i], perm[j]))
    }

    /// Principal submatrix on `indices` (in the given order).
    pub fn principal(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), |a, b| self.get(indices[a], indices[b]))
    }

    /// Principal submatrix with row and column `k` removed.
    pub fn without(&self, k: usize) -> Self {
        let keep: Vec<usize> = (0..self.order).filter(|&i| i != k).collect();
        self.principal(&keep)
    }

    /// Inverse of [`SymMatrix::without`]: inserts a zero row and column at
    /// position `k`.
    pub fn embed_at(&self, k: usize) -> Self {
        let n = self.order + 1;
        let src = |i: usize| if i < k { i } else { i - 1 };
        Self::from_fn(n, |i, j| {
            if i == k || j == k {
                0.0
            } else {
                self.get(src(i), src(j))
            }
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            order: self.order,
            upper: self.upper.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.order, other.order, "order mismatch");
        Self {
            order: self.order,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Largest absolute entry (the entrywise ∞-norm).
    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.upper.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.upper.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Frobenius norm over the full (mirrored) matrix.
    pub fn frobenius(&self) -> f64 {
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n {
            for j in i..n {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.upper[packed_index(self.order, i, j)]
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;

    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({})", self.order)?;
        for i in 0..self.order {
            let row: Vec<String> = (0..self.order)
                .map(|j| format!("{:>10.6}", self.get(i, j)))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}
