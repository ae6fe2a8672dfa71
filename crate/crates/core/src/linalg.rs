//! Dense kernels for the small matrices this crate works with (order ≤ 8).
//!
//! The symmetric eigensolver is the cyclic Jacobi method: for orders this
//! small it converges in a handful of sweeps and gives eigenvalues with
//! absolute accuracy close to `ε‖A‖`, which is what the PSD tests need.

use crate::matrix::SymMatrix;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 64;

pub fn sym_eigen(a: &SymMatrix) -> SymEigen {
    let n = a.order();
    let mut m = a.to_rows();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let scale = a.max_abs();
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[p][q] * m[p][q];
                }
            }
            if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k][p];
                        let mkq = m[k][q];
                        m[k][p] = c * mkp - s * mkq;
                        m[k][q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p][k];
                        let mqk = m[q][k];
                        m[p][k] = c * mpk - s * mqk;
                        m[q][k] = s * mpk + c * mqk;
                    }
                    for row in v.iter_mut() {
                        let vp = row[p];
                        let vq = row[q];
                        row[p] = c * vp - s * vq;
                        row[q] = s * vp + c * vq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x][x].total_cmp(&m[y][y]));
    SymEigen {
        values: order.iter().map(|&k| m[k][k]).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|i| v[i][k]).collect())
            .collect(),
    }
}

pub fn min_eigenvalue(a: &SymMatrix) -> f64 {
    sym_eigen(a).values[0]
}

/// Singular values in descending order (|λ| for a symmetric matrix).
pub fn singular_values(a: &SymMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = sym_eigen(a).values.iter().map(|v| v.abs()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Nearest PSD matrix in Frobenius norm: eigenvalues below zero are set to
/// zero. Also returns the eigenvalues before clipping.
pub fn project_psd(a: &SymMatrix) -> (SymMatrix, Vec<f64>) {
    let eig = sym_eigen(a);
    let n = a.order();
    let mut out = SymMatrix::zeros(n);
    for (lambda, vec) in eig.values.iter().zip(&eig.vectors) {
        if *lambda <= 0.0 {
            continue;
        }
        for i in 0..n {
            for j in i..n {
                let v = out.get(i, j) + lambda * vec[i] * vec[j];
                out.set(i, j, v);
            }
        }
    }
    (out, eig.values)
}

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-12` relative to the row scale.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in (r + 1)..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}
