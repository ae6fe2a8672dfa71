//! Cone membership with certificates: PSD, entrywise nonnegative,
//! copositive (simplicial subdivision) and SPN (alternating projections).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, project_psd, sym_eigen};
use crate::matrix::SymMatrix;

pub const DEFAULT_MAX_DEPTH: usize = 24;
pub const DEFAULT_WITNESS_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50_000;
pub const DEFAULT_SPN_TOL: f64 = 1e-8;
/// Largest order accepted by the subdivision checker.
pub const MAX_COPOSITIVE_ORDER: usize = 8;
/// Hard cap on the number of cells visited in one subdivision run.
pub const MAX_CELLS: usize = 4_000_000;

/// Returns whether `λmin(A) ≥ −tol`, together with `λmin`.
pub fn is_psd(a: &SymMatrix, tol: f64) -> (bool, f64) {
    let lambda = min_eigenvalue(a);
    (lambda >= -tol, lambda)
}

/// Returns whether every entry is `≥ −tol`, together with the minimum entry.
pub fn is_nonneg(a: &SymMatrix, tol: f64) -> (bool, f64) {
    let m = a.min_entry();
    (m >= -tol, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CopositivityStatus {
    Copositive,
    NotCopositive,
    Inconclusive,
}

impl fmt::Display for CopositivityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Copositive => "COPOSITIVE",
            Self::NotCopositive => "NOT_COPOSITIVE",
            Self::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopositivityVerdict {
    pub status: CopositivityStatus,
    /// Present iff `status` is `NotCopositive`: `x ≥ 0`, `‖x‖₁ = 1`,
    /// `xᵀAx < −tol_w`.
    pub witness: Option<Vec<f64>>,
    /// `xᵀAx` at the witness.
    pub witness_value: Option<f64>,
    /// Deepest subdivision level visited.
    pub depth: usize,
    /// Number of cells examined.
    pub cells: usize,
    /// Leaf cells settled by the eigenvector test at the depth limit.
    pub leaf_tests: usize,
}

struct Cell {
    /// Vertices on the standard simplex.
    verts: Vec<Vec<f64>>,
    /// `A v` for each vertex.
    images: Vec<Vec<f64>>,
    depth: usize,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

enum CellOutcome {
    Certified,
    Witness(Vec<f64>, f64),
    Split,
}

fn cell_form(cell: &Cell) -> Vec<Vec<f64>> {
    let k = cell.verts.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = dot(&cell.verts[i], &cell.images[j]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Normalizes a nonnegative combination of cell vertices onto the simplex
/// and evaluates the form there.
fn witness_from(cell: &Cell, weights: &[f64], a: &SymMatrix) -> (Vec<f64>, f64) {
    let n = cell.verts[0].len();
    let mut x = vec![0.0; n];
    for (w, v) in weights.iter().zip(&cell.verts) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += w * vi;
        }
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    let value = a.quad_form(&x);
    (x, value)
}

/// Cheap sufficient tests on `M = VᵀAV` for a cell `conv(v₁..vₖ)`:
///
/// * a vertex with `vᵀAv < −tol_w` is a witness;
/// * `M ≥ 0` entrywise certifies the cell;
/// * so does a PSD principal block of `M` containing every negative entry
///   (a PSD form plus a nonnegative one);
/// * so does `M` with its positive off-diagonal entries zeroed being PSD.
fn examine(cell: &Cell, a: &SymMatrix, tol_w: f64, psd_tol: f64) -> CellOutcome {
    let m = cell_form(cell);
    let k = m.len();
    let worst = (0..k).min_by(|&x, &y| m[x][x].total_cmp(&m[y][y])).unwrap();
    if m[worst][worst] < -tol_w {
        let mut w = vec![0.0; k];
        w[worst] = 1.0;
        let (x, value) = witness_from(cell, &w, a);
        return CellOutcome::Witness(x, value);
    }
    let support: Vec<usize> = (0..k).filter(|&i| (0..k).any(|j| m[i][j] < 0.0)).collect();
    if support.is_empty() {
        return CellOutcome::Certified;
    }
    let block = SymMatrix::from_fn(support.len(), |x, y| m[support[x]][support[y]]);
    if min_eigenvalue(&block) >= -psd_tol {
        return CellOutcome::Certified;
    }
    let negative_part = SymMatrix::from_fn(support.len(), |x, y| {
        let v = m[support[x]][support[y]];
        if x != y && v > 0.0 {
            0.0
        } else {
            v
        }
    });
    if min_eigenvalue(&negative_part) >= -psd_tol {
        return CellOutcome::Certified;
    }
    CellOutcome::Split
}

/// Exact test for a leaf cell: `M` is copositive iff no principal
/// submatrix has an eigenvector `v > 0` with a negative eigenvalue. A hit
/// becomes a witness when `xᵀAx < −tol_w` at `x = V v`; otherwise, or when
/// a negative eigenvalue is repeated, the leaf stays unresolved.
fn leaf_eigen_test(cell: &Cell, a: &SymMatrix, tol_w: f64, psd_tol: f64) -> Option<CellOutcome> {
    let m = cell_form(cell);
    let k = m.len();
    for mask in 1u32..(1u32 << k) {
        let idx: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
        let sub = SymMatrix::from_fn(idx.len(), |x, y| m[idx[x]][idx[y]]);
        let eig = sym_eigen(&sub);
        for (r, (&lambda, vec)) in eig.values.iter().zip(&eig.vectors).enumerate() {
            if lambda >= -psd_tol {
                break;
            }
            let sign = if vec.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            let repeated = eig
                .values
                .get(r + 1)
                .is_some_and(|next| (next - lambda).abs() <= 1e-9 * (1.0 + lambda.abs()))
                || (r > 0 && (eig.values[r - 1] - lambda).abs() <= 1e-9 * (1.0 + lambda.abs()));
            if repeated {
                return None;
            }
            if vec.iter().all(|&v| sign * v > 0.0) {
                let mut w = vec![0.0; k];
                for (&i, &v) in idx.iter().zip(vec) {
                    w[i] = sign * v;
                }
                let (x, value) = witness_from(cell, &w, a);
                return if value < -tol_w {
                    Some(CellOutcome::Witness(x, value))
                } else {
                    None
                };
            }
        }
    }
    Some(CellOutcome::Certified)
}

/// Decides copositivity by recursive bisection of the standard simplex.
///
/// Every leaf cell is either certified (see [`examine`]) or yields a
/// point `x` with `xᵀAx < −tol_w`, which is returned as the witness.
/// Cells that reach `max_depth` unresolved get the exact eigenvector test
/// of [`leaf_eigen_test`]; any that still fail make the verdict
/// inconclusive.
/// The longest edge is bisected; ties go to the lexicographically first
/// vertex pair, so the traversal is deterministic.
pub fn check_copositive(
    a: &SymMatrix,
    max_depth: usize,
    tol_w: f64,
) -> Result<CopositivityVerdict> {
    let n = a.order();
    if n > MAX_COPOSITIVE_ORDER {
        return Err(Error::OrderTooLarge {
            order: n,
            max: MAX_COPOSITIVE_ORDER,
        });
    }
    if !a.is_finite() {
        return Err(Error::Dimension("matrix has non-finite entries".into()));
    }
    let psd_tol = 1e-12 * a.max_abs().max(1.0);

    let verts: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let images = verts.iter().map(|v| a.mul_vec(v)).collect();
    let mut stack = vec![Cell {
        verts,
        images,
        depth: 0,
    }];

    let mut cells = 0usize;
    let mut deepest = 0usize;
    let mut unresolved = false;
    let mut leaf_tests = 0usize;

    while let Some(cell) = stack.pop() {
        cells += 1;
        deepest = deepest.max(cell.depth);
        let mut outcome = examine(&cell, a, tol_w, psd_tol);
        if matches!(outcome, CellOutcome::Split) && (cell.depth >= max_depth || cells >= MAX_CELLS)
        {
            outcome = match leaf_eigen_test(&cell, a, tol_w, psd_tol) {
                Some(o) => {
                    leaf_tests += 1;
                    o
                }
                None => {
                    unresolved = true;
                    continue;
                }
            };
        }
        match outcome {
            CellOutcome::Certified => {}
            CellOutcome::Witness(x, value) => {
                return Ok(CopositivityVerdict {
                    status: CopositivityStatus::NotCopositive,
                    witness: Some(x),
                    witness_value: Some(value),
                    depth: deepest,
                    cells,
                    leaf_tests,
                });
            }
            CellOutcome::Split => {
                let (p, q) = longest_edge(&cell.verts);
                let mid: Vec<f64> = cell.verts[p]
                    .iter()
                    .zip(&cell.verts[q])
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect();
                let mid_img: Vec<f64> = cell.images[p]
                    .iter()
                    .zip(&cell.images[q])
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect();
                let mut left = Cell {
                    verts: cell.verts.clone(),
                    images: cell.images.clone(),
                    depth: cell.depth + 1,
                };
                left.verts[q] = mid.clone();
                left.images[q] = mid_img.clone();
                let mut right = cell;
                right.depth += 1;
                right.verts[p] = mid;
                right.images[p] = mid_img;
                stack.push(right);
                stack.push(left);
            }
        }
    }

    Ok(CopositivityVerdict {
        status: if unresolved {
            CopositivityStatus::Inconclusive
        } else {
            CopositivityStatus::Copositive
        },
        witness: None,
        witness_value: None,
        depth: deepest,
        cells,
        leaf_tests,
    })
}

fn longest_edge(verts: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_len = -1.0;
    for p in 0..verts.len() {
        for q in (p + 1)..verts.len() {
            let d: f64 = verts[p]
                .iter()
                .zip(&verts[q])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            if d > best_len * (1.0 + 1e-12) {
                best_len = d;
                best = (p, q);
            }
        }
    }
    best
}

/// `A = P + N` with `P` PSD and `N` entrywise nonnegative, up to `tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpnCertificate {
    pub p: SymMatrix,
    pub n: SymMatrix,
    pub tol: f64,
}

/// Measured quantities behind [`validate_certificate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `‖A − P − N‖∞`.
    pub residual: f64,
    pub lambda_min_p: f64,
    pub min_entry_n: f64,
    pub valid: bool,
}

impl SpnCertificate {
    pub fn report(&self, a: &SymMatrix) -> CertificateReport {
        if self.p.order() != a.order() || self.n.order() != a.order() {
            return CertificateReport {
                residual: f64::INFINITY,
                lambda_min_p: f64::NEG_INFINITY,
                min_entry_n: f64::NEG_INFINITY,
                valid: false,
            };
        }
        let residual = (&(a - &self.p) - &self.n).max_abs();
        let lambda_min_p = min_eigenvalue(&self.p);
        let min_entry_n = self.n.min_entry();
        let valid = residual <= self.tol && lambda_min_p >= -self.tol && min_entry_n >= -self.tol;
        CertificateReport {
            residual,
            lambda_min_p,
            min_entry_n,
            valid,
        }
    }
}

pub fn validate_certificate(a: &SymMatrix, cert: &SpnCertificate) -> bool {
    cert.report(a).valid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpnOutcome {
    Certified {
        certificate: SpnCertificate,
        iterations: usize,
    },
    /// Numerical evidence only: the projections did not meet within
    /// `max_iter`. `gap` is the final distance between the two iterates.
    NotFound { gap: f64, iterations: usize },
}

impl SpnOutcome {
    pub fn certificate(&self) -> Option<&SpnCertificate> {
        match self {
            Self::Certified { certificate, .. } => Some(certificate),
            Self::NotFound { .. } => None,
        }
    }

    pub fn into_certificate(self) -> Option<SpnCertificate> {
        match self {
            Self::Certified { certificate, .. } => Some(certificate),
            Self::NotFound { .. } => None,
        }
    }

    pub fn gap(&self) -> Option<f64> {
        match self {
            Self::NotFound { gap, .. } => Some(*gap),
            Self::Certified { .. } => None,
        }
    }
}

/// Turns a PSD candidate `P` into a certificate if `A − P` is nonnegative
/// up to `tol` after moving small off-diagonal deficits onto the diagonal:
/// adding `δ (eᵢ − eⱼ)(eᵢ − eⱼ)ᵀ` to `P` keeps it PSD and lowers `pᵢⱼ`.
fn repair(a: &SymMatrix, p: &SymMatrix, tol: f64) -> Option<SpnCertificate> {
    let n = a.order();
    let mut p = p.clone();
    let mut slack = a - &p;
    if slack.min_entry() >= 0.0 {
        return Some(SpnCertificate { p, n: slack, tol });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = -slack.get(i, j);
            if d > 0.0 {
                p.set(i, j, p.get(i, j) - d);
                p.set(i, i, p.get(i, i) + d);
                p.set(j, j, p.get(j, j) + d);
            }
        }
    }
    slack = a - &p;
    if slack.min_entry() >= -tol {
        Some(SpnCertificate { p, n: slack, tol })
    } else {
        None
    }
}

/// Searches for `A = P + N` by Dykstra's alternating projections between
/// the PSD cone and the down-set `{B : B ≤ A}`.
///
/// Each PSD iterate `P` is tested as a candidate (with `N = A − P`);
/// the first one that passes is returned. Trivial cases (`A` PSD or `A`
/// nonnegative) are answered directly.
pub fn check_spn(a: &SymMatrix, max_iter: usize, tol: f64) -> SpnOutcome {
    let order = a.order();
    if is_psd(a, tol).0 {
        return SpnOutcome::Certified {
            certificate: SpnCertificate {
                p: a.clone(),
                n: SymMatrix::zeros(order),
                tol,
            },
            iterations: 0,
        };
    }
    if is_nonneg(a, tol).0 {
        return SpnOutcome::Certified {
            certificate: SpnCertificate {
                p: SymMatrix::zeros(order),
                n: a.clone(),
                tol,
            },
            iterations: 0,
        };
    }

    let mut x = a.clone();
    let mut p_corr = SymMatrix::zeros(order);
    let mut q_corr = SymMatrix::zeros(order);
    let mut gap = f64::INFINITY;
    for iter in 1..=max_iter {
        let (y, _) = project_psd(&(&x + &p_corr));
        p_corr = &(&x + &p_corr) - &y;
        let z = &y + &q_corr;
        let x_next = z.zip_with(a, f64::min);
        q_corr = &z - &x_next;
        x = x_next;

        let violation = (&y - a).max_entry();
        if violation <= 0.25 * tol {
            if let Some(cert) = repair(a, &y, tol) {
                if cert.report(a).valid {
                    return SpnOutcome::Certified {
                        certificate: cert,
                        iterations: iter,
                    };
                }
            }
        }
        gap = (&y - &x).frobenius();
    }
    SpnOutcome::NotFound {
        gap,
        iterations: max_iter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::horn_matrix;

    #[test]
    fn psd_and_nonneg_basics() {
        let (ok, l) = is_psd(&SymMatrix::identity(5), 0.0);
        assert!(ok);
        assert!((l - 1.0).abs() < 1e-15);
        let (ok, l) = is_psd(&horn_matrix(), 1e-9);
        assert!(!ok && l < 0.0);
        assert!(is_nonneg(&SymMatrix::from_fn(4, |_, _| 1.0), 0.0).0);
        let (ok, m) = is_nonneg(&horn_matrix(), 1e-9);
        assert!(!ok);
        assert_eq!(m, -1.0);
    }

    #[test]
    fn identity_is_copositive() {
        let v = check_copositive(&SymMatrix::identity(5), 24, 1e-10).unwrap();
        assert_eq!(v.status, CopositivityStatus::Copositive);
        assert_eq!(v.depth, 0);
    }

    #[test]
    fn negative_identity_has_unit_witness() {
        let v = check_copositive(&SymMatrix::identity(4).scale(-1.0), 24, 1e-10).unwrap();
        assert_eq!(v.status, CopositivityStatus::NotCopositive);
        assert_eq!(v.witness.unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn order_guard() {
        let err = check_copositive(&SymMatrix::identity(9), 4, 1e-10).unwrap_err();
        assert!(matches!(err, Error::OrderTooLarge { order: 9, .. }));
    }

    #[test]
    fn leaf_test_finds_interior_witness() {
        // Not copositive, but no vertex of the root cell shows it.
        let a = SymMatrix::from_rows(&[vec![1.0, -1.1], vec![-1.1, 1.0]]).unwrap();
        let v = check_copositive(&a, 0, 1e-10).unwrap();
        assert_eq!(v.status, CopositivityStatus::NotCopositive);
        assert_eq!(v.leaf_tests, 1);
        let x = v.witness.unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sub_tolerance_negativity_is_inconclusive() {
        // min over the simplex is -5e-12: below zero, above -tol_w
        let c = 1.0 + 1e-11;
        let a = SymMatrix::from_rows(&[vec![1.0, -c], vec![-c, 1.0]]).unwrap();
        let v = check_copositive(&a, 6, 1e-10).unwrap();
        assert_eq!(v.status, CopositivityStatus::Inconclusive);
        assert!(v.witness.is_none());
    }

    #[test]
    fn trivial_spn_certificates() {
        let psd = &SymMatrix::outer(&[1.0, -1.0, 0.5]) + &SymMatrix::identity(3);
        let out = check_spn(&psd, 10, 1e-8);
        let cert = out.certificate().unwrap();
        assert_eq!(cert.n, SymMatrix::zeros(3));
        assert!(validate_certificate(&psd, cert));

        let nn = SymMatrix::from_fn(3, |i, j| (i + j) as f64 * 0.1 - if i == j { 0.5 } else { 0.0 } + 0.5);
        let out = check_spn(&nn, 10, 1e-8);
        assert_eq!(out.certificate().unwrap().p, SymMatrix::zeros(3));
    }

    #[test]
    fn validate_rejects_non_psd_part() {
        let h = horn_matrix();
        let cert = SpnCertificate {
            p: h.clone(),
            n: SymMatrix::zeros(5),
            tol: 1e-9,
        };
        assert!(!validate_certificate(&h, &cert));
        let id = SymMatrix::identity(5);
        let cert = SpnCertificate {
            p: id.clone(),
            n: SymMatrix::zeros(5),
            tol: 1e-9,
        };
        assert!(validate_certificate(&id, &cert));
    }
}
