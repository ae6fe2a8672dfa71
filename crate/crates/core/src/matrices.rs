//! The `S(θ)` family of 5×5 copositive matrices.
//!
//! For angles `θ ∈ ℝ⁵₊` with `Σθ ≤ π`, `S(θ)` has unit diagonal,
//! `−cos θᵢ` at the cyclic neighbours `(i, i⊞1)` and `cos(θᵢ + θᵢ⊞₁)` at
//! `(i, i⊞2)`. `S(0)` is the Horn matrix; on `Σθ = π` the matrix is PSD of
//! rank at most two.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Construction slack allowed on `Σθ ≤ π`.
pub const THETA_SUM_SLACK: f64 = 1e-12;
/// How close `Σθ` has to be to `π` for the rank-2 factorization.
pub const RANK2_SUM_TOL: f64 = 1e-9;
/// Tie tolerance for classification boundaries.
pub const CLASS_TOL: f64 = 1e-12;
/// Smallest admissible Schur pivot.
pub const PIVOT_EPS: f64 = 1e-12;

/// Cyclic successor on `{0, …, 4}`.
#[inline]
pub fn cyc(i: usize, k: usize) -> usize {
    (i + k) % 5
}

/// Five nonnegative angles with `Σθ ≤ π`. Values are stored exactly as
/// given; invalid input is rejected rather than clamped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct ThetaVector([f64; 5]);

impl ThetaVector {
    pub fn new(theta: [f64; 5]) -> Result<Self> {
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidTheta(format!("theta[{i}] is not finite")));
        }
        if let Some(i) = theta.iter().position(|&t| t < 0.0) {
            return Err(Error::InvalidTheta(format!(
                "theta[{i}] = {} is negative",
                theta[i]
            )));
        }
        let sum: f64 = theta.iter().sum();
        if sum > PI + THETA_SUM_SLACK {
            return Err(Error::InvalidTheta(format!(
                "sum(theta) = {sum} exceeds pi by {:e}",
                sum - PI
            )));
        }
        Ok(Self(theta))
    }

    pub fn zero() -> Self {
        Self([0.0; 5])
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for ThetaVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<[f64; 5]> for ThetaVector {
    type Error = Error;

    fn try_from(value: [f64; 5]) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ThetaVector> for [f64; 5] {
    fn from(value: ThetaVector) -> Self {
        value.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SFamilyClass {
    /// `θ = 0`.
    Horn,
    /// `Σθ = π`: PSD, rank ≤ 2.
    PsdBoundary,
    /// `θ > 0`, `Σθ < π`.
    Hildebrand,
    /// `θ ≠ 0` with a zero component, `Σθ < π`.
    NIrreducible,
}

impl fmt::Display for SFamilyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Horn => "HORN",
            Self::PsdBoundary => "PSD_BOUNDARY",
            Self::Hildebrand => "HILDEBRAND",
            Self::NIrreducible => "N_IRREDUCIBLE",
        })
    }
}

/// `S(θ) = c cᵀ + s sᵀ` on the boundary `Σθ = π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rank2Factors {
    pub c: [f64; 5],
    pub s: [f64; 5],
}

impl Rank2Factors {
    pub fn product(&self) -> SymMatrix {
        SymMatrix::from_fn(5, |i, j| self.c[i] * self.c[j] + self.s[i] * self.s[j])
    }
}

pub fn build_s(theta: &ThetaVector) -> SymMatrix {
    let t = theta.as_array();
    let mut m = SymMatrix::identity(5);
    for i in 0..5 {
        m.set(i, cyc(i, 1), -t[i].cos());
        m.set(i, cyc(i, 2), (t[i] + t[cyc(i, 1)]).cos());
    }
    m
}

pub fn horn_matrix() -> SymMatrix {
    build_s(&ThetaVector::zero())
}

pub fn rank2_factors(theta: &ThetaVector) -> Result<Rank2Factors> {
    let sum = theta.sum();
    if (sum - PI).abs() > RANK2_SUM_TOL {
        return Err(Error::NotOnPsdBoundary {
            sum,
            offset: sum - PI,
        });
    }
    let t = theta.as_array();
    let a = t[0] + t[1];
    let b = t[3] + t[4];
    Ok(Rank2Factors {
        c: [1.0, -t[0].cos(), a.cos(), b.cos(), -t[4].cos()],
        s: [0.0, t[0].sin(), -a.sin(), b.sin(), -t[4].sin()],
    })
}

/// Boundary ties go to the boundary class (`PsdBoundary`, `NIrreducible`).
pub fn classify_s(theta: &ThetaVector) -> SFamilyClass {
    let t = theta.as_array();
    let zeros = t.iter().filter(|&&v| v <= CLASS_TOL).count();
    if zeros == 5 {
        SFamilyClass::Horn
    } else if theta.sum() >= PI - CLASS_TOL {
        SFamilyClass::PsdBoundary
    } else if zeros == 0 {
        SFamilyClass::Hildebrand
    } else {
        SFamilyClass::NIrreducible
    }
}

/// `A/A[i]`: delete row and column `i` and subtract `b bᵀ / aᵢᵢ`, where `b`
/// is the deleted column.
pub fn schur_complement(a: &SymMatrix, i: usize) -> Result<SymMatrix> {
    let n = a.order();
    if i >= n {
        return Err(Error::Dimension(format!("index {i} out of range for order {n}")));
    }
    if n < 2 {
        return Err(Error::Dimension("cannot reduce an order-1 matrix".into()));
    }
    let pivot = a.get(i, i);
    if pivot <= PIVOT_EPS {
        return Err(Error::SingularPivot {
            index: i,
            value: pivot,
        });
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    Ok(SymMatrix::from_fn(n - 1, |r, c| {
        let (p, q) = (keep[r], keep[c]);
        a.get(p, q) - a.get(p, i) * a.get(q, i) / pivot
    }))
}
