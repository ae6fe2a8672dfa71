//! Constructive SPN certificates for copositive matrices with graph `T₅`
//! or `K₂,ₙ` (n ≤ 4).
//!
//! `T₅` splits into three cases. A degree-2 vertex whose two entries are
//! positive borders a 4×4 copositive (hence SPN) block; one whose entries
//! are both negative is pivoted out, leaving a 4×4 copositive Schur
//! complement. What remains is the signed layout of
//! [`t5_layout`](crate::graphs::t5_layout), where the certificate is
//! `P = S(θ′)` with `Σθ′ = π` and `N = A − S(θ′) ≥ 0`.
//!
//! For that last case the matrix is relabeled into *proof coordinates*:
//! positive entries at `(0,2)`, `(1,3)`, `(2,4)` and a zero triangle at
//! either `{0,1,4}` (completion index `ℓ = 0`) or `{0,3,4}` (`ℓ = 3`).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cones::{
    check_copositive, check_spn, SpnCertificate, SpnOutcome, DEFAULT_MAX_DEPTH, DEFAULT_MAX_ITER,
    DEFAULT_SPN_TOL, DEFAULT_WITNESS_TOL,
};
use crate::error::{Error, Result};
use crate::graphs::{match_k2n, match_t5, match_tn, PatternKind, Reduction, DEFAULT_ZERO_TOL};
use crate::linalg::solve_dense;
use crate::matrices::{build_s, cyc, schur_complement, ThetaVector, THETA_SUM_SLACK};
use crate::matrix::SymMatrix;

/// Largest arccos argument overshoot that is clamped instead of rejected.
pub const ARCCOS_CLAMP_TOL: f64 = 1e-9;
/// Allowed mismatch on the two edges `recover_theta` does not solve for.
pub const CONSISTENCY_TOL: f64 = 1e-7;
/// Largest accepted `max(S(θ′) − A)`.
pub const THETA_EXCESS_TOL: f64 = 1e-9;
/// Certificate tolerance used by the certifiers.
pub const CERT_TOL: f64 = DEFAULT_SPN_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Route {
    Bordered,
    SchurReduce,
    /// `θ` read off the edges, then completed to `Σθ′ = π`.
    ThetaCompletion,
    /// `θ′` found by the angle-space search.
    ThetaSearch,
    ProjectionFallback,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Bordered => "BORDERED",
            Route::SchurReduce => "SCHUR_REDUCE",
            Route::ThetaCompletion => "THETA_COMPLETION",
            Route::ThetaSearch => "THETA_SEARCH",
            Route::ProjectionFallback => "PROJECTION_FALLBACK",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub operation: String,
    pub params: serde_json::Value,
}

impl TraceStep {
    fn new(operation: &str, params: serde_json::Value) -> Self {
        Self {
            operation: operation.to_owned(),
            params,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyTrace {
    /// Route taken at the top level.
    pub route: Route,
    /// Every route taken, outermost first (e.g. `SCHUR_REDUCE` then the
    /// `T₅` branch for `K₂,₄`).
    pub chain: Vec<Route>,
    pub steps: Vec<TraceStep>,
    pub certificate: SpnCertificate,
    pub theta: Option<ThetaVector>,
    /// Completion index, zero-based (0 or 3).
    pub ell: Option<usize>,
    pub theta_prime: Option<ThetaVector>,
}

/// `D A D` with `D = diag(1/√aᵢᵢ)`; returns the scaled matrix and `D`'s
/// diagonal.
pub fn normalize_diag(a: &SymMatrix) -> Result<(SymMatrix, Vec<f64>)> {
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::NonPositiveDiagonal {
            index: i,
            value: diag[i],
        });
    }
    let d: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = SymMatrix::from_fn(a.order(), |i, j| {
        if i == j {
            1.0
        } else {
            d[i] * a.get(i, j) * d[j]
        }
    });
    Ok((scaled, d))
}

/// Maps a certificate of `D A D` back to one of `A` (`D⁻¹ · D⁻¹`).
pub fn unscale_certificate(cert: &SpnCertificate, d: &[f64]) -> SpnCertificate {
    let undo = |m: &SymMatrix| SymMatrix::from_fn(m.order(), |i, j| m.get(i, j) / (d[i] * d[j]));
    let growth = d.iter().fold(1.0f64, |g, v| g.max(1.0 / (v * v)));
    SpnCertificate {
        p: undo(&cert.p),
        n: undo(&cert.n),
        tol: cert.tol * growth,
    }
}

fn acos_checked(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::ArccosDomain { value: x });
    }
    if x.abs() > 1.0 {
        let over = x.abs() - 1.0;
        if over > ARCCOS_CLAMP_TOL {
            return Err(Error::ArccosDomain { value: x });
        }
        debug!("arccos argument {x} clamped by {over:e}");
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

fn check_ell(ell: usize) -> Result<()> {
    if ell == 0 || ell == 3 {
        Ok(())
    } else {
        Err(Error::CompletionPrecondition(format!(
            "completion index must be 0 or 3, got {ell}"
        )))
    }
}

/// Which zero triangle a proof-coordinate matrix carries: `Some(0)` for
/// `{0,1,4}`, `Some(3)` for `{0,3,4}` (the first wins if both are present).
pub fn proof_frame(b: &SymMatrix) -> Option<usize> {
    let zero = |i: usize, j: usize| b.get(i, j).abs() <= DEFAULT_ZERO_TOL;
    if b.order() != 5 {
        None
    } else if zero(0, 1) && zero(0, 4) && zero(1, 4) {
        Some(0)
    } else if zero(0, 3) && zero(0, 4) && zero(3, 4) {
        Some(3)
    } else {
        None
    }
}

/// Reads `θ` off the seven edges of a proof-coordinate matrix.
///
/// Three angles come from negative cycle edges (`θᵢ = arccos(−bᵢ,ᵢ⊞₁)`),
/// two from chord entries minus a known addend; the remaining two chords
/// are checked against `cos(θᵢ + θᵢ⊞₁)`.
pub fn recover_theta(b: &SymMatrix, ell: usize) -> Result<ThetaVector> {
    check_ell(ell)?;
    if b.order() != 5 {
        return Err(Error::Dimension(format!("expected order 5, got {}", b.order())));
    }
    let mut t = [0.0f64; 5];
    // (direct angles, [(angle, chord start)] solved from chords, check chords)
    let (direct, solved, checks): ([usize; 3], [(usize, usize); 2], [usize; 2]) = if ell == 0 {
        ([1, 2, 3], [(4, 3), (0, 0)], [1, 2])
    } else {
        ([0, 1, 2], [(3, 2), (4, 4)], [0, 1])
    };
    for i in direct {
        t[i] = acos_checked(-b.get(i, cyc(i, 1)))?;
    }
    for (angle, start) in solved {
        // chord (start, start⊞2) = cos(θ_start + θ_start⊞1); one addend known
        let known = if start == angle { cyc(start, 1) } else { start };
        let total = acos_checked(b.get(start, cyc(start, 2)))?;
        t[angle] = total - t[known];
    }
    for (i, v) in t.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(Error::NotInFamily(format!("recovered theta[{i}] = {v} < 0")));
            }
            *v = 0.0;
        }
    }
    for i in checks {
        let want = (t[i] + t[cyc(i, 1)]).cos();
        let got = b.get(i, cyc(i, 2));
        if (want - got).abs() > CONSISTENCY_TOL {
            return Err(Error::NotInFamily(format!(
                "entry ({i}, {}) is {got}, S(theta) has {want}",
                cyc(i, 2)
            )));
        }
    }
    ThetaVector::new(t).map_err(|e| Error::NotInFamily(e.to_string()))
}

/// `θ′` equal to `θ` except `θ′_ℓ = π − Σ_{i≠ℓ} θᵢ`.
///
/// Requires `Σθ ≤ π` and `Σ_{i≠ℓ} θᵢ ≥ π/2`; then `θ_ℓ ≤ θ′_ℓ ≤ π/2`.
pub fn theta_completion(theta: &ThetaVector, ell: usize) -> Result<ThetaVector> {
    check_ell(ell)?;
    let t = theta.as_array();
    let total = theta.sum();
    if total > PI + THETA_SUM_SLACK {
        return Err(Error::CompletionPrecondition(format!(
            "sum(theta) = {total} exceeds pi"
        )));
    }
    let rest: f64 = (0..5).filter(|&i| i != ell).map(|i| t[i]).sum();
    if rest < FRAC_PI_2 - THETA_SUM_SLACK {
        return Err(Error::CompletionPrecondition(format!(
            "sum of theta[i] for i != {ell} is {rest} < pi/2"
        )));
    }
    let mut out = t;
    out[ell] = (PI - rest).max(t[ell]);
    ThetaVector::new(out)
}

/// Angle-space search for `θ′` with `Σθ′ = π` and `S(θ′) ≤ B` entrywise
/// on a 5×5 matrix `B` (any labelling).
///
/// On `Σθ′ = π` every pair sum lies in `[0, π]`, so `S(θ′) ≤ B` is linear
/// in `θ′`: `θ′ᵢ ≤ arccos(−bᵢ,ᵢ⊞₁)` and
/// `θ′ᵢ + θ′ᵢ⊞₁ ≥ arccos(bᵢ,ᵢ⊞₂)`. The margin `t` by which all these hold
/// is maximized over the vertices of the feasible polytope. Returns `θ′`
/// and the margin (negative when no `θ′` fits).
pub fn search_theta_prime(b: &SymMatrix) -> Option<(ThetaVector, f64)> {
    if b.order() != 5 {
        return None;
    }
    let mut upper = [0.0; 5];
    let mut lower = [0.0; 5];
    for i in 0..5 {
        let edge = -b.get(i, cyc(i, 1));
        let chord = b.get(i, cyc(i, 2));
        if edge > 1.0 || chord < -1.0 {
            return None;
        }
        upper[i] = edge.max(-1.0).acos();
        lower[i] = chord.min(1.0).acos();
    }

    // rows: coefficients over (θ0..θ4, t) and right-hand side, as `row·x ≤ rhs`
    let mut rows: Vec<([f64; 6], f64)> = Vec::with_capacity(15);
    for i in 0..5 {
        let mut r = [0.0; 6];
        r[i] = 1.0;
        r[5] = 1.0;
        rows.push((r, upper[i]));
    }
    for i in 0..5 {
        let mut r = [0.0; 6];
        r[i] = -1.0;
        r[cyc(i, 1)] = -1.0;
        r[5] = 1.0;
        rows.push((r, -lower[i]));
    }
    for i in 0..5 {
        let mut r = [0.0; 6];
        r[i] = -1.0;
        rows.push((r, 0.0));
    }

    let feasible = |x: &[f64]| {
        rows.iter().all(|(r, rhs)| {
            let lhs: f64 = r.iter().zip(x).map(|(c, v)| c * v).sum();
            lhs <= rhs + 1e-12
        })
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let m = rows.len();
    let mut pick = [0usize, 1, 2, 3, 4];
    loop {
        let mut mat = Vec::with_capacity(6);
        let mut rhs = Vec::with_capacity(6);
        mat.push(vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        rhs.push(PI);
        for &k in &pick {
            mat.push(rows[k].0.to_vec());
            rhs.push(rows[k].1);
        }
        if let Some(x) = solve_dense(mat, rhs) {
            if feasible(&x) && best.as_ref().is_none_or(|(_, t)| x[5] > *t + 1e-15) {
                let t = x[5];
                best = Some((x, t));
            }
        }
        // next 5-combination of 0..m
        let mut k = 5;
        while k > 0 && pick[k - 1] == m - 5 + (k - 1) {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        pick[k - 1] += 1;
        for r in k..5 {
            pick[r] = pick[r - 1] + 1;
        }
    }

    let (x, margin) = best?;
    let mut theta = [0.0; 5];
    for i in 0..5 {
        theta[i] = x[i].max(0.0);
    }
    // put any rounding on the largest angle so the sum is π
    let largest = (0..5).max_by(|&a, &c| theta[a].total_cmp(&theta[c])).unwrap();
    let others: f64 = (0..5).filter(|&i| i != largest).map(|i| theta[i]).sum();
    theta[largest] = PI - others;
    ThetaVector::new(theta).ok().map(|t| (t, margin))
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn max_excess(p: &SymMatrix, a: &SymMatrix) -> f64 {
    (p - a).max_entry()
}

/// Embeds an inner certificate of `A/A[i]` into one of `A`.
///
/// With pivot `a = aᵢᵢ`, pivot column `b` and `A/A[i] = P + N`, returns
/// `M + N↑` where `M` has `a` at `(i,i)`, `b` along row/column `i`, and
/// `P + b bᵀ/a` elsewhere. `M` is PSD because its Schur complement at `i`
/// is `P`.
pub fn lift_schur(a: &SymMatrix, i: usize, inner: &SpnCertificate) -> Result<SpnCertificate> {
    let reduced = schur_complement(a, i)?;
    let report = inner.report(&reduced);
    if !report.valid {
        return Err(Error::InvalidCertificate(format!(
            "inner certificate does not validate against A/A[{i}]: {report:?}"
        )));
    }
    let pivot = a.get(i, i);
    let idx: Vec<Option<usize>> = (0..a.order())
        .map(|k| match k.cmp(&i) {
            std::cmp::Ordering::Less => Some(k),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(k - 1),
        })
        .collect();
    let p = SymMatrix::from_fn(a.order(), |r, c| match (idx[r], idx[c]) {
        (None, None) => pivot,
        (None, Some(_)) | (Some(_), None) => a.get(r, c),
        (Some(x), Some(y)) => inner.p.get(x, y) + a.get(r, i) * a.get(c, i) / pivot,
    });
    Ok(SpnCertificate {
        p,
        n: inner.n.embed_at(i),
        tol: inner.tol,
    })
}

/// Embeds a certificate of `A` with row/column `i` deleted when that row is
/// nonnegative: the row and diagonal entry go into `N`.
pub fn lift_bordered(a: &SymMatrix, i: usize, inner: &SpnCertificate) -> Result<SpnCertificate> {
    let n = a.order();
    if i >= n {
        return Err(Error::Dimension(format!("index {i} out of range for order {n}")));
    }
    for j in 0..n {
        if a.get(i, j) < -inner.tol {
            return Err(Error::WrongBranch(format!(
                "entry ({i}, {j}) = {} is negative; row {i} does not border",
                a.get(i, j)
            )));
        }
    }
    let report = inner.report(&a.without(i));
    if !report.valid {
        return Err(Error::InvalidCertificate(format!(
            "inner certificate does not validate with row {i} removed: {report:?}"
        )));
    }
    let mut nn = inner.n.embed_at(i);
    for j in 0..n {
        nn.set(i, j, a.get(i, j));
    }
    Ok(SpnCertificate {
        p: inner.p.embed_at(i),
        n: nn,
        tol: inner.tol,
    })
}

/// Certifies a matrix of order ≤ 4 (every copositive matrix there is SPN)
/// or any fallback case by projections.
fn projection_certificate(a: &SymMatrix, steps: &mut Vec<TraceStep>) -> Result<SpnCertificate> {
    match check_spn(a, DEFAULT_MAX_ITER, CERT_TOL) {
        SpnOutcome::Certified {
            certificate,
            iterations,
        } => {
            steps.push(TraceStep::new(
                "check_spn",
                json!({ "order": a.order(), "iterations": iterations }),
            ));
            Ok(certificate)
        }
        SpnOutcome::NotFound { gap, iterations } => Err(Error::CertificationFailed(vec![format!(
            "projections on order {} stopped after {iterations} iterations with gap {gap:e}",
            a.order()
        )])),
    }
}

/// Proof-coordinate relabelings of the signed `T₅` layout, as
/// `(layout index for each proof index, completion index)`.
const PROOF_EMBEDDINGS: [([usize; 5], usize); 4] = [
    ([0, 2, 4, 3, 1], 0),
    ([1, 2, 4, 3, 0], 0),
    ([1, 3, 4, 2, 0], 3),
    ([0, 3, 4, 2, 1], 3),
];

struct ThetaRoute {
    route: Route,
    certificate: SpnCertificate,
    theta: Option<ThetaVector>,
    ell: usize,
    theta_prime: ThetaVector,
    embedding: Vec<usize>,
}

fn theta_certificate(
    a: &SymMatrix,
    perm: &[usize],
    diagnostics: &mut Vec<String>,
) -> Option<ThetaRoute> {
    let embeddings: Vec<(Vec<usize>, usize)> = PROOF_EMBEDDINGS
        .iter()
        .map(|(q, ell)| (q.iter().map(|&k| perm[k]).collect(), *ell))
        .collect();

    let finish = |total: &[usize], theta_prime: &ThetaVector| -> SpnCertificate {
        let p = build_s(theta_prime).permuted(&inverse(total));
        let n = a - &p;
        SpnCertificate {
            p,
            n,
            tol: CERT_TOL,
        }
    };

    for (total, ell) in &embeddings {
        let b = a.permuted(total);
        let attempt = recover_theta(&b, *ell).and_then(|theta| {
            let prime = theta_completion(&theta, *ell)?;
            let excess = max_excess(&build_s(&prime), &b);
            if excess > THETA_EXCESS_TOL {
                return Err(Error::NotInFamily(format!(
                    "S(theta') exceeds the matrix by {excess:e}"
                )));
            }
            Ok((theta, prime))
        });
        match attempt {
            Ok((theta, prime)) => {
                return Some(ThetaRoute {
                    route: Route::ThetaCompletion,
                    certificate: finish(total, &prime),
                    theta: Some(theta),
                    ell: *ell,
                    theta_prime: prime,
                    embedding: total.clone(),
                })
            }
            Err(e) => diagnostics.push(format!("completion via {total:?}: {e}")),
        }
    }

    for (total, ell) in &embeddings {
        let b = a.permuted(total);
        match search_theta_prime(&b) {
            Some((prime, margin)) => {
                let excess = max_excess(&build_s(&prime), &b);
                if excess <= THETA_EXCESS_TOL {
                    debug!("theta search margin {margin:e}, excess {excess:e}");
                    return Some(ThetaRoute {
                        route: Route::ThetaSearch,
                        certificate: finish(total, &prime),
                        theta: None,
                        ell: *ell,
                        theta_prime: prime,
                        embedding: total.clone(),
                    });
                }
                diagnostics.push(format!(
                    "theta search via {total:?}: best margin {margin:e}, excess {excess:e}"
                ));
            }
            None => diagnostics.push(format!("theta search via {total:?}: infeasible")),
        }
    }
    None
}

/// Certifies a copositive matrix with `G(A) = T₅`.
///
/// The matrix is diagonally normalized first and the certificate mapped
/// back. Copositivity is a hypothesis: it is checked once for the log but
/// never blocks certification.
pub fn certify_t5(a: &SymMatrix) -> Result<CertifyTrace> {
    if a.order() != 5 {
        return Err(Error::Dimension(format!("expected order 5, got {}", a.order())));
    }
    let (scaled, d) = normalize_diag(a)?;
    let m = match_t5(&scaled)
        .ok_or_else(|| Error::PatternMismatch("G(A) is not T5".into()))?;

    let mut steps = vec![TraceStep::new(
        "normalize_diag",
        json!({ "scaling": d }),
    )];
    match check_copositive(&scaled, DEFAULT_MAX_DEPTH, DEFAULT_WITNESS_TOL) {
        Ok(v) => {
            if v.status != crate::cones::CopositivityStatus::Copositive {
                warn!("certify_t5 input is not certified copositive: {}", v.status);
            }
            steps.push(TraceStep::new(
                "check_copositive",
                json!({ "status": v.status, "depth": v.depth }),
            ));
        }
        Err(e) => warn!("copositivity check failed: {e}"),
    }
    steps.push(TraceStep::new(
        "match_t5",
        json!({ "kind": m.kind, "permutation": m.permutation, "reduction": m.reduction }),
    ));

    let mut diagnostics = Vec::new();
    let mut theta = None;
    let mut ell = None;
    let mut theta_prime = None;
    let mut chain = Vec::new();

    let (route, cert) = match m.reduction {
        Some(Reduction::Bordered { vertex }) => {
            let inner = projection_certificate(&scaled.without(vertex), &mut steps)?;
            steps.push(TraceStep::new("lift_bordered", json!({ "vertex": vertex })));
            (Route::Bordered, lift_bordered(&scaled, vertex, &inner)?)
        }
        Some(Reduction::Schur { vertex }) => {
            let reduced = schur_complement(&scaled, vertex)?;
            steps.push(TraceStep::new("schur_complement", json!({ "vertex": vertex })));
            let inner = projection_certificate(&reduced, &mut steps)?;
            steps.push(TraceStep::new("lift_schur", json!({ "vertex": vertex })));
            (Route::SchurReduce, lift_schur(&scaled, vertex, &inner)?)
        }
        None => {
            let found = if m.kind == PatternKind::T5Pattern {
                theta_certificate(&scaled, &m.permutation, &mut diagnostics)
            } else {
                diagnostics.push("sign pattern has no theta route".into());
                None
            };
            match found {
                Some(r) => {
                    steps.push(TraceStep::new(
                        match r.route {
                            Route::ThetaCompletion => "theta_completion",
                            _ => "search_theta_prime",
                        },
                        json!({
                            "embedding": r.embedding,
                            "theta": r.theta,
                            "ell": r.ell,
                            "theta_prime": r.theta_prime,
                        }),
                    ));
                    theta = r.theta;
                    ell = Some(r.ell);
                    theta_prime = Some(r.theta_prime);
                    (r.route, r.certificate)
                }
                None => match projection_certificate(&scaled, &mut steps) {
                    Ok(c) => (Route::ProjectionFallback, c),
                    Err(Error::CertificationFailed(mut extra)) => {
                        diagnostics.append(&mut extra);
                        return Err(Error::CertificationFailed(diagnostics));
                    }
                    Err(e) => return Err(e),
                },
            }
        }
    };
    chain.push(route);

    let certificate = unscale_certificate(&cert, &d);
    let report = certificate.report(a);
    if !report.valid {
        diagnostics.push(format!("{route} certificate failed validation: {report:?}"));
        return Err(Error::CertificationFailed(diagnostics));
    }
    Ok(CertifyTrace {
        route,
        chain,
        steps,
        certificate,
        theta,
        ell,
        theta_prime,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct K2nOptions {
    /// Attempt `n > 4` heuristically instead of refusing.
    pub allow_beyond_proved: bool,
}

pub fn certify_k2n(a: &SymMatrix) -> Result<CertifyTrace> {
    certify_k2n_with(a, K2nOptions::default())
}

/// Certifies a copositive matrix with `G(A) = K₂,ₙ`.
///
/// By induction on `n`: orders ≤ 4 are certified directly; a degree-2
/// vertex with two negative edges is pivoted out, leaving `Tₙ₊₁`, which
/// goes to [`certify_t5`] at `n = 4`; a vertex with two nonnegative edges
/// is bordered off, leaving `K₂,ₙ₋₁`.
pub fn certify_k2n_with(a: &SymMatrix, opts: K2nOptions) -> Result<CertifyTrace> {
    let m = match_k2n(a).ok_or_else(|| Error::PatternMismatch("G(A) is not K2,n".into()))?;
    if m.n > 4 && !opts.allow_beyond_proved {
        return Err(Error::OutOfProvedRange { n: m.n });
    }
    let (scaled, d) = normalize_diag(a)?;
    let mut steps = vec![
        TraceStep::new("normalize_diag", json!({ "scaling": d })),
        TraceStep::new(
            "match_k2n",
            json!({ "n": m.n, "permutation": m.permutation, "negative_pair_vertex": m.negative_pair_vertex }),
        ),
    ];
    let mut chain = Vec::new();
    let mut theta = None;
    let mut ell = None;
    let mut theta_prime = None;

    let (route, cert) = if scaled.order() <= 4 {
        chain.push(Route::ProjectionFallback);
        (
            Route::ProjectionFallback,
            projection_certificate(&scaled, &mut steps)?,
        )
    } else if let Some(w) = m.negative_pair_vertex {
        let reduced = schur_complement(&scaled, w)?;
        let shape = match_tn(&reduced).map(|t| t.n);
        steps.push(TraceStep::new(
            "schur_complement",
            json!({ "vertex": w, "reduced_graph_tn": shape }),
        ));
        if shape != Some(reduced.order()) {
            warn!("G(A/A[{w}]) is not T_{}", reduced.order());
        }
        chain.push(Route::SchurReduce);
        let inner = if reduced.order() == 5 {
            let sub = certify_t5(&reduced)?;
            steps.push(TraceStep::new(
                "certify_t5",
                json!({ "route": sub.route, "steps": sub.steps }),
            ));
            chain.extend(sub.chain);
            theta = sub.theta;
            ell = sub.ell;
            theta_prime = sub.theta_prime;
            sub.certificate
        } else {
            chain.push(Route::ProjectionFallback);
            projection_certificate(&reduced, &mut steps)?
        };
        steps.push(TraceStep::new("lift_schur", json!({ "vertex": w })));
        (Route::SchurReduce, lift_schur(&scaled, w, &inner)?)
    } else if let Some(&w) = m.permutation[2..].iter().find(|&&w| {
        (0..scaled.order()).all(|j| scaled.get(w, j) >= 0.0)
    }) {
        chain.push(Route::Bordered);
        let sub = certify_k2n_with(&scaled.without(w), opts)?;
        steps.push(TraceStep::new(
            "certify_k2n",
            json!({ "removed": w, "route": sub.route, "steps": sub.steps }),
        ));
        chain.extend(sub.chain);
        steps.push(TraceStep::new("lift_bordered", json!({ "vertex": w })));
        (Route::Bordered, lift_bordered(&scaled, w, &sub.certificate)?)
    } else {
        chain.push(Route::ProjectionFallback);
        (
            Route::ProjectionFallback,
            projection_certificate(&scaled, &mut steps)?,
        )
    };

    let certificate = unscale_certificate(&cert, &d);
    let report = certificate.report(a);
    if !report.valid {
        return Err(Error::CertificationFailed(vec![format!(
            "{route} certificate failed validation: {report:?}"
        )]));
    }
    Ok(CertifyTrace {
        route,
        chain,
        steps,
        certificate,
        theta,
        ell,
        theta_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::validate_certificate;

    fn theta(t: [f64; 5]) -> ThetaVector {
        ThetaVector::new(t).unwrap()
    }

    /// `S(θ)` with the zero triangle of `ell` cleared.
    fn edge_restriction(t: &ThetaVector, ell: usize) -> SymMatrix {
        let mut b = build_s(t);
        let tri: [(usize, usize); 3] = if ell == 0 {
            [(0, 1), (0, 4), (1, 4)]
        } else {
            [(0, 3), (0, 4), (3, 4)]
        };
        for (i, j) in tri {
            b.set(i, j, 0.0);
        }
        b
    }

    #[test]
    fn recover_round_trip() {
        let t0 = theta([0.7, 0.1, 0.1, 0.9, 0.9]);
        for ell in [0, 3] {
            let b = edge_restriction(&t0, ell);
            assert_eq!(proof_frame(&b), Some(ell));
            let t = recover_theta(&b, ell).unwrap();
            for i in 0..5 {
                assert!((t[i] - t0[i]).abs() < 1e-10, "ell {ell} theta[{i}]");
            }
        }
    }

    #[test]
    fn recover_horn_edges() {
        let t = recover_theta(&edge_restriction(&ThetaVector::zero(), 0), 0).unwrap();
        assert_eq!(t.as_array(), [0.0; 5]);
    }

    #[test]
    fn recover_rejects_perturbed_check_edge() {
        let mut b = edge_restriction(&theta([0.7, 0.1, 0.1, 0.9, 0.9]), 0);
        b.set(1, 3, b.get(1, 3) + 1e-3);
        assert!(matches!(recover_theta(&b, 0), Err(Error::NotInFamily(_))));
    }

    #[test]
    fn completion_example() {
        let t = theta([0.7, 0.1, 0.1, 0.9, 0.9]);
        let p = theta_completion(&t, 0).unwrap();
        assert!((p[0] - (PI - 2.0)).abs() < 1e-15);
        assert!(0.7 < p[0] && p[0] <= FRAC_PI_2);
        assert_eq!(&p.as_array()[1..], &t.as_array()[1..]);
    }

    #[test]
    fn completion_at_boundary_is_identity() {
        let t = theta([PI - 2.0 - 1e-12, 0.5, 0.5, 0.5, 0.5]);
        for ell in [0, 3] {
            let p = theta_completion(&t, ell).unwrap();
            for i in 0..5 {
                assert!((p[i] - t[i]).abs() <= 2e-12);
            }
        }
    }

    #[test]
    fn completion_rejects_small_rest() {
        let err = theta_completion(&theta([0.1; 5]), 0).unwrap_err();
        assert!(matches!(err, Error::CompletionPrecondition(ref m) if m.contains("pi/2")));
        assert!(theta_completion(&theta([0.1; 5]), 2).is_err());
    }

    #[test]
    fn search_finds_boundary_theta() {
        let t0 = theta([0.5, 0.2, 0.3, 1.0, PI - 2.0]);
        let b = &build_s(&t0) + &SymMatrix::from_fn(5, |i, j| if i == j { 0.0 } else { 0.05 });
        let (p, margin) = search_theta_prime(&b).unwrap();
        assert!(margin > 0.0);
        assert!((p.sum() - PI).abs() < 1e-14);
        assert!(max_excess(&build_s(&p), &b) <= 0.0);
    }

    #[test]
    fn lift_schur_identity() {
        let inner = SpnCertificate {
            p: SymMatrix::identity(4),
            n: SymMatrix::zeros(4),
            tol: 1e-9,
        };
        let out = lift_schur(&SymMatrix::identity(5), 0, &inner).unwrap();
        assert_eq!(out.p, SymMatrix::identity(5));
        assert_eq!(out.n, SymMatrix::zeros(5));
    }

    #[test]
    fn lift_schur_two_by_two() {
        let c = 0.6;
        let a = SymMatrix::from_rows(&[vec![1.0, -c], vec![-c, 1.0]]).unwrap();
        let inner = SpnCertificate {
            p: SymMatrix::from_upper(1, vec![1.0 - c * c]).unwrap(),
            n: SymMatrix::zeros(1),
            tol: 1e-12,
        };
        let out = lift_schur(&a, 0, &inner).unwrap();
        assert!((&out.p - &a).max_abs() < 1e-15);
        assert!(validate_certificate(&a, &out));
    }

    #[test]
    fn lift_bordered_identity_and_wrong_branch() {
        let inner = SpnCertificate {
            p: SymMatrix::identity(4),
            n: SymMatrix::zeros(4),
            tol: 1e-9,
        };
        let out = lift_bordered(&SymMatrix::identity(5), 4, &inner).unwrap();
        assert_eq!(out.p, SymMatrix::diag(&[1.0, 1.0, 1.0, 1.0, 0.0]));
        assert_eq!(out.n, SymMatrix::diag(&[0.0, 0.0, 0.0, 0.0, 1.0]));

        let mut a = SymMatrix::identity(5);
        a.set(4, 1, -0.1);
        assert!(matches!(
            lift_bordered(&a, 4, &inner),
            Err(Error::WrongBranch(_))
        ));
    }

    #[test]
    fn lift_rejects_bad_inner() {
        let inner = SpnCertificate {
            p: SymMatrix::identity(4).scale(2.0),
            n: SymMatrix::zeros(4),
            tol: 1e-9,
        };
        assert!(matches!(
            lift_schur(&SymMatrix::identity(5), 0, &inner),
            Err(Error::InvalidCertificate(_))
        ));
    }

    #[test]
    fn normalize_examples() {
        let id = SymMatrix::identity(5);
        let (s, d) = normalize_diag(&id).unwrap();
        assert_eq!(s, id);
        assert_eq!(d, vec![1.0; 5]);
        let mut z = SymMatrix::identity(3);
        z.set(0, 0, 0.0);
        assert!(matches!(
            normalize_diag(&z),
            Err(Error::NonPositiveDiagonal { index: 0, .. })
        ));
    }

    #[test]
    fn k2n_out_of_range() {
        let mut a = SymMatrix::identity(7);
        for w in 2..7 {
            a.set(0, w, -0.1);
            a.set(1, w, -0.1);
        }
        assert!(matches!(
            certify_k2n(&a),
            Err(Error::OutOfProvedRange { n: 5 })
        ));
    }
}
