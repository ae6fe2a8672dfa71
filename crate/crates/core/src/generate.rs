//! Deterministic instance generators.
//!
//! Every generator takes an explicit RNG; [`generate`] seeds a ChaCha8
//! stream from the caller's seed so `(kind, params, seed)` fixes the output.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::certify::theta_completion;
use crate::document::{MatrixDocument, Metadata};
use crate::error::{Error, Result};
use crate::graphs::{match_t5, match_tn, tn_edges, PatternKind, Reduction};
use crate::matrices::{build_s, classify_s, horn_matrix, SFamilyClass, ThetaVector};
use crate::matrix::SymMatrix;

/// Smallest magnitude kept on a generated edge.
const EDGE_FLOOR: f64 = 0.05;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generated matrix with what is known about it by construction.
#[derive(Clone, Debug)]
pub struct Instance {
    pub matrix: SymMatrix,
    pub theta: Option<ThetaVector>,
    pub labels: BTreeMap<String, String>,
}

impl Instance {
    fn new(matrix: SymMatrix) -> Self {
        Self {
            matrix,
            theta: None,
            labels: BTreeMap::new(),
        }
    }

    fn label(mut self, key: &str, value: impl ToString) -> Self {
        self.labels.insert(key.to_owned(), value.to_string());
        self
    }
}

fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn shuffled(inst: Instance, rng: &mut impl Rng) -> Instance {
    let perm = random_permutation(inst.matrix.order(), rng);
    let matrix = inst.matrix.permuted(&perm);
    let perm_text = format!("{perm:?}");
    Instance { matrix, ..inst }.label("permutation", perm_text)
}

fn unit_diagonal(a: &SymMatrix) -> SymMatrix {
    let d: Vec<f64> = a.diagonal().iter().map(|v| 1.0 / v.sqrt()).collect();
    SymMatrix::from_fn(a.order(), |i, j| {
        if i == j {
            1.0
        } else {
            d[i] * a.get(i, j) * d[j]
        }
    })
}

/// Gram matrix of `order` standard normal vectors in `ℝ^rank`.
pub fn random_psd(order: usize, rank: usize, rng: &mut impl Rng) -> SymMatrix {
    let vs: Vec<Vec<f64>> = (0..order)
        .map(|_| (0..rank).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    SymMatrix::from_fn(order, |i, j| vs[i].iter().zip(&vs[j]).map(|(x, y)| x * y).sum())
}

/// `θ ≥ 0` with `Σθ = π`, uniform on the scaled simplex.
pub fn sample_theta_boundary(rng: &mut impl Rng) -> ThetaVector {
    loop {
        let e: Vec<f64> = (0..5).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        let mut t = [0.0; 5];
        for i in 0..4 {
            t[i] = PI * e[i] / total;
        }
        t[4] = PI - t[..4].iter().sum::<f64>();
        if let Ok(v) = ThetaVector::new(t) {
            return v;
        }
    }
}

/// Valid `θ` with `Σθ < π`; each component is zero with probability
/// `zero_prob`.
pub fn sample_theta_interior(rng: &mut impl Rng, max_sum_frac: f64, zero_prob: f64) -> ThetaVector {
    let e: Vec<f64> = (0..5)
        .map(|_| {
            if rng.gen::<f64>() < zero_prob {
                0.0
            } else {
                -(1.0 - rng.gen::<f64>()).ln()
            }
        })
        .collect();
    let total: f64 = e.iter().sum();
    if total == 0.0 {
        return ThetaVector::zero();
    }
    let target = PI * max_sum_frac * rng.gen::<f64>();
    let mut t = [0.0; 5];
    for i in 0..5 {
        t[i] = target * e[i] / total;
    }
    ThetaVector::new(t).expect("scaled below pi")
}

/// `θ > 0` with `Σθ ∈ [0.05π, max_sum_frac·π]`.
pub fn sample_hildebrand(rng: &mut impl Rng, max_sum_frac: f64) -> ThetaVector {
    loop {
        let e: Vec<f64> = (0..5).map(|_| 0.05 + rng.gen::<f64>()).collect();
        let total: f64 = e.iter().sum();
        let target = PI * rng.gen_range(0.05..max_sum_frac);
        let mut t = [0.0; 5];
        for i in 0..5 {
            t[i] = target * e[i] / total;
        }
        let th = ThetaVector::new(t).expect("scaled below pi");
        if classify_s(&th) == SFamilyClass::Hildebrand {
            return th;
        }
    }
}

/// `θ` in the configuration the zero-triangle argument needs: every
/// `θᵢ ≤ π/2`, `θ₃ + θ₄ ≥ π/2`, `θ₄ + θ₀ ≥ π/2` and `Σθ < π`, each
/// inequality held with at least `margin` to spare.
pub fn sample_completion_theta(rng: &mut impl Rng, margin: f64) -> ThetaVector {
    loop {
        let t = [
            rng.gen_range(0.0..FRAC_PI_2),
            rng.gen_range(0.0..FRAC_PI_4),
            rng.gen_range(0.0..FRAC_PI_4),
            rng.gen_range(0.0..FRAC_PI_2),
            rng.gen_range(0.0..FRAC_PI_2),
        ];
        let sum: f64 = t.iter().sum();
        let ok = t.iter().all(|&v| v <= FRAC_PI_2 - margin)
            && t[3] + t[4] >= FRAC_PI_2 + margin
            && t[4] + t[0] >= FRAC_PI_2 + margin
            && sum <= PI - margin;
        if ok {
            return ThetaVector::new(t).expect("checked");
        }
    }
}

/// Zero triangle of a proof-coordinate matrix for completion index `ell`.
pub fn zero_triangle(ell: usize) -> [(usize, usize); 3] {
    if ell == 0 {
        [(0, 1), (0, 4), (1, 4)]
    } else {
        [(0, 3), (0, 4), (3, 4)]
    }
}

/// `S(θ)` with the zero triangle of `ell` cleared.
pub fn edge_restriction(theta: &ThetaVector, ell: usize) -> SymMatrix {
    let mut b = build_s(theta);
    for (i, j) in zero_triangle(ell) {
        b.set(i, j, 0.0);
    }
    b
}

fn edges_clear_floor(a: &SymMatrix, edges: &[(usize, usize)]) -> bool {
    edges.iter().all(|&(i, j)| a.get(i, j).abs() >= EDGE_FLOOR)
}

/// Edges of a proof-coordinate `T₅` with zero triangle `{0, 1, 4}`.
const PROOF_EDGES: [(usize, usize); 7] = [(0, 2), (1, 3), (2, 4), (1, 2), (2, 3), (3, 4), (0, 3)];

/// Exact edge restriction of `S(θ)`, in proof coordinates.
fn t5_theta_unshuffled(rng: &mut impl Rng) -> Instance {
    loop {
        let theta = sample_completion_theta(rng, 1e-3);
        let b = edge_restriction(&theta, 0);
        if edges_clear_floor(&b, &PROOF_EDGES) {
            let mut inst = Instance::new(b).label("route", "THETA_COMPLETION").label("graph", "T5");
            inst.theta = Some(theta);
            return inst;
        }
    }
}

/// `S(θ′) + N` with `Σθ′ = π`, `N ≥ 0` filling the zero triangle and
/// adding up to `slack` on the edges (never flipping a sign).
fn t5_spn_unshuffled(rng: &mut impl Rng, slack: f64) -> Instance {
    loop {
        let theta = sample_completion_theta(rng, 1e-3);
        let prime = theta_completion(&theta, 0).expect("sampled inside the completion region");
        let mut a = edge_restriction(&prime, 0);
        for &(i, j) in &PROOF_EDGES {
            let v = a.get(i, j);
            let mut add = slack * rng.gen::<f64>();
            if v < 0.0 {
                add = add.min(0.5 * v.abs());
            }
            a.set(i, j, v + add);
        }
        if edges_clear_floor(&a, &PROOF_EDGES) {
            let mut inst = Instance::new(a).label("graph", "T5");
            inst.theta = Some(prime);
            return inst;
        }
    }
}

/// Random 4×4 `P₀` on `[apex, apex, base, base]` with a nonpositive
/// apex–apex entry, which `N₀` then cancels.
fn inner_with_zero_pair(rng: &mut impl Rng) -> SymMatrix {
    loop {
        let p0 = unit_diagonal(&random_psd(4, 4, rng));
        if p0.get(0, 1) < 0.0 {
            let mut c = p0;
            c.set(0, 1, 0.0);
            return c;
        }
    }
}

/// Layout `[border, apex, apex, base, base]`: a positive border on an
/// SPN 4×4 block.
fn t5_bordered_unshuffled(rng: &mut impl Rng) -> Instance {
    loop {
        let inner = inner_with_zero_pair(rng);
        let mut a = inner.embed_at(0);
        a.set(0, 0, 1.0);
        a.set(0, 3, rng.gen_range(0.1..0.9));
        a.set(0, 4, rng.gen_range(0.1..0.9));
        let edges = crate::graphs::tn_edges(5);
        if edges_clear_floor(&a, &edges) {
            return Instance::new(a).label("route", "BORDERED").label("graph", "T5");
        }
    }
}

/// Layout `[pivot, apex, apex, base, base]`:
/// `[[1, bᵀ], [b, P₀ + bbᵀ + N₀]]` with `b < 0` on the base.
fn t5_schur_unshuffled(rng: &mut impl Rng) -> Instance {
    loop {
        let p0 = inner_with_zero_pair(rng);
        let b = [0.0, 0.0, -rng.gen_range(0.1..0.9), -rng.gen_range(0.1..0.9)];
        let c = &p0 + &SymMatrix::outer(&b);
        let mut a = c.embed_at(0);
        a.set(0, 0, 1.0);
        for (k, &bk) in b.iter().enumerate() {
            a.set(0, k + 1, bk);
        }
        let a = unit_diagonal(&a);
        // no apex may offer the bordered shortcut
        let bordered = (1..3).any(|k| a.get(k, 3) > 0.0 && a.get(k, 4) > 0.0);
        if !bordered && edges_clear_floor(&a, &tn_edges(5)) {
            return Instance::new(a).label("route", "SCHUR_REDUCE").label("graph", "T5");
        }
    }
}

pub fn t5_theta(rng: &mut impl Rng) -> Instance {
    let inst = t5_theta_unshuffled(rng);
    shuffled(inst, rng)
}

pub fn t5_spn(rng: &mut impl Rng, slack: f64) -> Instance {
    let inst = t5_spn_unshuffled(rng, slack);
    shuffled(inst, rng)
}

pub fn t5_bordered(rng: &mut impl Rng) -> Instance {
    let inst = t5_bordered_unshuffled(rng);
    shuffled(inst, rng)
}

pub fn t5_schur(rng: &mut impl Rng) -> Instance {
    let inst = t5_schur_unshuffled(rng);
    shuffled(inst, rng)
}

/// A PSD `Tₘ` on layout `[apex…, u, v]`: Gram matrix of `sₖ eₖ` for the
/// apexes and dense `u`, `v`, so apexes are pairwise orthogonal. The base
/// entry is negative when `negative_base`.
pub fn tn_psd(m: usize, negative_base: bool, rng: &mut impl Rng) -> SymMatrix {
    assert!(m >= 3);
    loop {
        let mut vs: Vec<Vec<f64>> = (0..m - 2)
            .map(|k| {
                let mut v = vec![0.0; m];
                v[k] = rng.gen_range(0.5..1.5);
                v
            })
            .collect();
        for _ in 0..2 {
            vs.push((0..m).map(|_| rng.sample(StandardNormal)).collect());
        }
        let g = SymMatrix::from_fn(m, |i, j| vs[i].iter().zip(&vs[j]).map(|(x, y)| x * y).sum());
        let g = unit_diagonal(&g);
        let base_ok = !negative_base || g.get(m - 2, m - 1) < 0.0;
        if base_ok && edges_clear_floor(&g, &tn_edges(m)) {
            return g;
        }
    }
}

/// An SPN `Tₘ`: [`tn_psd`] plus up to `slack` on its positive edges.
pub fn tn_spn(m: usize, slack: f64, rng: &mut impl Rng) -> SymMatrix {
    let mut g = tn_psd(m, false, rng);
    for (i, j) in tn_edges(m) {
        let v = g.get(i, j);
        if v > 0.0 {
            g.set(i, j, v + slack * rng.gen::<f64>());
        }
    }
    g
}

/// Unit diagonal with `±U(lo, hi)` on the edges of `Tₘ`, signs uniform.
pub fn tn_random_signs(m: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> SymMatrix {
    let mut a = SymMatrix::identity(m);
    for (i, j) in tn_edges(m) {
        let mag = rng.gen_range(lo..hi);
        a.set(i, j, if rng.gen::<bool>() { mag } else { -mag });
    }
    a
}

/// Moves the base pair of a `Tₘ` matrix to the last two indices.
fn base_last(c: &SymMatrix) -> SymMatrix {
    let m = match_tn(c).expect("generated T_n");
    c.permuted(&m.permutation)
}

/// `K₂,ₙ` on layout `[u, v, w₁, …, wₙ]`, lifted from an SPN `Tₙ₊₁`
/// through a pivot `wₙ` with two negative edges: `A/A[wₙ]` is the `Tₙ₊₁`.
/// For `n = 4` the `Tₙ₊₁` is one of the `T₅` route instances.
pub fn k2n(n: usize, rng: &mut impl Rng) -> Instance {
    assert!(n >= 2);
    let (inner, source) = loop {
        let (c, source) = if n == 4 {
            let pick = rng.gen_range(0..3);
            let inst = match pick {
                0 => t5_theta_unshuffled(rng),
                1 => t5_bordered_unshuffled(rng),
                _ => t5_schur_unshuffled(rng),
            };
            let route = inst.labels["route"].clone();
            (base_last(&inst.matrix), route)
        } else {
            (tn_psd(n + 1, true, rng), "PSD".to_owned())
        };
        if c.get(n - 1, n) <= -EDGE_FLOOR {
            break (c, source);
        }
    };
    // inner layout [a₁ … aₙ₋₁, u, v]; pivot column b lives on u, v
    let target = -inner.get(n - 1, n);
    let r: f64 = rng.gen_range(0.5..2.0);
    let bu = -target.sqrt() * r;
    let bv = -target.sqrt() / r;
    let m = n + 2;
    // map inner index -> outer index: u -> 0, v -> 1, a_k -> 2 + k; pivot -> m - 1
    let outer = |k: usize| -> usize {
        if k == n - 1 {
            0
        } else if k == n {
            1
        } else {
            k + 2
        }
    };
    let mut a = SymMatrix::zeros(m);
    for i in 0..=n {
        for j in i..=n {
            a.set(outer(i), outer(j), inner.get(i, j));
        }
    }
    a.set(0, 0, a.get(0, 0) + bu * bu);
    a.set(1, 1, a.get(1, 1) + bv * bv);
    a.set(0, 1, 0.0);
    a.set(m - 1, m - 1, 1.0);
    a.set(0, m - 1, bu);
    a.set(1, m - 1, bv);
    let a = unit_diagonal(&a);
    let inst = Instance::new(a)
        .label("graph", format!("K2,{n}"))
        .label("reduced_from", source);
    shuffled(inst, rng)
}

/// `A ≥ S(θ)` entrywise: `S(θ)` plus nonnegative slack on its positive
/// entries, symmetrically permuted. Such matrices are copositive and not
/// necessarily SPN.
pub fn dominating_s(theta: &ThetaVector, slack: f64, rng: &mut impl Rng) -> Instance {
    let s = build_s(theta);
    let mut a = s.clone();
    for i in 0..5 {
        for j in (i + 1)..5 {
            let v = s.get(i, j);
            if v > 0.0 {
                a.set(i, j, v + slack * rng.gen::<f64>());
            }
        }
    }
    let mut inst = Instance::new(a).label("dominates", "S(theta)");
    inst.theta = Some(*theta);
    shuffled(inst, rng)
}

/// Expected route for a shuffled `T₅` instance, read from its match.
pub fn expected_t5_route(a: &SymMatrix) -> Option<&'static str> {
    let m = match_t5(a)?;
    Some(match (m.reduction, m.kind) {
        (Some(Reduction::Bordered { .. }), _) => "BORDERED",
        (Some(Reduction::Schur { .. }), _) => "SCHUR_REDUCE",
        (None, PatternKind::T5Pattern) => "THETA",
        _ => "OTHER",
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GenKind {
    Horn,
    Hildebrand,
    STheta,
    T5Spn,
    T5Theta,
    T5Bordered,
    T5Schur,
    K2n,
    Tn,
    Dominating,
}

impl GenKind {
    pub const ALL: [GenKind; 10] = [
        GenKind::Horn,
        GenKind::Hildebrand,
        GenKind::STheta,
        GenKind::T5Spn,
        GenKind::T5Theta,
        GenKind::T5Bordered,
        GenKind::T5Schur,
        GenKind::K2n,
        GenKind::Tn,
        GenKind::Dominating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenKind::Horn => "horn",
            GenKind::Hildebrand => "hildebrand",
            GenKind::STheta => "s-theta",
            GenKind::T5Spn => "t5-spn",
            GenKind::T5Theta => "t5-theta",
            GenKind::T5Bordered => "t5-bordered",
            GenKind::T5Schur => "t5-schur",
            GenKind::K2n => "k2n",
            GenKind::Tn => "tn",
            GenKind::Dominating => "dominating",
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GenKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = GenKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidParams(format!("unknown kind {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenParams {
    pub theta: Option<[f64; 5]>,
    /// `n` of `K₂,ₙ`, or the order of `Tₙ`.
    pub n: Option<usize>,
    pub slack: Option<f64>,
}

fn theta_param(params: &GenParams) -> Result<Option<ThetaVector>> {
    params
        .theta
        .map(|t| ThetaVector::new(t).map_err(|e| Error::InvalidParams(e.to_string())))
        .transpose()
}

/// Builds the document for `(kind, params, seed)`.
pub fn generate(kind: GenKind, params: &GenParams, seed: u64) -> Result<MatrixDocument> {
    let mut rng = rng_from_seed(seed);
    let slack = params.slack.unwrap_or(0.1);
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(Error::InvalidParams(format!("slack must be >= 0, got {slack}")));
    }
    let inst = match kind {
        GenKind::Horn => {
            let mut i = Instance::new(horn_matrix()).label("class", SFamilyClass::Horn);
            i.theta = Some(ThetaVector::zero());
            i
        }
        GenKind::Hildebrand => {
            let theta = match theta_param(params)? {
                Some(t) => t,
                None => sample_hildebrand(&mut rng, 0.9),
            };
            let class = classify_s(&theta);
            if class != SFamilyClass::Hildebrand {
                return Err(Error::InvalidParams(format!(
                    "theta {:?} classifies as {class}, not HILDEBRAND",
                    theta.as_array()
                )));
            }
            let mut i = Instance::new(build_s(&theta)).label("class", class);
            i.theta = Some(theta);
            i
        }
        GenKind::STheta => {
            let theta = match theta_param(params)? {
                Some(t) => t,
                None => sample_theta_interior(&mut rng, 1.0, 0.25),
            };
            let mut i = Instance::new(build_s(&theta)).label("class", classify_s(&theta));
            i.theta = Some(theta);
            i
        }
        GenKind::T5Spn => t5_spn(&mut rng, slack),
        GenKind::T5Theta => t5_theta(&mut rng),
        GenKind::T5Bordered => t5_bordered(&mut rng),
        GenKind::T5Schur => t5_schur(&mut rng),
        GenKind::K2n => {
            let n = params.n.unwrap_or(4);
            if !(2..=6).contains(&n) {
                return Err(Error::InvalidParams(format!("k2n needs 2 <= n <= 6, got {n}")));
            }
            k2n(n, &mut rng)
        }
        GenKind::Tn => {
            let m = params.n.unwrap_or(6);
            if !(3..=8).contains(&m) {
                return Err(Error::InvalidParams(format!("tn needs 3 <= n <= 8, got {m}")));
            }
            Instance::new(tn_spn(m, slack, &mut rng)).label("graph", format!("T{m}"))
        }
        GenKind::Dominating => {
            let theta = match theta_param(params)? {
                Some(t) => t,
                None => sample_theta_interior(&mut rng, 1.0, 0.0),
            };
            dominating_s(&theta, slack, &mut rng)
        }
    };
    Ok(MatrixDocument::new(
        &inst.matrix,
        Metadata {
            generator: Some(kind.name().to_owned()),
            theta: inst.theta,
            seed: Some(seed),
            labels: inst.labels,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::is_psd;
    use crate::graphs::{graph_of, match_k2n, DEFAULT_ZERO_TOL};

    #[test]
    fn boundary_theta_sums_to_pi() {
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            assert!((sample_theta_boundary(&mut rng).sum() - PI).abs() < 1e-14);
        }
    }

    #[test]
    fn route_instances_match_their_route() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            assert_eq!(expected_t5_route(&t5_bordered(&mut rng).matrix), Some("BORDERED"));
            assert_eq!(expected_t5_route(&t5_schur(&mut rng).matrix), Some("SCHUR_REDUCE"));
            assert_eq!(expected_t5_route(&t5_theta(&mut rng).matrix), Some("THETA"));
            assert_eq!(expected_t5_route(&t5_spn(&mut rng, 0.1).matrix), Some("THETA"));
        }
    }

    #[test]
    fn k2n_instances_match() {
        let mut rng = rng_from_seed(5);
        for n in 2..=5 {
            let inst = k2n(n, &mut rng);
            let m = match_k2n(&inst.matrix).unwrap();
            assert_eq!(m.n, n);
            assert!(m.negative_pair_vertex.is_some());
        }
    }

    #[test]
    fn tn_psd_has_pattern() {
        let mut rng = rng_from_seed(9);
        let g = tn_psd(6, true, &mut rng);
        assert!(is_psd(&g, 1e-12).0);
        assert_eq!(graph_of(&g, DEFAULT_ZERO_TOL).edge_count(), 9);
    }

    #[test]
    fn generate_is_deterministic() {
        for kind in GenKind::ALL {
            let a = generate(kind, &GenParams::default(), 42).unwrap();
            let b = generate(kind, &GenParams::default(), 42).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn hildebrand_rejects_zero_component() {
        let params = GenParams {
            theta: Some([0.3, 0.0, 0.2, 0.1, 0.1]),
            ..Default::default()
        };
        assert!(generate(GenKind::Hildebrand, &params, 0).is_err());
    }
}
