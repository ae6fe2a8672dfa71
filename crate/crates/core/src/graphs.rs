//! Signed graphs of symmetric matrices and recognition of the `T₅`,
//! `Tₙ` and `K₂,ₙ` patterns.
//!
//! A permutation `p` maps a matrix `A` onto a canonical layout when
//! `A.permuted(p)`, i.e. `B[i][j] = A[p[i]][p[j]]`, has that layout. When
//! several permutations qualify (pattern automorphisms) the
//! lexicographically smallest is returned.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::matrix::SymMatrix;

pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        })
    }
}

/// Undirected graph with `±` edge labels; no loops, one edge per pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedGraph {
    order: usize,
    edges: BTreeMap<(usize, usize), Sign>,
}

impl SignedGraph {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            edges: BTreeMap::new(),
        }
    }

    pub fn from_edges(order: usize, edges: &[(usize, usize, Sign)]) -> Self {
        let mut g = Self::new(order);
        for &(i, j, s) in edges {
            g.insert(i, j, s);
        }
        g
    }

    /// Inserts or relabels the edge `{i, j}`. Self-loops are ignored.
    pub fn insert(&mut self, i: usize, j: usize, sign: Sign) {
        assert!(i < self.order && j < self.order, "vertex out of range");
        if i != j {
            self.edges.insert((i.min(j), i.max(j)), sign);
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn sign(&self, i: usize, j: usize) -> Option<Sign> {
        self.edges.get(&(i.min(j), i.max(j))).copied()
    }

    /// Edges `(i, j, sign)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Sign)> + '_ {
        self.edges.iter().map(|(&(i, j), &s)| (i, j, s))
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.order).filter(|&u| self.sign(u, v).is_some()).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    /// Relabels vertices so that vertex `i` of the result is `perm[i]` here.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0; self.order];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let mut g = Self::new(self.order);
        for (i, j, s) in self.edges() {
            g.insert(inv[i], inv[j], s);
        }
        g
    }

    /// Whether every vertex is reachable from vertex 0.
    pub fn is_connected(&self) -> bool {
        if self.order <= 1 {
            return true;
        }
        let mut seen = vec![false; self.order];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Whether the graph contains three mutually adjacent vertices.
    pub fn has_triangle(&self) -> bool {
        self.edges().any(|(i, j, _)| {
            (0..self.order).any(|k| self.sign(i, k).is_some() && self.sign(j, k).is_some())
        })
    }
}

/// `G(A)`: an edge wherever `|aᵢⱼ| > zero_tol`, signed like `aᵢⱼ`.
pub fn graph_of(a: &SymMatrix, zero_tol: f64) -> SignedGraph {
    let n = a.order();
    let mut g = SignedGraph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = a.get(i, j);
            if v > zero_tol {
                g.insert(i, j, Sign::Positive);
            } else if v < -zero_tol {
                g.insert(i, j, Sign::Negative);
            }
        }
    }
    g
}

/// `G₋`: the negative edges, and whether they connect all vertices.
pub fn negative_subgraph(g: &SignedGraph) -> (SignedGraph, bool) {
    let mut neg = SignedGraph::new(g.order());
    for (i, j, s) in g.edges() {
        if s == Sign::Negative {
            neg.insert(i, j, s);
        }
    }
    let connected = neg.is_connected();
    (neg, connected)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PatternKind {
    /// The signed `T₅` layout with no degree-2 shortcut (see [`t5_layout`]).
    T5Pattern,
    /// `Tₙ` as an unsigned graph.
    Tn,
    K2n,
    Other,
}

/// How a degree-2 vertex of `T₅` reduces the problem to order 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Reduction {
    /// Both off-diagonal entries of the row are positive.
    Bordered { vertex: usize },
    /// Both are negative.
    Schur { vertex: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub kind: PatternKind,
    /// Maps the source matrix onto the canonical layout of `kind`.
    pub permutation: Vec<usize>,
    /// `n` of `Tₙ` or `K₂,ₙ`.
    pub n: usize,
    pub reduction: Option<Reduction>,
    /// For `K₂,ₙ`: the smallest degree-2 vertex carrying two negative edges.
    pub negative_pair_vertex: Option<usize>,
}

/// The signed `T₅` layout: vertices 0, 1, 2 independent, base `{3, 4}`.
///
/// ```text
///  1  0  0  -  +
///  0  1  0  -  +
///  0  0  1  +  -
///  -  -  +  1  -
///  +  +  -  -  1
/// ```
pub fn t5_layout() -> SignedGraph {
    use Sign::*;
    SignedGraph::from_edges(
        5,
        &[
            (0, 3, Negative),
            (0, 4, Positive),
            (1, 3, Negative),
            (1, 4, Positive),
            (2, 3, Positive),
            (2, 4, Negative),
            (3, 4, Negative),
        ],
    )
}

/// Unsigned `Tₙ`: vertices `0..n-2` each joined to the base `{n-2, n-1}`.
pub fn tn_edges(n: usize) -> Vec<(usize, usize)> {
    assert!(n >= 3, "T_n needs n >= 3");
    let mut e: Vec<(usize, usize)> = (0..n - 2).flat_map(|i| [(i, n - 2), (i, n - 1)]).collect();
    e.push((n - 2, n - 1));
    e
}

/// Unsigned `K₂,ₙ` with parts `{0, 1}` and `{2, …, n+1}`.
pub fn k2n_edges(n: usize) -> Vec<(usize, usize)> {
    (2..n + 2).flat_map(|w| [(0, w), (1, w)]).collect()
}

/// Rearranges `perm` into the next permutation in lexicographic order.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// First permutation in lexicographic order satisfying `accept`.
fn smallest_permutation(n: usize, mut accept: impl FnMut(&[usize]) -> bool) -> Option<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        if accept(&perm) {
            return Some(perm);
        }
        if !next_permutation(&mut perm) {
            return None;
        }
    }
}

fn same_unsigned(g: &SignedGraph, perm: &[usize], edges: &[(usize, usize)]) -> bool {
    edges.len() == g.edge_count() && edges.iter().all(|&(i, j)| g.sign(perm[i], perm[j]).is_some())
}

fn same_signed(g: &SignedGraph, perm: &[usize], target: &SignedGraph) -> bool {
    target.edge_count() == g.edge_count()
        && target
            .edges()
            .all(|(i, j, s)| g.sign(perm[i], perm[j]) == Some(s))
}

/// Recognizes `G(A) = Tₙ` (unsigned, `n = order ≥ 3`).
pub fn match_tn(a: &SymMatrix) -> Option<PatternMatch> {
    let n = a.order();
    if n < 3 {
        return None;
    }
    let g = graph_of(a, DEFAULT_ZERO_TOL);
    let edges = tn_edges(n);
    if g.edge_count() != edges.len() {
        return None;
    }
    let mut best: Option<Vec<usize>> = None;
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let mut perm: Vec<usize> = (0..n).filter(|&k| k != u && k != v).collect();
            perm.push(u);
            perm.push(v);
            if same_unsigned(&g, &perm, &edges) && best.as_ref().is_none_or(|b| perm < *b) {
                best = Some(perm);
            }
        }
    }
    best.map(|permutation| PatternMatch {
        kind: PatternKind::Tn,
        permutation,
        n,
        reduction: None,
        negative_pair_vertex: None,
    })
}

/// Recognizes `G(A) = T₅` and sorts it into one of the proof's cases:
/// a degree-2 vertex with two positive entries (checked first) or two
/// negative entries yields a [`Reduction`]; otherwise the signed layout
/// [`t5_layout`] is searched over all 120 relabelings. Any other `T₅`
/// sign pattern comes back as `Tn` with no reduction.
pub fn match_t5(a: &SymMatrix) -> Option<PatternMatch> {
    if a.order() != 5 {
        return None;
    }
    let base = match_tn(a)?;
    let g = graph_of(a, DEFAULT_ZERO_TOL);
    let low_degree: Vec<usize> = (0..5).filter(|&v| g.degree(v) == 2).collect();
    let signs = |v: usize| -> Vec<Sign> { g.neighbors(v).iter().filter_map(|&u| g.sign(u, v)).collect() };
    for want in [Sign::Positive, Sign::Negative] {
        if let Some(&v) = low_degree.iter().find(|&&v| signs(v).iter().all(|&s| s == want)) {
            return Some(PatternMatch {
                reduction: Some(match want {
                    Sign::Positive => Reduction::Bordered { vertex: v },
                    Sign::Negative => Reduction::Schur { vertex: v },
                }),
                ..base
            });
        }
    }
    let layout = t5_layout();
    match smallest_permutation(5, |p| same_signed(&g, p, &layout)) {
        Some(permutation) => Some(PatternMatch {
            kind: PatternKind::T5Pattern,
            permutation,
            n: 5,
            reduction: None,
            negative_pair_vertex: None,
        }),
        None => Some(base),
    }
}

/// Recognizes `G(A) = K₂,ₙ` with `n = order − 2 ≥ 1`.
pub fn match_k2n(a: &SymMatrix) -> Option<PatternMatch> {
    let order = a.order();
    if order < 3 {
        return None;
    }
    let n = order - 2;
    let g = graph_of(a, DEFAULT_ZERO_TOL);
    let edges = k2n_edges(n);
    if g.edge_count() != edges.len() {
        return None;
    }
    for u in 0..order {
        for v in (u + 1)..order {
            let mut perm = vec![u, v];
            perm.extend((0..order).filter(|&k| k != u && k != v));
            if same_unsigned(&g, &perm, &edges) {
                let negative_pair_vertex = perm[2..].iter().copied().find(|&w| {
                    g.sign(w, u) == Some(Sign::Negative) && g.sign(w, v) == Some(Sign::Negative)
                });
                return Some(PatternMatch {
                    kind: PatternKind::K2n,
                    permutation: perm,
                    n,
                    reduction: None,
                    negative_pair_vertex,
                });
            }
        }
    }
    None
}
