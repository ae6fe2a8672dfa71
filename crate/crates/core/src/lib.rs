//! Toolkit for the order-5 copositive cone.
//!
//! The crate builds and classifies the `S(θ)` matrix family (Horn and
//! Hildebrand matrices among them), decides membership in the PSD,
//! nonnegative, copositive and SPN cones with explicit certificates, and
//! constructs SPN decompositions for copositive matrices whose graph is `T₅`
//! or `K₂,ₙ` (n ≤ 4).
//!
//! Indices are zero-based throughout the API. The cyclic S-family layout
//! uses `i ⊞ k = (i + k) mod 5`.

pub mod certify;
pub mod cones;
pub mod document;
mod error;
pub mod generate;
pub mod graphs;
pub mod harness;
pub mod linalg;
pub mod matrices;
mod matrix;

pub use certify::{
    certify_k2n, certify_k2n_with, certify_t5, lift_bordered, lift_schur, normalize_diag,
    recover_theta, theta_completion, CertifyTrace, K2nOptions, Route, TraceStep,
};
pub use cones::{
    check_copositive, check_spn, is_nonneg, is_psd, validate_certificate, CopositivityStatus,
    CopositivityVerdict, SpnCertificate, SpnOutcome,
};
pub use graphs::{
    graph_of, match_k2n, match_t5, match_tn, negative_subgraph, PatternKind, PatternMatch,
    Reduction, Sign, SignedGraph,
};
pub use error::{Error, Result};
pub use matrices::{
    build_s, classify_s, horn_matrix, rank2_factors, schur_complement, Rank2Factors, SFamilyClass,
    ThetaVector,
};
pub use matrix::SymMatrix;
