//! Randomized search over `T₆`-patterned matrices for copositive matrices
//! the projection method cannot split.
//!
//! There is no order-6 analogue of the `S(θ)` family to sample from, so the
//! distribution here is a choice: SPN constructions (`tn_spn`) and
//! random-sign patterns (`tn_random_signs`). Sample `i` draws from its own
//! ChaCha8 stream `(seed, i)`, so any sample can be replayed alone and the
//! report does not depend on evaluation order.

use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{check_copositive, check_spn, CopositivityStatus, SpnOutcome};
use crate::error::{Error, Result};
use crate::generate::{tn_random_signs, tn_spn};
use crate::matrix::SymMatrix;

pub const SEARCH_ORDER: usize = 6;
pub const CANDIDATE_LABEL: &str = "unresolved";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// PSD plus nonnegative, `T₆` pattern: SPN by construction.
    Spn,
    /// Unit diagonal, `±U(0.1, 1)` on the `T₆` edges.
    RandomSigns,
    /// Each sample picks one of the above with equal odds.
    Mixed,
}

impl FromStr for SampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spn" => Ok(Self::Spn),
            "random-signs" => Ok(Self::RandomSigns),
            "mixed" => Ok(Self::Mixed),
            _ => Err(Error::InvalidParams(format!(
                "unknown sample mode {s:?}; expected spn, random-signs or mixed"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub samples: usize,
    pub seed: u64,
    pub mode: SampleMode,
    pub max_depth: usize,
    pub max_iter: usize,
    pub tol_w: f64,
    pub spn_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleVerdict {
    pub index: usize,
    /// `spn` or `random-signs`.
    pub source: String,
    pub copositivity: CopositivityStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_value: Option<f64>,
    /// `CERTIFIED` or `NOT_FOUND`; only run on copositive samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spn: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub label: String,
    pub matrix: SymMatrix,
    pub gap: f64,
    /// Everything needed to regenerate and recheck this sample.
    pub replay: SearchParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub seed: u64,
    pub samples: usize,
    pub params: SearchParams,
    pub not_copositive: usize,
    pub inconclusive: usize,
    pub certified: usize,
    pub verdicts: Vec<SampleVerdict>,
    pub candidates: Vec<Candidate>,
    /// Excluded from the serialized report so reruns compare byte for byte.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SearchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Regenerates sample `index` of a search.
pub fn sample_matrix(params: &SearchParams, index: usize) -> (SymMatrix, &'static str) {
    let mut rng = sample_rng(params.seed, index);
    let spn = match params.mode {
        SampleMode::Spn => true,
        SampleMode::RandomSigns => false,
        SampleMode::Mixed => rng.gen::<bool>(),
    };
    if spn {
        (tn_spn(SEARCH_ORDER, 0.2, &mut rng), "spn")
    } else {
        (tn_random_signs(SEARCH_ORDER, 0.1, 1.0, &mut rng), "random-signs")
    }
}

fn evaluate(params: &SearchParams, index: usize) -> Result<(SampleVerdict, Option<Candidate>)> {
    let (a, source) = sample_matrix(params, index);
    let cop = check_copositive(&a, params.max_depth, params.tol_w)?;
    let mut verdict = SampleVerdict {
        index,
        source: source.to_owned(),
        copositivity: cop.status,
        witness: cop.witness,
        witness_value: cop.witness_value,
        spn: None,
        gap: None,
    };
    let mut candidate = None;
    if cop.status == CopositivityStatus::Copositive {
        match check_spn(&a, params.max_iter, params.spn_tol) {
            SpnOutcome::Certified { .. } => verdict.spn = Some("CERTIFIED".into()),
            SpnOutcome::NotFound { gap, .. } => {
                verdict.spn = Some("NOT_FOUND".into());
                verdict.gap = Some(gap);
                candidate = Some(Candidate {
                    index,
                    label: CANDIDATE_LABEL.into(),
                    matrix: a,
                    gap,
                    replay: *params,
                });
            }
        }
    }
    Ok((verdict, candidate))
}

pub fn search_t6(params: &SearchParams) -> Result<SearchReport> {
    if params.samples == 0 {
        return Err(Error::InvalidParams("samples must be >= 1".into()));
    }
    let start = Instant::now();
    let results: Vec<(SampleVerdict, Option<Candidate>)> = (0..params.samples)
        .into_par_iter()
        .map(|i| evaluate(params, i))
        .collect::<Result<_>>()?;
    let mut verdicts = Vec::with_capacity(results.len());
    let mut candidates = Vec::new();
    for (v, c) in results {
        verdicts.push(v);
        candidates.extend(c);
    }
    let count = |s: CopositivityStatus| verdicts.iter().filter(|v| v.copositivity == s).count();
    Ok(SearchReport {
        seed: params.seed,
        samples: params.samples,
        params: *params,
        not_copositive: count(CopositivityStatus::NotCopositive),
        inconclusive: count(CopositivityStatus::Inconclusive),
        certified: verdicts.iter().filter(|v| v.spn.as_deref() == Some("CERTIFIED")).count(),
        verdicts,
        candidates,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
