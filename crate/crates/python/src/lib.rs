//! Python bindings. Matrices cross the boundary as lists of rows; structured
//! results come back as plain dicts with the same field names as the JSON
//! output of the `copos` CLI.

use copositive::cones::{DEFAULT_MAX_DEPTH, DEFAULT_MAX_ITER, DEFAULT_SPN_TOL, DEFAULT_WITNESS_TOL};
use copositive::generate::{GenKind, GenParams};
use copositive::harness::{search_t6 as run_search, SampleMode, SearchParams};
use copositive::{K2nOptions, SpnCertificate, SymMatrix, ThetaVector};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

create_exception!(copositive_py, CopositiveError, PyException);

fn err(e: copositive::Error) -> PyErr {
    CopositiveError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<SymMatrix> {
    SymMatrix::from_rows(&rows).map_err(err)
}

fn theta(t: [f64; 5]) -> PyResult<ThetaVector> {
    ThetaVector::new(t).map_err(err)
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            // packed symmetric matrices are expanded to rows
            if map.len() == 2 && map.contains_key("order") && map.contains_key("upper") {
                if let Ok(m) = serde_json::from_value::<SymMatrix>(v.clone()) {
                    return Ok(m.to_rows().into_pyobject(py)?.into_any());
                }
            }
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, value_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| CopositiveError::new_err(e.to_string()))?;
    value_to_py(py, &value)
}

/// `S(θ)` for five angles.
#[pyfunction]
fn build_s(t: [f64; 5]) -> PyResult<Vec<Vec<f64>>> {
    Ok(copositive::build_s(&theta(t)?).to_rows())
}

#[pyfunction]
fn horn_matrix() -> Vec<Vec<f64>> {
    copositive::horn_matrix().to_rows()
}

/// One of `HORN`, `PSD_BOUNDARY`, `HILDEBRAND`, `N_IRREDUCIBLE`.
#[pyfunction]
fn classify_s(py: Python<'_>, t: [f64; 5]) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &copositive::classify_s(&theta(t)?))
}

/// `(c, s)` with `S(θ) = c cᵀ + s sᵀ`; requires `Σθ = π`.
#[pyfunction]
fn rank2_factors(t: [f64; 5]) -> PyResult<([f64; 5], [f64; 5])> {
    let f = copositive::rank2_factors(&theta(t)?).map_err(err)?;
    Ok((f.c, f.s))
}

#[pyfunction]
fn schur_complement(rows: Vec<Vec<f64>>, i: usize) -> PyResult<Vec<Vec<f64>>> {
    Ok(copositive::schur_complement(&matrix(rows)?, i).map_err(err)?.to_rows())
}

/// `(is_psd, lambda_min)`.
#[pyfunction]
#[pyo3(signature = (rows, tol = 1e-9))]
fn is_psd(rows: Vec<Vec<f64>>, tol: f64) -> PyResult<(bool, f64)> {
    Ok(copositive::is_psd(&matrix(rows)?, tol))
}

/// `(is_nonneg, min_entry)`.
#[pyfunction]
#[pyo3(signature = (rows, tol = 0.0))]
fn is_nonneg(rows: Vec<Vec<f64>>, tol: f64) -> PyResult<(bool, f64)> {
    Ok(copositive::is_nonneg(&matrix(rows)?, tol))
}

#[pyfunction]
#[pyo3(signature = (rows, max_depth = DEFAULT_MAX_DEPTH, tol = DEFAULT_WITNESS_TOL))]
fn check_copositive(py: Python<'_>, rows: Vec<Vec<f64>>, max_depth: usize, tol: f64) -> PyResult<Bound<'_, PyAny>> {
    let a = matrix(rows)?;
    let v = py.detach(|| copositive::check_copositive(&a, max_depth, tol)).map_err(err)?;
    to_py(py, &v)
}

#[pyfunction]
#[pyo3(signature = (rows, max_iter = DEFAULT_MAX_ITER, tol = DEFAULT_SPN_TOL))]
fn check_spn(py: Python<'_>, rows: Vec<Vec<f64>>, max_iter: usize, tol: f64) -> PyResult<Bound<'_, PyAny>> {
    let a = matrix(rows)?;
    let out = py.detach(|| copositive::check_spn(&a, max_iter, tol));
    to_py(py, &out)
}

/// Checks `A = P + N` with `P` PSD and `N` nonnegative, up to `tol`.
#[pyfunction]
#[pyo3(signature = (rows, p, n, tol = DEFAULT_SPN_TOL))]
fn validate_certificate(rows: Vec<Vec<f64>>, p: Vec<Vec<f64>>, n: Vec<Vec<f64>>, tol: f64) -> PyResult<bool> {
    let cert = SpnCertificate { p: matrix(p)?, n: matrix(n)?, tol };
    Ok(copositive::validate_certificate(&matrix(rows)?, &cert))
}

#[pyfunction]
fn certify_t5(py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Bound<'_, PyAny>> {
    let a = matrix(rows)?;
    let trace = py.detach(|| copositive::certify_t5(&a)).map_err(err)?;
    to_py(py, &trace)
}

#[pyfunction]
#[pyo3(signature = (rows, allow_beyond_proved = false))]
fn certify_k2n(py: Python<'_>, rows: Vec<Vec<f64>>, allow_beyond_proved: bool) -> PyResult<Bound<'_, PyAny>> {
    let a = matrix(rows)?;
    let opts = K2nOptions { allow_beyond_proved };
    let trace = py.detach(|| copositive::certify_k2n_with(&a, opts)).map_err(err)?;
    to_py(py, &trace)
}

/// Matches `rows` against `t5`, `tn` or `k2n`; `None` when it does not fit.
#[pyfunction]
fn match_pattern<'py>(py: Python<'py>, rows: Vec<Vec<f64>>, pattern: &str) -> PyResult<Bound<'py, PyAny>> {
    let a = matrix(rows)?;
    let m = match pattern {
        "t5" => copositive::match_t5(&a),
        "tn" => copositive::match_tn(&a),
        "k2n" => copositive::match_k2n(&a),
        other => return Err(CopositiveError::new_err(format!("unknown pattern {other:?}"))),
    };
    match m {
        Some(m) => to_py(py, &m),
        None => Ok(py.None().into_bound(py)),
    }
}

/// Returns the matrix document produced by generator `kind`.
#[pyfunction]
#[pyo3(signature = (kind, seed = 0, theta = None, n = None, slack = None))]
fn generate<'py>(
    py: Python<'py>,
    kind: &str,
    seed: u64,
    theta: Option<[f64; 5]>,
    n: Option<usize>,
    slack: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: GenKind = kind.parse().map_err(err)?;
    let doc = copositive::generate::generate(kind, &GenParams { theta, n, slack }, seed).map_err(err)?;
    let out = to_py(py, &doc)?;
    out.set_item("matrix", doc.matrix().map_err(err)?.to_rows())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (samples, seed = 0, mode = "mixed", max_depth = DEFAULT_MAX_DEPTH, max_iter = DEFAULT_MAX_ITER))]
fn search_t6<'py>(
    py: Python<'py>,
    samples: usize,
    seed: u64,
    mode: &str,
    max_depth: usize,
    max_iter: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mode: SampleMode = mode.parse().map_err(err)?;
    let params = SearchParams {
        samples,
        seed,
        mode,
        max_depth,
        max_iter,
        tol_w: DEFAULT_WITNESS_TOL,
        spn_tol: DEFAULT_SPN_TOL,
    };
    let report = py.detach(|| run_search(&params)).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn copositive_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CopositiveError", m.py().get_type::<CopositiveError>())?;
    m.add_function(wrap_pyfunction!(build_s, m)?)?;
    m.add_function(wrap_pyfunction!(horn_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(classify_s, m)?)?;
    m.add_function(wrap_pyfunction!(rank2_factors, m)?)?;
    m.add_function(wrap_pyfunction!(schur_complement, m)?)?;
    m.add_function(wrap_pyfunction!(is_psd, m)?)?;
    m.add_function(wrap_pyfunction!(is_nonneg, m)?)?;
    m.add_function(wrap_pyfunction!(check_copositive, m)?)?;
    m.add_function(wrap_pyfunction!(check_spn, m)?)?;
    m.add_function(wrap_pyfunction!(validate_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(certify_t5, m)?)?;
    m.add_function(wrap_pyfunction!(certify_k2n, m)?)?;
    m.add_function(wrap_pyfunction!(match_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(search_t6, m)?)?;
    Ok(())
}
