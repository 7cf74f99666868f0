//! Python bindings for the correlation-discovery engine: estimators,
//! synthetic generators, association classification, and the full layered
//! window search.

use std::str::FromStr;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use amic_core::assoc;
use amic_core::ingest::{rank_transform, SeriesPair};
use amic_core::ksg;
use amic_core::parallel::recursive_parallel_search;
use amic_core::search::{
    layered_search, CoverageInner, GranularityLadder, NormKind, SearchConfig, ThresholdStrategy,
    WindowResult, DEFAULT_MIN_WINDOW,
};
use amic_core::synth;
use amic_core::AmicError;

fn err(e: AmicError) -> PyErr {
    match e {
        AmicError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// One reported correlation window.
#[pyclass(name = "Window", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWindow {
    s_idx: usize,
    e_idx: usize,
    start_ts: i64,
    end_ts: i64,
    granularity: usize,
    mi_raw: f64,
    mi: f64,
    h_w: f64,
    h_norm: f64,
    nmi1: f64,
    nmi2: f64,
    mu: f64,
    sign: String,
    confidence: f64,
}

impl From<WindowResult> for PyWindow {
    fn from(w: WindowResult) -> PyWindow {
        PyWindow {
            s_idx: w.s_idx,
            e_idx: w.e_idx,
            start_ts: w.start_ts,
            end_ts: w.end_ts,
            granularity: w.granularity,
            mi_raw: w.mi_raw,
            mi: w.mi,
            h_w: w.h_w,
            h_norm: w.h_norm,
            nmi1: w.nmi1,
            nmi2: w.nmi2,
            mu: w.mu,
            sign: w.sign.to_string(),
            confidence: w.confidence,
        }
    }
}

#[pymethods]
impl PyWindow {
    fn __repr__(&self) -> String {
        format!(
            "Window(s_idx={}, e_idx={}, granularity={}, mi={:.6}, sign={:?})",
            self.s_idx, self.e_idx, self.granularity, self.mi, self.sign
        )
    }
}

/// Sign classification of one window.
#[pyclass(name = "Association", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAssociation {
    pp: u32,
    np: u32,
    mu: f64,
    sign: String,
    confidence: f64,
}

#[pymethods]
impl PyAssociation {
    fn __repr__(&self) -> String {
        format!(
            "Association(pp={}, np={}, mu={:.6}, sign={:?}, confidence={:.6})",
            self.pp, self.np, self.mu, self.sign, self.confidence
        )
    }
}

/// Digamma at a positive integer.
#[pyfunction]
fn digamma(n: u64) -> PyResult<f64> {
    if n == 0 {
        return Err(PyValueError::new_err("digamma argument must be positive"));
    }
    Ok(ksg::digamma(n))
}

/// Average ranks of `values` rescaled into [0,1].
#[pyfunction]
fn unit_ranks(values: Vec<f64>) -> Vec<f64> {
    amic_core::ingest::unit_ranks(&values)
}

/// Rank-based k-NN mutual information of two equal-length series, in nats.
/// Returns (raw, clamped).
#[pyfunction]
#[pyo3(signature = (x, y, k = 6))]
fn mutual_information(x: Vec<f64>, y: Vec<f64>, k: usize) -> PyResult<(f64, f64)> {
    if x.len() != y.len() {
        return Err(PyValueError::new_err("series lengths differ"));
    }
    let u = amic_core::ingest::unit_ranks(&x);
    let v = amic_core::ingest::unit_ranks(&y);
    let mi = ksg::ksg_mi(&u, &v, k).map_err(err)?;
    Ok((mi.raw, mi.clamped))
}

/// Pearson correlation coefficient.
#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    synth::pearson(&x, &y).map_err(err)
}

/// Distance correlation.
#[pyfunction]
fn dcor(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    synth::dcor(&x, &y).map_err(err)
}

/// Consecutive-period association classification on raw values.
#[pyfunction]
fn association(x: Vec<f64>, y: Vec<f64>) -> PyResult<PyAssociation> {
    let stats = assoc::assess(&x, &y).map_err(err)?;
    Ok(PyAssociation {
        pp: stats.pp,
        np: stats.np,
        mu: stats.mu,
        sign: stats.sign.to_string(),
        confidence: stats.confidence,
    })
}

/// Generates one synthetic relation. Returns (timestamps, x, y).
#[pyfunction]
#[pyo3(signature = (kind, n, noise = synth::DEFAULT_NOISE, seed = 0))]
fn gen_relation(
    kind: &str,
    n: usize,
    noise: f64,
    seed: u64,
) -> PyResult<(Vec<i64>, Vec<f64>, Vec<f64>)> {
    let kind = synth::RelationKind::from_str(kind).map_err(err)?;
    let pair = synth::gen_relation(kind, n, noise, seed).map_err(err)?;
    Ok((pair.timestamps, pair.x, pair.y))
}

/// Concatenates relations with noise gaps. Returns
/// ((timestamps, x, y), [(kind, s_idx, e_idx), ...]).
#[pyfunction]
#[pyo3(signature = (kinds, n_each, gap, noise = synth::DEFAULT_NOISE, seed = 0))]
#[allow(clippy::type_complexity)]
fn compose(
    kinds: Vec<String>,
    n_each: usize,
    gap: usize,
    noise: f64,
    seed: u64,
) -> PyResult<((Vec<i64>, Vec<f64>, Vec<f64>), Vec<(String, usize, usize)>)> {
    let kinds: Vec<synth::RelationKind> = kinds
        .iter()
        .map(|s| synth::RelationKind::from_str(s))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let (pair, spans) = synth::compose(&kinds, n_each, gap, noise, seed).map_err(err)?;
    let spans = spans
        .into_iter()
        .map(|s| (s.kind.to_string(), s.s_idx, s.e_idx))
        .collect();
    Ok(((pair.timestamps, pair.x, pair.y), spans))
}

/// Full layered search over an aligned pair. `mode` is one of "absolute",
/// "two_step", or "coverage"; `norm` is "max" or "entropy". `ladder` lists
/// explicit window sizes, coarsest first (default: halving from n/4).
#[pyfunction]
#[pyo3(signature = (
    timestamps, x, y, *, k = 6, ladder = None, slide_frac = 0.125,
    mode = "two_step", sigma = 0.5, sigma_h = 0.2, sigma_i = 0.2,
    norm = "entropy", coverage = None, partitions = 1, workers = 1
))]
#[allow(clippy::too_many_arguments)]
fn analyze(
    timestamps: Vec<i64>,
    x: Vec<f64>,
    y: Vec<f64>,
    k: usize,
    ladder: Option<Vec<usize>>,
    slide_frac: f64,
    mode: &str,
    sigma: f64,
    sigma_h: f64,
    sigma_i: f64,
    norm: &str,
    coverage: Option<f64>,
    partitions: usize,
    workers: usize,
) -> PyResult<Vec<PyWindow>> {
    if timestamps.len() != x.len() || x.len() != y.len() {
        return Err(PyValueError::new_err("timestamps, x, and y lengths differ"));
    }
    let pair = SeriesPair { timestamps, x, y };
    let ranked = rank_transform(pair).map_err(err)?;
    let n = ranked.len();

    let min_window = DEFAULT_MIN_WINDOW.max(k + 2);
    let ladder = match ladder {
        Some(sizes) => GranularityLadder::new(sizes).map_err(err)?,
        None => {
            GranularityLadder::halving((n / 4).max(min_window), min_window).map_err(err)?
        }
    };
    let norm = match norm {
        "max" => NormKind::MaxEntropy,
        "entropy" => NormKind::WindowEntropy,
        other => return Err(PyValueError::new_err(format!("unknown norm {other:?}"))),
    };
    let strategy = match mode {
        "absolute" => ThresholdStrategy::Absolute { sigma },
        "two_step" => ThresholdStrategy::TwoStep { sigma_h, sigma_i, norm },
        "coverage" => {
            let target = coverage
                .ok_or_else(|| PyValueError::new_err("coverage mode needs a coverage target"))?;
            ThresholdStrategy::CoverageTarget { target, inner: CoverageInner::Absolute }
        }
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let config =
        SearchConfig { k, ladder, slide_frac, strategy, min_window, partitions };
    let result = match config.strategy {
        ThresholdStrategy::CoverageTarget { .. } => layered_search(&ranked, &config),
        _ => recursive_parallel_search(&ranked, &config, workers),
    }
    .map_err(err)?;
    Ok(result.windows.into_iter().map(PyWindow::from).collect())
}

#[pymodule]
fn amic_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindow>()?;
    m.add_class::<PyAssociation>()?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(unit_ranks, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(dcor, m)?)?;
    m.add_function(wrap_pyfunction!(association, m)?)?;
    m.add_function(wrap_pyfunction!(gen_relation, m)?)?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add("DEFAULT_NOISE", synth::DEFAULT_NOISE)?;
    m.add(
        "RELATION_KINDS",
        synth::RelationKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>(),
    )?;
    Ok(())
}
