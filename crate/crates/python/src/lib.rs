//! Python bindings for `metrics-ci-core`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use metrics_ci_core::data::{self, GroupKey};
use metrics_ci_core::{distribution, report, simulate, stats, Error};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io(msg) => PyIOError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "ConfidenceInterval", frozen, from_py_object)]
#[derive(Clone)]
struct PyConfidenceInterval {
    inner: stats::ConfidenceInterval,
}

#[pymethods]
impl PyConfidenceInterval {
    #[getter]
    fn point(&self) -> f64 {
        self.inner.point
    }
    #[getter]
    fn half_width(&self) -> f64 {
        self.inner.half_width
    }
    #[getter]
    fn lower(&self) -> f64 {
        self.inner.lower
    }
    #[getter]
    fn upper(&self) -> f64 {
        self.inner.upper
    }
    #[getter]
    fn level(&self) -> f64 {
        self.inner.level
    }
    #[getter]
    fn z(&self) -> f64 {
        self.inner.z
    }
    #[getter]
    fn method(&self) -> &'static str {
        match self.inner.method {
            stats::IntervalMethod::NormalApprox => "NormalApprox",
            stats::IntervalMethod::FoldSampleStd => "FoldSampleStd",
        }
    }
    #[getter]
    fn n(&self) -> Option<u64> {
        self.inner.n
    }

    fn overlaps(&self, other: &PyConfidenceInterval) -> bool {
        stats::intervals_overlap(&self.inner, &other.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "ConfidenceInterval(point={}, half_width={}, lower={}, upper={}, z={})",
            self.inner.point,
            self.inner.half_width,
            self.inner.lower,
            self.inner.upper,
            self.inner.z
        )
    }
}

impl From<stats::ConfidenceInterval> for PyConfidenceInterval {
    fn from(inner: stats::ConfidenceInterval) -> Self {
        Self { inner }
    }
}

#[pyclass(name = "McNemarResult", frozen, get_all)]
struct PyMcNemarResult {
    b: u64,
    c: u64,
    statistic: f64,
    p_chi2: f64,
    p_exact: f64,
}

#[pyclass(name = "SampleStats", frozen, get_all)]
struct PySampleStats {
    n: usize,
    mean: f64,
    std: Option<f64>,
    min: f64,
    max: f64,
}

#[pyfunction]
fn normal_cdf(x: f64) -> PyResult<f64> {
    stats::normal_cdf(x).map_err(to_py)
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    stats::normal_quantile(p).map_err(to_py)
}

#[pyfunction]
fn z_from_level(level: f64) -> PyResult<f64> {
    stats::z_from_level(level).map_err(to_py)
}

#[pyfunction]
fn level_from_z(z: f64) -> PyResult<f64> {
    stats::level_from_z(z).map_err(to_py)
}

/// Normal-approximation interval for `correct` out of `n` at width `z`.
#[pyfunction]
#[pyo3(signature = (correct, n, z = 1.0))]
fn normal_approx_ci(correct: u64, n: u64, z: f64) -> PyResult<PyConfidenceInterval> {
    stats::normal_approx_ci(correct, n, z)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (accuracies, z = 1.0))]
fn fold_sample_ci(accuracies: Vec<f64>, z: f64) -> PyResult<PyConfidenceInterval> {
    stats::fold_sample_ci(&accuracies, z)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn sample_stats(values: Vec<f64>) -> PyResult<PySampleStats> {
    let s = stats::sample_stats(&values).map_err(to_py)?;
    Ok(PySampleStats {
        n: s.n,
        mean: s.mean,
        std: s.std,
        min: s.min,
        max: s.max,
    })
}

#[pyfunction]
fn intervals_overlap(a: PyConfidenceInterval, b: PyConfidenceInterval) -> bool {
    stats::intervals_overlap(&a.inner, &b.inner)
}

#[pyfunction]
fn mcnemar(b: u64, c: u64) -> PyMcNemarResult {
    let r = stats::mcnemar(b, c);
    PyMcNemarResult {
        b: r.b,
        c: r.c,
        statistic: r.statistic,
        p_chi2: r.p_chi2,
        p_exact: r.p_exact,
    }
}

/// Accuracy per group from `predictions.csv` text, as
/// `(label, correct, total, accuracy)` tuples.
#[pyfunction]
#[pyo3(signature = (csv_text, group_by = vec!["model".to_string()]))]
fn aggregate_accuracy(
    csv_text: &str,
    group_by: Vec<String>,
) -> PyResult<Vec<(String, u64, u64, f64)>> {
    let records = data::parse_predictions(csv_text.as_bytes()).map_err(to_py)?;
    let keys = group_by
        .iter()
        .map(|k| k.parse::<GroupKey>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let out = data::aggregate_accuracy(&records, &keys).map_err(to_py)?;
    Ok(out
        .into_iter()
        .map(|m| (m.label(), m.correct, m.total, m.accuracy))
        .collect())
}

/// Fold index per sample, in input order, plus the undersized classes.
#[pyfunction]
#[pyo3(signature = (labels, k, seed = 0))]
fn stratified_folds(
    labels: Vec<(String, String)>,
    k: usize,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<String>)> {
    let fa = data::stratified_folds(&labels, k, seed).map_err(to_py)?;
    Ok((
        fa.assignments.iter().map(|e| e.fold).collect(),
        fa.undersized_classes,
    ))
}

/// `(bin_edges, counts)`.
#[pyfunction]
fn histogram(values: Vec<f64>, bins: usize) -> PyResult<(Vec<f64>, Vec<u64>)> {
    let h = distribution::histogram(&values, bins).map_err(to_py)?;
    Ok((h.bin_edges, h.counts))
}

/// `(theoretical, sample, mu, sigma, max_abs_deviation)`.
#[pyfunction]
fn qq_gaussian(values: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>, f64, f64, f64)> {
    let q = distribution::qq_gaussian(&values).map_err(to_py)?;
    let (theoretical, sample) = q.points.iter().map(|p| (p.theoretical, p.sample)).unzip();
    Ok((theoretical, sample, q.mu, q.sigma, q.max_abs_deviation))
}

/// `(coverage, nominal)` of the normal-approximation interval.
#[pyfunction]
#[pyo3(signature = (p, n_holdout, z = 1.0, trials = 10_000, rng_seed = 0))]
fn simulate_coverage(
    py: Python<'_>,
    p: f64,
    n_holdout: u64,
    z: f64,
    trials: u64,
    rng_seed: u64,
) -> PyResult<(f64, f64)> {
    let config = simulate::SimulationConfig {
        p,
        n_holdout,
        trials,
        rng_seed,
        ..Default::default()
    };
    let r = py
        .detach(|| simulate::simulate_coverage(&config, z))
        .map_err(to_py)?;
    Ok((r.coverage, r.nominal))
}

/// `(accuracies, approx_half_width, sample_std, ratio, clamp_events)`.
#[pyfunction]
#[pyo3(signature = (p = 0.9, n_holdout = 670, folds = 20, seeds = 1, tau = 0.0, rng_seed = 0))]
fn simulate_multiseed(
    py: Python<'_>,
    p: f64,
    n_holdout: u64,
    folds: u32,
    seeds: u32,
    tau: f64,
    rng_seed: u64,
) -> PyResult<(Vec<f64>, f64, f64, Option<f64>, u64)> {
    let config = simulate::SimulationConfig {
        p,
        n_holdout,
        folds,
        seeds,
        tau,
        trials: 1,
        rng_seed,
    };
    let r = py
        .detach(|| simulate::simulate_multiseed(&config))
        .map_err(to_py)?;
    let accuracies = r.measurements.iter().map(|m| m.accuracy).collect();
    let c = r.comparison;
    Ok((
        accuracies,
        c.approx_half_width,
        c.sample_std,
        c.ratio,
        r.clamp_events,
    ))
}

/// Error-bar SVG for `(label, point, half_width[, second_half_width])` rows.
#[pyfunction]
#[pyo3(signature = (title, series))]
fn render_error_bar_svg(
    title: &str,
    series: Vec<(String, f64, f64, Option<f64>)>,
) -> PyResult<String> {
    let series = series
        .into_iter()
        .map(|(label, point, primary, secondary)| report::ChartSeries {
            label,
            point,
            primary_half_width: primary,
            secondary_half_width: secondary,
        })
        .collect();
    let spec = report::ChartSpec::new(title, series).map_err(to_py)?;
    let bytes = report::render_error_bar_svg(&spec).map_err(to_py)?;
    Ok(String::from_utf8(bytes).expect("svg is utf-8"))
}

#[pymodule]
fn metrics_ci(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfidenceInterval>()?;
    m.add_class::<PyMcNemarResult>()?;
    m.add_class::<PySampleStats>()?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(z_from_level, m)?)?;
    m.add_function(wrap_pyfunction!(level_from_z, m)?)?;
    m.add_function(wrap_pyfunction!(normal_approx_ci, m)?)?;
    m.add_function(wrap_pyfunction!(fold_sample_ci, m)?)?;
    m.add_function(wrap_pyfunction!(sample_stats, m)?)?;
    m.add_function(wrap_pyfunction!(intervals_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(mcnemar, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(stratified_folds, m)?)?;
    m.add_function(wrap_pyfunction!(histogram, m)?)?;
    m.add_function(wrap_pyfunction!(qq_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_multiseed, m)?)?;
    m.add_function(wrap_pyfunction!(render_error_bar_svg, m)?)?;
    Ok(())
}
