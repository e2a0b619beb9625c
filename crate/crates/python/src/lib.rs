//! Python bindings. Structured values cross the boundary as plain dicts,
//! lists and strings, converted through JSON.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use selkit_core::metrics::{score_examples, MetricKind, PredictionOptions};
use selkit_core::pretrain::{self, seeded_rng};
use selkit_core::records::{self, schema_of_tree, Example, ExampleLine, TaskKind};
use selkit_core::schema::{self, resolve_schema, Markers, Schema, SchemaFile, SsiOptions};
use selkit_core::sel::{self, ParseMode, SelTree};
use selkit_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

/// A schema given as a bundled name, a file path, or a schema dict.
fn schema_arg(obj: &Bound<'_, PyAny>) -> PyResult<Schema> {
    if let Ok(name) = obj.extract::<String>() {
        return resolve_schema(&name).map_err(err);
    }
    Schema::from_file(from_py::<SchemaFile>(obj)?).map_err(err)
}

fn task_arg(task: &str) -> PyResult<TaskKind> {
    task.parse().map_err(err)
}

/// Parse SEL. Returns `{"tree": ..., "diagnostics": [...]}`; strict mode
/// raises ValueError on the first grammar violation.
#[pyfunction]
#[pyo3(signature = (text, mode = "strict"))]
fn parse_sel(py: Python<'_>, text: &str, mode: &str) -> PyResult<Py<PyAny>> {
    let mode: ParseMode = mode.parse().map_err(err)?;
    let (tree, diagnostics) = sel::parse_sel(text, mode).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({ "tree": tree, "diagnostics": diagnostics }),
    )
}

#[pyfunction]
fn serialize_sel(tree: &Bound<'_, PyAny>) -> PyResult<String> {
    let tree: SelTree = from_py(tree)?;
    Ok(sel::serialize_sel(&tree))
}

/// `markers` is `"spot,asso,text"` or `"angle"`.
#[pyfunction]
#[pyo3(signature = (schema, markers = None, preserve_order = false))]
fn build_ssi(
    schema: &Bound<'_, PyAny>,
    markers: Option<&str>,
    preserve_order: bool,
) -> PyResult<String> {
    let schema = schema_arg(schema)?;
    let markers = match markers {
        None => Markers::default(),
        Some("angle") => Markers::angle(),
        Some(spec) => Markers::parse(spec).map_err(err)?,
    };
    let options = SsiOptions {
        markers,
        preserve_order,
    };
    Ok(schema::build_ssi(&schema, &options).body)
}

/// Ground an SEL string in an example's text. Returns `(example, report)`.
/// Without a schema every label is accepted.
#[pyfunction]
#[pyo3(signature = (sel, example, task, schema = None))]
fn sel_to_record(
    py: Python<'_>,
    sel: &str,
    example: &Bound<'_, PyAny>,
    task: &str,
    schema: Option<&Bound<'_, PyAny>>,
) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
    let line: ExampleLine = from_py(example)?;
    let text = line.tokenized().map_err(err)?;
    let task = task_arg(task)?;
    let (tree, _) = sel::parse_tolerant(sel);
    let schema = match schema {
        Some(s) => schema_arg(s)?,
        None => schema_of_tree(&tree),
    };
    let (record, report) = records::sel_to_record(&tree, &text, task, &schema);
    let mut out = ExampleLine::from_record(&record);
    out.id = line.id;
    out.tokens = line.tokens;
    Ok((to_py(py, &out)?, to_py(py, &report)?))
}

#[pyfunction]
fn record_to_sel(example: &Bound<'_, PyAny>, task: &str) -> PyResult<String> {
    let line: ExampleLine = from_py(example)?;
    let task = task_arg(task)?;
    let record = line.to_record().map_err(err)?.project(task);
    Ok(sel::serialize_sel(&records::record_to_sel(&record, task)))
}

/// Score prediction examples against gold examples; same report as the
/// `evaluate` command.
#[pyfunction]
#[pyo3(signature = (gold, pred, metrics = None, task = None, schema = None))]
fn score(
    py: Python<'_>,
    gold: &Bound<'_, PyAny>,
    pred: &Bound<'_, PyAny>,
    metrics: Option<&str>,
    task: Option<&str>,
    schema: Option<&Bound<'_, PyAny>>,
) -> PyResult<Py<PyAny>> {
    let task = task.map(task_arg).transpose()?;
    let kinds = match (metrics, task) {
        (Some(spec), _) => MetricKind::parse_list(spec).map_err(err)?,
        (None, Some(t)) => MetricKind::for_task(t).to_vec(),
        (None, None) => MetricKind::ALL.to_vec(),
    };
    let gold: Vec<ExampleLine> = from_py(gold)?;
    let pred: Vec<ExampleLine> = from_py(pred)?;
    let golds = gold
        .iter()
        .map(ExampleLine::to_record)
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let preds = pred
        .into_iter()
        .enumerate()
        .map(|(i, line)| {
            Ok(Example {
                line: i + 1,
                record: line.to_record()?,
                id: line.id,
                sel: line.sel,
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(err)?;
    let options = PredictionOptions {
        task,
        schema: schema.map(schema_arg).transpose()?,
    };
    let report = score_examples(&golds, &preds, &kinds, &options).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (sel, negative_spots, negative_assos, p_epsilon, seed, stream = 0))]
fn inject_rejection(
    sel: &str,
    negative_spots: Vec<String>,
    negative_assos: Vec<String>,
    p_epsilon: f64,
    seed: u64,
    stream: u64,
) -> PyResult<String> {
    let tree = sel::parse_strict(sel).map_err(err)?;
    let mut rng = seeded_rng(seed, stream);
    let out = pretrain::inject_rejection(&tree, &negative_spots, &negative_assos, p_epsilon, &mut rng)
        .map_err(err)?;
    Ok(sel::serialize_sel(&out))
}

#[pyfunction]
#[pyo3(signature = (tokens, seed, rate = 0.15, mean_len = 3.0, stream = 0))]
fn span_corrupt(
    py: Python<'_>,
    tokens: Vec<String>,
    seed: u64,
    rate: f64,
    mean_len: f64,
    stream: u64,
) -> PyResult<Py<PyAny>> {
    let mut rng = seeded_rng(seed, stream);
    let out = pretrain::span_corrupt(&tokens, rate, mean_len, &mut rng).map_err(err)?;
    to_py(py, &out)
}

#[pymodule]
fn selkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", selkit_core::VERSION)?;
    m.add_function(wrap_pyfunction!(parse_sel, m)?)?;
    m.add_function(wrap_pyfunction!(serialize_sel, m)?)?;
    m.add_function(wrap_pyfunction!(build_ssi, m)?)?;
    m.add_function(wrap_pyfunction!(sel_to_record, m)?)?;
    m.add_function(wrap_pyfunction!(record_to_sel, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(inject_rejection, m)?)?;
    m.add_function(wrap_pyfunction!(span_corrupt, m)?)?;
    Ok(())
}
