//! Python bindings. Heavy values (bundles, ground truth) cross the boundary
//! as JSON text; small ones as native Python values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crossbound_core::attraction::{relative_deviation as rd_matrix, ContingencyTable};
use crossbound_core::bundle::{compare_bundles, MetricsBundle, BUNDLE_SCHEMA};
use crossbound_core::config::AnalysisConfig;
use crossbound_core::ingest::mbox::parse_mbox as parse_mbox_stream;
use crossbound_core::model::Diagnostic as CoreDiagnostic;
use crossbound_core::store::Store as CoreStore;
use crossbound_core::synth::{generate_corpus, oracle_metrics, SynthCorpus as CoreSynth, SynthParams};
use crossbound_core::{metrics, pipeline, report, ArgumentError, CliError};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

create_exception!(crossbound, CrossboundError, PyException);
create_exception!(crossbound, InputError, CrossboundError);
create_exception!(crossbound, StoreError, CrossboundError);

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Store(_) => StoreError::new_err(e.to_string()),
        _ => InputError::new_err(e.to_string()),
    }
}

fn arg_err(e: ArgumentError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, skip_from_py_object)]
pub struct Config {
    inner: AnalysisConfig,
}

#[pymethods]
impl Config {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        AnalysisConfig::load(&path)
            .map(|inner| Config { inner })
            .map_err(cli_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        AnalysisConfig::from_json_str(text)
            .map(|inner| Config { inner })
            .map_err(cli_err)
    }

    #[getter]
    fn output_dir(&self) -> Option<PathBuf> {
        self.inner.output_dir.clone()
    }

    #[getter]
    fn corpus_names(&self) -> Vec<String> {
        self.inner.corpora.iter().map(|c| c.name.clone()).collect()
    }

    #[getter]
    fn list_ids(&self) -> Vec<String> {
        self.inner.ordered_lists().iter().map(|l| l.list_id.clone()).collect()
    }
}

#[pyclass(frozen, get_all, skip_from_py_object)]
pub struct Diagnostic {
    source: String,
    offset: Option<u64>,
    message_id: Option<String>,
    reason: String,
}

impl From<&CoreDiagnostic> for Diagnostic {
    fn from(d: &CoreDiagnostic) -> Self {
        Diagnostic {
            source: d.source.clone(),
            offset: d.offset,
            message_id: d.message_id.clone(),
            reason: d.reason.clone(),
        }
    }
}

#[pymethods]
impl Diagnostic {
    fn __repr__(&self) -> String {
        format!(
            "Diagnostic({:?}, offset={:?}, {:?})",
            self.source, self.offset, self.reason
        )
    }
}

#[pyclass(frozen, get_all, skip_from_py_object)]
pub struct Message {
    message_id: String,
    list_id: String,
    sender: String,
    date: i64,
    subject: String,
    in_reply_to: Option<String>,
    references: Vec<String>,
    body: String,
    offset: u64,
}

#[pymethods]
impl Message {
    fn __repr__(&self) -> String {
        format!("Message({:?}, sender={:?})", self.message_id, self.sender)
    }
}

#[pyclass(frozen, skip_from_py_object)]
pub struct Store {
    inner: CoreStore,
}

#[pymethods]
impl Store {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        CoreStore::load(&dir).map(|inner| Store { inner }).map_err(cli_err)
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save(&dir).map(drop).map_err(cli_err)
    }

    fn __len__(&self) -> usize {
        self.inner.messages.len()
    }

    fn list_ids(&self) -> Vec<String> {
        self.inner.lists.iter().map(|l| l.list_id.clone()).collect()
    }

    fn participants(&self) -> Vec<String> {
        self.inner.participants.iter().map(|p| p.id.to_string()).collect()
    }

    fn revision_count(&self) -> usize {
        self.inner.revisions.len()
    }

    fn diagnostics(&self) -> Vec<Diagnostic> {
        self.inner.diagnostics.iter().map(Diagnostic::from).collect()
    }
}

#[pyclass(frozen, skip_from_py_object)]
pub struct Bundle {
    inner: MetricsBundle,
}

impl Bundle {
    fn corpus(&self, name: &str) -> PyResult<&crossbound_core::bundle::CorpusMetrics> {
        self.inner
            .corpora
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| PyValueError::new_err(format!("no corpus named {name}")))
    }
}

#[pymethods]
impl Bundle {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        MetricsBundle::load(&path)
            .map(|inner| Bundle { inner })
            .map_err(cli_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: MetricsBundle =
            serde_json::from_str(text).map_err(|e| StoreError::new_err(format!("invalid bundle: {e}")))?;
        if inner.schema_version != BUNDLE_SCHEMA {
            return Err(StoreError::new_err(format!(
                "unsupported bundle schema {}",
                inner.schema_version
            )));
        }
        Ok(Bundle { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn corpus_names(&self) -> Vec<String> {
        self.inner.corpora.iter().map(|c| c.name.clone()).collect()
    }

    fn common(&self, corpus: &str) -> PyResult<Vec<String>> {
        Ok(self.corpus(corpus)?.common.iter().map(|p| p.to_string()).collect())
    }

    fn cross(&self, corpus: &str) -> PyResult<Vec<String>> {
        Ok(self.corpus(corpus)?.cross.iter().map(|p| p.to_string()).collect())
    }

    /// Paths (JSON-pointer style) where the two bundles differ.
    #[pyo3(signature = (other, rel_tol = 1e-9))]
    fn compare(&self, other: &Bundle, rel_tol: f64) -> Vec<String> {
        compare_bundles(&self.inner, &other.inner, rel_tol)
    }

    #[pyo3(signature = (formats = "csv,json,dot"))]
    fn render<'py>(&self, py: Python<'py>, formats: &str) -> PyResult<BTreeMap<&'static str, Bound<'py, PyBytes>>> {
        let formats = report::parse_formats(formats).map_err(cli_err)?;
        Ok(report::render(&self.inner, &formats)
            .into_iter()
            .map(|(name, bytes)| (name, PyBytes::new(py, &bytes)))
            .collect())
    }

    #[pyo3(signature = (dir, formats = "csv,json,dot"))]
    fn write_reports(&self, dir: PathBuf, formats: &str) -> PyResult<Vec<String>> {
        let formats = report::parse_formats(formats).map_err(cli_err)?;
        report::write_reports(&self.inner, &formats, &dir).map_err(cli_err)
    }
}

#[pyclass(frozen, skip_from_py_object)]
pub struct SynthCorpus {
    inner: CoreSynth,
}

#[pymethods]
impl SynthCorpus {
    fn files<'py>(&self, py: Python<'py>) -> BTreeMap<String, Bound<'py, PyBytes>> {
        self.inner
            .files
            .iter()
            .map(|(k, v)| (k.clone(), PyBytes::new(py, v)))
            .collect()
    }

    fn write(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.write(&dir).map_err(cli_err)
    }

    fn ground_truth_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner.ground_truth).expect("ground truth serializes")
    }

    #[getter]
    fn planted_cross(&self) -> Vec<String> {
        self.inner.ground_truth.cross.iter().map(|p| p.to_string()).collect()
    }

    /// Metrics recomputed directly from the ground truth.
    fn oracle(&self) -> Bundle {
        Bundle {
            inner: oracle_metrics(&self.inner.ground_truth),
        }
    }
}

/// Generates a synthetic corpus. `params` is JSON; its seed is overridden.
#[pyfunction]
#[pyo3(signature = (seed, params = None))]
fn synth(seed: u64, params: Option<&str>) -> PyResult<SynthCorpus> {
    let mut p: SynthParams = match params {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("invalid params: {e}")))?,
        None => SynthParams::default(),
    };
    p.seed = seed;
    generate_corpus(&p).map(|inner| SynthCorpus { inner }).map_err(arg_err)
}

#[pyfunction]
fn ingest(config: &Config) -> PyResult<Store> {
    pipeline::ingest(&config.inner)
        .map(|inner| Store { inner })
        .map_err(cli_err)
}

#[pyfunction]
fn analyze(config: &Config, store: &Store) -> PyResult<Bundle> {
    let lexicon = pipeline::load_lexicon(&config.inner).map_err(cli_err)?;
    pipeline::analyze(&config.inner, &store.inner, &lexicon)
        .map(|inner| Bundle { inner })
        .map_err(cli_err)
}

#[pyfunction]
fn run(config: &Config) -> PyResult<(Store, Bundle)> {
    let (store, bundle) = pipeline::run(&config.inner).map_err(cli_err)?;
    Ok((Store { inner: store }, Bundle { inner: bundle }))
}

/// Parses mbox bytes without a roster.
#[pyfunction]
fn parse_mbox(data: &[u8], list_id: &str) -> PyResult<(Vec<Message>, Vec<Diagnostic>)> {
    let parsed = parse_mbox_stream(data, list_id).map_err(|e| InputError::new_err(e.to_string()))?;
    let messages = parsed
        .messages
        .into_iter()
        .map(|m| Message {
            sender: m.sender.to_string(),
            message_id: m.message_id,
            list_id: m.list_id,
            date: m.date,
            subject: m.subject_raw,
            in_reply_to: m.in_reply_to,
            references: m.references,
            body: m.body,
            offset: m.offset,
        })
        .collect();
    Ok((messages, parsed.diagnostics.iter().map(Diagnostic::from).collect()))
}

#[pyfunction]
fn third_quartile(counts: Vec<usize>) -> PyResult<usize> {
    metrics::third_quartile(&counts).map_err(arg_err)
}

/// Relative deviation of each cell from independence; None where the
/// expected count is zero.
#[pyfunction]
fn relative_deviation(counts: Vec<Vec<u64>>) -> PyResult<Vec<Vec<Option<f64>>>> {
    let labels = (0..counts.len()).map(|i| i.to_string()).collect();
    let table = ContingencyTable::from_counts(labels, counts).map_err(arg_err)?;
    rd_matrix(&table).map(|m| m.values).map_err(arg_err)
}

#[pyfunction]
fn percent(num: u64, den: u64) -> Option<u64> {
    report::percent(num, den)
}

#[pymodule]
pub fn crossbound(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("CrossboundError", py.get_type::<CrossboundError>())?;
    m.add("InputError", py.get_type::<InputError>())?;
    m.add("StoreError", py.get_type::<StoreError>())?;
    m.add_class::<Config>()?;
    m.add_class::<Store>()?;
    m.add_class::<Bundle>()?;
    m.add_class::<SynthCorpus>()?;
    m.add_class::<Message>()?;
    m.add_class::<Diagnostic>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(ingest, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(parse_mbox, m)?)?;
    m.add_function(wrap_pyfunction!(third_quartile, m)?)?;
    m.add_function(wrap_pyfunction!(relative_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(percent, m)?)?;
    Ok(())
}
