//! Python bindings: state construction and inspection, the analyzer
//! table, seeded simulation, and exact security analysis. Reports are
//! returned as JSON strings with the same shape as the CLI output.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use num_complex::Complex64;
use qdh_core::analysis::{self, trace_distance};
use qdh_core::fock::FockState;
use qdh_core::gba;
use qdh_core::protocol::{self, SessionConfig};
use qdh_core::states::{self, BellKind, SourceParams, StateSet};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(name: &str) -> PyResult<BellKind> {
    let k = match name.to_ascii_lowercase().as_str() {
        "phi+" => BellKind::PhiPlus,
        "phi-" => BellKind::PhiMinus,
        "psi+" => BellKind::PsiPlus,
        "psi-" => BellKind::PsiMinus,
        "gamma+" => BellKind::GammaPlus,
        "gamma-" => BellKind::GammaMinus,
        "upsilon+" => BellKind::UpsilonPlus,
        "upsilon-" => BellKind::UpsilonMinus,
        "omega+" => BellKind::OmegaPlus,
        "omega-" => BellKind::OmegaMinus,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown state '{other}'; use phi/psi/gamma/upsilon/omega with +/-"
            )))
        }
    };
    Ok(k)
}

/// A sparse multimode photon-number state.
#[pyclass(name = "FockState", skip_from_py_object)]
#[derive(Clone)]
struct PyFockState {
    inner: FockState,
}

#[pymethods]
impl PyFockState {
    /// Text form: one `occupation  re  im` line per ket.
    fn dump(&self) -> String {
        self.inner.dump()
    }

    fn norm2(&self) -> f64 {
        self.inner.norm2()
    }

    fn inner_product(&self, other: &PyFockState) -> Complex64 {
        self.inner.inner(&other.inner)
    }

    /// Amplitudes as a dict keyed by the occupation label.
    fn amplitudes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        for (occ, amp) in self.inner.terms() {
            out.set_item(occ.to_string(), amp)?;
        }
        Ok(out)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("<FockState with {} ket(s)>", self.inner.len())
    }
}

/// One of the ten two-photon basis states on paths (i, j).
#[pyfunction]
#[pyo3(signature = (kind, i=2, j=4))]
fn bell(kind: &str, i: u32, j: u32) -> PyResult<PyFockState> {
    let state = states::bell(parse_kind(kind)?, i, j).map_err(value_err)?;
    Ok(PyFockState { inner: state })
}

/// The normalized four-photon component of the double-pass source.
#[pyfunction]
fn theta() -> PyFockState {
    PyFockState {
        inner: states::theta().normalized(),
    }
}

/// Proportionality constant of the four-photon product decomposition.
#[pyfunction]
fn decomposition_constant() -> PyResult<f64> {
    let c = states::verify_decomposition().map_err(value_err)?;
    Ok(c.to_f64())
}

/// Probability of each (1,3)-side label in a product measurement of the
/// four-photon component, keyed by state name.
#[pyfunction]
fn label_probabilities() -> Vec<(String, f64)> {
    states::label_probabilities()
        .into_iter()
        .map(|(k, p)| (k.symbol().to_string(), p))
        .collect()
}

/// The analyzer table: list of dicts with state, set, class, patterns.
#[pyfunction]
fn gba_table(py: Python<'_>) -> PyResult<Vec<Bound<'_, PyDict>>> {
    let circuit = gba::calibrate().map_err(value_err)?;
    let mut rows = Vec::new();
    for kind in BellKind::ALL {
        let state = states::bell(kind, 2, 4).map_err(value_err)?;
        let branches = gba::outcome_distribution(&state, (2, 4), &circuit).map_err(value_err)?;
        let row = PyDict::new(py);
        row.set_item("state", kind.symbol())?;
        row.set_item(
            "set",
            match kind.set() {
                StateSet::S1 => "S1",
                StateSet::S2 => "S2",
            },
        )?;
        row.set_item("class", kind.gba_class().index() + 1)?;
        let patterns: Vec<(String, f64)> = branches
            .iter()
            .map(|b| (b.pattern.to_string(), b.probability))
            .collect();
        row.set_item("patterns", patterns)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Run seeded hiding sessions; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (n, secret, p=0.01, trials=100, seed=0, per_trial=false))]
fn simulate(n: usize, secret: u8, p: f64, trials: u64, seed: u64, per_trial: bool) -> PyResult<String> {
    if secret > 1 {
        return Err(PyValueError::new_err("secret must be 0 or 1"));
    }
    let config = SessionConfig {
        n,
        secret,
        p,
        trials,
        seed,
    };
    let report = protocol::run_sessions(&config, per_trial).map_err(value_err)?;
    serde_json::to_string_pretty(&report).map_err(value_err)
}

/// Exact security analysis for n <= 3 pairs; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (n, prior=0.5))]
fn analyze(n: usize, prior: f64) -> PyResult<String> {
    if n == 0 || n > analysis::MAX_EXACT_PAIRS {
        return Err(PyValueError::new_err(format!(
            "n <= {} for exact analysis, got {n}",
            analysis::MAX_EXACT_PAIRS
        )));
    }
    if !(0.0..=1.0).contains(&prior) {
        return Err(PyValueError::new_err("prior must be in [0, 1]"));
    }
    let prior = [1.0 - prior, prior];
    let r0 = analysis::hiding_density_matrix(0, n).map_err(value_err)?;
    let r1 = analysis::hiding_density_matrix(1, n).map_err(value_err)?;
    let dist = trace_distance(&r0, &r1).map_err(value_err)?;
    let strategy =
        analysis::local_count_strategy_for(&r0, &r1, &prior, &format!("local-count(n={n})"))
            .map_err(value_err)?;
    let curve = analysis::bound_curve(&prior, 20).map_err(value_err)?;
    let source = protocol::PairSource::new(
        SourceParams::new(0.01).map_err(value_err)?,
        gba::calibrate().map_err(value_err)?,
    )
    .map_err(value_err)?;
    let overhead =
        analysis::overhead_from_fraction(source.exact_s1_fraction()).map_err(value_err)?;
    let report = serde_json::json!({
        "n": n,
        "prior": prior,
        "trace_distance": dist,
        "strategy": strategy.strategy,
        "mutual_information_bits": strategy.mutual_information,
        "information_bound_bits": strategy.bound,
        "overhead_factor": overhead,
        "bound_curve": curve
            .into_iter()
            .map(|(m, bound_bits)| serde_json::json!({"m": m, "bound_bits": bound_bits}))
            .collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&report).map_err(value_err)
}

/// The analytic bound H(prior) / 2^(m-1) on leaked bits.
#[pyfunction]
#[pyo3(signature = (m, prior=0.5))]
fn security_bound(m: u32, prior: f64) -> PyResult<f64> {
    analysis::security_bound(m, &[1.0 - prior, prior]).map_err(value_err)
}

#[pymodule]
fn qdh_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFockState>()?;
    m.add_function(wrap_pyfunction!(bell, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(decomposition_constant, m)?)?;
    m.add_function(wrap_pyfunction!(label_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(gba_table, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(security_bound, m)?)?;
    Ok(())
}
