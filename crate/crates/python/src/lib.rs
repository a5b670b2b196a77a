//! Python module `promoai`: build models from PCL or JSON, translate them and
//! check their nets.

use promoai_core::convert::{powl_to_bpmn, powl_to_pn, to_render_graph, View};
use promoai_core::pcl::run_pcl;
use promoai_core::powl::{self, PowlNode};
use promoai_core::semantics::{
    check_soundness, pn_traces, powl_traces, DEFAULT_STATE_BUDGET, DEFAULT_TRACE_CAP,
};
use promoai_core::serialize::{
    bpmn_export, emit_pcl, pnml_export, pnml_import, powl_json_export, powl_json_import,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(promoai, PclError, PyException, "PCL program rejected; args are (kind, line, column, message).");

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(module = "promoai", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct Model {
    node: PowlNode,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn from_pcl(source: &str) -> PyResult<Self> {
        run_pcl(source).map(|node| Model { node }).map_err(|e| {
            PclError::new_err((e.kind.as_str(), e.location.line, e.location.column, e.message))
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        powl_json_import(text).map(|node| Model { node }).map_err(value_err)
    }

    fn to_json(&self) -> String {
        powl_json_export(&self.node)
    }

    fn to_pcl(&self) -> String {
        emit_pcl(&self.node)
    }

    fn to_pnml(&self) -> PyResult<String> {
        Ok(pnml_export(&powl_to_pn(&self.node).map_err(value_err)?))
    }

    fn to_bpmn(&self) -> PyResult<String> {
        Ok(bpmn_export(&powl_to_bpmn(&self.node).map_err(value_err)?))
    }

    /// Node/edge JSON for drawing; `view` is "bpmn" or "pn".
    #[pyo3(signature = (view = "bpmn"))]
    fn render_json(&self, view: &str) -> PyResult<String> {
        let view: View = view.parse().map_err(PyValueError::new_err)?;
        let g = to_render_graph(&self.node, view).map_err(value_err)?;
        serde_json::to_string(&g).map_err(value_err)
    }

    /// List of violated invariants; empty for a valid model.
    fn validate(&self) -> Vec<String> {
        powl::validate(&self.node).iter().map(|v| v.to_string()).collect()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = powl::stats(&self.node);
        let d = PyDict::new(py);
        d.set_item("activities", s.activity_count)?;
        d.set_item("operators", s.operator_count)?;
        d.set_item("silent", s.silent_count)?;
        d.set_item("depth", s.depth)?;
        Ok(d)
    }

    /// Soundness of the translated net.
    #[pyo3(signature = (budget = DEFAULT_STATE_BUDGET))]
    fn soundness<'py>(&self, py: Python<'py>, budget: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = check_soundness(&powl_to_pn(&self.node).map_err(value_err)?, budget);
        let d = PyDict::new(py);
        d.set_item("sound", r.is_sound())?;
        d.set_item("truncated", r.truncated)?;
        d.set_item("dead_transitions", r.dead_transitions.clone())?;
        d.set_item("explored_states", r.explored_states)?;
        d.set_item("summary", r.summary())?;
        Ok(d)
    }

    /// Sorted label sequences of length at most `max_len`.
    fn traces(&self, max_len: usize) -> PyResult<Vec<Vec<String>>> {
        Ok(powl_traces(&self.node, max_len, DEFAULT_TRACE_CAP)
            .map_err(value_err)?
            .into_iter()
            .collect())
    }

    /// Same as `traces`, computed on the translated net.
    fn net_traces(&self, max_len: usize) -> PyResult<Vec<Vec<String>>> {
        let net = powl_to_pn(&self.node).map_err(value_err)?;
        Ok(pn_traces(&net, max_len, DEFAULT_STATE_BUDGET)
            .map_err(value_err)?
            .into_iter()
            .collect())
    }

    fn __repr__(&self) -> String {
        let s = powl::stats(&self.node);
        format!("Model(activities={}, operators={}, depth={})", s.activity_count, s.operator_count, s.depth)
    }
}

/// Traces of a PNML document.
#[pyfunction]
fn pnml_traces(xml: &str, max_len: usize) -> PyResult<Vec<Vec<String>>> {
    let net = pnml_import(xml).map_err(value_err)?;
    Ok(pn_traces(&net, max_len, DEFAULT_STATE_BUDGET)
        .map_err(value_err)?
        .into_iter()
        .collect())
}

#[pymodule]
fn promoai(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add("PclError", m.py().get_type::<PclError>())?;
    m.add_function(wrap_pyfunction!(pnml_traces, m)?)?;
    Ok(())
}
