//! Python bindings: workspaces, evaluation, forcing, Ω and Łoś checks.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{json, Value};
use std::path::PathBuf;
use topos_forge::fincat::bases;
use topos_forge::io::{Workspace, WorkspaceDoc};
use topos_forge::semantics::{forces, Evaluator, GeneralizedElement};
use topos_forge::sigma::Context;
use topos_forge::subobj::omega;
use topos_forge::syntax::{parse_context, parse_formula, Formula};
use topos_forge::ultra::{filtered_product, los_sweep, LosOptions};
use topos_forge::Error;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(f)) => f.into_pyobject(py)?.into_any(),
            _ => return Err(PyRuntimeError::new_err("unrepresentable number")),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(xs) => {
            let list = PyList::empty(py);
            for x in xs {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(m) => {
            let dict = PyDict::new(py);
            for (k, x) in m {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

/// A loaded workspace. Construction fails on structural errors; axiom
/// violations are returned by `check()`.
#[pyclass(frozen, name = "Workspace", module = "toposforge")]
struct PyWorkspace {
    ws: Workspace,
    report: Vec<Value>,
}

impl PyWorkspace {
    fn wrap(doc: WorkspaceDoc) -> PyResult<Self> {
        let (ws, report) = Workspace::from_doc(doc).map_err(err)?;
        let report = report.iter().map(|v| json!({ "code": v.code, "message": v.message })).collect();
        Ok(PyWorkspace { ws, report })
    }

    fn valid(&self) -> PyResult<()> {
        if self.report.is_empty() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("workspace is invalid ({} violation(s))", self.report.len())))
        }
    }

    fn target(&self, text: &str, context: &str) -> PyResult<(Context, Formula)> {
        match self.ws.formulas.get(text) {
            Some(named) if context.is_empty() => Ok(named.clone()),
            _ => Ok((parse_context(context).map_err(err)?, parse_formula(text).map_err(err)?)),
        }
    }
}

#[pymethods]
impl PyWorkspace {
    /// Loads and merges files (`.json` or DSL).
    #[new]
    fn new(paths: Vec<PathBuf>) -> PyResult<Self> {
        let mut doc = WorkspaceDoc::default();
        for p in &paths {
            doc.merge(WorkspaceDoc::from_file(p).map_err(err)?).map_err(err)?;
        }
        Self::wrap(doc)
    }

    #[staticmethod]
    fn from_dsl(text: &str) -> PyResult<Self> {
        Self::wrap(topos_forge::dsl::compile(text).map_err(err)?)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::wrap(WorkspaceDoc::from_json(text).map_err(err)?)
    }

    fn to_json(&self) -> String {
        self.ws.doc.to_json()
    }

    /// Validation violations as `{code, message}` dicts; empty when valid.
    fn check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &Value::Array(self.report.clone()))
    }

    fn structures(&self) -> Vec<String> {
        self.ws.structures.keys().cloned().collect()
    }

    fn formulas(&self) -> Vec<String> {
        self.ws.formulas.keys().cloned().collect()
    }

    fn filters(&self) -> Vec<String> {
        self.ws.filters.keys().cloned().collect()
    }

    /// `{x⃗ | φ}` per stage and the models verdict. `formula` is a
    /// workspace name or formula text.
    #[pyo3(signature = (structure, formula, context = ""))]
    fn eval<'py>(&self, py: Python<'py>, structure: &str, formula: &str, context: &str) -> PyResult<Bound<'py, PyAny>> {
        self.valid()?;
        let m = self.ws.structure(structure).map_err(err)?;
        let (ctx, phi) = self.target(formula, context)?;
        let s = Evaluator::global().interp_formula(m, &ctx, &phi).map_err(err)?;
        to_py(
            py,
            &json!({
                "context": ctx.to_string(),
                "formula": phi.to_string(),
                "stages": s.to_named(),
                "models": s.is_top(),
            }),
        )
    }

    #[pyo3(signature = (structure, formula, context = ""))]
    fn models(&self, structure: &str, formula: &str, context: &str) -> PyResult<bool> {
        self.valid()?;
        let m = self.ws.structure(structure).map_err(err)?;
        let (ctx, phi) = self.target(formula, context)?;
        topos_forge::semantics::models(m, &ctx, &phi).map_err(err)
    }

    /// Forcing at the identity of the context object.
    #[pyo3(signature = (structure, formula, context = ""))]
    fn force<'py>(&self, py: Python<'py>, structure: &str, formula: &str, context: &str) -> PyResult<Bound<'py, PyAny>> {
        self.valid()?;
        let m = self.ws.structure(structure).map_err(err)?;
        let (ctx, phi) = self.target(formula, context)?;
        let alpha = GeneralizedElement::identity(m, ctx).map_err(err)?;
        to_py(py, &forces(m, &alpha, &phi).map_err(err)?.to_json())
    }

    /// Łoś reports for the named formulas (all by default) on a filter.
    #[pyo3(signature = (filter, formulas = None, all_alphas = false, advisory = false))]
    fn los<'py>(
        &self,
        py: Python<'py>,
        filter: &str,
        formulas: Option<Vec<String>>,
        all_alphas: bool,
        advisory: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        self.valid()?;
        let (family, f) = self.ws.filter(filter).map_err(err)?;
        let fp = filtered_product(f, self.ws.family(family).map_err(err)?).map_err(err)?;
        let names = formulas.unwrap_or_else(|| self.formulas());
        let sig = fp.structure.sig().clone();
        let mut cases = Vec::new();
        for n in &names {
            let (ctx, phi) = self.ws.formula(n).map_err(err)?;
            if phi.prepare(&sig, ctx).is_ok() {
                cases.push((ctx.clone(), phi.clone()));
            }
        }
        let opts = LosOptions {
            enforce_hypotheses: !advisory,
            ..LosOptions::default()
        };
        let reports = py
            .detach(|| los_sweep(&fp, &cases, all_alphas, opts))
            .map_err(err)?;
        to_py(py, &Value::Array(reports.iter().map(|r| r.to_json()).collect()))
    }
}

/// Canonical printing of a formula.
#[pyfunction]
fn normalize(text: &str) -> PyResult<String> {
    Ok(parse_formula(text).map_err(err)?.to_string())
}

/// `cartesian`, `regular`, `coherent` or `full`.
#[pyfunction]
fn classify(text: &str) -> PyResult<String> {
    Ok(format!("{:?}", parse_formula(text).map_err(err)?.classify()).to_lowercase())
}

/// `|Ω(c)|` per object of a built-in base.
#[pyfunction]
fn omega_sizes(base: &str) -> PyResult<Vec<usize>> {
    let b = bases::by_name(base).ok_or_else(|| PyValueError::new_err(format!("unknown base `{base}`")))?;
    Ok(omega(&b).map_err(err)?.sizes())
}

/// Runs the command line; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let (mut out, mut errs) = (Vec::new(), Vec::new());
    let argv = std::iter::once("topos-forge".to_string()).chain(args);
    let code = topos_forge::cli::run(argv, &mut out, &mut errs);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&errs).into_owned(),
    )
}

#[pymodule]
fn toposforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWorkspace>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(omega_sizes, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
