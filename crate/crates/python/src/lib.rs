//! Python bindings: meshes, boundary specs, the solve/flux pipeline, the
//! series oracle and the refinement study.

use bridgebench::benchmark::{self, StudyConfig};
use bridgebench::flux::recover_nodal_flux;
use bridgebench::{analytic, fem, flux, mesh};
use bridgebench::{Corner, EdgeTag, ElementOrder, SolverKind};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::{BTreeMap, BTreeSet};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pipeline_err(e: bridgebench::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(value_err)
}

fn parse_tags(tags: &[String]) -> PyResult<Vec<EdgeTag>> {
    tags.iter().map(|t| parse::<EdgeTag>(t)).collect()
}

#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: mesh::Mesh,
}

#[pymethods]
impl PyMesh {
    #[staticmethod]
    #[pyo3(signature = (width, height, nx, ny, order = "linear"))]
    fn uniform(width: f64, height: f64, nx: usize, ny: usize, order: &str) -> PyResult<Self> {
        let inner = mesh::build_uniform_grid(width, height, nx, ny, parse(order)?).map_err(value_err)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (width, height, nx, ny, grading_ratio, focus_corner = "top-right", order = "linear"))]
    fn graded(
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        grading_ratio: f64,
        focus_corner: &str,
        order: &str,
    ) -> PyResult<Self> {
        let focus: Corner = parse(focus_corner)?;
        let inner = mesh::build_graded_grid(width, height, nx, ny, grading_ratio, focus, parse(order)?)
            .map_err(value_err)?;
        Ok(PyMesh { inner })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn cell_count(&self) -> usize {
        self.inner.cell_count()
    }

    #[getter]
    fn spacing_hint(&self) -> f64 {
        self.inner.spacing_hint()
    }

    #[getter]
    fn order(&self) -> String {
        self.inner.order().to_string()
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.nodes().iter().map(|p| (p[0], p[1])).collect()
    }

    fn cell(&self, index: usize) -> PyResult<Vec<usize>> {
        if index >= self.inner.cell_count() {
            return Err(value_err(format!("cell {index} out of range")));
        }
        Ok(self.inner.cell(index).to_vec())
    }

    fn boundary_nodes(&self, tag: &str) -> PyResult<Vec<usize>> {
        Ok(self.inner.boundary_nodes_named(tag).map_err(value_err)?.to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(nodes={}, cells={}, order={})",
            self.inner.node_count(),
            self.inner.cell_count(),
            self.inner.order()
        )
    }
}

#[pyclass(name = "BoundarySpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBoundarySpec {
    inner: fem::BoundarySpec,
}

#[pymethods]
impl PyBoundarySpec {
    #[new]
    fn new(dirichlet: BTreeMap<String, f64>, adiabatic: Vec<String>, corner_rule: Vec<String>) -> PyResult<Self> {
        let dirichlet = dirichlet
            .into_iter()
            .map(|(k, v)| Ok((parse::<EdgeTag>(&k)?, v)))
            .collect::<PyResult<BTreeMap<_, _>>>()?;
        let adiabatic: BTreeSet<EdgeTag> = parse_tags(&adiabatic)?.into_iter().collect();
        let inner = fem::BoundarySpec::new(dirichlet, adiabatic, parse_tags(&corner_rule)?).map_err(value_err)?;
        Ok(PyBoundarySpec { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (corner_rule = None))]
    fn case1(corner_rule: Option<Vec<String>>) -> PyResult<Self> {
        let inner = match corner_rule {
            Some(r) => fem::BoundarySpec::case1_with_rule(parse_tags(&r)?),
            None => fem::BoundarySpec::case1(),
        };
        inner.validate().map_err(value_err)?;
        Ok(PyBoundarySpec { inner })
    }

    #[staticmethod]
    fn one_dimensional(top: f64, bottom: f64) -> Self {
        PyBoundarySpec { inner: fem::BoundarySpec::one_dimensional(top, bottom) }
    }

    fn singular_corners(&self) -> Vec<String> {
        self.inner
            .singular_corners()
            .into_iter()
            .map(|c| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect()
    }
}

#[pyclass(name = "TemperatureField", frozen)]
struct PyTemperatureField {
    inner: fem::TemperatureField,
}

#[pymethods]
impl PyTemperatureField {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn relative_residual(&self) -> f64 {
        self.inner.relative_residual
    }

    fn value_at(&self, mesh: &PyMesh, x: f64, y: f64) -> PyResult<f64> {
        self.inner
            .value_at(&mesh.inner, x, y)
            .ok_or_else(|| value_err(format!("({x}, {y}) is outside the mesh")))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "FluxField", frozen)]
struct PyFluxField {
    inner: flux::FluxField,
}

#[pymethods]
impl PyFluxField {
    #[getter]
    fn gauss_flux(&self) -> Vec<(f64, f64)> {
        self.inner.gauss_flux.iter().map(|q| (q[0], q[1])).collect()
    }

    #[getter]
    fn nodal_flux(&self) -> Vec<(f64, f64)> {
        self.inner.nodal().unwrap_or_default().iter().map(|q| (q[0], q[1])).collect()
    }
}

/// Element conductivity matrix as a list of rows.
#[pyfunction]
#[pyo3(signature = (coords, conductivity = 1.0, order = "linear"))]
fn element_stiffness(coords: Vec<(f64, f64)>, conductivity: f64, order: &str) -> PyResult<Vec<Vec<f64>>> {
    let coords: Vec<[f64; 2]> = coords.into_iter().map(|(x, y)| [x, y]).collect();
    let k = fem::element_stiffness(&coords, conductivity, parse(order)?).map_err(value_err)?;
    Ok(k.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Assembles and solves; returns nodal temperatures.
#[pyfunction]
#[pyo3(signature = (mesh, bc, conductivity = 1.0, solver = "cholesky"))]
fn solve_temperature(
    py: Python<'_>,
    mesh: &PyMesh,
    bc: &PyBoundarySpec,
    conductivity: f64,
    solver: &str,
) -> PyResult<PyTemperatureField> {
    let solver: SolverKind = parse(solver)?;
    let material = fem::Material::new(conductivity).map_err(value_err)?;
    let result = py.detach(|| {
        let system = fem::assemble(&mesh.inner, &material, &bc.inner)?.with_solver(solver);
        fem::solve(&system)
    });
    let inner = result.map_err(|e| pipeline_err(e.into()))?;
    Ok(PyTemperatureField { inner })
}

/// Gauss-point and node-averaged heat flux.
#[pyfunction]
#[pyo3(signature = (mesh, field, conductivity = 1.0))]
fn recover_flux(mesh: &PyMesh, field: &PyTemperatureField, conductivity: f64) -> PyResult<PyFluxField> {
    let material = fem::Material::new(conductivity).map_err(value_err)?;
    let inner = recover_nodal_flux(&mesh.inner, &field.inner, &material).map_err(value_err)?;
    Ok(PyFluxField { inner })
}

/// Heat flow through a Dirichlet edge: dict with total, masked_total,
/// mask_count and per_node [(position, inward_flux, weight, masked)].
#[pyfunction]
#[pyo3(signature = (mesh, flux, bc, tag = "top", mask_count = 0))]
fn boundary_heat_flow<'py>(
    py: Python<'py>,
    mesh: &PyMesh,
    flux: &PyFluxField,
    bc: &PyBoundarySpec,
    tag: &str,
    mask_count: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let flow = flux::boundary_heat_flow(&mesh.inner, &flux.inner, &bc.inner, parse(tag)?, mask_count).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("total", flow.total)?;
    d.set_item("masked_total", flow.masked_total)?;
    d.set_item("mask_count", flow.mask_count)?;
    let per_node: Vec<(f64, f64, f64, bool)> = flow
        .per_node
        .iter()
        .map(|s| (s.position, s.inward_flux, s.weight, s.masked))
        .collect();
    d.set_item("per_node", per_node)?;
    Ok(d)
}

#[pyclass(name = "Case1Exact", frozen)]
struct PyCase1Exact {
    inner: analytic::Case1Exact,
}

#[pymethods]
impl PyCase1Exact {
    #[new]
    #[pyo3(signature = (side = 0.4, t_hot = 20.0, t_cold = 0.0, conductivity = 1.0, max_terms = 10_000, tol = 1e-12))]
    fn new(side: f64, t_hot: f64, t_cold: f64, conductivity: f64, max_terms: usize, tol: f64) -> PyResult<Self> {
        let inner = analytic::Case1Exact { side, t_hot, t_cold, conductivity, max_terms, tol };
        inner.validate().map_err(value_err)?;
        Ok(PyCase1Exact { inner })
    }

    fn exact_temperature(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.exact_temperature(x, y).map_err(value_err)
    }

    /// [(x, y, T, T_rounded)]
    #[pyo3(signature = (spacing = 0.05))]
    fn reference_grid(&self, spacing: f64) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        Ok(self
            .inner
            .reference_grid(spacing)
            .map_err(value_err)?
            .into_iter()
            .map(|p| (p.x, p.y, p.temperature, p.rounded))
            .collect())
    }

    fn exact_masked_heat_flow(&self, exclusion: f64) -> PyResult<f64> {
        self.inner.exact_masked_heat_flow(exclusion).map_err(value_err)
    }

    fn exact_top_edge_flux(&self, x: f64) -> PyResult<f64> {
        self.inner.exact_top_edge_flux(x).map_err(value_err)
    }
}

#[pyclass(name = "ConvergenceReport", frozen)]
struct PyConvergenceReport {
    inner: benchmark::ConvergenceReport,
}

#[pymethods]
impl PyConvergenceReport {
    /// One dict per level.
    #[getter]
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("h_m", r.h)?;
                d.set_item("nodes", r.nodes)?;
                d.set_item("q_total", r.q_total)?;
                d.set_item("q_masked", r.q_masked)?;
                d.set_item("q_marginal", r.q_marginal)?;
                d.set_item("d_q_rel", r.d_q_rel)?;
                d.set_item("d_q_masked_rel", r.d_q_masked_rel)?;
                d.set_item("max_temp_dev", r.max_temp_dev)?;
                d.set_item("relative_residual", r.relative_residual)?;
                Ok(d)
            })
            .collect()
    }

    #[getter]
    fn verdicts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let v = self.inner.verdicts;
        let d = PyDict::new(py);
        d.set_item("flux_converged", v.flux_converged)?;
        d.set_item("masked_flux_converged", v.masked_flux_converged)?;
        d.set_item("temperature_within_tolerance", v.temperature_within_tolerance)?;
        Ok(d)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_err)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }
}

/// Runs the refinement study. `config_json` takes the same flat keys as
/// the CLI config file; keyword arguments override it.
#[pyfunction]
#[pyo3(signature = (config_json = None, h_sequence = None, element_order = None, mask_count = None))]
fn run_case1(
    py: Python<'_>,
    config_json: Option<&str>,
    h_sequence: Option<Vec<f64>>,
    element_order: Option<&str>,
    mask_count: Option<usize>,
) -> PyResult<PyConvergenceReport> {
    let mut config: StudyConfig = match config_json {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => StudyConfig::default(),
    };
    if let Some(h) = h_sequence {
        config.h_sequence = h;
    }
    if let Some(o) = element_order {
        config.element_order = parse::<ElementOrder>(o)?;
    }
    if let Some(m) = mask_count {
        config.mask_count = m;
    }
    let inner = py
        .detach(|| benchmark::run_case1(&config))
        .map_err(|e| pipeline_err(e.into()))?;
    Ok(PyConvergenceReport { inner })
}

/// |fine − coarse| / fine
#[pyfunction]
fn compare_subdivisions(coarse: f64, fine: f64) -> PyResult<f64> {
    benchmark::compare_subdivisions(coarse, fine).map_err(value_err)
}

#[pymodule]
fn bridgebench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyBoundarySpec>()?;
    m.add_class::<PyTemperatureField>()?;
    m.add_class::<PyFluxField>()?;
    m.add_class::<PyCase1Exact>()?;
    m.add_class::<PyConvergenceReport>()?;
    m.add_function(wrap_pyfunction!(element_stiffness, m)?)?;
    m.add_function(wrap_pyfunction!(solve_temperature, m)?)?;
    m.add_function(wrap_pyfunction!(recover_flux, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_heat_flow, m)?)?;
    m.add_function(wrap_pyfunction!(run_case1, m)?)?;
    m.add_function(wrap_pyfunction!(compare_subdivisions, m)?)?;
    Ok(())
}
