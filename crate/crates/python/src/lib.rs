//! Python bindings: materials, meshes, benchmark configs and runs.

use std::path::PathBuf;

use ibfe::bench::{build_geometry, run_benchmark, Benchmark, BenchmarkConfig};
use ibfe::coupling::DeltaKernel;
use ibfe::diagnostics::RunReport;
use ibfe::fem::{read_mesh, write_mesh, ElementKind, LagrangianMesh};
use ibfe::materials::{self, ConstitutiveSpec, DefGrad, InvariantMode, MaterialFamily};
use ibfe::timeloop::RunOptions;
use nalgebra::Matrix3;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(ibfe_py, IbfeError, PyException);

fn err(e: ibfe::Error) -> PyErr {
    IbfeError::new_err(format!("{}: {e}", e.kind()))
}

fn tensor(f: [[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| f[i][j])
}

fn rows(t: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| t[(i, j)]))
}

fn parse<T: std::str::FromStr<Err = ibfe::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// A constitutive law: family, invariant mode and volumetric penalty.
#[pyclass(name = "Material", frozen)]
struct PyMaterial {
    spec: ConstitutiveSpec,
}

#[pymethods]
impl PyMaterial {
    #[staticmethod]
    #[pyo3(signature = (mu, mode = "modified", nu_s = 0.4))]
    fn neo_hookean(mu: f64, mode: &str, nu_s: f64) -> PyResult<Self> {
        Self::build(MaterialFamily::NeoHookean { mu }, mode, nu_s)
    }

    #[staticmethod]
    #[pyo3(signature = (c1, c2, mode = "modified", nu_s = 0.4))]
    fn mooney_rivlin(c1: f64, c2: f64, mode: &str, nu_s: f64) -> PyResult<Self> {
        Self::build(MaterialFamily::MooneyRivlin { c1, c2 }, mode, nu_s)
    }

    #[staticmethod]
    #[pyo3(signature = (mu_t, mu_l, e_l, fiber, mode = "modified", nu_s = 0.4))]
    fn standard_reinforcing(mu_t: f64, mu_l: f64, e_l: f64, fiber: [f64; 3], mode: &str, nu_s: f64) -> PyResult<Self> {
        Self::build(MaterialFamily::StandardReinforcing { mu_t, mu_l, e_l, fiber }, mode, nu_s)
    }

    #[getter]
    fn kappa_s(&self) -> f64 {
        self.spec.kappa_s
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.spec.mode.name()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.spec.family.name()
    }

    /// First Piola–Kirchhoff stress as a 3×3 nested list.
    fn pk1_stress(&self, f: [[f64; 3]; 3]) -> PyResult<[[f64; 3]; 3]> {
        materials::pk1_stress(&DefGrad::new(tensor(f)), &self.spec).map(|p| rows(&p)).map_err(err)
    }

    fn energy(&self, f: [[f64; 3]; 3]) -> PyResult<f64> {
        materials::energy(&DefGrad::new(tensor(f)), &self.spec).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Material(family={}, mode={}, kappa_s={})",
            self.spec.family.name(),
            self.spec.mode.name(),
            self.spec.kappa_s
        )
    }
}

impl PyMaterial {
    fn build(family: MaterialFamily, mode: &str, nu_s: f64) -> PyResult<Self> {
        let mode: InvariantMode = parse(mode)?;
        ConstitutiveSpec::new(family, mode, nu_s).map(|spec| Self { spec }).map_err(err)
    }
}

/// A Lagrangian finite-element mesh.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    mesh: LagrangianMesh,
}

#[pymethods]
impl PyMesh {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| err(e.into()))?;
        read_mesh(text.as_bytes()).map(|mesh| Self { mesh }).map_err(err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        write_mesh(&self.mesh, std::io::BufWriter::new(file)).map_err(err)
    }

    #[getter]
    fn element_type(&self) -> String {
        format!("{:?}", self.mesh.element_type)
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    fn nodes(&self) -> Vec<[f64; 3]> {
        self.mesh.nodes.iter().map(|x| [x[0], x[1], x[2]]).collect()
    }

    fn elements(&self) -> Vec<Vec<usize>> {
        (0..self.mesh.n_elements()).map(|e| self.mesh.element(e).to_vec()).collect()
    }

    fn reference_volume(&self) -> f64 {
        self.mesh.reference_volume()
    }

    fn facet_set_names(&self) -> Vec<String> {
        self.mesh.facet_set_names().map(String::from).collect()
    }
}

/// Result of a benchmark run.
#[pyclass(name = "Report", frozen)]
struct PyReport {
    report: RunReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn completed(&self) -> bool {
        self.report.completed()
    }

    #[getter]
    fn failure(&self) -> Option<String> {
        self.report.failure.clone()
    }

    #[getter]
    fn file_stem(&self) -> String {
        self.report.meta.file_stem()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.report.meta.n_nodes
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.report.meta.dt
    }

    fn terminal_displacement(&self) -> [f64; 3] {
        self.report.terminal_displacement()
    }

    fn terminal_volume_change_pct(&self) -> f64 {
        self.report.terminal_volume_change_pct()
    }

    fn final_avg_j(&self) -> Vec<f64> {
        self.report.final_avg_j.clone()
    }

    /// Time series as a list of dicts.
    fn samples<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.report
            .samples
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("t", s.t)?;
                d.set_item("disp_x", s.disp_x)?;
                d.set_item("disp_y", s.disp_y)?;
                d.set_item("disp_z", s.disp_z)?;
                d.set_item("volume_change_pct", s.volume_change_pct)?;
                d.set_item("max_speed", s.max_speed)?;
                d.set_item("min_avg_j", s.min_avg_j)?;
                Ok(d)
            })
            .collect()
    }
}

/// A benchmark configuration.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    config: BenchmarkConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    #[pyo3(signature = (benchmark, element = "P1", mode = "modified", nu_s = 0.4, level = 0))]
    fn preset(benchmark: &str, element: &str, mode: &str, nu_s: f64, level: usize) -> PyResult<Self> {
        let b: Benchmark = parse(benchmark)?;
        let e: ElementKind = parse(element)?;
        let m: InvariantMode = parse(mode)?;
        Ok(Self {
            config: BenchmarkConfig::preset(b, e, m, nu_s, level),
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        BenchmarkConfig::from_toml(text).map(|config| Self { config }).map_err(err)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.config.to_toml().map_err(err)
    }

    #[getter]
    fn benchmark(&self) -> &'static str {
        self.config.benchmark.name()
    }

    #[getter]
    fn get_t_final(&self) -> Option<f64> {
        self.config.time.t_final
    }

    #[setter]
    fn set_t_final(&mut self, value: Option<f64>) {
        self.config.time.t_final = value;
    }

    #[getter]
    fn get_dt(&self) -> Option<f64> {
        self.config.time.dt
    }

    #[setter]
    fn set_dt(&mut self, value: Option<f64>) {
        self.config.time.dt = value;
    }

    #[getter]
    fn get_grid_n(&self) -> Option<usize> {
        self.config.fluid.grid_n
    }

    #[setter]
    fn set_grid_n(&mut self, value: Option<usize>) {
        self.config.fluid.grid_n = value;
    }

    fn build_mesh(&self) -> PyResult<PyMesh> {
        build_geometry(&self.config).map(|mesh| PyMesh { mesh }).map_err(err)
    }

    /// Runs the benchmark; the GIL is released while stepping.
    #[pyo3(signature = (output_dir = None, snapshot_every = None))]
    fn run(&self, py: Python<'_>, output_dir: Option<PathBuf>, snapshot_every: Option<usize>) -> PyResult<PyReport> {
        let opts = RunOptions {
            output_dir,
            snapshot_every,
            ..Default::default()
        };
        let config = self.config.clone();
        py.detach(move || run_benchmark(&config, &opts))
            .map(|report| PyReport { report })
            .map_err(err)
    }
}

#[pyfunction]
fn kappa_from_nu(mu_eff: f64, nu_s: f64) -> PyResult<f64> {
    materials::kappa_from_nu(mu_eff, nu_s).map_err(err)
}

#[pyfunction]
fn delta_kernel(r: f64) -> f64 {
    DeltaKernel.evaluate(r)
}

/// Runs the built-in consistency checks: `(name, passed, detail)` tuples.
#[pyfunction]
fn verify() -> PyResult<Vec<(String, bool, String)>> {
    ibfe::verify::run_checks()
        .map(|cs| cs.into_iter().map(|c| (c.name.to_string(), c.passed, c.detail)).collect())
        .map_err(err)
}

#[pymodule]
fn ibfe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IbfeError", m.py().get_type::<IbfeError>())?;
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(kappa_from_nu, m)?)?;
    m.add_function(wrap_pyfunction!(delta_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
