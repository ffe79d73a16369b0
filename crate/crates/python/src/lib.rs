//! Python module `cstar_polar`. Matrices cross the boundary as nested lists
//! of complex numbers, row-major.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cstar_polar::cpmaps::{self, choi_from_kraus, kraus_from_choi, KrausFamily};
use cstar_polar::harness::{run_scenario as run, ExperimentConfig, Scenario};
use cstar_polar::mtests;
use cstar_polar::polar::{self, BipolarVerdict, DoublePolarParams, PolarMembership};
use cstar_polar::{ComplexMatrix, Normalization};

type Rows = Vec<Vec<Complex64>>;

fn err(e: cstar_polar::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

pub fn to_matrix(rows: Rows) -> Result<ComplexMatrix, String> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err("ragged matrix rows".into());
    }
    ComplexMatrix::new(r, c, rows.into_iter().flatten().collect()).map_err(|e| e.to_string())
}

pub fn to_rows(a: &ComplexMatrix) -> Rows {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a[(i, j)]).collect()).collect()
}

fn matrix(rows: Rows) -> PyResult<ComplexMatrix> {
    to_matrix(rows).map_err(PyValueError::new_err)
}

/// Completely positive map `M_m → M_n` held by its Choi matrix.
#[pyclass(name = "CPMap", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCPMap(cstar_polar::CPMap);

#[pymethods]
impl PyCPMap {
    #[new]
    fn new(m: usize, n: usize, choi: Rows) -> PyResult<Self> {
        Ok(Self(cstar_polar::CPMap::from_choi(m, n, matrix(choi)?).map_err(err)?))
    }

    #[staticmethod]
    fn from_kraus(ops: Vec<Rows>) -> PyResult<Self> {
        let ops = ops.into_iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
        let (n, m) = ops.first().map(|v| v.shape()).ok_or_else(|| PyValueError::new_err("no Kraus operators"))?;
        let family = KrausFamily::new(ops).map_err(err)?;
        Ok(Self(choi_from_kraus(&family, m, n).map_err(err)?))
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        Self(cstar_polar::CPMap::identity(d))
    }

    #[staticmethod]
    fn depolarizing(m: usize, n: usize) -> Self {
        Self(cstar_polar::CPMap::depolarizing(m, n))
    }

    #[staticmethod]
    fn transpose(d: usize) -> Self {
        Self(cstar_polar::CPMap::transpose(d))
    }

    #[staticmethod]
    #[pyo3(signature = (m, n, rank, seed, normalization = "none"))]
    fn random(m: usize, n: usize, rank: usize, seed: u64, normalization: &str) -> PyResult<Self> {
        let norm = match normalization {
            "none" => Normalization::None,
            "unital" => Normalization::Unital,
            "trace-preserving" => Normalization::TracePreserving,
            other => return Err(PyValueError::new_err(format!("unknown normalization {other:?}"))),
        };
        Ok(Self(cpmaps::random_cp(m, n, rank, norm, seed).map_err(err)?))
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn choi(&self) -> Rows {
        to_rows(self.0.choi())
    }

    fn kraus(&self) -> PyResult<Vec<Rows>> {
        Ok(kraus_from_choi(&self.0).map_err(err)?.ops().iter().map(to_rows).collect())
    }

    fn is_cp(&self) -> bool {
        self.0.is_cp()
    }

    fn apply(&self, x: Rows) -> PyResult<Rows> {
        Ok(to_rows(&self.0.apply(&matrix(x)?).map_err(err)?))
    }

    fn distance(&self, other: &PyCPMap) -> f64 {
        self.0.distance(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("CPMap(m={}, n={})", self.0.m(), self.0.n())
    }
}

/// Matrix test `(k, ρ, s)` with `ρ` a density on `C^k ⊗ C^n`.
#[pyclass(name = "MatrixTest", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMatrixTest(cstar_polar::MatrixTest);

#[pymethods]
impl PyMatrixTest {
    #[new]
    fn new(k: usize, rho: Rows, s: Rows) -> PyResult<Self> {
        Ok(Self(cstar_polar::MatrixTest::new(k, matrix(rho)?, matrix(s)?).map_err(err)?))
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn rho(&self) -> Rows {
        to_rows(self.0.rho())
    }

    fn s(&self) -> Rows {
        to_rows(self.0.s())
    }

    fn scaled(&self, c: Complex64) -> Self {
        Self(self.0.scaled(c))
    }

    fn realify(&self, theta: f64) -> Self {
        Self(mtests::realify(&self.0, theta))
    }

    fn __repr__(&self) -> String {
        format!("MatrixTest(k={}, m={}, n={})", self.0.k(), self.0.m(), self.0.n())
    }
}

fn maps(k: &[PyRef<'_, PyCPMap>]) -> Vec<cstar_polar::CPMap> {
    k.iter().map(|p| p.0.clone()).collect()
}

/// `Tr(ρ·(id_k ⊗ Φ)(s))`.
#[pyfunction]
fn pairing(t: &PyMatrixTest, map: &PyCPMap) -> PyResult<Complex64> {
    mtests::pairing(&t.0, &map.0).map_err(err)
}

/// Bracket `(lower, upper)` on `sup |⟨t, Ψ⟩|` over the C*-convex hull of `k`.
#[pyfunction]
#[pyo3(signature = (k, t, theta_grid = polar::DEFAULT_THETA_GRID))]
fn sat_sup(k: Vec<PyRef<'_, PyCPMap>>, t: &PyMatrixTest, theta_grid: usize) -> PyResult<(f64, f64)> {
    let res = polar::sat_sup(&maps(&k), &t.0, theta_grid).map_err(err)?;
    Ok((res.lower(), res.upper()))
}

/// `"MEMBER"`, `"NOT_MEMBER"` or `"UNDECIDED"`.
#[pyfunction]
#[pyo3(signature = (t, k, tol = 1e-8))]
fn in_saturated_polar(t: &PyMatrixTest, k: Vec<PyRef<'_, PyCPMap>>, tol: f64) -> PyResult<&'static str> {
    Ok(match polar::in_saturated_polar(&t.0, &maps(&k), tol).map_err(err)? {
        PolarMembership::Member(_) => "MEMBER",
        PolarMembership::NotMember(_) => "NOT_MEMBER",
        _ => "UNDECIDED",
    })
}

/// Returns `(verdict, detail)`: the hull distance when inside, the
/// separating test when outside, the best distance otherwise.
#[pyfunction]
#[pyo3(signature = (map, k, epsilon = None))]
fn in_double_polar(
    py: Python<'_>,
    map: &PyCPMap,
    k: Vec<PyRef<'_, PyCPMap>>,
    epsilon: Option<f64>,
) -> PyResult<(&'static str, Py<PyAny>)> {
    let mut params = DoublePolarParams::default();
    if let Some(eps) = epsilon {
        params.epsilon = eps;
    }
    let verdict = polar::in_double_polar(&map.0, &maps(&k), &params).map_err(err)?;
    let label = verdict.label();
    let detail = match verdict {
        BipolarVerdict::Inside { distance, .. } => distance.into_pyobject(py)?.into_any().unbind(),
        BipolarVerdict::Outside(cert) => Py::new(py, PyMatrixTest(cert.test))?.into_any(),
        BipolarVerdict::Undecided { best_distance, .. } => best_distance.into_pyobject(py)?.into_any().unbind(),
    };
    Ok((label, detail))
}

/// Runs a harness scenario and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (name, seed = 0, trials = None))]
fn run_scenario(name: &str, seed: u64, trials: Option<usize>) -> PyResult<String> {
    let scenario: Scenario = name.parse().map_err(err)?;
    let mut cfg = ExperimentConfig::new(scenario);
    cfg.seed = seed;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    Ok(run(&cfg).map_err(err)?.to_json())
}

#[pymodule]
#[pyo3(name = "cstar_polar")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCPMap>()?;
    m.add_class::<PyMatrixTest>()?;
    m.add_function(wrap_pyfunction!(pairing, m)?)?;
    m.add_function(wrap_pyfunction!(sat_sup, m)?)?;
    m.add_function(wrap_pyfunction!(in_saturated_polar, m)?)?;
    m.add_function(wrap_pyfunction!(in_double_polar, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("DEFAULT_THETA_GRID", polar::DEFAULT_THETA_GRID)?;
    Ok(())
}
