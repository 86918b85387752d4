//! Python bindings for `dtc_core`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dtc_core::diagnostics::{self, Regime};
use dtc_core::error::DtcError;
use dtc_core::{floquet, hilbert, metrology, milestones, observables, sweep};

fn to_py(e: DtcError) -> PyErr {
    match e {
        DtcError::Io(_)
        | DtcError::StepSize(_)
        | DtcError::DegenerateInformation(_)
        | DtcError::InsufficientData(_)
        | DtcError::EmptyTrajectory => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Number of satellites and twice the central spin.
#[pyclass(name = "SystemShape", frozen, eq, hash, from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PyShape(hilbert::SystemShape);

#[pymethods]
impl PyShape {
    #[new]
    fn new(n_sat: usize, two_s: usize) -> PyResult<Self> {
        hilbert::SystemShape::new(n_sat, two_s)
            .map(PyShape)
            .map_err(to_py)
    }

    /// Builds a shape from a spin string such as "5/2".
    #[staticmethod]
    fn from_spin(n_sat: usize, spin: &str) -> PyResult<Self> {
        let two_s = dtc_core::cli::parse_spin(spin).map_err(to_py)?;
        Self::new(n_sat, two_s)
    }

    #[getter]
    fn n_sat(&self) -> usize {
        self.0.n_sat()
    }

    #[getter]
    fn two_s(&self) -> usize {
        self.0.two_s()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemShape(n_sat={}, two_s={})",
            self.0.n_sat(),
            self.0.two_s()
        )
    }
}

/// Interaction strength and kick angles.
#[pyclass(name = "DriveParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyDrive(floquet::DriveParams);

#[pymethods]
impl PyDrive {
    #[new]
    #[pyo3(signature = (lam, g=None, g_s=None, g_c=None))]
    fn new(lam: f64, g: Option<f64>, g_s: Option<f64>, g_c: Option<f64>) -> PyResult<Self> {
        let g_s = g_s.or(g);
        let g_c = g_c.or(g);
        match (g_s, g_c) {
            (Some(g_s), Some(g_c)) => {
                let p = floquet::DriveParams::with_kicks(lam, g_s, g_c);
                p.validate().map_err(to_py)?;
                Ok(PyDrive(p))
            }
            _ => Err(PyValueError::new_err("give g or both g_s and g_c")),
        }
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn g_s(&self) -> f64 {
        self.0.g_s
    }

    #[getter]
    fn g_c(&self) -> f64 {
        self.0.g_c
    }

    fn __repr__(&self) -> String {
        format!(
            "DriveParams(lam={}, g_s={}, g_c={})",
            self.0.lambda, self.0.g_s, self.0.g_c
        )
    }
}

/// Normalized state over the joint satellite-central space.
#[pyclass(name = "PureState", skip_from_py_object)]
#[derive(Clone)]
struct PyState(hilbert::PureState);

#[pymethods]
impl PyState {
    #[new]
    fn new(shape: PyShape, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        hilbert::PureState::normalized(shape.0, amplitudes)
            .map(PyState)
            .map_err(to_py)
    }

    /// The fully x-polarized product state.
    #[staticmethod]
    fn x_polarized(shape: PyShape) -> Self {
        PyState(hilbert::x_polarized_state(shape.0))
    }

    #[getter]
    fn shape(&self) -> PyShape {
        PyShape(self.0.shape())
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    /// Applies `periods` Floquet periods in place.
    fn evolve(&mut self, params: PyDrive, periods: usize) -> PyResult<()> {
        let tables = floquet::precompute(self.0.shape(), params.0).map_err(to_py)?;
        floquet::evolve_silent(&mut self.0, &tables, periods).map_err(to_py)
    }

    fn fidelity(&self, other: &PyState) -> PyResult<f64> {
        hilbert::fidelity(&self.0, &other.0).map_err(to_py)
    }

    fn inner(&self, other: &PyState) -> PyResult<Complex64> {
        hilbert::inner(&self.0, &other.0).map_err(to_py)
    }

    /// Central-satellite entanglement entropy in nats.
    fn entropy(&self) -> f64 {
        hilbert::central_entropy(&self.0)
    }

    /// Magnetization of "satellites" or "central" along "x", "y" or "z".
    #[pyo3(signature = (target, axis="x"))]
    fn magnetization(&self, target: &str, axis: &str) -> PyResult<f64> {
        let target = match target {
            "satellites" => observables::Target::Satellites,
            "central" => observables::Target::Central,
            other => return Err(PyValueError::new_err(format!("unknown target '{other}'"))),
        };
        let axis = axis.parse().map_err(to_py)?;
        Ok(observables::magnetization(&self.0, target, axis))
    }
}

/// Per-period records `(n, m_sat_x, m_c_x, entropy, fidelity)` from n = 0.
#[pyfunction]
fn trajectory(
    shape: PyShape,
    params: PyDrive,
    periods: usize,
) -> PyResult<Vec<(usize, f64, f64, f64, f64)>> {
    let traj = observables::trajectory(shape.0, params.0, periods).map_err(to_py)?;
    Ok(traj
        .iter()
        .map(|r| (r.n, r.m_sat_x, r.m_c_x, r.entropy, r.fidelity_initial))
        .collect())
}

/// First revival period within `n_max` periods, or None.
#[pyfunction]
#[pyo3(signature = (shape, params, n_max=64, epsilon=1e-8))]
fn detect_period(
    shape: PyShape,
    params: PyDrive,
    n_max: usize,
    epsilon: f64,
) -> PyResult<Option<usize>> {
    let traj = observables::trajectory(shape.0, params.0, n_max).map_err(to_py)?;
    Ok(diagnostics::detect_period(&traj, epsilon)
        .map_err(to_py)?
        .detected_period)
}

/// Tabulated prediction as a dict with keys satellites, central, period.
#[pyfunction]
fn predict_dtc_class(
    py: Python<'_>,
    n_sat: usize,
    two_s: usize,
    regime: &str,
) -> PyResult<Py<PyAny>> {
    let regime: Regime = regime.parse().map_err(to_py)?;
    let p = diagnostics::predict_dtc_class(n_sat, two_s, regime).map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("satellites", p.satellites.map(|b| b.to_string()))?;
    d.set_item("central", p.central.map(|b| b.to_string()))?;
    d.set_item("period", p.period)?;
    Ok(d.into_any().unbind())
}

fn milestone_spec(shape: PyShape, time_index: usize) -> milestones::MilestoneSpec {
    milestones::MilestoneSpec::new(milestones::ParityCase::of(shape.0), time_index)
}

/// Milestone state of the shape's parity case at `time_index` periods.
#[pyfunction]
fn milestone_state(shape: PyShape, time_index: usize) -> PyResult<PyState> {
    milestones::milestone_state(shape.0, milestone_spec(shape, time_index))
        .map(PyState)
        .map_err(to_py)
}

#[pyfunction]
fn milestone_fidelity(shape: PyShape, params: PyDrive, time_index: usize) -> PyResult<f64> {
    milestones::milestone_fidelity(shape.0, params.0, milestone_spec(shape, time_index))
        .map_err(to_py)
}

/// Fisher matrix as a dict (f_ll, f_gg, f_lg, g, disagreement).
#[pyfunction]
#[pyo3(signature = (shape, params, periods, delta=1e-4))]
fn qfi_matrix(
    py: Python<'_>,
    shape: PyShape,
    params: PyDrive,
    periods: usize,
    delta: f64,
) -> PyResult<Py<PyAny>> {
    let q = metrology::qfi_matrix(shape.0, params.0, periods, delta).map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("f_ll", q.f_ll)?;
    d.set_item("f_gg", q.f_gg)?;
    d.set_item("f_lg", q.f_lg)?;
    d.set_item("g", q.g_scalar)?;
    d.set_item("disagreement", q.disagreement)?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
fn fit_power_law(points: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    metrology::fit_power_law(&points).map_err(to_py)
}

/// Runs a grid scan and returns the phase-map CSV text.
#[pyfunction]
#[pyo3(signature = (shape, lambda_range, g_range, periods, stride=2, workers=None))]
fn sweep_csv(
    shape: PyShape,
    lambda_range: (f64, f64, usize),
    g_range: (f64, f64, usize),
    periods: usize,
    stride: usize,
    workers: Option<usize>,
) -> PyResult<String> {
    let spec = sweep::GridSpec {
        lambda_range: sweep::AxisRange::new(lambda_range.0, lambda_range.1, lambda_range.2),
        g_range: sweep::AxisRange::new(g_range.0, g_range.1, g_range.2),
        shape: shape.0,
        periods,
        stride,
    };
    let opts = sweep::RunOptions {
        workers,
        ..Default::default()
    };
    let run = sweep::run_grid_with(&spec, &opts).map_err(to_py)?;
    Ok(sweep::to_csv_string(&run.rows().map_err(to_py)?))
}

#[pyfunction]
fn parse_spin(text: &str) -> PyResult<usize> {
    dtc_core::cli::parse_spin(text).map_err(to_py)
}

#[pyfunction]
fn parse_angle(text: &str) -> PyResult<f64> {
    dtc_core::cli::parse_angle(text).map_err(to_py)
}

#[pymodule]
fn central_spin_dtc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyShape>()?;
    m.add_class::<PyDrive>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(detect_period, m)?)?;
    m.add_function(wrap_pyfunction!(predict_dtc_class, m)?)?;
    m.add_function(wrap_pyfunction!(milestone_state, m)?)?;
    m.add_function(wrap_pyfunction!(milestone_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(parse_spin, m)?)?;
    m.add_function(wrap_pyfunction!(parse_angle, m)?)?;
    Ok(())
}
