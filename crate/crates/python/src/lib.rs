//! Python module `reactive_rx`.
//!
//! Build with `maturin develop --release` from this directory, or
//! `cargo build --release -p reactive-rx-python --features extension-module`
//! and copy `libreactive_rx_py.so` to `reactive_rx.so` somewhere on the path.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use reactive_rx::analytic::{self, Evaluation};
use reactive_rx::harness::{self, selfcheck};
use reactive_rx::params::{ChannelParams as CoreParams, RawParams};
use reactive_rx::{oracle, sim, specfun};

create_exception!(reactive_rx, NumericalError, PyRuntimeError);

fn numerical(e: impl std::fmt::Display) -> PyErr {
    NumericalError::new_err(e.to_string())
}

/// Channel parameters in SI units. Defaults are the reference setup.
#[pyclass(name = "ChannelParams", module = "reactive_rx", frozen, from_py_object)]
#[derive(Clone)]
struct PyChannelParams {
    inner: CoreParams,
}

#[pymethods]
impl PyChannelParams {
    #[new]
    #[pyo3(signature = (a=None, r0=None, diffusion=None, k_f=None, k_b=None, k_d=None, n_molecules=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        a: Option<f64>,
        r0: Option<f64>,
        diffusion: Option<f64>,
        k_f: Option<f64>,
        k_b: Option<f64>,
        k_d: Option<f64>,
        n_molecules: Option<u64>,
    ) -> PyResult<Self> {
        let base = RawParams::baseline();
        let raw = RawParams {
            a: a.unwrap_or(base.a),
            r0: r0.unwrap_or(base.r0),
            diffusion: diffusion.unwrap_or(base.diffusion),
            k_f: k_f.unwrap_or(base.k_f),
            k_b: k_b.unwrap_or(base.k_b),
            k_d: k_d.unwrap_or(base.k_d),
            n_molecules: n_molecules.unwrap_or(base.n_molecules),
        };
        CoreParams::new(raw)
            .map(|inner| PyChannelParams { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }
    #[getter]
    fn r0(&self) -> f64 {
        self.inner.r0()
    }
    #[getter]
    fn diffusion(&self) -> f64 {
        self.inner.diffusion()
    }
    #[getter]
    fn k_f(&self) -> f64 {
        self.inner.k_f()
    }
    #[getter]
    fn k_b(&self) -> f64 {
        self.inner.k_b()
    }
    #[getter]
    fn k_d(&self) -> f64 {
        self.inner.k_d()
    }
    #[getter]
    fn n_molecules(&self) -> u64 {
        self.inner.n_molecules()
    }

    /// Diffusion-limited rate `4π a D_A`.
    #[getter]
    fn k_diffusion(&self) -> f64 {
        self.inner.diffusion_limited_rate()
    }

    fn __repr__(&self) -> String {
        format!("ChannelParams({})", harness::inline_params(&self.inner))
    }
}

/// Fixed-step ensemble settings.
#[pyclass(name = "SimConfig", module = "reactive_rx", from_py_object)]
#[derive(Clone)]
struct PySimConfig {
    #[pyo3(get, set)]
    dt: f64,
    #[pyo3(get, set)]
    horizon: f64,
    #[pyo3(get, set)]
    trials: usize,
    #[pyo3(get, set)]
    seed: u64,
    #[pyo3(get, set)]
    record_every: usize,
    #[pyo3(get, set)]
    threads: Option<usize>,
}

#[pymethods]
impl PySimConfig {
    #[new]
    #[pyo3(signature = (dt, horizon, trials, seed=0, record_every=1, threads=None))]
    fn new(dt: f64, horizon: f64, trials: usize, seed: u64, record_every: usize, threads: Option<usize>) -> Self {
        PySimConfig {
            dt,
            horizon,
            trials,
            seed,
            record_every,
            threads,
        }
    }
}

impl PySimConfig {
    fn core(&self) -> sim::SimConfig {
        sim::SimConfig {
            master_seed: self.seed,
            record_every: self.record_every,
            threads: self.threads,
            ..sim::SimConfig::desk(self.dt, self.horizon, self.trials)
        }
    }
}

/// `P_AC(t)`; returns `(value, how)` with `how` either "closed-form" or
/// "oracle-fallback".
#[pyfunction]
fn impulse_response(params: &PyChannelParams, t: f64) -> PyResult<(f64, &'static str)> {
    let (v, how) = analytic::channel_response(t, &params.inner).map_err(numerical)?;
    let how = match how {
        Evaluation::ClosedForm => "closed-form",
        Evaluation::OracleFallback => "oracle-fallback",
    };
    Ok((v, how))
}

/// `P_AC(t)` by numerical Laplace inversion.
#[pyfunction]
fn oracle_impulse_response(params: &PyChannelParams, t: f64) -> PyResult<f64> {
    oracle::impulse_response_via_oracle(t, &params.inner).map_err(numerical)
}

/// Free-molecule density `P_A(r, t)` (1/m³).
#[pyfunction]
fn green_function(params: &PyChannelParams, r: f64, t: f64) -> PyResult<f64> {
    let roots = analytic::solve_roots(&params.inner).map_err(numerical)?;
    analytic::green_function(r, t, &params.inner, &roots).map_err(numerical)
}

/// `N_A · P_AC(t)` on `times`.
#[pyfunction]
fn expected_received(params: &PyChannelParams, times: Vec<f64>) -> PyResult<Vec<f64>> {
    analytic::expected_received_or_fallback(&times, &params.inner)
        .map(|(s, _)| s.values)
        .map_err(numerical)
}

#[pyfunction]
fn overlap_probability(params: &PyChannelParams, r: f64, dt: f64) -> PyResult<f64> {
    sim::overlap_probability(r, dt, &params.inner).map_err(numerical)
}

/// Mean bound count and its standard error at every record time:
/// `(times, mean, stderr)`.
#[pyfunction]
fn run_ensemble(
    py: Python<'_>,
    params: &PyChannelParams,
    config: &PySimConfig,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (p, c) = (params.inner, config.core());
    let out = py.detach(|| sim::run_ensemble(&p, &c)).map_err(numerical)?;
    let s = out.series;
    Ok((s.times, s.values, s.stderr))
}

#[pyfunction]
fn erfcx(x: f64) -> PyResult<f64> {
    specfun::erfcx_real(x).map_err(numerical)
}

#[pyfunction]
fn faddeeva(z: Complex64) -> PyResult<Complex64> {
    specfun::faddeeva(z).map_err(numerical)
}

/// `exp(2nm + m²) · erfc(n + m)`.
#[pyfunction]
fn w_paper(n: Complex64, m: Complex64) -> PyResult<Complex64> {
    specfun::w_paper(n, m).map_err(numerical)
}

/// Runs an experiment file's text into `out`; returns the exit code.
#[pyfunction]
#[pyo3(signature = (spec_text, out=None, strict=false, jobs=1))]
fn run_experiment(py: Python<'_>, spec_text: &str, out: Option<String>, strict: bool, jobs: usize) -> PyResult<i32> {
    let mut spec = harness::parse_spec(spec_text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(out) = out {
        spec.outputs = out.into();
    }
    let options = harness::RunOptions { strict, jobs };
    let summary = py
        .detach(|| harness::run_experiment(&spec, &options))
        .map_err(|e| match e.exit_code() {
            2 => PyValueError::new_err(e.to_string()),
            _ => numerical(e),
        })?;
    Ok(summary.exit_code())
}

/// Built-in checks as `(name, passed, detail)` tuples.
#[pyfunction]
fn check(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(selfcheck::run_checks)
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
#[pyo3(name = "reactive_rx")]
fn reactive_rx_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PySimConfig>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(impulse_response, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_impulse_response, m)?)?;
    m.add_function(wrap_pyfunction!(green_function, m)?)?;
    m.add_function(wrap_pyfunction!(expected_received, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_probability, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(erfcx, m)?)?;
    m.add_function(wrap_pyfunction!(faddeeva, m)?)?;
    m.add_function(wrap_pyfunction!(w_paper, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
