//! Python module `attraos`.
//!
//! Series cross the boundary as row lists (`list[list[float]]`, one row
//! per time step), the same layout the command-line CSV files use.

use attraos_core::chaos_sim::{self, Lorenz63Params, Lorenz96Params, ObservationMap};
use attraos_core::evolution::hopfield::{iterate_to_fixed_point, HopfieldConfig};
use attraos_core::forecaster::{self, ForecasterConfig, FittedForecaster};
use attraos_core::psr::{self, EmbeddingParams, SelectionOptions};
use attraos_core::scan::{blelloch_scan, sequential_scan, ScanInput};
use attraos_core::{lyapunov, TimeSeries};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn series_from_rows(rows: &[Vec<f64>]) -> PyResult<TimeSeries> {
    TimeSeries::from_rows(rows).map_err(value_err)
}

/// Parses a forecaster configuration from JSON; missing keys take their
/// defaults and unknown keys are rejected.
pub fn parse_config(json: Option<&str>) -> Result<ForecasterConfig, String> {
    let cfg: ForecasterConfig = match json {
        Some(text) => serde_json::from_str(text).map_err(|e| e.to_string())?,
        None => ForecasterConfig::default(),
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

#[pyfunction]
#[pyo3(signature = (steps, dt=0.01, x0=(1.0, 1.0, 1.0), sigma=10.0, rho=28.0, beta=8.0 / 3.0))]
fn simulate_lorenz63(steps: usize, dt: f64, x0: (f64, f64, f64), sigma: f64, rho: f64, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    let p = Lorenz63Params { sigma, rho, beta };
    let traj = chaos_sim::simulate_lorenz63(&p, [x0.0, x0.1, x0.2], dt, steps).map_err(value_err)?;
    Ok(traj.states)
}

/// Starts from `F` everywhere plus 0.01 in the first coordinate unless
/// `x0` is given.
#[pyfunction]
#[pyo3(signature = (steps, dim=40, forcing=8.0, dt=0.01, x0=None))]
fn simulate_lorenz96(steps: usize, dim: usize, forcing: f64, dt: f64, x0: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let p = Lorenz96Params { forcing_f: forcing, dim };
    let x0 = x0.unwrap_or_else(|| {
        let mut x = vec![forcing; dim];
        if let Some(first) = x.first_mut() {
            *first += 0.01;
        }
        x
    });
    let traj = chaos_sim::simulate_lorenz96(&p, &x0, dt, steps).map_err(value_err)?;
    Ok(traj.states)
}

/// Projects state rows through a seeded random linear map.
#[pyfunction]
fn observe(states: Vec<Vec<f64>>, obs_dim: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let state_dim = states.first().map_or(0, Vec::len);
    let traj = chaos_sim::Trajectory {
        states,
        dt: 1.0,
    };
    let map = ObservationMap::random(obs_dim, state_dim, seed).map_err(value_err)?;
    Ok(chaos_sim::observe(&traj, &map).map_err(value_err)?.rows())
}

/// Returns `(m, tau)`.
#[pyfunction]
#[pyo3(signature = (series, max_tau=64, max_m=10, fnn_threshold=0.01))]
fn select_embedding(series: Vec<f64>, max_tau: usize, max_m: usize, fnn_threshold: f64) -> PyResult<(usize, usize)> {
    let opts = SelectionOptions {
        max_tau,
        max_m,
        fnn_threshold,
        ..Default::default()
    };
    let r = psr::select_embedding_report(&series, &opts).map_err(value_err)?;
    Ok((r.m, r.tau))
}

#[pyfunction]
fn delay_embed(series: Vec<f64>, m: usize, tau: usize) -> PyResult<Vec<Vec<f64>>> {
    let params = EmbeddingParams::new(m, tau).map_err(value_err)?;
    Ok(psr::delay_embed(&series, params).map_err(value_err)?.points)
}

/// Returns `(mle_per_step, divergence_curve)`.
#[pyfunction]
#[pyo3(signature = (series, m, tau, horizon=50, theiler=None, fit_range=None))]
fn max_lyapunov(
    series: Vec<f64>,
    m: usize,
    tau: usize,
    horizon: usize,
    theiler: Option<usize>,
    fit_range: Option<(usize, usize)>,
) -> PyResult<(f64, Vec<f64>)> {
    let params = EmbeddingParams::new(m, tau).map_err(value_err)?;
    let est = lyapunov::estimate_mle(&series, params, horizon, theiler, fit_range).map_err(value_err)?;
    Ok((est.mle, est.divergence_curve))
}

/// Largest relative deviation between the tree and sequential scans on a
/// random diagonal input.
#[pyfunction]
#[pyo3(signature = (length, n=8, d=2, seed=0))]
fn scan_deviation(length: usize, n: usize, d: usize, seed: u64) -> PyResult<f64> {
    if n == 0 || d == 0 {
        return Err(PyValueError::new_err("n and d must be at least 1"));
    }
    let input = ScanInput::random_diagonal(length, n, d, seed);
    let tree = blelloch_scan(&input);
    let seq = sequential_scan(&input);
    Ok(tree
        .iter()
        .zip(&seq)
        .map(|(g, w)| (g - w).amax() / w.amax().max(1e-300))
        .fold(0.0, f64::max))
}

/// Returns `(state, iterations, energies)`.
#[pyfunction]
#[pyo3(signature = (query, patterns, beta, max_iters=10))]
fn hopfield_retrieve(
    query: Vec<f64>,
    patterns: Vec<Vec<f64>>,
    beta: f64,
    max_iters: usize,
) -> PyResult<(Vec<f64>, usize, Vec<f64>)> {
    let cfg = HopfieldConfig::new(patterns, beta, max_iters).map_err(value_err)?;
    if query.len() != cfg.dim() {
        return Err(PyValueError::new_err(format!(
            "query has {} entries, patterns have {}",
            query.len(),
            cfg.dim()
        )));
    }
    let t = iterate_to_fixed_point(&query, &cfg);
    Ok((t.state, t.iterations, t.energies))
}

#[pyclass(frozen)]
struct Forecaster {
    inner: FittedForecaster,
}

#[pymethods]
impl Forecaster {
    /// Fits on `rows`; `config` is a JSON object of forecaster settings.
    #[staticmethod]
    #[pyo3(signature = (rows, config=None))]
    fn fit(py: Python<'_>, rows: Vec<Vec<f64>>, config: Option<&str>) -> PyResult<Self> {
        let cfg = parse_config(config).map_err(PyValueError::new_err)?;
        let series = series_from_rows(&rows)?;
        let inner = py.detach(|| forecaster::fit(&cfg, &series)).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: FittedForecaster::from_json(text).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_err)
    }

    /// Forecast rows continuing the last `window` rows of `context`.
    #[pyo3(signature = (context, steps=None))]
    fn predict(&self, context: Vec<Vec<f64>>, steps: Option<usize>) -> PyResult<Vec<Vec<f64>>> {
        let series = series_from_rows(&context)?;
        let steps = steps.unwrap_or(self.inner.horizon());
        let out = forecaster::rollout(&self.inner, &series, steps, None, 0.0).map_err(value_err)?;
        Ok(out.predictions.rows())
    }

    /// Backtest mean squared error over every window of `rows`.
    #[pyo3(signature = (rows, stride=1))]
    fn backtest_mse(&self, rows: Vec<Vec<f64>>, stride: usize) -> PyResult<f64> {
        let series = series_from_rows(&rows)?;
        Ok(forecaster::backtest(&self.inner, &series, stride).map_err(value_err)?.0.mse)
    }

    #[getter]
    fn window(&self) -> usize {
        self.inner.window()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }
}

#[pymodule]
fn attraos(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate_lorenz63, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_lorenz96, m)?)?;
    m.add_function(wrap_pyfunction!(observe, m)?)?;
    m.add_function(wrap_pyfunction!(select_embedding, m)?)?;
    m.add_function(wrap_pyfunction!(delay_embed, m)?)?;
    m.add_function(wrap_pyfunction!(max_lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(scan_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(hopfield_retrieve, m)?)?;
    m.add_class::<Forecaster>()?;
    Ok(())
}
