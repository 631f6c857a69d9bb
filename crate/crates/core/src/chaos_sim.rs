//! Ground-truth chaotic systems and linear observation functions.
//!
//! Both systems are integrated with fixed-step classical Runge–Kutta. The
//! integrator never adapts its step, so trajectories are bit-reproducible
//! and equilibria (where the vector field is exactly zero) stay exactly
//! fixed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::component_rng;
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl Lorenz63Params {
    pub fn rhs(&self, x: &[f64], dx: &mut [f64]) {
        dx[0] = self.sigma * (x[1] - x[0]);
        dx[1] = x[0] * (self.rho - x[2]) - x[1];
        dx[2] = x[0] * x[1] - self.beta * x[2];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz96Params {
    pub forcing_f: f64,
    pub dim: usize,
}

impl Default for Lorenz96Params {
    fn default() -> Self {
        Self {
            forcing_f: 8.0,
            dim: 40,
        }
    }
}

impl Lorenz96Params {
    /// `dx_i/dt = (x_{i+1} − x_{i−2}) x_{i−1} − x_i + F`, indices cyclic.
    pub fn rhs(&self, x: &[f64], dx: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let ip1 = x[(i + 1) % n];
            let im1 = x[(i + n - 1) % n];
            let im2 = x[(i + n - 2) % n];
            dx[i] = (ip1 - im2) * im1 - x[i] + self.forcing_f;
        }
    }
}

/// Integrated states `x_0 … x_steps` with uniform spacing `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Drops the first `n` states.
    pub fn discard_transient(mut self, n: usize) -> Self {
        let n = n.min(self.states.len());
        self.states.drain(..n);
        self
    }

    /// Component `i` of every state as a scalar series.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    pub fn to_series(&self) -> TimeSeries {
        TimeSeries::from_rows(&self.states).expect("states share one dimension")
    }
}

/// Fixed-step RK4 integration of `dx/dt = f(x)`.
pub fn rk4_integrate<F>(f: F, x0: &[f64], dt: f64, steps: usize) -> Result<Trajectory>
where
    F: Fn(&[f64], &mut [f64]),
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if steps < 1 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    let n = x0.len();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut x = x0.to_vec();
    let half = 0.5 * dt;
    let sixth = dt / 6.0;
    for step in 1..=steps {
        f(&x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + half * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + half * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..n {
            x[i] += sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        states.push(x.clone());
    }
    Ok(Trajectory { states, dt })
}

pub fn simulate_lorenz63(params: &Lorenz63Params, x0: [f64; 3], dt: f64, steps: usize) -> Result<Trajectory> {
    if ![params.sigma, params.rho, params.beta].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("Lorenz63 parameters must be finite".into()));
    }
    rk4_integrate(|x, dx| params.rhs(x, dx), &x0, dt, steps)
}

pub fn simulate_lorenz96(params: &Lorenz96Params, x0: &[f64], dt: f64, steps: usize) -> Result<Trajectory> {
    if params.dim < 4 {
        return Err(Error::InvalidParameter(format!(
            "Lorenz96 dimension must be at least 4, got {}",
            params.dim
        )));
    }
    if !params.forcing_f.is_finite() {
        return Err(Error::InvalidParameter("Lorenz96 forcing must be finite".into()));
    }
    if x0.len() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            got: x0.len(),
        });
    }
    rk4_integrate(|x, dx| params.rhs(x, dx), x0, dt, steps)
}

/// Linear observation `y = W x` standing in for an unknown measurement
/// function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMap {
    /// Row-major `obs_dim × state_dim`.
    pub weights: Vec<Vec<f64>>,
    pub seed: u64,
}

impl ObservationMap {
    /// Weights drawn i.i.d. uniform on (−1, 1) from the seeded stream.
    pub fn random(obs_dim: usize, state_dim: usize, seed: u64) -> Result<Self> {
        if obs_dim == 0 || obs_dim > state_dim {
            return Err(Error::InvalidParameter(format!(
                "observation dimension {obs_dim} must be in 1..={state_dim}"
            )));
        }
        let mut rng = component_rng(seed, 0x0b5e);
        let weights = (0..obs_dim)
            .map(|_| (0..state_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Ok(Self { weights, seed })
    }

    pub fn identity(dim: usize) -> Self {
        let weights = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { weights, seed: 0 }
    }

    pub fn obs_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn state_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

pub fn observe(traj: &Trajectory, map: &ObservationMap) -> Result<TimeSeries> {
    if map.state_dim() != traj.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.state_dim(),
            got: map.state_dim(),
        });
    }
    let channels = map
        .weights
        .iter()
        .map(|w| {
            traj.states
                .iter()
                .map(|s| w.iter().zip(s).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    TimeSeries::from_channels(channels)
}
