//! Fixed-step integration of the canonical flows.

use crate::error::{Error, Result};
use crate::timeseries::{default_channel_names, TimeSeries};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "flow", rename_all = "snake_case")]
pub enum FlowSystem {
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    Roessler { a: f64, b: f64, c: f64 },
    /// dx/dt = -(c0 + c1 t) x
    LinearDrift { c0: f64, c1: f64 },
}

impl FlowSystem {
    pub fn dim(&self) -> usize {
        match self {
            FlowSystem::Lorenz { .. } | FlowSystem::Roessler { .. } => 3,
            FlowSystem::LinearDrift { .. } => 1,
        }
    }

    pub fn eval(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match *self {
            FlowSystem::Lorenz { sigma, rho, beta } => {
                out[0] = sigma * (x[1] - x[0]);
                out[1] = x[0] * (rho - x[2]) - x[1];
                out[2] = x[0] * x[1] - beta * x[2];
            }
            FlowSystem::Roessler { a, b, c } => {
                out[0] = -x[1] - x[2];
                out[1] = x[0] + a * x[1];
                out[2] = b + x[2] * (x[0] - c);
            }
            FlowSystem::LinearDrift { c0, c1 } => {
                out[0] = -(c0 + c1 * t) * x[0];
            }
        }
    }
}

/// One classical 4th-order Runge-Kutta step of `f(x, t)`.
pub fn rk4_step<F>(f: &F, x: &mut [f64], t: f64, dt: f64)
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(x, t, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(&tmp, t + 0.5 * dt, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(&tmp, t + 0.5 * dt, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(&tmp, t + dt, &mut k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates an arbitrary vector field with RK4, dropping the transient
/// and recording `steps` samples (including the state at the start of
/// the recording window). Recorded times start at 0.
pub fn simulate_vector_field<F>(
    f: &F,
    x0: &[f64],
    dt: f64,
    steps: usize,
    transient_discard: usize,
    channel_names: Vec<String>,
) -> Result<TimeSeries>
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    if dt <= 0.0 {
        return Err(Error::InvalidDimension("dt must be positive".into()));
    }
    if steps == 0 {
        return Err(Error::NotEnoughSamples { need: 1, have: 0 });
    }
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut t = -(transient_discard as f64) * dt;
    for step in 0..transient_discard {
        rk4_step(f, &mut x, t, dt);
        t += dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step });
        }
    }
    // restart the clock at the head of the recording window
    let mut t = 0.0;
    let mut values = DMatrix::zeros(steps, dim);
    for i in 0..steps {
        for j in 0..dim {
            values[(i, j)] = x[j];
        }
        if i + 1 < steps {
            rk4_step(f, &mut x, t, dt);
            t += dt;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged {
                    step: transient_discard + i,
                });
            }
        }
    }
    TimeSeries::uniform(0.0, dt, values, channel_names)
}

pub fn simulate_flow(
    sys: &FlowSystem,
    x0: &[f64],
    dt: f64,
    steps: usize,
    transient_discard: usize,
) -> Result<TimeSeries> {
    if x0.len() != sys.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} entries, system needs {}",
            x0.len(),
            sys.dim()
        )));
    }
    // the transient must not rewind time-dependent fields below t=0
    let time_dependent = matches!(sys, FlowSystem::LinearDrift { .. });
    let f = |x: &[f64], t: f64, out: &mut [f64]| sys.eval(x, t.max(0.0), out);
    let discard = if time_dependent { 0 } else { transient_discard };
    simulate_vector_field(&f, x0, dt, steps, discard, default_channel_names(sys.dim()))
}
