//! Derivative estimation: turns sampled trajectories into measurement
//! vectors aligned with library rows.

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};


/// Finite-difference scheme for forming the measurement vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    Backward,
    Central,
    /// Five-point central stencil, fourth-order accurate. Needs two
    /// samples on each side; useful when the step cannot be small.
    Central4,
}

impl Default for DiffScheme {
    fn default() -> Self {
        DiffScheme::Central4
    }
}

/// Derivative rows plus the sample indices they align with. The caller
/// must evaluate library rows at exactly `sample_indices`.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub matrix: DMatrix<f64>,
    pub sample_indices: Vec<usize>,
    pub times: Vec<f64>,
}

impl Derivatives {
    /// Restricts the aligned trajectory to the rows the scheme covers.
    pub fn aligned_series(&self, series: &TimeSeries) -> Result<TimeSeries> {
        let m = self.sample_indices.len();
        let mut values = DMatrix::zeros(m, series.dim());
        for (r, &i) in self.sample_indices.iter().enumerate() {
            values.set_row(r, &series.values.row(i));
        }
        TimeSeries::new(self.times.clone(), values, series.channel_names.clone())
    }
}

fn require_uniform(series: &TimeSeries) -> Result<f64> {
    series.dt.ok_or_else(|| {
        Error::NonUniformSampling("scheme requires a uniform grid; use central_difference".into())
    })
}

/// dx(t_i)/dt ~ (x(t_i) - x(t_{i-1})) / dt for i = 1..M.
pub fn backward_difference(series: &TimeSeries) -> Result<Derivatives> {
    let dt = require_uniform(series)?;
    let n = series.len();
    if n < 2 {
        return Err(Error::NotEnoughSamples { need: 2, have: n });
    }
    let m = series.dim();
    let rows = n - 1;
    let mut matrix = DMatrix::zeros(rows, m);
    for i in 1..n {
        for j in 0..m {
            matrix[(i - 1, j)] = (series.values[(i, j)] - series.values[(i - 1, j)]) / dt;
        }
    }
    let sample_indices: Vec<usize> = (1..n).collect();
    let times = sample_indices.iter().map(|&i| series.times[i]).collect();
    Ok(Derivatives {
        matrix,
        sample_indices,
        times,
    })
}

/// dx(t_i)/dt ~ (x(t_{i+1}) - x(t_{i-1})) / (t_{i+1} - t_{i-1}) at the
/// interior samples; second-order on uniform grids, works on non-uniform
/// grids too.
pub fn central_difference(series: &TimeSeries) -> Result<Derivatives> {
    let n = series.len();
    if n < 3 {
        return Err(Error::NotEnoughSamples { need: 3, have: n });
    }
    let m = series.dim();
    let rows = n - 2;
    let mut matrix = DMatrix::zeros(rows, m);
    for i in 1..n - 1 {
        let span = series.times[i + 1] - series.times[i - 1];
        for j in 0..m {
            matrix[(i - 1, j)] = (series.values[(i + 1, j)] - series.values[(i - 1, j)]) / span;
        }
    }
    let sample_indices: Vec<usize> = (1..n - 1).collect();
    let times = sample_indices.iter().map(|&i| series.times[i]).collect();
    Ok(Derivatives {
        matrix,
        sample_indices,
        times,
    })
}

/// Fourth-order central stencil (-x2 + 8x1 - 8x_1 + x_2)/(12 dt).
pub fn central_difference_4(series: &TimeSeries) -> Result<Derivatives> {
    let dt = require_uniform(series)?;
    let n = series.len();
    if n < 5 {
        return Err(Error::NotEnoughSamples { need: 5, have: n });
    }
    let m = series.dim();
    let rows = n - 4;
    let mut matrix = DMatrix::zeros(rows, m);
    for i in 2..n - 2 {
        for j in 0..m {
            let v = (-series.values[(i + 2, j)] + 8.0 * series.values[(i + 1, j)]
                - 8.0 * series.values[(i - 1, j)]
                + series.values[(i - 2, j)])
                / (12.0 * dt);
            matrix[(i - 2, j)] = v;
        }
    }
    let sample_indices: Vec<usize> = (2..n - 2).collect();
    let times = sample_indices.iter().map(|&i| series.times[i]).collect();
    Ok(Derivatives {
        matrix,
        sample_indices,
        times,
    })
}

pub fn differentiate(series: &TimeSeries, scheme: DiffScheme) -> Result<Derivatives> {
    match scheme {
        DiffScheme::Backward => backward_difference(series),
        DiffScheme::Central => central_difference(series),
        DiffScheme::Central4 => central_difference_4(series),
    }
}

/// Map targets: rows are x(t_{i+1}) paired with library rows at x(t_i).
pub fn map_increments(series: &TimeSeries) -> Result<Derivatives> {
    let n = series.len();
    if n < 2 {
        return Err(Error::NotEnoughSamples { need: 2, have: n });
    }
    let m = series.dim();
    let rows = n - 1;
    let mut matrix = DMatrix::zeros(rows, m);
    for i in 0..rows {
        for j in 0..m {
            matrix[(i, j)] = series.values[(i + 1, j)];
        }
    }
    // library rows are evaluated at the pre-image states
    let sample_indices: Vec<usize> = (0..rows).collect();
    let times = sample_indices.iter().map(|&i| series.times[i]).collect();
    Ok(Derivatives {
        matrix,
        sample_indices,
        times,
    })
}
