//! Recovered sparse models: symbolic term lists with coefficients,
//! simulatable and serializable as JSON reports.

use crate::basis::TermDescriptor;
use crate::error::{Error, Result};
use crate::simkit::flows::rk4_step;
use crate::solvers::SolverTag;
use crate::timeseries::TimeSeries;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ode,
    Map,
    TimeVaryingOde,
    Pde,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub residual_norm: f64,
    pub sparsity: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub solver_tag: SolverTag,
    pub rows_used: usize,
    pub coherence: f64,
    pub per_row: Vec<RowDiagnostics>,
    /// Rows whose support exceeded half the row count after thresholding.
    pub dense_rows: Vec<usize>,
    pub not_sparse: bool,
}

/// A discovered model: per-variable sparse coefficient vectors over a
/// shared term library. Coefficients are stored in de-normalized
/// (original data) units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveredModel {
    pub kind: ModelKind,
    pub dim: usize,
    pub channel_names: Vec<String>,
    pub library: Vec<TermDescriptor>,
    pub coefficient_rows: Vec<Vec<f64>>,
    pub diagnostics: ModelDiagnostics,
    /// Fit interval (first and last fitted time) for time-varying models.
    pub window: Option<(f64, f64)>,
}

impl RecoveredModel {
    pub fn n_terms(&self) -> usize {
        self.library.len()
    }

    /// Index set of nonzero coefficients in row `row`.
    pub fn support(&self, row: usize) -> Vec<usize> {
        self.coefficient_rows[row]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn total_support(&self) -> usize {
        (0..self.dim).map(|r| self.support(r).len()).sum()
    }

    /// Looks up the coefficient of a term by its readable label.
    pub fn coefficient_by_label(&self, row: usize, label: &str) -> Option<f64> {
        self.library
            .iter()
            .position(|d| d.label(&self.channel_names) == label)
            .map(|j| self.coefficient_rows[row][j])
    }

    /// Evaluates the model right-hand side at state `x` and time `t`.
    pub fn eval(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let terms: Vec<f64> = self.library.iter().map(|d| d.eval(x, t)).collect();
        for (row, coeffs) in self.coefficient_rows.iter().enumerate() {
            out[row] = coeffs
                .iter()
                .zip(&terms)
                .filter(|(&c, _)| c != 0.0)
                .map(|(&c, &g)| c * g)
                .sum();
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Integrates (kind ode/time-varying) or iterates (kind map) the
/// recovered model. Fixed-step RK4 for flows.
pub fn simulate_model(
    model: &RecoveredModel,
    initial: &[f64],
    horizon: usize,
    step: f64,
) -> Result<TimeSeries> {
    if initial.len() != model.dim {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} entries, model dim is {}",
            initial.len(),
            model.dim
        )));
    }
    if horizon == 0 {
        return Err(Error::NotEnoughSamples { need: 1, have: 0 });
    }
    let dim = model.dim;
    let mut values = DMatrix::zeros(horizon, dim);
    let mut x = initial.to_vec();
    match model.kind {
        ModelKind::Ode | ModelKind::TimeVaryingOde => {
            let f = |x: &[f64], t: f64, out: &mut [f64]| model.eval(x, t, out);
            let mut t = 0.0;
            for i in 0..horizon {
                for j in 0..dim {
                    values[(i, j)] = x[j];
                }
                if i + 1 < horizon {
                    rk4_step(&f, &mut x, t, step);
                    t += step;
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Diverged { step: i });
                    }
                }
            }
            TimeSeries::uniform(0.0, step, values, model.channel_names.clone())
        }
        ModelKind::Map => {
            let mut next = vec![0.0; dim];
            for i in 0..horizon {
                for j in 0..dim {
                    values[(i, j)] = x[j];
                }
                if i + 1 < horizon {
                    model.eval(&x, i as f64, &mut next);
                    x.copy_from_slice(&next);
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Diverged { step: i });
                    }
                }
            }
            TimeSeries::uniform(0.0, 1.0, values, model.channel_names.clone())
        }
        ModelKind::Pde => Err(Error::ShapeMismatch(
            "PDE models are not simulated by simulate_model".into(),
        )),
    }
}
