//! End-to-end discovery of ODE and map equations, the time-varying
//! extension, and collapse prediction via bifurcation scans of the
//! recovered model.

use crate::basis::{
    build_fourier_library_with, build_polynomial_library, build_time_augmented_library,
    evaluate_library, FourierConfig, TermDescriptor,
};
use crate::diffest::{differentiate, map_increments, DiffScheme};
use crate::error::{Error, Result};
use crate::model::{ModelDiagnostics, ModelKind, RecoveredModel, RowDiagnostics};
use crate::solvers::{
    mutual_coherence, solve, RegressionProblem, SolverTag, DEFAULT_HARD_THRESHOLD,
};
use crate::timeseries::TimeSeries;
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Solver and preprocessing choices shared by the discovery entry points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub solver: SolverTag,
    pub lambda: f64,
    pub threshold: f64,
    pub scheme: DiffScheme,
    pub normalize: bool,
    /// Optional cap on the number of rows actually fitted; rows are
    /// strided evenly over the available derivative rows.
    pub max_rows: Option<usize>,
    /// Declared full state dimension. Discovery refuses to run when the
    /// series observes fewer channels than this: full-state measurement
    /// is a hard requirement of the method.
    pub expected_dim: Option<usize>,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            solver: SolverTag::Stls,
            lambda: 0.0,
            threshold: DEFAULT_HARD_THRESHOLD,
            scheme: DiffScheme::default(),
            normalize: true,
            max_rows: None,
            expected_dim: None,
        }
    }
}

impl DiscoveryConfig {
    pub fn stls(threshold: f64) -> Self {
        Self {
            solver: SolverTag::Stls,
            threshold,
            ..Self::default()
        }
    }

    pub fn lasso(lambda: f64, threshold: f64) -> Self {
        Self {
            solver: SolverTag::LassoCd,
            lambda,
            threshold,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapLibrary {
    Polynomial { order: u32 },
    /// Harmonics up to `max_harmonic` plus first-order monomials; map
    /// functions generally carry a linear part on top of the harmonics.
    Fourier { max_harmonic: u32 },
}

/// Shared core: fit one sparse row per channel of `targets` against the
/// library evaluated on `aligned`, then de-normalize.
fn fit_rows(
    descriptors: Vec<TermDescriptor>,
    aligned: &TimeSeries,
    targets: &nalgebra::DMatrix<f64>,
    kind: ModelKind,
    config: &DiscoveryConfig,
    window: Option<(f64, f64)>,
) -> Result<RecoveredModel> {
    let lib = evaluate_library(&descriptors, aligned, config.normalize)?;
    let m_rows = lib.n_samples();
    let dim = targets.ncols();
    let coherence = mutual_coherence(&lib.matrix);
    let mut coefficient_rows = Vec::with_capacity(dim);
    let mut per_row = Vec::with_capacity(dim);
    let mut dense_rows = Vec::new();
    for row in 0..dim {
        let target = DVector::from_iterator(m_rows, (0..m_rows).map(|i| targets[(i, row)]));
        let mut problem = RegressionProblem::new(lib.matrix.clone(), target)?
            .with_lambda(config.lambda)
            .with_threshold(config.threshold);
        if config.normalize {
            problem = problem.with_column_scales(lib.column_norms.clone());
        }
        let sol = solve(&problem, config.solver)?;
        let coeffs = lib.denormalize(&sol.coefficients);
        let support = coeffs.iter().filter(|&&c| c != 0.0).count();
        if support > m_rows / 2 {
            dense_rows.push(row);
        }
        per_row.push(RowDiagnostics {
            residual_norm: sol.residual_norm,
            sparsity: support,
            iterations: sol.iterations,
            converged: sol.converged,
        });
        coefficient_rows.push(coeffs);
    }
    let not_sparse = !dense_rows.is_empty();
    Ok(RecoveredModel {
        kind,
        dim,
        channel_names: aligned.channel_names.clone(),
        library: descriptors,
        coefficient_rows,
        diagnostics: ModelDiagnostics {
            solver_tag: config.solver,
            rows_used: m_rows,
            coherence,
            per_row,
            dense_rows,
            not_sparse,
        },
        window,
    })
}

/// Evenly strided row subset, used to honor a sample budget while
/// spreading rows over the whole trajectory.
fn stride_rows(
    matrix: &nalgebra::DMatrix<f64>,
    series: &TimeSeries,
    max_rows: Option<usize>,
) -> (nalgebra::DMatrix<f64>, TimeSeries) {
    let m = matrix.nrows();
    let Some(cap) = max_rows else {
        return (matrix.clone(), series.clone());
    };
    if cap >= m {
        return (matrix.clone(), series.clone());
    }
    let picks: Vec<usize> = (0..cap).map(|r| r * (m - 1) / (cap - 1).max(1)).collect();
    let sub = matrix.select_rows(picks.iter());
    let times: Vec<f64> = picks.iter().map(|&i| series.times[i]).collect();
    let values = series.values.select_rows(picks.iter());
    let sub_series = TimeSeries::new(times, values, series.channel_names.clone())
        .expect("strided subset keeps ordering");
    (sub, sub_series)
}

fn check_full_observation(series: &TimeSeries, config: &DiscoveryConfig) -> Result<()> {
    if let Some(expected) = config.expected_dim {
        if series.dim() < expected {
            return Err(Error::PartialObservation(format!(
                "{} of {} channels observed",
                series.dim(),
                expected
            )));
        }
    }
    Ok(())
}

/// Discovers a sparse ODE model over the full polynomial grid of order
/// `q`. Requires all state variables observed.
pub fn discover_ode(
    series: &TimeSeries,
    order: u32,
    config: &DiscoveryConfig,
) -> Result<RecoveredModel> {
    check_full_observation(series, config)?;
    let descriptors = build_polynomial_library(series.dim(), order)?;
    let derivs = differentiate(series, config.scheme)?;
    let aligned = derivs.aligned_series(series)?;
    let (targets, aligned) = stride_rows(&derivs.matrix, &aligned, config.max_rows);
    fit_rows(descriptors, &aligned, &targets, ModelKind::Ode, config, None)
}

/// Discovers a sparse map model: next state regressed on the library at
/// the current state.
pub fn discover_map(
    series: &TimeSeries,
    library: MapLibrary,
    config: &DiscoveryConfig,
) -> Result<RecoveredModel> {
    check_full_observation(series, config)?;
    let descriptors = match library {
        MapLibrary::Polynomial { order } => build_polynomial_library(series.dim(), order)?,
        MapLibrary::Fourier { max_harmonic } => {
            build_fourier_library_with(series.dim(), &FourierConfig::new(max_harmonic).with_linear())?
        }
    };
    let incr = map_increments(series)?;
    let aligned = incr.aligned_series(series)?;
    let (targets, aligned) = stride_rows(&incr.matrix, &aligned, config.max_rows);
    fit_rows(descriptors, &aligned, &targets, ModelKind::Map, config, None)
}

/// Time-varying discovery over the time-augmented library. The fit
/// window is recorded so extrapolation can be bounded by the caller.
pub fn discover_time_varying(
    series: &TimeSeries,
    order: u32,
    time_order: u32,
    config: &DiscoveryConfig,
) -> Result<RecoveredModel> {
    check_full_observation(series, config)?;
    let descriptors = build_time_augmented_library(series.dim(), order, time_order)?;
    let derivs = differentiate(series, config.scheme)?;
    let aligned = derivs.aligned_series(series)?;
    let (targets, aligned) = stride_rows(&derivs.matrix, &aligned, config.max_rows);
    let window = (
        *series.times.first().unwrap(),
        *series.times.last().unwrap(),
    );
    let kind = if time_order == 0 {
        ModelKind::Ode
    } else {
        ModelKind::TimeVaryingOde
    };
    fit_rows(descriptors, &aligned, &targets, kind, config, Some(window))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ScanOutcome {
    Sustained,
    TransientEscape { mean_lifetime: f64 },
    FixedPoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub parameter_row: usize,
    pub parameter_term: usize,
    pub parameter_label: String,
    pub grid: Vec<f64>,
    pub outcomes: Vec<ScanOutcome>,
    /// Estimated critical value with its bracket, when a transition was
    /// found inside the grid.
    pub critical_value: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub grid: Vec<f64>,
    /// Iterations (map) or RK4 steps (ode) per trajectory.
    pub horizon: usize,
    pub escape_radius: f64,
    pub ensemble: usize,
    pub seed: u64,
    /// Bisection stops once the bracket is at most this wide.
    pub bracket_width: f64,
    /// Base state for the ensemble; perturbed per member.
    pub base_state: Vec<f64>,
    pub perturbation: f64,
    /// Integration step for ode-kind models; ignored for maps.
    pub step: f64,
}

impl ScanConfig {
    pub fn new(grid: Vec<f64>, base_state: Vec<f64>) -> Self {
        Self {
            grid,
            horizon: 20_000,
            escape_radius: 100.0,
            ensemble: 20,
            seed: 0,
            bracket_width: 0.02,
            base_state,
            perturbation: 1e-3,
            step: 0.01,
        }
    }
}

/// Runs one ensemble at a fixed parameter value. Returns the outcome.
fn classify_parameter(
    model: &RecoveredModel,
    row: usize,
    term: usize,
    value: f64,
    config: &ScanConfig,
    seed_offset: u64,
) -> ScanOutcome {
    let mut patched = model.clone();
    patched.coefficient_rows[row][term] = value;
    let dim = patched.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ seed_offset);
    let mut escapes = 0usize;
    let mut lifetimes = Vec::new();
    let mut fixed_points = 0usize;
    for _ in 0..config.ensemble {
        let mut x: Vec<f64> = config
            .base_state
            .iter()
            .map(|&v| v + rng.gen_range(-config.perturbation..config.perturbation))
            .collect();
        let mut next = vec![0.0; dim];
        let mut escaped_at = None;
        let mut prev = x.clone();
        let mut t = 0.0;
        for step in 0..config.horizon {
            match patched.kind {
                ModelKind::Map => {
                    patched.eval(&x, step as f64, &mut next);
                    x.copy_from_slice(&next);
                }
                _ => {
                    let f = |x: &[f64], t: f64, out: &mut [f64]| patched.eval(x, t, out);
                    crate::simkit::flows::rk4_step(&f, &mut x, t, config.step);
                    t += config.step;
                }
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > config.escape_radius {
                escaped_at = Some(step + 1);
                break;
            }
            if step + 1 == config.horizon {
                let motion: f64 = x
                    .iter()
                    .zip(&prev)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if motion < 1e-9 {
                    fixed_points += 1;
                }
            }
            if step % 16 == 0 {
                prev = x.clone();
            }
        }
        if let Some(life) = escaped_at {
            escapes += 1;
            lifetimes.push(life as f64);
        }
    }
    if 2 * escapes > config.ensemble {
        let mean = lifetimes.iter().sum::<f64>() / lifetimes.len() as f64;
        ScanOutcome::TransientEscape {
            mean_lifetime: mean,
        }
    } else if 2 * fixed_points > config.ensemble {
        ScanOutcome::FixedPoint
    } else {
        ScanOutcome::Sustained
    }
}

/// Sweeps the selected coefficient over the grid, classifies each value,
/// and bisects the transition bracket down to the requested width.
pub fn scan_bifurcation(
    model: &RecoveredModel,
    parameter_row: usize,
    parameter_term: usize,
    config: &ScanConfig,
) -> Result<BifurcationReport> {
    if parameter_row >= model.dim || parameter_term >= model.n_terms() {
        return Err(Error::ShapeMismatch("parameter selector out of range".into()));
    }
    if model.coefficient_rows[parameter_row][parameter_term] == 0.0 {
        return Err(Error::Degenerate(
            "selected coefficient is not in the model support".into(),
        ));
    }
    let mut grid = config.grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if grid.len() < 2 {
        return Err(Error::Degenerate("grid needs at least 2 values".into()));
    }
    let outcomes: Vec<ScanOutcome> = grid
        .iter()
        .enumerate()
        .map(|(i, &v)| classify_parameter(model, parameter_row, parameter_term, v, config, i as u64))
        .collect();
    // bracket between the last non-escaping and first escaping grid value
    let escaping = |o: &ScanOutcome| matches!(o, ScanOutcome::TransientEscape { .. });
    let first_escape = outcomes.iter().position(escaping);
    let (critical_value, bracket) = match first_escape {
        Some(0) | None => (None, None),
        Some(idx) => {
            let mut lo = grid[idx - 1];
            let mut hi = grid[idx];
            let mut extra = grid.len() as u64;
            while hi - lo > config.bracket_width {
                let mid = 0.5 * (lo + hi);
                let o = classify_parameter(
                    model,
                    parameter_row,
                    parameter_term,
                    mid,
                    config,
                    extra,
                );
                if escaping(&o) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                extra += 1;
            }
            (Some(0.5 * (lo + hi)), Some((lo, hi)))
        }
    };
    let label = model.library[parameter_term].label(&model.channel_names);
    Ok(BifurcationReport {
        parameter_row,
        parameter_term,
        parameter_label: label,
        grid,
        outcomes,
        critical_value,
        bracket,
        seed: config.seed,
    })
}
