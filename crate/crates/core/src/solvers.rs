//! Sparse linear inverse solvers for G * a = X: LASSO coordinate
//! descent, orthogonal matching pursuit, and thresholded least squares.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Relative singular-value cutoff for the pseudoinverse.
pub const PINV_RCOND: f64 = 1e-12;
/// Coordinate-descent tolerance on the max coordinate change.
pub const LASSO_TOL: f64 = 1e-8;
/// Coordinate-descent sweep cap.
pub const LASSO_MAX_ITER: usize = 100_000;
/// Relative hard threshold applied after solving (fraction of the
/// largest effective coefficient magnitude).
pub const DEFAULT_HARD_THRESHOLD: f64 = 1e-3;
/// ADMM iteration cap for basis pursuit.
pub const BP_MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    LassoCd,
    Omp,
    Stls,
    /// min ||a||_1 subject to G a = x; the lambda -> 0 lasso limit for
    /// noiseless underdetermined rows. Not exposed on the CLI flag.
    BasisPursuit,
}

impl std::fmt::Display for SolverTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverTag::LassoCd => write!(f, "lasso_cd"),
            SolverTag::Omp => write!(f, "omp"),
            SolverTag::Stls => write!(f, "stls"),
            SolverTag::BasisPursuit => write!(f, "basis_pursuit"),
        }
    }
}

/// One sparse regression instance.
///
/// `threshold` is relative: a term is dropped when its effective
/// magnitude (coefficient divided by its `column_scales` entry, when
/// given) falls below `threshold` times the largest effective magnitude.
/// With scales taken from library column norms this makes the cut act in
/// de-normalized units.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub matrix: DMatrix<f64>,
    pub target: DVector<f64>,
    pub lambda: f64,
    pub threshold: f64,
    pub max_support: Option<usize>,
    pub column_scales: Option<Vec<f64>>,
}

impl RegressionProblem {
    pub fn new(matrix: DMatrix<f64>, target: DVector<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::ShapeMismatch("empty matrix".into()));
        }
        if matrix.nrows() != target.len() {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} rows, target has {} entries",
                matrix.nrows(),
                target.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) || target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("regression problem".into()));
        }
        Ok(Self {
            matrix,
            target,
            lambda: 0.0,
            threshold: DEFAULT_HARD_THRESHOLD,
            max_support: None,
            column_scales: None,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_max_support(mut self, k: usize) -> Self {
        self.max_support = Some(k);
        self
    }

    pub fn with_column_scales(mut self, scales: Vec<f64>) -> Self {
        self.column_scales = Some(scales);
        self
    }

    /// Coefficients mapped back to the unnormalized column units.
    pub fn effective(&self, coeffs: &[f64]) -> Vec<f64> {
        match &self.column_scales {
            Some(s) => coeffs.iter().zip(s).map(|(c, n)| c / n).collect(),
            None => coeffs.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseSolution {
    pub solver_tag: SolverTag,
    pub lambda: f64,
    pub threshold: f64,
    pub coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub residual_norm: f64,
    pub sparsity: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl SparseSolution {
    fn from_coeffs(
        problem: &RegressionProblem,
        tag: SolverTag,
        coefficients: Vec<f64>,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let support: Vec<usize> = coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, _)| j)
            .collect();
        // residual recomputed from scratch, never trusted from the solver
        let a = DVector::from_column_slice(&coefficients);
        let residual = &problem.target - &problem.matrix * a;
        SparseSolution {
            solver_tag: tag,
            lambda: problem.lambda,
            threshold: problem.threshold,
            sparsity: support.len(),
            support,
            residual_norm: residual.norm(),
            coefficients,
            iterations,
            converged,
        }
    }
}

/// Least-squares solve via rank-revealing SVD with relative cutoff.
pub fn pinv_solve(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let svd = matrix.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = max_sv * PINV_RCOND;
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    let uty = u.transpose() * rhs;
    let mut scaled = DVector::zeros(svd.singular_values.len());
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        if s > cutoff {
            scaled[i] = uty[i] / s;
        }
    }
    vt.transpose() * scaled
}

/// Unregularized least squares restricted to `support`; returns a dense
/// coefficient vector with zeros off the support.
pub fn restricted_least_squares(
    matrix: &DMatrix<f64>,
    target: &DVector<f64>,
    support: &[usize],
) -> Vec<f64> {
    let n = matrix.ncols();
    if support.is_empty() {
        return vec![0.0; n];
    }
    let sub = matrix.select_columns(support.iter());
    let sol = pinv_solve(&sub, target);
    let mut coeffs = vec![0.0; n];
    for (k, &j) in support.iter().enumerate() {
        coeffs[j] = sol[k];
    }
    coeffs
}

/// Drops entries whose effective magnitude is below `threshold` times
/// the largest effective magnitude, then refits by least squares.
fn threshold_and_debias(problem: &RegressionProblem, coeffs: &[f64]) -> Vec<f64> {
    if problem.threshold <= 0.0 {
        return coeffs.to_vec();
    }
    let eff = problem.effective(coeffs);
    let max_eff = eff.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if max_eff == 0.0 {
        return vec![0.0; coeffs.len()];
    }
    let cut = problem.threshold * max_eff;
    let support: Vec<usize> = eff
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() >= cut)
        .map(|(j, _)| j)
        .collect();
    restricted_least_squares(&problem.matrix, &problem.target, &support)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for (1/2M)||G a - X||^2 + lambda ||a||_1,
/// followed by the hard-threshold + debias step.
pub fn solve_lasso_cd(problem: &RegressionProblem) -> Result<SparseSolution> {
    let g = &problem.matrix;
    let x = &problem.target;
    let m = g.nrows() as f64;
    let n = g.ncols();
    if problem.lambda < 0.0 {
        return Err(Error::Degenerate("lambda must be nonnegative".into()));
    }
    let col_sq: Vec<f64> = (0..n).map(|j| g.column(j).norm_squared() / m).collect();
    if col_sq.iter().all(|&c| c == 0.0) {
        return Err(Error::Degenerate("all-zero matrix".into()));
    }
    let mut a = vec![0.0; n];
    let mut residual = x.clone();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_ITER {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let old = a[j];
            // rho = g_j' (residual + g_j a_j) / M
            let rho = g.column(j).dot(&residual) / m + col_sq[j] * old;
            let new = soft_threshold(rho, problem.lambda) / col_sq[j];
            if new != old {
                let delta = new - old;
                residual.axpy(-delta, &g.column(j).into_owned(), 1.0);
                a[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < LASSO_TOL {
            converged = true;
            break;
        }
    }
    let coeffs = threshold_and_debias(problem, &a);
    Ok(SparseSolution::from_coeffs(
        problem,
        SolverTag::LassoCd,
        coeffs,
        sweeps,
        converged,
    ))
}

/// Greedy orthogonal matching pursuit: select by maximal absolute
/// correlation with the residual using unit-normalized columns, refit on
/// the growing support, stop at the residual tolerance or support cap.
pub fn solve_omp(problem: &RegressionProblem) -> Result<SparseSolution> {
    let g = &problem.matrix;
    let x = &problem.target;
    let m = g.nrows();
    let n = g.ncols();
    let max_support = problem.max_support.unwrap_or((m / 2).max(1)).min(n).min(m);
    let col_norms: Vec<f64> = (0..n).map(|j| g.column(j).norm()).collect();
    if col_norms.iter().all(|&c| c == 0.0) {
        return Err(Error::Degenerate("all-zero matrix".into()));
    }
    let target_norm = x.norm();
    let tol = 1e-10 * target_norm.max(1.0);
    let mut support: Vec<usize> = Vec::new();
    let mut residual = x.clone();
    let mut coeffs = vec![0.0; n];
    let mut steps = 0;
    while support.len() < max_support && residual.norm() > tol {
        let mut best_j = None;
        let mut best_corr = 0.0f64;
        for j in 0..n {
            if col_norms[j] == 0.0 || support.contains(&j) {
                continue;
            }
            let corr = (g.column(j).dot(&residual) / col_norms[j]).abs();
            // ties broken by lowest column index (strict improvement only)
            if corr > best_corr + f64::EPSILON * best_corr.max(1.0) {
                best_corr = corr;
                best_j = Some(j);
            }
        }
        let Some(j) = best_j else { break };
        if best_corr <= tol {
            break;
        }
        support.push(j);
        coeffs = restricted_least_squares(g, x, &support);
        let a = DVector::from_column_slice(&coeffs);
        residual = x - g * a;
        steps += 1;
    }
    let coeffs = threshold_and_debias(problem, &coeffs);
    let converged = residual.norm() <= tol || support.len() >= max_support;
    Ok(SparseSolution::from_coeffs(
        problem,
        SolverTag::Omp,
        coeffs,
        steps,
        converged,
    ))
}

/// Iterated thresholded least squares: pseudoinverse solve on the active
/// set, drop terms below the relative threshold, repeat to a fixed point.
pub fn solve_stls(problem: &RegressionProblem) -> Result<SparseSolution> {
    let g = &problem.matrix;
    let x = &problem.target;
    let n = g.ncols();
    let mut active: Vec<usize> = (0..n).collect();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let coeffs = restricted_least_squares(g, x, &active);
        if problem.threshold <= 0.0 {
            return Ok(SparseSolution::from_coeffs(
                problem,
                SolverTag::Stls,
                coeffs,
                iterations,
                true,
            ));
        }
        let eff = problem.effective(&coeffs);
        let max_eff = active
            .iter()
            .map(|&j| eff[j].abs())
            .fold(0.0, f64::max);
        if max_eff == 0.0 {
            return Err(Error::Degenerate(
                "threshold eliminated every term on the first pass".into(),
            ));
        }
        let cut = problem.threshold * max_eff;
        let next: Vec<usize> = active
            .iter()
            .cloned()
            .filter(|&j| eff[j].abs() >= cut)
            .collect();
        if next.is_empty() {
            return Err(Error::Degenerate(
                "threshold eliminated every term".into(),
            ));
        }
        if next == active {
            return Ok(SparseSolution::from_coeffs(
                problem,
                SolverTag::Stls,
                coeffs,
                iterations,
                true,
            ));
        }
        if seen.contains(&next) {
            // oscillating active set
            let coeffs = restricted_least_squares(g, x, &next);
            return Ok(SparseSolution::from_coeffs(
                problem,
                SolverTag::Stls,
                coeffs,
                iterations,
                false,
            ));
        }
        seen.push(active.clone());
        active = next;
    }
}

/// Equality-constrained l1 minimization via ADMM: alternate a projection
/// onto {a : G a = x} with a soft threshold. Only defined for
/// underdetermined full-row-rank systems; the projection uses a Cholesky
/// factor of G G'.
pub fn solve_basis_pursuit(problem: &RegressionProblem) -> Result<SparseSolution> {
    let g = &problem.matrix;
    let x = &problem.target;
    let (m, n) = (g.nrows(), g.ncols());
    if m >= n {
        return Err(Error::Degenerate(
            "basis pursuit needs more columns than rows".into(),
        ));
    }
    let gram = g * g.transpose();
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Degenerate("rank-deficient rows in basis pursuit".into())
    })?;
    let gt = g.transpose();
    let project = |v: &DVector<f64>| -> DVector<f64> {
        let defect = g * v - x;
        v - &gt * chol.solve(&defect)
    };
    // scale-free threshold: rho chosen from the least-norm seed so the
    // soft step is gentle relative to genuine coefficients
    let seed = project(&DVector::zeros(n));
    let scale = seed.amax().max(1e-12);
    let kappa = 1e-2 * scale; // soft-threshold amount 1/rho
    let mut z = seed;
    let mut u = DVector::<f64>::zeros(n);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < BP_MAX_ITER {
        iterations += 1;
        let a = project(&(&z - &u));
        let mut z_next = &a + &u;
        for v in z_next.iter_mut() {
            *v = soft_threshold(*v, kappa);
        }
        u += &a - &z_next;
        let gap = (&a - &z_next).amax();
        z = z_next;
        if gap < 1e-12 * scale.max(1.0) {
            converged = true;
            break;
        }
    }
    let coeffs = threshold_and_debias(problem, z.as_slice());
    Ok(SparseSolution::from_coeffs(
        problem,
        SolverTag::BasisPursuit,
        coeffs,
        iterations,
        converged,
    ))
}

pub fn solve(problem: &RegressionProblem, tag: SolverTag) -> Result<SparseSolution> {
    match tag {
        SolverTag::LassoCd => solve_lasso_cd(problem),
        SolverTag::Omp => solve_omp(problem),
        SolverTag::Stls => solve_stls(problem),
        SolverTag::BasisPursuit => solve_basis_pursuit(problem),
    }
}

/// Chooses lambda by contiguous-block k-fold cross validation on the
/// held-out squared error. Ties go to the larger lambda (prefer the
/// sparser model; a pure-noise target then selects the largest grid
/// value, where the all-zero fit wins).
pub fn cross_validate_lambda(
    problem: &RegressionProblem,
    folds: usize,
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Degenerate("empty lambda grid".into()));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let m = problem.matrix.nrows();
    if folds < 2 || folds > m {
        return Err(Error::Degenerate(format!(
            "need 2 <= folds <= M, got folds={folds}, M={m}"
        )));
    }
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let fold_bounds: Vec<(usize, usize)> = (0..folds)
        .map(|f| (f * m / folds, (f + 1) * m / folds))
        .collect();
    let mut best = (f64::INFINITY, sorted[0]);
    for &lambda in &sorted {
        let mut total_err = 0.0;
        for &(lo, hi) in &fold_bounds {
            let train_rows: Vec<usize> = (0..m).filter(|i| *i < lo || *i >= hi).collect();
            let test_rows: Vec<usize> = (lo..hi).collect();
            let train_g = problem.matrix.select_rows(train_rows.iter());
            let train_x = DVector::from_iterator(
                train_rows.len(),
                train_rows.iter().map(|&i| problem.target[i]),
            );
            let mut sub = RegressionProblem::new(train_g, train_x)?;
            sub.lambda = lambda;
            sub.threshold = problem.threshold;
            sub.column_scales = problem.column_scales.clone();
            let sol = solve_lasso_cd(&sub)?;
            let a = DVector::from_column_slice(&sol.coefficients);
            for &i in &test_rows {
                let pred = problem.matrix.row(i).transpose().dot(&a);
                let err = problem.target[i] - pred;
                total_err += err * err;
            }
        }
        let mean_err = total_err / m as f64;
        if mean_err <= best.0 {
            // <= so equal errors pick the larger (later) lambda
            best = (mean_err, lambda);
        }
    }
    Ok(best.1)
}

/// Maximum absolute normalized inner product between distinct columns.
pub fn mutual_coherence(matrix: &DMatrix<f64>) -> f64 {
    let n = matrix.ncols();
    let norms: Vec<f64> = (0..n).map(|j| matrix.column(j).norm()).collect();
    let mut max_c = 0.0f64;
    for i in 0..n {
        if norms[i] == 0.0 {
            continue;
        }
        for j in i + 1..n {
            if norms[j] == 0.0 {
                continue;
            }
            let c = (matrix.column(i).dot(&matrix.column(j)) / (norms[i] * norms[j])).abs();
            max_c = max_c.max(c);
        }
    }
    max_c
}
