//! Candidate-function libraries and evaluation into the projection matrix G.

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Hard cap on library size; beyond this the problem is infeasible anyway.
pub const DEFAULT_SIZE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Monomial,
    Fourier,
    TimeMonomialProduct,
    /// u^a * d^r u/dx^r over a field; exponents = [a, r]. Evaluated via
    /// weak integrals, never pointwise.
    PdeProduct,
}

/// One candidate term: a monomial x1^l1..xm^lm, optionally times t^w,
/// or a product of sin/cos harmonics (fourier kind).
///
/// For fourier terms, `fourier_index[i] = k > 0` means sin(k*x_i),
/// `k < 0` means cos(-k*x_i), and `0` leaves the variable out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDescriptor {
    pub kind: TermKind,
    pub exponents: Vec<u32>,
    pub time_power: u32,
    pub fourier_index: Vec<i32>,
}

impl TermDescriptor {
    pub fn monomial(exponents: Vec<u32>) -> Self {
        Self {
            kind: TermKind::Monomial,
            exponents,
            time_power: 0,
            fourier_index: Vec::new(),
        }
    }

    pub fn time_monomial(exponents: Vec<u32>, time_power: u32) -> Self {
        let kind = if time_power == 0 {
            TermKind::Monomial
        } else {
            TermKind::TimeMonomialProduct
        };
        Self {
            kind,
            exponents,
            time_power,
            fourier_index: Vec::new(),
        }
    }

    pub fn fourier(dim: usize, indices: Vec<(usize, i32)>) -> Self {
        let mut fourier_index = vec![0i32; dim];
        for (var, k) in indices {
            fourier_index[var] = k;
        }
        Self {
            kind: TermKind::Fourier,
            exponents: vec![0; dim],
            time_power: 0,
            fourier_index,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.time_power == 0
            && self.exponents.iter().all(|&e| e == 0)
            && self.fourier_index.iter().all(|&k| k == 0)
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Evaluates the term at state `x` and time `t`.
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self.kind {
            TermKind::Monomial | TermKind::TimeMonomialProduct => {
                let mut v = 1.0;
                for (xi, &li) in x.iter().zip(&self.exponents) {
                    v *= xi.powi(li as i32);
                }
                if self.time_power > 0 {
                    v *= t.powi(self.time_power as i32);
                }
                v
            }
            TermKind::Fourier => {
                let mut v = 1.0;
                for (xi, &k) in x.iter().zip(&self.fourier_index) {
                    if k > 0 {
                        v *= (k as f64 * xi).sin();
                    } else if k < 0 {
                        v *= ((-k) as f64 * xi).cos();
                    }
                }
                v
            }
            // needs field data, not a state vector
            TermKind::PdeProduct => f64::NAN,
        }
    }

    /// Human-readable form for reports, e.g. `x1^2*x2*t`.
    pub fn label(&self, channel_names: &[String]) -> String {
        if self.is_constant() {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        match self.kind {
            TermKind::Monomial | TermKind::TimeMonomialProduct => {
                for (i, &li) in self.exponents.iter().enumerate() {
                    if li == 1 {
                        parts.push(channel_names[i].clone());
                    } else if li > 1 {
                        parts.push(format!("{}^{}", channel_names[i], li));
                    }
                }
                if self.time_power == 1 {
                    parts.push("t".to_string());
                } else if self.time_power > 1 {
                    parts.push(format!("t^{}", self.time_power));
                }
            }
            TermKind::Fourier => {
                for (i, &k) in self.fourier_index.iter().enumerate() {
                    if k > 0 {
                        if k == 1 {
                            parts.push(format!("sin({})", channel_names[i]));
                        } else {
                            parts.push(format!("sin({}{})", k, channel_names[i]));
                        }
                    } else if k < 0 {
                        if k == -1 {
                            parts.push(format!("cos({})", channel_names[i]));
                        } else {
                            parts.push(format!("cos({}{})", -k, channel_names[i]));
                        }
                    }
                }
            }
            TermKind::PdeProduct => {
                let a = self.exponents.first().copied().unwrap_or(0);
                let r = self.exponents.get(1).copied().unwrap_or(0);
                match a {
                    0 => {}
                    1 => parts.push("u".to_string()),
                    _ => parts.push(format!("u^{a}")),
                }
                if r > 0 {
                    parts.push(format!("u_{}", "x".repeat(r as usize)));
                }
            }
        }
        parts.join("*")
    }
}

/// Graded order used throughout: total degree, then number of active
/// variables, then lexicographic with larger leading exponents first.
/// Reproduces the conventional enumeration 1, x, y, x^2, y^2, xy, ...
fn monomial_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db)
        .then_with(|| {
            let na = a.iter().filter(|&&e| e > 0).count();
            let nb = b.iter().filter(|&&e| e > 0).count();
            na.cmp(&nb)
        })
        .then_with(|| b.cmp(a))
}

fn check_size(size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::LibraryTooLarge { size, cap })
    } else {
        Ok(())
    }
}

fn exponent_grid(dim: usize, order: u32) -> Vec<Vec<u32>> {
    let mut tuples = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(tuples.len() * (order as usize + 1));
        for t in &tuples {
            for l in 0..=order {
                let mut t2 = t.clone();
                t2.push(l);
                next.push(t2);
            }
        }
        tuples = next;
    }
    tuples.sort_by(|a, b| monomial_cmp(a, b));
    tuples
}

/// Full polynomial tensor grid: all exponent tuples in {0..q}^m,
/// (1+q)^m descriptors, constant first.
pub fn build_polynomial_library(dim: usize, order: u32) -> Result<Vec<TermDescriptor>> {
    build_polynomial_library_capped(dim, order, DEFAULT_SIZE_CAP)
}

pub fn build_polynomial_library_capped(
    dim: usize,
    order: u32,
    cap: usize,
) -> Result<Vec<TermDescriptor>> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim must be >= 1".into()));
    }
    let size = (order as usize + 1)
        .checked_pow(dim as u32)
        .ok_or(Error::LibraryTooLarge {
            size: usize::MAX,
            cap,
        })?;
    check_size(size, cap)?;
    Ok(exponent_grid(dim, order)
        .into_iter()
        .map(TermDescriptor::monomial)
        .collect())
}

/// Monomials of total degree at most `degree`: C(m + degree, degree)
/// descriptors, constant first. Much smaller than the tensor grid when
/// several variables are involved.
pub fn build_total_degree_library(dim: usize, degree: u32) -> Result<Vec<TermDescriptor>> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim must be >= 1".into()));
    }
    let tuples: Vec<Vec<u32>> = exponent_grid(dim, degree)
        .into_iter()
        .filter(|t| t.iter().sum::<u32>() <= degree)
        .collect();
    check_size(tuples.len(), DEFAULT_SIZE_CAP)?;
    Ok(tuples.into_iter().map(TermDescriptor::monomial).collect())
}

/// Polynomial grid times t^w for w in 0..=v; (1+q)^m * (1+v) descriptors.
/// Ordered with the monomial outer and the time power inner, so v=0
/// reproduces `build_polynomial_library` exactly.
pub fn build_time_augmented_library(
    dim: usize,
    order: u32,
    time_order: u32,
) -> Result<Vec<TermDescriptor>> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim must be >= 1".into()));
    }
    let base = (order as usize + 1)
        .checked_pow(dim as u32)
        .ok_or(Error::LibraryTooLarge {
            size: usize::MAX,
            cap: DEFAULT_SIZE_CAP,
        })?;
    let size = base * (time_order as usize + 1);
    check_size(size, DEFAULT_SIZE_CAP)?;
    let mut out = Vec::with_capacity(size);
    for tuple in exponent_grid(dim, order) {
        for w in 0..=time_order {
            out.push(TermDescriptor::time_monomial(tuple.clone(), w));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FourierConfig {
    pub max_harmonic: u32,
    /// Maximum number of variables sharing a product term.
    pub interaction_depth: usize,
    /// Append first-order monomials after the constant; map discovery
    /// needs these because map functions carry linear parts the
    /// harmonics cannot represent.
    pub include_linear: bool,
    pub cap: usize,
}

impl FourierConfig {
    pub fn new(max_harmonic: u32) -> Self {
        Self {
            max_harmonic,
            interaction_depth: 1,
            include_linear: false,
            cap: DEFAULT_SIZE_CAP,
        }
    }

    pub fn with_linear(mut self) -> Self {
        self.include_linear = true;
        self
    }

    pub fn depth(mut self, d: usize) -> Self {
        self.interaction_depth = d;
        self
    }
}

/// Fourier product library: constant, sin(k x_i)/cos(k x_i) for k up to
/// the max harmonic, and cross-variable products up to the configured
/// interaction depth. Deterministic order: constant, optional linear
/// monomials, then products grouped by depth, variable subset, harmonic
/// tuple, with sin before cos per variable.
pub fn build_fourier_library(dim: usize, max_harmonic: u32) -> Result<Vec<TermDescriptor>> {
    build_fourier_library_with(dim, &FourierConfig::new(max_harmonic))
}

pub fn build_fourier_library_with(
    dim: usize,
    cfg: &FourierConfig,
) -> Result<Vec<TermDescriptor>> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim must be >= 1".into()));
    }
    if cfg.max_harmonic == 0 {
        return Err(Error::InvalidDimension("max_harmonic must be >= 1".into()));
    }
    let mut out = vec![TermDescriptor::fourier(dim, vec![])];
    if cfg.include_linear {
        for i in 0..dim {
            let mut exps = vec![0u32; dim];
            exps[i] = 1;
            out.push(TermDescriptor::monomial(exps));
        }
    }
    let depth = cfg.interaction_depth.max(1).min(dim);
    for d in 1..=depth {
        for subset in subsets_of_size(dim, d) {
            // harmonic/phase assignment per variable in the subset:
            // k in 1..=h, sin (positive) before cos (negative)
            let mut assignments: Vec<Vec<(usize, i32)>> = vec![Vec::new()];
            for &var in &subset {
                let mut next = Vec::new();
                for a in &assignments {
                    for k in 1..=cfg.max_harmonic as i32 {
                        for idx in [k, -k] {
                            let mut a2 = a.clone();
                            a2.push((var, idx));
                            next.push(a2);
                        }
                    }
                }
                assignments = next;
            }
            for a in assignments {
                out.push(TermDescriptor::fourier(dim, a));
                check_size(out.len(), cfg.cap)?;
            }
        }
    }
    Ok(out)
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), 0usize)];
    while let Some((cur, start)) = stack.pop() {
        if cur.len() == k {
            out.push(cur);
            continue;
        }
        // depth-first in reverse so lexicographic subsets come out first
        for i in (start..n).rev() {
            let mut c = cur.clone();
            c.push(i);
            stack.push((c, i + 1));
        }
    }
    out
}

/// Evaluated library: descriptors plus the M x N projection matrix G.
#[derive(Debug, Clone)]
pub struct BasisLibrary {
    pub descriptors: Vec<TermDescriptor>,
    pub matrix: DMatrix<f64>,
    pub column_norms: Vec<f64>,
    pub normalized: bool,
    /// Columns that were identically zero (norm set to 1 to keep the
    /// matrix finite; the solver will never select them).
    pub zero_columns: Vec<usize>,
}

impl BasisLibrary {
    pub fn n_terms(&self) -> usize {
        self.descriptors.len()
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.nrows()
    }

    /// Maps a coefficient vector in normalized-column coordinates back to
    /// the original units.
    pub fn denormalize(&self, coeffs: &[f64]) -> Vec<f64> {
        if !self.normalized {
            return coeffs.to_vec();
        }
        coeffs
            .iter()
            .zip(&self.column_norms)
            .map(|(c, n)| c / n)
            .collect()
    }
}

/// Evaluates every descriptor on every sample, forming G row by row.
pub fn evaluate_library(
    descriptors: &[TermDescriptor],
    samples: &TimeSeries,
    normalize: bool,
) -> Result<BasisLibrary> {
    let dim = samples.dim();
    for d in descriptors {
        if !d.exponents.is_empty() && d.exponents.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "descriptor dimension {} vs sample dimension {}",
                d.exponents.len(),
                dim
            )));
        }
    }
    let m = samples.len();
    let n = descriptors.len();
    let mut matrix = DMatrix::zeros(m, n);
    let mut x = vec![0.0; dim];
    for i in 0..m {
        for c in 0..dim {
            x[c] = samples.values[(i, c)];
        }
        let t = samples.times[i];
        for (j, d) in descriptors.iter().enumerate() {
            let v = d.eval(&x, t);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("term {j} at sample {i}")));
            }
            matrix[(i, j)] = v;
        }
    }
    let mut column_norms = vec![1.0; n];
    let mut zero_columns = Vec::new();
    if normalize {
        for j in 0..n {
            let norm = matrix.column(j).norm();
            if norm == 0.0 {
                zero_columns.push(j);
                column_norms[j] = 1.0;
            } else {
                column_norms[j] = norm;
                for i in 0..m {
                    matrix[(i, j)] /= norm;
                }
            }
        }
    }
    Ok(BasisLibrary {
        descriptors: descriptors.to_vec(),
        matrix,
        column_norms,
        normalized: normalize,
        zero_columns,
    })
}
