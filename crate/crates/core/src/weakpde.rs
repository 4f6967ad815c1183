//! Weak-form PDE identification for 1-D fields.
//!
//! Instead of estimating u_t, u_x, ... pointwise, both sides of the
//! candidate PDE are integrated against a smooth compact-support weight
//! over many random space-time boxes. Integration by parts moves every
//! derivative off the data and onto the weight, so only u itself (and
//! its powers) ever touches the lattice. One thresholded regression over
//! the box integrals then selects a minimal model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{TermDescriptor, TermKind};
use crate::error::{Error, Result};
use crate::fields::FieldData;
use crate::model::{ModelDiagnostics, ModelKind, RecoveredModel, RowDiagnostics};
use crate::solvers::{mutual_coherence, solve, RegressionProblem, SolverTag};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// One candidate right-hand-side term u^a * d^r u / dx^r.
///
/// The closure is restricted to shapes whose weak integral needs no
/// data derivatives: pure powers (r = 0), pure derivatives (a = 0), and
/// advection products u^a * u_x, which integrate as powers of u via the
/// chain rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdeTerm {
    pub u_power: u32,
    pub deriv_order: u32,
}

impl PdeTerm {
    pub fn new(u_power: u32, deriv_order: u32) -> Result<Self> {
        if u_power == 0 && deriv_order == 0 {
            return Err(Error::InvalidDimension("term must involve u".into()));
        }
        if deriv_order > 1 && u_power > 0 {
            return Err(Error::InvalidDimension(
                "products with derivatives above u_x cannot be integrated by parts".into(),
            ));
        }
        Ok(PdeTerm {
            u_power,
            deriv_order,
        })
    }

    pub fn label(&self) -> String {
        let u = match self.u_power {
            0 => String::new(),
            1 => "u".into(),
            p => format!("u^{p}"),
        };
        let d = match self.deriv_order {
            0 => String::new(),
            r => format!("u_{}", "x".repeat(r as usize)),
        };
        match (u.is_empty(), d.is_empty()) {
            (false, false) => format!("{u}*{d}"),
            (false, true) => u,
            (true, false) => d,
            (true, true) => unreachable!(),
        }
    }

    fn descriptor(&self) -> TermDescriptor {
        TermDescriptor {
            kind: TermKind::PdeProduct,
            exponents: vec![self.u_power, self.deriv_order],
            time_power: 0,
            fourier_index: Vec::new(),
        }
    }
}

/// Default library: u, u^2, u^3, u_x .. u_xxxx, u*u_x, u^2*u_x.
pub fn default_pde_library() -> Vec<PdeTerm> {
    let mut terms = Vec::new();
    for a in 1..=3 {
        terms.push(PdeTerm::new(a, 0).unwrap());
    }
    for r in 1..=4 {
        terms.push(PdeTerm::new(0, r).unwrap());
    }
    for a in 1..=2 {
        terms.push(PdeTerm::new(a, 1).unwrap());
    }
    terms
}

/// A space-time index box with its weight orders. The separable weight
/// (1 - xi^2)^p_x * (1 - tau^2)^p_t vanishes with all needed derivatives
/// on the box boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrationDomain {
    /// first time index
    pub t0: usize,
    /// first space index
    pub x0: usize,
    /// cells along time (box spans t0 ..= t0+nt)
    pub nt: usize,
    /// cells along space
    pub nx: usize,
    pub p_x: u32,
    pub p_t: u32,
}

impl IntegrationDomain {
    pub fn new(t0: usize, x0: usize, nt: usize, nx: usize, p_x: u32, p_t: u32) -> Result<Self> {
        if nt < 2 || nx < 2 {
            return Err(Error::InvalidDimension("domain needs at least 2 cells".into()));
        }
        Ok(IntegrationDomain {
            t0,
            x0,
            nt,
            nx,
            p_x,
            p_t,
        })
    }

    fn check_fits(&self, data: &FieldData) -> Result<()> {
        if self.t0 + self.nt >= data.nt() || self.x0 + self.nx >= data.nx() {
            return Err(Error::ShapeMismatch(format!(
                "domain ({}..{}, {}..{}) leaves the {}x{} grid",
                self.t0,
                self.t0 + self.nt,
                self.x0,
                self.x0 + self.nx,
                data.nt(),
                data.nx()
            )));
        }
        Ok(())
    }
}

/// Coefficients of the polynomial (1 - s^2)^p, lowest degree first.
fn bump_poly(p: u32) -> Vec<f64> {
    // binomial expansion: sum_k C(p,k) (-1)^k s^(2k)
    let mut coeffs = vec![0.0; 2 * p as usize + 1];
    let mut binom = 1.0f64;
    for k in 0..=p {
        coeffs[2 * k as usize] = if k % 2 == 0 { binom } else { -binom };
        binom = binom * (p - k) as f64 / (k + 1) as f64;
    }
    coeffs
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

fn poly_eval(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// Evaluates d^r/ds^r (1 - s^2)^p on a normalized grid of m+1 points.
fn bump_derivative_samples(p: u32, r: u32, m: usize) -> Vec<f64> {
    let mut poly = bump_poly(p);
    for _ in 0..r {
        poly = poly_derivative(&poly);
    }
    (0..=m)
        .map(|i| poly_eval(&poly, -1.0 + 2.0 * i as f64 / m as f64))
        .collect()
}

/// Trapezoid coefficient: 0.5 at the ends of an axis, 1 inside.
fn trapezoid(i: usize, m: usize) -> f64 {
    if i == 0 || i == m {
        0.5
    } else {
        1.0
    }
}

/// Integral of w * term over the box with every derivative transferred
/// to the weight. Returns an error when the weight cannot absorb the
/// term's derivatives.
pub fn weak_integral(data: &FieldData, domain: &IntegrationDomain, term: &PdeTerm) -> Result<f64> {
    domain.check_fits(data)?;
    if term.deriv_order > 0 && domain.p_x < term.deriv_order {
        return Err(Error::WeightOrderTooLow {
            order: domain.p_x as usize,
            needed: term.deriv_order as usize,
        });
    }
    // effective integrand: factor * bump_x^(r) * bump_t * u^power
    let (factor, r, u_pow) = match (term.u_power, term.deriv_order) {
        (a, 0) => (1.0, 0u32, a),
        (0, r) => (if r % 2 == 0 { 1.0 } else { -1.0 }, r, 1),
        (a, 1) => (-1.0 / (a as f64 + 1.0), 1, a + 1),
        _ => unreachable!("constructor forbids other shapes"),
    };
    let half_x = 0.5 * domain.nx as f64 * data.dx;
    let scale = (1.0 / half_x).powi(r as i32);
    let wx = bump_derivative_samples(domain.p_x, r, domain.nx);
    let wt = bump_derivative_samples(domain.p_t, 0, domain.nt);
    let mut sum = 0.0;
    for it in 0..=domain.nt {
        let mut row = 0.0;
        for ix in 0..=domain.nx {
            let u = data.values[(domain.t0 + it, domain.x0 + ix)];
            row += trapezoid(ix, domain.nx) * wx[ix] * u.powi(u_pow as i32);
        }
        sum += trapezoid(it, domain.nt) * wt[it] * row;
    }
    Ok(factor * scale * sum * data.dx * data.dt)
}

/// Weak integral of u_t: the time derivative moves onto the weight.
pub fn weak_time_integral(data: &FieldData, domain: &IntegrationDomain) -> Result<f64> {
    domain.check_fits(data)?;
    if domain.p_t < 1 {
        return Err(Error::WeightOrderTooLow {
            order: domain.p_t as usize,
            needed: 1,
        });
    }
    let half_t = 0.5 * domain.nt as f64 * data.dt;
    let wx = bump_derivative_samples(domain.p_x, 0, domain.nx);
    let wt = bump_derivative_samples(domain.p_t, 1, domain.nt);
    let mut sum = 0.0;
    for it in 0..=domain.nt {
        let mut row = 0.0;
        for ix in 0..=domain.nx {
            let u = data.values[(domain.t0 + it, domain.x0 + ix)];
            row += trapezoid(ix, domain.nx) * wx[ix] * u;
        }
        sum += trapezoid(it, domain.nt) * wt[it] * row;
    }
    Ok(-(1.0 / half_t) * sum * data.dx * data.dt)
}

/// The stacked weak system q0 = Q c over all sampled domains.
#[derive(Debug, Clone)]
pub struct WeakSystem {
    pub terms: Vec<PdeTerm>,
    pub domains: Vec<IntegrationDomain>,
    pub q0: DVector<f64>,
    pub q: DMatrix<f64>,
    /// Domains whose field patch is constant; their rows are all zero
    /// and carry no information.
    pub degenerate_domains: Vec<usize>,
}

/// Draws `l` distinct random boxes, 16-32 cells per axis, strictly
/// inside the grid.
pub fn sample_domains(
    data: &FieldData,
    l: usize,
    p_x: u32,
    p_t: u32,
    seed: u64,
) -> Result<Vec<IntegrationDomain>> {
    let max_nx = 32.min(data.nx().saturating_sub(2));
    let max_nt = 32.min(data.nt().saturating_sub(2));
    if max_nx < 16 || max_nt < 16 {
        return Err(Error::NotEnoughSamples {
            need: 34,
            have: data.nx().min(data.nt()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<IntegrationDomain> = Vec::with_capacity(l);
    let mut attempts = 0;
    while out.len() < l {
        attempts += 1;
        if attempts > 100 * l {
            return Err(Error::Degenerate(format!(
                "could not place {l} distinct domains"
            )));
        }
        let nx = rng.gen_range(16..=max_nx);
        let nt = rng.gen_range(16..=max_nt);
        let x0 = rng.gen_range(1..data.nx() - nx);
        let t0 = rng.gen_range(1..data.nt() - nt);
        let d = IntegrationDomain::new(t0, x0, nt, nx, p_x, p_t)?;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    Ok(out)
}

/// Fills q0 and Q for the given terms and domains.
pub fn build_weak_system(
    data: &FieldData,
    domains: &[IntegrationDomain],
    terms: &[PdeTerm],
) -> Result<WeakSystem> {
    if domains.len() < terms.len() {
        return Err(Error::NotEnoughSamples {
            need: terms.len(),
            have: domains.len(),
        });
    }
    let l = domains.len();
    let mut q0 = DVector::zeros(l);
    let mut q = DMatrix::zeros(l, terms.len());
    let mut degenerate = Vec::new();
    for (row, d) in domains.iter().enumerate() {
        let first = data.values[(d.t0, d.x0)];
        let mut constant = true;
        'scan: for it in 0..=d.nt {
            for ix in 0..=d.nx {
                if (data.values[(d.t0 + it, d.x0 + ix)] - first).abs() > 1e-14 {
                    constant = false;
                    break 'scan;
                }
            }
        }
        if constant {
            degenerate.push(row);
        }
        q0[row] = weak_time_integral(data, d)?;
        for (col, term) in terms.iter().enumerate() {
            q[(row, col)] = weak_integral(data, d, term)?;
        }
    }
    Ok(WeakSystem {
        terms: terms.to_vec(),
        domains: domains.to_vec(),
        q0,
        q,
        degenerate_domains: degenerate,
    })
}

/// Configuration for [`identify_pde`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdeConfig {
    pub solver: SolverTag,
    pub lambda: f64,
    /// Relative hard threshold for term survival.
    pub threshold: f64,
    /// Number of domains; 0 means 4 * library size.
    pub domains: usize,
    pub seed: u64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            solver: SolverTag::Stls,
            lambda: 0.0,
            // calibrated so heat-equation data keeps exactly u_xx while
            // KS keeps its three equal-magnitude terms
            threshold: 0.05,
            domains: 0,
            seed: 0,
        }
    }
}

/// Recovers a minimal PDE u_t = sum c_i f_i(u) from field data.
pub fn identify_pde(
    data: &FieldData,
    terms: &[PdeTerm],
    config: &PdeConfig,
) -> Result<RecoveredModel> {
    if terms.is_empty() {
        return Err(Error::InvalidDimension("empty term library".into()));
    }
    let max_deriv = terms.iter().map(|t| t.deriv_order).max().unwrap_or(0);
    let p_x = max_deriv + 2;
    let p_t = 3;
    let l = if config.domains == 0 {
        4 * terms.len()
    } else {
        config.domains
    };
    let domains = sample_domains(data, l, p_x, p_t, config.seed)?;
    let system = build_weak_system(data, &domains, terms)?;

    let mut q = system.q.clone();
    let rows = q.nrows();
    let mut scales = vec![1.0; terms.len()];
    for c in 0..terms.len() {
        let norm = q.column(c).norm();
        if norm > 0.0 {
            scales[c] = norm;
            for r in 0..rows {
                q[(r, c)] /= norm;
            }
        }
    }
    let q0_norm = system.q0.norm();
    if q0_norm == 0.0 {
        // zero field: nothing to explain, empty model
        let diagnostics = ModelDiagnostics {
            solver_tag: config.solver,
            rows_used: rows,
            coherence: 0.0,
            per_row: vec![RowDiagnostics {
                residual_norm: 0.0,
                sparsity: 0,
                iterations: 0,
                converged: true,
            }],
            dense_rows: Vec::new(),
            not_sparse: false,
        };
        return Ok(RecoveredModel {
            kind: ModelKind::Pde,
            dim: 1,
            channel_names: vec!["u".into()],
            library: terms.iter().map(|t| t.descriptor()).collect(),
            coefficient_rows: vec![vec![0.0; terms.len()]],
            diagnostics,
            window: None,
        });
    }

    let problem = RegressionProblem::new(q.clone(), system.q0.clone())?
        .with_lambda(config.lambda)
        .with_threshold(config.threshold)
        .with_column_scales(scales.clone());
    let solution = solve(&problem, config.solver)?;
    let coeffs: Vec<f64> = solution
        .coefficients
        .iter()
        .zip(&scales)
        .map(|(c, s)| c / s)
        .collect();
    if coeffs.iter().all(|&c| c == 0.0) {
        return Err(Error::Degenerate(
            "threshold removed every candidate term".into(),
        ));
    }

    let diagnostics = ModelDiagnostics {
        solver_tag: config.solver,
        rows_used: rows,
        coherence: mutual_coherence(&q),
        per_row: vec![RowDiagnostics {
            residual_norm: solution.residual_norm / q0_norm,
            sparsity: solution.sparsity,
            iterations: solution.iterations,
            converged: solution.converged,
        }],
        dense_rows: Vec::new(),
        not_sparse: false,
    };
    Ok(RecoveredModel {
        kind: ModelKind::Pde,
        dim: 1,
        channel_names: vec!["u".into()],
        library: terms.iter().map(|t| t.descriptor()).collect(),
        coefficient_rows: vec![coeffs],
        diagnostics,
        window: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::ks::{simulate_heat, simulate_ks, HeatSpec, KsSpec};

    fn sine_field(nx: usize, nt: usize) -> FieldData {
        let dx = 2.0 * std::f64::consts::PI / nx as f64;
        let dt = 0.01;
        let values = DMatrix::from_fn(nt, nx, |i, j| {
            ((j as f64) * dx).sin() * (-(i as f64) * dt).exp()
        });
        FieldData::new(0.0, 0.0, dx, dt, values, true).unwrap()
    }

    #[test]
    fn integration_by_parts_identity() {
        // int w u_x = -int w_x u for smooth u and vanishing boundary w
        let data = sine_field(128, 64);
        let d = IntegrationDomain::new(10, 20, 30, 40, 6, 3).unwrap();
        let weak = weak_integral(&data, &d, &PdeTerm::new(0, 1).unwrap()).unwrap();
        // direct quadrature of w * u_x with spectral-accuracy u_x = cos
        let wx = bump_derivative_samples(6, 0, d.nx);
        let wt = bump_derivative_samples(3, 0, d.nt);
        let mut direct = 0.0;
        for it in 0..=d.nt {
            for ix in 0..=d.nx {
                let x = (d.x0 + ix) as f64 * data.dx;
                let t = (d.t0 + it) as f64 * data.dt;
                let ux = x.cos() * (-t).exp();
                direct += trapezoid(ix, d.nx) * trapezoid(it, d.nt) * wx[ix] * wt[it] * ux;
            }
        }
        direct *= data.dx * data.dt;
        assert!(
            (weak - direct).abs() < 1e-4 * direct.abs().max(1.0),
            "weak {weak} vs direct {direct}"
        );
    }

    #[test]
    fn u_xx_matches_analytic_integral() {
        let data = sine_field(128, 64);
        let d = IntegrationDomain::new(5, 30, 40, 50, 6, 3).unwrap();
        let weak = weak_integral(&data, &d, &PdeTerm::new(0, 2).unwrap()).unwrap();
        // u_xx = -sin(x) e^-t: direct quadrature oracle
        let wx = bump_derivative_samples(6, 0, d.nx);
        let wt = bump_derivative_samples(3, 0, d.nt);
        let mut direct = 0.0;
        for it in 0..=d.nt {
            for ix in 0..=d.nx {
                let x = (d.x0 + ix) as f64 * data.dx;
                let t = (d.t0 + it) as f64 * data.dt;
                direct -= trapezoid(ix, d.nx) * trapezoid(it, d.nt) * wx[ix] * wt[it]
                    * x.sin() * (-t).exp();
            }
        }
        direct *= data.dx * data.dt;
        assert!(
            (weak - direct).abs() < 1e-4 * direct.abs().max(1.0),
            "weak {weak} vs direct {direct}"
        );
    }

    #[test]
    fn constant_field_factors_out() {
        let values = DMatrix::from_element(64, 64, 2.5);
        let data = FieldData::new(0.0, 0.0, 0.1, 0.01, values, false).unwrap();
        let d = IntegrationDomain::new(4, 4, 40, 40, 6, 3).unwrap();
        let u_int = weak_integral(&data, &d, &PdeTerm::new(1, 0).unwrap()).unwrap();
        // int w dOmega computed with u = 1
        let ones = DMatrix::from_element(64, 64, 1.0);
        let unit = FieldData::new(0.0, 0.0, 0.1, 0.01, ones, false).unwrap();
        let w_int = weak_integral(&unit, &d, &PdeTerm::new(1, 0).unwrap()).unwrap();
        assert!((u_int - 2.5 * w_int).abs() < 1e-12);
    }

    #[test]
    fn weight_too_low_is_rejected() {
        let data = sine_field(64, 64);
        let d = IntegrationDomain::new(4, 4, 20, 20, 2, 3).unwrap();
        let err = weak_integral(&data, &d, &PdeTerm::new(0, 4).unwrap());
        assert!(matches!(err, Err(Error::WeightOrderTooLow { .. })));
    }

    #[test]
    fn heat_solution_satisfies_weak_system() {
        // exact solution u = sin(x) e^-t of u_t = u_xx
        let data = sine_field(128, 128);
        let domains = sample_domains(&data, 30, 6, 3, 1).unwrap();
        let terms = default_pde_library();
        let sys = build_weak_system(&data, &domains, &terms).unwrap();
        let uxx_col = terms.iter().position(|t| *t == PdeTerm::new(0, 2).unwrap()).unwrap();
        let residual = (&sys.q0 - sys.q.column(uxx_col)).norm() / sys.q0.norm();
        assert!(residual < 1e-3, "relative residual {residual}");
    }

    #[test]
    fn zero_field_gives_zero_system() {
        let values = DMatrix::zeros(64, 64);
        let data = FieldData::new(0.0, 0.0, 0.1, 0.01, values, false).unwrap();
        let domains = sample_domains(&data, 12, 6, 3, 0).unwrap();
        let sys = build_weak_system(&data, &domains, &default_pde_library()).unwrap();
        assert_eq!(sys.q0.norm(), 0.0);
        assert_eq!(sys.q.norm(), 0.0);
        assert_eq!(sys.degenerate_domains.len(), 12);
    }

    #[test]
    fn sampled_domains_are_distinct() {
        let data = sine_field(128, 128);
        let domains = sample_domains(&data, 40, 6, 3, 7).unwrap();
        for i in 0..domains.len() {
            for j in (i + 1)..domains.len() {
                assert_ne!(domains[i], domains[j]);
            }
        }
    }

    #[test]
    fn heat_equation_identified() {
        let spec = HeatSpec {
            diffusivity: 0.7,
            nx: 128,
            domain: 2.0 * std::f64::consts::PI,
            dt: 0.01,
            samples: 400,
            seed: 3,
        };
        let data = simulate_heat(&spec).unwrap();
        let terms = default_pde_library();
        let model = identify_pde(&data, &terms, &PdeConfig::default()).unwrap();
        let support = model.support(0);
        let uxx_col = terms.iter().position(|t| *t == PdeTerm::new(0, 2).unwrap()).unwrap();
        assert_eq!(support, vec![uxx_col], "support {support:?}");
        let c = model.coefficient_rows[0][uxx_col];
        assert!((c - 0.7).abs() / 0.7 < 0.05, "diffusivity {c}");
    }

    #[test]
    fn ks_equation_identified() {
        let spec = KsSpec::default();
        let data = simulate_ks(&spec).unwrap();
        let terms = default_pde_library();
        let model = identify_pde(&data, &terms, &PdeConfig::default()).unwrap();
        let expect = [
            (PdeTerm::new(1, 1).unwrap(), -1.0),
            (PdeTerm::new(0, 2).unwrap(), -1.0),
            (PdeTerm::new(0, 4).unwrap(), -1.0),
        ];
        let support = model.support(0);
        assert_eq!(support.len(), 3, "support {support:?}");
        for (term, truth) in expect {
            let col = terms.iter().position(|t| *t == term).unwrap();
            let c = model.coefficient_rows[0][col];
            assert!(
                ((c - truth) / truth).abs() < 0.1,
                "{}: {c} vs {truth}",
                term.label()
            );
        }
    }

    #[test]
    fn identification_is_deterministic() {
        let data = sine_field(128, 128);
        let terms = default_pde_library();
        let a = identify_pde(&data, &terms, &PdeConfig::default()).unwrap();
        let b = identify_pde(&data, &terms, &PdeConfig::default()).unwrap();
        assert_eq!(a.coefficient_rows, b.coefficient_rows);
    }
}
