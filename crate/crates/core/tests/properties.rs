//! Randomized invariants for the sparse solvers.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sparsedyn::solvers::{solve, solve_lasso_cd, solve_omp, solve_stls, RegressionProblem};
use sparsedyn::SolverTag;

/// Deterministic pseudo-random matrix from a seed; entries in [-1, 1].
/// Proptest drives the seed so shrinking stays meaningful.
fn test_matrix(seed: u64, m: usize, n: usize) -> DMatrix<f64> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        // splitmix64
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z as f64 / u64::MAX as f64) * 2.0 - 1.0
    };
    DMatrix::from_fn(m, n, |_, _| next())
}

/// Sparse ground truth: `k` coefficients with magnitude in [0.5, 2.5].
fn sparse_truth(seed: u64, n: usize, k: usize) -> Vec<f64> {
    let mut coeffs = vec![0.0; n];
    let mut state = seed ^ 0xdeadbeef;
    for i in 0..k {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let j = (state >> 33) as usize % n;
        let mag = 0.5 + 2.0 * ((state & 0xffff) as f64 / 65535.0);
        let sign = if state & 0x10000 == 0 { 1.0 } else { -1.0 };
        coeffs[(j + i) % n] = sign * mag;
    }
    coeffs
}

fn noiseless_problem(seed: u64, m: usize, n: usize, k: usize) -> (RegressionProblem, Vec<f64>) {
    let g = test_matrix(seed, m, n);
    let truth = sparse_truth(seed, n, k);
    let x = &g * DVector::from_column_slice(&truth);
    (RegressionProblem::new(g, x).unwrap(), truth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// With no hard threshold the lasso output is a stationary point of
    /// (1/2M)||Ga - x||^2 + lambda ||a||_1: active coordinates sit on the
    /// subgradient boundary, inactive ones inside it.
    #[test]
    fn lasso_satisfies_kkt(seed in 0u64..10_000, lam in 0.01f64..0.3) {
        let (problem, _) = noiseless_problem(seed, 50, 8, 3);
        // threshold 0 keeps the raw stationary point (no debias refit)
        let problem = problem.with_lambda(lam).with_threshold(0.0);
        let sol = solve_lasso_cd(&problem).unwrap();
        prop_assume!(sol.converged);
        let a = DVector::from_column_slice(&sol.coefficients);
        let r = &problem.target - &problem.matrix * a;
        let m = problem.matrix.nrows() as f64;
        for j in 0..8 {
            let grad = problem.matrix.column(j).dot(&r) / m;
            if sol.coefficients[j] != 0.0 {
                prop_assert!((grad - lam * sol.coefficients[j].signum()).abs() < 1e-6,
                    "active coord {j}: grad {grad}, lambda {lam}");
            } else {
                prop_assert!(grad.abs() <= lam + 1e-6,
                    "inactive coord {j}: |grad| {} > lambda {lam}", grad.abs());
            }
        }
    }

    /// Growing the OMP support cap never increases the residual.
    #[test]
    fn omp_residual_monotone_in_support(seed in 0u64..10_000, k in 1usize..5) {
        let (problem, _) = noiseless_problem(seed, 40, 10, 4);
        let lo = solve_omp(&problem.clone().with_max_support(k)).unwrap();
        let hi = solve_omp(&problem.with_max_support(k + 1)).unwrap();
        prop_assert!(hi.residual_norm <= lo.residual_norm + 1e-9);
    }

    /// Scaling the target scales the OMP solution; the support is untouched.
    #[test]
    fn omp_is_scale_invariant(seed in 0u64..10_000, c in 0.1f64..50.0) {
        let (problem, _) = noiseless_problem(seed, 40, 10, 3);
        let scaled = RegressionProblem::new(
            problem.matrix.clone(),
            &problem.target * c,
        ).unwrap();
        let base = solve_omp(&problem).unwrap();
        let s = solve_omp(&scaled).unwrap();
        prop_assert_eq!(&base.support, &s.support);
        for j in 0..10 {
            prop_assert!((s.coefficients[j] - c * base.coefficients[j]).abs()
                < 1e-8 * c.max(1.0));
        }
    }

    /// On a noiseless well-conditioned sparse problem all three solvers
    /// land on the same support and coefficients.
    #[test]
    fn solvers_agree_when_well_posed(seed in 0u64..10_000) {
        let (problem, truth) = noiseless_problem(seed, 80, 8, 3);
        let problem = problem.with_threshold(0.1);
        let expected: Vec<usize> = truth.iter().enumerate()
            .filter(|(_, &c)| c != 0.0).map(|(j, _)| j).collect();
        prop_assume!(!expected.is_empty());
        for tag in [SolverTag::LassoCd, SolverTag::Omp, SolverTag::Stls] {
            let sol = solve(&problem.clone().with_lambda(0.01), tag).unwrap();
            prop_assert_eq!(&sol.support, &expected, "solver {:?}", tag);
            for (j, &t) in truth.iter().enumerate() {
                prop_assert!((sol.coefficients[j] - t).abs() < 1e-3,
                    "solver {:?} coord {j}: {} vs {t}", tag, sol.coefficients[j]);
            }
        }
    }

    /// Column-normalizing the design and passing the norms as scales
    /// reproduces the unnormalized coefficients through `effective`.
    #[test]
    fn normalization_round_trips(seed in 0u64..10_000) {
        let (problem, _) = noiseless_problem(seed, 40, 8, 3);
        let direct = solve_stls(&problem).unwrap();
        let norms: Vec<f64> = (0..8).map(|j| problem.matrix.column(j).norm()).collect();
        prop_assume!(norms.iter().all(|&v| v > 1e-12));
        let mut gn = problem.matrix.clone();
        for j in 0..8 {
            gn.column_mut(j).scale_mut(1.0 / norms[j]);
        }
        let scaled = RegressionProblem::new(gn, problem.target.clone())
            .unwrap()
            .with_column_scales(norms);
        let sol = solve_stls(&scaled).unwrap();
        let eff = scaled.effective(&sol.coefficients);
        for j in 0..8 {
            prop_assert!((eff[j] - direct.coefficients[j]).abs() < 1e-8);
        }
    }

    /// Permuting the columns permutes the STLS solution.
    #[test]
    fn stls_is_permutation_equivariant(seed in 0u64..10_000, rot in 1usize..7) {
        let (problem, _) = noiseless_problem(seed, 60, 8, 3);
        let problem = problem.with_threshold(0.1);
        let base = solve_stls(&problem).unwrap();
        // cyclic shift: column j of the permuted matrix is column (j+rot)%n
        let perm: Vec<usize> = (0..8).map(|j| (j + rot) % 8).collect();
        let gp = problem.matrix.select_columns(perm.iter());
        let permuted = RegressionProblem::new(gp, problem.target.clone())
            .unwrap()
            .with_threshold(0.1);
        let sol = solve_stls(&permuted).unwrap();
        for (jp, &j) in perm.iter().enumerate() {
            prop_assert!((sol.coefficients[jp] - base.coefficients[j]).abs() < 1e-9);
        }
    }

    /// The hard threshold is a filter on one fixed coefficient vector, so
    /// raising it can only shrink the lasso support.
    #[test]
    fn lasso_support_shrinks_with_threshold(
        seed in 0u64..10_000,
        t_lo in 0.01f64..0.2,
        gap in 0.05f64..0.5,
    ) {
        let (problem, _) = noiseless_problem(seed, 50, 10, 4);
        let problem = problem.with_lambda(0.01);
        let lo = solve_lasso_cd(&problem.clone().with_threshold(t_lo)).unwrap();
        let hi = solve_lasso_cd(&problem.with_threshold(t_lo + gap)).unwrap();
        for j in &hi.support {
            prop_assert!(lo.support.contains(j),
                "coord {j} survives threshold {} but not {}", t_lo + gap, t_lo);
        }
    }
}
