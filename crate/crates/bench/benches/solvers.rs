use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsedyn::solvers::{solve, RegressionProblem};
use sparsedyn::SolverTag;

fn make_problem(m: usize, n: usize, k: usize) -> RegressionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let g = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut truth = vec![0.0; n];
    for j in 0..k {
        truth[j * n / k] = rng.gen_range(0.5..2.0);
    }
    let x = &g * DVector::from_column_slice(&truth);
    RegressionProblem::new(g, x)
        .unwrap()
        .with_lambda(0.01)
        .with_threshold(0.1)
}

fn bench_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    for &(m, n) in &[(200usize, 27usize), (1000, 27), (1000, 64)] {
        let problem = make_problem(m, n, 5);
        for tag in [SolverTag::LassoCd, SolverTag::Omp, SolverTag::Stls] {
            group.bench_with_input(
                BenchmarkId::new(format!("{tag:?}"), format!("{m}x{n}")),
                &problem,
                |b, p| b.iter(|| solve(p, tag).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_solvers);
criterion_main!(benches);
