//! Row-parallel kernels and batch solves against their sequential forms.
//!
//! Build with `--no-default-features` to see the fallback; then both sides
//! of each pair run on one thread.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use monotone_core::gallery::build_mmatrix;
use monotone_core::monotone::{InitialGuess, MonotoneSolver};
use monotone_core::{par, ContinuationSchedule, LinearSolveOptions, SparseMatrix};

fn laplacian(side: usize) -> SparseMatrix {
    let n = side * side;
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..side {
        for j in 0..side {
            let k = i * side + j;
            t.push((k, k, 4.0));
            if i > 0 {
                t.push((k, k - side, -1.0));
            }
            if i + 1 < side {
                t.push((k, k + side, -1.0));
            }
            if j > 0 {
                t.push((k, k - 1, -1.0));
            }
            if j + 1 < side {
                t.push((k, k + 1, -1.0));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, t).unwrap()
}

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("matvec");
    for side in [128, 512] {
        let m = laplacian(side);
        let x: Vec<f64> = (0..m.cols()).map(|i| (i as f64).sin()).collect();
        g.bench_with_input(BenchmarkId::new("parallel", side), &m, |b, m| {
            b.iter(|| m.mul_vec(black_box(&x)))
        });
        g.bench_with_input(BenchmarkId::new("sequential", side), &m, |b, m| {
            b.iter(|| m.mul_vec_seq(black_box(&x)))
        });
    }
    g.finish();
}

fn batch_solve(c: &mut Criterion) {
    let lambdas: Vec<f64> = (1..=8).map(|k| 0.02 * k as f64).collect();
    let sched = ContinuationSchedule::default()
        .with_range(0.1, 1e-6)
        .with_tolerance(1e-3);
    let lin = LinearSolveOptions::default();
    let solve = |&lambda: &f64| {
        let p = build_mmatrix(24, lambda, 0.5).unwrap();
        let s = MonotoneSolver::new(&p, &lin).unwrap();
        let x0 = s.start(&p, &InitialGuess::LeastSquares).unwrap();
        s.solve(&p, &x0, &sched).unwrap().final_j()
    };
    let mut g = c.benchmark_group("lambda_batch");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| par::map(black_box(&lambdas), solve)));
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(&lambdas).iter().map(solve).collect::<Vec<_>>())
    });
    g.finish();
}

criterion_group!(benches, matvec, batch_solve);
criterion_main!(benches);
