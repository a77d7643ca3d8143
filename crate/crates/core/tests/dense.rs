mod common;

use common::*;
use ibmi_core::dense::{
    cholesky, cholesky_with_block_size, condition_number_2, gather, gemm, io, ldlt, matmul,
    matmul_op, scatter, spd_inverse, two_norm, Op, ScatterMode,
};
use ibmi_core::{DenseMatrix, Error};
use proptest::prelude::*;

fn spd_strategy(max_p: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_p, any::<u64>()).prop_map(|(p, seed)| random_spd(&mut rng(seed), p))
}

#[test]
fn jacobi_oracle_sanity() {
    let a = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
    let ev = jacobi_eigenvalues(&a);
    assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    let inv = gauss_jordan_inverse(&a);
    assert!(max_abs_diff(&naive_matmul(&a, &inv), &DenseMatrix::identity(2)) < 1e-15);
}

#[test]
fn matmul_shapes_checked() {
    let a = DenseMatrix::zeros(2, 3);
    assert!(matches!(matmul(&a, &a), Err(Error::DimensionMismatch { .. })));
    let mut c = DenseMatrix::zeros(2, 2);
    assert!(gemm(1.0, &a, Op::NoTrans, &a, Op::NoTrans, 0.0, &mut c).is_err());
}

#[test]
fn cholesky_rejects_indefinite_and_asymmetric() {
    let indefinite = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
    assert!(matches!(cholesky(&indefinite), Err(Error::NotPositiveDefinite(1))));
    let asym = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]).unwrap();
    assert!(matches!(cholesky(&asym), Err(Error::NotSymmetric { .. })));
}

#[test]
fn condition_number_of_diagonal() {
    let c = condition_number_2(&DenseMatrix::from_diag(&[1.0, 4.0, 10.0])).unwrap();
    assert!((c.value - 10.0).abs() < 1e-6, "{c:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gemm_matches_naive(
        m in 1usize..40, k in 1usize..40, n in 1usize..40,
        ta in any::<bool>(), tb in any::<bool>(), seed in any::<u64>(),
        alpha in -2.0f64..2.0, beta in -2.0f64..2.0,
    ) {
        let mut r = rng(seed);
        let a = if ta { random_matrix(&mut r, k, m) } else { random_matrix(&mut r, m, k) };
        let b = if tb { random_matrix(&mut r, n, k) } else { random_matrix(&mut r, k, n) };
        let c0 = random_matrix(&mut r, m, n);
        let oa = if ta { a.transpose() } else { a.clone() };
        let ob = if tb { b.transpose() } else { b.clone() };
        let mut want = naive_matmul(&oa, &ob);
        want.scale(alpha);
        want.axpy(beta, &c0).unwrap();

        let mut c = c0.clone();
        let op = |t| if t { Op::Trans } else { Op::NoTrans };
        gemm(alpha, &a, op(ta), &b, op(tb), beta, &mut c).unwrap();
        prop_assert!(max_abs_diff(&c, &want) <= 1e-12 * (k as f64));
        let prod = matmul_op(&a, op(ta), &b, op(tb)).unwrap();
        prop_assert!(max_abs_diff(&prod, &naive_matmul(&oa, &ob)) <= 1e-12 * (k as f64));
    }

    #[test]
    fn cholesky_round_trip(a in spd_strategy(80), bs in 1usize..96) {
        let f = cholesky_with_block_size(&a, bs).unwrap();
        let l = f.l();
        for i in 0..l.rows() {
            for j in i + 1..l.cols() {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
        let llt = naive_matmul(l, &l.transpose());
        prop_assert!(max_abs_diff(&llt, &a) <= 1e-10 * a.max_abs());
    }

    #[test]
    fn spd_inverse_matches_gauss_jordan(a in spd_strategy(64)) {
        let inv = spd_inverse(&a).unwrap();
        let gj = gauss_jordan_inverse(&a);
        prop_assert!(max_abs_diff(&inv, &gj) <= 1e-8);
        prop_assert!(inv.is_symmetric(0.0));
    }

    #[test]
    fn chol_solve_residual(a in spd_strategy(48), nrhs in 1usize..6, seed in any::<u64>()) {
        let b = random_matrix(&mut rng(seed), a.rows(), nrhs);
        let x = cholesky(&a).unwrap().solve(&b).unwrap();
        let res = naive_matmul(&a, &x).sub(&b).unwrap();
        prop_assert!(res.max_abs() <= 1e-10 * a.max_abs().max(1.0));
    }

    #[test]
    fn ldlt_reconstructs(a in spd_strategy(40)) {
        let f = ldlt(&a).unwrap();
        prop_assert!(max_abs_diff(&f.reconstruct(), &a) <= 1e-10 * a.max_abs());
        for i in 0..f.dim() {
            prop_assert_eq!(f.l[(i, i)], 1.0);
            prop_assert!(f.d[i] > 0.0);
        }
    }

    #[test]
    fn two_norm_agrees_with_oracle(rows in 1usize..24, cols in 1usize..24, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, rows, cols);
        let est = two_norm(&a);
        prop_assert!(est.converged);
        let exact = oracle_two_norm(&a);
        prop_assert!((est.value - exact).abs() <= 1e-6 * exact.max(1e-300));
        // Any unit probe vector gives a lower bound.
        for _ in 0..5 {
            let v = random_matrix(&mut r, cols, 1);
            let nv = v.frobenius_norm();
            if nv > 0.0 {
                let av = naive_matmul(&a, &v).frobenius_norm() / nv;
                prop_assert!(av <= est.value * (1.0 + 1e-8));
            }
        }
    }

    #[test]
    fn condition_number_agrees_with_oracle(a in spd_strategy(24)) {
        let est = condition_number_2(&a).unwrap();
        let ev = jacobi_eigenvalues(&a);
        let exact = ev[ev.len() - 1] / ev[0];
        // Rayleigh quotients approach λmax from below and λmin from above.
        // These spectra are tightly clustered at the bottom, so only the
        // one-sided bound is sharp here.
        prop_assert!(est.value <= exact * (1.0 + 1e-12));
    }

    #[test]
    fn condition_number_on_known_spectrum(n in 2usize..24, decades in 0.5f64..6.0, seed in any::<u64>()) {
        let q = random_orthogonal(&mut rng(seed), n);
        let lambda: Vec<f64> = (0..n)
            .map(|i| 10f64.powf(decades * i as f64 / (n - 1) as f64))
            .collect();
        let mut a = naive_matmul(&naive_matmul(&q, &DenseMatrix::from_diag(&lambda)), &q.transpose());
        a.symmetrize();
        let est = condition_number_2(&a).unwrap();
        let exact = lambda[n - 1] / lambda[0];
        prop_assert!(est.converged);
        prop_assert!((est.value - exact).abs() <= 1e-6 * exact, "{} vs {}", est.value, exact);
    }

    #[test]
    fn gather_scatter_round_trip(
        p in 2usize..30, seed in any::<u64>(),
        rows in proptest::sample::subsequence((0..30).collect::<Vec<_>>(), 1..10),
        cols in proptest::sample::subsequence((0..30).collect::<Vec<_>>(), 1..10),
    ) {
        let rows: Vec<usize> = rows.into_iter().filter(|&i| i < p).collect();
        let cols: Vec<usize> = cols.into_iter().filter(|&i| i < p).collect();
        prop_assume!(!rows.is_empty() && !cols.is_empty());
        let a = random_matrix(&mut rng(seed), p, p);
        let g = gather(&a, &rows, &cols).unwrap();
        prop_assert_eq!(&g, &block(&a, &rows, &cols));

        let mut t = a.clone();
        scatter(&mut t, &rows, &cols, &g, ScatterMode::Assign).unwrap();
        prop_assert_eq!(&t, &a);
        scatter(&mut t, &rows, &cols, &g, ScatterMode::Add).unwrap();
        let doubled = gather(&t, &rows, &cols).unwrap();
        prop_assert_eq!(doubled, g.scaled(2.0));
    }

    #[test]
    fn binary_and_csv_round_trip(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let mut a = random_matrix(&mut rng(seed), rows, cols);
        a[(0, 0)] = 1.0 / 3.0;
        let mut buf = Vec::new();
        io::write_ibmi(&mut buf, &a).unwrap();
        prop_assert_eq!(io::read_ibmi(buf.as_slice()).unwrap(), a.clone());
        let mut csv = Vec::new();
        io::write_csv(&mut csv, &a).unwrap();
        prop_assert_eq!(io::read_csv(csv.as_slice()).unwrap(), a);
    }
}

#[test]
fn gather_rejects_out_of_range() {
    let a = DenseMatrix::identity(3);
    assert!(matches!(
        gather(&a, &[0, 3], &[1]),
        Err(Error::IndexOutOfRange { index: 3, bound: 3 })
    ));
}

#[test]
fn binary_reader_rejects_garbage() {
    assert!(io::read_ibmi(&b"not a matrix"[..]).is_err());
    let mut buf = Vec::new();
    io::write_ibmi(&mut buf, &DenseMatrix::identity(2)).unwrap();
    buf.truncate(buf.len() - 3);
    assert!(io::read_ibmi(buf.as_slice()).is_err());
}

