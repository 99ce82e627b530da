mod common;

use faer::Mat;
use proptest::prelude::*;

use common::*;
use tmor::eigensolve::{sym_gen_eig, Metric};

fn residual(k: &Mat<f64>, m: &Mat<f64>, lambda: f64, x: faer::ColRef<'_, f64>) -> f64 {
    let x = x.to_owned();
    let r = k * &x - (m * &x) * lambda;
    let norm = |a: &Mat<f64>| frobenius(a);
    let xn = x.norm_l2();
    r.norm_l2() / ((norm(k) + lambda.abs() * norm(m)) * xn)
}

#[test]
fn random_spd_pencils_match_jacobi_oracle() {
    for (seed, n) in [(1u64, 5usize), (2, 12), (3, 30)] {
        let mut r = rng(seed);
        let k = random_spd(&mut r, n, 0.1);
        let m = random_spd(&mut r, n, 1.0);
        let (want, _) = gen_eigen_oracle(&k, &m);
        let got = sym_gen_eig(k.as_ref(), m.as_ref(), n, Metric::Other).unwrap();
        for (g, w) in got.eigenvalues.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-10 * w.abs(), "n = {n}: {g} vs {w}");
        }
        let gram = got.vectors.transpose() * &m * &got.vectors;
        assert!(max_dev_from_identity(&gram) <= 1e-10);
        for i in 0..n {
            let res = residual(&k, &m, got.eigenvalues[i], got.vectors.col(i));
            assert!(res <= 1e-9, "pair {i}: residual {res:e}");
        }
    }
}

#[test]
fn eigenvectors_agree_with_oracle_up_to_sign() {
    let mut r = rng(7);
    let n = 10;
    let k = random_spd(&mut r, n, 0.1);
    let m = random_spd(&mut r, n, 1.0);
    let (_, want) = gen_eigen_oracle(&k, &m);
    let got = sym_gen_eig(k.as_ref(), m.as_ref(), n, Metric::Other).unwrap();
    for j in 0..n {
        let dot: f64 = (0..n).map(|i| got.vectors[(i, j)] * want[(i, j)]).sum();
        let s = dot.signum();
        for i in 0..n {
            assert!((got.vectors[(i, j)] - s * want[(i, j)]).abs() < 1e-8);
        }
    }
}

#[test]
fn largest_entry_of_each_vector_is_positive() {
    let mut r = rng(11);
    let n = 15;
    let k = random_spd(&mut r, n, 0.1);
    let m = random_spd(&mut r, n, 1.0);
    let got = sym_gen_eig(k.as_ref(), m.as_ref(), 6, Metric::Other).unwrap();
    for j in 0..6 {
        let col = got.vectors.col(j);
        let big = (0..n).map(|i| col[i].abs()).fold(0.0, f64::max);
        let first = (0..n).find(|&i| col[i].abs() >= big * (1.0 - 1e-6)).unwrap();
        assert!(col[first] > 0.0);
    }
}

#[test]
fn plate_structural_modes_match_oracle() {
    let p = plate(0.042, 0.14, 0.001, 4, 2);
    let k = dense(&p.model.stiffness);
    let m = dense(&p.model.mass);
    let (want, _) = gen_eigen_oracle(&k, &m);
    let got = sym_gen_eig(k.as_ref(), m.as_ref(), k.nrows(), Metric::Mass).unwrap();
    for (g, w) in got.eigenvalues.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-10 * w.abs(), "{g} vs {w}");
    }
}

#[test]
fn rejects_indefinite_metric_and_bad_counts() {
    let k = Mat::<f64>::identity(3, 3);
    let mut m = Mat::<f64>::identity(3, 3);
    m[(1, 1)] = -1.0;
    assert!(sym_gen_eig(k.as_ref(), m.as_ref(), 2, Metric::Other).is_err());
    let m = Mat::<f64>::identity(3, 3);
    assert!(sym_gen_eig(k.as_ref(), m.as_ref(), 0, Metric::Other).is_err());
    assert!(sym_gen_eig(k.as_ref(), m.as_ref(), 4, Metric::Other).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncating_a_full_solve_equals_a_partial_solve(seed in 0u64..1000, n in 2usize..14, frac in 0.1f64..1.0) {
        let mut r = rng(seed);
        let k = random_spd(&mut r, n, 0.1);
        let m = random_spd(&mut r, n, 1.0);
        let kk = ((n as f64 * frac).ceil() as usize).clamp(1, n);
        let full = sym_gen_eig(k.as_ref(), m.as_ref(), n, Metric::Other).unwrap().truncated(kk);
        let part = sym_gen_eig(k.as_ref(), m.as_ref(), kk, Metric::Other).unwrap();
        for (a, b) in full.eigenvalues.iter().zip(&part.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
        // largest-entry-positive makes the vectors themselves comparable
        prop_assert!(max_abs_diff(&full.vectors, &part.vectors) <= 1e-9 * frobenius(&part.vectors));
    }

    #[test]
    fn residuals_and_orthogonality_hold(seed in 0u64..1000, n in 2usize..16) {
        let mut r = rng(seed);
        let k = random_spd(&mut r, n, 0.05);
        let m = random_spd(&mut r, n, 0.5);
        let b = sym_gen_eig(k.as_ref(), m.as_ref(), n, Metric::Other).unwrap();
        let gram = b.vectors.transpose() * &m * &b.vectors;
        prop_assert!(max_dev_from_identity(&gram) <= 1e-10);
        for i in 0..n {
            prop_assert!(residual(&k, &m, b.eigenvalues[i], b.vectors.col(i)) <= 1e-9);
        }
        prop_assert!(b.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}
