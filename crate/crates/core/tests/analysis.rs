use faer::c64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tmor::analysis::{
    classify, classify_with_tol, relative_errors, spectra_report, ModeClass, DEFAULT_REAL_TOL,
};
use tmor::Error;

/// Conjugate-closed set with `nt` negative reals and `np` damped pairs, all
/// moduli distinct.
fn spectrum(nt: usize, np: usize, seed: u64) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::new();
    for i in 0..nt {
        v.push(c64::new(-(1.0 + i as f64) * (1.0 + 0.1 * rand::Rng::random::<f64>(&mut rng)), 0.0));
    }
    for i in 0..np {
        let im = (2.0 + i as f64) * 10.0 * (1.0 + 0.1 * rand::Rng::random::<f64>(&mut rng));
        let re = -1e-3 * im;
        v.push(c64::new(re, im));
        v.push(c64::new(re, -im));
    }
    v.shuffle(&mut rng);
    v
}

fn perturbed(v: &[c64], eps: f64) -> Vec<c64> {
    // keyed on the modulus so conjugates move together
    v.iter()
        .map(|z| *z * (1.0 + eps * (1.0 + (z.norm() as usize % 5) as f64)))
        .collect()
}

#[test]
fn synthetic_set_splits_into_classes() {
    let v = [
        c64::new(-1.0, 0.0),
        c64::new(-2.0, 0.0),
        c64::new(0.0, 1.0),
        c64::new(0.0, -1.0),
    ];
    let s = classify(&v, 2).unwrap();
    assert_eq!(s.thermal, vec![c64::new(-1.0, 0.0), c64::new(-2.0, 0.0)]);
    assert_eq!(s.structural, vec![c64::new(0.0, 1.0)]);
    assert_eq!(s.tol, DEFAULT_REAL_TOL);
}

#[test]
fn eigenvalue_error_arithmetic() {
    let full = classify(&[c64::new(-1.0, 0.0), c64::new(-2.0, 0.0)], 2).unwrap();
    let red = classify(&[c64::new(-1.1, 0.0), c64::new(-2.0, 0.0)], 2).unwrap();
    let e = relative_errors(&full, &red);
    assert!((e.thermal[0].error - 0.1).abs() < 1e-15);
    assert_eq!(e.thermal[1].error, 0.0);
    assert!(e.structural.is_empty());
}

#[test]
fn tolerance_widens_until_counts_match() {
    let v = [
        c64::new(-1.0, 3e-7),
        c64::new(-1.0, -3e-7),
        c64::new(-5.0, 0.0),
        c64::new(-0.1, 40.0),
        c64::new(-0.1, -40.0),
    ];
    // two real entries at the default tolerance, three once widened to 1e-6
    assert_eq!(classify_with_tol(&v, 1, DEFAULT_REAL_TOL).unwrap().thermal.len(), 1);
    let s = classify(&v, 3).unwrap();
    assert_eq!(s.thermal.len(), 3);
    assert_eq!(s.tol, 1e-6);
}

#[test]
fn unmatched_counts_are_a_classification_error() {
    let v = [c64::new(-1.0, 0.0), c64::new(0.0, 1.0), c64::new(0.0, -1.0)];
    assert!(matches!(classify(&v, 3), Err(Error::Classification { .. })));
}

#[test]
fn overlap_indicator_intersects_ranges() {
    let sep = classify(&[c64::new(-1.0, 0.0), c64::new(0.0, 10.0), c64::new(0.0, -10.0)], 1).unwrap();
    let mix = classify(
        &[c64::new(-5.0, 0.0), c64::new(-20.0, 0.0), c64::new(0.0, 10.0), c64::new(0.0, -10.0)],
        2,
    )
    .unwrap();
    let r = spectra_report(&[("sep", &sep), ("mix", &mix)]);
    assert_eq!(r.overlaps[0].overlap, None);
    assert_eq!(r.overlaps[1].overlap, Some([10.0, 10.0]));
    assert_eq!(r.rows.len(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_partition_the_set(nt in 0usize..12, np in 0usize..12, seed in any::<u64>()) {
        let v = spectrum(nt, np, seed);
        let s = classify(&v, nt).unwrap();
        prop_assert_eq!(s.thermal.len(), nt);
        prop_assert_eq!(s.structural.len(), np);
        prop_assert_eq!(s.total(), v.len());
        for z in &s.thermal {
            prop_assert!(z.im.abs() <= s.tol * z.norm());
        }
        prop_assert!(s.structural.iter().all(|z| z.im > 0.0));
    }

    #[test]
    fn classification_is_scale_consistent(nt in 0usize..10, np in 0usize..10, seed in any::<u64>(), exp in -12i32..12) {
        let v = spectrum(nt, np, seed);
        let s = 10f64.powi(exp) * (1.0 + (seed % 7) as f64 / 7.0);
        let scaled: Vec<c64> = v.iter().map(|z| *z * s).collect();
        let a = classify(&v, nt).unwrap();
        let b = classify(&scaled, nt).unwrap();
        prop_assert_eq!(a.thermal_index, b.thermal_index);
        prop_assert_eq!(a.structural_index, b.structural_index);
    }

    #[test]
    fn pairing_is_permutation_stable(nt in 1usize..10, np in 1usize..10, seed in any::<u64>()) {
        let full = spectrum(nt, np, seed);
        let red = perturbed(&full, 1e-4);
        let base = relative_errors(&classify(&full, nt).unwrap(), &classify(&red, nt).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let (mut f2, mut r2) = (full.clone(), red.clone());
        f2.shuffle(&mut rng);
        r2.shuffle(&mut rng);
        let shuffled = relative_errors(&classify(&f2, nt).unwrap(), &classify(&r2, nt).unwrap());
        prop_assert_eq!(base, shuffled);
    }

    #[test]
    fn errors_ignore_the_conjugate_representative(nt in 0usize..8, np in 1usize..8, seed in any::<u64>()) {
        let full = spectrum(nt, np, seed);
        let red = perturbed(&full, 3e-5);
        let fc = classify(&full, nt).unwrap();
        let rc = classify(&red, nt).unwrap();
        let e = relative_errors(&fc, &rc);
        // the Im < 0 members give the same distances
        for (p, (a, b)) in e.class(ModeClass::Structural).iter().zip(fc.structural.iter().zip(&rc.structural)) {
            let lower = (a.conj() - b.conj()).norm() / a.conj().norm();
            prop_assert!((p.error - lower).abs() <= 1e-15 * p.error.max(1e-300));
        }
        let conj = |v: &[c64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
        let e2 = relative_errors(&classify(&conj(&full), nt).unwrap(), &classify(&conj(&red), nt).unwrap());
        prop_assert_eq!(e, e2);
    }

    #[test]
    fn errors_are_nonnegative_and_bounded_by_reduced_sizes(nt in 1usize..10, np in 1usize..10, seed in any::<u64>(), kt in 0usize..10, kp in 0usize..10) {
        let full = spectrum(nt, np, seed);
        let (kt, kp) = (kt.min(nt), kp.min(np));
        let fc = classify(&full, nt).unwrap();
        let mut sub: Vec<c64> = fc.thermal[..kt].to_vec();
        for z in &fc.structural[..kp] {
            sub.push(*z * 1.001);
            sub.push(z.conj() * 1.001);
        }
        let rc = classify(&sub, kt).unwrap();
        let e = relative_errors(&fc, &rc);
        prop_assert_eq!(e.thermal.len(), kt);
        prop_assert_eq!(e.structural.len(), kp);
        prop_assert!(e.thermal.iter().chain(&e.structural).all(|p| p.error >= 0.0));
    }
}
