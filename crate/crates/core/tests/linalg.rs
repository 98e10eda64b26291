mod common;

use approx::assert_relative_eq;
use bvsel_core::linalg::{
    incremental_rss, min_eigen, project_with_intercept, r_squared, residual_gram, standardize, Dataset, ModelIndex,
    ProjectionBasis,
};
use bvsel_core::seeding::rng_from_seed;
use bvsel_core::Error;
use common::{model, normal_vec, random_dataset, random_subset};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn constant_column_is_rejected() {
    let x = DMatrix::from_column_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 5.0]);
    let ds = Dataset::new(x, DVector::from_vec(vec![1.0, 0.0, 2.0, 3.0])).unwrap();
    assert!(matches!(standardize(&ds), Err(Error::ConstantColumn { index: 0 })));
}

#[test]
fn standardize_hand_values() {
    let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
    let ds = standardize(&Dataset::new(x, DVector::from_vec(vec![0.0, 1.0, 0.0, 2.0])).unwrap()).unwrap();
    // centered (-1.5, -0.5, 0.5, 1.5) has squared norm 5; rescale to 4
    let k = (4.0f64 / 5.0).sqrt();
    for (got, want) in ds.x().column(0).iter().zip([-1.5, -0.5, 0.5, 1.5]) {
        assert_relative_eq!(*got, want * k, epsilon = 1e-14);
    }
    assert!(ds.is_standardized());
}

#[test]
fn standardize_is_idempotent() {
    let ds = random_dataset(1, 30, 4);
    let again = standardize(&ds).unwrap();
    assert!((ds.x() - again.x()).amax() < 1e-12);
}

#[test]
fn r_squared_perfect_and_orthogonal_fits() {
    let ds = random_dataset(2, 25, 3);
    let y = (ds.x().column(0) * 1.5 - ds.x().column(2) * 0.5).add_scalar(2.0);
    let exact = ds.with_response(y).unwrap();
    let r = r_squared(&exact, &model(&[0, 2])).unwrap();
    assert!(r.is_saturated());
    assert_relative_eq!(r.value(), 1.0, epsilon = 1e-12);

    // y orthogonal to the intercept and to column 0
    let x0 = ds.centered_x().column(0).into_owned();
    let mut rng = rng_from_seed(3);
    let mut y = DVector::from_vec(normal_vec(&mut rng, 25));
    y.add_scalar_mut(-y.mean());
    let y = &y - &x0 * (x0.dot(&y) / x0.dot(&x0));
    let orth = ds.with_response(y).unwrap();
    assert!(r_squared(&orth, &model(&[0])).unwrap().value() < 1e-14);
}

#[test]
fn r_squared_matches_normal_equations() {
    let mut rng = rng_from_seed(4);
    let (n, p) = (20, 5);
    let x = common::gaussian(&mut rng, n, p);
    let y = DVector::from_vec(normal_vec(&mut rng, n));
    let ds = Dataset::new(x.clone(), y.clone()).unwrap();
    for k in 1..=p {
        let a = random_subset(&mut rng, p, k);
        let mut z = DMatrix::from_element(n, k + 1, 1.0);
        for (c, j) in a.iter().enumerate() {
            z.set_column(c + 1, &x.column(j));
        }
        let coef = (z.transpose() * &z).lu().solve(&(z.transpose() * &y)).unwrap();
        let rss = (&y - &z * coef).norm_squared();
        let rss0 = y.iter().map(|v| (v - y.mean()).powi(2)).sum::<f64>();
        assert_relative_eq!(r_squared(&ds, &a).unwrap().value(), (rss0 - rss) / rss0, epsilon = 1e-10);
    }
}

#[test]
fn incremental_update_from_empty_is_simple_regression() {
    let ds = random_dataset(5, 40, 3);
    let x = ds.centered_x().column(1);
    let y = ds.centered_y();
    let corr2 = x.dot(y).powi(2) / (x.norm_squared() * y.norm_squared());
    let r = incremental_rss(&ds, &ProjectionBasis::empty(&ds), 1).unwrap();
    assert_relative_eq!(r.value(), corr2, epsilon = 1e-13);
}

#[test]
fn incremental_zero_gain_column() {
    // y and column 2 are orthogonal to everything else and to each other
    let n = 8;
    let c = |v: [f64; 8]| DVector::from_row_slice(&v);
    let x = DMatrix::from_columns(&[
        c([1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]),
        c([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]),
        c([1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]),
    ]);
    let y = c([2.0, 0.0, 2.0, 0.0, 0.5, -0.5, 0.5, -0.5]);
    let ds = Dataset::new(x, y).unwrap();
    assert_eq!(ds.n(), n);
    let basis = ProjectionBasis::build(&ds, &model(&[0, 1])).unwrap();
    let before = basis.r_squared(&ds).unwrap().value();
    assert_relative_eq!(incremental_rss(&ds, &basis, 2).unwrap().value(), before, epsilon = 1e-14);
}

#[test]
fn incremental_matches_refit_on_random_pairs() {
    let mut rng = rng_from_seed(6);
    for i in 0..1000u64 {
        let n = rng.random_range(12..50usize);
        let p = rng.random_range(2..9usize);
        let ds = random_dataset(1000 + i, n, p);
        let size = rng.random_range(0..p.min(n - 4));
        let a = random_subset(&mut rng, p, size);
        let outside = a.complement(p);
        let k = outside[rng.random_range(0..outside.len())];
        let basis = ProjectionBasis::build(&ds, &a).unwrap();
        let inc = incremental_rss(&ds, &basis, k).unwrap().value();
        let full = r_squared(&ds, &a.with(k)).unwrap().value();
        assert!((inc - full).abs() <= 1e-12, "{inc} vs {full}");
    }
}

#[test]
fn min_eigen_orthogonal_and_duplicated() {
    let c = |v: [f64; 8]| DVector::from_row_slice(&v);
    let x = DMatrix::from_columns(&[
        c([1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]),
        c([1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]),
        c([1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]),
    ]);
    let y = c([1.0, 2.0, 0.0, 3.0, 1.0, 0.0, 0.5, 2.0]);
    let ds = Dataset::new(x.clone(), y.clone()).unwrap();
    assert_relative_eq!(min_eigen(&ds, &model(&[0, 1, 2])).unwrap(), 1.0, epsilon = 1e-12);
    let dup = DMatrix::from_columns(&[x.column(0).into_owned(), x.column(0).into_owned()]);
    let ds = Dataset::new(dup, y).unwrap();
    assert!(min_eigen(&ds, &model(&[0, 1])).unwrap() < 1e-12);
    assert!(ProjectionBasis::build(&ds, &model(&[0, 1])).is_err());
}

/// Smallest root of the characteristic cubic of a symmetric 3x3 matrix by
/// the trigonometric formula.
fn cubic_min_root(m: &DMatrix<f64>) -> f64 {
    let q = m.trace() / 3.0;
    let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
    let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (m - DMatrix::identity(3, 3) * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

#[test]
fn min_eigen_matches_cubic_roots() {
    let mut rng = rng_from_seed(7);
    for s in 0..20u64 {
        let n = 30;
        let z = common::gaussian(&mut rng, n, 1);
        let mut x = common::gaussian(&mut rng, n, 3);
        for j in 0..3 {
            let w = 0.3 * (j + 1) as f64;
            let col = x.column(j) + z.column(0) * w;
            x.set_column(j, &col);
        }
        let ds = Dataset::new(x, DVector::from_vec(normal_vec(&mut rng, n))).unwrap();
        let g = ds.centered_x().tr_mul(ds.centered_x()) / n as f64;
        let want = cubic_min_root(&g);
        assert_relative_eq!(min_eigen(&ds, &model(&[0, 1, 2])).unwrap(), want, epsilon = 1e-10, max_relative = 1e-10);
        let _ = s;
    }
}

#[test]
fn residual_gram_of_orthogonal_extras_is_untouched() {
    let c = |v: [f64; 4]| DVector::from_row_slice(&v);
    let x = DMatrix::from_columns(&[c([1.0, 1.0, -1.0, -1.0]), c([1.0, -1.0, 1.0, -1.0])]);
    let ds = Dataset::new(x, c([0.0, 1.0, 0.0, 2.0])).unwrap();
    let g = residual_gram(&ds, &model(&[0]), &model(&[1])).unwrap();
    assert_relative_eq!(g[(0, 0)], 1.0, epsilon = 1e-14);
}

#[test]
fn one_based_round_trip_and_ordering() {
    let m = ModelIndex::parse_one_based("3;1;7").unwrap();
    assert_eq!(m.as_slice(), &[0, 2, 6]);
    assert_eq!(m.to_one_based(), "1;3;7");
    assert!(ModelIndex::parse_one_based("0").is_err());
    assert!(ModelIndex::new(vec![1, 1]).is_err());
    assert!(model(&[5]) < model(&[0, 1]));
    assert!(model(&[0, 2]) < model(&[1, 2]));
    let ds = random_dataset(8, 10, 3);
    assert!(model(&[3]).validate(&ds).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn r_squared_is_monotone_under_adding_columns(seed in 0u64..10_000, n in 12usize..40, p in 2usize..8) {
        let ds = random_dataset(seed, n, p);
        let mut rng = rng_from_seed(seed);
        let size = rng.random_range(0..p.min(n - 4));
        let a = random_subset(&mut rng, p, size);
        let k = a.complement(p)[0];
        let small = r_squared(&ds, &a).unwrap().value();
        let big = r_squared(&ds, &a.with(k)).unwrap().value();
        prop_assert!(big >= small - 1e-12);
        prop_assert!((0.0..=1.0).contains(&small) && (0.0..=1.0).contains(&big));
    }

    #[test]
    fn projection_is_non_expansive(seed in 0u64..10_000, n in 8usize..40, p in 1usize..6) {
        let ds = random_dataset(seed, n, p);
        let mut rng = rng_from_seed(seed + 1);
        let size = rng.random_range(0..=p.min(n - 4));
        let a = random_subset(&mut rng, p, size);
        let v = normal_vec(&mut rng, n);
        let hv = project_with_intercept(&ds, &a, &v).unwrap();
        let norm = |x: &[f64]| x.iter().map(|t| t * t).sum::<f64>().sqrt();
        prop_assert!(norm(&hv) <= norm(&v) + 1e-9);
    }

    #[test]
    fn residual_norm_bound_for_standardized_columns(seed in 0u64..10_000, n in 8usize..40, p in 2usize..7) {
        let ds = random_dataset(seed, n, p);
        let mut rng = rng_from_seed(seed + 2);
        let size = rng.random_range(0..p.min(n - 4));
        let a = random_subset(&mut rng, p, size);
        let rest = ModelIndex::new(a.complement(p)).unwrap();
        let g = residual_gram(&ds, &a, &rest).unwrap();
        for d in g.diagonal().iter() {
            prop_assert!(d.sqrt() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn blockwise_eigenvalue_bound(seed in 0u64..10_000, n in 12usize..50, p in 2usize..9) {
        let ds = random_dataset(seed, n, p);
        let mut rng = rng_from_seed(seed + 3);
        let size = rng.random_range(2..=p.min(8));
        let big = random_subset(&mut rng, p, size);
        let k = rng.random_range(1..big.len());
        let inner = ModelIndex::new(big.as_slice()[..k].to_vec()).unwrap();
        let schur = residual_gram(&ds, &inner, &big.difference(&inner)).unwrap();
        let lo = bvsel_core::linalg::extreme_eigenvalues(&schur).0;
        prop_assert!(lo >= min_eigen(&ds, &big).unwrap() - 1e-9);
    }

    #[test]
    fn rayleigh_quotient_within_extreme_eigenvalues(seed in 0u64..10_000, k in 1usize..8) {
        let mut rng = rng_from_seed(seed);
        let b = common::gaussian(&mut rng, k + 2, k);
        let m = b.tr_mul(&b);
        let (lo, hi) = bvsel_core::linalg::extreme_eigenvalues(&m);
        let a = DVector::from_vec(normal_vec(&mut rng, k));
        let q = (a.transpose() * &m * &a)[0] / a.norm_squared();
        let tol = 1e-9 * hi.abs().max(1.0);
        prop_assert!(q >= lo - tol && q <= hi + tol);
    }

    #[test]
    fn one_based_round_trip(v in proptest::collection::btree_set(0usize..50, 0..8)) {
        let m = ModelIndex::new(v.into_iter().collect()).unwrap();
        if !m.is_empty() {
            prop_assert_eq!(ModelIndex::parse_one_based(&m.to_one_based()).unwrap(), m);
        }
    }
}
