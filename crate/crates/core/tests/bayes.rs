mod common;

use approx::assert_relative_eq;
use bvsel_core::bayes::{
    log_bf_closed, log_bf_quadrature, log_prior_odds, log_sparsity_prior_odds, GPriorFamily, MarginalKind,
    ModelPrior, ModelSpacePrior, SparsityPrior,
};
use bvsel_core::linalg::{r_squared, RSquared};
use bvsel_core::numeric::median;
use bvsel_core::seeding::rng_from_seed;
use bvsel_core::Error;
use common::{model, random_dataset, random_subset};
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

#[test]
fn closed_form_example_value() {
    // lnΓ(1) + lnΓ(14) − lnΓ(1/2) − lnΓ(29/2) − (27/2) ln 0.6
    let got = log_bf_closed(RSquared::new(0.4, 2), RSquared::null(), 30, 2, 0).unwrap();
    assert_relative_eq!(got.log_bf, 5.013178989350507, max_relative = 1e-12);
}

#[test]
fn closed_form_matches_statrs_gamma() {
    let (n, a, t) = (57usize, 4usize, 2usize);
    let (ra, rt) = (0.55, 0.31);
    let want = ((n - t - 1) as f64 / 2.0) * (1.0f64 - rt).ln() - ((n - a - 1) as f64 / 2.0) * (1.0f64 - ra).ln()
        + ln_gamma(a as f64 / 2.0)
        + ln_gamma((n - a) as f64 / 2.0)
        - ln_gamma(t as f64 / 2.0)
        - ln_gamma((n - t) as f64 / 2.0);
    let got = log_bf_closed(RSquared::new(ra, a), RSquared::new(rt, t), n, a, t).unwrap();
    assert_relative_eq!(got.log_bf, want, max_relative = 1e-12);
    assert_relative_eq!(got.log_bf, got.log_r2_term + got.log_gamma_term, epsilon = 1e-12);
}

#[test]
fn saturation_rules() {
    let sat = RSquared::new(1.0, 2);
    let plain = RSquared::new(0.3, 1);
    assert_eq!(log_bf_closed(sat, plain, 20, 2, 1).unwrap().log_bf, f64::INFINITY);
    assert_eq!(log_bf_closed(plain, sat, 20, 1, 2).unwrap().log_bf, f64::NEG_INFINITY);
    assert!(matches!(log_bf_closed(sat, sat, 20, 2, 2), Err(Error::IndeterminateComparison)));
    assert!(log_bf_closed(plain, plain, 10, 8, 1).is_err());
}

#[test]
fn transitivity_on_a_real_design() {
    let ds = common::planted(11, 60, 8, 2, 0.5);
    let r = |m: &[usize]| r_squared(&ds, &model(m)).unwrap();
    let (a, b, c) = (model(&[0, 3]), model(&[0, 1]), model(&[1, 4, 6]));
    let ra = r(a.as_slice());
    let rb = r(b.as_slice());
    let rc = r(c.as_slice());
    let ab = log_bf_closed(ra, rb, 60, 2, 2).unwrap().log_bf;
    let bc = log_bf_closed(rb, rc, 60, 2, 3).unwrap().log_bf;
    let ac = log_bf_closed(ra, rc, 60, 2, 3).unwrap().log_bf;
    assert_relative_eq!(ab + bc, ac, epsilon = 1e-10);
}

#[test]
fn null_data_bayes_factor_drifts_down() {
    let mut medians = Vec::new();
    for n in [50usize, 200, 800, 3200] {
        let vals: Vec<f64> = (0..50u64)
            .map(|s| {
                let ds = random_dataset(s * 7919 + n as u64, n, 5);
                let mut rng = rng_from_seed(s);
                let a = random_subset(&mut rng, 5, 2);
                MarginalKind::BetaPrime.log_bf_null(r_squared(&ds, &a).unwrap(), n, 2).unwrap()
            })
            .collect();
        medians.push(median(&vals));
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

/// `ln BF_{A:0}` under `g ~ InvGamma(1/2, n/2)` by the trapezoid rule in
/// `t = ln g`. With `ω = 1/g` the mixing integrand becomes
/// `(1+g)^{(n−|A|)/2} (1+g(1−R²))^{−(n−1)/2}`, half a power of `1+g` above
/// the textbook g-prior marginal.
fn zs_in_g_space(r2: f64, n: usize, s: usize) -> f64 {
    let nf = n as f64;
    let log_integrand = |t: f64| {
        let g: f64 = t.exp();
        let prior = 0.5 * (nf / 2.0).ln() - ln_gamma(0.5) - 1.5 * t - nf / (2.0 * g);
        (nf - s as f64) / 2.0 * g.ln_1p() - (nf - 1.0) / 2.0 * (1.0 + g * (1.0 - r2)).ln() + prior + t
    };
    let (lo, hi, steps) = (-40.0, 60.0, 400_000);
    let h = (hi - lo) / steps as f64;
    let vals: Vec<f64> = (0..=steps).map(|i| log_integrand(lo + i as f64 * h)).collect();
    let peak = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == steps { 0.5 } else { 1.0 } * (v - peak).exp())
        .sum();
    peak + (sum * h).ln()
}

#[test]
fn zellner_siow_matches_g_space_integral() {
    for (r2, n, s) in [(0.3, 40, 2), (0.05, 200, 1), (0.8, 25, 4), (0.0, 60, 3)] {
        let got = log_bf_quadrature(RSquared::new(r2, s), n, s, GPriorFamily::zellner_siow(n)).unwrap();
        assert_relative_eq!(got, zs_in_g_space(r2, n, s), epsilon = 1e-6, max_relative = 1e-7);
    }
}

#[test]
fn zellner_siow_near_saturation_stays_finite() {
    let v = log_bf_quadrature(RSquared::new(0.99, 3), 50, 3, GPriorFamily::zellner_siow(50)).unwrap();
    assert!(v.is_finite() && v > 0.0);
}

#[test]
fn beta_prime_quadrature_at_zero_r2() {
    for (n, s) in [(20usize, 1usize), (80, 3)] {
        let q = log_bf_quadrature(RSquared::new(0.0, s), n, s, GPriorFamily::beta_prime(n, s).unwrap()).unwrap();
        let c = log_bf_closed(RSquared::new(0.0, s), RSquared::null(), n, s, 0).unwrap().log_bf;
        assert_relative_eq!(q, c, epsilon = 1e-8);
        assert!(c <= 0.0);
    }
}

#[test]
fn poisson_prior_masses_sum_to_one() {
    for (lambda, p, n) in [(1.0, 10usize, 100usize), (3.5, 40, 20), (0.2, 5, 6)] {
        let prior = ModelPrior::new(lambda, p, n).unwrap();
        assert_eq!(prior.s_max(), p.min(n - 3));
        let total: f64 = (0..=prior.s_max()).map(|s| prior.log_size_mass(s).exp()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        assert_eq!(prior.log_size_mass(prior.s_max() + 1), f64::NEG_INFINITY);
    }
    assert!(ModelPrior::new(0.0, 5, 10).is_err());
}

#[test]
fn sparsity_prior_masses_and_odds() {
    let prior = SparsityPrior::new(1.0, 10, 3).unwrap();
    let total: f64 = (0..=3).map(|s| prior.log_size_mass(s).exp()).sum();
    assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    // π(2)/π(1) = 1/10 and C(10,2)/C(10,1) = 4.5
    let odds = log_sparsity_prior_odds(2, 1, 10, 1.0).exp();
    assert_relative_eq!(odds, 0.1 / 4.5, max_relative = 1e-12);
    let space = ModelSpacePrior::Sparsity(prior);
    assert_relative_eq!(space.log_model_prior(2) - space.log_model_prior(1), odds.ln(), epsilon = 1e-12);
}

#[test]
fn poisson_prior_odds_hand_value() {
    // λ = 2, p = 6: π(M_A)/π(M_T) = (λ^2/2!)/C(6,2) · C(6,1)/λ = 2/15 · 6/2
    let prior = ModelPrior::new(2.0, 6, 50).unwrap();
    assert_relative_eq!(log_prior_odds(2, 1, &prior).exp(), 0.4, max_relative = 1e-12);
    assert_eq!(log_prior_odds(3, 3, &prior), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn antisymmetry(ra in 0.0f64..0.99, rt in 0.0f64..0.99, n in 10usize..400, a in 0usize..6, t in 0usize..6) {
        let ab = log_bf_closed(RSquared::new(ra, a), RSquared::new(rt, t), n, a, t).unwrap().log_bf;
        let ba = log_bf_closed(RSquared::new(rt, t), RSquared::new(ra, a), n, t, a).unwrap().log_bf;
        prop_assert!((ab + ba).abs() <= 1e-10 * (1.0 + ab.abs()));
    }

    #[test]
    fn closed_form_matches_quadrature(r2 in 0.0f64..0.95, n in 10usize..2000, s in 1usize..6) {
        let closed = log_bf_closed(RSquared::new(r2, s), RSquared::null(), n, s, 0).unwrap().log_bf;
        let quad = log_bf_quadrature(RSquared::new(r2, s), n, s, GPriorFamily::beta_prime(n, s).unwrap()).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-6 * (1.0 + closed.abs()), "{} vs {}", closed, quad);
    }

    #[test]
    fn bayes_factor_increases_with_r2(r1 in 0.0f64..0.9, dr in 0.001f64..0.09, n in 10usize..500, s in 1usize..5) {
        let lo = log_bf_closed(RSquared::new(r1, s), RSquared::null(), n, s, 0).unwrap().log_bf;
        let hi = log_bf_closed(RSquared::new(r1 + dr, s), RSquared::null(), n, s, 0).unwrap().log_bf;
        prop_assert!(hi > lo);
    }
}
