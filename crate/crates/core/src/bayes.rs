//! Mixture g-prior Bayes factors and model-space priors.
//!
//! For a model `A` with coefficient of determination `R_A²`, integrating out
//! the intercept, the coefficients and the noise variance leaves a
//! one-dimensional integral over the mixing parameter `ω = 1/g`:
//!
//! ```text
//! BF_{A:0} = ∫ (1+ω)^{(n−|A|)/2} ω^{(|A|−1)/2} (1−R_A²+ω)^{−(n−1)/2} π(ω) dω
//! ```
//!
//! With `ω ~ BetaPrime(1/2, (n−|A|−1)/2)` the `(1+ω)` factor cancels and the
//! integral has the closed form used by [`log_bf_closed`]:
//!
//! ```text
//! BF_{A:T} = (1−R_T²)^{(n−|T|−1)/2} / (1−R_A²)^{(n−|A|−1)/2}
//!            · Γ(|A|/2) Γ((n−|A|)/2) / (Γ(|T|/2) Γ((n−|T|)/2))
//! ```
//!
//! Everything is evaluated in log space. The intercept-only model has
//! `BF_{0:0} = 1`, which the closed form reproduces when the null model is
//! given the gamma term of a size-one model with `R² = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RSquared;
use crate::numeric::{ln_choose, ln_gamma, log_sum_exp};
use crate::quadrature;

/// Target relative accuracy of the mixing-parameter quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-8;
/// Error estimates above this (relative) make the quadrature fail.
pub const QUADRATURE_FAIL_TOL: f64 = 1e-6;

/// Mixing distribution on `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GPriorFamily {
    /// Density `ω^{a−1}(1+ω)^{−a−b} / B(a, b)`.
    BetaPrime { a: f64, b: f64 },
    /// Shape/rate parameterization.
    Gamma { shape: f64, rate: f64 },
}

impl GPriorFamily {
    /// The modified Zellner-Siow prior: `BetaPrime(1/2, (n−|A|−1)/2)`.
    pub fn beta_prime(n: usize, model_size: usize) -> Result<Self> {
        if model_size + 2 > n {
            return Err(Error::InvalidModel(format!(
                "Beta-prime shape needs |A| <= n - 2 (|A| = {model_size}, n = {n})"
            )));
        }
        Ok(Self::BetaPrime { a: 0.5, b: (n - model_size - 1) as f64 / 2.0 })
    }

    /// Zellner-Siow on the `X'X` scale: `ω ~ Gamma(1/2, rate n/2)`.
    pub fn zellner_siow(n: usize) -> Self {
        Self::Gamma { shape: 0.5, rate: n as f64 / 2.0 }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::BetaPrime { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Self::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("mixing prior parameters must be positive: {self:?}")))
        }
    }

    pub fn log_density(&self, omega: f64) -> f64 {
        match *self {
            Self::BetaPrime { a, b } => {
                (a - 1.0) * omega.ln() - (a + b) * omega.ln_1p()
                    - (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
            }
            Self::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * omega.ln() - rate * omega
            }
        }
    }
}

/// Which marginal likelihood a selection run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalKind {
    /// Closed form under the Beta-prime mixing prior.
    BetaPrime,
    /// Quadrature under `Gamma(1/2, n/2)`.
    ZellnerSiow,
}

impl MarginalKind {
    /// `ln BF_{A:0}`.
    pub fn log_bf_null(&self, r2: RSquared, n: usize, size: usize) -> Result<f64> {
        if size == 0 {
            return Ok(0.0);
        }
        match self {
            Self::BetaPrime => Ok(log_bf_closed(r2, RSquared::null(), n, size, 0)?.log_bf),
            Self::ZellnerSiow => log_bf_quadrature(r2, n, size, GPriorFamily::zellner_siow(n)),
        }
    }
}

/// Log Bayes factor with its two additive pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesFactorResult {
    pub log_bf: f64,
    pub log_r2_term: f64,
    pub log_gamma_term: f64,
    pub a_size: usize,
    pub t_size: usize,
}

fn check_size(size: usize, n: usize) -> Result<()> {
    if size + 3 > n {
        return Err(Error::InvalidModel(format!("model size {size} exceeds n - 3 = {}", n as i64 - 3)));
    }
    Ok(())
}

/// `ln Γ(|A|/2) + ln Γ((n−|A|)/2)`, with the null model mapped to size one.
fn gamma_part(n: usize, size: usize) -> f64 {
    let s = size.max(1) as f64;
    ln_gamma(s / 2.0) + ln_gamma((n as f64 - s) / 2.0)
}

/// `((n−|A|−1)/2) ln(1 − R_A²)`; zero for the null model.
fn r2_part(r2: RSquared, n: usize, size: usize) -> f64 {
    if size == 0 {
        return 0.0;
    }
    let e = (n - size - 1) as f64 / 2.0;
    if r2.is_saturated() {
        f64::NEG_INFINITY
    } else {
        e * r2.ln_one_minus()
    }
}

/// `ln BF_{A:T}` under the Beta-prime mixing prior.
///
/// Returns `+inf` when only `A` saturates and `-inf` when only `T` does.
/// Size 0 denotes the intercept-only model.
pub fn log_bf_closed(
    r2_a: RSquared,
    r2_t: RSquared,
    n: usize,
    a_size: usize,
    t_size: usize,
) -> Result<BayesFactorResult> {
    check_size(a_size, n)?;
    check_size(t_size, n)?;
    let sat_a = a_size > 0 && r2_a.is_saturated();
    let sat_t = t_size > 0 && r2_t.is_saturated();
    let log_gamma_term = gamma_part(n, a_size) - gamma_part(n, t_size);
    let log_r2_term = match (sat_a, sat_t) {
        (true, true) => return Err(Error::IndeterminateComparison),
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => r2_part(r2_t, n, t_size) - r2_part(r2_a, n, a_size),
    };
    Ok(BayesFactorResult { log_bf: log_r2_term + log_gamma_term, log_r2_term, log_gamma_term, a_size, t_size })
}

/// `ln BF_{A:0}` by direct quadrature over the mixing parameter.
///
/// The substitution `ω = u/(1−u)` maps the integral to `(0, 1)`; the
/// integrand is evaluated in log space and shifted by its maximum before
/// exponentiation. Initial breakpoints sit at `ω = 10^j` so that the sharply
/// peaked integrands of large `n` are resolved.
pub fn log_bf_quadrature(r2_a: RSquared, n: usize, a_size: usize, family: GPriorFamily) -> Result<f64> {
    check_size(a_size, n)?;
    if a_size == 0 {
        return Err(Error::InvalidModel("the quadrature is defined for |A| >= 1".into()));
    }
    family.validate()?;
    if r2_a.is_saturated() {
        return Ok(f64::INFINITY);
    }
    let nf = n as f64;
    let s = a_size as f64;
    let resid = 1.0 - r2_a.value();
    let log_f = move |omega: f64| -> f64 {
        (nf - s) / 2.0 * omega.ln_1p() + (s - 1.0) / 2.0 * omega.ln()
            - (nf - 1.0) / 2.0 * (resid + omega).ln()
            + family.log_density(omega)
    };
    // log of the integrand in u, including dω/du = (1+ω)²
    let log_g = move |u: f64| -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let omega = u / (1.0 - u);
        log_f(omega) - 2.0 * (-u).ln_1p()
    };

    // shift by the peak of the integrand in log-ω measure
    let shift = (-1200..=800)
        .map(|i| {
            let t = i as f64 * 0.05;
            log_f(t.exp()) + t
        })
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Quadrature { estimate: f64::INFINITY });
    }

    let mut breaks = vec![0.0];
    for j in -18..=12 {
        let omega = 10f64.powi(j);
        breaks.push(omega / (1.0 + omega));
    }
    breaks.push(1.0);

    let result = quadrature::integrate(
        |u| {
            let v = log_g(u) - shift;
            if v.is_finite() { v.exp() } else { 0.0 }
        },
        &breaks,
        QUADRATURE_REL_TOL,
        0.0,
        20_000,
    );
    let rel = result.error / result.value.abs();
    if !(result.value > 0.0) || !(rel <= QUADRATURE_FAIL_TOL) {
        return Err(Error::Quadrature { estimate: rel });
    }
    Ok(shift + result.value.ln())
}

/// Truncated Poisson prior on model size, uniform within each size class.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPrior {
    lambda: f64,
    p: usize,
    s_max: usize,
    log_masses: Vec<f64>,
}

impl ModelPrior {
    /// Truncates at `s_max = min(p, n − 3)`.
    pub fn new(lambda: f64, p: usize, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!("need n >= 3, got {n}")));
        }
        Self::with_max_size(lambda, p, p.min(n - 3))
    }

    pub fn with_max_size(lambda: f64, p: usize, s_max: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("Poisson rate must be positive, got {lambda}")));
        }
        if s_max > p {
            return Err(Error::InvalidConfig(format!("s_max {s_max} exceeds p = {p}")));
        }
        let raw: Vec<f64> =
            (0..=s_max).map(|s| s as f64 * lambda.ln() - lambda - ln_gamma(s as f64 + 1.0)).collect();
        let norm = log_sum_exp(raw.iter().copied());
        let log_masses = raw.into_iter().map(|v| v - norm).collect();
        Ok(Self { lambda, p, s_max, log_masses })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// Renormalized `ln π(|A|)`, `-inf` above `s_max`.
    pub fn log_size_mass(&self, size: usize) -> f64 {
        self.log_masses.get(size).copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Size prior with `π(s)/π(s−1) = p^{−c₂}`, truncated at `s_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPrior {
    c2: f64,
    p: usize,
    s_max: usize,
    log_norm: f64,
}

impl SparsityPrior {
    pub fn new(c2: f64, p: usize, s_max: usize) -> Result<Self> {
        if !(c2 >= 0.0 && c2.is_finite()) {
            return Err(Error::InvalidConfig(format!("sparsity exponent must be >= 0, got {c2}")));
        }
        if s_max > p {
            return Err(Error::InvalidConfig(format!("s_max {s_max} exceeds p = {p}")));
        }
        let lp = (p as f64).ln();
        let log_norm = log_sum_exp((0..=s_max).map(|s| -c2 * s as f64 * lp));
        Ok(Self { c2, p, s_max, log_norm })
    }

    pub fn log_size_mass(&self, size: usize) -> f64 {
        if size > self.s_max {
            return f64::NEG_INFINITY;
        }
        -self.c2 * size as f64 * (self.p as f64).ln() - self.log_norm
    }
}

/// Prior over the model space, `π(M_A) = π(|A|) C(p, |A|)^{−1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpacePrior {
    Poisson(ModelPrior),
    Sparsity(SparsityPrior),
}

impl ModelSpacePrior {
    pub fn p(&self) -> usize {
        match self {
            Self::Poisson(m) => m.p,
            Self::Sparsity(s) => s.p,
        }
    }

    pub fn s_max(&self) -> usize {
        match self {
            Self::Poisson(m) => m.s_max,
            Self::Sparsity(s) => s.s_max,
        }
    }

    pub fn log_size_mass(&self, size: usize) -> f64 {
        match self {
            Self::Poisson(m) => m.log_size_mass(size),
            Self::Sparsity(s) => s.log_size_mass(size),
        }
    }

    /// `ln π(M_A)` for a model of the given size.
    pub fn log_model_prior(&self, size: usize) -> f64 {
        let lm = self.log_size_mass(size);
        if lm == f64::NEG_INFINITY {
            return lm;
        }
        lm - ln_choose(self.p(), size)
    }
}

/// `ln[π(M_A)/π(M_T)]` under the truncated Poisson prior.
///
/// A size above `s_max` has zero prior mass: `-inf` when it is `A`, `+inf`
/// when only `T` is out of range.
pub fn log_prior_odds(a_size: usize, t_size: usize, prior: &ModelPrior) -> f64 {
    if a_size > prior.s_max {
        return f64::NEG_INFINITY;
    }
    if t_size > prior.s_max {
        return f64::INFINITY;
    }
    if a_size == t_size {
        return 0.0;
    }
    (prior.log_size_mass(a_size) - ln_choose(prior.p, a_size))
        - (prior.log_size_mass(t_size) - ln_choose(prior.p, t_size))
}

/// `ln[π(M_A)/π(M_T)]` under the sparsity prior `π(s)/π(s−1) = p^{−c₂}`.
pub fn log_sparsity_prior_odds(a_size: usize, t_size: usize, p: usize, c2: f64) -> f64 {
    if a_size == t_size {
        return 0.0;
    }
    -c2 * (a_size as f64 - t_size as f64) * (p as f64).ln() + ln_choose(p, t_size) - ln_choose(p, a_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn r2(v: f64, k: usize) -> RSquared {
        RSquared::new(v, k)
    }

    #[test]
    fn identical_models_give_zero() {
        let res = log_bf_closed(r2(0.4, 3), r2(0.4, 3), 50, 3, 3).unwrap();
        assert_eq!(res.log_bf, 0.0);
    }

    #[test]
    fn closed_form_matches_high_precision_value() {
        // 40-digit mpmath evaluation of the closed form
        let res = log_bf_closed(r2(0.6, 3), r2(0.5, 2), 20, 3, 2).unwrap();
        assert_relative_eq!(res.log_bf, 0.262_456_937_154_207_652_396_138_896_373_508_3, epsilon = 1e-13);
        assert_relative_eq!(res.log_bf, res.log_r2_term + res.log_gamma_term, epsilon = 1e-15);
    }

    #[test]
    fn size_one_null_comparison_matches_quadrature() {
        let n = 40;
        let r = r2(0.2, 1);
        let closed = log_bf_closed(r, RSquared::null(), n, 1, 0).unwrap().log_bf;
        let quad = log_bf_quadrature(r, n, 1, GPriorFamily::beta_prime(n, 1).unwrap()).unwrap();
        assert_relative_eq!(closed, quad, epsilon = 1e-8);
    }

    #[test]
    fn quadrature_composes_with_size_one_reference() {
        // a size-one model with R² = 0 has BF_{T:0} = 1, so BF_{A:0} = BF_{A:T}
        let n = 30;
        let quad = log_bf_quadrature(r2(0.4, 2), n, 2, GPriorFamily::beta_prime(n, 2).unwrap()).unwrap();
        let closed = log_bf_closed(r2(0.4, 2), r2(0.0, 1), n, 2, 1).unwrap().log_bf;
        assert!(((quad.exp() - closed.exp()) / closed.exp()).abs() < 1e-6);
        assert_relative_eq!(quad, 5.013_178_989_350_512_115_586_661_861_508, epsilon = 1e-8);
    }

    #[test]
    fn zero_r2_quadrature_matches_closed_form() {
        for (n, k) in [(10, 1), (30, 2), (100, 5)] {
            let quad = log_bf_quadrature(r2(0.0, k), n, k, GPriorFamily::beta_prime(n, k).unwrap()).unwrap();
            let closed = log_bf_closed(r2(0.0, k), RSquared::null(), n, k, 0).unwrap().log_bf;
            assert!((quad.exp() / closed.exp() - 1.0).abs() < 1e-6, "n={n} k={k}");
        }
    }

    #[test]
    fn zellner_siow_quadrature_matches_high_precision_values() {
        // mpmath quad of the same integrand, 40 digits
        let cases = [
            (30, 2, 0.4, 5.002_147_804_773_869_698_112_977_407_673_797),
            (50, 3, 0.99, 102.114_859_987_123_805_651_311_668_980_619_2),
            (100, 1, 0.1, 5.164_525_092_196_628_114_931_136_080_814_379),
        ];
        for (n, k, r, want) in cases {
            let got = log_bf_quadrature(r2(r, k), n, k, GPriorFamily::zellner_siow(n)).unwrap();
            assert_relative_eq!(got, want, epsilon = 1e-7);
        }
    }

    #[test]
    fn zellner_siow_has_no_information_paradox() {
        let n = 50;
        let mut last = f64::NEG_INFINITY;
        for r in [0.9, 0.99, 0.999, 0.9999] {
            let v = log_bf_quadrature(r2(r, 2), n, 2, GPriorFamily::zellner_siow(n)).unwrap();
            assert!(v.is_finite() && v > last);
            last = v;
        }
    }

    #[test]
    fn saturation_and_indeterminate() {
        let sat = r2(1.0, 2);
        assert!(sat.is_saturated());
        assert_eq!(log_bf_closed(sat, r2(0.3, 1), 20, 2, 1).unwrap().log_bf, f64::INFINITY);
        assert_eq!(log_bf_closed(r2(0.3, 1), sat, 20, 1, 2).unwrap().log_bf, f64::NEG_INFINITY);
        assert_eq!(log_bf_closed(sat, sat, 20, 2, 2).unwrap_err(), Error::IndeterminateComparison);
    }

    #[test]
    fn oversized_models_are_rejected() {
        assert!(log_bf_closed(r2(0.1, 8), r2(0.1, 1), 10, 8, 1).is_err());
        assert!(GPriorFamily::beta_prime(10, 9).is_err());
        let bad = GPriorFamily::Gamma { shape: -1.0, rate: 1.0 };
        assert!(log_bf_quadrature(r2(0.1, 1), 10, 1, bad).is_err());
    }

    #[test]
    fn prior_odds_hand_arithmetic() {
        let prior = ModelPrior::new(1.0, 10, 100).unwrap();
        assert_eq!(log_prior_odds(3, 3, &prior), 0.0);
        let want = (0.5f64).ln() + (10.0f64 / 45.0).ln();
        assert_relative_eq!(log_prior_odds(2, 1, &prior), want, epsilon = 1e-13);
    }

    #[test]
    fn prior_odds_beyond_truncation() {
        let prior = ModelPrior::new(1.0, 10, 6).unwrap();
        assert_eq!(prior.s_max(), 3);
        assert_eq!(log_prior_odds(4, 1, &prior), f64::NEG_INFINITY);
        assert_eq!(prior.log_size_mass(4), f64::NEG_INFINITY);
    }

    #[test]
    fn poisson_masses_sum_to_one() {
        for (lambda, p, n) in [(1.0, 10, 100), (3.5, 50, 20), (0.2, 5, 8)] {
            let prior = ModelPrior::new(lambda, p, n).unwrap();
            let total: f64 = (0..=prior.s_max()).map(|s| prior.log_size_mass(s).exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sparsity_odds_hand_arithmetic() {
        assert_eq!(log_sparsity_prior_odds(4, 4, 100, 2.0), 0.0);
        let want = -2.0 * 100f64.ln() + ln_choose(100, 3) - ln_choose(100, 4);
        assert_relative_eq!(log_sparsity_prior_odds(4, 3, 100, 2.0), want, epsilon = 1e-12);
        // c2 = 0 leaves only the within-size uniform term
        assert_relative_eq!(
            log_sparsity_prior_odds(2, 1, 10, 0.0),
            (10.0f64 / 45.0).ln(),
            epsilon = 1e-13
        );
        let sp = ModelSpacePrior::Sparsity(SparsityPrior::new(2.0, 100, 10).unwrap());
        assert_relative_eq!(
            sp.log_model_prior(4) - sp.log_model_prior(3),
            log_sparsity_prior_odds(4, 3, 100, 2.0),
            epsilon = 1e-10
        );
    }

    #[test]
    fn overfit_class_prior_factor_is_exact() {
        // C(p−|T|, c) · π(M_A)/π(M_T) collapses to λ^c / c! for any finite p
        let prior = ModelPrior::new(2.0, 30, 200).unwrap();
        for c in 1..=3usize {
            let lhs = ln_choose(30 - 5, c) + log_prior_odds(5 + c, 5, &prior);
            let rhs = c as f64 * 2f64.ln() - ln_gamma(c as f64 + 1.0);
            assert_relative_eq!(lhs, rhs, epsilon = 1e-11);
        }
    }

    proptest! {
        #[test]
        fn antisymmetry_is_exact(
            ra in 0.0f64..0.99, rt in 0.0f64..0.99, n in 8usize..400, a in 0usize..5, t in 0usize..5
        ) {
            let x = log_bf_closed(r2(ra, a), r2(rt, t), n, a, t).unwrap().log_bf;
            let y = log_bf_closed(r2(rt, t), r2(ra, a), n, t, a).unwrap().log_bf;
            prop_assert_eq!(x, -y);
        }

        #[test]
        fn monotone_in_r2(r in 0.0f64..0.98, d in 1e-6f64..0.01, n in 10usize..300) {
            let lo = log_bf_closed(r2(r, 2), r2(0.3, 1), n, 2, 1).unwrap().log_bf;
            let hi = log_bf_closed(r2(r + d, 2), r2(0.3, 1), n, 2, 1).unwrap().log_bf;
            prop_assert!(hi > lo);
            let lo_t = log_bf_closed(r2(0.3, 2), r2(r, 1), n, 2, 1).unwrap().log_bf;
            let hi_t = log_bf_closed(r2(0.3, 2), r2(r + d, 1), n, 2, 1).unwrap().log_bf;
            prop_assert!(hi_t < lo_t);
        }
    }
}
