//! Heavy-tailed averages of Bayes factors: samplers for `δ = exp(χ²(c)/2)`,
//! the norming constants of their partial sums, the `α = 1` stable CDF and
//! tail diagnostics.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{overfit_class_experiment, SyntheticConfig};
use crate::numeric::{ln_gamma, median};
use crate::quadrature;
use crate::seeding::{derive_seed, derive_seed2, rng_from_seed};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSimConfig {
    /// Degrees of freedom of `η`.
    pub c: u32,
    /// Summands per replicate.
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl StableSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c < 1 || self.m < 2 || self.replicates < 1 {
            return Err(Error::InvalidConfig(format!(
                "need c >= 1, m >= 2, replicates >= 1 (got c = {}, m = {}, replicates = {})",
                self.c, self.m, self.replicates
            )));
        }
        Ok(())
    }
}

/// `m` draws of `δ = exp(η/2)` with `η ~ χ²(c)`.
pub fn sample_delta<R: Rng + ?Sized>(config: &StableSimConfig, rng: &mut R) -> Result<Vec<f64>> {
    config.validate()?;
    let chi2 = Gamma::new(config.c as f64 / 2.0, 2.0)
        .map_err(|e| Error::InvalidConfig(format!("chi-square sampler: {e}")))?;
    Ok((0..config.m).map(|_| (0.5 * chi2.sample(rng)).exp()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingConstants {
    pub a_m: f64,
    pub b_m: f64,
}

/// `a_m = m (ln m)^{c/2−1} / Γ(c/2)` and `b_m = (ln a_m)^{c/2} / Γ(c/2+1)`,
/// evaluated in log space. Small `m` with `c = 1` can give `a_m ≤ 1`, where
/// `b_m` is undefined; that is reported as an error.
pub fn norming_constants(m: usize, c: u32) -> Result<NormingConstants> {
    if m < 2 || c < 1 {
        return Err(Error::InvalidConfig(format!("need m >= 2 and c >= 1 (got m = {m}, c = {c})")));
    }
    let h = c as f64 / 2.0;
    let ln_m = (m as f64).ln();
    let ln_a = ln_m + (h - 1.0) * ln_m.ln() - ln_gamma(h);
    if ln_a <= 0.0 {
        return Err(Error::InvalidConfig(format!("a_m = {:.6} <= 1 for m = {m}, c = {c}; b_m is undefined", ln_a.exp())));
    }
    let b_m = (h * ln_a.ln() - ln_gamma(h + 1.0)).exp();
    Ok(NormingConstants { a_m: ln_a.exp(), b_m })
}

/// `(Σ δ_i − m b_m) / a_m`.
pub fn normalized_sum(deltas: &[f64], nc: &NormingConstants) -> f64 {
    let m = deltas.len() as f64;
    (deltas.iter().sum::<f64>() - m * nc.b_m) / nc.a_m
}

/// One normalized sum per replicate; replicate `r` draws from a seed derived
/// from `(seed, r)`.
pub fn normalized_sums(config: &StableSimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let nc = norming_constants(config.m, config.c)?;
    (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(config.seed, r as u64));
            Ok(normalized_sum(&sample_delta(config, &mut rng)?, &nc))
        })
        .collect()
}

/// Numerical tolerance of the stable CDF integral.
pub const STABLE_CDF_TOL: f64 = 1e-6;

fn stable_cdf_positive_beta(x: f64, beta: f64) -> Result<f64> {
    // Zolotarev-Nolan integral for α = 1, β > 0, unit scale
    let shift = -PI * x / (2.0 * beta);
    let f = |theta: f64| -> f64 {
        let c = theta.cos();
        if c <= 0.0 {
            return 0.0;
        }
        let a = FRAC_PI_2 + beta * theta;
        if a <= 0.0 {
            return 0.0;
        }
        let log_v = (2.0 / PI).ln() + a.ln() - c.ln() + a * theta.tan() / beta;
        let e = shift + log_v;
        if e > 700.0 { 0.0 } else { (-e.exp()).exp() }
    };
    let breaks: Vec<f64> = (0..=16).map(|i| -FRAC_PI_2 + PI * i as f64 / 16.0).collect();
    let r = quadrature::integrate(f, &breaks, 0.0, 1e-10, 4000);
    if !(r.error <= STABLE_CDF_TOL) {
        return Err(Error::Quadrature { estimate: r.error });
    }
    Ok((r.value / PI).clamp(0.0, 1.0))
}

/// CDF of the `α = 1` stable law with skewness `beta`, unit scale and zero
/// location. `beta = 0` is the Cauchy law.
pub fn stable_cdf(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    if alpha != 1.0 {
        return Err(Error::InvalidConfig(format!("only alpha = 1 is supported, got {alpha}")));
    }
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::InvalidConfig(format!("beta must lie in [-1, 1], got {beta}")));
    }
    if x.is_nan() {
        return Err(Error::InvalidConfig("x is NaN".into()));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if beta == 0.0 {
        Ok(0.5 + x.atan() / PI)
    } else if beta > 0.0 {
        stable_cdf_positive_beta(x, beta)
    } else {
        Ok(1.0 - stable_cdf_positive_beta(-x, -beta)?)
    }
}

/// CDF of `σ Z + μ + (2/π) β σ ln σ` with `Z` a unit-scale `α = 1` stable
/// variable of skewness `β`.
pub fn stable_cdf_scaled(x: f64, beta: f64, scale: f64, location: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
    }
    let z = (x - location - 2.0 / PI * beta * scale * scale.ln()) / scale;
    stable_cdf(z, 1.0, beta)
}

/// Tabulated CDF with linear interpolation inside the grid and direct
/// evaluation outside it.
#[derive(Debug, Clone)]
pub struct ReferenceCdf {
    beta: f64,
    scale: f64,
    location: f64,
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl ReferenceCdf {
    pub const POINTS: usize = 2001;

    pub fn new(beta: f64, scale: f64, location: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidConfig(format!("empty table range [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (Self::POINTS - 1) as f64;
        let mut values: Vec<f64> = (0..Self::POINTS)
            .into_par_iter()
            .map(|i| stable_cdf_scaled(lo + step * i as f64, beta, scale, location))
            .collect::<Result<_>>()?;
        // enforce monotonicity against quadrature jitter
        for i in 1..values.len() {
            if values[i] < values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        Ok(Self { beta, scale, location, lo, hi, values })
    }

    /// The unit `α = 1, β = 1` law.
    pub fn unit_totally_skewed() -> Result<Self> {
        Self::new(1.0, 1.0, 0.0, -10.0, 60.0)
    }

    pub fn table(&self) -> Vec<(f64, f64)> {
        let step = (self.hi - self.lo) / (Self::POINTS - 1) as f64;
        self.values.iter().enumerate().map(|(i, &v)| (self.lo + step * i as f64, v)).collect()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < self.lo || x > self.hi {
            return stable_cdf_scaled(x, self.beta, self.scale, self.location);
        }
        let pos = (x - self.lo) / (self.hi - self.lo) * (Self::POINTS - 1) as f64;
        let i = (pos.floor() as usize).min(Self::POINTS - 2);
        let w = pos - i as f64;
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    /// Quantile by bisection on the interpolated CDF.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        let (mut a, mut b) = (self.lo, self.hi);
        if self.eval(a)? > q || self.eval(b)? < q {
            return Err(Error::InvalidConfig(format!("quantile {q} outside the tabulated range")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.eval(mid)? < q { a = mid } else { b = mid }
        }
        Ok(0.5 * (a + b))
    }
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> Result<f64>>(samples: &[f64], cdf: F) -> Result<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Hill estimate of the tail index from the top `k = ⌈m^{k_frac}⌉` order
/// statistics: `1 / mean(ln X_(i) − ln X_(k+1))`.
pub fn hill_tail_index(samples: &[f64], k_frac: f64) -> Result<f64> {
    let m = samples.len();
    if samples.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidConfig("Hill estimator needs positive samples".into()));
    }
    let k = (m as f64).powf(k_frac).ceil() as usize;
    if k < 10 || k >= m {
        let needed = (10f64.powf(1.0 / k_frac).ceil() as usize).max(11);
        return Err(Error::InsufficientSamples { needed, have: m });
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let threshold = v[k].ln();
    let mean = v[..k].iter().map(|x| x.ln() - threshold).sum::<f64>() / k as f64;
    Ok(1.0 / mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub m_grid: Vec<usize>,
    /// Median over replicates of the sample mean of `δ`.
    pub median_means: Vec<f64>,
    pub b_m: Vec<f64>,
    /// `median_mean / b_m`.
    pub ratios: Vec<f64>,
    pub strictly_increasing: bool,
    pub within_band: bool,
    /// Growth from the first to the last grid point is at least `√(b_last/b_first)`.
    pub grows_like_b: bool,
    pub divergent: bool,
}

/// Sample means of `δ` over growing `m`. With `clip`, `δ` is capped at that
/// value, which gives a bounded control case.
pub fn diverging_mean_check(
    c: u32,
    m_grid: &[usize],
    replicates: usize,
    clip: Option<f64>,
    seed: u64,
) -> Result<DivergenceReport> {
    if m_grid.is_empty() || replicates == 0 {
        return Err(Error::InvalidConfig("need a non-empty m grid and at least one replicate".into()));
    }
    let mut median_means = Vec::new();
    let mut b_m = Vec::new();
    for (gi, &m) in m_grid.iter().enumerate() {
        let config = StableSimConfig { c, m, replicates, seed };
        let means: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_from_seed(derive_seed2(seed, gi as u64, r as u64));
                let d = sample_delta(&config, &mut rng)?;
                let s: f64 = match clip {
                    Some(cap) => d.iter().map(|v| v.min(cap)).sum(),
                    None => d.iter().sum(),
                };
                Ok(s / m as f64)
            })
            .collect::<Result<_>>()?;
        median_means.push(median(&means));
        b_m.push(norming_constants(m, c)?.b_m);
    }
    let ratios: Vec<f64> = median_means.iter().zip(&b_m).map(|(a, b)| a / b).collect();
    let strictly_increasing = median_means.windows(2).all(|w| w[1] > w[0]);
    let within_band = ratios.iter().all(|r| (0.25..=4.0).contains(r));
    let last = median_means.len() - 1;
    let grows_like_b = median_means[last] / median_means[0] >= (b_m[last] / b_m[0]).sqrt();
    Ok(DivergenceReport {
        m_grid: m_grid.to_vec(),
        median_means,
        b_m,
        ratios,
        strictly_increasing,
        within_band,
        grows_like_b,
        divergent: strictly_increasing && within_band && grows_like_b && m_grid.len() > 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HSweepPoint {
    pub n: usize,
    pub h_stats: Vec<f64>,
    pub median: f64,
    pub failed: usize,
}

/// `h_stat` of the class `M_c` over `n_grid`, `seeds` datasets per `n`.
pub fn h_statistic_sweep(
    config: &SyntheticConfig,
    c: usize,
    n_grid: &[usize],
    seeds: usize,
    lambda: f64,
    samples: usize,
) -> Result<Vec<HSweepPoint>> {
    let mut out = Vec::new();
    for &n in n_grid {
        let results: Vec<Result<f64>> = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let cfg = SyntheticConfig { n, seed: derive_seed2(config.seed, n as u64, s as u64), ..config.clone() };
                overfit_class_experiment(&cfg, c, false, lambda, samples).map(|st| st.h_stat)
            })
            .collect();
        let failed = results.iter().filter(|r| r.is_err()).count();
        if failed == seeds {
            return Err(results.into_iter().find_map(|r| r.err()).expect("all failed"));
        }
        let h_stats: Vec<f64> = results.into_iter().filter_map(|r| r.ok()).collect();
        out.push(HSweepPoint { n, median: median(&h_stats), h_stats, failed });
    }
    Ok(out)
}
