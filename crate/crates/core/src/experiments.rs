//! Synthetic data in the growth regimes of the theory, and the batch
//! experiments run on it: consistency curves, overfitted-class sums and
//! underfitted-class bounds.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{log_bf_closed, log_prior_odds, MarginalKind, ModelPrior};
use crate::diagnostics::estimate_zeta_min;
use crate::error::{Error, Result};
use crate::linalg::{standardize, Dataset, ModelIndex, ProjectionBasis, RSquared};
use crate::numeric::{choose, count_subsets_up_to, ln_choose, log_sum_exp, median};
use crate::search::{enumerate_with, posterior_of_model_with, search_with, ModelScorer, SearchConfig, ENUMERATION_BUDGET};
use crate::seeding::{derive_seed, derive_seed2, rng_from_seed};

/// Classes larger than this are sampled instead of walked.
pub const CLASS_ENUMERATION_LIMIT: u128 = 100_000;
/// Below this sample size `h_stat` uses the exact gamma ratio.
pub const H_EXACT_BELOW: usize = 500;

/// Growth rate of the true model size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Regime {
    /// `|T| = ⌊t n / ln n⌋`.
    NLogN { t: f64 },
    /// `|T| = ⌊n^d⌋`.
    Power { d: f64 },
    /// `T = ∅`, no signal.
    Null,
}

impl Regime {
    pub fn true_size(&self, n: usize) -> usize {
        let nf = n as f64;
        match *self {
            Regime::NLogN { t } => (t * nf / nf.ln()).floor() as usize,
            Regime::Power { d } => {
                // guard against n^d landing a hair below an integer
                let v = nf.powf(d);
                let r = v.round();
                if (v - r).abs() < 1e-9 * r.max(1.0) { r as usize } else { v.floor() as usize }
            }
            Regime::Null => 0,
        }
    }

    /// `|T| / n` in its asymptotic form.
    fn size_fraction(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Regime::NLogN { t } => t / nf.ln(),
            Regime::Power { d } => nf.powf(d - 1.0),
            Regime::Null => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Regime::NLogN { t } if !(t > 0.0 && t <= 1.0) => {
                Err(Error::InvalidConfig(format!("nlogn scale t must lie in (0, 1], got {t}")))
            }
            Regime::Power { d } if !(0.0..1.0).contains(&d) => {
                Err(Error::InvalidConfig(format!("power exponent d must lie in [0, 1), got {d}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::NLogN { t } => write!(f, "nlogn:t={t}"),
            Regime::Power { d } => write!(f, "power:d={d}"),
            Regime::Null => write!(f, "null"),
        }
    }
}

fn parse_param(s: &str, key: &str) -> Result<f64> {
    let bad = || Error::InvalidConfig(format!("expected '{key}=<number>', got '{s}'"));
    let (k, v) = s.split_once('=').ok_or_else(bad)?;
    if k.trim() != key {
        return Err(bad());
    }
    v.trim().parse().map_err(|_| bad())
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let r = match kind.trim().to_ascii_lowercase().as_str() {
            "nlogn" => Regime::NLogN { t: if rest.is_empty() { 1.0 } else { parse_param(rest, "t")? } },
            "power" => Regime::Power { d: parse_param(rest, "d")? },
            "null" => Regime::Null,
            _ => return Err(Error::InvalidConfig(format!("unknown regime '{s}'"))),
        };
        r.validate()?;
        Ok(r)
    }
}

impl TryFrom<String> for Regime {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Regime> for String {
    fn from(r: Regime) -> String {
        r.to_string()
    }
}

/// How design columns are drawn before standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Design {
    IidGaussian,
    /// Rows with unit variances and common correlation `rho`.
    Equicorrelated { rho: f64 },
    /// Extraneous columns are random combinations of the true columns plus
    /// independent noise of scale `noise`, which keeps their residuals on
    /// any superset of `T` small.
    Controlled { noise: f64 },
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Design::IidGaussian => write!(f, "iid"),
            Design::Equicorrelated { rho } => write!(f, "equicorr:rho={rho}"),
            Design::Controlled { noise } => write!(f, "controlled:noise={noise}"),
        }
    }
}

impl FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let d = match kind.trim().to_ascii_lowercase().as_str() {
            "iid" => Design::IidGaussian,
            "equicorr" => Design::Equicorrelated { rho: parse_param(rest, "rho")? },
            "controlled" => {
                Design::Controlled { noise: if rest.is_empty() { 0.1 } else { parse_param(rest, "noise")? } }
            }
            _ => return Err(Error::InvalidConfig(format!("unknown design '{s}'"))),
        };
        match d {
            Design::Equicorrelated { rho } if !(0.0..1.0).contains(&rho) => {
                Err(Error::InvalidConfig(format!("rho must lie in [0, 1), got {rho}")))
            }
            Design::Controlled { noise } if !(noise > 0.0) => {
                Err(Error::InvalidConfig(format!("noise scale must be positive, got {noise}")))
            }
            d => Ok(d),
        }
    }
}

impl TryFrom<String> for Design {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Design> for String {
    fn from(d: Design) -> String {
        d.to_string()
    }
}

/// Target of `‖X_T β_T‖² / (n σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum C1Target {
    /// Magnitudes evenly spread over `[β_min, 2 β_min]`, no rescaling.
    Auto,
    Value(f64),
}

impl fmt::Display for C1Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            C1Target::Auto => write!(f, "auto"),
            C1Target::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for C1Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(C1Target::Auto);
        }
        let v: f64 = s.trim().parse().map_err(|_| Error::InvalidConfig(format!("bad c1 target '{s}'")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidConfig(format!("c1 target must be positive, got {v}")));
        }
        Ok(C1Target::Value(v))
    }
}

impl TryFrom<String> for C1Target {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<C1Target> for String {
    fn from(c: C1Target) -> String {
        c.to_string()
    }
}

/// Signal constant `c2` in `β_min² = c2 σ² / |T|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SignalStrength {
    Absolute(f64),
    /// `c2 = k / ζ̂_min` with `ζ̂_min` estimated on the generated design.
    OverZetaMin(f64),
}

impl fmt::Display for SignalStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalStrength::Absolute(v) => write!(f, "{v}"),
            SignalStrength::OverZetaMin(k) => write!(f, "{k}/zeta"),
        }
    }
}

impl FromStr for SignalStrength {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("bad signal constant '{s}' (use '<c2>' or '<k>/zeta')"));
        let (num, rel) = match s.strip_suffix("/zeta") {
            Some(k) => (k, true),
            None => (s, false),
        };
        let v: f64 = num.trim().parse().map_err(|_| bad())?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(if rel { SignalStrength::OverZetaMin(v) } else { SignalStrength::Absolute(v) })
    }
}

impl TryFrom<String> for SignalStrength {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SignalStrength> for String {
    fn from(c: SignalStrength) -> String {
        c.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    /// `p = ⌊f n⌋`.
    pub f: f64,
    pub regime: Regime,
    pub c1_target: C1Target,
    pub c2: SignalStrength,
    pub sigma2: f64,
    pub design: Design,
    pub seed: u64,
    /// Subset size and sample count for `ζ̂_min` when `c2` is relative.
    pub zeta_subset_size: usize,
    pub zeta_samples: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 200,
            f: 0.5,
            regime: Regime::Power { d: 0.3 },
            c1_target: C1Target::Auto,
            c2: SignalStrength::Absolute(4.0),
            sigma2: 1.0,
            design: Design::IidGaussian,
            seed: 0,
            zeta_subset_size: 6,
            zeta_samples: 1000,
        }
    }
}

impl SyntheticConfig {
    pub fn p(&self) -> usize {
        (self.f * self.n as f64).floor() as usize
    }

    pub fn true_size(&self) -> usize {
        self.regime.true_size(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        self.regime.validate()?;
        if !(self.f > 0.0 && self.f < 1.0) {
            return Err(Error::InvalidConfig(format!("f must lie in (0, 1), got {}", self.f)));
        }
        if self.n < 4 || self.p() < 1 {
            return Err(Error::InvalidConfig(format!("n = {} gives p = {}; need n >= 4, p >= 1", self.n, self.p())));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        let t = self.true_size();
        if t > self.p() || t > self.n - 3 {
            return Err(Error::Infeasible(format!(
                "|T| = {t} exceeds p = {} or n - 3 = {}",
                self.p(),
                self.n - 3
            )));
        }
        Ok(())
    }
}

/// Parameters that generated a dataset; indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub t: ModelIndex,
    /// Length-`p` coefficient vector, zero off `T`.
    pub beta: Vec<f64>,
    pub sigma2: f64,
}

/// Generator output with the realized constants.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub truth: Truth,
    pub c1: f64,
    pub c2: f64,
    pub zeta_min_hat: Option<f64>,
}

fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    // column-major fill keeps the draw order independent of the shape
    let data: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_vec(n, p, data)
}

fn raw_design<R: Rng>(rng: &mut R, design: Design, n: usize, p: usize, t: usize) -> DMatrix<f64> {
    match design {
        Design::IidGaussian => gaussian_matrix(rng, n, p),
        Design::Equicorrelated { rho } => {
            let w: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let e = gaussian_matrix(rng, n, p);
            DMatrix::from_fn(n, p, |i, j| rho.sqrt() * w[i] + (1.0 - rho).sqrt() * e[(i, j)])
        }
        Design::Controlled { noise } => {
            let mut x = gaussian_matrix(rng, n, p);
            if t == 0 {
                return x;
            }
            let scale = 1.0 / (t as f64).sqrt();
            for k in t..p {
                let a: Vec<f64> = (0..t).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect();
                for i in 0..n {
                    let mix: f64 = (0..t).map(|j| a[j] * x[(i, j)]).sum();
                    x[(i, k)] = mix + noise * x[(i, k)];
                }
            }
            x
        }
    }
}

/// Design whose centered, scaled Gram matrix `X'X / n` equals `gram`
/// exactly. Columns are centered with squared norm `n` when `gram` has a
/// unit diagonal.
pub fn exact_gram_design(n: usize, gram: &DMatrix<f64>, seed: u64) -> Result<DMatrix<f64>> {
    let p = gram.nrows();
    if gram.ncols() != p || n <= p + 1 {
        return Err(Error::InvalidConfig(format!("need a square Gram matrix with p < n - 1 (p = {p}, n = {n})")));
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidConfig("Gram matrix is not positive definite".into()))?;
    let mut rng = rng_from_seed(seed);
    let mut g = gaussian_matrix(&mut rng, n, p);
    for mut col in g.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let q = g.qr().q();
    Ok(q * chol.l().transpose() * (n as f64).sqrt())
}

fn c1_of(x_t: &DMatrix<f64>, beta_t: &[f64], sigma2: f64) -> f64 {
    let mu = x_t * DVector::from_column_slice(beta_t);
    mu.norm_squared() / (x_t.nrows() as f64 * sigma2)
}

/// Draws a dataset with true model `T = {0, …, |T|−1}`.
///
/// Coefficients on `T` alternate in sign with magnitudes
/// `β_min (1 + s u_i)`, `u_i` evenly spaced on `[0, 1]` and
/// `β_min² = c2 σ² / |T|`. A numeric C₁ target is met by tuning the spread
/// `s ∈ [0, 1]` and, if that is not enough, scaling all magnitudes up.
/// The intercept is zero and columns are standardized.
pub fn generate(config: &SyntheticConfig) -> Result<Synthetic> {
    config.validate()?;
    let n = config.n;
    let p = config.p();
    let t = config.true_size();
    let mut rng = rng_from_seed(config.seed);
    let raw = raw_design(&mut rng, config.design, n, p, t);
    let x = standardize(&Dataset::new(raw, DVector::zeros(n))?)?.x().clone();

    let mut beta = vec![0.0; p];
    let mut c2 = 0.0;
    let mut c1 = 0.0;
    let mut zeta_min_hat = None;
    if t > 0 {
        c2 = match config.c2 {
            SignalStrength::Absolute(v) => v,
            SignalStrength::OverZetaMin(k) => {
                let probe = Dataset::new(x.clone(), DVector::zeros(n))?;
                let size = config.zeta_subset_size.min(probe.max_model_size()).max(1);
                let z = estimate_zeta_min(&probe, size, config.zeta_samples, derive_seed(config.seed, 7))?;
                if !(z.value > 0.0) {
                    return Err(Error::Infeasible("design has a zero eigenvalue floor; c2 = k/zeta is undefined".into()));
                }
                zeta_min_hat = Some(z.value);
                k / z.value
            }
        };
        if !(c2 > 0.0) {
            return Err(Error::Infeasible("a non-empty true model needs c2 > 0".into()));
        }
        let bmin = (c2 * config.sigma2 / t as f64).sqrt();
        let x_t = x.columns(0, t).into_owned();
        let make = |s: f64, scale: f64| -> Vec<f64> {
            (0..t)
                .map(|i| {
                    let u = if t > 1 { i as f64 / (t - 1) as f64 } else { 0.0 };
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    sign * scale * bmin * (1.0 + s * u)
                })
                .collect()
        };
        let beta_t = match config.c1_target {
            C1Target::Auto => make(1.0, 1.0),
            C1Target::Value(target) => {
                let at = |s: f64| c1_of(&x_t, &make(s, 1.0), config.sigma2);
                let lo = at(0.0);
                if lo > target * (1.0 + 1e-12) {
                    return Err(Error::Infeasible(format!(
                        "c1 target {target} is below the minimum {lo:.6} forced by beta_min^2 = c2 sigma2/|T|"
                    )));
                }
                let hi = at(1.0);
                if hi >= target {
                    let (mut a, mut b) = (0.0, 1.0);
                    for _ in 0..100 {
                        let mid = 0.5 * (a + b);
                        if at(mid) < target { a = mid } else { b = mid }
                    }
                    let s = 0.5 * (a + b);
                    // rescale to land exactly on the target; the factor is 1 up to bisection error
                    let fix = (target / at(s)).sqrt().max(1.0);
                    make(s, fix)
                } else {
                    make(1.0, (target / hi).sqrt())
                }
            }
        };
        c1 = c1_of(&x_t, &beta_t, config.sigma2);
        beta[..t].copy_from_slice(&beta_t);
    }

    let sd = config.sigma2.sqrt();
    let noise: Vec<f64> = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    let y = &x * DVector::from_column_slice(&beta) + DVector::from_vec(noise);
    let dataset = Dataset::new(x, y)?;
    Ok(Synthetic {
        dataset,
        truth: Truth { t: ModelIndex::first(t), beta, sigma2: config.sigma2 },
        c1,
        c2,
        zeta_min_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosteriorMethod {
    Enumeration,
    Search,
}

/// One `(n, seed)` cell of a consistency sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCell {
    pub n: usize,
    pub seed_index: usize,
    pub seed: u64,
    pub p: usize,
    pub t_size: usize,
    /// `Pr(M_T | y)`; NaN when the cell failed.
    pub posterior_true: f64,
    pub map_is_true: bool,
    pub map_size: usize,
    pub method: PosteriorMethod,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCurve {
    pub n_grid: Vec<usize>,
    /// Per `n`, `Pr(M_T | y)` over the successful seeds.
    pub posterior_true: Vec<Vec<f64>>,
    /// Per `n`, fraction of successful seeds whose MAP model is `T`.
    pub recovery_rate: Vec<f64>,
    pub cells: Vec<ConsistencyCell>,
}

impl ConsistencyCurve {
    pub fn from_cells(n_grid: &[usize], cells: Vec<ConsistencyCell>) -> Self {
        let mut posterior_true = Vec::new();
        let mut recovery_rate = Vec::new();
        for &n in n_grid {
            let ok: Vec<&ConsistencyCell> = cells.iter().filter(|c| c.n == n && c.error.is_none()).collect();
            posterior_true.push(ok.iter().map(|c| c.posterior_true).collect());
            let hits = ok.iter().filter(|c| c.map_is_true).count();
            recovery_rate.push(if ok.is_empty() { f64::NAN } else { hits as f64 / ok.len() as f64 });
        }
        Self { n_grid: n_grid.to_vec(), posterior_true, recovery_rate, cells }
    }

    pub fn median_posterior(&self) -> Vec<f64> {
        self.posterior_true.iter().map(|v| median(v)).collect()
    }
}

/// Models one add, drop or swap move away from `t`.
pub fn neighborhood(t: &ModelIndex, p: usize) -> Vec<ModelIndex> {
    let outside = t.complement(p);
    let mut out: Vec<ModelIndex> = outside.iter().map(|&j| t.with(j)).collect();
    for i in t.iter() {
        out.push(t.without(i));
        out.extend(outside.iter().map(|&j| t.without(i).with(j)));
    }
    out
}

/// Seed of cell `(n, seed_index)` in a sweep based at `base_seed`.
pub fn cell_seed(base_seed: u64, n: usize, seed_index: usize) -> u64 {
    derive_seed2(base_seed, n as u64, seed_index as u64)
}

/// Runs one consistency cell. Enumeration is used when the model space fits
/// the budget; otherwise `Pr(M_T | y)` is computed against the models the
/// chain visited together with every single-move neighbour of `T`.
pub fn consistency_cell(
    base: &SyntheticConfig,
    n: usize,
    seed_index: usize,
    search: &SearchConfig,
    lambda: f64,
) -> ConsistencyCell {
    let seed = cell_seed(base.seed, n, seed_index);
    let config = SyntheticConfig { n, seed, ..base.clone() };
    let mut cell = ConsistencyCell {
        n,
        seed_index,
        seed,
        p: config.p(),
        t_size: config.true_size(),
        posterior_true: f64::NAN,
        map_is_true: false,
        map_size: 0,
        method: PosteriorMethod::Search,
        error: None,
    };
    let run = || -> Result<(f64, ModelIndex, PosteriorMethod)> {
        let syn = generate(&config)?;
        let ds = &syn.dataset;
        let prior = ModelPrior::new(lambda, ds.p(), ds.n())?;
        let scorer = ModelScorer::new(ds, &prior, MarginalKind::BetaPrime);
        let t = &syn.truth.t;
        if count_subsets_up_to(ds.p(), scorer.max_size()) <= ENUMERATION_BUDGET {
            let post = enumerate_with(&scorer, scorer.max_size(), None)?;
            return Ok((post.mass(t), post.map_model, PosteriorMethod::Enumeration));
        }
        let cfg = SearchConfig { seed: derive_seed(seed, 0x5EA2C4), ..search.clone() };
        let post = search_with(&scorer, &cfg)?;
        let mut competitors: Vec<ModelIndex> = post.log_scores.keys().cloned().collect();
        competitors.extend(neighborhood(t, ds.p()));
        competitors.sort();
        competitors.dedup();
        let pt = posterior_of_model_with(&scorer, t, &ModelIndex::empty(), competitors.iter())?;
        Ok((pt, post.map_model, PosteriorMethod::Search))
    };
    match run() {
        Ok((pt, map, method)) => {
            cell.posterior_true = pt;
            cell.map_is_true = &map == &ModelIndex::first(cell.t_size);
            cell.map_size = map.len();
            cell.method = method;
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Sweeps `n_grid × seeds_per_n` cells. Failed cells are kept with their
/// error and excluded from the per-`n` statistics.
pub fn consistency_experiment(
    base: &SyntheticConfig,
    n_grid: &[usize],
    seeds_per_n: usize,
    search: &SearchConfig,
    lambda: f64,
) -> Result<ConsistencyCurve> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid.is_empty() {
        return Err(Error::InvalidConfig(format!("n grid must be non-empty and increasing: {n_grid:?}")));
    }
    search.validate()?;
    let jobs: Vec<(usize, usize)> =
        n_grid.iter().flat_map(|&n| (0..seeds_per_n).map(move |s| (n, s))).collect();
    let cells: Vec<ConsistencyCell> =
        jobs.par_iter().map(|&(n, s)| consistency_cell(base, n, s, search, lambda)).collect();
    Ok(ConsistencyCurve::from_cells(n_grid, cells))
}

/// One member `A = T ∪ E` of an overfitted class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMember {
    pub extra: ModelIndex,
    pub log_bf: f64,
    pub log_r2_term: f64,
    pub log_gamma_term: f64,
    /// `τ y'(H_A − H_T)y`.
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverfitClass {
    pub members: Vec<ClassMember>,
    pub class_size: u128,
    pub exact: bool,
    /// Members skipped because `A` was rank deficient.
    pub skipped: usize,
}

/// Bayes factors `BF_{A:T}` over `{A ⊃ T : |A| − |T| = c}`, walked exactly
/// when the class has at most 10^5 members and sampled uniformly otherwise.
pub fn overfit_class_members(
    dataset: &Dataset,
    truth: &Truth,
    c: usize,
    samples: usize,
    seed: u64,
) -> Result<OverfitClass> {
    let t = &truth.t;
    let n = dataset.n();
    if c == 0 {
        return Err(Error::InvalidConfig("class offset c must be at least 1".into()));
    }
    if t.len() + c > dataset.max_model_size() {
        return Err(Error::Infeasible(format!(
            "|T| + c = {} exceeds the largest model size {}",
            t.len() + c,
            dataset.max_model_size()
        )));
    }
    let base = ProjectionBasis::build(dataset, t)?;
    let r2_t = base.r_squared(dataset)?;
    let outside = t.complement(dataset.p());
    let q = outside.len();
    let class_size = choose(q, c);
    let syy = dataset.total_sum_of_squares();
    let a_size = t.len() + c;

    let member = |extra: Vec<usize>, explained: f64| -> Result<ClassMember> {
        let r2_a = RSquared::new(explained / syy, a_size);
        let bf = log_bf_closed(r2_a, r2_t, n, a_size, t.len())?;
        Ok(ClassMember {
            extra: ModelIndex::new(extra)?,
            log_bf: bf.log_bf,
            log_r2_term: bf.log_r2_term,
            log_gamma_term: bf.log_gamma_term,
            xi: (explained - base.explained()) / truth.sigma2,
        })
    };

    // explained sum of squares of T ∪ extra, or None when singular
    let explained_with = |extra: &[usize]| -> Result<Option<f64>> {
        let mut b = base.clone();
        let (last, head) = extra.split_last().expect("c >= 1");
        for &k in head {
            match b.push(dataset, k) {
                Ok(()) => {}
                Err(Error::Collinear { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        match b.gain(dataset, *last) {
            Ok(g) => Ok(Some(b.explained() + g)),
            Err(Error::Collinear { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let exact = class_size <= CLASS_ENUMERATION_LIMIT;
    let extras: Vec<Vec<usize>> = if exact {
        let mut all = Vec::with_capacity(class_size as usize);
        let mut idx: Vec<usize> = (0..c).collect();
        loop {
            all.push(idx.iter().map(|&i| outside[i]).collect());
            let mut i = c;
            while i > 0 && idx[i - 1] == q - c + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..c {
                idx[j] = idx[j - 1] + 1;
            }
        }
        all
    } else {
        let mut rng = rng_from_seed(seed);
        (0..samples.max(1))
            .map(|_| {
                let mut e: Vec<usize> = index::sample(&mut rng, q, c).into_iter().map(|i| outside[i]).collect();
                e.sort_unstable();
                e
            })
            .collect()
    };
    let results: Vec<Option<ClassMember>> = extras
        .into_par_iter()
        .map(|e| match explained_with(&e)? {
            Some(ex) => member(e, ex).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    let skipped = results.iter().filter(|m| m.is_none()).count();
    let members = results.into_iter().flatten().collect();
    Ok(OverfitClass { members, class_size, exact, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitClassStat {
    pub n: usize,
    pub p: usize,
    pub t_size: usize,
    pub c: usize,
    pub class_size: u128,
    pub evaluated: usize,
    pub exact: bool,
    /// `ln Σ_{A∈M_c} BF_{A:T} π(M_A)/π(M_T)`; estimated as the class size
    /// times the sample mean when sampled.
    pub log_sum_odds: f64,
    pub sum_odds: f64,
    pub log_mean_bf: f64,
    pub mean_bf: f64,
    /// `ln C(p − |T|, c) + ln π(M_A)/π(M_T)`.
    pub log_prior_factor: f64,
    pub h_stat: f64,
}

/// Class statistics. `h_stat` is the class mean of the data-dependent factor
/// `exp(log_r2_term)` times the gamma ratio: the exact ratio below
/// `n = 500`, its regime asymptote `(|T|/n)^{c/2}` from there on.
pub fn overfit_class_stat(
    dataset: &Dataset,
    truth: &Truth,
    regime: Regime,
    c: usize,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<OverfitClassStat> {
    let class = overfit_class_members(dataset, truth, c, samples, seed)?;
    if class.members.is_empty() {
        return Err(Error::Infeasible("every member of the class is rank deficient".into()));
    }
    let n = dataset.n();
    let p = dataset.p();
    let t = truth.t.len();
    let prior = ModelPrior::new(lambda, p, n)?;
    let lpo = log_prior_odds(t + c, t, &prior);
    let m = class.members.len() as f64;
    let log_mean_bf = log_sum_exp(class.members.iter().map(|a| a.log_bf)) - m.ln();
    let log_prior_factor = ln_choose(p - t, c) + lpo;
    let log_sum_odds = if class.exact {
        log_sum_exp(class.members.iter().map(|a| a.log_bf)) + lpo
    } else {
        log_mean_bf + log_prior_factor
    };
    let h_stat = if n < H_EXACT_BELOW {
        log_mean_bf.exp()
    } else {
        let g = regime.size_fraction(n).powf(c as f64 / 2.0);
        let mean_r2 = (log_sum_exp(class.members.iter().map(|a| a.log_r2_term)) - m.ln()).exp();
        mean_r2 * g
    };
    Ok(OverfitClassStat {
        n,
        p,
        t_size: t,
        c,
        class_size: class.class_size,
        evaluated: class.members.len(),
        exact: class.exact,
        log_sum_odds,
        sum_odds: log_sum_odds.exp(),
        log_mean_bf,
        mean_bf: log_mean_bf.exp(),
        log_prior_factor,
        h_stat,
    })
}

/// Generates data from `config` and evaluates the class `M_c`. With
/// `use_assumption_iii_design` the extraneous columns follow
/// [`Design::Controlled`], otherwise `config.design` is used unchanged.
pub fn overfit_class_experiment(
    config: &SyntheticConfig,
    c: usize,
    use_assumption_iii_design: bool,
    lambda: f64,
    samples: usize,
) -> Result<OverfitClassStat> {
    let mut cfg = config.clone();
    if use_assumption_iii_design && !matches!(cfg.design, Design::Controlled { .. }) {
        cfg.design = Design::Controlled { noise: 0.1 };
    }
    if cfg.true_size() == 0 {
        return Err(Error::Infeasible("the overfitted class needs a non-empty true model".into()));
    }
    let syn = generate(&cfg)?;
    overfit_class_stat(&syn.dataset, &syn.truth, cfg.regime, c, lambda, samples, derive_seed(cfg.seed, 0xC1A55))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderfitReport {
    pub n: usize,
    pub t_size: usize,
    /// Net deficit `|T| − |A|`.
    pub c: usize,
    /// Extraneous predictors in `A`.
    pub k: usize,
    pub class_size: u128,
    pub evaluated: usize,
    pub zeta_min_hat: f64,
    pub beta_min: f64,
    /// `−(c+k) β_min² τ ζ n / 4 + (5/2) c ln n + 2 k ln n`.
    pub log_bound: f64,
    /// The bound exceeds one and says nothing.
    pub vacuous: bool,
    /// Fraction of evaluated summands above the bound.
    pub exceed_fraction: f64,
    pub median_log_summand: f64,
    pub log_class_sum: f64,
    pub class_sum_below_bound: bool,
}

/// Evaluates summands `BF_{A:T} π(M_A)/π(M_T)` over models that drop `c + k`
/// true predictors and add `k` extraneous ones, against the analytic bound.
pub fn underfit_bound_check(
    config: &SyntheticConfig,
    c: usize,
    k: usize,
    lambda: f64,
    samples: usize,
) -> Result<UnderfitReport> {
    let syn = generate(config)?;
    let ds = &syn.dataset;
    let truth = &syn.truth;
    let t = truth.t.len();
    let n = ds.n();
    if c == 0 || c + k > t {
        return Err(Error::InvalidConfig(format!("need c >= 1 and c + k <= |T| (c = {c}, k = {k}, |T| = {t})")));
    }
    let outside = truth.t.complement(ds.p());
    let class_size = choose(t, c + k).saturating_mul(choose(outside.len(), k));
    let mut rng = rng_from_seed(derive_seed(config.seed, 0x0DEF));
    let draws: Vec<ModelIndex> = (0..samples.max(1))
        .map(|_| {
            let keep: Vec<usize> = {
                let drop = index::sample(&mut rng, t, c + k).into_vec();
                (0..t).filter(|i| !drop.contains(i)).collect()
            };
            let add = index::sample(&mut rng, outside.len(), k).into_iter().map(|i| outside[i]);
            ModelIndex::new(keep.into_iter().chain(add).collect()).expect("disjoint")
        })
        .collect();
    let prior = ModelPrior::new(lambda, ds.p(), n)?;
    let r2_t = ProjectionBasis::build(ds, &truth.t)?.r_squared(ds)?;
    let lpo = log_prior_odds(t - c, t, &prior);
    let summands: Vec<f64> = draws
        .par_iter()
        .map(|a| -> Result<f64> {
            let r2_a = match ProjectionBasis::build(ds, a) {
                Ok(b) => b.r_squared(ds)?,
                Err(Error::SingularModel { .. }) => return Ok(f64::NEG_INFINITY),
                Err(e) => return Err(e),
            };
            Ok(log_bf_closed(r2_a, r2_t, n, a.len(), t)?.log_bf + lpo)
        })
        .collect::<Result<_>>()?;
    let zeta = match syn.zeta_min_hat {
        Some(z) => z,
        None => {
            let size = config.zeta_subset_size.min(ds.max_model_size()).max(1);
            estimate_zeta_min(ds, size, config.zeta_samples, derive_seed(config.seed, 7))?.value
        }
    };
    let beta_min = truth.t.iter().map(|j| truth.beta[j].abs()).fold(f64::INFINITY, f64::min);
    let ln_n = (n as f64).ln();
    let log_bound = -((c + k) as f64) * beta_min * beta_min * zeta * n as f64 / (4.0 * truth.sigma2)
        + 2.5 * c as f64 * ln_n
        + 2.0 * k as f64 * ln_n;
    let exceed = summands.iter().filter(|&&s| s > log_bound).count();
    let log_mean = log_sum_exp(summands.iter().copied()) - (summands.len() as f64).ln();
    let log_class_sum = log_mean + (class_size as f64).ln();
    Ok(UnderfitReport {
        n,
        t_size: t,
        c,
        k,
        class_size,
        evaluated: summands.len(),
        zeta_min_hat: zeta,
        beta_min,
        log_bound,
        vacuous: log_bound > 0.0,
        exceed_fraction: exceed as f64 / summands.len() as f64,
        median_log_summand: median(&summands),
        log_class_sum,
        class_sum_below_bound: log_class_sum <= log_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_sizes() {
        assert_eq!(Regime::Power { d: 0.0 }.true_size(500), 1);
        assert_eq!(Regime::NLogN { t: 1.0 }.true_size(1000), 144);
        assert_eq!(Regime::Power { d: 0.5 }.true_size(400), 20);
        assert_eq!(Regime::Null.true_size(400), 0);
    }

    #[test]
    fn parse_round_trips() {
        for s in ["nlogn:t=1", "power:d=0.3", "null"] {
            assert_eq!(s.parse::<Regime>().unwrap().to_string(), s);
        }
        for s in ["iid", "equicorr:rho=0.3", "controlled:noise=0.1"] {
            assert_eq!(s.parse::<Design>().unwrap().to_string(), s);
        }
        assert_eq!("20/zeta".parse::<SignalStrength>().unwrap(), SignalStrength::OverZetaMin(20.0));
        assert_eq!("auto".parse::<C1Target>().unwrap(), C1Target::Auto);
        assert!("power:d=1.5".parse::<Regime>().is_err());
        assert!("weird".parse::<Design>().is_err());
    }

    #[test]
    fn neighborhood_size() {
        let t = ModelIndex::first(2);
        // 3 adds, 2 drops, 2 * 3 swaps
        assert_eq!(neighborhood(&t, 5).len(), 11);
    }
}
