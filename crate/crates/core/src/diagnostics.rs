//! Checks of the design and signal conditions under which selection is
//! consistent: column scaling, the eigenvalue floor `ζ_min`, the projected
//! noise statistic `V(Z)` and the minimum-signal condition.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::Truth;
use crate::linalg::{dot, extreme_eigenvalues, Dataset, ModelIndex, ProjectionBasis};
use crate::numeric::{choose, count_subsets_up_to, mean_and_stderr};
use crate::seeding::{derive_seed, rng_from_seed};

/// Relative tolerance on `‖X_i‖² = n`.
pub const STANDARDIZATION_TOL: f64 = 1e-8;
/// Exhaustive search limit for both the eigenvalue floor and `V(Z)`.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;
/// Supersets drawn when the `V(Z)` index set is too large to walk.
pub const V_SAMPLED_SUPERSETS: usize = 256;
/// Leading constant of the projected-noise bound.
pub const DEFAULT_V_CONSTANT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationCheck {
    pub ok: bool,
    /// `‖X_i‖² / n` per column.
    pub norm_ratios: Vec<f64>,
}

pub fn check_standardization_matrix(x: &DMatrix<f64>) -> StandardizationCheck {
    let n = x.nrows() as f64;
    let norm_ratios: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / n).collect();
    let ok = norm_ratios.iter().all(|r| (r - 1.0).abs() <= STANDARDIZATION_TOL);
    StandardizationCheck { ok, norm_ratios }
}

pub fn check_standardization(dataset: &Dataset) -> StandardizationCheck {
    check_standardization_matrix(dataset.x())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaEstimate {
    pub value: f64,
    /// False when subsets were sampled: the value is then an upper bound on
    /// the true floor.
    pub exhaustive: bool,
    pub subsets: usize,
    pub subset_size: usize,
}

fn combinations(p: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..s).collect();
    loop {
        out.push(c.clone());
        let mut i = s;
        while i > 0 && c[i - 1] == p - s + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        c[i - 1] += 1;
        for j in i..s {
            c[j] = c[j - 1] + 1;
        }
    }
}

fn subset_min_eigen(dataset: &Dataset, cols: &[usize]) -> f64 {
    let n = dataset.n() as f64;
    let s = cols.len();
    let mut g = DMatrix::zeros(s, s);
    for a in 0..s {
        for b in a..s {
            let v = dot(dataset.centered_column(cols[a]), dataset.centered_column(cols[b])) / n;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    extreme_eigenvalues(&g).0.max(0.0)
}

/// Floor of the smallest eigenvalue of `(1/n) X_A'X_A` over models with at
/// most `max_subset_size` columns.
///
/// By eigenvalue interlacing the floor over sizes `≤ s` is attained at size
/// `s`, so only subsets of exactly that size are evaluated. They are walked
/// exhaustively when `Σ_{j≤s} C(p, j) ≤ 10^5` and sampled otherwise.
pub fn estimate_zeta_min(dataset: &Dataset, max_subset_size: usize, samples: usize, seed: u64) -> Result<ZetaEstimate> {
    let p = dataset.p();
    let s = max_subset_size;
    if s == 0 || s > dataset.max_model_size() {
        return Err(Error::InvalidConfig(format!(
            "subset size must lie in 1..={}, got {s}",
            dataset.max_model_size()
        )));
    }
    let exhaustive = count_subsets_up_to(p, s) <= EXHAUSTIVE_LIMIT;
    let subsets: Vec<Vec<usize>> = if exhaustive {
        combinations(p, s)
    } else {
        if samples == 0 {
            return Err(Error::InvalidConfig("need at least one sampled subset".into()));
        }
        let mut rng = rng_from_seed(seed);
        (0..samples).map(|_| index::sample(&mut rng, p, s).into_vec()).collect()
    };
    let value = subsets
        .par_iter()
        .map(|c| subset_min_eigen(dataset, c))
        .reduce(|| f64::INFINITY, f64::min);
    Ok(ZetaEstimate { value, exhaustive, subsets: subsets.len(), subset_size: s })
}

/// The supersets `B ⊇ T` over which `V(Z)` maximizes, with their bases.
#[derive(Debug, Clone)]
pub struct VSupersets {
    bases: Vec<ProjectionBasis>,
    exact: bool,
    pairs: u128,
}

fn push_ignoring_collinear(basis: &mut ProjectionBasis, dataset: &Dataset, k: usize) -> Result<()> {
    match basis.push(dataset, k) {
        Ok(()) | Err(Error::Collinear { .. }) => Ok(()),
        Err(e) => Err(e),
    }
}

impl VSupersets {
    /// All `B ⊇ T` with `|B| ≤ |T| + superset_cap` when the number of
    /// `(B, k)` pairs is at most 10^5, otherwise `V_SAMPLED_SUPERSETS`
    /// supersets drawn with probability proportional to their pair count.
    pub fn new(dataset: &Dataset, t: &ModelIndex, superset_cap: usize, seed: u64) -> Result<Self> {
        t.validate(dataset)?;
        let p = dataset.p();
        let outside = t.complement(p);
        let q = outside.len();
        let cap = superset_cap.min(dataset.max_model_size().saturating_sub(t.len())).min(q);
        let weights: Vec<u128> = (0..=cap).map(|j| choose(q, j).saturating_mul((q - j) as u128)).collect();
        let pairs = weights.iter().fold(0u128, |a, &w| a.saturating_add(w));
        let mut base = ProjectionBasis::empty(dataset);
        for j in t.iter() {
            push_ignoring_collinear(&mut base, dataset, j)?;
        }
        let exact = pairs <= EXHAUSTIVE_LIMIT;
        let mut bases = Vec::new();
        if exact {
            let mut stack = vec![(base, 0usize, 0usize)];
            while let Some((b, start, depth)) = stack.pop() {
                if depth < cap {
                    for (i, &k) in outside.iter().enumerate().skip(start) {
                        let mut next = b.clone();
                        push_ignoring_collinear(&mut next, dataset, k)?;
                        stack.push((next, i + 1, depth + 1));
                    }
                }
                bases.push(b);
            }
        } else {
            let mut rng = rng_from_seed(seed);
            let total = pairs as f64;
            for _ in 0..V_SAMPLED_SUPERSETS {
                let mut u = rng.random::<f64>() * total;
                let mut j = cap;
                for (size, &w) in weights.iter().enumerate() {
                    if u < w as f64 {
                        j = size;
                        break;
                    }
                    u -= w as f64;
                }
                let mut b = base.clone();
                for r in index::sample(&mut rng, q, j).into_vec() {
                    push_ignoring_collinear(&mut b, dataset, outside[r])?;
                }
                bases.push(b);
            }
        }
        Ok(Self { bases, exact, pairs })
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Number of `(B, k)` pairs in the full index set.
    pub fn pairs(&self) -> u128 {
        self.pairs
    }

    /// `max_B max_{k ∉ B} |⟨(I − H_B) x_k, z⟩| / √n`.
    pub fn statistic(&self, dataset: &Dataset, z: &[f64]) -> Result<f64> {
        let n = dataset.n();
        if z.len() != n {
            return Err(Error::DimensionMismatch(format!("z has length {}, expected {n}", z.len())));
        }
        let zbar = z.iter().sum::<f64>() / n as f64;
        let zc: Vec<f64> = z.iter().map(|v| v - zbar).collect();
        let sqrt_n = (n as f64).sqrt();
        let mut best = 0.0f64;
        for b in &self.bases {
            let mut r = zc.clone();
            b.residualize(&mut r);
            for k in 0..dataset.p() {
                if b.columns().contains(&k) {
                    continue;
                }
                // (I − H_B) is symmetric, so ⟨(I − H_B)x_k, z⟩ = ⟨x_k, (I − H_B)z⟩
                best = best.max(dot(dataset.centered_column(k), &r).abs() / sqrt_n);
            }
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VStatistic {
    pub value: f64,
    /// False when supersets were sampled; the value is then a lower bound.
    pub exact: bool,
}

pub fn v_statistic(dataset: &Dataset, t: &ModelIndex, z: &[f64], superset_cap: usize, seed: u64) -> Result<VStatistic> {
    let sets = VSupersets::new(dataset, t, superset_cap, seed)?;
    Ok(VStatistic { value: sets.statistic(dataset, z)?, exact: sets.is_exact() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VExpectation {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
    pub exact: bool,
}

/// Monte Carlo estimate of `E[V(Z)]` for `Z ~ N(0, I_n)`. Draw `i` uses a
/// seed derived from `(seed, i)`, so the result does not depend on the
/// number of worker threads.
pub fn estimate_v_expectation(
    dataset: &Dataset,
    t: &ModelIndex,
    mc_draws: usize,
    superset_cap: usize,
    seed: u64,
) -> Result<VExpectation> {
    if mc_draws < 100 {
        return Err(Error::InsufficientSamples { needed: 100, have: mc_draws });
    }
    let sets = VSupersets::new(dataset, t, superset_cap, derive_seed(seed, u64::MAX))?;
    let n = dataset.n();
    let values: Vec<f64> = (0..mc_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            sets.statistic(dataset, &z)
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_and_stderr(&values);
    Ok(VExpectation { mean, stderr, draws: mc_draws, exact: sets.is_exact() })
}

/// Right-hand side of the projected-noise condition,
/// `constant · √(ζ_min · ln ln n / 4)`.
pub fn v_bound(zeta_min: f64, n: usize, constant: f64) -> f64 {
    constant * (zeta_min * (n as f64).ln().ln() / 4.0).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalVerdict {
    /// Noise precision `1/σ²`.
    pub tau: f64,
    pub beta_min: f64,
    /// `|T| · τ · β_min²`.
    pub c2_implied: f64,
    /// `10 / ζ_min`.
    pub threshold: f64,
    pub holds: bool,
}

/// Minimum-signal condition `|T| τ β_min² > 10 / ζ_min`.
pub fn check_signal_condition(beta_t: &[f64], sigma2: f64, t_size: usize, zeta_min: f64) -> Result<SignalVerdict> {
    if !(sigma2 > 0.0) || !(zeta_min > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "need sigma2 > 0 and zeta_min > 0 (got {sigma2}, {zeta_min})"
        )));
    }
    let tau = 1.0 / sigma2;
    let beta_min = beta_t.iter().map(|b| b.abs()).fold(f64::INFINITY, f64::min);
    let beta_min = if beta_min.is_finite() { beta_min } else { 0.0 };
    let c2_implied = t_size as f64 * tau * beta_min * beta_min;
    let threshold = 10.0 / zeta_min;
    Ok(SignalVerdict { tau, beta_min, c2_implied, threshold, holds: c2_implied > threshold })
}

/// `X_T β_T` on centered columns.
pub fn signal_vector(dataset: &Dataset, truth: &Truth) -> Result<DVector<f64>> {
    if truth.beta.len() != dataset.p() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} coefficients, design has {} columns",
            truth.beta.len(),
            dataset.p()
        )));
    }
    Ok(dataset.centered_x() * DVector::from_column_slice(&truth.beta))
}

/// `‖X_T β_T‖² / (n σ²)`.
pub fn c1_hat(dataset: &Dataset, truth: &Truth) -> Result<f64> {
    let mu = signal_vector(dataset, truth)?;
    Ok(mu.norm_squared() / (dataset.n() as f64 * truth.sigma2))
}

/// Noncentrality `τ ‖(I − H_A) X_T β_T‖²` lost by fitting `A`.
pub fn noncentrality(dataset: &Dataset, truth: &Truth, a: &ModelIndex) -> Result<f64> {
    let mu = signal_vector(dataset, truth)?;
    let mut r = mu.as_slice().to_vec();
    ProjectionBasis::build(dataset, a)?.residualize(&mut r);
    Ok(dot(&r, &r) / truth.sigma2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub zeta_subset_size: usize,
    pub zeta_samples: usize,
    pub mc_draws: usize,
    pub superset_cap: usize,
    pub v_constant: f64,
    pub seed: u64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            zeta_subset_size: 6,
            zeta_samples: 1000,
            mc_draws: 1000,
            superset_cap: 2,
            v_constant: DEFAULT_V_CONSTANT,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub p: usize,
    pub standardization_ok: bool,
    pub max_norm_ratio_deviation: f64,
    pub zeta_min_hat: f64,
    pub zeta_exhaustive: bool,
    pub zeta_subset_size: usize,
    pub v_expectation_hat: f64,
    pub v_stderr: f64,
    pub v_exact: bool,
    pub v_bound: f64,
    pub v_bound_formula: String,
    pub v_bound_holds: bool,
    pub c1_hat: Option<f64>,
    pub signal: Option<SignalVerdict>,
    pub notes: Vec<String>,
}

/// Runs every check. Violations are reported in `notes`, never as errors.
pub fn diagnose(dataset: &Dataset, truth: Option<&Truth>, opts: &DiagnoseOptions) -> Result<DiagnosticsReport> {
    let mut notes = Vec::new();
    let std = check_standardization(dataset);
    let max_dev = std.norm_ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    if !std.ok {
        let (j, r) = std
            .norm_ratios
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
            .map(|(j, r)| (j, *r))
            .unwrap_or((0, 1.0));
        notes.push(format!("columns are not standardized: column {} has |x|^2/n = {r:.6}", j + 1));
    }

    let size = opts.zeta_subset_size.min(dataset.max_model_size()).max(1);
    let zeta = estimate_zeta_min(dataset, size, opts.zeta_samples, derive_seed(opts.seed, 1))?;
    if zeta.value <= 1e-10 {
        notes.push(format!("eigenvalue floor is zero: some model of size {size} is rank deficient"));
    }
    if !zeta.exhaustive {
        notes.push(format!(
            "eigenvalue floor sampled over {} subsets of size {size}; true floor may be lower",
            zeta.subsets
        ));
    }

    let t = truth.map(|tr| tr.t.clone()).unwrap_or_default();
    if truth.is_none() {
        notes.push("no truth supplied: V(Z) computed with T empty".into());
    }
    let v = estimate_v_expectation(dataset, &t, opts.mc_draws, opts.superset_cap, derive_seed(opts.seed, 2))?;
    let bound = v_bound(zeta.value, dataset.n(), opts.v_constant);
    let v_bound_holds = v.mean <= bound;
    if !v_bound_holds {
        notes.push(format!("projected-noise bound violated: E[V(Z)] = {:.6} > {bound:.6}", v.mean));
    }
    if !v.exact {
        notes.push("V(Z) maximized over sampled supersets; estimate is a lower bound".into());
    }

    let (c1, signal) = match truth {
        Some(tr) => {
            let c1 = c1_hat(dataset, tr)?;
            let beta_t: Vec<f64> = tr.t.iter().map(|j| tr.beta[j]).collect();
            let verdict = if zeta.value > 0.0 && !tr.t.is_empty() {
                let v = check_signal_condition(&beta_t, tr.sigma2, tr.t.len(), zeta.value)?;
                if !v.holds {
                    notes.push(format!(
                        "minimum-signal condition fails: |T| tau beta_min^2 = {:.6} <= 10/zeta_min = {:.6}",
                        v.c2_implied, v.threshold
                    ));
                }
                Some(v)
            } else {
                None
            };
            (Some(c1), verdict)
        }
        None => (None, None),
    };

    Ok(DiagnosticsReport {
        n: dataset.n(),
        p: dataset.p(),
        standardization_ok: std.ok,
        max_norm_ratio_deviation: max_dev,
        zeta_min_hat: zeta.value,
        zeta_exhaustive: zeta.exhaustive,
        zeta_subset_size: size,
        v_expectation_hat: v.mean,
        v_stderr: v.stderr,
        v_exact: v.exact,
        v_bound: bound,
        v_bound_formula: format!("{} * sqrt(zeta_min * ln(ln(n)) / 4)", opts.v_constant),
        v_bound_holds,
        c1_hat: c1,
        signal,
        notes,
    })
}
