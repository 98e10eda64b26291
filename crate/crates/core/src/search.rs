//! Posterior over the model space: exact enumeration for small `p` and a
//! Metropolis-Hastings chain with add/drop/swap moves for larger `p`.
//!
//! Every model is scored by `ln BF_{A:0} + ln π(M_A)`. Scores against any
//! other reference differ by a constant, so normalized masses do not depend
//! on the reference.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{MarginalKind, ModelPrior, ModelSpacePrior};
use crate::error::{Error, Result};
use crate::linalg::{Dataset, ModelIndex, ProjectionBasis, RSquared};
use crate::numeric::{count_subsets_up_to, log_sum_exp};
use crate::seeding::{derive_seed, rng_from_seed};

/// Largest model space [`enumerate_posterior`] will walk.
pub const ENUMERATION_BUDGET: u128 = 1 << 24;
/// Default bound on cached model scores per chain.
pub const CACHE_CAPACITY: usize = 1 << 20;

/// Scores models against the intercept-only model.
#[derive(Debug, Clone)]
pub struct ModelScorer<'a> {
    dataset: &'a Dataset,
    prior: ModelSpacePrior,
    marginal: MarginalKind,
}

impl<'a> ModelScorer<'a> {
    pub fn new(dataset: &'a Dataset, prior: impl Into<ModelSpacePrior>, marginal: MarginalKind) -> Self {
        Self { dataset, prior: prior.into(), marginal }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn prior(&self) -> &ModelSpacePrior {
        &self.prior
    }

    pub fn marginal(&self) -> MarginalKind {
        self.marginal
    }

    /// Largest size with positive prior mass and a defined Bayes factor.
    pub fn max_size(&self) -> usize {
        self.prior.s_max().min(self.dataset.max_model_size()).min(self.dataset.p())
    }

    /// Score of a model of the given size with the given R².
    pub fn score_r2(&self, r2: RSquared, size: usize) -> Result<f64> {
        if size > self.max_size() {
            return Ok(f64::NEG_INFINITY);
        }
        let lp = self.prior.log_model_prior(size);
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        Ok(self.marginal.log_bf_null(r2, self.dataset.n(), size)? + lp)
    }

    /// Score of a model; rank-deficient models score `-inf`.
    pub fn score(&self, model: &ModelIndex) -> Result<f64> {
        if model.len() > self.max_size() {
            return Ok(f64::NEG_INFINITY);
        }
        match ProjectionBasis::build(self.dataset, model) {
            Ok(basis) => self.score_r2(basis.r_squared(self.dataset)?, model.len()),
            Err(Error::SingularModel { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }
}

impl From<ModelPrior> for ModelSpacePrior {
    fn from(p: ModelPrior) -> Self {
        ModelSpacePrior::Poisson(p)
    }
}

impl From<&ModelPrior> for ModelSpacePrior {
    fn from(p: &ModelPrior) -> Self {
        ModelSpacePrior::Poisson(p.clone())
    }
}

/// Posterior masses and their summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    /// Exact masses under enumeration, visit frequencies under search.
    pub model_masses: BTreeMap<ModelIndex, f64>,
    /// Unnormalized log posterior of every model in `model_masses`.
    pub log_scores: BTreeMap<ModelIndex, f64>,
    pub inclusion_probs: Vec<f64>,
    pub map_model: ModelIndex,
    pub log_normalizer: f64,
    pub visited_count: usize,
    pub exact: bool,
    pub acceptance_rate: Option<f64>,
    pub warnings: Vec<String>,
}

impl PosteriorSummary {
    fn from_masses(
        p: usize,
        model_masses: BTreeMap<ModelIndex, f64>,
        log_scores: BTreeMap<ModelIndex, f64>,
        log_normalizer: f64,
        exact: bool,
    ) -> Self {
        let mut inclusion_probs = vec![0.0; p];
        let mut map_model = ModelIndex::empty();
        let mut best = f64::NEG_INFINITY;
        // BTreeMap order is size-then-lexicographic, so the first maximum wins ties
        for (m, &w) in &model_masses {
            for j in m.iter() {
                inclusion_probs[j] += w;
            }
            if w > best {
                best = w;
                map_model = m.clone();
            }
        }
        let visited_count = model_masses.len();
        Self {
            model_masses,
            log_scores,
            inclusion_probs,
            map_model,
            log_normalizer,
            visited_count,
            exact,
            acceptance_rate: None,
            warnings: Vec::new(),
        }
    }

    /// Mass of a model, zero when absent.
    pub fn mass(&self, model: &ModelIndex) -> f64 {
        self.model_masses.get(model).copied().unwrap_or(0.0)
    }

    /// Masses from the exact scores renormalized over the listed models.
    ///
    /// Under search this is the posterior restricted to visited models; under
    /// enumeration it equals `model_masses`.
    pub fn renormalized_masses(&self) -> BTreeMap<ModelIndex, f64> {
        let lse = log_sum_exp(self.log_scores.values().copied());
        self.log_scores.iter().map(|(m, s)| (m.clone(), (s - lse).exp())).collect()
    }
}

/// Total-variation distance `½ Σ |a − b|` over the union of supports.
pub fn tv_distance(a: &BTreeMap<ModelIndex, f64>, b: &BTreeMap<ModelIndex, f64>) -> f64 {
    let mut total = 0.0;
    for (m, &wa) in a {
        total += (wa - b.get(m).copied().unwrap_or(0.0)).abs();
    }
    for (m, &wb) in b {
        if !a.contains_key(m) {
            total += wb.abs();
        }
    }
    0.5 * total
}

fn normalize(
    p: usize,
    scored: Vec<(ModelIndex, f64)>,
    reference_score: f64,
) -> Result<PosteriorSummary> {
    let scored: Vec<(ModelIndex, f64)> =
        scored.into_iter().filter(|(_, s)| *s > f64::NEG_INFINITY).map(|(m, s)| (m, s - reference_score)).collect();
    let saturated: Vec<&ModelIndex> =
        scored.iter().filter(|(_, s)| *s == f64::INFINITY).map(|(m, _)| m).collect();
    let log_scores: BTreeMap<ModelIndex, f64> = scored.iter().cloned().collect();
    if saturated.len() > 1 {
        return Err(Error::IndeterminateComparison);
    }
    if let Some(&winner) = saturated.first() {
        let masses = scored
            .iter()
            .map(|(m, _)| (m.clone(), if m == winner { 1.0 } else { 0.0 }))
            .collect();
        return Ok(PosteriorSummary::from_masses(p, masses, log_scores, f64::INFINITY, true));
    }
    let lse = log_sum_exp(scored.iter().map(|(_, s)| *s));
    let masses = scored.iter().map(|(m, s)| (m.clone(), (s - lse).exp())).collect();
    Ok(PosteriorSummary::from_masses(p, masses, log_scores, lse, true))
}

fn enumerate_from(
    scorer: &ModelScorer<'_>,
    basis: &ProjectionBasis,
    cap: usize,
    out: &mut Vec<(ModelIndex, f64)>,
) -> Result<()> {
    if basis.rank() >= cap {
        return Ok(());
    }
    let ds = scorer.dataset();
    let start = basis.columns().last().map_or(0, |&j| j + 1);
    for k in start..ds.p() {
        let next = match basis.with_column(ds, k) {
            Ok(b) => b,
            // every superset is singular as well
            Err(Error::Collinear { .. }) => continue,
            Err(e) => return Err(e),
        };
        let score = scorer.score_r2(next.r_squared(ds)?, next.rank())?;
        out.push((next.model(), score));
        enumerate_from(scorer, &next, cap, out)?;
    }
    Ok(())
}

/// Exact posterior over all models of size at most `size_cap`.
///
/// `reference` only shifts the scores before normalization.
pub fn enumerate_with(
    scorer: &ModelScorer<'_>,
    size_cap: usize,
    reference: Option<&ModelIndex>,
) -> Result<PosteriorSummary> {
    let ds = scorer.dataset();
    let p = ds.p();
    let cap = size_cap.min(scorer.max_size());
    let required = count_subsets_up_to(p, cap);
    if required > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { required, budget: ENUMERATION_BUDGET });
    }
    let empty = ProjectionBasis::empty(ds);
    let null_score = scorer.score_r2(RSquared::null(), 0)?;
    let branches: Vec<Vec<(ModelIndex, f64)>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            if cap == 0 {
                return Ok(out);
            }
            let basis = match empty.with_column(ds, j) {
                Ok(b) => b,
                Err(Error::Collinear { .. }) => return Ok(out),
                Err(e) => return Err(e),
            };
            out.push((basis.model(), scorer.score_r2(basis.r_squared(ds)?, 1)?));
            enumerate_from(scorer, &basis, cap, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut scored = vec![(ModelIndex::empty(), null_score)];
    scored.extend(branches.into_iter().flatten());
    let reference_score = match reference {
        None => 0.0,
        Some(r) => {
            let s = scored
                .iter()
                .find(|(m, _)| m == r)
                .map(|(_, s)| *s)
                .ok_or_else(|| Error::InvalidModel(format!("reference {r} is not in the enumerated space")))?;
            if !s.is_finite() {
                return Err(Error::InvalidModel(format!("reference {r} has a non-finite score")));
            }
            s
        }
    };
    normalize(p, scored, reference_score)
}

/// Exact posterior under the Beta-prime marginal and a truncated Poisson prior.
pub fn enumerate_posterior(dataset: &Dataset, prior: &ModelPrior, size_cap: usize) -> Result<PosteriorSummary> {
    enumerate_with(&ModelScorer::new(dataset, prior, MarginalKind::BetaPrime), size_cap, None)
}

/// `Pr(A | y)` restricted to `{A} ∪ competitors`; copies of `A` among the
/// competitors are ignored.
pub fn posterior_of_model_with<'m>(
    scorer: &ModelScorer<'_>,
    a: &ModelIndex,
    reference: &ModelIndex,
    competitors: impl IntoIterator<Item = &'m ModelIndex>,
) -> Result<f64> {
    let base = scorer.score(reference)?;
    if !base.is_finite() {
        return Err(Error::InvalidModel(format!("reference {reference} has a non-finite score")));
    }
    let sa = scorer.score(a)? - base;
    let mut odds = Vec::new();
    for m in competitors {
        if m == a {
            continue;
        }
        odds.push(scorer.score(m)? - base - sa);
    }
    if odds.is_empty() {
        return Ok(1.0);
    }
    let lo = log_sum_exp(odds);
    // 1 / (1 + e^{lo})
    Ok(if lo > 0.0 { (-lo).exp() / (1.0 + (-lo).exp()) } else { 1.0 / (1.0 + lo.exp()) })
}

pub fn posterior_of_model<'m>(
    dataset: &Dataset,
    prior: &ModelPrior,
    a: &ModelIndex,
    reference: &ModelIndex,
    competitors: impl IntoIterator<Item = &'m ModelIndex>,
) -> Result<f64> {
    let scorer = ModelScorer::new(dataset, prior, MarginalKind::BetaPrime);
    posterior_of_model_with(&scorer, a, reference, competitors)
}

/// Proposal weights for add, drop and swap moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveProbabilities {
    pub add: f64,
    pub drop: f64,
    pub swap: f64,
}

impl Default for MoveProbabilities {
    fn default() -> Self {
        Self { add: 0.4, drop: 0.4, swap: 0.2 }
    }
}

impl MoveProbabilities {
    pub fn validate(&self) -> Result<()> {
        let all = [self.add, self.drop, self.swap];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || ((all.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("move probabilities must form a simplex: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub move_probabilities: MoveProbabilities,
    pub seed: u64,
    /// Starting model; the empty model when absent.
    pub reference_model: Option<ModelIndex>,
    pub chains: usize,
    /// Caps model size below the prior's truncation point.
    pub size_cap: Option<usize>,
    pub cache_capacity: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            burn_in: 10_000,
            move_probabilities: MoveProbabilities::default(),
            seed: 0,
            reference_model: None,
            chains: 1,
            size_cap: None,
            cache_capacity: CACHE_CAPACITY,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.move_probabilities.validate()?;
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.chains == 0 || self.cache_capacity == 0 {
            return Err(Error::InvalidConfig("chains and cache capacity must be positive".into()));
        }
        Ok(())
    }
}

/// Score cache with least-recently-used eviction.
#[derive(Debug)]
struct ScoreCache {
    capacity: usize,
    tick: u64,
    map: HashMap<ModelIndex, (f64, u64)>,
    order: BTreeMap<u64, ModelIndex>,
}

impl ScoreCache {
    fn new(capacity: usize) -> Self {
        Self { capacity, tick: 0, map: HashMap::new(), order: BTreeMap::new() }
    }

    fn get(&mut self, m: &ModelIndex) -> Option<f64> {
        let (v, t) = self.map.get_mut(m)?;
        self.order.remove(t);
        self.tick += 1;
        *t = self.tick;
        self.order.insert(self.tick, m.clone());
        Some(*v)
    }

    fn insert(&mut self, m: ModelIndex, v: f64) {
        if self.map.len() >= self.capacity {
            if let Some((_, old)) = self.order.pop_first() {
                self.map.remove(&old);
            }
        }
        self.tick += 1;
        self.order.insert(self.tick, m.clone());
        self.map.insert(m, (v, self.tick));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Add,
    Drop,
    Swap,
}

/// One Metropolis-Hastings chain over the model space.
pub struct Chain<'s, 'd> {
    scorer: &'s ModelScorer<'d>,
    moves: MoveProbabilities,
    cap: usize,
    state: ModelIndex,
    state_score: f64,
    cache: ScoreCache,
    steps: u64,
    accepted: u64,
    rejections_in_row: usize,
}

impl<'s, 'd> Chain<'s, 'd> {
    pub fn new(
        scorer: &'s ModelScorer<'d>,
        moves: MoveProbabilities,
        size_cap: Option<usize>,
        start: ModelIndex,
        cache_capacity: usize,
    ) -> Result<Self> {
        moves.validate()?;
        let cap = size_cap.unwrap_or(usize::MAX).min(scorer.max_size());
        if start.len() > cap {
            return Err(Error::InvalidModel(format!("starting model {start} exceeds the size cap {cap}")));
        }
        start.validate(scorer.dataset())?;
        let mut chain = Self {
            scorer,
            moves,
            cap,
            state: ModelIndex::empty(),
            state_score: 0.0,
            cache: ScoreCache::new(cache_capacity),
            steps: 0,
            accepted: 0,
            rejections_in_row: 0,
        };
        chain.state_score = chain.score(&start)?;
        chain.state = start;
        Ok(chain)
    }

    pub fn state(&self) -> &ModelIndex {
        &self.state
    }

    pub fn state_score(&self) -> f64 {
        self.state_score
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 { 0.0 } else { self.accepted as f64 / self.steps as f64 }
    }

    pub fn rejections_in_row(&self) -> usize {
        self.rejections_in_row
    }

    fn score(&mut self, m: &ModelIndex) -> Result<f64> {
        if let Some(v) = self.cache.get(m) {
            return Ok(v);
        }
        let v = self.scorer.score(m)?;
        self.cache.insert(m.clone(), v);
        Ok(v)
    }

    fn p(&self) -> usize {
        self.scorer.dataset().p()
    }

    fn weight(&self, mv: Move, k: usize) -> f64 {
        let available = match mv {
            Move::Add => k < self.cap && k < self.p(),
            Move::Drop => k > 0,
            Move::Swap => k > 0 && k < self.p(),
        };
        if !available {
            return 0.0;
        }
        match mv {
            Move::Add => self.moves.add,
            Move::Drop => self.moves.drop,
            Move::Swap => self.moves.swap,
        }
    }

    fn total_weight(&self, k: usize) -> f64 {
        [Move::Add, Move::Drop, Move::Swap].iter().map(|&m| self.weight(m, k)).sum()
    }

    /// Log of `q(A' → A) / q(A → A')`.
    fn log_hastings(&self, mv: Move, k: usize) -> f64 {
        let p = self.p() as f64;
        let kf = k as f64;
        match mv {
            Move::Add => {
                let fwd = (self.weight(Move::Add, k) / self.total_weight(k)).ln() - (p - kf).ln();
                let rev = (self.weight(Move::Drop, k + 1) / self.total_weight(k + 1)).ln() - (kf + 1.0).ln();
                rev - fwd
            }
            Move::Drop => {
                let fwd = (self.weight(Move::Drop, k) / self.total_weight(k)).ln() - kf.ln();
                let rev = (self.weight(Move::Add, k - 1) / self.total_weight(k - 1)).ln() - (p - kf + 1.0).ln();
                rev - fwd
            }
            Move::Swap => 0.0,
        }
    }

    fn log_accept(&mut self, mv: Move, proposal: &ModelIndex) -> Result<f64> {
        let k = self.state.len();
        let s = self.score(proposal)?;
        if s == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if self.state_score == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok((s - self.state_score + self.log_hastings(mv, k)).min(0.0))
    }

    /// `r`-th index (0-based) not in the current model.
    fn nth_outside(&self, mut r: usize) -> usize {
        for &j in self.state.as_slice() {
            if j <= r {
                r += 1;
            } else {
                break;
            }
        }
        r
    }

    /// Advances one step; returns whether the proposal was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        let k = self.state.len();
        let p = self.p();
        let total = self.total_weight(k);
        self.steps += 1;
        if total <= 0.0 {
            self.rejections_in_row += 1;
            return Ok(false);
        }
        let u = rng.random::<f64>() * total;
        let wa = self.weight(Move::Add, k);
        let wd = self.weight(Move::Drop, k);
        let mv = if u < wa {
            Move::Add
        } else if u < wa + wd {
            Move::Drop
        } else {
            Move::Swap
        };
        let proposal = match mv {
            Move::Add => self.state.with(self.nth_outside(rng.random_range(0..p - k))),
            Move::Drop => self.state.without(self.state.as_slice()[rng.random_range(0..k)]),
            Move::Swap => {
                let out = self.state.as_slice()[rng.random_range(0..k)];
                let inn = self.nth_outside(rng.random_range(0..p - k));
                self.state.without(out).with(inn)
            }
        };
        let log_a = self.log_accept(mv, &proposal)?;
        let accept = log_a >= 0.0 || rng.random::<f64>().ln() < log_a;
        if accept {
            self.state_score = self.score(&proposal)?;
            self.state = proposal;
            self.accepted += 1;
            self.rejections_in_row = 0;
        } else {
            self.rejections_in_row += 1;
        }
        Ok(accept)
    }

    /// Exact transition probabilities out of the current state, including
    /// the probability of staying put.
    pub fn kernel_row(&mut self) -> Result<BTreeMap<ModelIndex, f64>> {
        let k = self.state.len();
        let p = self.p();
        let total = self.total_weight(k);
        let mut row: BTreeMap<ModelIndex, f64> = BTreeMap::new();
        let current = self.state.clone();
        let outside = current.complement(p);
        let mut proposals = Vec::new();
        if self.weight(Move::Add, k) > 0.0 {
            let q = self.weight(Move::Add, k) / total / (p - k) as f64;
            proposals.extend(outside.iter().map(|&j| (Move::Add, current.with(j), q)));
        }
        if self.weight(Move::Drop, k) > 0.0 {
            let q = self.weight(Move::Drop, k) / total / k as f64;
            proposals.extend(current.iter().map(|i| (Move::Drop, current.without(i), q)));
        }
        if self.weight(Move::Swap, k) > 0.0 {
            let q = self.weight(Move::Swap, k) / total / (k * (p - k)) as f64;
            for i in current.iter() {
                for &j in &outside {
                    proposals.push((Move::Swap, current.without(i).with(j), q));
                }
            }
        }
        let mut moved = 0.0;
        for (mv, prop, q) in proposals {
            let a = self.log_accept(mv, &prop)?.exp();
            *row.entry(prop).or_insert(0.0) += q * a;
            moved += q * a;
        }
        *row.entry(current).or_insert(0.0) += 1.0 - moved;
        Ok(row)
    }
}

struct ChainRun {
    counts: BTreeMap<ModelIndex, u64>,
    scores: BTreeMap<ModelIndex, f64>,
    acceptance: f64,
    warning: Option<String>,
}

fn run_chain(scorer: &ModelScorer<'_>, config: &SearchConfig, chain_id: usize, seed: u64) -> Result<ChainRun> {
    let start = config.reference_model.clone().unwrap_or_default();
    let mut chain = Chain::new(scorer, config.move_probabilities, config.size_cap, start, config.cache_capacity)?;
    let mut rng = rng_from_seed(seed);
    let stuck_after = 10 * scorer.dataset().p();
    let mut counts = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut warning = None;
    for it in 0..config.iterations {
        chain.step(&mut rng)?;
        if warning.is_none() && chain.rejections_in_row() >= stuck_after {
            warning = Some(format!(
                "chain {chain_id} rejected {stuck_after} consecutive proposals at {} (iteration {it})",
                chain.state()
            ));
        }
        if it >= config.burn_in {
            *counts.entry(chain.state().clone()).or_insert(0u64) += 1;
            if !scores.contains_key(chain.state()) {
                scores.insert(chain.state().clone(), chain.state_score());
            }
        }
    }
    Ok(ChainRun { counts, scores, acceptance: chain.acceptance_rate(), warning })
}

/// Posterior estimate from post-burn-in visit frequencies of one or more
/// chains. A single chain uses `config.seed` directly; with several chains
/// chain `c` uses a seed derived from `(seed, c)` and the visit counts are
/// pooled.
pub fn search_with(scorer: &ModelScorer<'_>, config: &SearchConfig) -> Result<PosteriorSummary> {
    config.validate()?;
    let p = scorer.dataset().p();
    if p < 2 {
        return Err(Error::InvalidConfig(format!("stochastic search needs p >= 2, got {p}")));
    }
    let runs: Vec<ChainRun> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            let seed = if config.chains == 1 { config.seed } else { derive_seed(config.seed, c as u64) };
            run_chain(scorer, config, c, seed)
        })
        .collect::<Result<_>>()?;
    let mut counts: BTreeMap<ModelIndex, u64> = BTreeMap::new();
    let mut log_scores = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut acceptance = 0.0;
    for run in runs.iter() {
        for (m, c) in &run.counts {
            *counts.entry(m.clone()).or_insert(0) += c;
        }
        for (m, s) in &run.scores {
            log_scores.entry(m.clone()).or_insert(*s);
        }
        warnings.extend(run.warning.clone());
        acceptance += run.acceptance / runs.len() as f64;
    }
    let total: u64 = counts.values().sum();
    let masses = counts.into_iter().map(|(m, c)| (m, c as f64 / total as f64)).collect();
    let lse = log_sum_exp(log_scores.values().copied());
    let mut summary = PosteriorSummary::from_masses(p, masses, log_scores, lse, false);
    summary.acceptance_rate = Some(acceptance);
    summary.warnings = warnings;
    Ok(summary)
}

/// Metropolis-Hastings search under the Beta-prime marginal and a truncated
/// Poisson prior.
pub fn stochastic_search(dataset: &Dataset, prior: &ModelPrior, config: &SearchConfig) -> Result<PosteriorSummary> {
    search_with(&ModelScorer::new(dataset, prior, MarginalKind::BetaPrime), config)
}
