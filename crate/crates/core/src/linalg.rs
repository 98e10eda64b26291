//! Projection-based regression quantities.
//!
//! The intercept is never carried as a column. Every dataset keeps a centered
//! copy of the design and of the response, so the intercept projection `H_1`
//! is implicit and all projections below act on centered data. With this
//! convention `H_A − H_1` is the orthogonal projection onto the span of the
//! centered columns of `X_A`.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative rank threshold: a pivot below `RANK_TOL * max column norm` is zero.
pub const RANK_TOL: f64 = 1e-8;

/// `1 − R²` at or below this value is treated as a saturated fit.
pub const SATURATION_TOL: f64 = 1e-12;

const STANDARDIZED_TOL: f64 = 1e-10;

/// Response vector and design matrix (intercept excluded).
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    xc: DMatrix<f64>,
    yc: DVector<f64>,
    col_norms: Vec<f64>,
    syy: f64,
    standardized: bool,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows but response has {} entries",
                y.len()
            )));
        }
        if n < 3 {
            return Err(Error::InvalidDataset(format!("need n >= 3 observations, got {n}")));
        }
        if p < 1 {
            return Err(Error::InvalidDataset("need at least one predictor".into()));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite design entry at row {}, column {}",
                pos % n + 1,
                pos / n + 1
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite response at row {}", i + 1)));
        }

        let mut xc = x.clone();
        for mut col in xc.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let ymean = y.mean();
        let yc = y.add_scalar(-ymean);
        let col_norms = xc.column_iter().map(|c| c.norm()).collect();
        let syy = yc.norm_squared();
        let nf = n as f64;
        let standardized = x
            .column_iter()
            .all(|c| ((c.norm_squared() - nf) / nf).abs() <= STANDARDIZED_TOL);

        Ok(Self { x, y, xc, yc, col_norms, syy, standardized })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Design with every column centered.
    pub fn centered_x(&self) -> &DMatrix<f64> {
        &self.xc
    }

    /// Response minus its mean.
    pub fn centered_y(&self) -> &DVector<f64> {
        &self.yc
    }

    /// `y'(I − H_1)y`.
    pub fn total_sum_of_squares(&self) -> f64 {
        self.syy
    }

    /// Every column satisfies `‖X_i‖² = n` to 1e-10 relative.
    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Largest model size with a well-defined R² and Beta-prime shape.
    pub fn max_model_size(&self) -> usize {
        self.p().min(self.n() - 3)
    }

    /// Same design, different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but response has {} entries",
                self.n(),
                y.len()
            )));
        }
        let ymean = y.mean();
        let yc = y.add_scalar(-ymean);
        let syy = yc.norm_squared();
        Ok(Self { y, yc, syy, ..self.clone() })
    }

    fn check_response(&self) -> Result<()> {
        let scale = self.y.norm().max(f64::MIN_POSITIVE);
        if self.syy.sqrt() <= 1e-12 * scale {
            return Err(Error::ConstantResponse);
        }
        Ok(())
    }

    pub(crate) fn centered_column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.xc.as_slice()[j * n..(j + 1) * n]
    }

    pub(crate) fn column_norm(&self, j: usize) -> f64 {
        self.col_norms[j]
    }

    fn submatrix(&self, model: &ModelIndex) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, model.len(), |i, c| self.xc[(i, model.0[c])])
    }
}

/// Center each column and rescale it to squared norm `n`.
pub fn standardize(dataset: &Dataset) -> Result<Dataset> {
    let n = dataset.n();
    let nf = n as f64;
    let mut x = dataset.centered_x().clone();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let norm = col.norm();
        let raw = dataset.x().column(j).norm();
        if norm == 0.0 || norm <= 1e-12 * raw {
            return Err(Error::ConstantColumn { index: j });
        }
        col *= nf.sqrt() / norm;
    }
    Dataset::new(x, dataset.y().clone())
}

/// A candidate model: sorted, duplicate-free column indices (0-based).
///
/// Models order by size first, then lexicographically, which is also the
/// tie-breaking order used for MAP selection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModelIndex(Vec<usize>);

impl ModelIndex {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel(format!("duplicate index in {indices:?}")));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Caller guarantees the slice is strictly increasing.
    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    /// Indices `0..k`.
    pub fn first(k: usize) -> Self {
        Self((0..k).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &ModelIndex) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    pub fn with(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&j) {
            v.insert(pos, j);
        }
        Self(v)
    }

    pub fn without(&self, j: usize) -> Self {
        Self(self.0.iter().copied().filter(|&i| i != j).collect())
    }

    pub fn union(&self, other: &ModelIndex) -> Self {
        let mut v: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn difference(&self, other: &ModelIndex) -> Self {
        Self(self.0.iter().copied().filter(|&j| !other.contains(j)).collect())
    }

    /// Indices in `0..p` not in the model.
    pub fn complement(&self, p: usize) -> Vec<usize> {
        (0..p).filter(|&j| !self.contains(j)).collect()
    }

    /// Checks the model against a dataset: indices below `p`, size at most `n − 3`.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if let Some(&last) = self.0.last() {
            if last >= dataset.p() {
                return Err(Error::InvalidModel(format!(
                    "index {} out of range for p = {}",
                    last + 1,
                    dataset.p()
                )));
            }
        }
        if self.len() > dataset.n() - 3 {
            return Err(Error::InvalidModel(format!(
                "model size {} exceeds n - 3 = {}",
                self.len(),
                dataset.n() - 3
            )));
        }
        Ok(())
    }

    /// Semicolon-joined 1-based indices; the empty model renders as "".
    pub fn to_one_based(&self) -> String {
        self.0.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(";")
    }

    pub fn parse_one_based(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let mut v = Vec::new();
        for tok in s.split(';') {
            let j: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::InvalidModel(format!("bad index '{tok}'")))?;
            if j == 0 {
                return Err(Error::InvalidModel("indices are 1-based".into()));
            }
            v.push(j - 1);
        }
        Self::new(v)
    }
}

impl Ord for ModelIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ModelIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TryFrom<Vec<usize>> for ModelIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ModelIndex> for Vec<usize> {
    fn from(m: ModelIndex) -> Self {
        m.0
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_one_based().replace(';', ","))
    }
}

/// Coefficient of determination of a model (intercept always included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSquared {
    value: f64,
    model_size: usize,
    saturated: bool,
}

impl RSquared {
    /// Clamps into `[0, 1]`; a fit within `SATURATION_TOL` of 1 is saturated.
    pub fn new(value: f64, model_size: usize) -> Self {
        let v = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
        if 1.0 - v <= SATURATION_TOL {
            Self { value: 1.0, model_size, saturated: true }
        } else {
            Self { value: v, model_size, saturated: false }
        }
    }

    /// R² of the intercept-only model.
    pub fn null() -> Self {
        Self { value: 0.0, model_size: 0, saturated: false }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn model_size(&self) -> usize {
        self.model_size
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// `ln(1 − R²)`, `-inf` when saturated.
    pub fn ln_one_minus(&self) -> f64 {
        if self.saturated {
            f64::NEG_INFINITY
        } else {
            (-self.value).ln_1p()
        }
    }
}

/// `y'(H_A − H_1)y / y'(I − H_1)y` via a column-pivoted QR of the centered `X_A`.
pub fn r_squared(dataset: &Dataset, model: &ModelIndex) -> Result<RSquared> {
    model.validate(dataset)?;
    dataset.check_response()?;
    if model.is_empty() {
        return Ok(RSquared::null());
    }
    let xa = dataset.submatrix(model);
    let max_norm = model.iter().map(|j| dataset.column_norm(j)).fold(0.0, f64::max);
    let qr = xa.col_piv_qr();
    let r = qr.r();
    let k = model.len();
    for i in 0..k {
        if r[(i, i)].abs() <= RANK_TOL * max_norm {
            return Err(Error::SingularModel { columns: model.as_slice().to_vec() });
        }
    }
    let q = qr.q();
    let coords = q.tr_mul(dataset.centered_y());
    let explained = coords.norm_squared();
    Ok(RSquared::new(explained / dataset.total_sum_of_squares(), k))
}

/// Orthonormal basis of the centered columns of a model, built one column at a
/// time by twice-iterated modified Gram-Schmidt.
///
/// Adding a column is a rank-one update of the projection
/// (`H_i − H_{i−1} = r r' / r'r` with `r = (I − H_{i−1}) x_i`), so the R² of
/// `A ∪ {k}` costs `O(n |A|)` once the basis of `A` exists.
#[derive(Debug, Clone)]
pub struct ProjectionBasis {
    n: usize,
    columns: Vec<usize>,
    q: Vec<f64>,
    y_coords: Vec<f64>,
    max_norm: f64,
}

impl ProjectionBasis {
    pub fn empty(dataset: &Dataset) -> Self {
        Self { n: dataset.n(), columns: Vec::new(), q: Vec::new(), y_coords: Vec::new(), max_norm: 0.0 }
    }

    /// Basis for `model`; a rank-deficient model is a `SingularModel` error.
    pub fn build(dataset: &Dataset, model: &ModelIndex) -> Result<Self> {
        model.validate(dataset)?;
        let mut basis = Self::empty(dataset);
        for j in model.iter() {
            basis.push(dataset, j).map_err(|e| match e {
                Error::Collinear { .. } => {
                    Error::SingularModel { columns: model.as_slice().to_vec() }
                }
                other => other,
            })?;
        }
        Ok(basis)
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    /// Columns in insertion order.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn model(&self) -> ModelIndex {
        let mut v = self.columns.clone();
        v.sort_unstable();
        ModelIndex::from_sorted(v)
    }

    fn q_col(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    /// Removes the component of a centered vector lying in the basis span.
    pub fn residualize(&self, v: &mut [f64]) {
        for _ in 0..2 {
            for i in 0..self.rank() {
                let q = self.q_col(i);
                let c = dot(q, v);
                axpy(-c, q, v);
            }
        }
    }

    /// Residual of column `k` against the basis, with the collinearity check.
    fn residual_column(&self, dataset: &Dataset, k: usize) -> Result<Vec<f64>> {
        let mut r = dataset.centered_column(k).to_vec();
        self.residualize(&mut r);
        let scale = self.max_norm.max(dataset.column_norm(k));
        let norm = dot(&r, &r).sqrt();
        if norm <= RANK_TOL * scale || scale == 0.0 {
            return Err(Error::Collinear { column: k });
        }
        Ok(r)
    }

    /// Appends column `k`.
    pub fn push(&mut self, dataset: &Dataset, k: usize) -> Result<()> {
        if k >= dataset.p() {
            return Err(Error::InvalidModel(format!("index {} out of range", k + 1)));
        }
        if self.columns.contains(&k) {
            return Err(Error::InvalidModel(format!("column {} already in the model", k + 1)));
        }
        let mut r = self.residual_column(dataset, k)?;
        let norm = dot(&r, &r).sqrt();
        r.iter_mut().for_each(|v| *v /= norm);
        self.y_coords.push(dot(&r, dataset.centered_y().as_slice()));
        self.q.extend_from_slice(&r);
        self.columns.push(k);
        self.max_norm = self.max_norm.max(dataset.column_norm(k));
        Ok(())
    }

    pub fn with_column(&self, dataset: &Dataset, k: usize) -> Result<Self> {
        let mut next = self.clone();
        next.push(dataset, k)?;
        Ok(next)
    }

    /// `y'(H_A − H_1)y`.
    pub fn explained(&self) -> f64 {
        self.y_coords.iter().map(|c| c * c).sum()
    }

    pub fn r_squared(&self, dataset: &Dataset) -> Result<RSquared> {
        dataset.check_response()?;
        Ok(RSquared::new(self.explained() / dataset.total_sum_of_squares(), self.rank()))
    }

    /// Increase of `y'Hy` from adding column `k`, without storing the column.
    pub fn gain(&self, dataset: &Dataset, k: usize) -> Result<f64> {
        let r = self.residual_column(dataset, k)?;
        let ry = dot(&r, dataset.centered_y().as_slice());
        Ok(ry * ry / dot(&r, &r))
    }

    /// Projection of a centered vector onto the basis span.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        self.residualize(&mut r);
        v.iter().zip(&r).map(|(a, b)| a - b).collect()
    }
}

/// R² of `A ∪ {k}` from the basis of `A` by a single rank-one update.
pub fn incremental_rss(dataset: &Dataset, basis: &ProjectionBasis, k: usize) -> Result<RSquared> {
    if basis.columns().contains(&k) {
        return Err(Error::InvalidModel(format!("column {} already in the model", k + 1)));
    }
    if basis.rank() + 1 > dataset.n() - 3 {
        return Err(Error::InvalidModel(format!(
            "model size {} exceeds n - 3 = {}",
            basis.rank() + 1,
            dataset.n() - 3
        )));
    }
    dataset.check_response()?;
    let total = basis.explained() + basis.gain(dataset, k)?;
    Ok(RSquared::new(total / dataset.total_sum_of_squares(), basis.rank() + 1))
}

/// Smallest eigenvalue of `(1/n) X_A'X_A` on centered columns, clamped at 0.
///
/// The empty model imposes no constraint and returns `+inf`.
pub fn min_eigen(dataset: &Dataset, model: &ModelIndex) -> Result<f64> {
    model.validate(dataset)?;
    if model.is_empty() {
        return Ok(f64::INFINITY);
    }
    let xa = dataset.submatrix(model);
    let gram = xa.tr_mul(&xa) / dataset.n() as f64;
    Ok(extreme_eigenvalues(&gram).0.max(0.0))
}

/// `(1/n) X_E'(I − H_A)X_E` for the columns `extra` residualized on `A`.
pub fn residual_gram(dataset: &Dataset, model: &ModelIndex, extra: &ModelIndex) -> Result<DMatrix<f64>> {
    let basis = ProjectionBasis::build(dataset, model)?;
    let n = dataset.n();
    let cols: Vec<Vec<f64>> = extra
        .iter()
        .map(|j| {
            let mut r = dataset.centered_column(j).to_vec();
            basis.residualize(&mut r);
            r
        })
        .collect();
    let k = cols.len();
    Ok(DMatrix::from_fn(k, k, |a, b| dot(&cols[a], &cols[b]) / n as f64))
}

/// `(min, max)` eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `H_A v` including the intercept: the mean of `v` plus the projection of
/// the centered `v` onto the centered columns of `A`.
pub fn project_with_intercept(dataset: &Dataset, model: &ModelIndex, v: &[f64]) -> Result<Vec<f64>> {
    let basis = ProjectionBasis::build(dataset, model)?;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let centered: Vec<f64> = v.iter().map(|a| a - mean).collect();
    Ok(basis.project(&centered).into_iter().map(|a| a + mean).collect())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        standardize(&Dataset::new(x, y).unwrap()).unwrap()
    }

    /// R² from the normal equations with an explicit intercept column.
    fn normal_equations_r2(ds: &Dataset, model: &[usize]) -> f64 {
        let n = ds.n();
        let k = model.len() + 1;
        let design = DMatrix::from_fn(n, k, |i, c| if c == 0 { 1.0 } else { ds.x()[(i, model[c - 1])] });
        let beta = (design.tr_mul(&design)).try_inverse().unwrap() * design.tr_mul(ds.y());
        let resid = ds.y() - &design * beta;
        let mean = ds.y().mean();
        let rss_null: f64 = ds.y().iter().map(|v| (v - mean).powi(2)).sum();
        (rss_null - resid.norm_squared()) / rss_null
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0]);
        let ds = Dataset::new(x, DVector::from_vec(vec![1.0, 2.0, 0.0, 1.0])).unwrap();
        assert_eq!(standardize(&ds).unwrap_err(), Error::ConstantColumn { index: 0 });
    }

    #[test]
    fn standardize_hand_computed_column() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let ds = standardize(&Dataset::new(x, DVector::from_vec(vec![0.0, 1.0, 0.0, 2.0])).unwrap()).unwrap();
        // centered (-1.5,-0.5,0.5,1.5) has squared norm 5; rescale by sqrt(4/5)
        let s = (4.0f64 / 5.0).sqrt();
        for (got, want) in ds.x().iter().zip([-1.5, -0.5, 0.5, 1.5]) {
            assert_relative_eq!(*got, want * s, epsilon = 1e-14);
        }
        assert!(ds.is_standardized());
    }

    #[test]
    fn standardize_is_idempotent() {
        let ds = random_dataset(30, 4, 1);
        let again = standardize(&ds).unwrap();
        assert!((ds.x() - again.x()).amax() < 1e-12);
    }

    #[test]
    fn perfect_fit_saturates() {
        let ds = random_dataset(20, 3, 2);
        let y = ds.x().column(0) * 2.0 - ds.x().column(2) + DVector::from_element(20, 5.0);
        let ds = ds.with_response(y).unwrap();
        let r2 = r_squared(&ds, &ModelIndex::new(vec![0, 2]).unwrap()).unwrap();
        assert!(r2.is_saturated());
        assert_eq!(r2.value(), 1.0);
    }

    #[test]
    fn orthogonal_response_gives_zero() {
        // columns (1,-1,0,0,..) style; y orthogonal to both after centering
        let x = DMatrix::from_column_slice(6, 2, &[
            1.0, -1.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, -1.0, 0.0, 0.0,
        ]);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0, -2.0, -2.0]);
        let ds = Dataset::new(x, y).unwrap();
        let r2 = r_squared(&ds, &ModelIndex::new(vec![0, 1]).unwrap()).unwrap();
        assert!(r2.value().abs() < 1e-15);
    }

    #[test]
    fn r_squared_matches_normal_equations() {
        let ds = random_dataset(20, 5, 3);
        for model in [vec![0], vec![1, 3], vec![0, 2, 4], vec![0, 1, 2, 3, 4]] {
            let got = r_squared(&ds, &ModelIndex::new(model.clone()).unwrap()).unwrap();
            assert_relative_eq!(got.value(), normal_equations_r2(&ds, &model), epsilon = 1e-10);
        }
    }

    #[test]
    fn duplicated_column_is_singular() {
        let ds = random_dataset(15, 3, 4);
        let mut x = ds.x().clone();
        let c0 = x.column(0).into_owned();
        x.set_column(2, &c0);
        let ds = Dataset::new(x, ds.y().clone()).unwrap();
        let m = ModelIndex::new(vec![0, 2]).unwrap();
        assert!(matches!(r_squared(&ds, &m), Err(Error::SingularModel { .. })));
        assert!(matches!(ProjectionBasis::build(&ds, &m), Err(Error::SingularModel { .. })));
        assert_eq!(min_eigen(&ds, &m).unwrap(), 0.0);
    }

    #[test]
    fn constant_response_is_rejected() {
        let ds = random_dataset(10, 2, 5);
        let ds = ds.with_response(DVector::from_element(10, 3.0)).unwrap();
        assert_eq!(r_squared(&ds, &ModelIndex::first(1)).unwrap_err(), Error::ConstantResponse);
    }

    #[test]
    fn size_cap_is_enforced() {
        let ds = random_dataset(5, 4, 6);
        assert!(r_squared(&ds, &ModelIndex::first(2)).is_ok());
        assert!(matches!(r_squared(&ds, &ModelIndex::first(3)), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn incremental_from_empty_is_simple_regression() {
        let ds = random_dataset(25, 3, 7);
        let basis = ProjectionBasis::empty(&ds);
        let got = incremental_rss(&ds, &basis, 1).unwrap();
        let x = ds.centered_x().column(1);
        let y = ds.centered_y();
        let corr = x.dot(y) / (x.norm() * y.norm());
        assert_relative_eq!(got.value(), corr * corr, epsilon = 1e-12);
    }

    #[test]
    fn zero_gain_column_leaves_r2_unchanged() {
        let n = 8;
        let x = DMatrix::from_column_slice(n, 2, &[
            1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0,
            1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0,
        ]);
        // y = 3 + x_0 + v with v orthogonal to both columns
        let y = DVector::from_vec(vec![5.0, 1.0, 3.0, 3.0, 5.0, 1.0, 3.0, 3.0]);
        let ds = Dataset::new(x, y).unwrap();
        let basis = ProjectionBasis::build(&ds, &ModelIndex::first(1)).unwrap();
        let before = basis.r_squared(&ds).unwrap().value();
        let after = incremental_rss(&ds, &basis, 1).unwrap().value();
        assert!((after - before).abs() < 1e-15);
        assert!((before - 0.5).abs() < 1e-12);
    }

    #[test]
    fn min_eigen_of_orthogonal_design_is_one() {
        // Hadamard-like centered columns with squared norm n
        let x = DMatrix::from_column_slice(4, 3, &[
            1.0, -1.0, 1.0, -1.0,
            1.0, 1.0, -1.0, -1.0,
            1.0, -1.0, -1.0, 1.0,
        ]);
        let ds = Dataset::new(x, DVector::from_vec(vec![1.0, 0.0, 2.0, 0.0])).unwrap();
        assert_relative_eq!(min_eigen(&ds, &ModelIndex::first(1)).unwrap(), 1.0, epsilon = 1e-14);
        // n - 3 = 1 caps the model size, so build a larger orthogonal design
        let x8 = DMatrix::from_fn(8, 3, |i, j| if (i >> j) & 1 == 1 { 1.0 } else { -1.0 });
        let ds8 = Dataset::new(x8, DVector::from_fn(8, |i, _| i as f64)).unwrap();
        assert_relative_eq!(min_eigen(&ds8, &ModelIndex::first(3)).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn min_eigen_three_by_three_closed_form() {
        let ds = random_dataset(40, 3, 8);
        let m = ModelIndex::first(3);
        let xa = ds.centered_x().clone();
        let g = xa.tr_mul(&xa) / 40.0;
        // trigonometric solution of the characteristic cubic of a symmetric 3x3
        let p1 = g[(0, 1)].powi(2) + g[(0, 2)].powi(2) + g[(1, 2)].powi(2);
        let q = g.trace() / 3.0;
        let p2 = (g[(0, 0)] - q).powi(2) + (g[(1, 1)] - q).powi(2) + (g[(2, 2)] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (&g - DMatrix::identity(3, 3) * q) / p;
        let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let smallest = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        assert_relative_eq!(min_eigen(&ds, &m).unwrap(), smallest, epsilon = 1e-12);
    }

    #[test]
    fn model_index_order_and_parsing() {
        let a = ModelIndex::new(vec![3, 1]).unwrap();
        assert_eq!(a.as_slice(), &[1, 3]);
        assert_eq!(a.to_one_based(), "2;4");
        assert_eq!(ModelIndex::parse_one_based("2;4").unwrap(), a);
        assert_eq!(ModelIndex::parse_one_based("").unwrap(), ModelIndex::empty());
        assert!(ModelIndex::new(vec![1, 1]).is_err());
        assert!(ModelIndex::parse_one_based("0").is_err());
        let b = ModelIndex::new(vec![0]).unwrap();
        let c = ModelIndex::new(vec![0, 1]).unwrap();
        assert!(b < a && a > c && c < a);
    }
}
