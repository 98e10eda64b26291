#![allow(dead_code)]

use bvsel_core::linalg::{standardize, Dataset, ModelIndex};
use bvsel_core::seeding::rng_from_seed;
use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut impl Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Standardized Gaussian design with a pure-noise response.
pub fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let x = gaussian(&mut rng, n, p);
    let y = DVector::from_vec(normal_vec(&mut rng, n));
    standardize(&Dataset::new(x, y).unwrap()).unwrap()
}

/// Standardized design with `y = Σ_{j<t} beta x_j + noise`.
pub fn planted(seed: u64, n: usize, p: usize, t: usize, beta: f64) -> Dataset {
    let base = random_dataset(seed, n, p);
    let mut rng = rng_from_seed(seed ^ 0xABCD);
    let mut y = DVector::from_vec(normal_vec(&mut rng, n));
    for j in 0..t {
        y += base.x().column(j) * beta;
    }
    base.with_response(y).unwrap()
}

pub fn random_subset(rng: &mut impl Rng, p: usize, k: usize) -> ModelIndex {
    ModelIndex::new(index::sample(rng, p, k).into_vec()).unwrap()
}

pub fn model(v: &[usize]) -> ModelIndex {
    ModelIndex::new(v.to_vec()).unwrap()
}
