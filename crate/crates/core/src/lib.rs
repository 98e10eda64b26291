//! Bayesian variable selection with the Beta-prime mixture g-prior and a
//! truncated Poisson model-size prior, together with the simulation tools
//! used to study its consistency.

pub mod bayes;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod numeric;
pub mod quadrature;
pub mod search;
pub mod seeding;
pub mod stablelaw;

pub use error::{Error, Result};
