//! Finite, checkable computations around word-metric groups: ball growth,
//! the overlapping-neighborhoods statistic, horofunction windows,
//! correlation distances between actions, Poisson and percolation graphings,
//! and exact costs of finite measured equivalence relations.
//!
//! Weighted objects are generic over [`Scalar`]; the aliases below fix the
//! exact rational and binary64 instantiations.

pub mod balls;
pub mod cli;
pub mod correlations;
pub mod cost;
pub mod element;
pub mod error;
pub mod group;
pub mod horospace;
pub mod onp;
pub mod parse;
pub mod poisson;
pub mod report;
pub mod rng;
pub mod scalar;

pub use element::{Element, Word};
pub use error::{Error, Result};
pub use group::{FiniteTable, MetricGroup};
pub use scalar::Scalar;

/// Exact rational used for every asserted identity.
pub type Rational = num_rational::BigRational;

pub type ExactSpace = cost::WeightedFiniteSpace<Rational>;
pub type FloatSpace = cost::WeightedFiniteSpace<f64>;
pub type ExactAction = correlations::AtomicAction<Rational>;
pub type FloatAction = correlations::AtomicAction<f64>;
pub type ExactPatternMeasure = correlations::PatternMeasure<Rational>;
pub type ExactCorrelationTable = correlations::CorrelationTable<Rational>;
