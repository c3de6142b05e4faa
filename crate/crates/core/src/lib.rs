//! Non-parametric probabilistic forecasting for periodic time series.
//!
//! The library turns a point-forecasting training set into quantile
//! regressions: each training target is replaced by an empirical quantile
//! of its k nearest neighbors' targets, then a polynomial is fitted per
//! quantile level under non-crossing constraints. Combining the fitted
//! levels yields prediction intervals, scored with reliability deviation
//! and pinball losses.
//!
//! Modules follow the pipeline order: [`dataset`] (ingest / normalize /
//! split), [`features`] (derived series and learning pairs), [`knn`]
//! (neighbor search and target transformation), [`regression`]
//! (constrained fits and feature selection), [`evaluation`] (metrics),
//! and [`synth`] (deterministic sample-data generation).

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod knn;
mod linalg;
pub mod qp;
pub mod regression;
pub mod synth;

pub use dataset::{HouseholdId, SplitSpec, TimeSeriesFrame};
pub use error::{Error, Result};
pub use evaluation::{EvalReport, IntervalPair};
pub use features::{FeatureId, FeatureSpec, LearningSet, NightMask, SeriesKind};
pub use knn::{DistanceWeights, NeighborTable, TransformedTargets};
pub use regression::{PolynomialSpec, QuantileModelSet, SelectionResult};
