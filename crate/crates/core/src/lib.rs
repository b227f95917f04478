//! Sparse representation of the dependence structure of multivariate
//! extremes, and anomaly scoring of extreme observations (DAMEX).
//!
//! The pipeline: rank-transform each margin to standard Pareto scale
//! ([`rank`]), charge every extreme point to the feature subset that is
//! simultaneously large ([`mass`]), keep the subsets with non-negligible
//! mass, and score new points by the mass of their sub-cone divided by their
//! radius ([`model`]). [`sim`] draws from the asymmetric logistic model for
//! support-recovery experiments and [`eval`] runs extreme-region benchmarks.

pub mod error;
pub mod eval;
pub mod mass;
pub mod matrix;
pub mod model;
pub mod rank;
pub mod sim;
pub mod subset;

pub use error::{Error, Result};
pub use mass::{
    assign_rectangle, empirical_g, empirical_stdf, estimate_masses, SparseAngularRepresentation,
    TailCounter,
};
pub use matrix::FeatureMatrix;
pub use model::{DamexModel, DamexParams, KChoice, MembershipMode, ScoreRecord};
pub use rank::{standardize_training, MarginalRanker, StandardizedPoint};
pub use subset::FeatureSubset;
