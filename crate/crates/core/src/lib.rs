//! Tools for measuring how unstable a classifier's decision boundary is.
//!
//! Everything here operates on label maps over the unit hypercube:
//!
//! - [`model`]: points, labels, the [`DecisionFunction`] trait and the
//!   built-in classifiers (thresholds, half-spaces, linear-over-features).
//! - [`rng`]: counter-based seeded streams shared by every Monte Carlo routine.
//! - [`filterdemo`]: prototype filter banks, label rasters, unstable cells and
//!   box-counting of the label boundary.
//! - [`symmetry`]: toroidal grid translations combined with the dihedral point
//!   group, invariance checks and orbits of points.
//! - [`measure`]: log-space ball volumes and orbit-volume bound curves.
//! - [`stability`]: probe-based epsilon-stability and boundary distances.
//! - [`features`]: rho-usefulness and gamma-robust usefulness of scalar features.
//! - [`attack`]: a label-only boundary attack behind a query-counting oracle.
//! - [`export`]: PGM/PPM/CSV writers for the above.

pub mod attack;
pub mod error;
pub mod export;
pub mod features;
pub mod filterdemo;
pub mod measure;
pub mod model;
pub mod rng;
pub mod special;
pub mod stability;
pub mod symmetry;

pub use error::{Error, Result};
pub use model::{
    Activation, Constant, DecisionFunction, Feature, HalfSpace, Label, LinearFeatureClassifier,
    MeanThreshold, Point, SoftDecisionFunction,
};
pub use rng::{seeded_stream, SeededStream};
