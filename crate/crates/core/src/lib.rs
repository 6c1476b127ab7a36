//! Regularised k-means: convex relaxations, rounding, dual certificates and planted instances.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod certificate;
pub mod cliquered;
pub mod error;
pub mod model;
pub mod relax;
pub mod rounding;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use model::{Clustering, DistanceMatrix, Label, PairMetrics, PointSet};
