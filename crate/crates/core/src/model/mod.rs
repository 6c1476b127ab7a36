//! Point sets, clusterings, costs and the clustering comparison metrics.

mod clustering;
mod cost;
pub mod io;
mod points;

pub use clustering::{
    clustering_distance, gamma_robustness, pair_metrics, restrict, Clustering, Label, PairMetrics,
};
pub use cost::{kmeans_cost, regularised_cost, within_cluster_sse, within_cluster_sse_pairwise};
pub use points::{min_pairwise_sq_distance, squared_distance_matrix, DistanceMatrix, PointSet};
