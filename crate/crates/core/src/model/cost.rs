use crate::error::{Error, Result};
use crate::model::{Clustering, PointSet};

/// `min_c sum |x - c|^2` over the members, evaluated at the centroid.
pub fn within_cluster_sse(points: &PointSet, members: &[usize]) -> Result<f64> {
    let c = points.centroid(members)?;
    let x = points.matrix();
    let sse = members
        .iter()
        .map(|&i| (0..points.dim()).map(|j| (x[(i, j)] - c[j]).powi(2)).sum::<f64>())
        .sum::<f64>();
    debug_assert!({
        let pw = within_cluster_sse_pairwise(points, members)?;
        (sse - pw).abs() <= 1e-9 * (1.0 + sse.abs())
    });
    Ok(sse)
}

/// The same quantity through `(1 / 2|C|) sum_{x, y in C} |x - y|^2`.
pub fn within_cluster_sse_pairwise(points: &PointSet, members: &[usize]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::EmptyMembers);
    }
    if let Some(&index) = members.iter().find(|&&i| i >= points.n_points()) {
        return Err(Error::IndexOutOfRange { index, len: points.n_points() });
    }
    let mut total = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            total += points.sq_dist(i, j);
        }
    }
    // Each unordered pair appears twice in the double sum.
    Ok(total / members.len() as f64)
}

/// Regularised k-means cost: within-cluster SSE of every structured cluster plus
/// `lambda` per noise point. Empty structured clusters contribute nothing.
pub fn regularised_cost(points: &PointSet, clustering: &Clustering, lambda: f64) -> Result<f64> {
    if clustering.len() != points.n_points() {
        return Err(Error::SizeMismatch { expected: points.n_points(), got: clustering.len() });
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut cost = 0.0;
    for members in clustering.clusters() {
        if !members.is_empty() {
            cost += within_cluster_sse(points, &members)?;
        }
    }
    let noise = clustering.noise().len();
    if noise > 0 {
        cost += lambda * noise as f64;
    }
    Ok(cost)
}

/// Plain k-means cost (no noise cluster allowed).
pub fn kmeans_cost(points: &PointSet, clustering: &Clustering) -> Result<f64> {
    if clustering.has_noise() {
        return Err(Error::InvalidClustering("k-means cost is undefined for noise labels".into()));
    }
    regularised_cost(points, clustering, 0.0)
}
