//! k-means++ seeding and Lloyd iterations with restarts.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Clustering, PointSet};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LloydConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl LloydConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, restarts: 10, max_iter: 300, seed }
    }
}

/// Outcome of the best restart, plus the per-iteration cost trace of every restart.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub clustering: Clustering,
    pub cost: f64,
    pub best_restart: usize,
    pub cost_traces: Vec<Vec<f64>>,
}

/// D² seeding: indices of `k` distinct points, the first uniform, each next one drawn with
/// probability proportional to its squared distance to the nearest chosen point.
pub fn kmeanspp_seed(points: &PointSet, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.n_points();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} must be in 1..={n}")));
    }
    let mut rng = rng(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| points.sq_dist(i, chosen[0])).collect();
    let mut taken = vec![false; n];
    taken[chosen[0]] = true;
    while chosen.len() < k {
        let total: f64 = nearest.iter().zip(&taken).filter(|(_, &t)| !t).map(|(d, _)| d).sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !taken[i] && nearest[i] > 0.0) {
                pick = Some(i);
                target -= nearest[i];
                if target < 0.0 {
                    break;
                }
            }
            pick.expect("positive total weight implies a candidate")
        } else {
            // Every remaining point duplicates a chosen one.
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[next] = true;
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(points.sq_dist(i, next));
        }
    }
    Ok(chosen)
}

/// Best-of-restarts Lloyd's algorithm under the k-means cost.
pub fn lloyd(points: &PointSet, config: &LloydConfig) -> Result<LloydRun> {
    if config.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut traces = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let seed = derive_seed(config.seed, &[r as u64]);
        let (assignment, trace) = single_run(points, config.k, config.max_iter, seed)?;
        let cost = *trace.last().expect("at least one iteration");
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
            best = Some((cost, r, assignment));
        }
        traces.push(trace);
    }
    let (cost, best_restart, assignment) = best.expect("restarts >= 1");
    let labels = assignment.into_iter().map(crate::model::Label::Cluster).collect();
    Ok(LloydRun { clustering: Clustering::new(labels, config.k)?, cost, best_restart, cost_traces: traces })
}

fn single_run(points: &PointSet, k: usize, max_iter: usize, seed: u64) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = points.n_points();
    let x = points.matrix();
    let init = kmeanspp_seed(points, k, seed)?;
    let mut centers = x.select_rows(&init);
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut next = vec![0usize; n];
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (c, d) = nearest_center(x, i, &centers);
            next[i] = c;
            dist[i] = d;
        }
        repair_empty(&mut next, &mut dist, k);
        let changed = next != assignment;
        assignment = next;
        centers = centroids(x, &assignment, k);
        trace.push(sse(x, &assignment, &centers));
        if !changed {
            break;
        }
    }
    Ok((assignment, trace))
}

fn nearest_center(x: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.nrows() {
        let d: f64 = (0..x.ncols()).map(|j| (x[(i, j)] - centers[(c, j)]).powi(2)).sum();
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Moves the point farthest from its center into each empty cluster. Donor clusters keep at
/// least one member, so this never empties another cluster.
fn repair_empty(assignment: &mut [usize], dist: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &c in assignment.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..assignment.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = donor {
            sizes[assignment[i]] -= 1;
            assignment[i] = empty;
            sizes[empty] = 1;
            dist[i] = 0.0;
        }
    }
}

fn centroids(x: &DMatrix<f64>, assignment: &[usize], k: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(k, x.ncols());
    let mut counts = vec![0usize; k];
    for (i, &a) in assignment.iter().enumerate() {
        counts[a] += 1;
        for j in 0..x.ncols() {
            c[(a, j)] += x[(i, j)];
        }
    }
    for (a, &m) in counts.iter().enumerate() {
        if m > 0 {
            for j in 0..x.ncols() {
                c[(a, j)] /= m as f64;
            }
        }
    }
    c
}

fn sse(x: &DMatrix<f64>, assignment: &[usize], centers: &DMatrix<f64>) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| (0..x.ncols()).map(|j| (x[(i, j)] - centers[(a, j)]).powi(2)).sum::<f64>())
        .sum()
}
