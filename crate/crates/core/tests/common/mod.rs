//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regkmeans::model::{Clustering, Label, PointSet};
use regkmeans::relax::{build_problem, solve, RelaxationKind, RelaxedSolution, SolverConfig};
use regkmeans::rounding::{round_solution, RoundingConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> PointSet {
    let rows: Vec<Vec<f64>> =
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect()).collect();
    PointSet::from_rows(&rows).unwrap()
}

pub fn sq(points: &PointSet, i: usize, j: usize) -> f64 {
    let (a, b) = (points.point(i), points.point(j));
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared distances to the coordinate-wise mean.
pub fn centroid_sse(points: &PointSet, members: &[usize]) -> f64 {
    let d = points.dim();
    let mut mean = vec![0.0; d];
    for &i in members {
        for (m, x) in mean.iter_mut().zip(points.point(i)) {
            *m += x / members.len() as f64;
        }
    }
    members
        .iter()
        .map(|&i| points.point(i).iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum()
}

/// Sum over unordered pairs of squared distances, divided by the set size.
pub fn pairwise_sse(points: &PointSet, members: &[usize]) -> f64 {
    let mut total = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            total += sq(points, i, j);
        }
    }
    total / members.len() as f64
}

/// Calls `f` with every labeling of `n` points into `k` nonempty clusters, plus noise when
/// `allow_noise`. Label value `k` encodes noise.
pub fn for_each_labeling(n: usize, k: usize, allow_noise: bool, mut f: impl FnMut(&[usize])) {
    let base = if allow_noise { k + 1 } else { k };
    let mut labels = vec![0usize; n];
    loop {
        let mut seen = vec![false; k];
        for &l in &labels {
            if l < k {
                seen[l] = true;
            }
        }
        if seen.iter().all(|&s| s) {
            f(&labels);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return;
            }
            labels[pos] += 1;
            if labels[pos] < base {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// `2 SSE + lambda |noise|` for a labeling with noise encoded as `k`.
pub fn labeling_objective(points: &PointSet, labels: &[usize], k: usize, lambda: f64) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        total += 2.0 * pairwise_sse(points, &members);
    }
    let noise = labels.iter().filter(|&&l| l == k).count();
    if noise > 0 {
        total += lambda * noise as f64;
    }
    total
}

/// Minimum of `2 SSE + lambda |noise|` over all admissible labelings.
pub fn exhaustive_optimum(points: &PointSet, k: usize, lambda: f64) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for_each_labeling(points.n_points(), k, lambda.is_finite(), |labels| {
        let v = labeling_objective(points, labels, k, lambda);
        if v < best.0 {
            best = (v, labels.to_vec());
        }
    });
    best
}

pub fn to_clustering(labels: &[usize], k: usize) -> Clustering {
    Clustering::new(
        labels.iter().map(|&l| if l == k { Label::Noise } else { Label::Cluster(l) }).collect(),
        k,
    )
    .unwrap()
}

/// Largest clique by growing cliques one vertex at a time in increasing order.
pub fn max_clique(n: usize, adj: &[Vec<bool>]) -> usize {
    fn grow(adj: &[Vec<bool>], clique: &mut Vec<usize>, next: usize, best: &mut usize) {
        *best = (*best).max(clique.len());
        for v in next..adj.len() {
            if clique.iter().all(|&u| adj[u][v]) {
                clique.push(v);
                grow(adj, clique, v + 1, best);
                clique.pop();
            }
        }
    }
    let mut best = 0;
    grow(adj, &mut Vec::with_capacity(n), 0, &mut best);
    best
}

/// Pair-enumeration count of unordered pairs co-clustered in exactly one labeling.
pub fn delta_oracle(a: &[Option<usize>], b: &[Option<usize>]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let mut differ = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) != (b[i] == b[j]) {
                differ += 1;
            }
        }
    }
    differ as f64 / (n * (n - 1) / 2) as f64
}

/// Pair-enumeration precision, recall and f1 of `cand` against `truth`.
pub fn pair_oracle(cand: &[usize], truth: &[usize]) -> (f64, f64, f64) {
    let n = cand.len();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            match (cand[i] == cand[j], truth[i] == truth[j]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    (precision, recall, f1)
}

pub fn solve_relaxation(
    points: &PointSet,
    k: usize,
    lambda: f64,
    kind: RelaxationKind,
    config: &SolverConfig,
) -> RelaxedSolution {
    solve(&build_problem(points, k, lambda, kind).unwrap(), config).unwrap()
}

pub fn solve_and_round(
    points: &PointSet,
    k: usize,
    lambda: f64,
    kind: RelaxationKind,
) -> (RelaxedSolution, regkmeans::Result<Clustering>) {
    let sol = solve_relaxation(points, k, lambda, kind, &SolverConfig::default());
    let rounded = round_solution(points, &sol.z, sol.y.as_ref(), k, &RoundingConfig::default());
    (sol, rounded)
}
