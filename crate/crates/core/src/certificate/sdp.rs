//! Dual certificates for the SDP relaxation, with and without the noise cluster.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    relative_gap, CertificateReport, FailureReason, Verdict, BETA_TOL, EIG_TOL, GAP_TOL, RECONSTRUCTION_TOL,
    SLACKNESS_TOL,
};
use crate::error::{Error, Result};
use crate::model::{squared_distance_matrix, Clustering, PointSet};
use crate::relax::{intended_solution, min_eigenvalue, symmetric_eigen};

/// Dual variables `(z, alpha, beta, Q)`; `lambda` is set for the regularised problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpDualCertificate {
    pub z: f64,
    pub alpha: DVector<f64>,
    pub beta: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub lambda: Option<f64>,
}

impl SdpDualCertificate {
    /// `-z k - sum(alpha)`.
    pub fn dual_objective(&self, k: usize) -> f64 {
        -self.z * k as f64 - self.alpha.sum()
    }
}

/// Extra inputs for [`verify`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Center separation; when set, `lambda` must lie in the recovery window for it.
    pub delta: Option<f64>,
}

struct Blocks {
    clusters: Vec<Vec<usize>>,
    noise: Vec<usize>,
    /// Cluster index of every structured point.
    owner: Vec<Option<usize>>,
    means: Vec<DVector<f64>>,
    /// `|x_i - mean of its cluster|^2` for structured points, 0 for noise.
    dev: Vec<f64>,
}

impl Blocks {
    fn new(points: &PointSet, partition: &Clustering) -> Result<Self> {
        if partition.len() != points.n_points() {
            return Err(Error::SizeMismatch { expected: points.n_points(), got: partition.len() });
        }
        let clusters = partition.clusters();
        if partition.non_noise().is_empty() {
            return Err(Error::EmptyStructuredSet);
        }
        if let Some(c) = clusters.iter().position(|m| m.is_empty()) {
            return Err(Error::EmptyCluster(c + 1));
        }
        let mut owner = vec![None; partition.len()];
        let mut means = Vec::with_capacity(clusters.len());
        let mut dev = vec![0.0; partition.len()];
        for (c, members) in clusters.iter().enumerate() {
            let mean = DVector::from_vec(points.centroid(members)?);
            for &i in members {
                owner[i] = Some(c);
                dev[i] = (points.matrix().row(i).transpose() - &mean).norm_squared();
            }
            means.push(mean);
        }
        Ok(Self { clusters, noise: partition.noise(), owner, means, dev })
    }

    fn sq_to_mean(&self, points: &PointSet, i: usize, c: usize) -> f64 {
        (points.matrix().row(i).transpose() - &self.means[c]).norm_squared()
    }
}

/// Feasible interval `[lo, hi]` for `z`; `hi` is infinite when nothing bounds it.
pub fn z_window(points: &PointSet, partition: &Clustering, lambda: Option<f64>) -> Result<(f64, f64)> {
    let blocks = Blocks::new(points, partition)?;
    let lambda = lambda.filter(|l| l.is_finite());
    if lambda.is_none() && !blocks.noise.is_empty() {
        return Err(Error::InvalidParameter("noise points need a finite lambda".into()));
    }
    window(points, &blocks, lambda)
}

fn window(points: &PointSet, blocks: &Blocks, lambda: Option<f64>) -> Result<(f64, f64)> {
    let d = points.dim();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for (c, members) in blocks.clusters.iter().enumerate() {
        for &i in members {
            let v = points.matrix().row(i).transpose() - &blocks.means[c];
            gram += &v * v.transpose();
        }
    }
    let mut lo = 2.0 * symmetric_eigen(gram)?.eigenvalues.max().max(0.0);
    let mut hi = f64::INFINITY;
    for (p, members) in blocks.clusters.iter().enumerate() {
        let np = members.len() as f64;
        for &r in members {
            for (q, other) in blocks.clusters.iter().enumerate() {
                if q == p {
                    continue;
                }
                let nq = other.len() as f64;
                let gain = blocks.sq_to_mean(points, r, q) - blocks.dev[r];
                hi = hi.min(gain / (0.5 / np + 0.5 / nq));
            }
            if let Some(lam) = lambda {
                hi = hi.min(np * (lam - 2.0 * blocks.dev[r]));
                for &s in &blocks.noise {
                    hi = hi.min(2.0 * np * (points.sq_dist(r, s) - blocks.dev[r] - 0.5 * lam));
                }
            }
        }
    }
    if let Some(lam) = lambda {
        lo = lo.max(lam * blocks.noise.len() as f64);
    }
    Ok((lo, hi))
}

fn default_z(lo: f64, hi: f64) -> f64 {
    if hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo > 0.0 {
        2.0 * lo
    } else {
        1.0
    }
}

/// Certificate for a partition without noise, against the plain k-means SDP.
pub fn construct_dual_noiseless(
    points: &PointSet,
    partition: &Clustering,
    z_choice: Option<f64>,
) -> Result<SdpDualCertificate> {
    let blocks = Blocks::new(points, partition)?;
    if !blocks.noise.is_empty() {
        return Err(Error::InvalidClustering("noiseless certificate needs a partition without noise".into()));
    }
    let z = match z_choice {
        Some(z) => z,
        None => {
            let (lo, hi) = window(points, &blocks, None)?;
            default_z(lo, hi)
        }
    };
    Ok(assemble(points, &blocks, z, None))
}

/// Certificate for a partition with a (possibly empty) noise cluster, against the regularised SDP.
pub fn construct_dual_regularised(
    points: &PointSet,
    partition: &Clustering,
    lambda: f64,
    z_choice: Option<f64>,
) -> Result<SdpDualCertificate> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be finite and > 0, got {lambda}")));
    }
    let blocks = Blocks::new(points, partition)?;
    let z = match z_choice {
        Some(z) => z,
        None => {
            let (lo, hi) = window(points, &blocks, Some(lambda))?;
            default_z(lo, hi)
        }
    };
    Ok(assemble(points, &blocks, z, Some(lambda)))
}

fn assemble(points: &PointSet, blocks: &Blocks, z: f64, lambda: Option<f64>) -> SdpDualCertificate {
    let n = points.n_points();
    let dist = squared_distance_matrix(points);
    let d = dist.matrix();
    let alpha = DVector::from_fn(n, |i, _| match blocks.owner[i] {
        Some(c) => -2.0 * blocks.dev[i] - z / blocks.clusters[c].len() as f64,
        None => -lambda.unwrap_or(0.0),
    });
    let shifted = |i: usize, j: usize| d[(i, j)] + 0.5 * (alpha[i] + alpha[j]);

    let mut beta = DMatrix::<f64>::zeros(n, n);
    for p in 0..blocks.clusters.len() {
        for q in p + 1..blocks.clusters.len() {
            let (cp, cq) = (&blocks.clusters[p], &blocks.clusters[q]);
            let m = DMatrix::from_fn(cp.len(), cq.len(), |r, s| shifted(cp[r], cq[s]));
            let b = cross_block(&m);
            for (r, &i) in cp.iter().enumerate() {
                for (s, &j) in cq.iter().enumerate() {
                    beta[(i, j)] = b[(r, s)];
                    beta[(j, i)] = b[(r, s)];
                }
            }
        }
    }
    for &s in &blocks.noise {
        for i in 0..n {
            beta[(i, s)] = match blocks.owner[i] {
                Some(_) => shifted(i, s),
                None => d[(i, s)],
            };
            beta[(s, i)] = beta[(i, s)];
        }
    }
    let q = build_q(d, z, &alpha, &beta);
    SdpDualCertificate { z, alpha, beta, q, lambda }
}

fn build_q(d: &DMatrix<f64>, z: f64, alpha: &DVector<f64>, beta: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { z } else { 0.0 };
        d[(i, j)] + diag + 0.5 * (alpha[i] + alpha[j]) - beta[(i, j)]
    })
}

/// Nonnegative `beta` for an off-diagonal block with the row and column sums of `m`.
///
/// Starts from the additive fit `a 1^T + 1 b^T - c`, which leaves the quadratic form on
/// block-centered vectors unchanged, and moves toward the rank-one fit `u w^T / S` only as far
/// as nonnegativity requires.
fn cross_block(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let u = DVector::from_fn(rows, |r, _| m.row(r).sum());
    let w = DVector::from_fn(cols, |s, _| m.column(s).sum());
    let total = m.sum();
    let c = total / (rows * cols) as f64;
    let additive = DMatrix::from_fn(rows, cols, |r, s| u[r] / cols as f64 + w[s] / rows as f64 - c);
    if additive.min() >= 0.0 {
        return additive;
    }
    if !(total > 0.0) || u.min() < 0.0 || w.min() < 0.0 {
        return additive;
    }
    let rank_one = DMatrix::from_fn(rows, cols, |r, s| u[r] * w[s] / total);
    let mut t: f64 = 0.0;
    for (a, b) in additive.iter().zip(rank_one.iter()) {
        if *a < 0.0 {
            t = t.max(a / (a - b));
        }
    }
    let t = t.min(1.0);
    let mut out = additive * (1.0 - t) + rank_one * t;
    out.iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Checks a certificate against the integral solution encoded by `partition`.
///
/// `lambda = None` means the plain k-means SDP; the partition must then have no noise.
pub fn verify(
    cert: &SdpDualCertificate,
    points: &PointSet,
    partition: &Clustering,
    lambda: Option<f64>,
    options: &VerifyOptions,
) -> Result<CertificateReport> {
    let n = points.n_points();
    if partition.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: partition.len() });
    }
    for len in [cert.alpha.len(), cert.beta.nrows(), cert.beta.ncols(), cert.q.nrows(), cert.q.ncols()] {
        if len != n {
            return Err(Error::SizeMismatch { expected: n, got: len });
        }
    }
    let lambda = lambda.filter(|l| l.is_finite());
    let noise = partition.noise();
    if lambda.is_none() && !noise.is_empty() {
        return Err(Error::InvalidParameter("noise points need a finite lambda".into()));
    }

    let dist = squared_distance_matrix(points);
    let d = dist.matrix();
    let (zstar, _) = intended_solution(partition)?;
    let primal = d.component_mul(&zstar).sum() + lambda.map_or(0.0, |l| l * noise.len() as f64);
    let dual = cert.dual_objective(partition.k());
    let duality_gap = relative_gap(primal, dual);
    let min_eig_q = min_eigenvalue(&cert.q)?;
    let min_beta = cert.beta.min();

    let lambda_feasible = match lambda {
        None => true,
        Some(lam) => {
            let tol = 1e-9 * lam.max(1.0);
            let gamma_ok = partition.non_noise().iter().all(|&i| cert.alpha[i] + lam >= -tol);
            let block_ok = noise.is_empty() || cert.z > lam * noise.len() as f64;
            let window_ok = options.delta.is_none_or(|delta| {
                let (lo, hi) = super::lambda_window(delta);
                lam >= lo - tol && lam <= hi + tol
            });
            gamma_ok && block_ok && window_ok
        }
    };

    let slack_beta = cert.beta.component_mul(&zstar).amax();
    let slack_q = cert.q.component_mul(&zstar).sum().abs() / primal.abs().max(1.0);
    let rebuilt = build_q(d, cert.z, &cert.alpha, &cert.beta);
    let recon = (&rebuilt - &cert.q).amax() / cert.q.amax().max(1.0);

    let verdict = if !(duality_gap <= GAP_TOL) {
        Verdict::Failed(FailureReason::DualityGap)
    } else if !(min_eig_q >= -EIG_TOL) {
        Verdict::Failed(FailureReason::MinEigenvalue)
    } else if !(min_beta >= -BETA_TOL) {
        Verdict::Failed(FailureReason::MinBeta)
    } else if !lambda_feasible {
        Verdict::Failed(FailureReason::LambdaInfeasible)
    } else if !(slack_beta <= SLACKNESS_TOL && slack_q <= SLACKNESS_TOL) {
        Verdict::Failed(FailureReason::ComplementarySlackness)
    } else if !(recon <= RECONSTRUCTION_TOL) {
        Verdict::Failed(FailureReason::Reconstruction)
    } else {
        Verdict::Certified
    };
    Ok(CertificateReport {
        primal,
        dual,
        duality_gap,
        min_eig_q: Some(min_eig_q),
        min_beta,
        lambda_feasible,
        verdict,
    })
}
