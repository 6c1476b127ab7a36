//! Dual certificate for the LP relaxation.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{relative_gap, CertificateReport, FailureReason, Verdict};
use crate::error::{Error, Result};
use crate::model::{squared_distance_matrix, Clustering, PointSet};

const LP_TOL: f64 = 1e-9;

/// `alpha` per point and the scalar `gamma` dual to the trace constraint. `gamma_window` is the
/// interval on which every inequality of the construction holds; it may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpDualCertificate {
    pub gamma: f64,
    pub alpha: DVector<f64>,
    pub gamma_window: (f64, f64),
}

/// Builds the LP dual for `partition` and checks it. `lambda = INFINITY` forbids noise.
pub fn lp_certificate(
    points: &PointSet,
    partition: &Clustering,
    lambda: f64,
) -> Result<(LpDualCertificate, CertificateReport)> {
    let n = points.n_points();
    if partition.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: partition.len() });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    let noise = partition.noise();
    if !lambda.is_finite() && !noise.is_empty() {
        return Err(Error::InvalidParameter("noise points need a finite lambda".into()));
    }
    let clusters = partition.clusters();
    if partition.non_noise().is_empty() {
        return Err(Error::EmptyStructuredSet);
    }
    if let Some(c) = clusters.iter().position(|m| m.is_empty()) {
        return Err(Error::EmptyCluster(c + 1));
    }
    let dist = squared_distance_matrix(points);
    let d = dist.matrix();

    // alpha_a = (gamma + within_a) / n_i for a in cluster i.
    let mut within = vec![0.0; n];
    let mut size = vec![0.0; n];
    for members in &clusters {
        for &a in members {
            within[a] = members.iter().map(|&b| d[(a, b)]).sum();
            size[a] = members.len() as f64;
        }
    }

    let (mut lo_within, mut hi_cross, mut hi_noise, mut hi_lambda) =
        (f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for (i, members) in clusters.iter().enumerate() {
        for &a in members {
            let na = size[a];
            for &b in members {
                lo_within = lo_within.max(na * d[(a, b)] - within[a]);
            }
            for (j, other) in clusters.iter().enumerate() {
                if j != i {
                    for &b in other {
                        hi_cross = hi_cross.min(na * d[(a, b)] - within[a]);
                    }
                }
            }
            for &c in &noise {
                hi_noise = hi_noise.min(na * d[(a, c)] - within[a]);
            }
            hi_lambda = hi_lambda.min(na * lambda - within[a]);
        }
    }
    let lo_lambda = noise
        .iter()
        .map(|&c| lambda + (0..n).filter(|&q| q != c).map(|q| (lambda - d[(c, q)]).max(0.0)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = lo_within.max(lo_lambda);
    let hi = hi_cross.min(hi_noise).min(hi_lambda);
    let gamma = if hi.is_finite() { 0.5 * (lo + hi) } else { lo };

    let alpha = DVector::from_fn(n, |a, _| match partition.label(a).cluster() {
        Some(_) => (gamma + within[a]) / size[a],
        None => lambda,
    });

    let scale = d.amax().max(1.0) * LP_TOL;
    let mut min_beta = f64::INFINITY;
    let (mut within_ok, mut cross_ok, mut noise_ok, mut lambda_ok) = (true, true, true, true);
    for (i, members) in clusters.iter().enumerate() {
        for &a in members {
            for &b in members {
                let beta = alpha[a] - d[(a, b)];
                min_beta = min_beta.min(beta);
                within_ok &= beta >= -scale;
            }
            for (j, other) in clusters.iter().enumerate() {
                if j != i {
                    cross_ok &= other.iter().all(|&b| alpha[a] <= d[(a, b)] + scale);
                }
            }
            noise_ok &= noise.iter().all(|&c| alpha[a] <= d[(a, c)] + scale);
            lambda_ok &= alpha[a] <= lambda + scale;
        }
    }
    lambda_ok &= noise.is_empty() || gamma >= lo_lambda - scale;

    let k = partition.k() as f64;
    let mut primal = 0.0;
    for members in &clusters {
        let w = 1.0 / members.len() as f64;
        for &a in members {
            for &b in members {
                primal += d[(a, b)] * w;
            }
        }
    }
    if !noise.is_empty() {
        primal += lambda * noise.len() as f64;
    }
    let dual = alpha.sum() - k * gamma;
    let duality_gap = relative_gap(primal, dual);

    let verdict = if !within_ok {
        Verdict::Failed(FailureReason::WithinCluster)
    } else if !cross_ok {
        Verdict::Failed(FailureReason::CrossCluster)
    } else if !noise_ok {
        Verdict::Failed(FailureReason::NoiseSeparation)
    } else if !lambda_ok {
        Verdict::Failed(FailureReason::LambdaSandwich)
    } else if !(duality_gap <= LP_TOL) {
        Verdict::Failed(FailureReason::DualityGap)
    } else {
        Verdict::Certified
    };
    let cert = LpDualCertificate { gamma, alpha, gamma_window: (lo, hi) };
    let report = CertificateReport {
        primal,
        dual,
        duality_gap,
        min_eig_q: None,
        min_beta,
        lambda_feasible: lambda_ok,
        verdict,
    };
    Ok((cert, report))
}
