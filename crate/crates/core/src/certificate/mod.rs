//! Explicit dual certificates for integral candidates of the SDP and LP relaxations, and the
//! separation thresholds under which they are expected to exist.

mod lp;
mod sdp;
mod thresholds;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use lp::{lp_certificate, LpDualCertificate};
pub use sdp::{
    construct_dual_noiseless, construct_dual_regularised, verify, z_window, SdpDualCertificate, VerifyOptions,
};
pub use thresholds::{lambda_window, thresholds, ThresholdReport};

pub const GAP_TOL: f64 = 1e-5;
pub const EIG_TOL: f64 = 1e-6;
pub const BETA_TOL: f64 = 1e-8;
pub const SLACKNESS_TOL: f64 = 1e-8;
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    DualityGap,
    MinEigenvalue,
    MinBeta,
    LambdaInfeasible,
    ComplementarySlackness,
    Reconstruction,
    WithinCluster,
    CrossCluster,
    NoiseSeparation,
    LambdaSandwich,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::DualityGap => "duality_gap",
            Self::MinEigenvalue => "min_eig_q",
            Self::MinBeta => "min_beta",
            Self::LambdaInfeasible => "lambda_infeasible",
            Self::ComplementarySlackness => "complementary_slackness",
            Self::Reconstruction => "reconstruction",
            Self::WithinCluster => "within_cluster",
            Self::CrossCluster => "cross_cluster",
            Self::NoiseSeparation => "noise_separation",
            Self::LambdaSandwich => "lambda_sandwich",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Failed(FailureReason),
}

impl Verdict {
    pub fn is_certified(self) -> bool {
        self == Self::Certified
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Certified => f.write_str("CERTIFIED"),
            Self::Failed(r) => write!(f, "FAILED({r})"),
        }
    }
}

/// Outcome of checking a dual certificate. `min_eig_q` is absent for the LP, which has no
/// semidefinite constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub primal: f64,
    pub dual: f64,
    pub duality_gap: f64,
    pub min_eig_q: Option<f64>,
    pub min_beta: f64,
    pub lambda_feasible: bool,
    pub verdict: Verdict,
}

pub(crate) fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).abs() / primal.abs().max(1.0)
}
