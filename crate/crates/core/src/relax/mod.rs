//! SDP and LP relaxations of regularised k-means and a splitting solver for both.
//!
//! Objectives follow the matrix convention `Tr(DZ) + lambda <1, y>`; on an integral solution
//! `Tr(DZ)` is twice the within-cluster sum of squares.

mod projection;
mod solver;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{squared_distance_matrix, within_cluster_sse, Clustering, DistanceMatrix, PointSet};

pub use projection::{min_eigenvalue, psd_project, symmetric_eigen};
pub use solver::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationKind {
    Sdp,
    Lp,
}

impl std::str::FromStr for RelaxationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sdp" => Ok(Self::Sdp),
            "lp" => Ok(Self::Lp),
            other => Err(Error::InvalidParameter(format!("unknown relaxation kind {other:?}"))),
        }
    }
}

/// `lambda = INFINITY` drops `y` and its penalty.
#[derive(Debug, Clone)]
pub struct RelaxedProblem {
    distances: DistanceMatrix,
    k: usize,
    lambda: f64,
    kind: RelaxationKind,
}

impl RelaxedProblem {
    pub fn new(distances: DistanceMatrix, k: usize, lambda: f64, kind: RelaxationKind) -> Result<Self> {
        let n = distances.len();
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!("k = {k} must be in 1..={n}")));
        }
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(Self { distances, k, lambda, kind })
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn n(&self) -> usize {
        self.distances.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kind(&self) -> RelaxationKind {
        self.kind
    }

    pub fn has_noise_variable(&self) -> bool {
        self.lambda.is_finite()
    }

    /// `Tr(DZ) + lambda <1, y>`.
    pub fn objective(&self, z: &DMatrix<f64>, y: Option<&DVector<f64>>) -> f64 {
        let trace = self.distances.matrix().component_mul(z).sum();
        match y {
            Some(y) if self.has_noise_variable() => trace + self.lambda * y.sum(),
            _ => trace,
        }
    }

    /// Largest violation of any constraint of the feasible set at `(z, y)`.
    pub fn primal_residual(&self, z: &DMatrix<f64>, y: Option<&DVector<f64>>) -> Result<f64> {
        let n = self.n();
        if z.nrows() != n || z.ncols() != n {
            return Err(Error::SizeMismatch { expected: n, got: z.nrows() });
        }
        if let Some(y) = y {
            if y.len() != n {
                return Err(Error::SizeMismatch { expected: n, got: y.len() });
            }
        }
        let y = y.filter(|_| self.has_noise_variable());
        let mut worst = (z.trace() - self.k as f64).abs();
        for p in 0..n {
            let row = match self.kind {
                RelaxationKind::Sdp => (0..n).map(|q| 0.5 * (z[(p, q)] + z[(q, p)])).sum::<f64>(),
                RelaxationKind::Lp => z.row(p).sum(),
            };
            let yp = y.map_or(0.0, |y| y[p]);
            worst = worst.max((row + yp - 1.0).abs());
            worst = worst.max(-yp);
        }
        worst = worst.max(-z.min());
        match self.kind {
            RelaxationKind::Sdp => worst = worst.max(-min_eigenvalue(z)?),
            RelaxationKind::Lp => {
                for p in 0..n {
                    for q in 0..n {
                        worst = worst.max(z[(p, q)] - z[(p, p)]);
                    }
                }
            }
        }
        Ok(worst.max(0.0))
    }
}

pub fn build_problem(
    points: &PointSet,
    k: usize,
    lambda: f64,
    kind: RelaxationKind,
) -> Result<RelaxedProblem> {
    RelaxedProblem::new(squared_distance_matrix(points), k, lambda, kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub step: f64,
    pub over_relaxation: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-5, max_iter: 20_000, step: 1.0, over_relaxation: 1.6 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter("need tol > 0 and max_iter >= 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        if !(self.over_relaxation > 0.0 && self.over_relaxation < 2.0) {
            return Err(Error::InvalidParameter("over_relaxation must lie in (0, 2)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelaxedSolution {
    pub z: DMatrix<f64>,
    pub y: Option<DVector<f64>>,
    pub objective: f64,
    pub primal_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective among near-feasible checkpoints, one entry per checkpoint.
    pub objective_trace: Vec<f64>,
}

/// `Z = sum_p (1/n_p) 1_p 1_p^T` and `y` the indicator of the noise cluster.
///
/// An all-noise clustering gives `Z = 0`; otherwise every structured cluster must be nonempty.
pub fn intended_solution(clustering: &Clustering) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = clustering.len();
    let mut z = DMatrix::zeros(n, n);
    let all_noise = clustering.non_noise().is_empty();
    for (c, members) in clustering.clusters().iter().enumerate() {
        if members.is_empty() && !all_noise {
            return Err(Error::EmptyCluster(c + 1));
        }
        if members.is_empty() {
            continue;
        }
        let w = 1.0 / members.len() as f64;
        for &i in members {
            for &j in members {
                z[(i, j)] = w;
            }
        }
    }
    let y =
        DVector::from_iterator(n, clustering.labels().iter().map(|l| if l.is_noise() { 1.0 } else { 0.0 }));
    Ok((z, y))
}

/// Both bookkeeping conventions for an integral solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralObjective {
    /// `Tr(DZ)`, twice the within-cluster sum of squares.
    pub trace_dz: f64,
    pub sse: f64,
    pub noise_count: usize,
    /// `Tr(DZ) + lambda |noise|`.
    pub objective: f64,
    /// `sse + (lambda / 2) |noise|`, the regularised cost at half the penalty.
    pub regularised_cost: f64,
}

pub fn integral_objective_check(
    points: &PointSet,
    clustering: &Clustering,
    lambda: f64,
) -> Result<IntegralObjective> {
    if clustering.len() != points.n_points() {
        return Err(Error::SizeMismatch { expected: points.n_points(), got: clustering.len() });
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let (z, _) = intended_solution(clustering)?;
    let trace_dz = squared_distance_matrix(points).matrix().component_mul(&z).sum();
    let sse = clustering
        .clusters()
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| within_cluster_sse(points, m))
        .sum::<Result<f64>>()?;
    let noise_count = clustering.noise().len();
    let penalty = if noise_count == 0 { 0.0 } else { lambda * noise_count as f64 };
    Ok(IntegralObjective {
        trace_dz,
        sse,
        noise_count,
        objective: trace_dz + penalty,
        regularised_cost: sse + 0.5 * penalty,
    })
}
