//! Over-relaxed ADMM with adaptive penalty.
//!
//! The iterate `x = (Z, y)` lives on the affine set of the equality constraints. Cone copies
//! are the PSD cone and the nonnegative orthant for the SDP, the row-dominance cone for the LP,
//! and the nonnegative orthant for `y`. Costs are normalised by the largest distance so the
//! penalty parameter is scale free.

use nalgebra::{DMatrix, DVector};

use super::projection::{affine_project_rows, affine_project_symmetric, dominance_project, psd_project};
use super::{RelaxationKind, RelaxedProblem, RelaxedSolution, SolverConfig};
use crate::error::Result;

const CHECK_INTERVAL: usize = 50;
const RHO_MIN: f64 = 1e-3;
const RHO_MAX: f64 = 1e3;
const TRACE_FEASIBILITY: f64 = 1e-3;
// The splitting residuals are held tighter than the reported feasibility tolerance so that
// objectives land well inside 1e-4 relative of the optimum.
const ADMM_FACTOR: f64 = 0.1;
// Objectives small against the largest distance get proportionally tighter residuals, down to
// this floor, so the relative objective accuracy does not degrade with their size.
const OBJECTIVE_FLOOR: f64 = 1e-4;

pub fn solve(problem: &RelaxedProblem, config: &SolverConfig) -> Result<RelaxedSolution> {
    config.validate()?;
    let n = problem.n();
    let k = problem.k() as f64;
    let with_y = problem.has_noise_variable();
    if n == 1 {
        // The feasible set is the single point Z = 1, y = 0.
        let z = DMatrix::from_element(1, 1, 1.0);
        let y = with_y.then(|| DVector::zeros(1));
        return finish(problem, z, y, 0, true, Vec::new());
    }

    let scale = match problem.distances().max() {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let cost = problem.distances().matrix() / scale;
    let lam = problem.lambda() / scale;
    let copies = match problem.kind() {
        RelaxationKind::Sdp => 2,
        RelaxationKind::Lp => 1,
    };
    let alpha = config.over_relaxation;
    let mut rho = config.step.clamp(RHO_MIN, RHO_MAX);
    let y_factor = if with_y { lam.max(1.0) } else { 1.0 };

    let mut z = DMatrix::<f64>::zeros(n, n);
    let mut w = vec![DMatrix::<f64>::zeros(n, n); copies];
    let mut u = vec![DMatrix::<f64>::zeros(n, n); copies];
    let mut y = with_y.then(|| DVector::<f64>::zeros(n));
    let mut wy = y.clone();
    let mut uy = y.clone();

    let mut trace = Vec::new();
    let mut running_min = f64::INFINITY;

    for it in 1..=config.max_iter {
        let rho_y = rho * y_factor;
        // Affine step.
        z.fill(0.0);
        for (wi, ui) in w.iter().zip(&u) {
            z += wi;
            z -= ui;
        }
        z /= copies as f64;
        z -= &cost * (1.0 / (copies as f64 * rho));
        if let (Some(y), Some(wy), Some(uy)) = (y.as_mut(), wy.as_ref(), uy.as_ref()) {
            y.copy_from(wy);
            *y -= uy;
            y.add_scalar_mut(-lam / rho_y);
        }
        let ratio = rho_y / (copies as f64 * rho);
        match problem.kind() {
            RelaxationKind::Sdp => affine_project_symmetric(&mut z, y.as_mut(), k, ratio),
            RelaxationKind::Lp => affine_project_rows(&mut z, y.as_mut(), k, ratio),
        }

        // Cone steps on the over-relaxed point, then scaled dual updates.
        let mut r_sq = 0.0;
        let mut s_sq = 0.0;
        for c in 0..copies {
            let mut v = &z * alpha + &w[c] * (1.0 - alpha);
            v += &u[c];
            let next = match (problem.kind(), c) {
                (RelaxationKind::Sdp, 0) => psd_project(&v)?,
                (RelaxationKind::Sdp, _) => v.map(|e| e.max(0.0)),
                (RelaxationKind::Lp, _) => {
                    let mut m = v.clone();
                    dominance_project(&mut m);
                    m
                }
            };
            u[c] = v - &next;
            s_sq += (rho * (&next - &w[c]).norm()).powi(2);
            r_sq += (&z - &next).norm_squared();
            w[c] = next;
        }
        if let (Some(y), Some(wy), Some(uy)) = (y.as_ref(), wy.as_mut(), uy.as_mut()) {
            let v = y * alpha + &*wy * (1.0 - alpha) + &*uy;
            let next = v.map(|e| e.max(0.0));
            *uy = v - &next;
            s_sq += (rho_y * (&next - &*wy).norm()).powi(2);
            r_sq += (y - &next).norm_squared();
            *wy = next;
        }
        let (r, s) = (r_sq.sqrt(), s_sq.sqrt());

        let base = ADMM_FACTOR * config.tol;
        let admm_done = r <= base && s <= base && {
            let mut obj = cost.component_mul(&z).sum();
            if let Some(y) = y.as_ref() {
                obj += lam * y.sum();
            }
            let bound = base * obj.abs().clamp(OBJECTIVE_FLOOR, 1.0);
            r <= bound && s <= bound
        };
        if admm_done || it % CHECK_INTERVAL == 0 || it == config.max_iter {
            let residual = problem.primal_residual(&z, y.as_ref())?;
            if residual <= TRACE_FEASIBILITY {
                running_min = running_min.min(problem.objective(&z, y.as_ref()));
            }
            if running_min.is_finite() && it % CHECK_INTERVAL == 0 {
                trace.push(running_min);
            }
            if admm_done && residual <= config.tol {
                return finish(problem, z, y, it, true, trace);
            }
        }

        if it % CHECK_INTERVAL == 0 {
            let new_rho = if r > 10.0 * s || s > 10.0 * r {
                (rho * (r / s).sqrt()).clamp(RHO_MIN, RHO_MAX)
            } else {
                rho
            };
            if new_rho != rho {
                let f = rho / new_rho;
                u.iter_mut().for_each(|ui| *ui *= f);
                if let Some(uy) = uy.as_mut() {
                    *uy *= f;
                }
                rho = new_rho;
            }
        }
    }

    finish(problem, z, y, config.max_iter, false, trace)
}

fn finish(
    problem: &RelaxedProblem,
    z: DMatrix<f64>,
    y: Option<DVector<f64>>,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
) -> Result<RelaxedSolution> {
    let primal_residual = problem.primal_residual(&z, y.as_ref())?;
    Ok(RelaxedSolution {
        objective: problem.objective(&z, y.as_ref()),
        z,
        y,
        primal_residual,
        iterations,
        converged,
        objective_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{within_cluster_sse, PointSet};
    use crate::relax::build_problem;

    fn points() -> PointSet {
        PointSet::from_rows(&[
            vec![0.0, 0.0],
            vec![0.5, 0.1],
            vec![0.2, 0.6],
            vec![4.0, 4.0],
            vec![4.3, 3.8],
            vec![3.9, 4.4],
        ])
        .unwrap()
    }

    #[test]
    fn one_cluster_is_the_uniform_matrix() {
        let p = points();
        for kind in [RelaxationKind::Sdp, RelaxationKind::Lp] {
            let prob = build_problem(&p, 1, f64::INFINITY, kind).unwrap();
            let sol = solve(&prob, &SolverConfig::default()).unwrap();
            assert!(sol.converged, "{kind:?}");
            let target = DMatrix::from_element(6, 6, 1.0 / 6.0);
            assert!((&sol.z - target).amax() < 1e-4, "{kind:?}");
            let sse = within_cluster_sse(&p, &[0, 1, 2, 3, 4, 5]).unwrap();
            assert!((sol.objective - 2.0 * sse).abs() < 1e-4 * 2.0 * sse);
        }
    }

    #[test]
    fn single_point() {
        let p = PointSet::from_rows(&[vec![1.0]]).unwrap();
        let sol = solve(&build_problem(&p, 1, 2.0, RelaxationKind::Sdp).unwrap(), &SolverConfig::default())
            .unwrap();
        assert_eq!(sol.z[(0, 0)], 1.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn two_clusters_recovered() {
        let p = points();
        let prob = build_problem(&p, 2, f64::INFINITY, RelaxationKind::Sdp).unwrap();
        let sol = solve(&prob, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.z[(0, 1)] > 0.3 && sol.z[(0, 4)].abs() < 1e-3);
        assert!(sol.primal_residual <= 1e-5);
        assert!((&sol.z - sol.z.transpose()).amax() < 1e-8);
    }

    #[test]
    fn trace_is_non_increasing() {
        let p = points();
        let prob = build_problem(&p, 2, 1.0, RelaxationKind::Sdp).unwrap();
        let cfg = SolverConfig { tol: 1e-9, max_iter: 600, ..SolverConfig::default() };
        let sol = solve(&prob, &cfg).unwrap();
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-7);
        }
    }

    #[test]
    fn deterministic() {
        let prob = build_problem(&points(), 2, 2.0, RelaxationKind::Lp).unwrap();
        let a = solve(&prob, &SolverConfig::default()).unwrap();
        let b = solve(&prob, &SolverConfig::default()).unwrap();
        assert_eq!(a.z, b.z);
        assert_eq!(a.iterations, b.iterations);
    }
}
