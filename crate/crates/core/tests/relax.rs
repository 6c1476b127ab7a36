mod common;

use regkmeans::model::squared_distance_matrix;
use regkmeans::relax::{
    build_problem, integral_objective_check, intended_solution, solve, RelaxationKind, SolverConfig,
};
use regkmeans::Clustering;

use common::{exhaustive_optimum, random_points, rng, solve_relaxation, to_clustering};

const KINDS: [RelaxationKind; 2] = [RelaxationKind::Sdp, RelaxationKind::Lp];

#[test]
fn relaxations_bound_the_integral_optimum() {
    let mut r = rng(31);
    for t in 0..12 {
        let n = 4 + t % 4;
        let k = 1 + t % 2;
        let points = random_points(&mut r, n, 2, 4.0);
        for lambda in [f64::INFINITY, 3.0] {
            let (opt, _) = exhaustive_optimum(&points, k, lambda);
            for kind in KINDS {
                let sol = solve_relaxation(&points, k, lambda, kind, &SolverConfig::default());
                assert!(sol.converged, "{kind:?} n={n} k={k} lambda={lambda}");
                assert!(sol.objective <= opt * (1.0 + 1e-4) + 1e-9, "{kind:?}: {} > {opt}", sol.objective);
                let problem = build_problem(&points, k, lambda, kind).unwrap();
                assert!(problem.primal_residual(&sol.z, sol.y.as_ref()).unwrap() <= 1e-5);
            }
        }
    }
}

#[test]
fn intended_solutions_are_feasible_and_priced_consistently() {
    let mut r = rng(32);
    let points = random_points(&mut r, 7, 3, 2.0);
    let (_, labels) = exhaustive_optimum(&points, 2, 1.5);
    let c = to_clustering(&labels, 2);
    let (z, y) = intended_solution(&c).unwrap();
    let check = integral_objective_check(&points, &c, 1.5).unwrap();
    for kind in KINDS {
        let problem = build_problem(&points, 2, 1.5, kind).unwrap();
        assert!(problem.primal_residual(&z, Some(&y)).unwrap() <= 1e-12);
        assert!((problem.objective(&z, Some(&y)) - check.objective).abs() <= 1e-9);
    }
}

#[test]
fn objective_scales_with_the_points() {
    let mut r = rng(33);
    let points = random_points(&mut r, 6, 2, 3.0);
    let s = 3.0;
    let shifted = points.scaled(s).unwrap().translated(&[40.0, -7.0]).unwrap();
    for kind in KINDS {
        let a = solve_relaxation(&points, 2, 2.0, kind, &SolverConfig::default());
        let b = solve_relaxation(&shifted, 2, 2.0 * s * s, kind, &SolverConfig::default());
        let rel = (b.objective - s * s * a.objective).abs() / (s * s * a.objective);
        assert!(rel <= 1e-4, "{kind:?}: {rel}");
    }
}

#[test]
fn solves_are_deterministic() {
    let mut r = rng(34);
    let points = random_points(&mut r, 8, 2, 3.0);
    for kind in KINDS {
        let a = solve_relaxation(&points, 2, 4.0, kind, &SolverConfig::default());
        let b = solve_relaxation(&points, 2, 4.0, kind, &SolverConfig::default());
        assert_eq!(a.z, b.z);
        assert_eq!(a.y, b.y);
        assert_eq!(a.objective_trace, b.objective_trace);
    }
}

#[test]
fn one_cluster_per_point_is_free() {
    let mut r = rng(35);
    let points = random_points(&mut r, 5, 2, 1.0);
    for kind in KINDS {
        let sol = solve_relaxation(&points, 5, f64::INFINITY, kind, &SolverConfig::default());
        assert!(sol.objective.abs() <= 1e-6 * squared_distance_matrix(&points).max());
        assert!(sol.y.is_none());
    }
}

#[test]
fn exhausted_budget_reports_non_convergence() {
    let mut r = rng(36);
    let points = random_points(&mut r, 8, 2, 3.0);
    let problem = build_problem(&points, 2, 1.0, RelaxationKind::Sdp).unwrap();
    let sol = solve(&problem, &SolverConfig { max_iter: 5, ..SolverConfig::default() }).unwrap();
    assert!(!sol.converged);
    assert_eq!(sol.iterations, 5);
    assert!(solve(&problem, &SolverConfig { tol: 0.0, ..SolverConfig::default() }).is_err());
}

#[test]
fn single_point_problem() {
    let points = regkmeans::PointSet::from_rows(&[vec![1.0, 2.0]]).unwrap();
    let sol = solve_relaxation(&points, 1, 5.0, RelaxationKind::Sdp, &SolverConfig::default());
    assert_eq!(sol.objective, 0.0);
    assert!(sol.converged);
    let c = Clustering::from_assignment(&[0]);
    assert_eq!(intended_solution(&c).unwrap().0[(0, 0)], 1.0);
}
