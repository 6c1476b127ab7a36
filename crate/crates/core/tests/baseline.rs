mod common;

use proptest::prelude::*;

use regkmeans::baseline::{kmeanspp_seed, lloyd, LloydConfig};
use regkmeans::model::kmeans_cost;
use regkmeans::PointSet;

use common::{exhaustive_optimum, random_points, rng};

fn point_set(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PointSet> {
    (n, 1usize..4).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
            .prop_map(|rows| PointSet::from_rows(&rows).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn traces_never_increase(points in point_set(3..=30), k in 1usize..4, seed in any::<u64>()) {
        prop_assume!(k <= points.n_points());
        let run = lloyd(&points, &LloydConfig { restarts: 3, ..LloydConfig::new(k, seed) }).unwrap();
        for trace in &run.cost_traces {
            prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12));
        }
        let finals: Vec<f64> = run.cost_traces.iter().map(|t| *t.last().unwrap()).collect();
        prop_assert!(finals.iter().all(|&c| run.cost <= c));
        prop_assert_eq!(run.cost, finals[run.best_restart]);
        let cost = kmeans_cost(&points, &run.clustering).unwrap();
        prop_assert!((cost - run.cost).abs() <= 1e-9 * cost.max(1.0));
    }

    #[test]
    fn seeding_picks_distinct_points(points in point_set(1..=20), k in 1usize..6, seed in any::<u64>()) {
        prop_assume!(k <= points.n_points());
        let mut idx = kmeanspp_seed(&points, k, seed).unwrap();
        prop_assert_eq!(idx.clone(), kmeanspp_seed(&points, k, seed).unwrap());
        idx.sort_unstable();
        idx.dedup();
        prop_assert_eq!(idx.len(), k);
    }
}

#[test]
fn many_restarts_reach_the_small_optimum() {
    let mut r = rng(71);
    for _ in 0..10 {
        let points = random_points(&mut r, 7, 2, 5.0);
        let (opt, _) = exhaustive_optimum(&points, 2, f64::INFINITY);
        let run = lloyd(&points, &LloydConfig { restarts: 50, ..LloydConfig::new(2, 5) }).unwrap();
        // The oracle objective is twice the within-cluster sum of squares.
        assert!((2.0 * run.cost - opt).abs() <= 1e-9 * opt.max(1.0), "{} vs {opt}", 2.0 * run.cost);
    }
}

#[test]
fn one_cluster_per_point_costs_nothing() {
    let mut r = rng(3);
    let points = random_points(&mut r, 6, 3, 1.0);
    let run = lloyd(&points, &LloydConfig::new(6, 0)).unwrap();
    assert_eq!(run.cost, 0.0);
    assert!(lloyd(&points, &LloydConfig::new(7, 0)).is_err());
    assert!(lloyd(&points, &LloydConfig { restarts: 0, ..LloydConfig::new(2, 0) }).is_err());
}
