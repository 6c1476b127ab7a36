//! Single-shot subcommands.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::seq::index::sample;
use serde::Serialize;

use regkmeans::baseline::{lloyd, LloydConfig};
use regkmeans::certificate::{
    construct_dual_noiseless, construct_dual_regularised, lambda_window, lp_certificate, verify,
    CertificateReport, VerifyOptions,
};
use regkmeans::cliquered::{
    brute_force_reg_1means, build_instance, clique_decision, clique_threshold, Graph, BRUTE_FORCE_LIMIT,
};
use regkmeans::model::io::{
    load_idx, load_idx_labels, read_labels_csv, read_points_csv, write_labels_csv, write_points_csv,
};
use regkmeans::model::{clustering_distance, pair_metrics, restrict};
use regkmeans::relax::{build_problem, solve as solve_relaxation, RelaxationKind, SolverConfig};
use regkmeans::rounding::{assign_noise_to_clusters, round_solution, RoundingConfig};
use regkmeans::seed::rng;
use regkmeans::synth::{
    audit, generate, instance_stats, BallModelConfig, GroundTruth, InstanceStats, NoiseConfig,
};
use regkmeans::{Clustering, Label, PointSet};

use crate::solution::{lambda_to_json, read_json, read_solution, write_json, write_solution};
use crate::{
    BaselineArgs, CertifyArgs, CliqueArgs, EvalArgs, GenArgs, IngestArgs, RoundArgs, SolveArgs, Status,
};

fn points(path: &Path) -> Result<PointSet> {
    read_points_csv(path, false).with_context(|| format!("reading points {}", path.display()))
}

fn labels(path: &Path) -> Result<Clustering> {
    read_labels_csv(path, None).with_context(|| format!("reading labels {}", path.display()))
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct Bundle {
    ball: BallModelConfig,
    noise: NoiseConfig,
    truth: GroundTruth,
    audit_failures: Vec<String>,
    audit_passed: bool,
    stats: InstanceStats,
    lambda_window: (f64, f64),
}

pub fn gen(a: GenArgs) -> Result<Status> {
    let mut ball: BallModelConfig = read_json(&a.ball)?;
    let mut noise: NoiseConfig = match &a.noise {
        Some(path) => read_json(path)?,
        None => NoiseConfig::default(),
    };
    ball.k = a.k.unwrap_or(ball.k);
    ball.d = a.d.unwrap_or(ball.d);
    ball.n = a.n.unwrap_or(ball.n);
    ball.delta = a.delta.unwrap_or(ball.delta);
    ball.seed = a.seed.unwrap_or(ball.seed);
    noise.seed = a.noise_seed.unwrap_or(noise.seed);
    let inst = generate(&ball, &noise)?;
    let failures = audit(&inst, &noise);
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_points_csv(a.out.join("points.csv"), &inst.points)?;
    write_labels_csv(a.out.join("labels.csv"), &inst.truth.planted_clustering(&inst.points)?)?;
    let bundle = Bundle {
        stats: instance_stats(&inst.truth, &inst.points)?,
        lambda_window: lambda_window(ball.delta),
        audit_passed: failures.is_empty(),
        audit_failures: failures,
        ball,
        noise,
        truth: inst.truth,
    };
    write_json(&a.out.join("bundle.json"), &bundle)?;
    ensure!(bundle.audit_passed, "instance audit failed: {}", bundle.audit_failures.join("; "));
    Ok(Status::Ok)
}

pub fn solve(a: SolveArgs) -> Result<Status> {
    let pts = points(&a.points)?;
    let kind = RelaxationKind::from(a.kind);
    let defaults = SolverConfig::default();
    let config = SolverConfig {
        tol: a.tol.unwrap_or(defaults.tol),
        max_iter: a.max_iter.unwrap_or(defaults.max_iter),
        ..defaults
    };
    let sol = solve_relaxation(&build_problem(&pts, a.k, a.lambda, kind)?, &config)?;
    let header = write_solution(&a.out, &sol, kind, a.k, a.lambda, a.format)?;
    println!(
        "objective={} residual={:e} iterations={} converged={}",
        header.objective, header.primal_residual, header.iterations, header.converged
    );
    Ok(if sol.converged { Status::Ok } else { Status::NotConverged })
}

pub fn round(a: RoundArgs) -> Result<Status> {
    let pts = points(&a.points)?;
    let (header, z, y) = read_solution(&a.solution)?;
    let config = RoundingConfig { threshold: a.threshold, restarts: a.restarts, seed: a.seed };
    let mut out = round_solution(&pts, &z, y.as_ref(), header.k, &config)?;
    if a.reassign {
        out = assign_noise_to_clusters(&pts, &out)?;
    }
    write_labels_csv(&a.out, &out)?;
    Ok(Status::Ok)
}

/// Builds the dual certificate of `kind` for `partition` and checks it.
pub fn certify_partition(
    pts: &PointSet,
    partition: &Clustering,
    kind: RelaxationKind,
    lambda: f64,
    delta: Option<f64>,
    z: Option<f64>,
) -> Result<CertificateReport> {
    let report = match kind {
        RelaxationKind::Lp => lp_certificate(pts, partition, lambda)?.1,
        RelaxationKind::Sdp if lambda.is_infinite() => {
            let cert = construct_dual_noiseless(pts, partition, z)?;
            verify(&cert, pts, partition, None, &VerifyOptions { delta })?
        }
        RelaxationKind::Sdp => {
            let cert = construct_dual_regularised(pts, partition, lambda, z)?;
            verify(&cert, pts, partition, Some(lambda), &VerifyOptions { delta })?
        }
    };
    Ok(report)
}

#[derive(Debug, Serialize)]
struct CertifyOutput {
    kind: RelaxationKind,
    lambda: Option<f64>,
    verdict_text: String,
    report: CertificateReport,
}

pub fn certify(a: CertifyArgs) -> Result<Status> {
    let pts = points(&a.points)?;
    let partition = labels(&a.labels)?;
    let kind = RelaxationKind::from(a.kind);
    let report = certify_partition(&pts, &partition, kind, a.lambda, a.delta, a.z)?;
    let certified = report.verdict.is_certified();
    let out = CertifyOutput {
        kind,
        lambda: lambda_to_json(a.lambda),
        verdict_text: report.verdict.to_string(),
        report,
    };
    emit(a.out.as_deref(), &out)?;
    Ok(if certified { Status::Ok } else { Status::CertificateFailed })
}

pub fn baseline(a: BaselineArgs) -> Result<Status> {
    let pts = points(&a.points)?;
    let config = LloydConfig { k: a.k, restarts: a.restarts, max_iter: a.max_iter, seed: a.seed };
    let run = lloyd(&pts, &config)?;
    write_labels_csv(&a.out, &run.clustering)?;
    println!("cost={} best_restart={}", run.cost, run.best_restart);
    Ok(Status::Ok)
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    n: usize,
    delta: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

pub fn eval(a: EvalArgs) -> Result<Status> {
    let mut cand = labels(&a.candidate)?;
    let mut refr = labels(&a.reference)?;
    ensure!(cand.len() == refr.len(), "candidate has {} labels, reference has {}", cand.len(), refr.len());
    if let Some(path) = &a.points {
        if cand.has_noise() {
            cand = assign_noise_to_clusters(&points(path)?, &cand)?;
        }
    }
    if a.clean_only {
        let keep = refr.non_noise();
        cand = restrict(&cand, &keep)?;
        refr = restrict(&refr, &keep)?;
    }
    if cand.has_noise() {
        bail!("candidate has noise labels; pass --points to reassign them");
    }
    if refr.has_noise() {
        bail!("reference has noise labels; pass --clean-only to drop them");
    }
    let m = pair_metrics(&cand, &refr)?;
    let out = EvalOutput {
        n: cand.len(),
        delta: clustering_distance(&cand, &refr)?,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
    };
    emit(a.out.as_deref(), &out)?;
    Ok(Status::Ok)
}

#[derive(Debug, Serialize)]
struct CliqueOutput {
    n_vertices: usize,
    n_edges: usize,
    lambda0: f64,
    delta_param: f64,
    optimum_cost: Option<f64>,
    /// 1-indexed vertices of the optimal subset.
    optimum_subset: Option<Vec<usize>>,
    q: Option<usize>,
    threshold: Option<f64>,
    has_clique: Option<bool>,
}

pub fn clique(a: CliqueArgs) -> Result<Status> {
    let text = fs::read_to_string(&a.edges).with_context(|| format!("reading {}", a.edges.display()))?;
    let graph = Graph::parse_edge_list(&text)?;
    let n = graph.n_vertices();
    let inst = build_instance(&graph, a.delta_param)?;
    if let Some(path) = &a.points_out {
        write_points_csv(path, &inst.points)?;
    }
    let optimum =
        if n <= BRUTE_FORCE_LIMIT { Some(brute_force_reg_1means(&inst.points, inst.lambda0)?) } else { None };
    let has_clique = match a.q {
        Some(q) if n <= BRUTE_FORCE_LIMIT => Some(clique_decision(&graph, q)?),
        _ => None,
    };
    let out = CliqueOutput {
        n_vertices: n,
        n_edges: graph.edges().len(),
        lambda0: inst.lambda0,
        delta_param: inst.delta_param,
        optimum_cost: optimum.as_ref().map(|o| o.0),
        optimum_subset: optimum.map(|o| o.1.iter().map(|i| i + 1).collect()),
        q: a.q,
        threshold: a.q.map(|q| clique_threshold(n, q, inst.lambda0)),
        has_clique,
    };
    emit(a.out.as_deref(), &out)?;
    Ok(Status::Ok)
}

#[derive(Debug, Serialize)]
struct IngestManifest {
    images: String,
    labels: String,
    classes: Vec<u8>,
    per_class: usize,
    seed: u64,
    /// Source row of every output point.
    indices: Vec<usize>,
}

pub fn ingest(a: IngestArgs) -> Result<Status> {
    let images = load_idx(&a.images).with_context(|| format!("reading {}", a.images.display()))?;
    let classes = load_idx_labels(&a.labels).with_context(|| format!("reading {}", a.labels.display()))?;
    let images = images.context("image file holds no images")?;
    ensure!(images.n_points() == classes.len(), "{} images but {} labels", images.n_points(), classes.len());
    ensure!(a.per_class >= 1, "per-class count must be >= 1");
    let mut r = rng(a.seed);
    let mut picked: Vec<(usize, usize)> = Vec::new();
    for (c, &digit) in a.classes.iter().enumerate() {
        let pool: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == digit).collect();
        ensure!(pool.len() >= a.per_class, "class {digit} has {} images, need {}", pool.len(), a.per_class);
        picked.extend(sample(&mut r, pool.len(), a.per_class).into_iter().map(|j| (pool[j], c)));
    }
    picked.sort_unstable();
    let indices: Vec<usize> = picked.iter().map(|p| p.0).collect();
    let out_labels = Clustering::new(picked.iter().map(|p| Label::Cluster(p.1)).collect(), a.classes.len())?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_points_csv(a.out.join("points.csv"), &images.select(&indices)?)?;
    write_labels_csv(a.out.join("labels.csv"), &out_labels)?;
    let manifest = IngestManifest {
        images: a.images.display().to_string(),
        labels: a.labels.display().to_string(),
        classes: a.classes,
        per_class: a.per_class,
        seed: a.seed,
        indices,
    };
    write_json(&a.out.join("manifest.json"), &manifest)?;
    Ok(Status::Ok)
}
