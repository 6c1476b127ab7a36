//! Success-probability grids over two instance parameters.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use regkmeans::model::{clustering_distance, pair_metrics, restrict};
use regkmeans::relax::{build_problem, solve, RelaxationKind, SolverConfig};
use regkmeans::rounding::{assign_noise_to_clusters, round_solution, RoundingConfig};
use regkmeans::seed::derive_seed;
use regkmeans::synth::{generate, BallModelConfig, NoiseConfig};

use crate::commands::certify_partition;
use crate::solution::{read_json, write_json};
use crate::{Status, SweepArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Delta,
    Lambda,
    N,
    D,
    K,
    MFar,
    MNear,
    MUniform,
    MarginAlpha,
    FarFactor,
    BoxScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: Param,
    pub values: Vec<f64>,
}

/// Parameters shared by every cell. Seeds inside `ball` and `noise` are replaced per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    pub ball: BallModelConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    /// `null` is an infinite penalty.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_kind")]
    pub kind: RelaxationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessRule {
    /// Largest Δ to the planted clustering that still counts; 0 is exact recovery.
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    pub fixed: Fixed,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub success_rule: SuccessRule,
    /// Certify every success against the planted clustering.
    #[serde(default)]
    pub certify: bool,
}

fn default_kind() -> RelaxationKind {
    RelaxationKind::Sdp
}

fn default_trials() -> usize {
    50
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            !self.axis1.values.is_empty() && !self.axis2.values.is_empty(),
            "axis grids must be nonempty"
        );
        ensure!(self.axis1.name != self.axis2.name, "the two axes must differ");
        ensure!(self.trials >= 1, "trials must be >= 1");
        ensure!(self.success_rule.gamma >= 0.0, "success gamma must be >= 0");
        // Every cell must at least parse; instance errors are recorded per trial instead.
        for &a in &self.axis1.values {
            for &b in &self.axis2.values {
                self.cell(a, b)?;
            }
        }
        Ok(())
    }

    fn cell(&self, a: f64, b: f64) -> Result<(BallModelConfig, NoiseConfig, f64)> {
        let mut ball = self.fixed.ball.clone();
        let mut noise = self.fixed.noise.clone();
        let mut lambda = self.fixed.lambda.unwrap_or(f64::INFINITY);
        for (param, v) in [(self.axis1.name, a), (self.axis2.name, b)] {
            apply(param, v, &mut ball, &mut noise, &mut lambda)?;
        }
        Ok((ball, noise, lambda))
    }
}

fn apply(
    param: Param,
    v: f64,
    ball: &mut BallModelConfig,
    noise: &mut NoiseConfig,
    lambda: &mut f64,
) -> Result<()> {
    let count = || -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as usize)
        } else {
            bail!("{param:?} needs a nonnegative integer, got {v}")
        }
    };
    match param {
        Param::Delta => ball.delta = v,
        Param::Lambda => *lambda = v,
        Param::N => ball.n = count()?,
        Param::D => ball.d = count()?,
        Param::K => ball.k = count()?,
        Param::MFar => noise.m_far = count()?,
        Param::MNear => noise.m_near = count()?,
        Param::MUniform => noise.m_uniform = count()?,
        Param::MarginAlpha => noise.margin_alpha = v,
        Param::FarFactor => noise.far_factor = v,
        Param::BoxScale => noise.box_scale = v,
    }
    Ok(())
}

/// One trial. Everything but timing is a function of the spec and the trial seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub cell: usize,
    pub trial: usize,
    pub axis1: f64,
    pub axis2: f64,
    pub ball_seed: u64,
    pub noise_seed: u64,
    pub recovered: bool,
    pub delta: Option<f64>,
    /// Pair f1 on the structured points after moving noise to the nearest cluster.
    pub f1: Option<f64>,
    pub objective: Option<f64>,
    pub converged: Option<bool>,
    pub verdict: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Default)]
struct Outcome {
    recovered: bool,
    delta: Option<f64>,
    f1: Option<f64>,
    objective: Option<f64>,
    converged: Option<bool>,
    verdict: Option<String>,
}

fn trial(spec: &SweepSpec, ball: &BallModelConfig, noise: &NoiseConfig, lambda: f64) -> Result<Outcome> {
    let inst = generate(ball, noise)?;
    let planted = inst.truth.planted_clustering(&inst.points)?;
    let problem = build_problem(&inst.points, ball.k, lambda, spec.fixed.kind)?;
    let sol = solve(&problem, &SolverConfig::default())?;
    let mut out =
        Outcome { objective: Some(sol.objective), converged: Some(sol.converged), ..Outcome::default() };
    let rounded =
        match round_solution(&inst.points, &sol.z, sol.y.as_ref(), ball.k, &RoundingConfig::default()) {
            Ok(r) => r,
            // Everything thresholded to noise is a failed trial, not an error.
            Err(_) => return Ok(out),
        };
    let delta = clustering_distance(&rounded, &planted)?;
    out.delta = Some(delta);
    out.recovered = delta <= spec.success_rule.gamma && rounded.noise() == planted.noise();
    let clean = inst.truth.structured();
    let reassigned = restrict(&assign_noise_to_clusters(&inst.points, &rounded)?, &clean)?;
    out.f1 = Some(pair_metrics(&reassigned, &inst.truth.clean_clustering()?)?.f1);
    if spec.certify && out.recovered {
        let report = certify_partition(&inst.points, &planted, spec.fixed.kind, lambda, None, None)?;
        out.verdict = Some(report.verdict.to_string());
    }
    Ok(out)
}

/// Runs every trial of every cell; results come back in (cell, trial) order.
pub fn run_grid(spec: &SweepSpec) -> Result<Vec<(RunRecord, f64)>> {
    spec.validate()?;
    let n2 = spec.axis2.values.len();
    let jobs: Vec<(usize, usize)> =
        (0..spec.axis1.values.len() * n2).flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let records = jobs
        .into_par_iter()
        .map(|(cell, t)| {
            let (a, b) = (spec.axis1.values[cell / n2], spec.axis2.values[cell % n2]);
            let (mut ball, mut noise, lambda) = spec.cell(a, b).expect("validated");
            ball.seed = derive_seed(spec.seed, &[cell as u64, t as u64, 0]);
            noise.seed = derive_seed(spec.seed, &[cell as u64, t as u64, 1]);
            let start = Instant::now();
            let outcome = trial(spec, &ball, &noise, lambda);
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let (o, error) = match outcome {
                Ok(o) => (o, None),
                Err(e) => (Outcome::default(), Some(format!("{e:#}"))),
            };
            let rec = RunRecord {
                cell,
                trial: t,
                axis1: a,
                axis2: b,
                ball_seed: ball.seed,
                noise_seed: noise.seed,
                recovered: o.recovered,
                delta: o.delta,
                f1: o.f1,
                objective: o.objective,
                converged: o.converged,
                verdict: o.verdict,
                error,
            };
            (rec, ms)
        })
        .collect();
    Ok(records)
}

/// Success fraction per cell, row-major over (axis1, axis2).
pub fn fractions(spec: &SweepSpec, records: &[RunRecord]) -> Vec<f64> {
    let cells = spec.axis1.values.len() * spec.axis2.values.len();
    let mut wins = vec![0usize; cells];
    for r in records.iter().filter(|r| r.recovered) {
        wins[r.cell] += 1;
    }
    wins.iter().map(|&w| w as f64 / spec.trials as f64).collect()
}

/// Binary greymap, one pixel per cell, 255 for fraction 1.
pub fn heatmap(rows: usize, cols: usize, fractions: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(fractions.iter().map(|f| (f.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

fn name(p: Param) -> String {
    serde_json::to_value(p).ok().and_then(|v| v.as_str().map(str::to_owned)).expect("unit variant")
}

fn write_outputs(dir: &Path, spec: &SweepSpec, results: &[(RunRecord, f64)]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let records: Vec<RunRecord> = results.iter().map(|r| r.0.clone()).collect();
    let frac = fractions(spec, &records);
    let n2 = spec.axis2.values.len();
    let mut grid = format!("{},{},trials,successes,fraction\n", name(spec.axis1.name), name(spec.axis2.name));
    for (c, f) in frac.iter().enumerate() {
        let (a, b) = (spec.axis1.values[c / n2], spec.axis2.values[c % n2]);
        let wins = records.iter().filter(|r| r.cell == c && r.recovered).count();
        writeln!(grid, "{a:?},{b:?},{},{wins},{f:?}", spec.trials)?;
    }
    fs::write(dir.join("grid.csv"), grid)?;
    fs::write(dir.join("heatmap.pgm"), heatmap(spec.axis1.values.len(), n2, &frac))?;
    let mut runs = String::new();
    for r in &records {
        runs.push_str(&serde_json::to_string(r)?);
        runs.push('\n');
    }
    fs::write(dir.join("runs.jsonl"), runs)?;
    let mut timings = String::from("cell,trial,wall_ms\n");
    for (r, ms) in results {
        writeln!(timings, "{},{},{ms:.3}", r.cell, r.trial)?;
    }
    fs::write(dir.join("timings.csv"), timings)?;
    write_json(&dir.join("spec.json"), spec)
}

pub fn run(a: SweepArgs) -> Result<Status> {
    let mut spec: SweepSpec = read_json(&a.spec)?;
    spec.trials = a.trials.unwrap_or(spec.trials);
    spec.seed = a.seed.unwrap_or(spec.seed);
    let results = run_grid(&spec)?;
    write_outputs(&a.out, &spec, &results)?;
    Ok(Status::Ok)
}
