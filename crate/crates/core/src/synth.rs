//! Planted instances under the stochastic ball model, with far, margin and uniform noise.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Clustering, Label, PointSet};
use crate::seed::{derive_seed, rng};

const PROPOSAL_BUDGET: usize = 100_000;
const GROWTH_INTERVAL: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallModelConfig {
    pub k: usize,
    pub d: usize,
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
}

impl BallModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("k, d and n must be >= 1".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub m_far: usize,
    pub far_factor: f64,
    pub m_near: usize,
    pub margin_alpha: f64,
    pub m_uniform: usize,
    pub box_scale: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            m_far: 0,
            far_factor: 2.0,
            m_near: 0,
            margin_alpha: 0.0,
            m_uniform: 0,
            box_scale: 1.5,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin_alpha >= 0.0 && self.margin_alpha.is_finite()) {
            return Err(Error::InvalidParameter("margin_alpha must be >= 0".into()));
        }
        if !(self.far_factor >= 0.0 && self.far_factor.is_finite()) {
            return Err(Error::InvalidParameter("far_factor must be >= 0".into()));
        }
        if !(self.box_scale > 0.0 && self.box_scale.is_finite()) {
            return Err(Error::InvalidParameter("box_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// Planted structure. Indices refer to rows of the instance's point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub centers: Vec<Vec<f64>>,
    pub ball_members: Vec<Vec<usize>>,
    pub near_noise: Vec<usize>,
    pub far_noise: Vec<usize>,
    pub delta: f64,
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn n_total(&self) -> usize {
        self.ball_members.iter().map(Vec::len).sum::<usize>() + self.near_noise.len() + self.far_noise.len()
    }

    pub fn structured(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.ball_members.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }

    /// Balls as clusters, near noise joined to its nearest center, far noise as noise.
    pub fn planted_clustering(&self, points: &PointSet) -> Result<Clustering> {
        let mut labels = vec![Label::Noise; self.n_total()];
        for (c, members) in self.ball_members.iter().enumerate() {
            for &i in members {
                labels[i] = Label::Cluster(c);
            }
        }
        for &i in &self.near_noise {
            labels[i] = Label::Cluster(self.nearest_center(&points.point(i)));
        }
        Clustering::new(labels, self.k())
    }

    /// The balls alone, over the structured indices in increasing order.
    pub fn clean_clustering(&self) -> Result<Clustering> {
        let idx = self.structured();
        let mut ball_of = vec![0; self.n_total()];
        for (c, members) in self.ball_members.iter().enumerate() {
            for &i in members {
                ball_of[i] = c;
            }
        }
        Clustering::new(idx.iter().map(|&i| Label::Cluster(ball_of[i])).collect(), self.k())
    }

    fn nearest_center(&self, p: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (c, mu) in self.centers.iter().enumerate() {
            let d = sq_dist(p, mu);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub n_min: usize,
    pub rho: f64,
    pub theta: f64,
    pub sigma_max_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub points: PointSet,
    pub truth: GroundTruth,
}

/// `k` centers with pairwise distance at least `delta`.
///
/// Proposals are uniform in a ball of radius `(delta / 2) k^{1/d}`, which grows by 10% after
/// every 1000 consecutive rejections. The accepted configuration is then rescaled so that its
/// minimum separation is exactly `delta`.
pub fn place_centers(k: usize, d: usize, delta: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 || d == 0 || !(delta > 0.0) {
        return Err(Error::InvalidParameter("need k >= 1, d >= 1, delta > 0".into()));
    }
    if k == 1 {
        return Ok(vec![vec![0.0; d]]);
    }
    let mut rng = rng(seed);
    let mut radius = 0.5 * delta * (k as f64).powf(1.0 / d as f64);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut streak = 0;
    for _ in 0..PROPOSAL_BUDGET {
        let p = ball_point(&mut rng, d, radius);
        if centers.iter().all(|c| sq_dist(c, &p) >= delta * delta) {
            centers.push(p);
            streak = 0;
            if centers.len() == k {
                return Ok(rescale_to_separation(centers, delta));
            }
        } else {
            streak += 1;
            if streak % GROWTH_INTERVAL == 0 {
                radius *= 1.1;
            }
        }
    }
    Err(Error::PackingInfeasible { proposals: PROPOSAL_BUDGET })
}

fn rescale_to_separation(mut centers: Vec<Vec<f64>>, delta: f64) -> Vec<Vec<f64>> {
    let mut s = delta / min_separation(&centers);
    loop {
        let scaled: Vec<Vec<f64>> = centers.iter().map(|c| c.iter().map(|v| v * s).collect()).collect();
        if min_separation(&scaled) >= delta {
            centers = scaled;
            break;
        }
        s *= 1.0 + 1e-12;
    }
    centers
}

fn min_separation(centers: &[Vec<f64>]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            m = m.min(sq_dist(&centers[i], &centers[j]).sqrt());
        }
    }
    m
}

/// `n` i.i.d. points uniform in the unit ball around `center`.
pub fn sample_unit_ball(center: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let mut p = ball_point(&mut rng, center.len(), 1.0);
            p.iter_mut().zip(center).for_each(|(v, c)| *v += c);
            p
        })
        .collect()
}

fn ball_point(rng: &mut impl Rng, d: usize, radius: f64) -> Vec<f64> {
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    sphere_point(rng, d).into_iter().map(|v| v * r).collect()
}

fn sphere_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Points at distance at least `far_factor * delta` from every row of `structured`.
///
/// Proposals lie in the shell `[f delta + 1, f delta + 3]` around the centroid of the centers;
/// both radii grow by one after every 1000 consecutive rejections.
pub fn sample_far_noise(
    truth: &GroundTruth,
    structured: &[Vec<f64>],
    m_far: usize,
    far_factor: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let d = truth.centers.first().map_or(0, Vec::len);
    if m_far == 0 {
        return Ok(Vec::new());
    }
    let centroid = mean(&truth.centers);
    let min_dist = far_factor * truth.delta;
    let mut inner = min_dist + 1.0;
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(m_far);
    let mut streak = 0;
    for _ in 0..PROPOSAL_BUDGET {
        let u: f64 = rng.random();
        let r = inner + 2.0 * u;
        let dir = sphere_point(&mut rng, d);
        let p: Vec<f64> = dir.iter().zip(&centroid).map(|(v, c)| c + r * v).collect();
        if structured.iter().all(|x| sq_dist(x, &p) >= min_dist * min_dist) {
            out.push(p);
            streak = 0;
            if out.len() == m_far {
                return Ok(out);
            }
        } else {
            streak += 1;
            if streak % GROWTH_INTERVAL == 0 {
                inner += 1.0;
            }
        }
    }
    Err(Error::RejectionExhausted { what: "far noise", proposals: PROPOSAL_BUDGET })
}

/// Points in the centers' bounding box (padded by the ball radius) whose distances to any two
/// centers differ by at least `margin_alpha`.
pub fn sample_margin_noise(
    truth: &GroundTruth,
    m_near: usize,
    margin_alpha: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if m_near == 0 {
        return Ok(Vec::new());
    }
    let (lo, hi) = bounding_box(&truth.centers, 1.0);
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(m_near);
    for _ in 0..PROPOSAL_BUDGET {
        let p: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..=*b)).collect();
        if margin_gap(&truth.centers, &p) >= margin_alpha {
            out.push(p);
            if out.len() == m_near {
                return Ok(out);
            }
        }
    }
    Err(Error::RejectionExhausted { what: "margin noise", proposals: PROPOSAL_BUDGET })
}

/// Smallest gap `| |p - mu_i| - |p - mu_j| |` over center pairs; infinite for one center.
pub fn margin_gap(centers: &[Vec<f64>], p: &[f64]) -> f64 {
    let dists: Vec<f64> = centers.iter().map(|c| sq_dist(c, p).sqrt()).collect();
    let mut gap = f64::INFINITY;
    for i in 0..dists.len() {
        for j in i + 1..dists.len() {
            gap = gap.min((dists[i] - dists[j]).abs());
        }
    }
    gap
}

/// Uniform points in the box `centroid ± box_scale * (half-extent + 1)` of the centers.
pub fn sample_uniform_noise(
    truth: &GroundTruth,
    m_uniform: usize,
    box_scale: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    let (lo, hi) = uniform_box(truth, box_scale);
    let mut rng = rng(seed);
    (0..m_uniform).map(|_| lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..=*b)).collect()).collect()
}

/// Lower and upper corners of the uniform-noise box.
pub fn uniform_box(truth: &GroundTruth, box_scale: f64) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = bounding_box(&truth.centers, 1.0);
    lo.iter()
        .zip(&hi)
        .map(|(a, b)| {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            (mid - box_scale * half, mid + box_scale * half)
        })
        .unzip()
}

fn bounding_box(centers: &[Vec<f64>], pad: f64) -> (Vec<f64>, Vec<f64>) {
    let d = centers[0].len();
    let lo = (0..d).map(|j| centers.iter().map(|c| c[j]).fold(f64::INFINITY, f64::min) - pad).collect();
    let hi = (0..d).map(|j| centers.iter().map(|c| c[j]).fold(f64::NEG_INFINITY, f64::max) + pad).collect();
    (lo, hi)
}

/// Full instance: balls first (ball by ball), then far, margin and uniform noise.
///
/// Uniform points at distance at least `far_factor * delta` from every structured point are
/// recorded as far noise, the rest as near noise.
pub fn generate(ball: &BallModelConfig, noise: &NoiseConfig) -> Result<Instance> {
    ball.validate()?;
    noise.validate()?;
    let centers = place_centers(ball.k, ball.d, ball.delta, derive_seed(ball.seed, &[0]))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ball_members = Vec::with_capacity(ball.k);
    for (c, mu) in centers.iter().enumerate() {
        let start = rows.len();
        rows.extend(sample_unit_ball(mu, ball.n, derive_seed(ball.seed, &[1, c as u64])));
        ball_members.push((start..rows.len()).collect());
    }
    let mut truth = GroundTruth {
        centers,
        ball_members,
        near_noise: Vec::new(),
        far_noise: Vec::new(),
        delta: ball.delta,
    };
    let structured = rows.clone();
    let far =
        sample_far_noise(&truth, &structured, noise.m_far, noise.far_factor, derive_seed(noise.seed, &[2]))?;
    truth.far_noise.extend(rows.len()..rows.len() + far.len());
    rows.extend(far);
    let near = sample_margin_noise(&truth, noise.m_near, noise.margin_alpha, derive_seed(noise.seed, &[3]))?;
    truth.near_noise.extend(rows.len()..rows.len() + near.len());
    rows.extend(near);
    let min_far = noise.far_factor * ball.delta;
    for p in sample_uniform_noise(&truth, noise.m_uniform, noise.box_scale, derive_seed(noise.seed, &[4])) {
        let is_far = structured.iter().all(|x| sq_dist(x, &p) >= min_far * min_far);
        if is_far { &mut truth.far_noise } else { &mut truth.near_noise }.push(rows.len());
        rows.push(p);
    }
    Ok(Instance { points: PointSet::from_rows(&rows)?, truth })
}

/// Failed checks of an instance against its own construction constraints; empty when clean.
/// Only the first `noise.m_near` near-noise points (the margin-sampled ones) are checked
/// against the margin; near noise from the uniform box is unconstrained.
pub fn audit(instance: &Instance, noise: &NoiseConfig) -> Vec<String> {
    let (far_factor, margin_alpha) = (noise.far_factor, noise.margin_alpha);
    let truth = &instance.truth;
    let pts = &instance.points;
    let mut failures = Vec::new();
    let mut seen = vec![0u8; pts.n_points()];
    for i in truth.ball_members.iter().flatten().chain(&truth.near_noise).chain(&truth.far_noise) {
        match seen.get_mut(*i) {
            Some(s) => *s += 1,
            None => failures.push(format!("index {i} out of range")),
        }
    }
    if seen.iter().any(|&s| s != 1) || truth.n_total() != pts.n_points() {
        failures.push("index sets do not partition the points".into());
    }
    for (c, members) in truth.ball_members.iter().enumerate() {
        for &i in members {
            if sq_dist(&pts.point(i), &truth.centers[c]) > 1.0 + 1e-12 {
                failures.push(format!("point {i} outside ball {}", c + 1));
            }
        }
    }
    if truth.k() >= 2 && min_separation(&truth.centers) < truth.delta {
        failures.push("center separation below delta".into());
    }
    let structured: Vec<Vec<f64>> = truth.structured().iter().map(|&i| pts.point(i)).collect();
    let min_far = far_factor * truth.delta;
    for &i in &truth.far_noise {
        let p = pts.point(i);
        if structured.iter().any(|x| sq_dist(x, &p) < min_far * min_far) {
            failures.push(format!("far noise {i} closer than {min_far}"));
        }
    }
    for &i in truth.near_noise.iter().take(noise.m_near) {
        let p = pts.point(i);
        if margin_alpha > 0.0 && margin_gap(&truth.centers, &p) < margin_alpha {
            failures.push(format!("near noise {i} violates the margin"));
        }
    }
    failures
}

/// Ball-size, balance, mean squared radius and top squared singular value of the
/// center-subtracted structured points.
pub fn instance_stats(truth: &GroundTruth, points: &PointSet) -> Result<InstanceStats> {
    let k = truth.k();
    if k == 0 || truth.ball_members.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter("every ball needs at least one point".into()));
    }
    let n_min = truth.ball_members.iter().map(Vec::len).min().expect("k >= 1");
    let total: usize = truth.ball_members.iter().map(Vec::len).sum();
    let d = points.dim();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut sq_sum = 0.0;
    for (c, members) in truth.ball_members.iter().enumerate() {
        for &i in members {
            if i >= points.n_points() {
                return Err(Error::IndexOutOfRange { index: i, len: points.n_points() });
            }
            let v: Vec<f64> = points.point(i).iter().zip(&truth.centers[c]).map(|(x, m)| x - m).collect();
            sq_sum += v.iter().map(|a| a * a).sum::<f64>();
            for a in 0..d {
                for b in 0..d {
                    gram[(a, b)] += v[a] * v[b];
                }
            }
        }
    }
    let sigma_max_sq = SymmetricEigen::new(gram).eigenvalues.max().max(0.0);
    Ok(InstanceStats {
        n_min,
        rho: total as f64 / (n_min * k) as f64,
        theta: sq_sum / total as f64,
        sigma_max_sq,
    })
}

fn mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
