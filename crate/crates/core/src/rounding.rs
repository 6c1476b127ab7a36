//! Rounding a relaxed solution to an explicit clustering, and noise reassignment.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baseline::{lloyd, LloydConfig};
use crate::error::{Error, Result};
use crate::model::{Clustering, Label, PointSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingConfig {
    /// Points with `y_i > threshold` become noise.
    pub threshold: f64,
    /// Lloyd restarts when clustering the estimated centers.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        Self { threshold: 0.5, restarts: 10, seed: 0 }
    }
}

impl RoundingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Thresholds `y` to find the noise cluster, then clusters the rows of `Z X` restricted to the
/// remaining points into `k` groups. A missing `y` means no noise.
pub fn round_solution(
    points: &PointSet,
    z: &DMatrix<f64>,
    y: Option<&DVector<f64>>,
    k: usize,
    config: &RoundingConfig,
) -> Result<Clustering> {
    config.validate()?;
    let n = points.n_points();
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::SizeMismatch { expected: n, got: z.nrows().max(z.ncols()) });
    }
    if let Some(y) = y {
        if y.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: y.len() });
        }
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let kept: Vec<usize> = (0..n).filter(|&i| y.is_none_or(|y| y[i] <= config.threshold)).collect();
    if kept.is_empty() {
        return Err(Error::EmptyStructuredSet);
    }
    if k > kept.len() {
        return Err(Error::TooFewPoints { needed: k, got: kept.len() });
    }
    let sub_z = z.select_rows(&kept).select_columns(&kept);
    let sub_x = points.matrix().select_rows(&kept);
    let centers = PointSet::new(sub_z * sub_x)?;
    let run =
        lloyd(&centers, &LloydConfig { restarts: config.restarts, ..LloydConfig::new(k, config.seed) })?;
    let mut labels = vec![Label::Noise; n];
    for (pos, &i) in kept.iter().enumerate() {
        labels[i] = run.clustering.label(pos);
    }
    Clustering::new(labels, k)
}

/// Moves every noise point to the structured cluster with the nearest centroid.
pub fn assign_noise_to_clusters(points: &PointSet, clustering: &Clustering) -> Result<Clustering> {
    if clustering.len() != points.n_points() {
        return Err(Error::SizeMismatch { expected: points.n_points(), got: clustering.len() });
    }
    let centroids: Vec<(usize, DVector<f64>)> = clustering
        .clusters()
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(c, m)| Ok((c, DVector::from_vec(points.centroid(m)?))))
        .collect::<Result<_>>()?;
    if centroids.is_empty() {
        return Err(Error::EmptyStructuredSet);
    }
    let labels = clustering
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if !l.is_noise() {
                return l;
            }
            let x = points.matrix().row(i).transpose();
            let mut best = (f64::INFINITY, 0);
            for (c, mu) in &centroids {
                let dist = (&x - mu).norm_squared();
                if dist < best.0 {
                    best = (dist, *c);
                }
            }
            Label::Cluster(best.1)
        })
        .collect();
    Clustering::new(labels, clustering.k())
}

/// Relabels the structured clusters of `candidate` to agree with `reference` as far as possible,
/// pairing labels greedily by largest overlap. Noise stays noise.
pub fn match_labels(candidate: &Clustering, reference: &Clustering) -> Result<Clustering> {
    if candidate.len() != reference.len() {
        return Err(Error::SizeMismatch { expected: reference.len(), got: candidate.len() });
    }
    let (kc, kr) = (candidate.k(), reference.k());
    let mut overlap = vec![vec![0usize; kr]; kc];
    for (a, b) in candidate.labels().iter().zip(reference.labels()) {
        if let (Some(a), Some(b)) = (a.cluster(), b.cluster()) {
            overlap[a][b] += 1;
        }
    }
    let mut pairs: Vec<(usize, usize, usize)> =
        (0..kc).flat_map(|a| (0..kr).map(move |b| (a, b))).map(|(a, b)| (overlap[a][b], a, b)).collect();
    pairs.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let k = kc.max(kr);
    let mut map = vec![None; kc];
    let mut used = vec![false; k];
    for (_, a, b) in pairs {
        if map[a].is_none() && !used[b] {
            map[a] = Some(b);
            used[b] = true;
        }
    }
    for slot in map.iter_mut().filter(|m| m.is_none()) {
        let free = used.iter().position(|u| !u).expect("k >= kc leaves a free label");
        used[free] = true;
        *slot = Some(free);
    }
    let labels = candidate
        .labels()
        .iter()
        .map(|l| match l.cluster() {
            Some(c) => Label::Cluster(map[c].expect("every label mapped")),
            None => Label::Noise,
        })
        .collect();
    Clustering::new(labels, k)
}
