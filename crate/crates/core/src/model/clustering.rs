use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Cluster membership of a single point.
///
/// Structured clusters are indexed from zero in memory and written as `1..=k` in files;
/// the noise cluster is a separate sentinel so `k` always counts structured clusters only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Cluster(usize),
    Noise,
}

impl Label {
    pub fn is_noise(self) -> bool {
        matches!(self, Label::Noise)
    }

    pub fn cluster(self) -> Option<usize> {
        match self {
            Label::Cluster(c) => Some(c),
            Label::Noise => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Cluster(c) => write!(f, "{}", c + 1),
            Label::Noise => f.write_str("noise"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("noise") {
            return Ok(Label::Noise);
        }
        match s.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(Label::Cluster(v - 1)),
            _ => Err(Error::Format(format!("bad label {s:?}: expected 1..k or \"noise\""))),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::Cluster(c) => serializer.serialize_u64(*c as u64 + 1),
            Label::Noise => serializer.serialize_str("noise"),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(0) => Err(serde::de::Error::custom("cluster labels start at 1")),
            Raw::Int(v) => Ok(Label::Cluster(v as usize - 1)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Assignment of every point to one of `k` structured clusters or to noise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    labels: Vec<Label>,
    k: usize,
}

impl Clustering {
    pub fn new(labels: Vec<Label>, k: usize) -> Result<Self> {
        if let Some(bad) = labels.iter().find_map(|l| l.cluster().filter(|&c| c >= k)) {
            return Err(Error::InvalidClustering(format!("label {} exceeds k = {k}", bad + 1)));
        }
        Ok(Self { labels, k })
    }

    /// Builds a clustering from zero-based cluster ids, with `k` inferred as `max + 1`.
    pub fn from_assignment(assignment: &[usize]) -> Self {
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        Self { labels: assignment.iter().map(|&c| Label::Cluster(c)).collect(), k }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Members of structured cluster `c`, in index order.
    pub fn members(&self, c: usize) -> Vec<usize> {
        self.indices_where(|l| l == Label::Cluster(c))
    }

    pub fn noise(&self) -> Vec<usize> {
        self.indices_where(Label::is_noise)
    }

    pub fn non_noise(&self) -> Vec<usize> {
        self.indices_where(|l| !l.is_noise())
    }

    /// Member lists of all `k` structured clusters (possibly empty).
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, l) in self.labels.iter().enumerate() {
            if let Label::Cluster(c) = l {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn has_noise(&self) -> bool {
        self.labels.iter().any(|l| l.is_noise())
    }

    fn indices_where(&self, pred: impl Fn(Label) -> bool) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| pred(l)).map(|(i, _)| i).collect()
    }

    /// True when points `i` and `j` share a label; noise counts as one cluster.
    pub fn co_clustered(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }
}

/// Δ(a, b): fraction of unordered pairs co-clustered in exactly one of the two clusterings.
///
/// The noise cluster participates as an ordinary cluster. Returns 0 for fewer than two points.
pub fn clustering_distance(a: &Clustering, b: &Clustering) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { expected: a.len(), got: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Ok(0.0);
    }
    let (in_a, in_b, both) = pair_counts(a, b);
    let differing = in_a + in_b - 2 * both;
    let total = (n as u64) * (n as u64 - 1) / 2;
    Ok(differing as f64 / total as f64)
}

/// Pairs co-clustered in `a`, in `b`, and in both, from contingency counts.
fn pair_counts(a: &Clustering, b: &Clustering) -> (u64, u64, u64) {
    let pairs = |m: u64| m * m.saturating_sub(1) / 2;
    let mut count_a = HashMap::<Label, u64>::new();
    let mut count_b = HashMap::<Label, u64>::new();
    let mut joint = HashMap::<(Label, Label), u64>::new();
    for (&la, &lb) in a.labels().iter().zip(b.labels()) {
        *count_a.entry(la).or_default() += 1;
        *count_b.entry(lb).or_default() += 1;
        *joint.entry((la, lb)).or_default() += 1;
    }
    let sum = |it: &mut dyn Iterator<Item = &u64>| it.map(|&m| pairs(m)).sum::<u64>();
    (sum(&mut count_a.values()), sum(&mut count_b.values()), sum(&mut joint.values()))
}

/// Restriction of a clustering to a subset of its points, labels preserved.
pub fn restrict(c: &Clustering, subset: &[usize]) -> Result<Clustering> {
    let mut seen = vec![false; c.len()];
    let mut labels = Vec::with_capacity(subset.len());
    for &i in subset {
        if i >= c.len() {
            return Err(Error::IndexOutOfRange { index: i, len: c.len() });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidClustering(format!("index {i} repeated in subset")));
        }
        labels.push(c.label(i));
    }
    Clustering::new(labels, c.k())
}

/// Δ between a full run restricted to the clean points and the run on the clean points alone.
pub fn gamma_robustness(
    full_result: &Clustering,
    clean_result: &Clustering,
    clean_indices: &[usize],
) -> Result<f64> {
    if clean_result.len() != clean_indices.len() {
        return Err(Error::SizeMismatch { expected: clean_indices.len(), got: clean_result.len() });
    }
    clustering_distance(&restrict(full_result, clean_indices)?, clean_result)
}

/// Pairwise precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PairMetrics {
    /// Combines precision and recall; `f1` is zero when both are zero.
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { precision, recall, f1 }
    }
}

/// Pair-counting precision and recall of `candidate` against `reference`.
///
/// Both clusterings must be free of noise labels. When the candidate co-clusters no pair,
/// precision is 1 (nothing it asserted was wrong); symmetrically recall is 1 when the
/// reference has no co-clustered pair.
pub fn pair_metrics(candidate: &Clustering, reference: &Clustering) -> Result<PairMetrics> {
    if candidate.len() != reference.len() {
        return Err(Error::SizeMismatch { expected: reference.len(), got: candidate.len() });
    }
    if candidate.has_noise() || reference.has_noise() {
        return Err(Error::NoiseLabelsPresent);
    }
    let (cand, refr, both) = pair_counts(candidate, reference);
    let precision = if cand == 0 { 1.0 } else { both as f64 / cand as f64 };
    let recall = if refr == 0 { 1.0 } else { both as f64 / refr as f64 };
    Ok(PairMetrics::from_pr(precision, recall))
}
