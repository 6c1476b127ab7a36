//! Reduction from MAX-CLIQUE to regularised 1-means, with exhaustive oracles.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{squared_distance_matrix, PointSet};
use crate::relax::symmetric_eigen;

pub const BRUTE_FORCE_LIMIT: usize = 20;
const AUDIT_TOL: f64 = 1e-8;
const COST_TOL: f64 = 1e-9;

/// Simple undirected graph on vertices `0..n_vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n_vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {}", u + 1)));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::IndexOutOfRange { index: u.max(v), len: n_vertices });
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self { n_vertices, edges: set })
    }

    /// Graph whose edges are the set bits of `mask` over pairs `(i, j)`, `i < j`, in
    /// lexicographic order.
    pub fn from_mask(n_vertices: usize, mask: u64) -> Self {
        let mut edges = BTreeSet::new();
        let mut bit = 0;
        for i in 0..n_vertices {
            for j in i + 1..n_vertices {
                if mask >> bit & 1 == 1 {
                    edges.insert((i, j));
                }
                bit += 1;
            }
        }
        Self { n_vertices, edges }
    }

    /// Parses `n m` followed by `m` lines `u v` with 1-indexed vertices.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Format("empty edge list".into()))?;
        let nums = parse_pair(header)?;
        let (n, m) = (nums.0, nums.1);
        let mut edges = Vec::with_capacity(m);
        for line in lines.by_ref().take(m) {
            let (u, v) = parse_pair(line)?;
            if u == 0 || v == 0 {
                return Err(Error::Format(format!("vertices are 1-indexed: {line:?}")));
            }
            edges.push((u - 1, v - 1));
        }
        if edges.len() != m {
            return Err(Error::Format(format!("expected {m} edges, found {}", edges.len())));
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing lines after the edge list".into()));
        }
        Self::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n_vertices, self.edges.len());
        for (u, v) in &self.edges {
            out.push_str(&format!("{} {}\n", u + 1, v + 1));
        }
        out
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Size of the largest clique, by enumerating vertex subsets.
    pub fn clique_number(&self) -> Result<usize> {
        let n = self.n_vertices;
        if n > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
        }
        let adj: Vec<u32> =
            (0..n).map(|u| (0..n).filter(|&v| self.has_edge(u, v)).fold(0u32, |m, v| m | 1 << v)).collect();
        let mut best = 0;
        for mask in 0u32..1 << n {
            let size = mask.count_ones() as usize;
            if size <= best {
                continue;
            }
            let clique = (0..n).filter(|&u| mask >> u & 1 == 1).all(|u| mask & !(1 << u) & !adj[u] == 0);
            if clique {
                best = size;
            }
        }
        Ok(best)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Format(format!("expected two integers: {line:?}")));
    }
    let p = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(format!("{s:?}: {e}")));
    Ok((p(parts[0])?, p(parts[1])?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedInstance {
    pub points: PointSet,
    /// `m / 2 + 1 / (4 n^3)` with `m = 1` the smallest squared distance.
    pub lambda0: f64,
    pub delta_param: f64,
}

/// Embeds squared distances `1` on edges and `1 + delta` on non-edges in `R^n`.
/// `delta_param = None` uses `1 / (2n)`.
pub fn build_instance(graph: &Graph, delta_param: Option<f64>) -> Result<ReducedInstance> {
    let n = graph.n_vertices();
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let nf = n as f64;
    let delta = delta_param.unwrap_or(1.0 / (2.0 * nf));
    if !(delta > 0.0 && nf * delta < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < n * delta < 1, got delta = {delta}")));
    }
    let target = DMatrix::from_fn(n, n, |i, j| match (i == j, graph.has_edge(i, j)) {
        (true, _) => 0.0,
        (false, true) => 1.0,
        (false, false) => 1.0 + delta,
    });
    let centering = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / nf);
    let gram = &centering * &target * &centering * -0.5;
    let eig = symmetric_eigen(gram)?;
    let mut coords = eig.eigenvectors.clone();
    for (c, &l) in eig.eigenvalues.iter().enumerate() {
        coords.column_mut(c).scale_mut(l.max(0.0).sqrt());
    }
    let points = PointSet::new(coords)?;
    let realised = squared_distance_matrix(&points);
    let err = (realised.matrix() - &target).amax();
    if !(err <= AUDIT_TOL) {
        return Err(Error::EmbeddingAudit(err));
    }
    Ok(ReducedInstance { points, lambda0: 0.5 + 1.0 / (4.0 * nf.powi(3)), delta_param: delta })
}

/// Minimum of `SSE(S) + lambda (N - |S|)` over nonempty subsets `S`. Ties favour larger
/// subsets, then the lexicographically smallest index list.
pub fn brute_force_reg_1means(points: &PointSet, lambda: f64) -> Result<(f64, Vec<usize>)> {
    let n = points.n_points();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let d = squared_distance_matrix(points);
    // pair[mask] = sum of squared distances over pairs inside mask.
    let mut pair = vec![0.0f64; 1 << n];
    let mut best: Option<(f64, usize)> = None;
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut add = 0.0;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            add += d.get(low, j);
            bits &= bits - 1;
        }
        pair[mask] = pair[rest] + add;
        let size = mask.count_ones();
        let cost = pair[mask] / size as f64 + lambda * (n as u32 - size) as f64;
        let better = match best {
            None => true,
            Some((bc, bm)) => {
                let tol = COST_TOL * bc.abs().max(1.0);
                let bsize = bm.count_ones();
                if cost < bc - tol {
                    true
                } else if cost <= bc + tol {
                    // Equal sizes: the list holding the lowest differing index is smaller.
                    size > bsize || (size == bsize && mask & (mask ^ bm) & (mask ^ bm).wrapping_neg() != 0)
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((cost, mask));
        }
    }
    let (cost, mask) = best.expect("n >= 1 gives a nonempty subset");
    Ok((cost, (0..n).filter(|&i| mask >> i & 1 == 1).collect()))
}

/// Cost of a `q`-clique in the reduced instance: `(q - 1) / 2 + lambda0 (n - q)`.
pub fn clique_threshold(n: usize, q: usize, lambda0: f64) -> f64 {
    (q as f64 - 1.0) / 2.0 + lambda0 * (n as f64 - q as f64)
}

/// Whether `graph` has a clique on `q` vertices, decided through the regularised 1-means optimum.
pub fn clique_decision(graph: &Graph, q: usize) -> Result<bool> {
    let n = graph.n_vertices();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    if q == 0 {
        return Ok(true);
    }
    if q > n {
        return Ok(false);
    }
    let inst = build_instance(graph, None)?;
    let (cost, _) = brute_force_reg_1means(&inst.points, inst.lambda0)?;
    Ok(cost <= clique_threshold(n, q, inst.lambda0) + COST_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Graph {
        Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).unwrap()
    }

    #[test]
    fn embedding_distances() {
        let k3 = build_instance(&complete(3), None).unwrap();
        let d = squared_distance_matrix(&k3.points);
        assert!((d.get(0, 1) - 1.0).abs() < 1e-9 && (d.get(1, 2) - 1.0).abs() < 1e-9);
        let empty = build_instance(&Graph::new(3, []).unwrap(), None).unwrap();
        assert!((squared_distance_matrix(&empty.points).get(0, 2) - (1.0 + 1.0 / 6.0)).abs() < 1e-9);
        assert!(build_instance(&complete(3), Some(0.5)).is_err());
    }

    #[test]
    fn brute_force_regimes() {
        let p = PointSet::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let (c, s) = brute_force_reg_1means(&p, 0.4).unwrap();
        assert!((c - 0.8).abs() < 1e-12);
        assert_eq!(s.len(), 1);
        let (c, s) = brute_force_reg_1means(&p, 1e6).unwrap();
        assert_eq!(s, vec![0, 1, 2]);
        assert!((c - 14.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn clique_cost_constant() {
        let inst = build_instance(&complete(3), None).unwrap();
        let (c, s) = brute_force_reg_1means(&inst.points, inst.lambda0).unwrap();
        assert_eq!(s, vec![0, 1, 2]);
        assert!((c - clique_threshold(3, 3, inst.lambda0)).abs() < 1e-9);
    }

    #[test]
    fn decisions() {
        assert!(clique_decision(&complete(4), 4).unwrap());
        assert!(!clique_decision(&Graph::new(4, []).unwrap(), 2).unwrap());
        let path = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(clique_decision(&path, 2).unwrap());
        assert!(!clique_decision(&path, 3).unwrap());
        assert_eq!(path.clique_number().unwrap(), 2);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::parse_edge_list("4 3\n1 2\n2 3\n3 4\n").unwrap();
        assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
        assert!(Graph::parse_edge_list("3 1\n1 1\n").is_err());
        assert!(Graph::parse_edge_list("3 2\n1 2\n").is_err());
        assert!(Graph::parse_edge_list("3 1\n0 2\n").is_err());
        assert_eq!(Graph::from_mask(3, 0b101).edges().len(), 2);
    }
}
